#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace medmenu {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColumnType { numeric, categorical };

enum class Role { covariate, exposure, mediator, outcome };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);

/// A named column. Categorical columns store the level index (0-based, as a
/// double) in `values`; `levels` holds the ordered level labels and the first
/// level is the reference.
struct Column {
  std::string name;
  ColumnType type = ColumnType::numeric;
  std::vector<double> values;
  std::vector<std::string> levels;

  bool is_categorical() const { return type == ColumnType::categorical; }
  bool is_binary() const;
};

/// Ordered collection of equally long named columns.
class Frame {
 public:
  void add(Column column);
  void replace(Column column);

  std::size_t rows() const { return rows_; }
  bool has(std::string_view name) const;
  const Column& column(std::string_view name) const;
  Column& column(std::string_view name);
  const std::vector<Column>& columns() const { return columns_; }

  Frame select_rows(std::span<const std::size_t> rows) const;

 private:
  std::vector<Column> columns_;
  std::size_t rows_ = 0;
};

struct Roles {
  std::vector<std::string> covariates;
  std::string exposure;
  std::vector<std::string> mediators;
  std::string outcome;
};

/// Analysis dataset: a frame plus validated variable roles. Immutable once
/// created.
class Dataset {
 public:
  static Dataset create(Frame frame, Roles roles);

  const Frame& frame() const { return *frame_; }
  const std::shared_ptr<const Frame>& frame_ptr() const { return frame_; }
  const Roles& roles() const { return roles_; }
  std::size_t n() const { return frame_->rows(); }

  const std::vector<double>& exposure() const;
  const std::vector<double>& outcome() const;
  const std::vector<std::size_t>& treated_rows() const { return treated_; }
  const std::vector<std::size_t>& control_rows() const { return control_; }

 private:
  std::shared_ptr<const Frame> frame_;
  Roles roles_;
  std::vector<std::size_t> treated_;
  std::vector<std::size_t> control_;
};

enum class DeclaredType { numeric, categorical, binary };

struct ColumnSpec {
  std::string name;
  std::optional<Role> role;
  DeclaredType type = DeclaredType::numeric;
  /// Declared level order for categorical/binary columns; empty means order of
  /// first appearance.
  std::vector<std::string> levels;
};

enum class MissingPolicy { drop, error };

struct Schema {
  std::vector<ColumnSpec> columns;
  MissingPolicy missing = MissingPolicy::drop;
  std::vector<std::string> missing_tokens{"", "NA", "NaN", "na", "."};
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::size_t treated = 0;
  std::size_t control = 0;
};

struct Ingested {
  Dataset data;
  IngestReport report;
};

Ingested ingest_csv(const std::filesystem::path& path, const Schema& schema);
Ingested ingest_csv(std::istream& in, const Schema& schema);

enum class Selector { full, treated, control };

std::string_view to_string(Selector selector);

/// Rows of a frame, optionally carrying nonnegative per-row weights.
struct SampleView {
  std::shared_ptr<const Frame> frame;
  Selector selector = Selector::full;
  std::vector<std::size_t> rows;
  std::optional<std::vector<double>> weights;

  std::size_t size() const { return rows.size(); }
  double weight(std::size_t k) const { return weights ? (*weights)[k] : 1.0; }
  /// Gathers a column over the selected rows.
  std::vector<double> gather(std::string_view name) const;
  SampleView with_weights(std::vector<double> w) const;
};

SampleView full_view(const Dataset& ds);
SampleView full_view(std::shared_ptr<const Frame> frame);
SampleView subsample(const Dataset& ds, Selector which);

/// Weighted mean over a view, using `values` aligned with the view rows.
double weighted_mean(std::span<const double> values, std::span<const double> weights);

}  // namespace medmenu
