#include "medmenu/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace medmenu {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::covariate: return "covariate";
    case Role::exposure: return "exposure";
    case Role::mediator: return "mediator";
    case Role::outcome: return "outcome";
  }
  return "?";
}

Role parse_role(std::string_view text) {
  if (text == "covariate") return Role::covariate;
  if (text == "exposure") return Role::exposure;
  if (text == "mediator") return Role::mediator;
  if (text == "outcome") return Role::outcome;
  throw DataError("unknown role '" + std::string(text) + "'");
}

std::string_view to_string(Selector selector) {
  switch (selector) {
    case Selector::full: return "full";
    case Selector::treated: return "treated";
    case Selector::control: return "control";
  }
  return "?";
}

bool Column::is_binary() const {
  if (type != ColumnType::numeric) return false;
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

void Frame::add(Column column) {
  if (has(column.name)) throw DataError("duplicate column '" + column.name + "'");
  if (!columns_.empty() && column.values.size() != rows_) {
    throw DataError("column '" + column.name + "' has " + std::to_string(column.values.size()) +
                    " rows, expected " + std::to_string(rows_));
  }
  rows_ = column.values.size();
  columns_.push_back(std::move(column));
}

void Frame::replace(Column column) {
  for (auto& c : columns_) {
    if (c.name == column.name) {
      if (column.values.size() != rows_) throw DataError("replacement column length mismatch");
      c = std::move(column);
      return;
    }
  }
  add(std::move(column));
}

bool Frame::has(std::string_view name) const {
  return std::any_of(columns_.begin(), columns_.end(), [&](const Column& c) { return c.name == name; });
}

const Column& Frame::column(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return c;
  }
  throw DataError("unknown column '" + std::string(name) + "'");
}

Column& Frame::column(std::string_view name) {
  for (auto& c : columns_) {
    if (c.name == name) return c;
  }
  throw DataError("unknown column '" + std::string(name) + "'");
}

Frame Frame::select_rows(std::span<const std::size_t> rows) const {
  Frame out;
  for (const auto& c : columns_) {
    Column copy{c.name, c.type, {}, c.levels};
    copy.values.reserve(rows.size());
    for (std::size_t r : rows) copy.values.push_back(c.values.at(r));
    out.add(std::move(copy));
  }
  return out;
}

Dataset Dataset::create(Frame frame, Roles roles) {
  if (roles.exposure.empty()) throw DataError("dataset needs exactly one exposure column");
  if (roles.outcome.empty()) throw DataError("dataset needs exactly one outcome column");
  if (roles.covariates.empty()) throw DataError("dataset needs at least one covariate");
  if (roles.mediators.empty()) throw DataError("dataset needs at least one mediator");
  if (frame.rows() == 0) throw DataError("empty dataset");

  std::vector<std::string> all = roles.covariates;
  all.insert(all.end(), roles.mediators.begin(), roles.mediators.end());
  all.push_back(roles.exposure);
  all.push_back(roles.outcome);
  for (const auto& name : all) {
    const Column& c = frame.column(name);
    for (double v : c.values) {
      if (!std::isfinite(v)) throw DataError("column '" + name + "' has missing or non-finite values");
    }
    if (std::count(all.begin(), all.end(), name) > 1) {
      throw DataError("column '" + name + "' assigned more than one role");
    }
  }
  const Column& a = frame.column(roles.exposure);
  if (a.is_categorical() || !a.is_binary()) {
    throw DataError("non-binary exposure column '" + roles.exposure + "'");
  }
  if (frame.column(roles.outcome).is_categorical()) {
    throw DataError("outcome column '" + roles.outcome + "' must be numeric or binary");
  }
  for (const auto& m : roles.mediators) {
    if (frame.column(m).is_categorical()) {
      throw DataError("mediator '" + m + "' must be numeric or binary (declare two-level mediators as binary)");
    }
  }

  Dataset ds;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    (a.values[i] == 1.0 ? ds.treated_ : ds.control_).push_back(i);
  }
  if (ds.treated_.empty()) throw DataError("empty treated subsample");
  if (ds.control_.empty()) throw DataError("empty control subsample");
  ds.frame_ = std::make_shared<const Frame>(std::move(frame));
  ds.roles_ = std::move(roles);
  return ds;
}

const std::vector<double>& Dataset::exposure() const { return frame_->column(roles_.exposure).values; }

const std::vector<double>& Dataset::outcome() const { return frame_->column(roles_.outcome).values; }

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_number(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

Ingested ingest_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");
  return ingest_csv(in, schema);
}

Ingested ingest_csv(std::istream& in, const Schema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("data file is empty");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  std::vector<std::size_t> index;
  for (const auto& spec : schema.columns) {
    auto it = std::find(header.begin(), header.end(), spec.name);
    if (it == header.end()) throw DataError("declared column '" + spec.name + "' missing from header");
    index.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  const std::size_t k = schema.columns.size();
  std::vector<std::vector<std::string>> raw(k);
  IngestReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++report.rows_read;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    }
    bool missing = false;
    std::vector<std::string> picked(k);
    for (std::size_t j = 0; j < k; ++j) {
      picked[j] = trim(cells[index[j]]);
      if (std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), picked[j]) !=
          schema.missing_tokens.end()) {
        missing = true;
      }
    }
    if (missing) {
      if (schema.missing == MissingPolicy::error) {
        throw DataError("line " + std::to_string(line_no) + ": missing value");
      }
      ++report.rows_dropped;
      continue;
    }
    for (std::size_t j = 0; j < k; ++j) raw[j].push_back(std::move(picked[j]));
  }

  Frame frame;
  Roles roles;
  for (std::size_t j = 0; j < k; ++j) {
    const ColumnSpec& spec = schema.columns[j];
    const auto& cells = raw[j];
    Column col;
    col.name = spec.name;
    if (spec.type == DeclaredType::categorical ||
        (spec.type == DeclaredType::binary && !spec.levels.empty())) {
      std::vector<std::string> levels = spec.levels;
      const bool declared = !levels.empty();
      col.values.reserve(cells.size());
      for (const auto& cell : cells) {
        auto it = std::find(levels.begin(), levels.end(), cell);
        if (it == levels.end()) {
          if (declared) throw DataError("column '" + spec.name + "': value '" + cell + "' is not a declared level");
          levels.push_back(cell);
          it = levels.end() - 1;
        }
        col.values.push_back(static_cast<double>(it - levels.begin()));
      }
      if (spec.type == DeclaredType::binary) {
        if (levels.size() != 2) throw DataError("binary column '" + spec.name + "' must declare exactly two levels");
        col.type = ColumnType::numeric;
      } else {
        col.type = ColumnType::categorical;
        col.levels = std::move(levels);
      }
    } else {
      col.type = ColumnType::numeric;
      col.values.reserve(cells.size());
      for (std::size_t r = 0; r < cells.size(); ++r) {
        const auto v = parse_number(cells[r]);
        if (!v) {
          throw DataError("column '" + spec.name + "': unparseable numeric cell '" + cells[r] + "' (data row " +
                          std::to_string(r + 1) + ")");
        }
        col.values.push_back(*v);
      }
      const bool must_be_binary = spec.type == DeclaredType::binary || spec.role == Role::exposure;
      if (must_be_binary && !col.is_binary()) {
        if (spec.role == Role::exposure) throw DataError("non-binary exposure column '" + spec.name + "'");
        throw DataError("binary column '" + spec.name + "' has values other than 0/1");
      }
    }
    if (spec.role) {
      switch (*spec.role) {
        case Role::covariate: roles.covariates.push_back(spec.name); break;
        case Role::mediator: roles.mediators.push_back(spec.name); break;
        case Role::exposure:
          if (!roles.exposure.empty()) throw DataError("more than one exposure column declared");
          roles.exposure = spec.name;
          break;
        case Role::outcome:
          if (!roles.outcome.empty()) throw DataError("more than one outcome column declared");
          roles.outcome = spec.name;
          break;
      }
    }
    frame.add(std::move(col));
  }

  Dataset ds = Dataset::create(std::move(frame), std::move(roles));
  report.treated = ds.treated_rows().size();
  report.control = ds.control_rows().size();
  return {std::move(ds), report};
}

std::vector<double> SampleView::gather(std::string_view name) const {
  const Column& c = frame->column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(c.values[r]);
  return out;
}

SampleView SampleView::with_weights(std::vector<double> w) const {
  if (w.size() != rows.size()) throw DataError("weight vector length does not match selected rows");
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("weights must be finite and nonnegative");
  }
  SampleView out = *this;
  out.weights = std::move(w);
  return out;
}

SampleView full_view(const Dataset& ds) { return full_view(ds.frame_ptr()); }

SampleView full_view(std::shared_ptr<const Frame> frame) {
  SampleView v;
  v.rows.resize(frame->rows());
  std::iota(v.rows.begin(), v.rows.end(), std::size_t{0});
  v.frame = std::move(frame);
  v.selector = Selector::full;
  return v;
}

SampleView subsample(const Dataset& ds, Selector which) {
  SampleView v;
  v.frame = ds.frame_ptr();
  v.selector = which;
  switch (which) {
    case Selector::full: return full_view(ds);
    case Selector::treated: v.rows = ds.treated_rows(); break;
    case Selector::control: v.rows = ds.control_rows(); break;
  }
  return v;
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) throw DataError("weighted_mean: length mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += weights[i] * values[i];
    den += weights[i];
  }
  if (!(den > 0.0)) throw DataError("weighted_mean: weights sum to zero");
  return num / den;
}

}  // namespace medmenu
