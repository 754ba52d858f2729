#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "medmenu/data.hpp"
#include "medmenu/spline.hpp"

namespace medmenu {

class FormulaError : public std::runtime_error {
 public:
  FormulaError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// A variable reference inside a term: either the raw variable or a natural
/// cubic spline `ns(var, df)`.
struct Atom {
  std::string var;
  int spline_df = 0;

  bool is_spline() const { return spline_df > 0; }
  std::string label() const;
  bool operator==(const Atom&) const = default;
};

/// Main effect (one atom) or interaction (several atoms).
struct Term {
  std::vector<Atom> atoms;

  std::string label() const;
  bool involves(std::string_view var) const;
  bool is_interaction() const { return atoms.size() > 1; }
};

/// Parsed `response ~ term + term ...`. The intercept is always present.
struct FormulaSpec {
  std::string response;
  std::vector<Term> terms;

  std::string to_string() const;
  std::vector<std::string> variables() const;
  bool references(std::string_view var) const;
};

/// Grammar: `response ~ rhs`, rhs = `1` or `product (+ product)*`,
/// product = `colon (* colon)*`, colon = `atom (: atom)*`,
/// atom = identifier | `ns(identifier, integer)` | `(rhs)`.
/// `a*b` expands to a + b + a:b; `a:b` is the interaction only.
FormulaSpec parse_formula(std::string_view text);

/// Removes every term that involves `var` (analyst-side misspecification).
FormulaSpec drop_variable(const FormulaSpec& spec, std::string_view var);

/// Encoding information needed to rebuild a design on new rows.
struct DesignInfo {
  std::map<std::string, SplineKnots> knots;                 // keyed by atom label
  std::map<std::string, std::vector<std::string>> levels;   // categorical variables
  std::vector<std::string> column_names;
};

struct DesignMatrix {
  Eigen::MatrixXd matrix;
  std::vector<std::string> column_names;
  DesignInfo info;
};

/// Builds the design on the view's rows, computing spline knots from the view.
DesignMatrix build_design(const FormulaSpec& spec, const SampleView& view);

/// Rebuilds with stored knots and level lists (prediction-time path).
DesignMatrix build_design(const FormulaSpec& spec, const SampleView& view, const DesignInfo& stored);

}  // namespace medmenu
