#include "medmenu/formula.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <unordered_map>

namespace medmenu {

std::string Atom::label() const {
  if (!is_spline()) return var;
  return "ns(" + var + "," + std::to_string(spline_df) + ")";
}

std::string Term::label() const {
  std::string out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) out += ':';
    out += atoms[i].label();
  }
  return out;
}

bool Term::involves(std::string_view var) const {
  return std::any_of(atoms.begin(), atoms.end(), [&](const Atom& a) { return a.var == var; });
}

std::string FormulaSpec::to_string() const {
  std::string out = response + " ~ ";
  if (terms.empty()) return out + "1";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += " + ";
    out += terms[i].label();
  }
  return out;
}

std::vector<std::string> FormulaSpec::variables() const {
  std::vector<std::string> out;
  for (const auto& t : terms) {
    for (const auto& a : t.atoms) {
      if (std::find(out.begin(), out.end(), a.var) == out.end()) out.push_back(a.var);
    }
  }
  return out;
}

bool FormulaSpec::references(std::string_view var) const {
  return std::any_of(terms.begin(), terms.end(), [&](const Term& t) { return t.involves(var); });
}

namespace {

using TermSet = std::vector<Term>;

std::string canonical_key(const Term& t) {
  std::vector<std::string> labels;
  for (const auto& a : t.atoms) labels.push_back(a.label());
  std::sort(labels.begin(), labels.end());
  std::string key;
  for (const auto& l : labels) key += l + "\x1f";
  return key;
}

void append_unique(TermSet& set, const Term& t) {
  const auto key = canonical_key(t);
  for (const auto& e : set) {
    if (canonical_key(e) == key) return;
  }
  set.push_back(t);
}

Term merge(const Term& a, const Term& b) {
  Term out = a;
  for (const auto& atom : b.atoms) {
    if (std::find(out.atoms.begin(), out.atoms.end(), atom) == out.atoms.end()) out.atoms.push_back(atom);
  }
  return out;
}

TermSet colon(const TermSet& a, const TermSet& b) {
  TermSet out;
  for (const auto& x : a) {
    for (const auto& y : b) append_unique(out, merge(x, y));
  }
  return out;
}

TermSet star(const TermSet& a, const TermSet& b) {
  TermSet out;
  for (const auto& t : a) append_unique(out, t);
  for (const auto& t : b) append_unique(out, t);
  for (const auto& t : colon(a, b)) append_unique(out, t);
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  FormulaSpec parse() {
    FormulaSpec spec;
    skip_ws();
    spec.response = identifier("response variable");
    skip_ws();
    expect('~');
    TermSet rhs = sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    std::stable_sort(rhs.begin(), rhs.end(),
                     [](const Term& x, const Term& y) { return x.atoms.size() < y.atoms.size(); });
    spec.terms = std::move(rhs);
    return spec;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw FormulaError("formula syntax error at position " + std::to_string(pos_) + ": " + msg, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

  std::string identifier(const char* what) {
    skip_ws();
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail(std::string("expected ") + what);
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  TermSet sum() {
    TermSet out;
    for (const auto& t : product()) append_unique(out, t);
    while (peek('+')) {
      ++pos_;
      for (const auto& t : product()) append_unique(out, t);
    }
    return out;
  }

  TermSet product() {
    TermSet out = colon_chain();
    while (peek('*')) {
      ++pos_;
      out = star(out, colon_chain());
    }
    return out;
  }

  TermSet colon_chain() {
    TermSet out = atom();
    while (peek(':')) {
      ++pos_;
      out = colon(out, atom());
    }
    return out;
  }

  TermSet atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of formula");
    if (text_[pos_] == '(') {
      ++pos_;
      TermSet inner = sum();
      expect(')');
      return inner;
    }
    if (text_[pos_] == '1') {
      ++pos_;
      return {};
    }
    const std::size_t start = pos_;
    std::string name = identifier("variable name");
    if (peek('(')) {
      if (name != "ns") {
        pos_ = start;
        fail("unknown function '" + name + "'");
      }
      ++pos_;
      std::string var = identifier("spline variable");
      expect(',');
      skip_ws();
      const std::size_t num_start = pos_;
      while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-' ||
                                     text_[pos_] == '.' || text_[pos_] == '+')) {
        ++pos_;
      }
      const std::string_view num = text_.substr(num_start, pos_ - num_start);
      int df = 0;
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), df);
      if (num.empty() || ec != std::errc() || ptr != num.data() + num.size()) {
        pos_ = num_start;
        fail("spline df must be an integer");
      }
      if (df < 1) {
        pos_ = num_start;
        throw FormulaError("non-positive spline df in ns(" + var + "," + std::string(num) + ")", num_start);
      }
      expect(')');
      return {Term{{Atom{std::move(var), df}}}};
    }
    return {Term{{Atom{std::move(name), 0}}}};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

struct Block {
  Eigen::MatrixXd values;  // rows x columns
  std::vector<std::string> names;
};

Block atom_block(const Atom& atom, const SampleView& view, DesignInfo& info, const DesignInfo* stored) {
  const Column& col = view.frame->column(atom.var);
  const std::size_t n = view.size();
  const auto rows_n = static_cast<Eigen::Index>(n);
  Block b;
  if (atom.is_spline()) {
    if (col.is_categorical()) throw FormulaError("spline variable '" + atom.var + "' must be numeric", 0);
    std::vector<double> x = view.gather(atom.var);
    SplineKnots knots;
    if (stored) {
      auto it = stored->knots.find(atom.label());
      if (it == stored->knots.end()) throw FormulaError("no stored knots for " + atom.label(), 0);
      knots = it->second;
    } else {
      knots = natural_spline_knots(x, atom.spline_df);
    }
    if (static_cast<int>(knots.interior.size()) + 1 != atom.spline_df) {
      throw FormulaError("stored knots do not match " + atom.label(), 0);
    }
    info.knots[atom.label()] = knots;
    b.values = natural_spline_basis(x, knots);
    for (int j = 1; j <= atom.spline_df; ++j) b.names.push_back(atom.label() + std::to_string(j));
    return b;
  }
  if (col.is_categorical()) {
    std::vector<std::string> levels = col.levels;
    std::vector<int> remap(col.levels.size());
    if (stored) {
      auto it = stored->levels.find(atom.var);
      if (it == stored->levels.end()) throw FormulaError("no stored levels for '" + atom.var + "'", 0);
      levels = it->second;
      for (std::size_t l = 0; l < col.levels.size(); ++l) {
        auto pos = std::find(levels.begin(), levels.end(), col.levels[l]);
        remap[l] = pos == levels.end() ? -1 : static_cast<int>(pos - levels.begin());
      }
    } else {
      for (std::size_t l = 0; l < remap.size(); ++l) remap[l] = static_cast<int>(l);
    }
    info.levels[atom.var] = levels;
    const auto width = static_cast<Eigen::Index>(levels.size()) - 1;
    b.values = Eigen::MatrixXd::Zero(rows_n, std::max<Eigen::Index>(width, 0));
    for (std::size_t k = 0; k < n; ++k) {
      const int code = remap[static_cast<std::size_t>(col.values[view.rows[k]])];
      if (code < 0) {
        throw FormulaError("unseen level '" + col.levels[static_cast<std::size_t>(col.values[view.rows[k]])] +
                               "' of '" + atom.var + "' at prediction time",
                           0);
      }
      if (code > 0) b.values(static_cast<Eigen::Index>(k), code - 1) = 1.0;
    }
    for (std::size_t l = 1; l < levels.size(); ++l) b.names.push_back(atom.var + "[" + levels[l] + "]");
    return b;
  }
  b.values.resize(rows_n, 1);
  for (std::size_t k = 0; k < n; ++k) b.values(static_cast<Eigen::Index>(k), 0) = col.values[view.rows[k]];
  b.names.push_back(atom.var);
  return b;
}

DesignMatrix build(const FormulaSpec& spec, const SampleView& view, const DesignInfo* stored) {
  const auto n = static_cast<Eigen::Index>(view.size());
  DesignMatrix dm;
  std::unordered_map<std::string, Block> cache;
  std::vector<Block> term_blocks;
  Eigen::Index width = 1;
  for (const auto& term : spec.terms) {
    Block acc;
    acc.values = Eigen::MatrixXd::Ones(n, 1);
    acc.names = {""};
    for (const auto& atom : term.atoms) {
      const auto key = atom.label();
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, atom_block(atom, view, dm.info, stored)).first;
      const Block& b = it->second;
      Block next;
      next.values.resize(n, acc.values.cols() * b.values.cols());
      Eigen::Index c = 0;
      for (Eigen::Index i = 0; i < acc.values.cols(); ++i) {
        for (Eigen::Index j = 0; j < b.values.cols(); ++j, ++c) {
          next.values.col(c) = acc.values.col(i).cwiseProduct(b.values.col(j));
          const auto& left = acc.names[static_cast<std::size_t>(i)];
          next.names.push_back(left.empty() ? b.names[static_cast<std::size_t>(j)]
                                            : left + ":" + b.names[static_cast<std::size_t>(j)]);
        }
      }
      acc = std::move(next);
    }
    width += acc.values.cols();
    term_blocks.push_back(std::move(acc));
  }
  dm.matrix.resize(n, width);
  dm.matrix.col(0).setOnes();
  dm.column_names.push_back("(Intercept)");
  Eigen::Index c = 1;
  for (auto& b : term_blocks) {
    dm.matrix.middleCols(c, b.values.cols()) = b.values;
    c += b.values.cols();
    for (auto& name : b.names) dm.column_names.push_back(std::move(name));
  }
  dm.info.column_names = dm.column_names;
  return dm;
}

}  // namespace

FormulaSpec parse_formula(std::string_view text) { return Parser(text).parse(); }

FormulaSpec drop_variable(const FormulaSpec& spec, std::string_view var) {
  FormulaSpec out;
  out.response = spec.response;
  for (const auto& t : spec.terms) {
    if (!t.involves(var)) out.terms.push_back(t);
  }
  return out;
}

DesignMatrix build_design(const FormulaSpec& spec, const SampleView& view) { return build(spec, view, nullptr); }

DesignMatrix build_design(const FormulaSpec& spec, const SampleView& view, const DesignInfo& stored) {
  return build(spec, view, &stored);
}

}  // namespace medmenu
