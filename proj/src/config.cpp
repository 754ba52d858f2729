#include "medmenu/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "medmenu/rng.hpp"

namespace medmenu {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& problems) {
  std::string s = "invalid configuration (" + std::to_string(problems.size()) + " problem(s)):";
  for (const auto& p : problems) s += "\n  - " + p;
  return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::estimate: return "estimate";
    case Command::balance: return "balance";
    case Command::simulate: return "simulate";
  }
  return "?";
}

namespace {

class Checker {
 public:
  std::vector<std::string> problems;

  void fail(const std::string& msg) { problems.push_back(msg); }

  void known_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
        fail(where + ": unknown key '" + it.key() + "'");
      }
    }
  }

  std::optional<std::string> str(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    if (!obj[key].is_string()) {
      fail(where + "." + key + " must be a string");
      return std::nullopt;
    }
    return obj[key].get<std::string>();
  }

  std::optional<double> num(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return std::nullopt;
    if (!obj[key].is_number()) {
      fail(where + "." + key + " must be a number");
      return std::nullopt;
    }
    return obj[key].get<double>();
  }

  std::optional<long long> integer(const json& obj, const char* key, const std::string& where, long long min) {
    if (!obj.contains(key)) return std::nullopt;
    if (!obj[key].is_number_integer()) {
      fail(where + "." + key + " must be an integer");
      return std::nullopt;
    }
    const auto v = obj[key].get<long long>();
    if (v < min) {
      fail(where + "." + key + " must be at least " + std::to_string(min));
      return std::nullopt;
    }
    return v;
  }

  std::optional<FormulaSpec> formula(const json& v, const std::string& where) {
    if (!v.is_string()) {
      fail(where + " must be a formula string");
      return std::nullopt;
    }
    try {
      return parse_formula(v.get<std::string>());
    } catch (const FormulaError& e) {
      fail(where + ": " + e.what());
      return std::nullopt;
    }
  }
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::optional<DataConfig> parse_data(Checker& ck, const json& j, const std::filesystem::path& base) {
  const std::string where = "data";
  if (!j.is_object()) {
    ck.fail("data must be an object");
    return std::nullopt;
  }
  ck.known_keys(j, where, {"path", "missing", "missing_tokens", "columns"});
  DataConfig d;
  if (auto p = ck.str(j, "path", where)) {
    d.path = std::filesystem::path(*p).is_absolute() ? std::filesystem::path(*p) : base / *p;
  } else if (!j.contains("path")) {
    ck.fail("data.path is required");
  }
  if (auto m = ck.str(j, "missing", where)) {
    if (*m == "drop") d.schema.missing = MissingPolicy::drop;
    else if (*m == "error") d.schema.missing = MissingPolicy::error;
    else ck.fail("data.missing must be 'drop' or 'error'");
  }
  if (j.contains("missing_tokens")) {
    if (!j["missing_tokens"].is_array()) ck.fail("data.missing_tokens must be an array of strings");
    else {
      d.schema.missing_tokens.clear();
      for (const auto& t : j["missing_tokens"]) {
        if (t.is_string()) d.schema.missing_tokens.push_back(t.get<std::string>());
        else ck.fail("data.missing_tokens must be an array of strings");
      }
    }
  }
  if (!j.contains("columns") || !j["columns"].is_array() || j["columns"].empty()) {
    ck.fail("data.columns must be a non-empty array");
    return d;
  }
  int exposure = 0, outcome = 0, covariates = 0, mediators = 0;
  for (std::size_t i = 0; i < j["columns"].size(); ++i) {
    const auto& c = j["columns"][i];
    const std::string w = "data.columns[" + std::to_string(i) + "]";
    if (!c.is_object()) {
      ck.fail(w + " must be an object");
      continue;
    }
    ck.known_keys(c, w, {"name", "role", "type", "levels"});
    ColumnSpec spec;
    if (auto n = ck.str(c, "name", w)) spec.name = *n;
    else ck.fail(w + ".name is required");
    if (auto r = ck.str(c, "role", w)) {
      try {
        spec.role = parse_role(*r);
        switch (*spec.role) {
          case Role::exposure: ++exposure; break;
          case Role::outcome: ++outcome; break;
          case Role::covariate: ++covariates; break;
          case Role::mediator: ++mediators; break;
        }
      } catch (const std::exception& e) {
        ck.fail(w + ".role: " + e.what());
      }
    }
    if (auto t = ck.str(c, "type", w)) {
      if (*t == "numeric") spec.type = DeclaredType::numeric;
      else if (*t == "categorical") spec.type = DeclaredType::categorical;
      else if (*t == "binary") spec.type = DeclaredType::binary;
      else ck.fail(w + ".type must be numeric, categorical or binary");
    }
    if (c.contains("levels")) {
      if (!c["levels"].is_array()) ck.fail(w + ".levels must be an array");
      else
        for (const auto& l : c["levels"]) spec.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
    }
    d.schema.columns.push_back(std::move(spec));
  }
  if (exposure != 1) ck.fail("data.columns must declare exactly one exposure (found " + std::to_string(exposure) + ")");
  if (outcome != 1) ck.fail("data.columns must declare exactly one outcome (found " + std::to_string(outcome) + ")");
  if (covariates < 1) ck.fail("data.columns must declare at least one covariate");
  if (mediators < 1) ck.fail("data.columns must declare at least one mediator");
  return d;
}

std::optional<LinearLaw> parse_law(Checker& ck, const json& j, const std::string& where) {
  if (!j.is_object()) {
    ck.fail(where + " must be an object of {\"intercept\": x, \"term\": coef}");
    return std::nullopt;
  }
  LinearLaw law;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) {
      ck.fail(where + "." + it.key() + " must be a number");
      continue;
    }
    if (it.key() == "intercept") {
      law.intercept = it.value().get<double>();
      continue;
    }
    LinearLaw::Term t;
    t.coef = it.value().get<double>();
    std::stringstream ss(it.key());
    std::string v;
    while (std::getline(ss, v, ':')) t.vars.push_back(v);
    law.terms.push_back(std::move(t));
  }
  return law;
}

std::optional<DgpSpec> parse_dgp(Checker& ck, const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "desk") return desk_dgp();
    if (name == "robustness") return robustness_dgp();
    ck.fail("simulate.dgp must be 'desk', 'robustness' or an object");
    return std::nullopt;
  }
  if (!j.is_object()) {
    ck.fail("simulate.dgp must be 'desk', 'robustness' or an object");
    return std::nullopt;
  }
  const std::string w = "simulate.dgp";
  ck.known_keys(j, w, {"covariates", "propensity", "mediators", "outcome", "exposure", "outcome_name"});
  DgpSpec d;
  if (auto e = ck.str(j, "exposure", w)) d.exposure = *e;
  if (auto o = ck.str(j, "outcome_name", w)) d.outcome_name = *o;
  if (j.contains("covariates") && j["covariates"].is_array()) {
    for (std::size_t i = 0; i < j["covariates"].size(); ++i) {
      const auto& c = j["covariates"][i];
      const std::string cw = w + ".covariates[" + std::to_string(i) + "]";
      CovariateLaw law;
      if (auto n = ck.str(c, "name", cw)) law.name = *n;
      const auto kind = ck.str(c, "law", cw).value_or("bernoulli");
      if (kind == "bernoulli") {
        law.kind = CovariateLaw::Kind::bernoulli;
        law.a = ck.num(c, "p", cw).value_or(0.5);
      } else if (kind == "normal") {
        law.kind = CovariateLaw::Kind::normal;
        law.a = ck.num(c, "mean", cw).value_or(0.0);
        law.b = ck.num(c, "sd", cw).value_or(1.0);
      } else if (kind == "uniform") {
        law.kind = CovariateLaw::Kind::uniform;
        law.a = ck.num(c, "lower", cw).value_or(0.0);
        law.b = ck.num(c, "upper", cw).value_or(1.0);
      } else {
        ck.fail(cw + ".law must be bernoulli, normal or uniform");
      }
      d.covariates.push_back(law);
    }
  } else {
    ck.fail(w + ".covariates must be an array");
  }
  if (j.contains("propensity")) {
    if (auto l = parse_law(ck, j["propensity"], w + ".propensity")) d.propensity = *l;
  } else {
    ck.fail(w + ".propensity is required");
  }
  if (j.contains("mediators") && j["mediators"].is_array()) {
    for (std::size_t i = 0; i < j["mediators"].size(); ++i) {
      const auto& m = j["mediators"][i];
      const std::string mw = w + ".mediators[" + std::to_string(i) + "]";
      MediatorLaw law;
      if (auto n = ck.str(m, "name", mw)) law.name = *n;
      const auto fam = ck.str(m, "family", mw).value_or("binary");
      if (fam != "binary" && fam != "normal") ck.fail(mw + ".family must be binary or normal");
      law.binary = fam == "binary";
      law.sd = ck.num(m, "sd", mw).value_or(1.0);
      if (m.contains("law")) {
        if (auto l = parse_law(ck, m["law"], mw + ".law")) law.law = *l;
      }
      d.mediators.push_back(law);
    }
  } else {
    ck.fail(w + ".mediators must be an array");
  }
  if (j.contains("outcome") && j["outcome"].is_object()) {
    const auto& o = j["outcome"];
    const auto fam = ck.str(o, "family", w + ".outcome").value_or("binary");
    if (fam != "binary" && fam != "normal") ck.fail(w + ".outcome.family must be binary or normal");
    d.binary_outcome = fam == "binary";
    d.outcome_sd = ck.num(o, "sd", w + ".outcome").value_or(1.0);
    if (o.contains("law")) {
      if (auto l = parse_law(ck, o["law"], w + ".outcome.law")) d.outcome = *l;
    }
  } else {
    ck.fail(w + ".outcome must be an object");
  }
  try {
    d.validate();
  } catch (const std::exception& e) {
    ck.fail(w + ": " + e.what());
  }
  return d;
}

void parse_formulas(Checker& ck, const json& j, ModelFormulas& f) {
  if (!j.is_object()) {
    ck.fail("formulas must be an object");
    return;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto role = parse_formula_role(it.key());
    const std::string w = "formulas." + it.key();
    if (!role) {
      ck.fail(w + ": unknown formula slot");
      continue;
    }
    if (*role == FormulaRole::mediators) {
      if (!it.value().is_array()) {
        ck.fail(w + " must be an array of formulas (one per mediator, in order)");
        continue;
      }
      for (std::size_t i = 0; i < it.value().size(); ++i) {
        if (auto s = ck.formula(it.value()[i], w + "[" + std::to_string(i) + "]")) f.mediators.push_back(*s);
      }
      continue;
    }
    auto s = ck.formula(it.value(), w);
    switch (*role) {
      case FormulaRole::propensity: f.propensity = s; break;
      case FormulaRole::exposure_cm: f.exposure_cm = s; break;
      case FormulaRole::outcome_c1: f.outcome_c1 = s; break;
      case FormulaRole::outcome_c0: f.outcome_c0 = s; break;
      case FormulaRole::outcome_cm1: f.outcome_cm1 = s; break;
      case FormulaRole::crossworld_c: f.crossworld_c = s; break;
      case FormulaRole::nde_c: f.nde_c = s; break;
      case FormulaRole::working: f.working = s; break;
      case FormulaRole::mediators: break;
    }
  }
}

struct VariableRoles {
  Roles roles;
  std::vector<std::string> columns;
  bool binary_outcome = false;
  bool binary_mediators = false;
};

void check_variables(Checker& ck, const ModelFormulas& f, const VariableRoles& vr) {
  auto known = [&](const std::string& v) {
    return std::find(vr.columns.begin(), vr.columns.end(), v) != vr.columns.end();
  };
  auto check = [&](const std::optional<FormulaSpec>& s, FormulaRole role, bool check_response) {
    if (!s) return;
    const std::string w = "formulas." + std::string(to_string(role));
    if (check_response && !known(s->response)) ck.fail(w + ": unknown response '" + s->response + "'");
    for (const auto& v : s->variables()) {
      if (role == FormulaRole::working && v == "arm") continue;
      if (!known(v)) ck.fail(w + ": unknown variable '" + v + "'");
    }
  };
  check(f.propensity, FormulaRole::propensity, true);
  check(f.exposure_cm, FormulaRole::exposure_cm, true);
  check(f.outcome_c1, FormulaRole::outcome_c1, true);
  check(f.outcome_c0, FormulaRole::outcome_c0, true);
  check(f.outcome_cm1, FormulaRole::outcome_cm1, true);
  check(f.crossworld_c, FormulaRole::crossworld_c, false);
  check(f.nde_c, FormulaRole::nde_c, false);
  check(f.working, FormulaRole::working, true);
  if (f.propensity && f.propensity->response != vr.roles.exposure) {
    ck.fail("formulas.propensity must model the exposure '" + vr.roles.exposure + "'");
  }
  if (f.exposure_cm && f.exposure_cm->response != vr.roles.exposure) {
    ck.fail("formulas.exposure_cm must model the exposure '" + vr.roles.exposure + "'");
  }
  for (auto* s : {&f.outcome_c1, &f.outcome_c0, &f.outcome_cm1, &f.working}) {
    if (*s && (*s)->response != vr.roles.outcome) {
      ck.fail("outcome formulas must model the outcome '" + vr.roles.outcome + "' (got '" + (*s)->response + "')");
    }
  }
  if (f.working && !std::any_of(f.working->terms.begin(), f.working->terms.end(), [](const Term& t) {
        return t.atoms.size() == 1 && t.atoms[0].var == "arm";
      })) {
    ck.fail("formulas.working must contain the main term 'arm'");
  }
  if (!f.mediators.empty()) {
    if (f.mediators.size() != vr.roles.mediators.size()) {
      ck.fail("formulas.mediators needs one formula per mediator (" + std::to_string(vr.roles.mediators.size()) +
              "), got " + std::to_string(f.mediators.size()));
    } else {
      for (std::size_t k = 0; k < f.mediators.size(); ++k) {
        const std::string w = "formulas.mediators[" + std::to_string(k) + "]";
        if (f.mediators[k].response != vr.roles.mediators[k]) {
          ck.fail(w + " must model '" + vr.roles.mediators[k] + "' (mediator order follows the declared roles)");
        }
        for (const auto& v : f.mediators[k].variables()) {
          const auto& cov = vr.roles.covariates;
          const auto end = vr.roles.mediators.begin() + static_cast<std::ptrdiff_t>(k);
          if (std::find(cov.begin(), cov.end(), v) == cov.end() &&
              std::find(vr.roles.mediators.begin(), end, v) == end) {
            ck.fail(w + ": '" + v + "' is neither a covariate nor an earlier mediator");
          }
        }
      }
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, Command command) {
  Checker ck;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("not valid JSON: ") + e.what()});
  }
  if (!j.is_object()) throw ConfigError({"configuration must be a JSON object"});
  ck.known_keys(j, "config",
                {"data", "formulas", "estimators", "weights_method", "mediator_integration", "n_sim",
                 "working_family", "bootstrap", "seed", "workers", "output_dir", "simulate"});

  RunConfig cfg;
  {
    // canonical form; settings that cannot change results are left out
    json canon = j;
    canon.erase("workers");
    canon.erase("output_dir");
    cfg.hash = hex64(hash_tag(canon.dump()));
  }
  if (auto s = ck.integer(j, "seed", "config", 0)) cfg.seed = static_cast<std::uint64_t>(*s);
  if (auto w = ck.integer(j, "workers", "config", 1)) cfg.workers = static_cast<int>(*w);
  if (auto o = ck.str(j, "output_dir", "config")) cfg.output_dir = *o;
  cfg.menu.options.seed = cfg.seed;

  if (j.contains("data")) cfg.data = parse_data(ck, j["data"], base_dir);
  if (j.contains("formulas")) parse_formulas(ck, j["formulas"], cfg.menu.formulas);

  if (j.contains("estimators")) {
    const auto& e = j["estimators"];
    if (e.is_string() && e.get<std::string>() == "all") {
      cfg.menu.estimators = default_menu();
    } else if (e.is_array()) {
      for (const auto& id : e) {
        if (!id.is_string()) {
          ck.fail("estimators must be \"all\" or an array of estimator ids");
          continue;
        }
        try {
          estimator_info(id.get<std::string>());
          cfg.menu.estimators.push_back(id.get<std::string>());
        } catch (const std::exception& ex) {
          ck.fail(std::string("estimators: ") + ex.what());
        }
      }
    } else {
      ck.fail("estimators must be \"all\" or an array of estimator ids");
    }
  } else {
    cfg.menu.estimators = default_menu();
  }

  if (auto m = ck.str(j, "weights_method", "config")) {
    if (*m == "expr1") cfg.menu.options.crossworld = WeightMethod::density_ratio;
    else if (*m == "expr2") cfg.menu.options.crossworld = WeightMethod::odds;
    else if (*m == "expr3") cfg.menu.options.crossworld = WeightMethod::stacked;
    else ck.fail("weights_method must be expr1, expr2 or expr3");
  }
  if (auto m = ck.str(j, "mediator_integration", "config")) {
    if (*m == "simulate") cfg.menu.options.integration = MediatorIntegration::simulate;
    else if (*m == "exact") cfg.menu.options.integration = MediatorIntegration::exact;
    else ck.fail("mediator_integration must be simulate or exact");
  }
  if (auto n = ck.integer(j, "n_sim", "config", 1)) cfg.menu.options.n_sim = static_cast<int>(*n);
  if (auto w = ck.str(j, "working_family", "config")) {
    if (*w == "gaussian") cfg.menu.options.working_family = Family::gaussian_identity;
    else if (*w == "logit") cfg.menu.options.working_family = Family::binomial_logit;
    else if (*w != "auto") ck.fail("working_family must be auto, gaussian or logit");
  }

  if (j.contains("bootstrap") && !j["bootstrap"].is_null() && !(j["bootstrap"].is_boolean() && !j["bootstrap"])) {
    const auto& b = j["bootstrap"];
    if (!b.is_object()) {
      ck.fail("bootstrap must be an object, null or false");
    } else {
      ck.known_keys(b, "bootstrap", {"replicates", "level", "scheme"});
      BootstrapConfig bc;
      bc.seed = cfg.seed;
      if (auto r = ck.integer(b, "replicates", "bootstrap", 2)) bc.replicates = static_cast<int>(*r);
      if (auto l = ck.num(b, "level", "bootstrap")) {
        if (!(*l > 0.0 && *l < 1.0)) ck.fail("bootstrap.level must lie in (0, 1)");
        bc.level = *l;
      }
      if (auto s = ck.str(b, "scheme", "bootstrap")) {
        if (*s == "dirichlet") bc.scheme = BootstrapScheme::dirichlet;
        else if (*s == "multinomial") bc.scheme = BootstrapScheme::multinomial;
        else ck.fail("bootstrap.scheme must be dirichlet or multinomial");
      }
      cfg.bootstrap = bc;
    }
  }

  if (j.contains("simulate")) {
    const auto& s = j["simulate"];
    if (!s.is_object()) {
      ck.fail("simulate must be an object");
    } else {
      ck.known_keys(s, "simulate", {"preset", "dgp", "n", "reps", "drop", "corrupted", "coverage"});
      SimulateConfig sc;
      if (auto p = ck.str(s, "preset", "simulate")) {
        if (*p != "robustness") ck.fail("simulate.preset must be 'robustness'");
        sc.preset = *p;
      }
      if (s.contains("dgp")) {
        if (auto d = parse_dgp(ck, s["dgp"])) sc.dgp = *d;
      } else {
        sc.dgp = sc.preset == "robustness" ? robustness_dgp() : desk_dgp();
      }
      if (auto n = ck.integer(s, "n", "simulate", 1)) sc.n = static_cast<std::size_t>(*n);
      if (auto r = ck.integer(s, "reps", "simulate", 1)) sc.reps = static_cast<int>(*r);
      if (auto d = ck.str(s, "drop", "simulate")) sc.drop = *d;
      if (s.contains("corrupted")) {
        if (!s["corrupted"].is_array()) ck.fail("simulate.corrupted must be an array of formula slots");
        else
          for (const auto& c : s["corrupted"]) {
            const auto role = c.is_string() ? parse_formula_role(c.get<std::string>()) : std::nullopt;
            if (!role || !corruptible_models().count(*role)) {
              ck.fail("simulate.corrupted: '" + (c.is_string() ? c.get<std::string>() : c.dump()) +
                      "' is not a corruptible formula slot");
            } else {
              sc.corrupted.insert(*role);
            }
          }
      }
      if (s.contains("coverage")) {
        if (!s["coverage"].is_boolean()) ck.fail("simulate.coverage must be true or false");
        else sc.coverage = s["coverage"].get<bool>();
      }
      if (sc.coverage && !cfg.bootstrap) ck.fail("simulate.coverage needs a bootstrap section");
      const bool named = s.contains("dgp") && s["dgp"].is_string();
      const std::string dgp_name = named ? s["dgp"].get<std::string>() : (sc.preset == "robustness" ? "robustness" : "desk");
      if (!j.contains("formulas")) {
        if (!s.contains("dgp") || named) {
          cfg.menu.formulas = dgp_name == "robustness" ? robustness_formulas() : desk_formulas();
        } else {
          ck.fail("a custom simulate.dgp needs a formulas section");
        }
      }
      cfg.simulate = sc;
    }
  }

  // command-specific requirements
  std::optional<VariableRoles> vr;
  if (command == Command::simulate) {
    if (!cfg.simulate) ck.fail("the simulate command needs a simulate section");
    else {
      VariableRoles v;
      v.roles = cfg.simulate->dgp.roles();
      v.columns = v.roles.covariates;
      v.columns.push_back(v.roles.exposure);
      v.columns.insert(v.columns.end(), v.roles.mediators.begin(), v.roles.mediators.end());
      v.columns.push_back(v.roles.outcome);
      v.binary_outcome = cfg.simulate->dgp.binary_outcome;
      v.binary_mediators = std::all_of(cfg.simulate->dgp.mediators.begin(), cfg.simulate->dgp.mediators.end(),
                                       [](const MediatorLaw& m) { return m.binary; });
      vr = v;
      if (!cfg.simulate->corrupted.empty() &&
          std::find(v.roles.covariates.begin(), v.roles.covariates.end(), cfg.simulate->drop) ==
              v.roles.covariates.end()) {
        ck.fail("simulate.drop must name a covariate");
      }
    }
  } else {
    if (!cfg.data) ck.fail("the " + std::string(to_string(command)) + " command needs a data section");
    else {
      VariableRoles v;
      bool mediators_binary = true;
      for (const auto& c : cfg.data->schema.columns) {
        v.columns.push_back(c.name);
        if (!c.role) continue;
        switch (*c.role) {
          case Role::covariate: v.roles.covariates.push_back(c.name); break;
          case Role::exposure: v.roles.exposure = c.name; break;
          case Role::mediator:
            v.roles.mediators.push_back(c.name);
            mediators_binary = mediators_binary && c.type == DeclaredType::binary;
            break;
          case Role::outcome:
            v.roles.outcome = c.name;
            v.binary_outcome = c.type == DeclaredType::binary;
            break;
        }
      }
      v.binary_mediators = mediators_binary;
      vr = v;
    }
  }
  if (vr) check_variables(ck, cfg.menu.formulas, *vr);

  if (command == Command::balance) {
    if (!cfg.menu.formulas.propensity) ck.fail("the balance command needs formulas.propensity");
  } else {
    std::vector<std::string> ids = cfg.menu.estimators;
    if (command == Command::simulate && cfg.simulate && cfg.simulate->preset == "robustness") ids = default_menu();
    for (const auto& id : ids) {
      for (auto role : required_formulas(id, cfg.menu.options.crossworld)) {
        if (!cfg.menu.formulas.has(role)) {
          ck.fail("estimator '" + id + "' needs formulas." + std::string(to_string(role)));
        }
      }
    }
  }
  if (vr) {
    if (cfg.menu.options.integration == MediatorIntegration::exact && !vr->binary_mediators) {
      ck.fail("mediator_integration 'exact' needs all mediators declared binary");
    }
    if (vr->binary_outcome && cfg.menu.options.working_family == Family::gaussian_identity) {
      ck.fail("working_family 'gaussian' is only allowed for continuous outcomes");
    }
  }
  if (!ck.problems.empty()) throw ConfigError(ck.problems);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, Command command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path(), command);
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.menu.options.seed = seed;
  if (cfg.bootstrap) cfg.bootstrap->seed = seed;
}

}  // namespace medmenu
