#include "medmenu/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace medmenu {

using ojson = nlohmann::ordered_json;

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  if (x == 0.0) return "0";  // no negative zero
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string header(const Provenance& p) {
  return "# medmenu " + std::string(kToolVersion) + " command=" + p.command + " config=" + p.config_hash +
         " seed=" + std::to_string(p.seed) + "\n";
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' || c == '\r' ? ' ' : c;
  }
  return out + "\"";
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

ojson num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

ojson num(const std::optional<double>& x) { return x ? num(*x) : ojson(nullptr); }

ojson provenance(const Provenance& p) {
  return ojson{{"tool", "medmenu"},
               {"version", kToolVersion},
               {"command", p.command},
               {"config_hash", p.config_hash},
               {"seed", p.seed},
               {"workers", p.workers}};
}

const char* kEffects[] = {"NDE0", "NIE1", "TE"};

std::map<std::pair<std::string, std::string>, Interval> index(const std::vector<EffectInterval>* intervals) {
  std::map<std::pair<std::string, std::string>, Interval> m;
  if (intervals)
    for (const auto& e : *intervals) m[{e.estimator, e.effect}] = e.interval;
  return m;
}

}  // namespace

std::string estimates_csv(const Provenance& prov, const std::vector<EstimateReport>& reports,
                          const std::vector<EffectInterval>* intervals) {
  std::ostringstream out;
  out << header(prov);
  out << "estimator,robustness,status,EY1,EY0,EY1M0,NDE0,NIE1,TE";
  if (intervals) {
    for (const char* e : kEffects) out << ',' << e << "_lower," << e << "_upper";
    out << ",boot_failures,reliable";
  }
  out << ",error\n";
  const auto iv = index(intervals);
  for (const auto& r : reports) {
    out << quote(r.estimator) << ',' << to_string(r.robustness) << ',' << (r.ok() ? "ok" : "failed");
    out << ',' << opt(r.ey1) << ',' << opt(r.ey0) << ',' << opt(r.ey1m0);
    if (r.ok()) {
      out << ',' << format_number(r.nde) << ',' << format_number(r.nie) << ',' << format_number(r.te);
    } else {
      out << ",NA,NA,NA";
    }
    if (intervals) {
      std::size_t failures = 0;
      bool reliable = true;
      for (const char* e : kEffects) {
        const auto it = iv.find({r.estimator, e});
        if (it == iv.end() || !r.ok()) {
          out << ",NA,NA";
          continue;
        }
        out << ',' << format_number(it->second.lower) << ',' << format_number(it->second.upper);
        failures = std::max(failures, it->second.failures);
        reliable = reliable && it->second.reliable;
      }
      out << ',' << failures << ',' << (r.ok() && reliable ? "true" : "false");
    }
    out << ',' << quote(r.error.value_or("")) << '\n';
  }
  return out.str();
}

std::string report_json(const Provenance& prov, const std::vector<EstimateReport>& reports,
                        const std::vector<EffectInterval>* intervals, const std::vector<WeightSummary>& weights,
                        const IngestReport& ingest, const std::vector<std::string>& warnings) {
  const auto iv = index(intervals);
  ojson est = ojson::array();
  for (const auto& r : reports) {
    ojson e{{"estimator", r.estimator},
            {"robustness", to_string(r.robustness)},
            {"status", r.ok() ? "ok" : "failed"},
            {"EY1", num(r.ey1)},
            {"EY0", num(r.ey0)},
            {"EY1M0", num(r.ey1m0)},
            {"NDE0", r.ok() ? num(r.nde) : ojson(nullptr)},
            {"NIE1", r.ok() ? num(r.nie) : ojson(nullptr)},
            {"TE", r.ok() ? num(r.te) : ojson(nullptr)}};
    if (intervals && r.ok()) {
      ojson ints = ojson::object();
      for (const char* name : kEffects) {
        const auto it = iv.find({r.estimator, name});
        if (it == iv.end()) continue;
        ints[name] = {{"lower", num(it->second.lower)},
                      {"upper", num(it->second.upper)},
                      {"failures", it->second.failures},
                      {"reliable", it->second.reliable}};
      }
      e["intervals"] = ints;
    }
    e["components"] = r.components;
    ojson d = ojson::object();
    for (const auto& [k, v] : r.diagnostics) d[k] = num(v);
    e["diagnostics"] = d;
    if (r.error) e["error"] = *r.error;
    est.push_back(e);
  }
  ojson ws = ojson::array();
  for (const auto& w : weights) {
    ojson q = ojson::object();
    for (std::size_t k = 0; k < kWeightQuantiles.size(); ++k) q[format_number(kWeightQuantiles[k])] = num(w.quantiles[k]);
    ws.push_back({{"pseudo_sample", to_string(w.target)},
                  {"count", w.count},
                  {"mean", num(w.mean)},
                  {"max", num(w.max)},
                  {"ess", num(w.ess)},
                  {"quantiles", q},
                  {"capped", w.capped}});
  }
  ojson root{{"provenance", provenance(prov)},
             {"data", {{"rows_read", ingest.rows_read},
                       {"rows_dropped", ingest.rows_dropped},
                       {"treated", ingest.treated},
                       {"control", ingest.control}}},
             {"estimates", est},
             {"weights", ws},
             {"warnings", warnings}};
  if (intervals) root["bootstrap"] = {{"interval", "percentile"}, {"quantile_rule", kQuantileRule}};
  return root.dump(2) + "\n";
}

std::string balance_csv(const Provenance& prov, const BalanceReport& report) {
  std::ostringstream out;
  out << header(prov);
  out << "sample_a,sample_b,variable,mean_a,mean_b,smd";
  for (const char* side : {"a", "b"}) {
    for (double q : kBalanceQuantiles) out << ",q" << format_number(q * 100) << '_' << side;
  }
  out << '\n';
  for (const auto& c : report.comparisons) {
    out << c.sample_a << ',' << c.sample_b << ',' << quote(c.variable) << ',' << format_number(c.mean_a) << ','
        << format_number(c.mean_b) << ',' << format_number(c.smd);
    for (double q : c.quantiles_a) out << ',' << format_number(q);
    for (double q : c.quantiles_b) out << ',' << format_number(q);
    out << '\n';
  }
  return out.str();
}

std::string weights_csv(const Provenance& prov, const std::vector<WeightSummary>& weights) {
  std::ostringstream out;
  out << header(prov);
  out << "pseudo_sample,count,mean,max,ess";
  for (double q : kWeightQuantiles) out << ",q" << format_number(q * 100);
  out << ",capped\n";
  for (const auto& w : weights) {
    out << to_string(w.target) << ',' << w.count << ',' << format_number(w.mean) << ',' << format_number(w.max) << ','
        << format_number(w.ess);
    for (double q : w.quantiles) out << ',' << format_number(q);
    out << ',' << (w.capped ? "true" : "false") << '\n';
  }
  return out.str();
}

std::string experiment_csv(const Provenance& prov, const std::vector<ExperimentRow>& rows) {
  bool coverage = false;
  for (const auto& r : rows) coverage = coverage || r.coverage.has_value();
  std::ostringstream out;
  out << header(prov);
  out << "scenario,estimator,effect,truth,mean,bias,emp_se,rmse,std_bias,reps,failures";
  if (coverage) out << ",coverage";
  out << '\n';
  for (const auto& r : rows) {
    out << quote(r.scenario) << ',' << quote(r.estimator) << ',' << r.effect << ',' << format_number(r.truth) << ','
        << format_number(r.mean) << ',' << format_number(r.bias) << ',' << format_number(r.emp_se) << ','
        << format_number(r.rmse) << ',' << format_number(r.std_bias) << ',' << r.reps << ',' << r.failures;
    if (coverage) out << ',' << opt(r.coverage);
    out << '\n';
  }
  return out.str();
}

std::string robustness_csv(const Provenance& prov, const std::vector<RobustnessVerdict>& verdicts) {
  std::ostringstream out;
  out << header(prov);
  out << "scenario,estimator,expected,worst_effect,max_std_bias,verdict,origin\n";
  for (const auto& v : verdicts) {
    out << quote(v.scenario) << ',' << quote(v.estimator) << ',' << to_string(v.expected) << ',' << v.worst_effect
        << ',' << format_number(v.max_std_bias) << ',' << (v.pass ? "pass" : "fail") << ',' << quote(v.origin) << '\n';
  }
  return out.str();
}

std::string truth_json(const Provenance& prov, const std::vector<std::pair<std::string, Effects>>& truths) {
  ojson t = ojson::array();
  for (const auto& [name, e] : truths) {
    t.push_back({{"scenario", name},
                 {"EY1", num(e.ey1)},
                 {"EY0", num(e.ey0)},
                 {"EY1M0", num(e.ey1m0)},
                 {"NDE0", num(e.nde)},
                 {"NIE1", num(e.nie)},
                 {"TE", num(e.te)},
                 {"mc_se", {{"NDE0", num(e.se_nde)}, {"NIE1", num(e.se_nie)}, {"TE", num(e.se_te)}}}});
  }
  return ojson{{"provenance", provenance(prov)}, {"truth", t}}.dump(2) + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::ios_base::failure("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::ios_base::failure("cannot move output into place at '" + path.string() + "': " + ec.message());
}

}  // namespace medmenu
