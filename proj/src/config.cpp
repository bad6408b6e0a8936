#include "blockcd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace bcd {

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::ostringstream os;
  os << issues.size() << " configuration error(s):";
  for (const auto& i : issues) {
    os << "\n  ";
    if (i.line > 0) os << "line " << i.line << ": ";
    os << i.message;
  }
  return os.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return std::nullopt;
}

std::vector<std::string> split_list(std::string s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

enum class Type { uint, real, boolean, text, eta, real_list, text_list, reg };

const std::map<std::string, Type>& key_types() {
  static const std::map<std::string, Type> keys = {
      {"problem.family", Type::text},
      {"problem.n", Type::uint},
      {"problem.d", Type::uint},
      {"problem.m", Type::uint},
      {"problem.blocks", Type::real_list},
      {"problem.condition_number", Type::real},
      {"problem.convex", Type::boolean},
      {"problem.reg", Type::reg},
      {"problem.margin", Type::real},
      {"problem.noise", Type::real},
      {"problem.instance", Type::text},
      {"problem.seed", Type::uint},
      {"problem.x0_scale", Type::real},
      {"algorithm.name", Type::text},
      {"algorithm.K", Type::uint},
      {"algorithm.eta", Type::eta},
      {"algorithm.eta_scale", Type::real},
      {"algorithm.eta_override", Type::boolean},
      {"algorithm.step_rule", Type::text},
      {"algorithm.mu", Type::eta},
      {"algorithm.p", Type::real},
      {"algorithm.b", Type::uint},
      {"algorithm.bprime", Type::uint},
      {"algorithm.sample_sharing", Type::text},
      {"algorithm.schedule", Type::text},
      {"lambda.mode", Type::text},
      {"lambda.values", Type::real_list},
      {"lambda.growth", Type::real},
      {"lambda.init", Type::real},
      {"lambda.reset", Type::boolean},
      {"smoothness.L_hat", Type::real},
      {"smoothness.L_tilde", Type::real},
      {"smoothness.q_kind", Type::text},
      {"seeds.base", Type::uint},
      {"seeds.count", Type::uint},
      {"diagnostics.record_u", Type::boolean},
      {"diagnostics.checks", Type::text_list},
      {"diagnostics.sigma_sq", Type::real},
      {"output.trace_path", Type::text},
      {"output.report_path", Type::text},
      {"output.record_wall_time", Type::boolean},
  };
  return keys;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Parser {
 public:
  explicit Parser(std::map<std::string, Entry> entries) : e_(std::move(entries)) {}

  std::vector<ConfigIssue> issues;

  bool has(const std::string& k) const { return e_.count(k) > 0; }
  int line(const std::string& k) const { return has(k) ? e_.at(k).line : 0; }
  std::string raw(const std::string& k) const { return has(k) ? e_.at(k).value : std::string(); }

  void error(const std::string& k, const std::string& msg) { issues.push_back({line(k), k + ": " + msg}); }
  void error(const std::string& msg) { issues.push_back({0, msg}); }

  template <class T, class F>
  void get(const std::string& k, T& out, F&& conv, const char* what) {
    if (!has(k)) return;
    auto v = conv(raw(k));
    if (!v) error(k, std::string("expected ") + what + ", got '" + raw(k) + "'");
    else out = static_cast<T>(*v);
  }
  void get_real(const std::string& k, double& out) { get(k, out, to_double, "a number"); }
  template <class T>
  void get_uint(const std::string& k, T& out) { get(k, out, to_uint, "a nonnegative integer"); }
  void get_bool(const std::string& k, bool& out) { get(k, out, to_bool, "true or false"); }

  template <class E>
  void get_enum(const std::string& k, E& out, const std::map<std::string, E>& choices) {
    if (!has(k)) return;
    auto it = choices.find(raw(k));
    if (it != choices.end()) {
      out = it->second;
      return;
    }
    std::string names;
    for (const auto& [name, _] : choices) names += (names.empty() ? "" : "|") + name;
    error(k, "expected one of " + names + ", got '" + raw(k) + "'");
  }

  std::optional<double> get_auto_real(const std::string& k) {
    if (!has(k) || raw(k) == "auto") return std::nullopt;
    auto v = to_double(raw(k));
    if (!v) error(k, "expected 'auto' or a number, got '" + raw(k) + "'");
    return v;
  }

  std::vector<double> get_real_list(const std::string& k) {
    std::vector<double> out;
    for (const auto& item : split_list(raw(k))) {
      auto v = to_double(item);
      if (!v) error(k, "bad list entry '" + item + "'");
      else out.push_back(*v);
    }
    return out;
  }

  std::optional<Regularizer> get_reg(const std::string& k) {
    if (!has(k)) return std::nullopt;
    const std::string s = raw(k);
    try {
      if (s == "zero") return Regularizer::zero();
      const auto open = s.find('(');
      if (open != std::string::npos && s.back() == ')') {
        const std::string name = trim(s.substr(0, open));
        auto args = split_list(s.substr(open + 1, s.size() - open - 2));
        std::vector<double> vals;
        for (auto& a : args)
          if (auto v = to_double(a)) vals.push_back(*v);
        if (vals.size() == args.size()) {
          if (name == "l1" && vals.size() == 1) return Regularizer::l1(vals[0]);
          if (name == "box" && vals.size() == 2) return Regularizer::box(vals[0], vals[1]);
        }
      }
    } catch (const std::exception& ex) {
      error(k, ex.what());
      return std::nullopt;
    }
    error(k, "expected zero, l1(weight) or box(lo,hi), got '" + s + "'");
    return std::nullopt;
  }

 private:
  std::map<std::string, Entry> e_;
};

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(join_issues(issues)), issues_(std::move(issues)) {}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {"descent", "lemma2",   "lemma3",     "theorem1",
                                                 "corollary1", "lemma5", "lemma6",   "potential",
                                                 "theorem3", "corollary4", "arith_cost"};
  return names;
}

bool is_numeric_key(const std::string& key) {
  auto it = key_types().find(key);
  if (it == key_types().end()) return false;
  return it->second == Type::uint || it->second == Type::real || it->second == Type::eta;
}

std::string to_string(AlgoName a) {
  switch (a) {
    case AlgoName::pccd: return "pccd";
    case AlgoName::vrccd: return "vrccd";
    case AlgoName::vroccd: return "vroccd";
    case AlgoName::sccd: return "sccd";
    case AlgoName::prox_gd: return "prox_gd";
    case AlgoName::page: return "page";
    case AlgoName::sgd: return "sgd";
  }
  return "?";
}

std::string to_string(Family f) {
  switch (f) {
    case Family::quadratic: return "quadratic";
    case Family::sigmoid: return "sigmoid";
    case Family::streaming: return "streaming";
  }
  return "?";
}

bool ExperimentConfig::stochastic() const {
  return algorithm.name != AlgoName::pccd && algorithm.name != AlgoName::prox_gd;
}

bool ExperimentConfig::cyclic() const {
  return algorithm.name == AlgoName::pccd || algorithm.name == AlgoName::vrccd ||
         algorithm.name == AlgoName::vroccd || algorithm.name == AlgoName::sccd;
}

ExperimentConfig parse_config(std::string_view text,
                              const std::map<std::string, std::string>& overrides) {
  std::vector<ConfigIssue> issues;
  std::map<std::string, Entry> entries;
  {
    std::istringstream in{std::string(text)};
    std::string raw_line;
    int lineno = 0;
    while (std::getline(in, raw_line)) {
      ++lineno;
      const auto hash = raw_line.find('#');
      const std::string line = trim(std::string_view(raw_line).substr(0, hash));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        issues.push_back({lineno, "expected 'section.key = value', got '" + line + "'"});
        continue;
      }
      const std::string key = trim(std::string_view(line).substr(0, eq));
      const std::string value = trim(std::string_view(line).substr(eq + 1));
      if (!key_types().count(key)) {
        issues.push_back({lineno, "unknown key '" + key + "'"});
        continue;
      }
      if (entries.count(key)) {
        issues.push_back({lineno, "duplicate key '" + key + "' (first set on line " +
                                      std::to_string(entries[key].line) + ")"});
        continue;
      }
      entries[key] = {value, lineno};
    }
  }
  for (const auto& [k, v] : overrides) {
    if (!key_types().count(k)) {
      issues.push_back({0, "unknown override key '" + k + "'"});
      continue;
    }
    int line = entries.count(k) ? entries[k].line : 0;
    entries[k] = {v, line};
  }

  ExperimentConfig cfg;
  for (const auto& [k, e] : entries) cfg.source[k] = e.value;
  Parser P(entries);
  P.issues = std::move(issues);

  // problem
  auto& pr = cfg.problem;
  P.get_enum("problem.family", pr.family,
             std::map<std::string, Family>{{"quadratic", Family::quadratic},
                                           {"sigmoid", Family::sigmoid},
                                           {"streaming", Family::streaming}});
  P.get_uint("problem.n", pr.n);
  P.get_uint("problem.d", pr.d);
  P.get_uint("problem.m", pr.m);
  if (P.has("problem.blocks")) {
    for (double v : P.get_real_list("problem.blocks")) {
      if (v < 1 || v != std::floor(v)) P.error("problem.blocks", "block sizes must be positive integers");
      else pr.blocks.push_back(static_cast<Index>(v));
    }
  }
  P.get_real("problem.condition_number", pr.condition_number);
  P.get_bool("problem.convex", pr.convex);
  P.get_real("problem.margin", pr.margin);
  P.get_real("problem.noise", pr.noise);
  P.get_real("problem.x0_scale", pr.x0_scale);
  if (P.has("problem.instance")) pr.instance_path = P.raw("problem.instance");
  if (P.has("problem.seed")) {
    std::uint64_t s = 0;
    P.get_uint("problem.seed", s);
    pr.seed = s;
  }
  if (auto reg = P.get_reg("problem.reg")) pr.reg = *reg;
  else if (!P.has("problem.reg") && pr.family == Family::quadratic && !pr.convex)
    pr.reg = Regularizer::box(-1.0, 1.0);  // keeps the nonconvex quadratic bounded below

  // algorithm
  auto& al = cfg.algorithm;
  P.get_enum("algorithm.name", al.name,
             std::map<std::string, AlgoName>{{"pccd", AlgoName::pccd},
                                             {"vrccd", AlgoName::vrccd},
                                             {"vroccd", AlgoName::vroccd},
                                             {"sccd", AlgoName::sccd},
                                             {"prox_gd", AlgoName::prox_gd},
                                             {"page", AlgoName::page},
                                             {"sgd", AlgoName::sgd}});
  P.get_uint("algorithm.K", al.K);
  al.eta = P.get_auto_real("algorithm.eta");
  P.get_real("algorithm.eta_scale", al.eta_scale);
  P.get_bool("algorithm.eta_override", al.eta_override);
  P.get_enum("algorithm.step_rule", al.step_rule,
             std::map<std::string, StepMode>{{"theorem3", StepMode::theorem3},
                                             {"corollary4_pl", StepMode::corollary4_pl}});
  al.mu = P.get_auto_real("algorithm.mu");
  P.get_real("algorithm.p", al.p);
  P.get_uint("algorithm.b", al.b);
  P.get_uint("algorithm.bprime", al.bprime);
  P.get_enum("algorithm.sample_sharing", al.sharing,
             std::map<std::string, SampleSharing>{{"fresh_per_block", SampleSharing::fresh_per_block},
                                                  {"shared_per_cycle", SampleSharing::shared_per_cycle}});
  if (P.has("algorithm.schedule")) {
    const auto s = P.raw("algorithm.schedule");
    if (s == "finite_sum") al.finite_sum_schedule = true;
    else if (s != "none") P.error("algorithm.schedule", "expected none or finite_sum, got '" + s + "'");
  }

  // lambda and smoothness
  auto& la = cfg.lambda;
  P.get_enum("lambda.mode", la.mode,
             std::map<std::string, LambdaMode>{{"exact_quadratic", LambdaMode::exact_quadratic},
                                               {"backtracking", LambdaMode::backtracking},
                                               {"explicit", LambdaMode::explicit_values}});
  if (P.has("lambda.values")) la.values = P.get_real_list("lambda.values");
  P.get_real("lambda.growth", la.growth);
  P.get_real("lambda.init", la.init);
  P.get_bool("lambda.reset", la.reset);
  if (P.has("smoothness.L_hat")) {
    double v = 0;
    P.get_real("smoothness.L_hat", v);
    cfg.smoothness.L_hat = v;
  }
  if (P.has("smoothness.L_tilde")) {
    double v = 0;
    P.get_real("smoothness.L_tilde", v);
    cfg.smoothness.L_tilde = v;
  }
  P.get_enum("smoothness.q_kind", cfg.smoothness.q_kind,
             std::map<std::string, QKind>{{"component_average", QKind::component_average},
                                          {"mean_function", QKind::mean_function}});

  P.get_uint("seeds.base", cfg.seed_base);
  P.get_uint("seeds.count", cfg.seed_count);
  P.get_bool("diagnostics.record_u", cfg.record_u);
  if (P.has("diagnostics.checks")) cfg.checks = split_list(P.raw("diagnostics.checks"));
  if (P.has("diagnostics.sigma_sq")) {
    double v = 0;
    P.get_real("diagnostics.sigma_sq", v);
    cfg.sigma_sq = v;
  }
  if (P.has("output.trace_path")) cfg.trace_path = P.raw("output.trace_path");
  if (P.has("output.report_path")) cfg.report_path = P.raw("output.report_path");
  P.get_bool("output.record_wall_time", cfg.record_wall_time);

  // ---- cross-field rules
  const bool streaming = pr.family == Family::streaming;
  const bool quadratic_like = pr.family != Family::sigmoid;
  if (pr.d < 1) P.error("problem.d", "must be at least 1");
  if (!pr.blocks.empty()) {
    Index sum = 0;
    for (auto s : pr.blocks) sum += s;
    if (sum != pr.d) P.error("problem.blocks", "block sizes sum to " + std::to_string(sum) + ", not d = " + std::to_string(pr.d));
    pr.m = static_cast<Index>(pr.blocks.size());
  } else if (pr.m < 1 || pr.m > pr.d) {
    P.error("problem.m", "must satisfy 1 <= m <= d");
  }
  if (streaming && P.has("problem.n")) P.error("problem.n", "streaming problems have no finite n");
  if (!streaming && pr.n < 1) P.error("problem.n", "must be at least 1");
  if (pr.condition_number < 1.0) P.error("problem.condition_number", "must be >= 1");
  if (!(pr.margin > 0.0)) P.error("problem.margin", "must be positive");
  if (pr.noise < 0.0) P.error("problem.noise", "must be nonnegative");
  if (pr.x0_scale < 0.0) P.error("problem.x0_scale", "must be nonnegative");
  if (!pr.instance_path.empty() && streaming) P.error("problem.instance", "streaming problems cannot be loaded from a file");

  if (al.K < 1) P.error("algorithm.K", "must be at least 1");
  if (!(al.eta_scale > 0.0)) P.error("algorithm.eta_scale", "must be positive");
  if (al.eta && !(*al.eta > 0.0)) P.error("algorithm.eta", "must be positive");
  if (al.mu && !(*al.mu > 0.0)) P.error("algorithm.mu", "must be positive");

  if (!cfg.stochastic()) {
    for (const char* k : {"algorithm.p", "algorithm.b", "algorithm.bprime", "algorithm.sample_sharing", "algorithm.schedule"})
      if (P.has(k)) P.error(k, "only used by stochastic algorithms");
    if (streaming) P.error("algorithm.name", to_string(al.name) + " needs exact gradients of a finite sum");
  } else {
    if (al.name == AlgoName::sccd || al.name == AlgoName::sgd) {
      if (P.has("algorithm.p") && al.p != 1.0) P.error("algorithm.p", to_string(al.name) + " forces p = 1");
      al.p = 1.0;
      if (!P.has("algorithm.bprime")) al.bprime = std::max<std::uint64_t>(1, std::min(al.bprime, al.b));
    }
    if (al.name == AlgoName::vroccd) {
      if (P.has("algorithm.sample_sharing") && al.sharing != SampleSharing::shared_per_cycle)
        P.error("algorithm.sample_sharing", "vroccd shares samples across the cycle");
      al.sharing = SampleSharing::shared_per_cycle;
    }
    if (al.finite_sum_schedule) {
      if (streaming) P.error("algorithm.schedule", "finite_sum needs a finite n");
      if (P.has("algorithm.b") && al.b != pr.n) P.error("algorithm.b", "finite_sum schedule sets b = n");
      if (P.has("algorithm.p")) P.error("algorithm.p", "finite_sum schedule derives p = b'/(b+b')");
      al.b = pr.n;
      if (!P.has("algorithm.bprime"))
        al.bprime = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(std::sqrt(static_cast<double>(pr.n)))));
      al.p = static_cast<double>(al.bprime) / static_cast<double>(al.b + al.bprime);
    }
    const bool p_ok = (al.p > 0.0 && al.p <= 1.0) || (al.p == 0.0 && al.eta_override);
    if (!p_ok) P.error("algorithm.p", "must satisfy p in (0,1] (p = 0 only with eta_override and an explicit eta)");
    if (al.p == 0.0 && !al.eta) P.error("algorithm.eta", "p = 0 needs an explicit eta");
    if (al.b < 1) P.error("algorithm.b", "must be at least 1");
    if (al.bprime < 1 || al.bprime > al.b) P.error("algorithm.bprime", "must satisfy 1 <= b' <= b");
    if (!streaming && al.b > pr.n) P.error("algorithm.b", "must not exceed n");
  }

  // metric
  if (la.mode == LambdaMode::exact_quadratic && !quadratic_like)
    P.error("lambda.mode", "exact_quadratic needs a quadratic problem; use explicit values or backtracking");
  if (la.mode == LambdaMode::backtracking && cfg.stochastic())
    P.error("lambda.mode", "backtracking is only available for pccd and prox_gd");
  if (la.mode == LambdaMode::explicit_values) {
    const auto count = static_cast<Index>(la.values.size());
    if (count != 1 && count != pr.m) P.error("lambda.values", "give one value or one per block");
    for (double v : la.values)
      if (!(v > 0.0)) P.error("lambda.values", "metric values must be positive");
  } else if (P.has("lambda.values")) {
    P.error("lambda.values", "only used with lambda.mode = explicit");
  }
  if (!(la.growth > 1.0)) P.error("lambda.growth", "must exceed 1");
  if (!(la.init > 0.0)) P.error("lambda.init", "must be positive");

  const bool L_computable = quadratic_like && la.mode == LambdaMode::exact_quadratic;
  const bool L_supplied = cfg.smoothness.L_hat && cfg.smoothness.L_tilde;
  if (cfg.stochastic() && !al.eta && !L_computable && !L_supplied)
    P.error("algorithm.eta", "auto needs L_hat and L_tilde: use lambda.mode = exact_quadratic on a quadratic or supply smoothness.L_hat and smoothness.L_tilde");
  if (al.step_rule == StepMode::corollary4_pl && !al.mu &&
      !(pr.family == Family::quadratic && pr.convex && la.mode != LambdaMode::backtracking))
    P.error("algorithm.mu", "the PL step rule needs mu; auto is only available for convex quadratics");

  if (cfg.seed_count < 1) P.error("seeds.count", "must be at least 1");
  if (cfg.record_u && streaming) P.error("diagnostics.record_u", "u_k needs full gradients of a finite sum");
  if (cfg.sigma_sq && *cfg.sigma_sq < 0.0) P.error("diagnostics.sigma_sq", "must be nonnegative");

  static const std::set<std::string> det_checks = {"descent", "lemma2", "lemma3", "theorem1", "corollary1"};
  static const std::set<std::string> u_checks = {"lemma5", "lemma6", "potential"};
  for (const auto& c : cfg.checks) {
    if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end()) {
      P.error("diagnostics.checks", "unknown check '" + c + "'");
      continue;
    }
    if (det_checks.count(c) && cfg.stochastic())
      P.error("diagnostics.checks", c + " applies to pccd and prox_gd runs");
    if (!det_checks.count(c) && !cfg.stochastic())
      P.error("diagnostics.checks", c + " applies to stochastic runs");
    if (u_checks.count(c) && !cfg.record_u)
      P.error("diagnostics.checks", c + " needs diagnostics.record_u = true");
  }
  if (cfg.trace_path.empty()) P.error("output.trace_path", "must not be empty");

  if (!P.issues.empty()) {
    std::stable_sort(P.issues.begin(), P.issues.end(),
                     [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
    throw ConfigError(std::move(P.issues));
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path,
                                   const std::map<std::string, std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

}  // namespace bcd
