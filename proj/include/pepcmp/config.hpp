#pragma once

// Experiment configuration files.
//
//   # comment
//   name = primal_rho0.9
//   [problem]
//   structure = sum            # sum | composite | primal-dual
//   alpha = 1                  # f in F_{rho, 1/alpha}
//   beta = 5                   # g in F_{mu, 1/beta}          (sum)
//   gamma = 5                  # h in F_{delta, 1/gamma}      (composite)
//   rho = 0.9
//   mu = 0
//   delta = 0, 0.1             # a list sweeps every value
//   Lop = 1
//   lambda = 1                 # g -> lambda g
//   [sweep]
//   methods = GM, FBS1, FBS2, PRS, DRS
//   engines = pep, closed_form, quad_oracle
//   tau_grid = log(0.01, 100, 50)      # or linear(lo, hi, n) or a list
//   tau_grid.DRS = 1, 2, 3             # per-method override
//   sigma_rule = auto                  # auto | cpm_boundary | cvm_boundary | <number>
//   axis = log                         # log | linear, for plots
//   [best]
//   tau_min = 0.1
//   tau_max = 10
//
// Problem keys given as lists expand into the cartesian product of variants.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pepcmp/core_model.hpp"

namespace pepcmp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// g = lambda h scales both moduli.
inline FunctionClass rescale_class(const FunctionClass& c, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("rescale_class: lambda must be > 0");
  return FunctionClass(lambda * c.mu(), lambda * c.L());
}

enum class Engine { Pep, ClosedForm, QuadOracle };

inline std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::Pep: return "pep";
    case Engine::ClosedForm: return "closed_form";
    case Engine::QuadOracle: return "quad_oracle";
  }
  return "?";
}

enum class Structure { Sum, Composite };

struct SigmaRule {
  enum class Kind { Auto, CpmBoundary, CvmBoundary, Constant } kind = Kind::Auto;
  double value = 0.0;

  /// sigma for `kind` at `tau`; nullopt for primal methods.
  std::optional<double> sigma(MethodKind method, double tau, const Problem& problem) const {
    if (!is_primal_dual(method)) return std::nullopt;
    const auto& cp = std::get<CompositeProblem>(problem);
    const double L2 = cp.op.L_op() * cp.op.L_op();
    Kind k = kind;
    if (k == Kind::Auto) k = method == MethodKind::CPM ? Kind::CpmBoundary : Kind::CvmBoundary;
    switch (k) {
      case Kind::CpmBoundary: return 1.0 / (tau * L2);
      case Kind::CvmBoundary: return (1.0 / tau - 0.5 * cp.f_class.L()) / L2;
      default: return value;
    }
  }
};

/// One concrete problem of the sweep plus the label suffix naming it.
struct Variant {
  std::string label;  // empty when nothing varies, else "[key=value;...]"
  Structure structure = Structure::Sum;
  Problem problem;
};

struct BestSearch {
  double tau_min = 0.0;
  double tau_max = 0.0;
  int grid = 40;
  double resolution = 1e-4;
  std::vector<MethodKind> methods;
};

struct ExperimentConfig {
  std::string name = "sweep";
  std::vector<Variant> variants;
  std::vector<MethodKind> methods;
  std::vector<Engine> engines{Engine::Pep};
  std::vector<double> tau_grid;
  std::map<MethodKind, std::vector<double>> method_grids;
  SigmaRule sigma_rule;
  std::map<MethodKind, SigmaRule> method_sigma;
  int k_steps = 1;
  bool log_axis = true;
  double tol = 1e-8;
  int quad_grid = 41;
  std::optional<BestSearch> best;

  const std::vector<double>& grid_for(MethodKind m) const {
    auto it = method_grids.find(m);
    return it == method_grids.end() ? tau_grid : it->second;
  }
  const SigmaRule& sigma_for(MethodKind m) const {
    auto it = method_sigma.find(m);
    return it == method_sigma.end() ? sigma_rule : it->second;
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back({});
  return out;
}

inline double number(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return kInf;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || std::isnan(v)) {
    throw ConfigError(where + ": expected a number, got '" + t + "'");
  }
  return v;
}

inline std::vector<double> numbers(const std::string& text, const std::string& where) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(number(part, where));
  return out;
}

inline std::vector<double> parse_grid(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  auto call = [&](const char* fn) -> std::optional<std::vector<double>> {
    const std::string f(fn);
    if (t.rfind(f + "(", 0) != 0 || t.back() != ')') return std::nullopt;
    return numbers(t.substr(f.size() + 1, t.size() - f.size() - 2), where);
  };
  std::vector<double> grid;
  if (auto args = call("log")) {
    if (args->size() != 3) throw ConfigError(where + ": log(lo, hi, n) takes 3 arguments");
    const double lo = (*args)[0], hi = (*args)[1];
    const int n = static_cast<int>((*args)[2]);
    if (!(lo > 0.0) || !(hi > lo) || n < 2 || (*args)[2] != n) {
      throw ConfigError(where + ": log grid needs 0 < lo < hi and integer n >= 2");
    }
    for (int i = 0; i < n; ++i) grid.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
    grid.back() = hi;
  } else if (auto args = call("linear")) {
    if (args->size() != 3) throw ConfigError(where + ": linear(lo, hi, n) takes 3 arguments");
    const double lo = (*args)[0], hi = (*args)[1];
    const int n = static_cast<int>((*args)[2]);
    if (!(lo > 0.0) || !(hi > lo) || n < 2 || (*args)[2] != n) {
      throw ConfigError(where + ": linear grid needs 0 < lo < hi and integer n >= 2");
    }
    for (int i = 0; i < n; ++i) grid.push_back(lo + (hi - lo) * double(i) / (n - 1));
  } else {
    grid = numbers(t, where);
  }
  for (size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) throw ConfigError(where + ": tau values must be finite and > 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError(where + ": tau grid must be strictly increasing");
  }
  return grid;
}

inline MethodKind method(const std::string& text, const std::string& where) {
  auto m = parse_method(trim(text));
  if (!m) throw ConfigError(where + ": unknown method '" + trim(text) + "'");
  return *m;
}

inline std::vector<MethodKind> methods(const std::string& text, const std::string& where) {
  std::vector<MethodKind> out;
  for (const auto& part : split(text, ',')) {
    const MethodKind m = method(part, where);
    for (MethodKind seen : out) {
      if (seen == m) throw ConfigError(where + ": method listed twice");
    }
    out.push_back(m);
  }
  return out;
}

inline SigmaRule sigma_rule(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  if (t == "auto") return {};
  if (t == "cpm_boundary") return {SigmaRule::Kind::CpmBoundary, 0.0};
  if (t == "cvm_boundary") return {SigmaRule::Kind::CvmBoundary, 0.0};
  const double v = number(t, where);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(where + ": sigma must be finite and > 0");
  return {SigmaRule::Kind::Constant, v};
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Keys of [problem], in the order they expand into variants.
inline const std::vector<std::string>& problem_keys() {
  static const std::vector<std::string> keys{"structure", "alpha", "beta", "gamma", "rho",
                                             "mu",        "delta", "Lop",  "lambda"};
  return keys;
}

inline FunctionClass make_class(double strong, double inv_smooth, const std::string& what) {
  // inv_smooth is alpha, beta or gamma; 0 encodes a nonsmooth function.
  if (!(inv_smooth >= 0.0) || std::isinf(inv_smooth)) throw ConfigError(what + ": parameter must be finite and >= 0");
  const double L = inv_smooth == 0.0 ? kInf : 1.0 / inv_smooth;
  try {
    return FunctionClass(strong, L);
  } catch (const InvalidArgument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

inline Variant build_variant(const std::map<std::string, std::string>& v) {
  auto get = [&](const std::string& key) -> std::optional<double> {
    auto it = v.find(key);
    if (it == v.end()) return std::nullopt;
    return number(it->second, "[problem] " + key);
  };
  auto need = [&](const std::string& key, const std::string& why) {
    auto x = get(key);
    if (!x) throw ConfigError("[problem] " + key + " is required for " + why);
    return *x;
  };
  const std::string structure = v.count("structure") ? v.at("structure") : "sum";
  Structure kind;
  if (structure == "sum") {
    kind = Structure::Sum;
  } else if (structure == "composite" || structure == "primal-dual") {
    kind = Structure::Composite;
  } else {
    throw ConfigError("[problem] structure: expected sum, composite or primal-dual");
  }
  const double rho = get("rho").value_or(0.0);
  const FunctionClass f = make_class(rho, need("alpha", "every problem"), "f class (rho, alpha)");
  const double lambda = get("lambda").value_or(1.0);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("[problem] lambda must be finite and > 0");
  if (kind == Structure::Sum) {
    const FunctionClass g = make_class(get("mu").value_or(0.0), need("beta", "a sum problem"), "g class (mu, beta)");
    return Variant{"", kind, SumProblem{f, rescale_class(g, lambda)}};
  }
  const FunctionClass h =
      make_class(get("delta").value_or(0.0), need("gamma", "a composite problem"), "h class (delta, gamma)");
  const double Lop = get("Lop").value_or(1.0);
  if (!(Lop > 0.0) || !std::isfinite(Lop)) throw ConfigError("[problem] Lop must be finite and > 0");
  return Variant{"", kind, CompositeProblem{f, rescale_class(h, lambda), OperatorBound(Lop)}};
}

}  // namespace config_detail

/// Parses configuration text; `origin` prefixes error messages.
inline ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config") {
  using namespace config_detail;
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string section;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  auto where = [&](const std::string& msg) { return origin + ":" + std::to_string(lineno) + ": " + msg; };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where("malformed section header"));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "sweep" && section != "best") {
        throw ConfigError(where("unknown section [" + section + "]"));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where("expected 'key = value'"));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where("empty key or value"));
    if (!sections[section].emplace(key, value).second) throw ConfigError(where("duplicate key '" + key + "'"));
  }

  ExperimentConfig cfg;
  for (const auto& [key, value] : sections[""]) {
    if (key != "name") throw ConfigError(origin + ": unknown top-level key '" + key + "'");
    cfg.name = value;
  }

  // [problem]: expand list-valued keys into variants.
  const auto& prob = sections["problem"];
  for (const auto& [key, value] : prob) {
    bool known = false;
    for (const auto& k : problem_keys()) known = known || k == key;
    if (!known) throw ConfigError(origin + ": unknown key '" + key + "' in [problem]");
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& key : problem_keys()) {
    auto it = prob.find(key);
    if (it != prob.end()) axes.emplace_back(key, split(it->second, ','));
  }
  std::vector<std::map<std::string, std::string>> combos{{}};
  std::vector<std::vector<std::string>> labels{{}};
  for (const auto& [key, values] : axes) {
    std::vector<std::map<std::string, std::string>> next;
    std::vector<std::vector<std::string>> next_labels;
    for (size_t c = 0; c < combos.size(); ++c) {
      for (const auto& v : values) {
        if (v.empty()) throw ConfigError(origin + ": empty value in [problem] " + key);
        auto m = combos[c];
        m[key] = v;
        auto l = labels[c];
        if (values.size() > 1) l.push_back(key + "=" + v);
        next.push_back(std::move(m));
        next_labels.push_back(std::move(l));
      }
    }
    combos = std::move(next);
    labels = std::move(next_labels);
  }
  for (size_t c = 0; c < combos.size(); ++c) {
    Variant v = build_variant(combos[c]);
    if (!labels[c].empty()) {
      v.label = "[";
      for (size_t i = 0; i < labels[c].size(); ++i) v.label += (i ? ";" : "") + labels[c][i];
      v.label += "]";
    }
    cfg.variants.push_back(std::move(v));
  }

  // [sweep]
  bool have_grid = false;
  for (const auto& [key, value] : sections["sweep"]) {
    const std::string w = origin + ": [sweep] " + key;
    if (key == "methods") {
      cfg.methods = methods(value, w);
    } else if (key == "engines") {
      cfg.engines.clear();
      for (const auto& e : split(value, ',')) {
        Engine eng;
        if (e == "pep") eng = Engine::Pep;
        else if (e == "closed_form") eng = Engine::ClosedForm;
        else if (e == "quad_oracle") eng = Engine::QuadOracle;
        else throw ConfigError(w + ": unknown engine '" + e + "'");
        for (Engine seen : cfg.engines) {
          if (seen == eng) throw ConfigError(w + ": engine listed twice");
        }
        cfg.engines.push_back(eng);
      }
    } else if (key == "tau_grid") {
      cfg.tau_grid = parse_grid(value, w);
      have_grid = true;
    } else if (key.rfind("tau_grid.", 0) == 0) {
      cfg.method_grids[method(key.substr(9), w)] = parse_grid(value, w);
    } else if (key == "sigma_rule") {
      cfg.sigma_rule = sigma_rule(value, w);
    } else if (key.rfind("sigma_rule.", 0) == 0) {
      cfg.method_sigma[method(key.substr(11), w)] = sigma_rule(value, w);
    } else if (key == "k_steps") {
      const double k = number(value, w);
      if (k < 1 || k != std::floor(k) || k > 100) throw ConfigError(w + ": expected an integer in [1, 100]");
      cfg.k_steps = static_cast<int>(k);
    } else if (key == "axis") {
      if (value != "log" && value != "linear") throw ConfigError(w + ": expected log or linear");
      cfg.log_axis = value == "log";
    } else if (key == "tol") {
      cfg.tol = number(value, w);
      if (!(cfg.tol > 0.0) || cfg.tol >= 1e-2) throw ConfigError(w + ": expected 0 < tol < 1e-2");
    } else if (key == "quad_grid") {
      const double n = number(value, w);
      if (n < 2 || n != std::floor(n) || n > 1000) throw ConfigError(w + ": expected an integer in [2, 1000]");
      cfg.quad_grid = static_cast<int>(n);
    } else {
      throw ConfigError(origin + ": unknown key '" + key + "' in [sweep]");
    }
  }
  if (cfg.methods.empty()) throw ConfigError(origin + ": [sweep] methods is required");
  if (!have_grid) cfg.tau_grid = parse_grid("log(0.01, 100, 50)", "default tau_grid");
  for (const auto& [m, grid] : cfg.method_grids) {
    (void)grid;
    bool listed = false;
    for (MethodKind k : cfg.methods) listed = listed || k == m;
    if (!listed) throw ConfigError(origin + ": tau_grid." + std::string(to_string(m)) + " for an unlisted method");
  }
  for (const auto& v : cfg.variants) {
    for (MethodKind m : cfg.methods) {
      if (is_primal_dual(m) && v.structure != Structure::Composite) {
        throw ConfigError(origin + ": " + std::string(to_string(m)) + " needs structure = composite or primal-dual");
      }
    }
  }

  // [best]
  if (sections.count("best")) {
    BestSearch b;
    b.methods = cfg.methods;
    bool have_min = false, have_max = false;
    for (const auto& [key, value] : sections["best"]) {
      const std::string w = origin + ": [best] " + key;
      if (key == "tau_min") {
        b.tau_min = number(value, w);
        have_min = true;
      } else if (key == "tau_max") {
        b.tau_max = number(value, w);
        have_max = true;
      } else if (key == "grid") {
        const double n = number(value, w);
        if (n < 3 || n != std::floor(n) || n > 10000) throw ConfigError(w + ": expected an integer in [3, 10000]");
        b.grid = static_cast<int>(n);
      } else if (key == "resolution") {
        b.resolution = number(value, w);
        if (!(b.resolution > 0.0) || b.resolution >= 1.0) throw ConfigError(w + ": expected 0 < resolution < 1");
      } else if (key == "methods") {
        b.methods = methods(value, w);
      } else {
        throw ConfigError(origin + ": unknown key '" + key + "' in [best]");
      }
    }
    if (!have_min || !have_max) throw ConfigError(origin + ": [best] needs tau_min and tau_max");
    if (!(b.tau_min > 0.0) || !std::isfinite(b.tau_max)) {
      throw ConfigError(origin + ": [best] needs 0 < tau_min and finite tau_max");
    }
    for (MethodKind m : b.methods) {
      if (is_primal_dual(m)) {
        for (const auto& v : cfg.variants) {
          if (v.structure != Structure::Composite) {
            throw ConfigError(origin + ": [best] " + std::string(to_string(m)) + " needs a composite problem");
          }
        }
      }
    }
    cfg.best = b;
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// FNV-1a 64 over a canonical rendering of the problem parameters.
inline std::uint64_t fingerprint(const Problem& problem) {
  std::string canon;
  auto cls = [&](const char* tag, const FunctionClass& c) {
    canon += std::string(tag) + "(" + config_detail::format_number(c.mu()) + "," +
             config_detail::format_number(c.L()) + ")";
  };
  if (const auto* sp = std::get_if<SumProblem>(&problem)) {
    canon = "sum:";
    cls("f", sp->f_class);
    cls("g", sp->g_class);
  } else {
    const auto& cp = std::get<CompositeProblem>(problem);
    canon = "composite:";
    cls("f", cp.f_class);
    cls("h", cp.h_class);
    canon += "op(" + config_detail::format_number(cp.op.L_op()) + ")";
  }
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace pepcmp
