#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evosemi/evosemi.hpp"
#include "evosemi/expression.hpp"

namespace evosemi::cli {

using json = nlohmann::json;

inline const std::vector<std::string>& pipeline_order() {
  static const std::vector<std::string> order{
      "classify-semiflow", "recover-mu",        "check-family",
      "fit-growth-bound",  "check-semigroup",   "check-similarity",
      "certify-dichotomy", "solve-green",       "verify-integral-equation"};
  return order;
}

inline std::map<std::string, double> default_tolerances() {
  return {{"axioms", 1e-8},     {"recover", 1e-6},       {"cocycle", 1e-6},
          {"semigroup", 1e-3},  {"continuity", 1e-3},    {"similarity", 1e-10},
          {"compatibility", 1e-8}, {"integral", 1e-6}};
}

[[noreturn]] inline void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, path + ": " + msg);
}

struct Scenario {
  std::string name;
  std::filesystem::path base_dir;
  Interval window{-10.0, 10.0};
  std::uint64_t seed = 7;
  std::size_t pairs = 1000;
  std::size_t output_nodes = 201;

  std::optional<GrowthRate> mu;
  std::string mu_label;
  std::optional<RealSemiflow> flow;
  std::string flow_label;
  std::optional<EvolutionFamily> family;
  std::string family_label;
  std::optional<ProjectionField> projection;
  std::string projection_label;
  std::optional<InferenceOptions> infer;

  std::map<std::string, GridFunction> functions;
  std::optional<std::string> forcing;
  std::optional<std::string> probe;
  std::vector<std::string> pipelines;
  std::map<std::string, double> tolerances = default_tolerances();

  std::size_t dim() const { return family ? family->dim() : 0; }
  bool wants(const std::string& p) const {
    return std::find(pipelines.begin(), pipelines.end(), p) != pipelines.end();
  }
};

namespace detail {

inline void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) config_error(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known |= k == key;
    if (!known) config_error(path.empty() ? k : path + "." + k, "unknown field");
  }
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  return j.get<double>();
}

inline std::size_t count(const json& j, const std::string& path, std::size_t min) {
  if (!j.is_number_integer() || j.get<long long>() < static_cast<long long>(min)) {
    config_error(path, "expected an integer >= " + std::to_string(min));
  }
  return j.get<std::size_t>();
}

inline std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) config_error(path, "expected a string");
  return j.get<std::string>();
}

inline Interval interval(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) config_error(path, "expected [lo, hi]");
  const Interval w{number(j[0], path + "[0]"), number(j[1], path + "[1]")};
  if (!(w.lo < w.hi)) config_error(path, "expected lo < hi");
  return w;
}

inline expr::Expression expression(const json& j, const std::string& path, unsigned vars,
                                   const GrowthRate* mu) {
  const std::string src = text(j, path);
  try {
    return expr::Expression::parse(src, vars, mu);
  } catch (const Error& e) {
    config_error(path, e.what());
  }
}

/// Comma-separated numeric table with a one-line header.
inline std::vector<std::vector<double>> read_csv(const std::filesystem::path& file, const std::string& path,
                                                 std::size_t min_columns) {
  std::ifstream in(file);
  if (!in) config_error(path, "cannot open " + file.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        config_error(path, file.filename().string() + " line " + std::to_string(lineno) + ": not a number");
      }
    }
    if (row.size() < min_columns || (!rows.empty() && row.size() != rows.front().size())) {
      config_error(path, file.filename().string() + " line " + std::to_string(lineno) + ": wrong column count");
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) config_error(path, file.filename().string() + ": needs at least two rows");
  return rows;
}

inline GrowthRate growth_rate(const json& j, const std::string& path, const Scenario& sc, std::string& label) {
  only_keys(j, path, {"catalog", "n", "density", "window", "table"});
  const int kinds = j.contains("catalog") + j.contains("density") + j.contains("table");
  if (kinds != 1) config_error(path, "give exactly one of catalog, density, table");
  if (j.contains("catalog")) {
    const std::string name = text(j["catalog"], join(path, "catalog"));
    label = name;
    if (name == "identity") return growth::identity();
    if (name == "polynomial_log") return growth::polynomial_log();
    if (name == "neg_exp") return growth::neg_exp();
    if (name == "odd_power") {
      if (!j.contains("n")) config_error(join(path, "n"), "odd_power needs n");
      const auto n = count(j["n"], join(path, "n"), 0);
      label = "odd_power(" + std::to_string(n) + ")";
      return growth::odd_power(static_cast<int>(n));
    }
    config_error(join(path, "catalog"), "unknown growth rate '" + name + "'");
  }
  if (j.contains("density")) {
    const auto rho = expression(j["density"], join(path, "density"), expr::kT | expr::kS, nullptr);
    RateDensityOptions opt;
    if (j.contains("window")) opt.window = interval(j["window"], join(path, "window"));
    label = "density " + rho.text();
    try {
      return from_rate_density([rho](double t) { return rho(expr::Vars{t, t, t}); }, opt);
    } catch (const Error& e) {
      config_error(join(path, "density"), e.what());
    }
  }
  const auto file = sc.base_dir / text(j["table"], join(path, "table"));
  const auto rows = read_csv(file, join(path, "table"), 2);
  std::vector<double> s, m;
  for (const auto& r : rows) {
    s.push_back(r[0]);
    m.push_back(r[1]);
  }
  label = "table " + file.filename().string();
  try {
    return growth::tabulated(std::move(s), std::move(m), label);
  } catch (const std::exception& e) {
    config_error(join(path, "table"), e.what());
  }
}

inline std::vector<std::vector<expr::Expression>> matrix(const json& j, const std::string& path, unsigned vars,
                                                         const GrowthRate* mu) {
  if (!j.is_array() || j.empty()) config_error(path, "expected a non-empty square array of expressions");
  const std::size_t n = j.size();
  std::vector<std::vector<expr::Expression>> m;
  for (std::size_t r = 0; r < n; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != n) config_error(rp, "expected " + std::to_string(n) + " entries");
    std::vector<expr::Expression> row;
    for (std::size_t c = 0; c < n; ++c) {
      row.push_back(expression(j[r][c], rp + "[" + std::to_string(c) + "]", vars, mu));
    }
    m.push_back(std::move(row));
  }
  return m;
}

inline Matrix eval_matrix(const std::vector<std::vector<expr::Expression>>& m, const expr::Vars& v) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Matrix out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = m[r][c](v);
  }
  return out;
}

inline EvolutionFamily family(const json& j, const std::string& path, const GrowthRate& mu, std::string& label) {
  only_keys(j, path, {"kind", "matrix", "coefficient", "rtol", "atol"});
  const std::string kind = j.contains("kind") ? text(j["kind"], join(path, "kind")) : "closed_form";
  if (kind == "closed_form") {
    if (!j.contains("matrix")) config_error(join(path, "matrix"), "required for closed_form");
    auto m = matrix(j["matrix"], join(path, "matrix"), expr::kT | expr::kS, &mu);
    label = "closed_form";
    return EvolutionFamily::closed_form(m.size(), [m](double t, double s) {
      return eval_matrix(m, expr::Vars{t, s, 0.0});
    }, label);
  }
  if (kind == "ode") {
    if (!j.contains("coefficient")) config_error(join(path, "coefficient"), "required for ode");
    auto m = matrix(j["coefficient"], join(path, "coefficient"), expr::kT, &mu);
    ::evosemi::detail::IntegratorOptions opt;
    if (j.contains("rtol")) opt.rtol = number(j["rtol"], join(path, "rtol"));
    if (j.contains("atol")) opt.atol = number(j["atol"], join(path, "atol"));
    if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) config_error(path, "integrator tolerances must be positive");
    label = "ode";
    return EvolutionFamily::ode(m.size(), [m](double t) { return eval_matrix(m, expr::Vars{t, 0.0, 0.0}); },
                                opt, label);
  }
  config_error(join(path, "kind"), "expected closed_form or ode");
}

inline GridFunction function(const json& j, const std::string& path, const Scenario& sc) {
  only_keys(j, path, {"components", "support", "nodes", "table"});
  if (j.contains("table") == j.contains("components")) config_error(path, "give exactly one of components, table");
  GridFunction g = [&] {
    if (j.contains("table")) {
      const auto file = sc.base_dir / text(j["table"], join(path, "table"));
      const auto rows = read_csv(file, join(path, "table"), 2);
      std::vector<double> x;
      std::vector<Vector> v;
      for (const auto& r : rows) {
        x.push_back(r[0]);
        v.push_back(Eigen::Map<const Vector>(r.data() + 1, static_cast<Eigen::Index>(r.size() - 1)));
      }
      try {
        return GridFunction(std::move(x), std::move(v));
      } catch (const std::exception& e) {
        config_error(join(path, "table"), e.what());
      }
    }
    const auto& comps = j["components"];
    if (!comps.is_array() || comps.empty()) config_error(join(path, "components"), "expected a list of expressions");
    std::vector<expr::Expression> c;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      c.push_back(expression(comps[i], join(path, "components") + "[" + std::to_string(i) + "]",
                             expr::kT | expr::kXi, sc.mu ? &*sc.mu : nullptr));
    }
    if (!j.contains("support")) config_error(join(path, "support"), "required with components");
    const Interval w = interval(j["support"], join(path, "support"));
    const std::size_t n = j.contains("nodes") ? count(j["nodes"], join(path, "nodes"), 2) : 201;
    return GridFunction::sample(uniform_nodes(w, n), [&](double x) {
      Vector v(static_cast<Eigen::Index>(c.size()));
      for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<Eigen::Index>(i)) = c[i](expr::Vars{x, 0.0, x});
      return v;
    });
  }();
  if (static_cast<std::size_t>(g.dim()) != sc.dim()) {
    config_error(path, "has " + std::to_string(g.dim()) + " components, family dimension is " +
                           std::to_string(sc.dim()));
  }
  return g;
}

inline void projection(const json& j, const std::string& path, Scenario& sc) {
  only_keys(j, path, {"matrix", "table", "infer"});
  const int kinds = j.contains("matrix") + j.contains("table") + j.contains("infer");
  if (kinds != 1) config_error(path, "give exactly one of matrix, table, infer");
  const std::size_t n = sc.dim();
  if (j.contains("matrix")) {
    auto m = matrix(j["matrix"], join(path, "matrix"), expr::kT, &*sc.mu);
    if (m.size() != n) config_error(join(path, "matrix"), "size differs from the family dimension");
    sc.projection = ProjectionField::closed_form(n, [m](double t) { return eval_matrix(m, expr::Vars{t, 0.0, 0.0}); },
                                                 "closed_form");
    sc.projection_label = "closed_form";
  } else if (j.contains("table")) {
    const auto file = sc.base_dir / text(j["table"], join(path, "table"));
    const auto rows = read_csv(file, join(path, "table"), 1 + n * n);
    if (rows.front().size() != 1 + n * n) config_error(join(path, "table"), "expected t plus n*n row-major entries");
    std::vector<double> t;
    std::vector<Matrix> mats;
    for (const auto& r : rows) {
      t.push_back(r[0]);
      Matrix P(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t k = 0; k < n * n; ++k) {
        P(static_cast<Eigen::Index>(k / n), static_cast<Eigen::Index>(k % n)) = r[1 + k];
      }
      mats.push_back(P);
    }
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (!(t[i] > t[i - 1])) config_error(join(path, "table"), "times must increase");
    }
    sc.projection = ProjectionField::tabulated(std::move(t), std::move(mats), "table");
    sc.projection_label = "table " + file.filename().string();
  } else {
    const auto& o = j["infer"];
    const std::string ip = join(path, "infer");
    only_keys(o, ip, {"horizon", "nodes", "gap"});
    InferenceOptions opt;
    if (o.contains("horizon")) opt.horizon = number(o["horizon"], join(ip, "horizon"));
    if (o.contains("nodes")) opt.nodes = count(o["nodes"], join(ip, "nodes"), 2);
    if (o.contains("gap")) opt.gap = number(o["gap"], join(ip, "gap"));
    sc.infer = opt;
    sc.projection_label = "inferred";
  }
}

}  // namespace detail

/// Parses a scenario document. `base_dir` resolves table paths.
inline Scenario load_scenario(const json& j, const std::filesystem::path& base_dir) {
  using namespace detail;
  Scenario sc;
  sc.base_dir = base_dir;
  only_keys(j, "", {"name", "window", "seed", "pairs", "output_nodes", "growth_rate", "semiflow", "family",
                    "projection", "functions", "forcing", "probe", "pipelines", "tolerances"});
  if (!j.contains("name")) config_error("name", "required");
  sc.name = text(j["name"], "name");
  if (sc.name.empty() || sc.name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-") !=
                             std::string::npos) {
    config_error("name", "use letters, digits, '.', '_' or '-'");
  }
  if (j.contains("window")) sc.window = interval(j["window"], "window");
  if (j.contains("seed")) sc.seed = count(j["seed"], "seed", 0);
  if (j.contains("pairs")) sc.pairs = count(j["pairs"], "pairs", 1);
  if (j.contains("output_nodes")) sc.output_nodes = count(j["output_nodes"], "output_nodes", 2);

  if (!j.contains("growth_rate")) config_error("growth_rate", "required");
  sc.mu = growth_rate(j["growth_rate"], "growth_rate", sc, sc.mu_label);

  sc.flow = RealSemiflow::generated(*sc.mu);
  sc.flow_label = "generated by " + sc.mu_label;
  if (j.contains("semiflow")) {
    const auto& f = j["semiflow"];
    only_keys(f, "semiflow", {"kind", "expression"});
    const std::string kind = f.contains("kind") ? text(f["kind"], "semiflow.kind") : "generated";
    if (kind == "closed_form") {
      if (!f.contains("expression")) config_error("semiflow.expression", "required for closed_form");
      const auto e = expression(f["expression"], "semiflow.expression", expr::kT | expr::kS, &*sc.mu);
      sc.flow = RealSemiflow::closed_form([e](double t, double s) { return e(t, s); }, "closed_form");
      sc.flow_label = "closed_form " + e.text();
    } else if (kind != "generated") {
      config_error("semiflow.kind", "expected generated or closed_form");
    } else if (f.contains("expression")) {
      config_error("semiflow.expression", "only valid for closed_form");
    }
  }

  if (!j.contains("family")) config_error("family", "required");
  sc.family = family(j["family"], "family", *sc.mu, sc.family_label);

  if (j.contains("projection")) projection(j["projection"], "projection", sc);

  if (j.contains("functions")) {
    if (!j["functions"].is_object()) config_error("functions", "expected an object");
    for (const auto& [k, v] : j["functions"].items()) sc.functions.emplace(k, function(v, "functions." + k, sc));
  }
  for (const char* key : {"forcing", "probe"}) {
    if (!j.contains(key)) continue;
    const std::string ref = text(j[key], key);
    if (!sc.functions.count(ref)) config_error(key, "refers to undeclared function '" + ref + "'");
    (std::string(key) == "forcing" ? sc.forcing : sc.probe) = ref;
  }

  if (j.contains("pipelines")) {
    const auto& p = j["pipelines"];
    if (!p.is_array()) config_error("pipelines", "expected a list");
    std::set<std::string> wanted;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string path = "pipelines[" + std::to_string(i) + "]";
      const std::string name = text(p[i], path);
      const auto& order = pipeline_order();
      if (std::find(order.begin(), order.end(), name) == order.end()) {
        config_error(path, "unknown pipeline '" + name + "'");
      }
      wanted.insert(name);
    }
    for (const auto& name : pipeline_order()) {
      if (wanted.count(name)) sc.pipelines.push_back(name);
    }
  } else {
    sc.pipelines = pipeline_order();
  }

  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    if (!t.is_object()) config_error("tolerances", "expected an object");
    for (const auto& [k, v] : t.items()) {
      if (!sc.tolerances.count(k)) config_error("tolerances." + k, "unknown tolerance");
      const double x = number(v, "tolerances." + k);
      if (!(x > 0.0)) config_error("tolerances." + k, "must be positive");
      sc.tolerances[k] = x;
    }
  }

  const bool needs_projection = sc.wants("certify-dichotomy") || sc.wants("solve-green") ||
                                sc.wants("verify-integral-equation");
  if (needs_projection && !sc.projection && !sc.infer) {
    config_error("projection", "required by the dichotomy pipelines");
  }
  if ((sc.wants("solve-green") || sc.wants("verify-integral-equation")) && !sc.forcing) {
    config_error("forcing", "required by solve-green and verify-integral-equation");
  }
  return sc;
}

inline Scenario load_scenario_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::ConfigError, file.string() + ": cannot open");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, file.string() + ": " + e.what());
  }
  return load_scenario(j, file.parent_path());
}

}  // namespace evosemi::cli
