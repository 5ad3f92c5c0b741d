// Command-line driver: constants, verify, sharpness, minimize, critical-demo, nd-verify.

#include <CLI11.hpp>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hardy/geom.hpp"
#include "hardy/ineq1d.hpp"
#include "hardy/ledger.hpp"
#include "hardy/varmin.hpp"

using json = nlohmann::ordered_json;
using namespace hardy;

namespace {

const std::vector<std::string> kKeys{"alpha", "p",   "R",    "n",      "gamma", "tmin",
                                     "spec",  "eps", "cases", "seed",  "domain", "eta",
                                     "out",   "format", "workers"};

double parse_double(const std::string& key, std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data() + b, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || b == s.size())
    throw std::invalid_argument("--" + key + ": not a number: '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw std::invalid_argument("--" + key + ": empty list");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("--" + key + ": not a nonnegative integer: '" + s + "'");
  return v;
}

/// "e", "e2", "ee" / "e^e", or a number.
double parse_R(const std::string& s) {
  if (s == "e") return std::numbers::e;
  if (s == "e2") return std::exp(2.0);
  if (s == "ee" || s == "e^e") return e_to_the_e();
  return parse_double("R", s);
}

struct RunConfig {
  std::string command;
  std::map<std::string, std::string> raw;  // resolved string values

  bool has(const std::string& k) const { return raw.count(k) && !raw.at(k).empty(); }
  std::string str(const std::string& k, const std::string& def) const {
    return has(k) ? raw.at(k) : def;
  }
  double num(const std::string& k, double def) const {
    return has(k) ? parse_double(k, raw.at(k)) : def;
  }
  std::size_t count(const std::string& k, std::size_t def) const {
    return has(k) ? static_cast<std::size_t>(parse_u64(k, raw.at(k))) : def;
  }
  std::vector<double> list(const std::string& k, std::vector<double> def) const {
    return has(k) ? parse_list(k, raw.at(k)) : def;
  }
  double R() const { return parse_R(str("R", "e2")); }
  Params single_params() const {
    const auto a = list("alpha", {0.0}), p = list("p", {2.0});
    if (a.size() != 1 || p.size() != 1)
      throw std::invalid_argument("this command takes a single --alpha and --p");
    return Params(a[0], p[0], R());
  }
  bool params_given() const { return has("alpha") || has("p") || has("R"); }
  std::string format(const std::string& def) const {
    const std::string f = str("format", def);
    if (f != "csv" && f != "json") throw std::invalid_argument("--format must be csv or json");
    return f;
  }
  json to_json() const {
    json j;
    j["command"] = command;
    // output path and worker count do not change results
    for (const auto& [k, v] : raw)
      if (!v.empty() && k != "out" && k != "workers") j[k] = v;
    return j;
  }
};

}  // namespace

namespace {

struct Output {
  std::string text;
  bool violation = false;
};

std::string csv_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Output cmd_constants(const RunConfig& cfg) {
  const Params P = cfg.single_params();
  const ConstantLedger l = build_ledger(P);
  Output out;
  if (cfg.format("json") == "json") {
    json j;
    j["config"] = cfg.to_json();
    j["regime"] = std::string(to_string(l.regime));
    j["lambda"] = l.lambda;
    j["ledger"] = json::parse(ledger_to_json(l));
    out.text = j.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "name,value,formula,paper_location\n";
    for (const auto& e : l.entries)
      os << e.name << ',' << csv_num(e.value) << ",\"" << e.formula << "\",\"" << e.source << "\"\n";
    out.text = os.str();
  }
  return out;
}

Output cmd_verify(const RunConfig& cfg) {
  std::vector<InequalityId> ids;
  const std::string spec = cfg.str("spec", "all");
  if (spec == "all") {
    ids = all_inequalities();
  } else {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) ids.push_back(inequality_from_string(item));
  }
  SuiteConfig sc;
  sc.n = cfg.count("n", 1024);
  sc.t_min = cfg.num("tmin", 1e-4);
  sc.gamma = cfg.num("gamma", 2.0);
  sc.workers = static_cast<unsigned>(cfg.count("workers", 1));
  const std::size_t cases = cfg.count("cases", 1000);
  const std::uint64_t seed = cfg.has("seed") ? parse_u64("seed", cfg.raw.at("seed")) : 1;

  struct Block {
    InequalityId id;
    Params params;
    std::vector<SuiteRecord> records;
  };
  std::vector<Block> blocks;
  for (InequalityId id : ids) {
    std::vector<Params> plist;
    if (cfg.params_given()) {
      const Params P = cfg.single_params();
      try {
        std::optional<PiecewiseFn> f;
        if (id == InequalityId::Lem3_1)
          f = PiecewiseFn(make_mesh(2, 1.0, 0.5), {std::sqrt(0.5), std::sqrt(0.75), 1.0});
        (void)InequalitySpec::make(id, P, f);
      } catch (const std::invalid_argument& e) {
        if (ids.size() == 1) throw;
        std::cerr << "skipping " << to_string(id) << ": " << e.what() << '\n';
        continue;
      }
      plist.push_back(P);
    } else {
      plist = default_params_for(id);
    }
    // cases are shared out over the parameter sets; seeds continue the counter
    std::uint64_t offset = 0;
    for (std::size_t j = 0; j < plist.size(); ++j) {
      SuiteConfig c = sc;
      c.cases = cases / plist.size() + (j < cases % plist.size() ? 1 : 0);
      c.seed = seed + offset;
      offset += c.cases;
      blocks.push_back({id, plist[j], nonnegativity_suite(id, plist[j], c)});
    }
  }

  Output out;
  std::size_t failures = 0;
  for (const auto& b : blocks)
    for (const auto& r : b.records) failures += r.ok ? 0 : 1;
  out.violation = failures > 0;
  if (cfg.format("csv") == "csv") {
    std::ostringstream os;
    os << "# config: " << cfg.to_json().dump() << '\n';
    os << "id,alpha,p,R,seed,n,t_min,lhs,rhs,deficit,ok\n";
    for (const auto& b : blocks)
      for (const auto& r : b.records)
        os << r.id << ',' << csv_num(b.params.alpha()) << ',' << csv_num(b.params.p()) << ','
           << csv_num(b.params.R()) << ',' << r.seed << ',' << r.n << ',' << csv_num(r.t_min) << ','
           << csv_num(r.lhs) << ',' << csv_num(r.rhs) << ',' << csv_num(r.deficit) << ','
           << (r.ok ? 1 : 0) << '\n';
    out.text = os.str();
  } else {
    json j;
    j["config"] = cfg.to_json();
    j["failures"] = failures;
    auto suites = json::array();
    for (const auto& b : blocks) {
      std::size_t bad = 0;
      double worst = INFINITY;
      for (const auto& r : b.records) {
        bad += r.ok ? 0 : 1;
        const double scale = std::abs(r.lhs) + std::abs(r.rhs);
        if (scale > 0) worst = std::min(worst, r.deficit / scale);
      }
      suites.push_back({{"id", std::string(to_string(b.id))},
                        {"alpha", b.params.alpha()},
                        {"p", b.params.p()},
                        {"R", b.params.R()},
                        {"cases", b.records.size()},
                        {"failures", bad},
                        {"min_relative_deficit", std::isfinite(worst) ? json(worst) : json(nullptr)}});
    }
    j["suites"] = suites;
    out.text = j.dump(2) + "\n";
  }
  return out;
}

Output cmd_sharpness(const RunConfig& cfg) {
  const InequalityId id = inequality_from_string(cfg.str("spec", "CorB"));
  const Params P = cfg.single_params();
  const auto family =
      id == InequalityId::CorE ? TestFamily::Kind::LogProbe : TestFamily::Kind::PowerProbe;
  const SharpnessTable t =
      sharpness_probe(InequalitySpec::make(id, P), family, cfg.list("eps", {0.4, 0.2, 0.1, 0.05}),
                      cfg.count("n", 4096), cfg.num("tmin", 1e-6));
  Output out;
  for (const auto& r : t.rows)
    if (r.deficit + r.error_estimate < 0) out.violation = true;
  if (cfg.format("csv") == "csv") {
    std::ostringstream os;
    os << "# config: " << cfg.to_json().dump() << '\n';
    os << "id,family,eps,deficit,truncated,tail,error_estimate\n";
    for (const auto& r : t.rows)
      os << t.id << ',' << t.family << ',' << csv_num(r.eps) << ',' << csv_num(r.deficit) << ','
         << csv_num(r.truncated) << ',' << csv_num(r.tail) << ',' << csv_num(r.error_estimate) << '\n';
    out.text = os.str();
  } else {
    json j;
    j["config"] = cfg.to_json();
    j["id"] = t.id;
    j["family"] = t.family;
    j["t_min"] = t.t_min;
    j["n"] = t.n;
    j["fitted_rate"] = t.fitted_rate;
    auto rows = json::array();
    for (const auto& r : t.rows)
      rows.push_back({{"eps", r.eps},
                      {"deficit", r.deficit},
                      {"truncated", r.truncated},
                      {"tail", r.tail},
                      {"error_estimate", r.error_estimate}});
    j["rows"] = rows;
    out.text = j.dump(2) + "\n";
  }
  return out;
}

Output cmd_minimize(const RunConfig& cfg) {
  const auto alphas = cfg.list("alpha", {0.0}), ps = cfg.list("p", {2.0});
  const double R = cfg.R();
  MinimizeConfig mc;
  mc.n = cfg.count("n", 4096);
  mc.gamma = cfg.num("gamma", 3.0);
  mc.t_min = cfg.num("tmin", 1e-6);
  mc.validate();
  Output out;
  std::ostringstream os;
  const bool csv = cfg.format("csv") == "csv";
  json j;
  j["config"] = cfg.to_json();
  if (csv) os << "# config: " << cfg.to_json().dump() << '\n';

  bool critical = false;
  for (double a : alphas)
    for (double p : ps) critical = critical || classify(Params(a, p, R)) != Regime::Noncritical;
  if (critical) {
    if (alphas.size() != 1 || ps.size() != 1)
      throw std::invalid_argument("minimize: critical parameters are only accepted one at a time");
    const MinimizeResult res = best_constant(Params(alphas[0], ps[0], R), BoundaryMode::plain(), mc);
    if (csv) {
      os << "t_min,energy_discrete,energy_exact\n";
      for (const auto& r : res.degeneration)
        os << csv_num(r.t_min) << ',' << csv_num(r.energy_discrete) << ',' << csv_num(r.energy_exact)
           << '\n';
    } else {
      auto rows = json::array();
      for (const auto& r : res.degeneration)
        rows.push_back({{"t_min", r.t_min},
                        {"energy_discrete", r.energy_discrete},
                        {"energy_exact", r.energy_exact}});
      j["degeneration"] = rows;
    }
  } else {
    const auto rows = sweep(alphas, ps, R, mc, static_cast<unsigned>(cfg.count("workers", 1)));
    for (const auto& r : rows)
      if (r.quotient < r.lambda * (1.0 - 1e-8)) out.violation = true;
    if (csv) {
      write_sweep_csv(os, rows);
    } else {
      auto arr = json::array();
      for (const auto& r : rows)
        arr.push_back({{"alpha", r.alpha},
                       {"p", r.p},
                       {"quotient", r.quotient},
                       {"lambda", r.lambda},
                       {"relative_gap", r.relative_gap},
                       {"n", r.n},
                       {"t_min", r.t_min},
                       {"iterations", r.iterations}});
      j["rows"] = arr;
    }
  }
  out.text = csv ? os.str() : j.dump(2) + "\n";
  return out;
}

Output cmd_critical_demo(const RunConfig& cfg) {
  const Params P = cfg.single_params();
  std::vector<std::array<double, 3>> rows;
  std::string family;
  bool decreasing = false;
  if (cfg.has("domain")) {
    const DomainSpec dom = parse_domain(cfg.raw.at("domain"));
    const double eta = cfg.num("eta", default_eta(dom));
    const NdDemoTable t =
        nd_critical_demo(dom, P, cfg.list("eps", default_nd_demo_schedule(P, eta)), eta);
    for (const auto& r : t.rows) rows.push_back({r.eps, r.energy_closed, r.energy_quadrature});
    family = t.family;
    decreasing = t.strictly_decreasing;
  } else {
    const DemoTable t = critical_infimum_demo(P, cfg.list("eps", default_demo_schedule(P)));
    for (const auto& r : t.rows) rows.push_back({r.eps, r.energy_closed, r.energy_quadrature});
    family = t.family;
    decreasing = t.strictly_decreasing;
  }
  Output out;
  out.violation = !decreasing;
  for (const auto& r : rows)
    if (std::abs(r[1] - r[2]) > 1e-10 * std::abs(r[1])) out.violation = true;
  if (cfg.format("csv") == "csv") {
    std::ostringstream os;
    os << "# config: " << cfg.to_json().dump() << '\n';
    os << "family,eps,energy_closed,energy_quadrature\n";
    for (const auto& r : rows)
      os << family << ',' << csv_num(r[0]) << ',' << csv_num(r[1]) << ',' << csv_num(r[2]) << '\n';
    out.text = os.str();
  } else {
    json j;
    j["config"] = cfg.to_json();
    j["family"] = family;
    j["strictly_decreasing"] = decreasing;
    auto arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"eps", r[0]}, {"energy_closed", r[1]}, {"energy_quadrature", r[2]}});
    j["rows"] = arr;
    out.text = j.dump(2) + "\n";
  }
  return out;
}

Output cmd_nd_verify(const RunConfig& cfg) {
  const DomainSpec dom = parse_domain(cfg.str("domain", "disk:1"));
  const Params P = cfg.single_params();
  const double eta =
      cfg.has("eta") ? cfg.num("eta", 0) : admissible_eta(dom, P, default_eta(dom));
  const NdConstants k = nd_constants(dom, P, eta);

  std::vector<NdId> ids;
  if (cfg.has("spec") && cfg.raw.at("spec") != "all") {
    std::stringstream ss(cfg.raw.at("spec"));
    std::string item;
    while (std::getline(ss, item, ',')) ids.push_back(nd_id_from_string(item));
  } else {
    const Regime r = classify(P);
    ids.push_back(r == Regime::Noncritical        ? NdId::Eq2_6
                  : r == Regime::CriticalInterior ? NdId::Eq2_11
                                                  : NdId::Eq2_12);
    if (dom.kind() == DomainSpec::Kind::Disk)
      ids.push_back(r == Regime::Noncritical        ? NdId::Eq2_7
                    : r == Regime::CriticalInterior ? NdId::Eq2_14
                                                    : NdId::Eq2_15);
  }
  NdSuiteConfig sc;
  sc.radial_cases = cfg.count("cases", 200);
  sc.angular_cases = sc.radial_cases / 4;
  sc.n = cfg.count("n", 256);
  sc.t_min_rel = cfg.num("tmin", 1e-4);
  sc.gamma = cfg.num("gamma", 2.0);
  sc.seed = cfg.has("seed") ? parse_u64("seed", cfg.raw.at("seed")) : 1;

  std::vector<std::pair<NdId, std::vector<SuiteRecord>>> results;
  for (NdId id : ids) results.emplace_back(id, nd_suite(id, dom, k, sc));

  Output out;
  for (const auto& [id, recs] : results)
    for (const auto& r : recs) out.violation = out.violation || !r.ok;
  if (cfg.format("csv") == "csv") {
    std::ostringstream os;
    os << "# config: " << cfg.to_json().dump() << '\n';
    os << "id,domain,eta,seed,n,t_min,lhs,rhs,deficit,ok\n";
    for (const auto& [id, recs] : results)
      for (const auto& r : recs)
        os << r.id << ',' << dom.describe() << ',' << csv_num(eta) << ',' << r.seed << ',' << r.n
           << ',' << csv_num(r.t_min) << ',' << csv_num(r.lhs) << ',' << csv_num(r.rhs) << ','
           << csv_num(r.deficit) << ',' << (r.ok ? 1 : 0) << '\n';
    out.text = os.str();
  } else {
    json j;
    j["config"] = cfg.to_json();
    j["domain"] = dom.describe();
    j["constants"] = {{"eta", k.eta},     {"C2", k.C2},           {"L", k.L},
                      {"gamma", k.gamma}, {"L_prime", k.L_prime}, {"C1", k.C1},
                      {"route", k.route}};
    auto suites = json::array();
    for (const auto& [id, recs] : results) {
      std::size_t bad = 0;
      for (const auto& r : recs) bad += r.ok ? 0 : 1;
      suites.push_back(
          {{"id", std::string(to_string(id))}, {"cases", recs.size()}, {"failures", bad}});
    }
    j["suites"] = suites;
    out.text = j.dump(2) + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of weighted Hardy inequalities with remainder terms"};
  app.require_subcommand(1);
  struct Sub {
    const char* name;
    const char* help;
    Output (*run)(const RunConfig&);
  };
  const std::vector<Sub> subs{
      {"constants", "Dump the constant ledger", cmd_constants},
      {"verify", "Randomized nonnegativity suites", cmd_verify},
      {"sharpness", "Deficits along an eps sequence of the extremal family", cmd_sharpness},
      {"minimize", "Best-constant sweep over an (alpha, p) grid", cmd_minimize},
      {"critical-demo", "Energies of the critical minimizing sequences", cmd_critical_demo},
      {"nd-verify", "Suites on planar domains", cmd_nd_verify},
  };
  std::map<std::string, std::string> flags;
  std::string config_path;
  std::vector<std::pair<CLI::App*, std::map<std::string, CLI::Option*>>> registered;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    std::map<std::string, CLI::Option*> opts;
    for (const auto& key : kKeys) opts[key] = sub->add_option("--" + key, flags[key]);
    sub->add_option("--config", config_path, "key=value file; flags take precedence");
    registered.emplace_back(sub, std::move(opts));
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      auto& [sub, opts] = registered[i];
      if (!sub->parsed()) continue;
      RunConfig cfg;
      cfg.command = subs[i].name;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config file " + config_path);
        const auto file = read_config(in);
        const std::vector<std::string> shape{"rho", "r_in", "r_out", "a", "b"};
        for (const auto& [k, v] : file) {
          if (std::find(shape.begin(), shape.end(), k) != shape.end()) continue;
          if (std::find(kKeys.begin(), kKeys.end(), k) == kKeys.end())
            throw std::invalid_argument("config: unknown key '" + k + "'");
          cfg.raw[k] = v;
        }
        if (file.count("domain")) cfg.raw["domain"] = domain_from_config(file).describe();
      }
      for (const auto& [k, opt] : opts)
        if (opt->count() > 0) cfg.raw[k] = flags[k];

      const Output out = subs[i].run(cfg);
      if (cfg.has("out")) {
        std::ofstream f(cfg.raw.at("out"), std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + cfg.raw.at("out"));
        f << out.text;
        if (!f) throw std::runtime_error("write failed: " + cfg.raw.at("out"));
      } else {
        std::cout << out.text;
      }
      if (out.violation) {
        std::cerr << "violation: at least one check failed\n";
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
