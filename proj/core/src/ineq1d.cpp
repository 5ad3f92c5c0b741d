#include "hardy/ineq1d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace hardy {

namespace {

struct IdName {
  InequalityId id;
  const char* name;
};

constexpr std::array<IdName, 20> kNames{{
    {InequalityId::EqA, "EqA"},         {InequalityId::CorB, "CorB"},
    {InequalityId::ThmNC1, "ThmNC1"},   {InequalityId::ThmC1, "ThmC1"},
    {InequalityId::ThmC2_10, "ThmC2_10"}, {InequalityId::CorD, "CorD"},
    {InequalityId::CorE, "CorE"},       {InequalityId::Lem3_1, "Lem3_1"},
    {InequalityId::Lem3_2, "Lem3_2"},   {InequalityId::Lem3_3, "Lem3_3"},
    {InequalityId::Lem3_6a, "Lem3_6a"}, {InequalityId::Lem3_6b, "Lem3_6b"},
    {InequalityId::Lem3_7a, "Lem3_7a"}, {InequalityId::Lem3_7b, "Lem3_7b"},
    {InequalityId::Eq3_16, "Eq3_16"},   {InequalityId::Lem7_1, "Lem7_1"},
    {InequalityId::Lem7_2, "Lem7_2"},   {InequalityId::Lem7_5, "Lem7_5"},
    {InequalityId::Lem7_6, "Lem7_6"},   {InequalityId::Lem7_7, "Lem7_7"},
}};

bool is_partition_lemma(InequalityId id) {
  return id == InequalityId::Lem7_5 || id == InequalityId::Lem7_6 || id == InequalityId::Lem7_7;
}

bool is_appendix_lemma(InequalityId id) {
  return id == InequalityId::Lem7_1 || id == InequalityId::Lem7_2 || is_partition_lemma(id);
}

bool needs_ledger(InequalityId id) {
  switch (id) {
    case InequalityId::ThmNC1: case InequalityId::ThmC1: case InequalityId::ThmC2_10:
    case InequalityId::Lem3_2: case InequalityId::Lem3_3: case InequalityId::Lem3_6a:
    case InequalityId::Lem3_6b: case InequalityId::Lem3_7a: case InequalityId::Lem3_7b:
    case InequalityId::Eq3_16:
      return true;
    default:
      return false;
  }
}

std::optional<Regime> required_regime(InequalityId id) {
  switch (id) {
    case InequalityId::CorB: case InequalityId::ThmNC1: case InequalityId::Lem3_1:
    case InequalityId::Lem3_2: case InequalityId::Lem3_3:
      return Regime::Noncritical;
    case InequalityId::ThmC1: case InequalityId::CorD: case InequalityId::Lem3_6a:
    case InequalityId::Lem3_7a:
      return Regime::CriticalInterior;
    case InequalityId::ThmC2_10: case InequalityId::CorE: case InequalityId::Lem3_6b:
    case InequalityId::Lem3_7b: case InequalityId::Eq3_16:
      return Regime::CriticalBoundary;
    default:
      return std::nullopt;
  }
}

bool needs_ee(InequalityId id) {
  return id == InequalityId::Lem7_2 || id == InequalityId::Lem7_7;
}

}  // namespace

std::string_view to_string(InequalityId id) noexcept {
  for (const auto& n : kNames)
    if (n.id == id) return n.name;
  return "?";
}

InequalityId inequality_from_string(std::string_view name) {
  for (const auto& n : kNames)
    if (name == n.name) return n.id;
  throw std::invalid_argument("unknown inequality id '" + std::string(name) + "'");
}

const std::vector<InequalityId>& all_inequalities() {
  static const std::vector<InequalityId> ids = [] {
    std::vector<InequalityId> v;
    for (const auto& n : kNames) v.push_back(n.id);
    return v;
  }();
  return ids;
}

InequalitySpec InequalitySpec::make(InequalityId id, const Params& params,
                                    std::optional<PiecewiseFn> f, std::optional<double> M) {
  const std::string name(to_string(id));
  if (id == InequalityId::EqA && params.alpha() != 0.0)
    throw std::invalid_argument(name + " requires alpha = 0");
  if (auto r = required_regime(id); r && classify(params) != *r)
    throw std::invalid_argument(name + " requires the " + std::string(to_string(*r)) +
                                " regime, got " + std::string(to_string(classify(params))));
  if (needs_ee(id) && !(params.R() >= e_to_the_e() * (1.0 - 1e-15)))
    throw std::invalid_argument(name + " requires R >= e^e");
  if (id == InequalityId::Lem7_5 && !(params.p() < 2.0))
    throw std::invalid_argument(name + " requires 1 < p < 2");
  if (id == InequalityId::Lem3_1 && !f) throw std::invalid_argument(name + " needs a weight f");
  if (M && !(*M > 1.0)) throw std::invalid_argument(name + ": M must exceed 1");

  InequalitySpec s{id, params, ConstantLedger{}, std::move(f), M};
  s.ledger.params = params;
  s.ledger.regime = classify(params);
  s.ledger.lambda = lambda_const(params);
  s.ledger.L_sharp = std::pow(s.ledger.lambda, 1.0 - 1.0 / params.p());
  if (needs_ledger(id) || (id == InequalityId::Lem7_5 && !M)) s.ledger = build_ledger(params);
  return s;
}

double InequalitySpec::homogeneity_degree() const noexcept {
  return is_appendix_lemma(id) ? 2.0 : params.p();
}

double InequalitySpec::partition_cap() const {
  if (M) return *M;
  if (ledger.M > 0) return ledger.M;
  return 4.0;
}

std::vector<Params> default_params_for(InequalityId id) {
  const double e2 = std::exp(2.0);
  const double ee = e_to_the_e();
  if (id == InequalityId::EqA) return {Params(0, 2, e2), Params(0, 3, e2), Params(0, 1.5, e2)};
  if (auto r = required_regime(id)) {
    switch (*r) {
      case Regime::Noncritical:
        return {Params(0, 2, e2), Params(0.25, 3, 10), Params(-0.5, 1.5, 20), Params(0, 4, e2)};
      case Regime::CriticalInterior:
        return {Params(1, 2, e2), Params(1, 1.5, 20), Params(0.9, 3, 10)};
      case Regime::CriticalBoundary:
        return {Params(0.5, 2, 2 * ee), Params(1.0 - 1.0 / 1.5, 1.5, 20),
                Params(1.0 - 1.0 / 3.0, 3, 2 * ee)};
    }
  }
  if (id == InequalityId::Lem7_5) return {Params(0, 1.5, e2), Params(-0.5, 1.25, 20)};
  if (needs_ee(id)) return {Params(0, 2, 2 * ee), Params(0, 1.5, 50)};
  return {Params(0, 2, e2), Params(0, 1.5, 10)};
}

double DeficitReport::term(const std::string& name) const {
  for (const auto& t : terms)
    if (t.name == name) return t.value;
  throw std::out_of_range("report has no term " + name);
}

double DeficitReport::tolerance(double tol_rel) const noexcept {
  return -tol_rel * (std::abs(lhs) + std::abs(rhs)) - error_estimate;
}

namespace {

struct BoundaryTerm {
  std::string name;
  bool lhs;
  double coeff;
  double exponent;
};

std::vector<BoundaryTerm> spec_boundary(const InequalitySpec& s) {
  const double p = s.params.p();
  const double R = s.params.R();
  const auto& l = s.ledger;
  switch (s.id) {
    case InequalityId::EqA:
      return {{"boundary", false, std::pow(1.0 - 1.0 / p, p - 1.0), p}};
    case InequalityId::CorB: return {{"boundary", false, l.L_sharp, p}};
    case InequalityId::CorD: return {{"boundary", true, l.L_sharp, p}};
    case InequalityId::CorE:
      // coefficient as displayed: Lambda^alpha * A1(1)^(1-p)
      return {{"boundary", true, std::pow(l.lambda, s.params.alpha()) * std::pow(a1(1.0, R), 1.0 - p), p}};
    case InequalityId::ThmNC1: return {{"boundary", false, l.L, p}};
    case InequalityId::ThmC1: case InequalityId::ThmC2_10: return {{"boundary", true, l.L, p}};
    case InequalityId::Lem3_1: return {};
    case InequalityId::Lem3_2: return {{"boundary", false, l.L3, p}};
    case InequalityId::Lem3_3: return {{"boundary", false, l.L4, p}};
    case InequalityId::Lem3_6a: case InequalityId::Lem3_6b: return {{"boundary", true, l.L5, p}};
    case InequalityId::Lem3_7a: case InequalityId::Lem3_7b: return {{"boundary", true, l.L6, p}};
    case InequalityId::Eq3_16: return {{"boundary", true, l.L7, p}};
    case InequalityId::Lem7_1: case InequalityId::Lem7_6:
      return {{"boundary", false, -0.5 / a1(1.0, R), 2.0}};
    case InequalityId::Lem7_2: case InequalityId::Lem7_7:
      return {{"boundary", false, -0.5 / a2(1.0, R), 2.0}};
    case InequalityId::Lem7_5: return {};
  }
  return {};
}

}  // namespace

std::vector<Term> spec_terms(const InequalitySpec& s) {
  const double p = s.params.p();
  const double R = s.params.R();
  const double ap = s.params.alpha_p();
  const auto& l = s.ledger;
  const double lam = l.lambda;
  using Region = Term::Region;

  auto pw = [](double e) { return [e](double t) { return std::pow(t, e); }; };
  auto pw_l1 = [R](double e, double k) {
    return [=](double t) { return std::pow(t, e) * std::pow(a1(t, R), -k); };
  };
  auto pw_l1_l2 = [R](double e, double k, double m) {
    return [=](double t) { return std::pow(t, e) * std::pow(a1(t, R), -k) * std::pow(a2(t, R), -m); };
  };

  // energy and Hardy terms shared by the power-weight displays
  auto power_pair = [&](bool lhs) {
    return std::vector<Term>{{"energy", lhs, 1.0, 0, p, pw(ap)},
                             {"hardy", !lhs, lam, p, 0, pw(ap - p)}};
  };
  // the same for the critical-line weights t^{p-1} and (t A1^p)^{-1}
  auto log_pair = [&](bool lhs) {
    return std::vector<Term>{{"energy", lhs, 1.0, 0, p, pw(p - 1.0)},
                             {"hardy", !lhs, lam, p, 0, pw_l1(-1.0, p)}};
  };
  auto append = [](std::vector<Term> v, std::initializer_list<Term> more) {
    for (const auto& t : more) v.push_back(t);
    return v;
  };

  switch (s.id) {
    case InequalityId::EqA: case InequalityId::CorB: case InequalityId::CorD:
      return power_pair(true);
    case InequalityId::CorE:
      return log_pair(true);
    case InequalityId::ThmNC1: case InequalityId::ThmC1:
      return append(power_pair(true),
                    {{"remainder", false, l.C0, p, 0, pw_l1(ap - p, 2)},
                     {"c1_energy", false, l.C1, 0, p, pw(ap + 1)},
                     {"c1_hardy", false, l.C1 * lam, p, 0, pw(ap - p + 1)},
                     {"c1_remainder", false, l.C1 * l.C0, p, 0, pw_l1(ap - p + 1, 2)}});
    case InequalityId::ThmC2_10:
      return append(log_pair(true),
                    {{"remainder", false, l.C0, p, 0, pw_l1_l2(-1.0, p, 2)},
                     {"c1_energy", false, l.C1, 0, p, pw(p)},
                     {"c1_hardy", false, l.C1 * lam, p, 0, pw_l1(0.0, p)},
                     {"c1_remainder", false, l.C1 * l.C0, p, 0, pw_l1_l2(0.0, p, 2)}});
    case InequalityId::Lem3_1: {
      const PiecewiseFn f = *s.f;
      auto fw = [f](double e) { return [f, e](double t) { return std::pow(t, e) * f(t); }; };
      return {{"energy", true, 1.0, 0, p, pw(ap)},
              {"hardy", true, -lam, p, 0, pw(ap - p)},
              {"f_energy", false, 1.0, 0, p, fw(ap)},
              {"f_hardy", false, -lam, p, 0, fw(ap - p)}};
    }
    case InequalityId::Lem3_2:
      return append(power_pair(true), {{"remainder", false, l.C3, p, 0, pw_l1(ap - p, 2)}});
    case InequalityId::Lem3_3:
      return append(power_pair(true),
                    {{"remainder_energy", false, l.C4, 0, p, pw_l1(ap, 2)},
                     {"remainder_hardy", false, l.C4 * lam, p, 0, pw_l1(ap - p, 2)}});
    case InequalityId::Lem3_6a:
      return append(power_pair(true), {{"remainder", false, l.C5, p, 0, pw_l1(ap - p, 2)}});
    case InequalityId::Lem3_6b:
      return append(log_pair(true), {{"remainder", false, l.C5, p, 0, pw_l1_l2(-1.0, p, 2)}});
    case InequalityId::Lem3_7a:
      return append(power_pair(true), {{"remainder", false, l.C6, 0, p, pw_l1(ap, 2)}});
    case InequalityId::Lem3_7b:
      return append(log_pair(true), {{"remainder", false, l.C6, 0, p, pw_l1_l2(p - 1.0, 0, 2)}});
    case InequalityId::Eq3_16:
      return append(log_pair(true),
                    {{"remainder_energy", false, l.C7, 0, p, pw_l1_l2(p - 1.0, 0, 2)},
                     {"remainder_hardy", false, l.C7 * lam, p, 0, pw_l1_l2(-1.0, p, 2)}});
    case InequalityId::Lem7_1:
      return {{"energy", true, 1.0, 0, 2, pw(1.0)},
              {"hardy", false, 0.25, 2, 0, pw_l1(-1.0, 2)}};
    case InequalityId::Lem7_2:
      return {{"energy", true, 1.0, 0, 2, pw_l1(1.0, -1)},
              {"hardy", false, 0.25, 2, 0, pw_l1_l2(-1.0, 1, 2)}};
    case InequalityId::Lem7_5: {
      const double eps_M = std::pow(s.partition_cap(), 1.0 - p) / std::log(R);
      return {{"B_energy", true, eps_M, 2.0 - p, p, pw(p - 1.0), Region::B},
              {"B_cross", false, 1.0, 1, 1, pw_l1(0.0, 1), Region::B}};
    }
    case InequalityId::Lem7_6:
      return {{"A_energy", true, 1.0, 0, 2, pw(1.0), Region::A},
              {"A_hardy", false, 0.25, 2, 0, pw_l1(-1.0, 2), Region::A},
              {"B_hardy", false, 0.5, 2, 0, pw_l1(-1.0, 2), Region::B},
              {"B_cross", false, -1.0, 1, 1, pw_l1(0.0, 1), Region::B}};
    case InequalityId::Lem7_7:
      return {{"A_energy", true, 1.0, 0, 2, pw_l1(1.0, -1), Region::A},
              {"A_hardy", false, 0.25, 2, 0, pw_l1_l2(-1.0, 1, 2), Region::A},
              {"B_hardy", false, 0.5, 2, 0, pw_l1_l2(-1.0, 1, 2), Region::B},
              {"B_cross", false, -1.0, 1, 1, pw_l1_l2(0.0, 0, 1), Region::B}};
  }
  return {};
}

namespace {

inline double powx(double x, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return x;
  if (e == 2.0) return x * x;
  return x == 0.0 ? 0.0 : std::pow(x, e);
}

std::size_t intern(std::vector<double>& list, double e) {
  for (std::size_t i = 0; i < list.size(); ++i)
    if (list[i] == e) return i;
  list.push_back(e);
  return list.size() - 1;
}

}  // namespace

DeficitEvaluator::DeficitEvaluator(InequalitySpec spec, GradedMesh mesh)
    : spec_(std::move(spec)), mesh_(std::move(mesh)), terms_(spec_terms(spec_)) {
  const auto& rule = gauss8();
  const auto nodes = mesh_.nodes();
  const std::size_t n = mesh_.cells();
  tc_.resize(8 * n);
  tf_.resize(16 * n);
  std::vector<double> gc(8 * n), gf(16 * n);
  for (std::size_t c = 0; c < n; ++c) {
    const double a = nodes[c], b = nodes[c + 1];
    const double h = 0.5 * (b - a), m = 0.5 * (a + b);
    for (int j = 0; j < 8; ++j) {
      tc_[8 * c + j] = m + h * rule.x[j];
      gc[8 * c + j] = h * rule.w[j];
      // split cell: halves [a, m] and [m, b]
      tf_[16 * c + j] = 0.5 * (a + m) + 0.5 * h * rule.x[j];
      tf_[16 * c + 8 + j] = 0.5 * (m + b) + 0.5 * h * rule.x[j];
      gf[16 * c + j] = gf[16 * c + 8 + j] = 0.5 * h * rule.w[j];
    }
  }
  wc_.resize(terms_.size());
  wf_.resize(terms_.size());
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const auto& term = terms_[k];
    a_idx_.push_back(intern(a_exps_, term.a_exp));
    b_idx_.push_back(intern(b_exps_, term.b_exp));
    if (term.region != Term::Region::All) continue;
    wc_[k].resize(tc_.size());
    wf_[k].resize(tf_.size());
    for (std::size_t i = 0; i < tc_.size(); ++i) wc_[k][i] = term.weight(tc_[i]) * gc[i];
    for (std::size_t i = 0; i < tf_.size(); ++i) wf_[k][i] = term.weight(tf_[i]) * gf[i];
  }
}

template <bool kCellConstSlope, class F>
void DeficitEvaluator::integrate_terms(const F& field, std::vector<double>& values,
                                       std::vector<double>& errors, bool& divergence) const {
  const std::size_t K = terms_.size();
  const std::size_t n = mesh_.cells();
  std::vector<KahanSum> coarse(K), fine(K), abs_sum(K);
  std::vector<double> first_c(K, 0.0), first_f(K, 0.0);
  std::vector<char> seen(K, 0);
  std::vector<double> pa(a_exps_.size()), pb(b_exps_.size());
  std::vector<double> cc(K), cf(K);

  auto powers = [&](double u, double du, bool slope_fresh) {
    for (std::size_t i = 0; i < a_exps_.size(); ++i) pa[i] = powx(std::abs(u), a_exps_[i]);
    if (slope_fresh)
      for (std::size_t i = 0; i < b_exps_.size(); ++i) pb[i] = powx(std::abs(du), b_exps_[i]);
  };

  for (std::size_t c = 0; c < n; ++c) {
    std::fill(cc.begin(), cc.end(), 0.0);
    std::fill(cf.begin(), cf.end(), 0.0);
    for (std::size_t j = 0; j < 8; ++j) {
      const std::size_t i = 8 * c + j;
      const auto [u, du] = field(c, tc_[i]);
      powers(u, du, !kCellConstSlope || j == 0);
      for (std::size_t k = 0; k < K; ++k)
        if (!wc_[k].empty()) cc[k] += wc_[k][i] * pa[a_idx_[k]] * pb[b_idx_[k]];
    }
    for (std::size_t j = 0; j < 16; ++j) {
      const std::size_t i = 16 * c + j;
      const auto [u, du] = field(c, tf_[i]);
      powers(u, du, !kCellConstSlope || j == 0);
      for (std::size_t k = 0; k < K; ++k)
        if (!wf_[k].empty()) cf[k] += wf_[k][i] * pa[a_idx_[k]] * pb[b_idx_[k]];
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (wc_[k].empty()) continue;
      coarse[k].add(cc[k]);
      fine[k].add(cf[k]);
      abs_sum[k].add(std::abs(cc[k]));
      if (!seen[k] && cc[k] != 0.0) {
        seen[k] = 1;
        first_c[k] = cc[k];
        first_f[k] = cf[k];
      }
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (wc_[k].empty()) continue;
    values[k] = coarse[k].value();
    errors[k] = std::abs(coarse[k].value() - fine[k].value());
    const bool dominant = std::abs(first_c[k]) > 0.5 * abs_sum[k].value();
    const bool unstable = std::abs(first_f[k] - first_c[k]) > 0.1 * std::abs(first_c[k]);
    if ((seen[k] && dominant && unstable) || !std::isfinite(values[k])) divergence = true;
  }
}

void DeficitEvaluator::integrate_regions(const PiecewiseFn& fn, std::vector<double>& values,
                                         std::vector<double>& errors) const {
  const bool log_sets = spec_.id == InequalityId::Lem7_7;
  const auto part = partition_sets(fn, spec_.partition_cap(),
                                   log_sets ? PartitionWeight::LogWeighted : PartitionWeight::Plain,
                                   spec_.params.R());
  const auto& rule = gauss8();
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const auto& term = terms_[k];
    if (term.region == Term::Region::All) continue;
    const bool want_B = term.region == Term::Region::B;
    auto rule_on = [&](std::size_t c, double a, double b) {
      const double h = 0.5 * (b - a), m = 0.5 * (a + b);
      const double du = std::abs(fn.slope(c));
      double s = 0;
      for (int j = 0; j < 8; ++j) {
        const double t = m + h * rule.x[j];
        s += rule.w[j] * term.weight(t) * powx(std::abs(fn.eval_in_cell(c, t)), term.a_exp) *
             powx(du, term.b_exp);
      }
      return h * s;
    };
    KahanSum coarse, fine;
    for (const auto& pc : part.pieces) {
      if (pc.in_B != want_B) continue;
      const double m = 0.5 * (pc.a + pc.b);
      coarse.add(rule_on(pc.cell, pc.a, pc.b));
      fine.add(rule_on(pc.cell, pc.a, m) + rule_on(pc.cell, m, pc.b));
    }
    values[k] = coarse.value();
    errors[k] = std::abs(coarse.value() - fine.value());
  }
}

DeficitReport DeficitEvaluator::assemble(const std::vector<double>& values,
                                         const std::vector<double>& errors, bool divergence,
                                         double u_end) const {
  DeficitReport r;
  r.id = std::string(to_string(spec_.id));
  r.t_min = mesh_.t_min();
  r.n = mesh_.cells();
  r.divergence_warning = divergence;
  KahanSum lhs, rhs, err;
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const auto& term = terms_[k];
    const double v = term.coeff * values[k];
    const double e = std::abs(term.coeff) * errors[k];
    r.terms.push_back({term.name, term.lhs, v, e});
    (term.lhs ? lhs : rhs).add(v);
    err.add(e);
  }
  for (const auto& b : spec_boundary(spec_)) {
    const double v = b.coeff * std::pow(std::abs(u_end), b.exponent);
    r.terms.push_back({b.name, b.lhs, v, 0.0});
    (b.lhs ? lhs : rhs).add(v);
  }
  r.lhs = lhs.value();
  r.rhs = rhs.value();
  r.deficit = r.lhs - r.rhs;
  r.error_estimate = err.value();
  r.info.emplace_back("lambda", spec_.ledger.lambda);
  if (spec_.id == InequalityId::CorE) {
    const double p = spec_.params.p();
    r.info.emplace_back("lambda_pow_alpha", std::pow(spec_.ledger.lambda, spec_.params.alpha()));
    r.info.emplace_back("lambda_pow_1_minus_1_over_p", std::pow(spec_.ledger.lambda, 1.0 - 1.0 / p));
  }
  if (is_partition_lemma(spec_.id)) r.info.emplace_back("M", spec_.partition_cap());
  return r;
}

DeficitReport DeficitEvaluator::operator()(const PiecewiseFn& fn) const {
  const auto a = fn.mesh().nodes(), b = mesh_.nodes();
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin()))
    throw std::invalid_argument("DeficitEvaluator: function lives on a different mesh");
  if (is_appendix_lemma(spec_.id) && fn.values().front() != 0.0)
    throw std::invalid_argument("DeficitEvaluator: appendix lemmas need h(t_min) = 0");
  std::vector<double> values(terms_.size(), 0.0), errors(terms_.size(), 0.0);
  bool divergence = false;
  integrate_terms<true>(
      [&fn](std::size_t c, double t) { return std::pair{fn.eval_in_cell(c, t), fn.slope(c)}; },
      values, errors, divergence);
  if (is_partition_lemma(spec_.id)) integrate_regions(fn, values, errors);
  return assemble(values, errors, divergence, fn.value_at_end());
}

DeficitReport DeficitEvaluator::evaluate_field(const FieldEval& field, double u_at_end) const {
  if (is_partition_lemma(spec_.id))
    throw std::invalid_argument("evaluate_field: partition lemmas need a piecewise-linear function");
  std::vector<double> values(terms_.size(), 0.0), errors(terms_.size(), 0.0);
  bool divergence = false;
  integrate_terms<false>(field, values, errors, divergence);
  return assemble(values, errors, divergence, u_at_end);
}

DeficitReport deficit(const InequalitySpec& spec, const PiecewiseFn& fn) {
  return DeficitEvaluator(spec, fn.mesh())(fn);
}

DeficitReport lemma31_check(const Params& params, const PiecewiseFn& f, const PiecewiseFn& u) {
  for (std::size_t c = 0; c < f.mesh().cells(); ++c)
    if (f.slope(c) < 0) throw std::invalid_argument("lemma31_check: f must be nondecreasing");
  if (f.value_at_end() > 1.0) throw std::invalid_argument("lemma31_check: f(1) must be <= 1");
  return deficit(InequalitySpec::make(InequalityId::Lem3_1, params, f), u);
}

namespace {

double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return NAN;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) return NAN;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

SharpnessTable sharpness_probe(const InequalitySpec& spec, TestFamily::Kind family,
                               const std::vector<double>& eps_sequence, std::size_t n,
                               double t_min) {
  const bool power_ok = (spec.id == InequalityId::CorB || spec.id == InequalityId::CorD ||
                         spec.id == InequalityId::EqA) &&
                        family == TestFamily::Kind::PowerProbe;
  const bool log_ok = spec.id == InequalityId::CorE && family == TestFamily::Kind::LogProbe;
  if (!power_ok && !log_ok)
    throw std::invalid_argument("sharpness_probe: family " + std::string(to_string(family)) +
                                " does not fit " + std::string(to_string(spec.id)));
  const DeficitEvaluator eval(spec, make_mesh(n, 3.0, t_min));
  const double p = spec.params.p();
  const double R = spec.params.R();

  SharpnessTable table;
  table.id = std::string(to_string(spec.id));
  table.family = std::string(to_string(family));
  table.t_min = t_min;
  table.n = n;
  std::vector<double> xs, ys;
  for (double eps : eps_sequence) {
    const TestFamily fam{family, eps, spec.params};
    fam.validate();
    auto field = [&fam](std::size_t, double t) { return std::pair{fam.value(t), fam.derivative(t)}; };
    const DeficitReport r = eval.evaluate_field(field, fam.value(1.0));
    // every integrand behaves like t^{eps p - 1} (power) or A1^{-1-eps p}/t (log)
    // near 0, so the piece on (0, t_min) integrates in closed form
    KahanSum tail;
    const auto terms = spec_terms(spec);
    for (const auto& term : terms) {
      const auto [u, du] = field(0, t_min);
      const double g = term.coeff * term.weight(t_min) * powx(std::abs(u), term.a_exp) *
                       powx(std::abs(du), term.b_exp);
      double piece = g * t_min / (eps * p);
      if (log_ok) piece *= a1(t_min, R);
      tail.add(term.lhs ? piece : -piece);
    }
    SharpnessRow row{eps, r.deficit + tail.value(), r.deficit, tail.value(), r.error_estimate};
    table.rows.push_back(row);
    xs.push_back(eps);
    ys.push_back(row.deficit);
  }
  table.fitted_rate = fit_log_slope(xs, ys);
  return table;
}

std::vector<double> default_demo_schedule(const Params& params) {
  std::vector<double> eps;
  const Regime r = classify(params);
  if (r == Regime::Noncritical)
    throw std::invalid_argument("critical demo: parameters are noncritical");
  if (r == Regime::CriticalInterior) {
    for (int k = 0; k < 12; ++k) eps.push_back(0.3 * std::ldexp(1.0, -k));
  } else {
    for (int k = 0; k < 8; ++k) eps.push_back(0.5 * std::exp(-3.0 * std::ldexp(1.0, k)));
  }
  return eps;
}

DemoTable critical_infimum_demo(const Params& params, const std::vector<double>& eps_sequence) {
  const Regime regime = classify(params);
  if (regime == Regime::Noncritical)
    throw std::invalid_argument("critical_infimum_demo: parameters are noncritical");
  const double p = params.p();
  const double ap = params.alpha_p();
  DemoTable table;
  const bool interior = regime == Regime::CriticalInterior;
  table.family = interior ? "Ramp" : "LogRamp";
  for (double eps : eps_sequence) {
    DemoRow row{eps, 0, 0};
    if (interior) {
      const TestFamily fam{TestFamily::Kind::Ramp, eps, params};
      fam.validate();
      row.energy_closed = std::pow(eps, ap + 1.0 - p) / (ap + 1.0);
      const double t0 = eps * 1e-8;
      const std::array<double, 2> bp{t0, eps};
      const GradedMesh mesh = make_composite_mesh(bp, 64, 3.0);
      const auto r = integrate_cells(mesh, [&](std::size_t, double t) {
        return std::pow(std::abs(fam.derivative(0.5 * eps)), p) * std::pow(t, ap);
      });
      const double tail = std::pow(eps, -p) * std::pow(t0, ap + 1.0) / (ap + 1.0);
      row.energy_quadrature = r.value + tail;
    } else {
      const TestFamily fam{TestFamily::Kind::LogRamp, eps, params};
      fam.validate();
      const double D = std::log(0.5 / eps);
      row.energy_closed = std::pow(D, 1.0 - p);
      // log-uniform nodes on [eps, 1/2]
      const auto kCells = std::max<std::size_t>(256, static_cast<std::size_t>(4.0 * D));
      std::vector<double> nodes(kCells + 1);
      for (std::size_t i = 0; i <= kCells; ++i)
        nodes[i] = eps * std::exp(D * static_cast<double>(i) / kCells);
      nodes.back() = 0.5;
      const GradedMesh mesh(std::move(nodes));
      const auto r = integrate_cells(mesh, [&](std::size_t, double t) {
        // (t |u'|)^p / t avoids overflow for tiny eps
        return std::pow(t * std::abs(fam.derivative(t)), p) / t;
      });
      row.energy_quadrature = r.value;
    }
    table.rows.push_back(row);
  }
  table.strictly_decreasing = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (!(table.rows[i].energy_closed < table.rows[i - 1].energy_closed) ||
        !(table.rows[i].energy_quadrature < table.rows[i - 1].energy_quadrature))
      table.strictly_decreasing = false;
  return table;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PiecewiseFn random_test_function(const GradedMesh& mesh, const Params& params,
                                 std::mt19937_64& rng, bool g_admissible) {
  const auto nodes = mesh.nodes();
  const std::size_t N = nodes.size();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // floors biased towards t_min so that near-extremal shapes see many decades
  const double uf = unif(rng);
  const std::size_t last_zero = static_cast<std::size_t>(uf * uf * uf * static_cast<double>(N / 2));
  const double tf = nodes[last_zero];
  std::uniform_int_distribution<int> mode_dist(0, 3);
  const int mode = mode_dist(rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = (unif(rng) < 0.5 ? -1.0 : 1.0) * std::exp(4.0 * unif(rng) - 2.0);

  std::vector<double> v(N, 0.0);
  switch (mode) {
    case 0: {
      // symmetric noise with one averaging pass
      std::vector<double> raw(N);
      for (auto& x : raw) x = normal(rng);
      for (std::size_t i = 1; i + 1 < N; ++i) v[i] = (raw[i - 1] + raw[i] + raw[i + 1]) / 3.0;
      v[N - 1] = 0.5 * (raw[N - 2] + raw[N - 1]);
      break;
    }
    case 1: {
      // near-extremal power shape t^{beta+e} shifted to vanish at the floor
      const double s = params.beta() + 0.02 + unif(rng);
      for (std::size_t i = 0; i < N; ++i) v[i] = std::abs(std::pow(nodes[i], s) - std::pow(tf, s));
      break;
    }
    case 2: {
      // logarithmic shape A1(t_f)^s - A1(t)^s
      const double s = 0.02 + unif(rng);
      const double R = params.R();
      for (std::size_t i = 0; i < N; ++i)
        v[i] = std::pow(a1(tf, R), s) - std::pow(a1(nodes[i], R), s);
      break;
    }
    default: {
      // ramp up to a random knee, then a random smooth modulation
      const double knee = tf + (1.0 - tf) * unif(rng);
      const double amp = unif(rng), freq = 1.0 + 6.0 * unif(rng);
      for (std::size_t i = 0; i < N; ++i) {
        const double t = nodes[i];
        const double ramp = std::min(1.0, (t - tf) / (knee - tf));
        v[i] = ramp * (1.0 + amp * std::sin(freq * std::log(t)));
      }
      break;
    }
  }
  for (std::size_t i = 0; i <= last_zero; ++i) v[i] = 0.0;
  if (g_admissible && last_zero + 2 < N) v[N - 1] = v[N - 2];
  for (auto& x : v) x *= scale;
  return PiecewiseFn(mesh, std::move(v), last_zero + 1);
}

std::vector<SuiteRecord> nonnegativity_suite(InequalityId id, const Params& params,
                                             const SuiteConfig& config) {
  std::optional<PiecewiseFn> f;
  if (id == InequalityId::Lem3_1) {
    // f(t) = t^{1/2}, nondecreasing with f(1) = 1
    const GradedMesh fm = make_mesh(256, 2.0, config.t_min);
    std::vector<double> fv;
    for (double t : fm.nodes()) fv.push_back(std::sqrt(t));
    f = PiecewiseFn(fm, std::move(fv));
  }
  const DeficitEvaluator eval(InequalitySpec::make(id, params, f),
                              make_mesh(config.n, config.gamma, config.t_min));
  const bool g_adm = is_partition_lemma(id);
  std::vector<SuiteRecord> out(config.cases);
  auto run = [&](std::size_t i) {
    const std::uint64_t seed = splitmix64(config.seed + i);
    std::mt19937_64 rng(seed);
    const PiecewiseFn u = random_test_function(eval.mesh(), params, rng, g_adm);
    const DeficitReport r = eval(u);
    out[i] = {r.id, seed, r.n, r.t_min, r.lhs, r.rhs, r.deficit,
              r.deficit >= r.tolerance(config.tol_rel) && !r.divergence_warning};
  };
  const unsigned workers = std::max(1u, config.workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < config.cases; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < config.cases; i += workers) run(i);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

void write_suite_csv(std::ostream& os, const std::vector<SuiteRecord>& records, bool header) {
  const auto old = os.precision(17);
  if (header) os << "id,seed,n,t_min,lhs,rhs,deficit,ok\n";
  for (const auto& r : records)
    os << r.id << ',' << r.seed << ',' << r.n << ',' << r.t_min << ',' << r.lhs << ',' << r.rhs
       << ',' << r.deficit << ',' << (r.ok ? 1 : 0) << '\n';
  os.precision(old);
}

std::string report_to_json(const DeficitReport& r, int indent) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["deficit"] = r.deficit;
  j["error_estimate"] = r.error_estimate;
  j["divergence_warning"] = r.divergence_warning;
  j["t_min"] = r.t_min;
  j["n"] = r.n;
  j["gauss_order"] = r.gauss_order;
  auto terms = nlohmann::ordered_json::array();
  for (const auto& t : r.terms)
    terms.push_back({{"name", t.name}, {"side", t.lhs ? "lhs" : "rhs"}, {"value", t.value},
                     {"error_estimate", t.error_estimate}});
  j["terms"] = terms;
  auto info = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.info) info[k] = v;
  j["info"] = info;
  return j.dump(indent);
}

}  // namespace hardy
