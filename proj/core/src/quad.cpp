#include "hardy/quad.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hardy {

double WeightSpec::operator()(double t) const {
  double w = std::pow(t, s);
  if (kind == Kind::Power) return w;
  const double l1 = a1(t, R);
  if (k != 0) w *= std::pow(l1, -k);
  if (kind == Kind::PowerLogLog && m != 0) w *= std::pow(a2(t, R), -m);
  return w;
}

namespace {

GaussRule build_gauss8() {
  GaussRule r{};
  constexpr int n = 8;
  for (int i = 0; i < n / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-17) break;
    }
    const double w = 2.0 / ((1 - x * x) * dp * dp);
    r.x[i] = -x;
    r.w[i] = w;
    r.x[n - 1 - i] = x;
    r.w[n - 1 - i] = w;
  }
  return r;
}

double cell_rule(const std::function<double(std::size_t, double)>& g, std::size_t c, double a,
                 double b) {
  const auto& rule = gauss8();
  const double h = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0;
  for (int k = 0; k < 8; ++k) s += rule.w[k] * g(c, mid + h * rule.x[k]);
  return h * s;
}

}  // namespace

const GaussRule& gauss8() {
  static const GaussRule rule = build_gauss8();
  return rule;
}

IntegralResult integrate_cells(const GradedMesh& mesh,
                               const std::function<double(std::size_t, double)>& g) {
  const auto nodes = mesh.nodes();
  const std::size_t n = mesh.cells();
  std::vector<double> coarse(n), fine(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double a = nodes[c], b = nodes[c + 1], m = 0.5 * (a + b);
    coarse[c] = cell_rule(g, c, a, b);
    fine[c] = cell_rule(g, c, a, m) + cell_rule(g, c, m, b);
  }
  KahanSum sc, sf, sabs;
  for (std::size_t c = 0; c < n; ++c) {
    sc.add(coarse[c]);
    sf.add(fine[c]);
    sabs.add(std::abs(coarse[c]));
  }
  IntegralResult r;
  r.value = sc.value();
  r.error_estimate = std::abs(sc.value() - sf.value());
  r.cells = n;

  std::size_t first = 0;
  while (first < n && coarse[first] == 0.0) ++first;
  if (first < n && sabs.value() > 0) {
    const bool dominant = std::abs(coarse[first]) > 0.5 * sabs.value();
    const bool unstable =
        std::abs(fine[first] - coarse[first]) > 0.1 * std::max(std::abs(coarse[first]), 1e-300);
    r.divergence_warning = dominant && unstable;
  }
  if (!std::isfinite(r.value)) r.divergence_warning = true;
  return r;
}

IntegralResult integrate_weighted(const PiecewiseFn& fn, double a_exp, double b_exp,
                                  const WeightSpec& weight) {
  if (!(a_exp >= 0) || !(b_exp >= 0))
    throw std::invalid_argument("integrate_weighted: exponents must be nonnegative");
  const auto slopes = differentiate(fn);
  auto g = [&](std::size_t c, double t) {
    double v = weight(t);
    if (a_exp != 0) v *= std::pow(std::abs(fn.eval_in_cell(c, t)), a_exp);
    if (b_exp != 0) v *= std::pow(std::abs(slopes[c]), b_exp);
    return v;
  };
  return integrate_cells(fn.mesh(), g);
}

double closed_form_oracle(const WeightSpec& w, double a, double b) {
  if (!(a >= 0) || !(b > a)) throw std::invalid_argument("closed_form_oracle: need 0 <= a < b");
  switch (w.kind) {
    case WeightSpec::Kind::Power: {
      if (w.s == -1.0) throw std::invalid_argument("closed_form_oracle: t^-1 is not in the catalogue");
      if (a == 0 && w.s < -1.0) throw std::invalid_argument("closed_form_oracle: divergent at 0");
      const double e = w.s + 1.0;
      return (std::pow(b, e) - std::pow(a, e)) / e;
    }
    case WeightSpec::Kind::PowerLog: {
      if (w.s != -1.0 || w.k == 1.0)
        throw std::invalid_argument("closed_form_oracle: PowerLog needs s = -1, k != 1");
      // d/dt A1^{1-k}/(k-1) = t^{-1} A1^{-k}
      auto F = [&](double t) {
        if (t == 0) {
          if (w.k < 1.0) throw std::invalid_argument("closed_form_oracle: divergent at 0");
          return 0.0;
        }
        return std::pow(a1(t, w.R), 1.0 - w.k) / (w.k - 1.0);
      };
      return F(b) - F(a);
    }
    case WeightSpec::Kind::PowerLogLog: {
      if (w.s != -1.0 || w.k != 1.0 || w.m == 1.0)
        throw std::invalid_argument("closed_form_oracle: PowerLogLog needs s = -1, k = 1, m != 1");
      auto F = [&](double t) {
        if (t == 0) {
          if (w.m < 1.0) throw std::invalid_argument("closed_form_oracle: divergent at 0");
          return 0.0;
        }
        return std::pow(a2(t, w.R), 1.0 - w.m) / (w.m - 1.0);
      };
      return F(b) - F(a);
    }
  }
  throw std::invalid_argument("closed_form_oracle: unknown weight");
}

double boundary_trace_1d(const PiecewiseFn& fn, double p) {
  return std::pow(std::abs(fn.value_at_end()), p);
}

}  // namespace hardy
