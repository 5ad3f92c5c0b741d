#include "hardy/params.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hardy {

Params::Params(double alpha, double p, double R) : alpha_(alpha), p_(p), R_(R) {
  if (!std::isfinite(alpha) || !std::isfinite(p) || !std::isfinite(R))
    throw std::invalid_argument("Params: non-finite input");
  if (!(p > 1.0))
    throw std::invalid_argument("Params: p must exceed 1");
  // R = e itself is admitted: A1(1) = 1 is the boundary of the A1 >= 1 range.
  if (!(R >= std::numbers::e * (1.0 - 1e-15)))
    throw std::invalid_argument("Params: R must be at least e");
}

std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::Noncritical: return "noncritical";
    case Regime::CriticalBoundary: return "critical-boundary";
    case Regime::CriticalInterior: return "critical-interior";
  }
  return "?";
}

Regime classify(const Params& params) noexcept {
  const double gap = (1.0 - 1.0 / params.p()) - params.alpha();
  if (std::abs(gap) <= kCriticalLineTol) return Regime::CriticalBoundary;
  return gap > 0 ? Regime::Noncritical : Regime::CriticalInterior;
}

Regime classify_rational(long a_num, long a_den, long p_num, long p_den) {
  if (a_den == 0 || p_den == 0 || p_num == 0)
    throw std::invalid_argument("classify_rational: zero denominator");
  // sign of (p_num - p_den)/p_num - a_num/a_den
  const __int128 num = static_cast<__int128>(p_num - p_den) * a_den -
                       static_cast<__int128>(a_num) * p_num;
  const __int128 den = static_cast<__int128>(p_num) * a_den;
  if (num == 0) return Regime::CriticalBoundary;
  const bool positive = (num > 0) == (den > 0);
  return positive ? Regime::Noncritical : Regime::CriticalInterior;
}

double lambda_const(const Params& params) noexcept {
  const double p = params.p();
  if (classify(params) == Regime::CriticalBoundary)
    return std::pow(1.0 - 1.0 / p, p);
  return std::pow(std::abs(params.beta()), p);
}

double a1(double t, double R) {
  if (!(t > 0)) throw std::domain_error("a1: t must be positive");
  return std::log(R / t);
}

double a2(double t, double R) {
  const double l = a1(t, R);
  if (!(l > 0)) throw std::domain_error("a2: log(R/t) must be positive");
  return std::log(l);
}

double e_to_the_e() noexcept { return std::exp(std::numbers::e); }

namespace {

// Root of s log s = 2 (the stationary point of R e^{-s} (log s)^2, s > 1).
double a2_stationary_s() {
  double s = 2.3;
  for (int i = 0; i < 60; ++i) {
    const double f = s * std::log(s) - 2.0;
    const double df = std::log(s) + 1.0;
    const double step = f / df;
    s -= step;
    if (std::abs(step) < 1e-16 * s) break;
  }
  return s;
}

}  // namespace

double envelope_bound(double R, EnvelopeKind kind) {
  if (kind == EnvelopeKind::A1sq) {
    if (!(R >= std::numbers::e * (1.0 - 1e-15)))
      throw std::invalid_argument("envelope_bound: R must be at least e");
    const double at_one = std::pow(std::log(R), 2);
    const double t_star = R / (std::numbers::e * std::numbers::e);
    double best = at_one;
    if (t_star <= 1.0) best = std::max(best, t_star * 4.0);
    return best;
  }
  if (!(R >= e_to_the_e() * (1.0 - 1e-15)))
    throw std::invalid_argument("envelope_bound: R must be at least e^e");
  const double at_one = std::pow(std::log(std::log(R)), 2);
  const double s_star = a2_stationary_s();
  const double t_star = R * std::exp(-s_star);
  double best = at_one;
  if (t_star <= 1.0) best = std::max(best, t_star * std::pow(std::log(s_star), 2));
  return best;
}

double taylor_remainder(double X, double p) noexcept {
  if (std::abs(X) < 0.05) {
    // sum_{k>=2} binom(p,k) X^k
    double coeff = p * (p - 1.0) / 2.0;
    double power = X * X;
    double sum = 0.0;
    for (int k = 2; k < 64; ++k) {
      const double term = coeff * power;
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      coeff *= (p - k) / (k + 1.0);
      power *= X;
    }
    return sum;
  }
  return std::pow(std::abs(1.0 + X), p) - 1.0 - p * X;
}

namespace {

struct CpRatio {
  double p, q;
  CpMode mode;

  double operator()(double X) const {
    const double ax = std::abs(X);
    double denom;
    if (mode.kind == CpMode::Kind::Global) {
      denom = std::pow(ax, q);
    } else if (ax <= mode.M) {
      denom = std::pow(mode.M, p - 2.0) * X * X;
    } else {
      denom = std::pow(ax, p);
    }
    return taylor_remainder(X, p) / denom;
  }
};

// Golden-section minimisation of f(sign * exp(y)) over y in [lo, hi].
double golden_min(const CpRatio& f, double sign, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto eval = [&](double y) { return f(sign * std::exp(y)); };
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = eval(c), fd = eval(d);
  for (int i = 0; i < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a)); ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a); fc = eval(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a); fd = eval(d);
    }
  }
  return std::min({fc, fd, eval(0.5 * (a + b))});
}

}  // namespace

double estimate_cp(double p, double q, CpMode mode) {
  if (mode.kind == CpMode::Kind::Global) {
    if (!(p >= 2.0) || !(q >= 2.0) || !(q <= p))
      throw std::invalid_argument("estimate_cp: global mode needs p >= 2, q in [2, p]");
  } else {
    if (!(p > 1.0) || !(p <= 2.0) || !(mode.M >= 1.0))
      throw std::invalid_argument("estimate_cp: capped mode needs 1 < p <= 2, M >= 1");
  }
  const CpRatio ratio{p, q, mode};

  constexpr int kPerSign = 50000;
  const double y_lo = std::log(1e-8), y_hi = std::log(1e6);
  const double dy = (y_hi - y_lo) / (kPerSign - 1);

  double best = INFINITY;
  double best_sign = 1.0;
  int best_i = 0;
  for (double sign : {-1.0, 1.0}) {
    for (int i = 0; i < kPerSign; ++i) {
      const double r = ratio(sign * std::exp(y_lo + i * dy));
      if (r < best) {
        best = r;
        best_sign = sign;
        best_i = i;
      }
    }
  }
  const double lo = y_lo + std::max(best_i - 1, 0) * dy;
  const double hi = y_lo + std::min(best_i + 1, kPerSign - 1) * dy;
  const double refined = golden_min(ratio, best_sign, lo, hi);
  const double inf = std::min(best, refined);
  // refinement margin: the sampled infimum can only overestimate.
  return inf * (1.0 - 1e-10);
}

}  // namespace hardy
