#pragma once

#include <array>
#include <cstddef>
#include <functional>

#include "hardy/mesh.hpp"

namespace hardy {

/// t^s * A1(t)^{-k} * A2(t)^{-m} with A1 = log(R/t), A2 = log A1.
struct WeightSpec {
  enum class Kind { Power, PowerLog, PowerLogLog };
  Kind kind = Kind::Power;
  double s = 0, k = 0, m = 0;
  double R = 0;  ///< unused for Power

  static WeightSpec power(double s) { return {Kind::Power, s, 0, 0, 0}; }
  static WeightSpec power_log(double s, double k, double R) { return {Kind::PowerLog, s, k, 0, R}; }
  static WeightSpec power_loglog(double s, double k, double m, double R) {
    return {Kind::PowerLogLog, s, k, m, R};
  }

  double operator()(double t) const;
};

struct IntegralResult {
  double value = 0;
  double error_estimate = 0;  ///< |value - value with every cell split in two|
  std::size_t cells = 0;
  bool divergence_warning = false;
};

/// 8-point Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::array<double, 8> x, w;
};
const GaussRule& gauss8();

/// Compensated summation in the order of the calls.
class KahanSum {
public:
  void add(double v) noexcept {
    const double y = v - c_;
    const double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

private:
  double sum_ = 0, c_ = 0;
};

/// Integral over [t_min, t_max] of |u|^a_exp |u'|^b_exp w(t), Gauss-8 per cell.
/// Throws std::invalid_argument for negative exponents.
IntegralResult integrate_weighted(const PiecewiseFn& fn, double a_exp, double b_exp,
                                  const WeightSpec& weight);

/// Integral of an arbitrary cell-wise integrand g(cell, t) over the mesh,
/// with the same rule, summation and divergence test.
IntegralResult integrate_cells(const GradedMesh& mesh,
                               const std::function<double(std::size_t, double)>& g);

/// Exact integral of the weight over [a, b]. Supported: Power with s != -1;
/// PowerLog with s = -1, k != 1; PowerLogLog with s = -1, k = 1, m != 1.
/// Throws std::invalid_argument otherwise. a = 0 is allowed where the
/// integral converges.
double closed_form_oracle(const WeightSpec& weight, double a, double b);

/// |fn(1)|^p.
double boundary_trace_1d(const PiecewiseFn& fn, double p);

}  // namespace hardy
