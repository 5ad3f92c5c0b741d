#pragma once

#include <string_view>

namespace hardy {

/// Power-weight exponent `alpha`, integrability exponent `p` and the scale
/// `R` of the logarithmic weights. `beta()` is always derived, never stored.
class Params {
public:
  /// Throws std::invalid_argument unless p > 1 and R >= e.
  Params(double alpha, double p, double R);

  double alpha() const noexcept { return alpha_; }
  double p() const noexcept { return p_; }
  double R() const noexcept { return R_; }

  /// 1 - 1/p - alpha; the exponent of the extremal profile t^beta.
  double beta() const noexcept { return 1.0 - 1.0 / p_ - alpha_; }

  /// alpha * p, the exponent of the power weight.
  double alpha_p() const noexcept { return alpha_ * p_; }

  bool operator==(const Params&) const = default;

private:
  double alpha_;
  double p_;
  double R_;
};

enum class Regime { Noncritical, CriticalBoundary, CriticalInterior };

std::string_view to_string(Regime r) noexcept;

/// |alpha - (1 - 1/p)| at or below this counts as the critical line.
inline constexpr double kCriticalLineTol = 1e-14;

Regime classify(const Params& params) noexcept;

/// Exact rational classification: alpha = a_num/a_den, p = p_num/p_den.
Regime classify_rational(long a_num, long a_den, long p_num, long p_den);

/// Best constant of the weighted Hardy term.
double lambda_const(const Params& params) noexcept;

/// log(R/t); throws std::domain_error for t <= 0.
double a1(double t, double R);

/// log(log(R/t)); throws std::domain_error for t <= 0 or log(R/t) <= 0.
double a2(double t, double R);

/// Smallest R for which A2 stays >= 1 on (0,1].
double e_to_the_e() noexcept;

enum class EnvelopeKind { A1sq, A2sq };

/// max over t in (0,1] of t*A1(t)^2 (resp. t*A2(t)^2).
double envelope_bound(double R, EnvelopeKind kind);

struct CpMode {
  enum class Kind { Global, Capped } kind = Kind::Global;
  double M = 1.0;  ///< cap, only read in Capped mode

  static CpMode global() { return {}; }
  static CpMode capped(double M) { return {Kind::Capped, M}; }
};

/// |1+X|^p - 1 - pX, evaluated without cancellation for small |X|.
double taylor_remainder(double X, double p) noexcept;

/// Lower estimate of the constant c in |1+X|^p - 1 - pX >= c * D(X),
/// where D(X) = |X|^q (global, p >= 2, q in [2,p]) or the capped
/// denominator M^{p-2} X^2 for |X| <= M, |X|^p beyond (1 < p <= 2).
/// Throws std::invalid_argument for an inadmissible (p, q, M).
double estimate_cp(double p, double q, CpMode mode);

}  // namespace hardy
