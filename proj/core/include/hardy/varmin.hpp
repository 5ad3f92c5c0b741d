#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hardy/mesh.hpp"
#include "hardy/params.hpp"

namespace hardy {

struct MinimizeConfig {
  std::size_t n = 4096;
  double gamma = 3.0;
  double t_min = 1e-6;
  std::size_t max_iters = 2000;
  double initial_step = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;          ///< sufficient-decrease constant
  double tol = 1e-12;            ///< relative quotient change counted as stalled
  std::size_t stall_iters = 10;  ///< consecutive stalled steps before stopping
  double boundary_coeff = 0.0;   ///< L in  int |u'|^p t^{ap} - L |u(1)|^p
  double tail_eps = 0.01;        ///< exponent offset of the power tail below t_min
  bool pin_end = false;          ///< impose u(1) = 0

  /// Throws std::invalid_argument unless tol > 0, max_iters >= 1 and the
  /// line-search parameters lie in (0, 1).
  void validate() const;
};

/// Discrete quotient Q(v) = (E(v) - L |v_n|^p) / N(v) on a mesh, where E is
/// the weighted p-energy and N the Hardy integral, both including the
/// contribution of the power tail u = v_0 (t/t_min)^{beta+tail_eps} on
/// (0, t_min).
class QuotientObjective {
public:
  QuotientObjective(const Params& params, GradedMesh mesh, double boundary_coeff, bool pin_end,
                    double tail_eps);

  const GradedMesh& mesh() const noexcept { return mesh_; }
  std::size_t size() const noexcept { return mesh_.nodes().size(); }
  double mu() const noexcept { return mu_; }
  bool pin_end() const noexcept { return pin_end_; }

  double energy(const std::vector<double>& v) const;  ///< E including the tail
  double hardy(const std::vector<double>& v) const;   ///< N including the tail
  double quotient(const std::vector<double>& v) const;
  /// dQ/dv; zero in the pinned component.
  std::vector<double> gradient(const std::vector<double>& v) const;
  /// Solves K d = g with a tridiagonal SPD approximation K of the Hessian.
  std::vector<double> precondition(const std::vector<double>& v, const std::vector<double>& g,
                                   double q) const;
  /// Scales v so that N(v) = 1. Throws std::runtime_error if N(v) = 0.
  void normalize(std::vector<double>& v) const;

private:
  Params params_;
  GradedMesh mesh_;
  double L_;
  bool pin_end_;
  double tail_coeff_N_, tail_coeff_E_;
  double mu_;
  std::vector<double> W_;   // exact int t^{ap} per cell
  std::vector<double> gw_;  // Gauss weight * t^{ap-p} per cell point
  std::vector<double> phiL_, phiR_;
};

struct DegenerationRow {
  double t_min;
  double energy_discrete;  ///< min of the PL energy with u(t_min) = 0, u(1) = 1
  double energy_exact;     ///< same over all functions on [t_min, 1]
};

struct MinimizeResult {
  double quotient = 0;
  std::optional<PiecewiseFn> minimizer;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> history;
  double mu = 0;
  std::vector<DegenerationRow> degeneration;  ///< filled in the critical regimes
};

/// Preconditioned projected descent from `start`.
MinimizeResult minimize_energy(const QuotientObjective& objective, const PiecewiseFn& start,
                               const MinimizeConfig& config);

struct BoundaryMode {
  enum class Kind { Plain, WithBoundary } kind = Kind::Plain;
  double L = 0;
  static BoundaryMode plain() { return {}; }
  static BoundaryMode with_boundary(double L) { return {Kind::WithBoundary, L}; }
};

/// Minimizes the quotient for noncritical params. In the critical regimes
/// no positive constant is reported: `degeneration` lists the minimal
/// energies for t_min = 10^-1 ... 10^-8 and `quotient` is the last one.
MinimizeResult best_constant(const Params& params, BoundaryMode mode, MinimizeConfig config);

/// Exact minimum of the PL energy with u(t_min) = 0, u(1) = 1 on a mesh.
double discrete_min_energy(const Params& params, const GradedMesh& mesh);

struct SweepRow {
  double alpha, p, quotient, lambda, relative_gap;
  std::size_t n;
  double t_min;
  std::size_t iterations;
};

/// best_constant with the sharp boundary coefficient over a grid of
/// noncritical (alpha, p); rows in input order. Throws
/// std::invalid_argument for a critical grid point.
std::vector<SweepRow> sweep(const std::vector<double>& alphas, const std::vector<double>& ps,
                            double R, const MinimizeConfig& config, unsigned workers = 1);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace hardy
