#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hardy/ineq1d.hpp"
#include "hardy/ledger.hpp"
#include "hardy/mesh.hpp"
#include "hardy/params.hpp"

namespace hardy {

struct Point {
  double x, y;
};

/// Local frame of one boundary component at parameter theta.
struct BoundaryFrame {
  Point X;        ///< boundary point
  Point N;        ///< inner unit normal
  double speed;   ///< |dX/dtheta|
  double kappa;   ///< curvature, positive where the domain is convex
};

/// Planar C^2 domain. Lengths share the unit of the distance function.
class DomainSpec {
public:
  enum class Kind { Disk, Annulus, Ellipse };

  static DomainSpec disk(double rho);
  static DomainSpec annulus(double r_in, double r_out);
  static DomainSpec ellipse(double a, double b);

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }  ///< rho, r_in or semi-axis a
  double b() const noexcept { return b_; }  ///< unused, r_out or semi-axis b

  /// Largest width for which the normal map of the boundary is injective.
  double eta0() const noexcept;
  /// max |kappa| over the boundary; |Jac H_t - 1| <= c t.
  double jacobian_c() const noexcept;
  /// sup of the distance function.
  double max_distance() const noexcept;
  std::size_t components() const noexcept { return kind_ == Kind::Annulus ? 2 : 1; }
  BoundaryFrame frame(std::size_t component, double theta) const;
  /// Jac H_t at (t, theta) relative to the boundary arc length.
  double jacobian(std::size_t component, double t, double theta) const;
  double area() const noexcept;
  /// Total length of the boundary (trapezoid rule for the ellipse).
  double perimeter() const;
  bool contains(Point x) const noexcept;

  std::string describe() const;

private:
  DomainSpec(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_;
  double a_, b_;
};

/// Parses "disk:1", "annulus:1,2" or "ellipse:2,1". Throws std::invalid_argument.
DomainSpec parse_domain(std::string_view text);

/// Distance to the boundary. Throws std::invalid_argument outside the domain.
double distance(const DomainSpec& domain, Point x);

/// min(eta0 / 4, 0.25)
double default_eta(const DomainSpec& domain) noexcept;

struct TubularGrid {
  GradedMesh t_mesh;        ///< graded mesh on [t_min, eta]
  std::size_t n_sigma = 64; ///< trapezoid nodes per boundary component
};

/// Grid on [t_min_rel * eta, eta]. Throws std::invalid_argument unless
/// 0 < eta < eta0.
TubularGrid make_tubular_grid(const DomainSpec& domain, double eta, std::size_t n, double gamma,
                              double t_min_rel, std::size_t n_sigma = 64);

using ScalarField = std::function<double(double t, double theta, std::size_t component)>;

/// Integral over Omega_eta, eta = grid end. The interval [0, t_min] is
/// covered by one extra Gauss cell.
double tubular_quadrature(const DomainSpec& domain, const TubularGrid& grid, const ScalarField& f);

struct TrigMode {
  int k;
  double cos_coeff, sin_coeff;
};

/// u(t, theta) = phi(t) psi(theta), psi = c0 + sum (a_k cos k theta + b_k sin k theta).
struct FieldFn {
  PiecewiseFn phi;
  double c0 = 1.0;
  std::vector<TrigMode> modes;

  bool radial() const noexcept { return modes.empty(); }
  double psi(double theta) const noexcept;
  double dpsi(double theta) const noexcept;
  double operator()(double t, double theta) const { return phi(t) * psi(theta); }
};

FieldFn radial_field(PiecewiseFn phi);

/// int over Sigma_eta of |u|^p delta^{ap}. Throws std::invalid_argument
/// unless eta < eta0 and eta lies within the field's mesh.
double trace_integral(const DomainSpec& domain, double eta, const FieldFn& field, double ap,
                      double p, std::size_t n_sigma = 64);

enum class NdId { Eq2_6, Eq2_7, Eq2_11, Eq2_12, Eq2_14, Eq2_15 };

std::string_view to_string(NdId id) noexcept;
/// Throws std::invalid_argument for an unknown name.
NdId nd_id_from_string(std::string_view name);
const std::vector<NdId>& all_nd_ids();
/// True for the ids integrating over the whole domain.
bool is_whole_domain(NdId id) noexcept;

/// Constants of the N-dimensional inequalities at width eta.
struct NdConstants {
  Params params;
  double eta;
  ConstantLedger ledger;  ///< 1D ledger at R / eta
  double C2 = 0;
  double L = 0;           ///< boundary coefficient on Sigma_eta
  double gamma = 0;       ///< whole-domain Hardy constant (disk only)
  double L_prime = 0;     ///< whole-domain boundary coefficient (critical, disk only)
  double C1 = 0;          ///< absorption constant with the exact envelope max t*A1^2
  std::string route;      ///< "monotone" or "absorption"
};

/// Throws std::invalid_argument when R is too small for the domain, eta is
/// not below eta0, or the absorption condition C1 >= c eta fails.
NdConstants nd_constants(const DomainSpec& domain, const Params& params, double eta);

/// Halves eta from `start` until nd_constants succeeds. Throws
/// std::runtime_error after 40 halvings.
double admissible_eta(const DomainSpec& domain, const Params& params, double start);

/// Deficit of the display `id` for a separable field. The field's mesh
/// must end at eta (local ids) or at the disk radius (whole-domain ids,
/// radial fields only).
DeficitReport nd_deficit(NdId id, const DomainSpec& domain, const FieldFn& field,
                         const NdConstants& constants, std::size_t n_sigma = 64);

struct NdSuiteConfig {
  std::size_t radial_cases = 200;
  std::size_t angular_cases = 50;
  std::size_t n = 256;
  double t_min_rel = 1e-4;
  double gamma = 2.0;
  std::size_t n_sigma = 64;
  std::uint64_t seed = 1;
  double tol_rel = 1e-8;
};

/// Random radial fields, then random angular fields (local ids only).
std::vector<SuiteRecord> nd_suite(NdId id, const DomainSpec& domain, const NdConstants& constants,
                                  const NdSuiteConfig& config);

struct NdDemoRow {
  double eps;
  double energy_closed;
  double energy_quadrature;
};

struct NdDemoTable {
  std::string family;
  std::vector<NdDemoRow> rows;
  bool strictly_decreasing = false;
};

/// eta times the 1D default schedule.
std::vector<double> default_nd_demo_schedule(const Params& params, double eta);

/// Energies of radial Ramp / LogRamp fields in delta equal to 1 on
/// Sigma_eta. Throws std::invalid_argument in the noncritical regime.
NdDemoTable nd_critical_demo(const DomainSpec& domain, const Params& params,
                             const std::vector<double>& eps_sequence, double eta,
                             std::size_t n_sigma = 64);

/// key=value lines; '#' starts a comment. Throws std::runtime_error on a
/// malformed line.
std::map<std::string, std::string> read_config(std::istream& is);

/// Domain from "domain" plus "rho" / "r_in", "r_out" / "a", "b" keys.
DomainSpec domain_from_config(const std::map<std::string, std::string>& config);

}  // namespace hardy
