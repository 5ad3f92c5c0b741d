#include "hardy/geom.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hardy/quad.hpp"

namespace hardy {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool finite_positive(double v) { return std::isfinite(v) && v > 0; }

double parse_number(std::string_view s, std::string_view what) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad number for " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

}  // namespace

DomainSpec DomainSpec::disk(double rho) {
  if (!finite_positive(rho)) throw std::invalid_argument("Disk: rho must be positive");
  return {Kind::Disk, rho, 0};
}

DomainSpec DomainSpec::annulus(double r_in, double r_out) {
  if (!finite_positive(r_in) || !std::isfinite(r_out) || !(r_out > r_in))
    throw std::invalid_argument("Annulus: need 0 < r_in < r_out");
  return {Kind::Annulus, r_in, r_out};
}

DomainSpec DomainSpec::ellipse(double a, double b) {
  if (!finite_positive(a) || !finite_positive(b))
    throw std::invalid_argument("Ellipse: semi-axes must be positive");
  return {Kind::Ellipse, a, b};
}

double DomainSpec::eta0() const noexcept {
  switch (kind_) {
    case Kind::Disk: return a_;
    case Kind::Annulus: return 0.5 * (b_ - a_);
    case Kind::Ellipse: {
      const double lo = std::min(a_, b_), hi = std::max(a_, b_);
      return lo * lo / hi;
    }
  }
  return 0;
}

double DomainSpec::jacobian_c() const noexcept {
  switch (kind_) {
    case Kind::Disk: return 1.0 / a_;
    case Kind::Annulus: return 1.0 / a_;
    case Kind::Ellipse: {
      const double lo = std::min(a_, b_), hi = std::max(a_, b_);
      return hi / (lo * lo);
    }
  }
  return 0;
}

double DomainSpec::max_distance() const noexcept {
  switch (kind_) {
    case Kind::Disk: return a_;
    case Kind::Annulus: return 0.5 * (b_ - a_);
    case Kind::Ellipse: return std::min(a_, b_);
  }
  return 0;
}

BoundaryFrame DomainSpec::frame(std::size_t component, double theta) const {
  const double c = std::cos(theta), s = std::sin(theta);
  switch (kind_) {
    case Kind::Disk:
      return {{a_ * c, a_ * s}, {-c, -s}, a_, 1.0 / a_};
    case Kind::Annulus:
      if (component == 0) return {{b_ * c, b_ * s}, {-c, -s}, b_, 1.0 / b_};
      if (component == 1) return {{a_ * c, a_ * s}, {c, s}, a_, -1.0 / a_};
      break;
    case Kind::Ellipse: {
      if (component != 0) break;
      const double speed = std::hypot(a_ * s, b_ * c);
      return {{a_ * c, b_ * s}, {-b_ * c / speed, -a_ * s / speed}, speed,
              a_ * b_ / (speed * speed * speed)};
    }
  }
  throw std::out_of_range("DomainSpec::frame: no such boundary component");
}

double DomainSpec::jacobian(std::size_t component, double t, double theta) const {
  return 1.0 - frame(component, theta).kappa * t;
}

double DomainSpec::area() const noexcept {
  switch (kind_) {
    case Kind::Disk: return std::numbers::pi * a_ * a_;
    case Kind::Annulus: return std::numbers::pi * (b_ * b_ - a_ * a_);
    case Kind::Ellipse: return std::numbers::pi * a_ * b_;
  }
  return 0;
}

double DomainSpec::perimeter() const {
  switch (kind_) {
    case Kind::Disk: return kTwoPi * a_;
    case Kind::Annulus: return kTwoPi * (a_ + b_);
    case Kind::Ellipse: {
      constexpr int n = 4096;
      double s = 0;
      for (int j = 0; j < n; ++j) s += frame(0, kTwoPi * j / n).speed;
      return s * kTwoPi / n;
    }
  }
  return 0;
}

bool DomainSpec::contains(Point x) const noexcept {
  const double r = std::hypot(x.x, x.y);
  switch (kind_) {
    case Kind::Disk: return r <= a_ * (1 + 1e-12);
    case Kind::Annulus: return r >= a_ * (1 - 1e-12) && r <= b_ * (1 + 1e-12);
    case Kind::Ellipse: {
      const double u = x.x / a_, v = x.y / b_;
      return u * u + v * v <= 1 + 1e-12;
    }
  }
  return false;
}

std::string DomainSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Disk: os << "disk:" << a_; break;
    case Kind::Annulus: os << "annulus:" << a_ << ',' << b_; break;
    case Kind::Ellipse: os << "ellipse:" << a_ << ',' << b_; break;
  }
  return os.str();
}

DomainSpec parse_domain(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw std::invalid_argument("domain must look like disk:1, annulus:1,2 or ellipse:2,1");
  const std::string_view kind = text.substr(0, colon);
  std::string_view rest = text.substr(colon + 1);
  std::vector<double> args;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    args.push_back(parse_number(rest.substr(0, comma), "domain"));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (kind == "disk" && args.size() == 1) return DomainSpec::disk(args[0]);
  if (kind == "annulus" && args.size() == 2) return DomainSpec::annulus(args[0], args[1]);
  if (kind == "ellipse" && args.size() == 2) return DomainSpec::ellipse(args[0], args[1]);
  throw std::invalid_argument("unknown domain '" + std::string(text) + "'");
}

namespace {

// (X(theta) - x) . X'(theta) for the ellipse, and its derivative
double foot_residual(double a, double b, Point x, double th) {
  const double c = std::cos(th), s = std::sin(th);
  return (b * b - a * a) * s * c + a * x.x * s - b * x.y * c;
}

double foot_derivative(double a, double b, Point x, double th) {
  const double c = std::cos(th), s = std::sin(th);
  return (b * b - a * a) * (c * c - s * s) + a * x.x * c + b * x.y * s;
}

double ellipse_distance(double a, double b, Point x) {
  const double scale = std::max(a, b) * std::max({a, b, std::abs(x.x), std::abs(x.y)});
  auto dist = [&](double th) { return std::hypot(a * std::cos(th) - x.x, b * std::sin(th) - x.y); };
  double best = std::numeric_limits<double>::infinity();

  const std::array<double, 5> starts{std::atan2(a * x.y, b * x.x), 0.0, 0.5 * std::numbers::pi,
                                     std::numbers::pi, 1.5 * std::numbers::pi};
  bool newton_ok = false;
  for (double th : starts) {
    for (int it = 0; it < 50; ++it) {
      const double d = foot_derivative(a, b, x, th);
      if (d == 0) break;
      const double step = foot_residual(a, b, x, th) / d;
      th -= step;
      if (std::abs(step) < 1e-15) break;
    }
    if (std::abs(foot_residual(a, b, x, th)) <= 1e-12 * scale) {
      newton_ok = true;
      best = std::min(best, dist(th));
    }
  }

  // bisection on sign changes of the residual; also guards against Newton
  // converging to a maximum of the distance only
  constexpr int kSamples = 256;
  double prev_th = 0, prev_f = foot_residual(a, b, x, 0);
  for (int j = 1; j <= kSamples; ++j) {
    const double th = kTwoPi * j / kSamples;
    const double f = foot_residual(a, b, x, th);
    if (prev_f == 0) best = std::min(best, dist(prev_th));
    if ((prev_f < 0) != (f < 0) && f != 0) {
      double lo = prev_th, hi = th, flo = prev_f;
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi), fm = foot_residual(a, b, x, mid);
        if ((fm < 0) == (flo < 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      best = std::min(best, dist(0.5 * (lo + hi)));
    }
    prev_th = th;
    prev_f = f;
  }
  if (!newton_ok && !std::isfinite(best))
    throw std::runtime_error("distance: foot-point iteration failed");
  return best;
}

}  // namespace

double distance(const DomainSpec& domain, Point x) {
  if (!std::isfinite(x.x) || !std::isfinite(x.y) || !domain.contains(x))
    throw std::invalid_argument("distance: point outside the domain");
  const double r = std::hypot(x.x, x.y);
  switch (domain.kind()) {
    case DomainSpec::Kind::Disk: return std::max(0.0, domain.a() - r);
    case DomainSpec::Kind::Annulus:
      return std::max(0.0, std::min(r - domain.a(), domain.b() - r));
    case DomainSpec::Kind::Ellipse: return ellipse_distance(domain.a(), domain.b(), x);
  }
  return 0;
}

double default_eta(const DomainSpec& domain) noexcept {
  return std::min(domain.eta0() / 4.0, 0.25);
}

TubularGrid make_tubular_grid(const DomainSpec& domain, double eta, std::size_t n, double gamma,
                              double t_min_rel, std::size_t n_sigma) {
  if (!(eta > 0) || !(eta < domain.eta0()))
    throw std::invalid_argument("make_tubular_grid: need 0 < eta < eta0");
  if (n_sigma < 1) throw std::invalid_argument("make_tubular_grid: n_sigma must be >= 1");
  return {make_mesh(n, gamma, t_min_rel).scaled(eta), n_sigma};
}

double tubular_quadrature(const DomainSpec& domain, const TubularGrid& grid, const ScalarField& f) {
  const double eta = grid.t_mesh.t_max();
  if (!(eta < domain.eta0())) throw std::invalid_argument("tubular_quadrature: eta >= eta0");
  std::vector<double> nodes{0.0};
  for (double t : grid.t_mesh.nodes()) nodes.push_back(t);
  const auto& rule = gauss8();
  KahanSum total;
  for (std::size_t comp = 0; comp < domain.components(); ++comp) {
    for (std::size_t j = 0; j < grid.n_sigma; ++j) {
      const double th = kTwoPi * static_cast<double>(j) / static_cast<double>(grid.n_sigma);
      const BoundaryFrame fr = domain.frame(comp, th);
      const double dsigma = fr.speed * kTwoPi / static_cast<double>(grid.n_sigma);
      for (std::size_t c = 0; c + 1 < nodes.size(); ++c) {
        const double h = 0.5 * (nodes[c + 1] - nodes[c]), mid = 0.5 * (nodes[c + 1] + nodes[c]);
        double s = 0;
        for (int k = 0; k < 8; ++k) {
          const double t = mid + h * rule.x[k];
          s += rule.w[k] * f(t, th, comp) * (1.0 - fr.kappa * t);
        }
        total.add(s * h * dsigma);
      }
    }
  }
  return total.value();
}

double FieldFn::psi(double theta) const noexcept {
  double v = c0;
  for (const auto& m : modes)
    v += m.cos_coeff * std::cos(m.k * theta) + m.sin_coeff * std::sin(m.k * theta);
  return v;
}

double FieldFn::dpsi(double theta) const noexcept {
  double v = 0;
  for (const auto& m : modes)
    v += m.k * (m.sin_coeff * std::cos(m.k * theta) - m.cos_coeff * std::sin(m.k * theta));
  return v;
}

FieldFn radial_field(PiecewiseFn phi) { return FieldFn{std::move(phi), 1.0, {}}; }

double trace_integral(const DomainSpec& domain, double eta, const FieldFn& field, double ap,
                      double p, std::size_t n_sigma) {
  if (!(eta > 0) || !(eta < domain.eta0()))
    throw std::invalid_argument("trace_integral: need 0 < eta < eta0");
  const auto& mesh = field.phi.mesh();
  if (eta < mesh.t_min() || eta > mesh.t_max() * (1 + 1e-12))
    throw std::invalid_argument("trace_integral: eta is outside the field's mesh");
  if (n_sigma < 1) throw std::invalid_argument("trace_integral: n_sigma must be >= 1");
  const double phi_eta = field.phi(std::min(eta, mesh.t_max()));
  KahanSum s;
  for (std::size_t comp = 0; comp < domain.components(); ++comp)
    for (std::size_t j = 0; j < n_sigma; ++j) {
      const double th = kTwoPi * static_cast<double>(j) / static_cast<double>(n_sigma);
      const BoundaryFrame fr = domain.frame(comp, th);
      s.add(std::pow(std::abs(phi_eta * field.psi(th)), p) * (1.0 - fr.kappa * eta) * fr.speed);
    }
  return std::pow(eta, ap) * s.value() * kTwoPi / static_cast<double>(n_sigma);
}


std::string_view to_string(NdId id) noexcept {
  switch (id) {
    case NdId::Eq2_6: return "Eq2_6";
    case NdId::Eq2_7: return "Eq2_7";
    case NdId::Eq2_11: return "Eq2_11";
    case NdId::Eq2_12: return "Eq2_12";
    case NdId::Eq2_14: return "Eq2_14";
    case NdId::Eq2_15: return "Eq2_15";
  }
  return "?";
}

const std::vector<NdId>& all_nd_ids() {
  static const std::vector<NdId> ids{NdId::Eq2_6,  NdId::Eq2_7,  NdId::Eq2_11,
                                     NdId::Eq2_12, NdId::Eq2_14, NdId::Eq2_15};
  return ids;
}

NdId nd_id_from_string(std::string_view name) {
  for (NdId id : all_nd_ids())
    if (to_string(id) == name) return id;
  throw std::invalid_argument("unknown N-d id '" + std::string(name) + "'");
}

bool is_whole_domain(NdId id) noexcept {
  return id == NdId::Eq2_7 || id == NdId::Eq2_14 || id == NdId::Eq2_15;
}

namespace {

Regime required_regime(NdId id) {
  switch (id) {
    case NdId::Eq2_6: case NdId::Eq2_7: return Regime::Noncritical;
    case NdId::Eq2_11: case NdId::Eq2_14: return Regime::CriticalInterior;
    case NdId::Eq2_12: case NdId::Eq2_15: return Regime::CriticalBoundary;
  }
  return Regime::Noncritical;
}

// range of the curvature over the boundary
std::pair<double, double> kappa_range(const DomainSpec& d) {
  switch (d.kind()) {
    case DomainSpec::Kind::Disk: return {1.0 / d.a(), 1.0 / d.a()};
    case DomainSpec::Kind::Annulus: return {-1.0 / d.a(), 1.0 / d.b()};
    case DomainSpec::Kind::Ellipse: {
      const double lo = std::min(d.a(), d.b()), hi = std::max(d.a(), d.b());
      return {lo / (hi * hi), hi / (lo * lo)};
    }
  }
  return {0, 0};
}

}  // namespace

NdConstants nd_constants(const DomainSpec& domain, const Params& params, double eta) {
  if (!(eta > 0) || !(eta < domain.eta0()))
    throw std::invalid_argument("nd_constants: need 0 < eta < eta0");
  const Regime regime = classify(params);
  const double threshold = regime == Regime::CriticalBoundary ? e_to_the_e() : std::numbers::e;
  if (!(params.R() > threshold * domain.max_distance()))
    throw std::invalid_argument("nd_constants: R must exceed " +
                                std::string(regime == Regime::CriticalBoundary ? "e^e" : "e") +
                                " times sup delta");
  const double p = params.p();
  NdConstants k{params, eta, build_ledger(Params(params.alpha(), p, params.R() / eta)), 0, 0, 0, 0, 0, ""};
  const auto [kmin, kmax] = kappa_range(domain);
  const double scale = std::pow(eta, 1.0 - p);
  if (regime == Regime::Noncritical && kmin >= 0) {
    k.route = "monotone";
    k.C2 = k.ledger.C3;
    k.L = k.ledger.L3 * scale;
  } else {
    k.route = "absorption";
    const double c = std::max(std::abs(kmin), std::abs(kmax));
    // the ledger divides by 4R'/e^2; the argument only needs max t*A1^2 on (0,1]
    const double env = regime == Regime::CriticalBoundary
                           ? k.ledger.envelope
                           : envelope_bound(k.ledger.params.R(), EnvelopeKind::A1sq);
    k.C1 = k.ledger.C1 * k.ledger.envelope / env;
    if (!(k.C1 >= c * eta))
      throw std::invalid_argument("nd_constants: eta too large, C1 < c*eta");
    k.C2 = k.ledger.C0;
    k.L = regime == Regime::Noncritical ? k.ledger.L * scale / (1.0 - kmin * eta)
                                        : k.ledger.L * scale / (1.0 - kmax * eta);
  }
  if (domain.kind() == DomainSpec::Kind::Disk) {
    if (regime == Regime::Noncritical) {
      k.gamma = k.ledger.lambda;
    } else {
      const double rho = domain.a(), r0 = rho - eta, ap = params.alpha_p();
      const double g_min = std::pow(eta, ap);
      double h_max = 0;
      if (regime == Regime::CriticalInterior) {
        h_max = std::max(std::pow(eta, ap - p), std::pow(rho, ap - p));
      } else {
        auto h = [&](double d) { return 1.0 / (d * std::pow(a1(d, params.R()), p)); };
        h_max = std::max(h(eta), h(rho));
        const double crit = params.R() * std::exp(-p);
        if (crit > eta && crit < rho) h_max = std::max(h_max, h(crit));
      }
      k.gamma = std::min(k.ledger.lambda,
                         g_min / (h_max * std::pow(r0, p) * std::pow(p - 1.0, p - 1.0)));
      k.L_prime = k.L + k.gamma * h_max * r0 * std::pow(eta, -ap);
    }
  }
  if (!(k.C2 > 0) || !(k.L > 0)) throw std::runtime_error("nd_constants: nonpositive constant");
  return k;
}

double admissible_eta(const DomainSpec& domain, const Params& params, double start) {
  double eta = std::min(start, 0.999 * domain.eta0());
  for (int i = 0; i <= 40; ++i, eta *= 0.5) {
    try {
      nd_constants(domain, params, eta);
      return eta;
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::runtime_error("admissible_eta: no admissible width found");
}

namespace {

struct TraceTerm {
  bool lhs;
  double coeff;
};

std::vector<Term> nd_terms(NdId id, const NdConstants& k, TraceTerm& trace) {
  const Params& P = k.params;
  const double p = P.p(), ap = P.alpha_p(), R = P.R(), lam = k.ledger.lambda;
  auto pw = [](double s) { return [s](double t) { return std::pow(t, s); }; };
  auto pw_l1 = [R](double s, double m) {
    return [=](double t) { return std::pow(t, s) * std::pow(a1(t, R), -m); };
  };
  auto pw_l1_l2 = [R](double s, double m, double q) {
    return [=](double t) { return std::pow(t, s) * std::pow(a1(t, R), -m) * std::pow(a2(t, R), -q); };
  };
  switch (id) {
    case NdId::Eq2_6:
      trace = {false, k.L};
      return {{"energy", true, 1.0, 0, p, pw(ap)},
              {"hardy", false, lam, p, 0, pw(ap - p)},
              {"remainder", false, k.C2, p, 0, pw_l1(ap - p, 2)}};
    case NdId::Eq2_11:
      trace = {true, k.L};
      return {{"energy", true, 1.0, 0, p, pw(ap)},
              {"hardy", false, lam, p, 0, pw(ap - p)},
              {"remainder", false, k.C2, p, 0, pw_l1(ap - p, 2)}};
    case NdId::Eq2_12:
      trace = {true, k.L};
      return {{"energy", true, 1.0, 0, p, pw(p - 1.0)},
              {"hardy", false, lam, p, 0, pw_l1(-1.0, p)},
              {"remainder", false, k.C2, p, 0, pw_l1_l2(-1.0, p, 2)}};
    case NdId::Eq2_7:
      trace = {false, 0.0};
      return {{"energy", true, 1.0, 0, p, pw(ap)}, {"hardy", false, k.gamma, p, 0, pw(ap - p)}};
    case NdId::Eq2_14:
      trace = {true, k.L_prime};
      return {{"energy", true, 1.0, 0, p, pw(ap)}, {"hardy", false, k.gamma, p, 0, pw(ap - p)}};
    case NdId::Eq2_15:
      trace = {true, k.L_prime};
      return {{"energy", true, 1.0, 0, p, pw(p - 1.0)},
              {"hardy", false, k.gamma, p, 0, pw_l1(-1.0, p)}};
  }
  return {};
}

}  // namespace

DeficitReport nd_deficit(NdId id, const DomainSpec& domain, const FieldFn& field,
                         const NdConstants& constants, std::size_t n_sigma) {
  const Params& P = constants.params;
  if (classify(P) != required_regime(id))
    throw std::invalid_argument("nd_deficit: " + std::string(to_string(id)) +
                                " does not apply to the regime of the parameters");
  const double eta = constants.eta;
  if (!(eta < domain.eta0())) throw std::invalid_argument("nd_deficit: eta >= eta0");
  if (n_sigma < 1) throw std::invalid_argument("nd_deficit: n_sigma must be >= 1");
  const bool whole = is_whole_domain(id);
  const GradedMesh& mesh = field.phi.mesh();
  double t_end = eta;
  if (whole) {
    if (domain.kind() != DomainSpec::Kind::Disk)
      throw std::invalid_argument("nd_deficit: whole-domain ids are implemented for the disk only");
    if (!field.radial())
      throw std::invalid_argument("nd_deficit: whole-domain ids need a radial field");
    t_end = domain.a();
  }
  if (std::abs(mesh.t_max() - t_end) > 1e-12 * t_end)
    throw std::invalid_argument("nd_deficit: the field's mesh must end at " +
                                std::string(whole ? "the disk radius" : "eta"));
  if (whole && !(mesh.t_min() < eta))
    throw std::invalid_argument("nd_deficit: eta lies below the field's mesh");

  TraceTerm trace{};
  const std::vector<Term> terms = nd_terms(id, constants, trace);
  const double p = P.p();
  const auto& rule = gauss8();
  const auto nodes = mesh.nodes();
  const std::size_t cells = mesh.cells();

  // Gauss points (t, weight * half-width) of the coarse and the split rule
  struct Pt {
    std::size_t cell;
    double t, w;
  };
  std::array<std::vector<Pt>, 2> pts;
  for (std::size_t c = 0; c < cells; ++c) {
    const double a = nodes[c], b = nodes[c + 1];
    auto add = [&](std::vector<Pt>& out, double lo, double hi) {
      const double h = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
      for (int k = 0; k < 8; ++k) out.push_back({c, mid + h * rule.x[k], h * rule.w[k]});
    };
    add(pts[0], a, b);
    add(pts[1], a, 0.5 * (a + b));
    add(pts[1], 0.5 * (a + b), b);
  }
  std::array<std::vector<std::vector<double>>, 2> wt;
  for (int r = 0; r < 2; ++r) {
    wt[r].assign(terms.size(), std::vector<double>(pts[r].size()));
    for (std::size_t j = 0; j < terms.size(); ++j)
      for (std::size_t i = 0; i < pts[r].size(); ++i) wt[r][j][i] = terms[j].weight(pts[r][i].t);
  }

  // radial fields on circular boundaries do not depend on theta
  const bool invariant = field.radial() && domain.kind() != DomainSpec::Kind::Ellipse;
  const std::size_t n_theta = invariant ? 1 : n_sigma;
  std::array<std::vector<KahanSum>, 2> acc{std::vector<KahanSum>(terms.size()),
                                           std::vector<KahanSum>(terms.size())};
  for (std::size_t comp = 0; comp < domain.components(); ++comp)
    for (std::size_t j = 0; j < n_theta; ++j) {
      const double th = kTwoPi * static_cast<double>(j) / static_cast<double>(n_theta);
      const BoundaryFrame fr = domain.frame(comp, th);
      const double dsigma = fr.speed * kTwoPi / static_cast<double>(n_theta);
      const double psi = field.psi(th), dpsi = field.dpsi(th);
      for (int r = 0; r < 2; ++r) {
        std::vector<double> part(terms.size(), 0.0);
        for (std::size_t i = 0; i < pts[r].size(); ++i) {
          const auto& q = pts[r][i];
          const double J = 1.0 - fr.kappa * q.t;
          const double phi = field.phi.eval_in_cell(q.cell, q.t);
          const double u = phi * psi;
          const double dn = field.phi.slope(q.cell) * psi;
          const double dt = phi * dpsi / (fr.speed * J);
          const double grad = std::hypot(dn, dt);
          for (std::size_t k = 0; k < terms.size(); ++k) {
            double v = wt[r][k][i] * q.w * J;
            if (terms[k].a_exp != 0) v *= std::pow(std::abs(u), terms[k].a_exp);
            if (terms[k].b_exp != 0) v *= std::pow(grad, terms[k].b_exp);
            part[k] += v;
          }
        }
        for (std::size_t k = 0; k < terms.size(); ++k) acc[r][k].add(part[k] * dsigma);
      }
    }

  DeficitReport rep;
  rep.id = std::string(to_string(id));
  rep.t_min = mesh.t_min();
  rep.n = cells;
  KahanSum lhs, rhs, err;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const double v = terms[k].coeff * acc[0][k].value();
    const double e = std::abs(terms[k].coeff) * std::abs(acc[0][k].value() - acc[1][k].value());
    rep.terms.push_back({terms[k].name, terms[k].lhs, v, e});
    (terms[k].lhs ? lhs : rhs).add(v);
    err.add(e);
    if (!std::isfinite(v)) rep.divergence_warning = true;
  }
  if (trace.coeff != 0) {
    const double v = trace.coeff * trace_integral(domain, eta, field, P.alpha_p(), p, n_sigma);
    rep.terms.push_back({"trace", trace.lhs, v, 0.0});
    (trace.lhs ? lhs : rhs).add(v);
  }
  rep.lhs = lhs.value();
  rep.rhs = rhs.value();
  rep.deficit = rep.lhs - rep.rhs;
  rep.error_estimate = err.value();
  rep.info = {{"lambda", constants.ledger.lambda}, {"eta", eta},        {"C2", constants.C2},
              {"L", constants.L},                   {"gamma", constants.gamma},
              {"L_prime", constants.L_prime},      {"n_sigma", static_cast<double>(n_sigma)}};
  return rep;
}

std::vector<SuiteRecord> nd_suite(NdId id, const DomainSpec& domain, const NdConstants& constants,
                                  const NdSuiteConfig& config) {
  const bool whole = is_whole_domain(id);
  const double t_end = whole ? domain.a() : constants.eta;
  // whole-domain meshes must start below eta
  const double t_min_rel =
      whole ? std::min(config.t_min_rel, 0.01 * constants.eta / t_end) : config.t_min_rel;
  const GradedMesh unit = make_mesh(config.n, config.gamma, t_min_rel);
  const GradedMesh mesh = unit.scaled(t_end);
  const std::size_t angular = whole ? 0 : config.angular_cases;
  std::vector<SuiteRecord> out;
  out.reserve(config.radial_cases + angular);
  for (std::size_t i = 0; i < config.radial_cases + angular; ++i) {
    const std::uint64_t seed = splitmix64(config.seed + i);
    std::mt19937_64 rng(seed);
    const PiecewiseFn f = random_test_function(unit, constants.params, rng);
    FieldFn field{PiecewiseFn(mesh, std::vector<double>(f.values().begin(), f.values().end()),
                              f.support_floor()),
                  1.0, {}};
    if (i >= config.radial_cases) {
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::uniform_int_distribution<int> count(1, 3), order(1, 6);
      field.c0 = gauss(rng);
      const int m = count(rng);
      for (int j = 0; j < m; ++j) field.modes.push_back({order(rng), gauss(rng), gauss(rng)});
    }
    const DeficitReport r = nd_deficit(id, domain, field, constants, config.n_sigma);
    out.push_back({r.id, seed, r.n, r.t_min, r.lhs, r.rhs, r.deficit,
                   r.deficit >= r.tolerance(config.tol_rel) && !r.divergence_warning});
  }
  return out;
}

std::vector<double> default_nd_demo_schedule(const Params& params, double eta) {
  std::vector<double> eps = default_demo_schedule(params);
  for (double& e : eps) e *= eta;
  return eps;
}

NdDemoTable nd_critical_demo(const DomainSpec& domain, const Params& params,
                             const std::vector<double>& eps_sequence, double eta,
                             std::size_t n_sigma) {
  const Regime regime = classify(params);
  if (regime == Regime::Noncritical)
    throw std::invalid_argument("nd_critical_demo: parameters are noncritical");
  if (!(eta > 0) || !(eta < domain.eta0()))
    throw std::invalid_argument("nd_critical_demo: need 0 < eta < eta0");
  const double p = params.p(), ap = params.alpha_p();
  // int over the boundary of Jac H_t = perimeter - 2 pi chi t
  const double perim = domain.perimeter();
  const double chi = domain.kind() == DomainSpec::Kind::Annulus ? 0.0 : 1.0;
  const bool interior = regime == Regime::CriticalInterior;
  NdDemoTable table;
  table.family = interior ? "Ramp" : "LogRamp";
  for (double eps : eps_sequence) {
    NdDemoRow row{eps, 0, 0};
    // profile in delta: family with parameter eps / eta evaluated at delta / eta
    const TestFamily fam{interior ? TestFamily::Kind::Ramp : TestFamily::Kind::LogRamp, eps / eta,
                         params};
    fam.validate();
    std::vector<double> nodes;
    double tail = 0;
    if (interior) {
      row.energy_closed = std::pow(eps, -p) * (perim * std::pow(eps, ap + 1.0) / (ap + 1.0) -
                                               kTwoPi * chi * std::pow(eps, ap + 2.0) / (ap + 2.0));
      const double t0 = eps * 1e-8;
      const std::array<double, 2> bp{t0, eps};
      const GradedMesh m = make_composite_mesh(bp, 64, 3.0);
      nodes.assign(m.nodes().begin(), m.nodes().end());
      tail = std::pow(eps, -p) * (perim * std::pow(t0, ap + 1.0) / (ap + 1.0) -
                                  kTwoPi * chi * std::pow(t0, ap + 2.0) / (ap + 2.0));
    } else {
      const double D = std::log(0.5 * eta / eps);
      row.energy_closed = perim * std::pow(D, 1.0 - p) - kTwoPi * chi * (0.5 * eta - eps) * std::pow(D, -p);
      const auto cells = std::max<std::size_t>(256, static_cast<std::size_t>(4.0 * D));
      nodes.resize(cells + 1);
      for (std::size_t i = 0; i <= cells; ++i)
        nodes[i] = eps * std::exp(D * static_cast<double>(i) / static_cast<double>(cells));
      nodes.back() = 0.5 * eta;
    }
    // (t |u'|)^p t^{ap - p} avoids overflow for tiny eps
    auto g = [&](double t, double, std::size_t) {
      return std::pow(t * std::abs(fam.derivative(t / eta)) / eta, p) * std::pow(t, ap - p);
    };
    const auto& rule = gauss8();
    KahanSum total;
    for (std::size_t comp = 0; comp < domain.components(); ++comp)
      for (std::size_t j = 0; j < n_sigma; ++j) {
        const double th = kTwoPi * static_cast<double>(j) / static_cast<double>(n_sigma);
        const BoundaryFrame fr = domain.frame(comp, th);
        const double dsigma = fr.speed * kTwoPi / static_cast<double>(n_sigma);
        for (std::size_t c = 0; c + 1 < nodes.size(); ++c) {
          const double h = 0.5 * (nodes[c + 1] - nodes[c]), mid = 0.5 * (nodes[c + 1] + nodes[c]);
          double s = 0;
          for (int k = 0; k < 8; ++k) {
            const double t = mid + h * rule.x[k];
            s += rule.w[k] * g(t, th, comp) * (1.0 - fr.kappa * t);
          }
          total.add(s * h * dsigma);
        }
      }
    row.energy_quadrature = total.value() + tail;
    table.rows.push_back(row);
  }
  table.strictly_decreasing = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (!(table.rows[i].energy_closed < table.rows[i - 1].energy_closed) ||
        !(table.rows[i].energy_quadrature < table.rows[i - 1].energy_quadrature))
      table.strictly_decreasing = false;
  return table;
}

std::map<std::string, std::string> read_config(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

DomainSpec domain_from_config(const std::map<std::string, std::string>& config) {
  auto need = [&](const std::string& key) {
    const auto it = config.find(key);
    if (it == config.end()) throw std::invalid_argument("config: missing key '" + key + "'");
    return parse_number(it->second, key);
  };
  const auto it = config.find("domain");
  if (it == config.end()) throw std::invalid_argument("config: missing key 'domain'");
  if (it->second.find(':') != std::string::npos) return parse_domain(it->second);
  if (it->second == "disk") return DomainSpec::disk(need("rho"));
  if (it->second == "annulus") return DomainSpec::annulus(need("r_in"), need("r_out"));
  if (it->second == "ellipse") return DomainSpec::ellipse(need("a"), need("b"));
  throw std::invalid_argument("config: unknown domain '" + it->second + "'");
}

}  // namespace hardy
