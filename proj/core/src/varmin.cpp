#include "hardy/varmin.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "hardy/quad.hpp"

namespace hardy {

void MinimizeConfig::validate() const {
  if (!(tol > 0)) throw std::invalid_argument("MinimizeConfig: tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("MinimizeConfig: max_iters must be >= 1");
  if (!(shrink > 0 && shrink < 1)) throw std::invalid_argument("MinimizeConfig: shrink in (0,1)");
  if (!(armijo > 0 && armijo < 1)) throw std::invalid_argument("MinimizeConfig: armijo in (0,1)");
  if (!(initial_step > 0)) throw std::invalid_argument("MinimizeConfig: initial_step must be positive");
  if (!(tail_eps > 0)) throw std::invalid_argument("MinimizeConfig: tail_eps must be positive");
}

namespace {

// int_a^b t^s dt
double power_moment(double a, double b, double s) {
  if (s == -1.0) return std::log(b / a);
  return (std::pow(b, s + 1.0) - std::pow(a, s + 1.0)) / (s + 1.0);
}

inline double abs_pow(double x, double p) {
  return p == 2.0 ? x * x : std::pow(std::abs(x), p);
}

// d/dx |x|^p
inline double abs_pow_grad(double x, double p) {
  if (p == 2.0) return 2.0 * x;
  if (x == 0.0) return 0.0;
  return p * std::pow(std::abs(x), p - 1.0) * (x > 0 ? 1.0 : -1.0);
}

}  // namespace

QuotientObjective::QuotientObjective(const Params& params, GradedMesh mesh, double boundary_coeff,
                                     bool pin_end, double tail_eps)
    : params_(params), mesh_(std::move(mesh)), L_(boundary_coeff), pin_end_(pin_end) {
  const double p = params.p();
  const double ap = params.alpha_p();
  const double t0 = mesh_.t_min();
  const double s = params.beta() + tail_eps;
  // int_0^{t0} (t/t0)^{sp} t^{ap-p} dt = t0^{ap-p+1} / (p tail_eps)
  const double T = std::pow(t0, ap - p + 1.0) / (p * tail_eps);
  tail_coeff_N_ = T;
  tail_coeff_E_ = std::pow(std::abs(s), p) * T;
  mu_ = p < 2.0 ? 1e-12 : 0.0;

  const auto nodes = mesh_.nodes();
  const std::size_t n = mesh_.cells();
  const auto& rule = gauss8();
  W_.resize(n);
  gw_.resize(8 * n);
  phiL_.resize(8);
  phiR_.resize(8);
  for (int j = 0; j < 8; ++j) {
    phiR_[j] = 0.5 * (1.0 + rule.x[j]);
    phiL_[j] = 1.0 - phiR_[j];
  }
  for (std::size_t c = 0; c < n; ++c) {
    const double a = nodes[c], b = nodes[c + 1];
    W_[c] = power_moment(a, b, ap);
    const double h = 0.5 * (b - a), m = 0.5 * (a + b);
    for (int j = 0; j < 8; ++j) {
      const double t = m + h * rule.x[j];
      gw_[8 * c + j] = h * rule.w[j] * std::pow(t, ap - p);
    }
  }
}

double QuotientObjective::energy(const std::vector<double>& v) const {
  const double p = params_.p();
  const auto nodes = mesh_.nodes();
  KahanSum e;
  for (std::size_t c = 0; c < W_.size(); ++c) {
    const double s = (v[c + 1] - v[c]) / (nodes[c + 1] - nodes[c]);
    e.add(W_[c] * (mu_ > 0 ? std::pow(s * s + mu_ * mu_, 0.5 * p) : abs_pow(s, p)));
  }
  e.add(tail_coeff_E_ * abs_pow(v[0], p));
  return e.value();
}

double QuotientObjective::hardy(const std::vector<double>& v) const {
  const double p = params_.p();
  KahanSum h;
  for (std::size_t c = 0; c < W_.size(); ++c) {
    double cell = 0;
    for (int j = 0; j < 8; ++j)
      cell += gw_[8 * c + j] * abs_pow(v[c] * phiL_[j] + v[c + 1] * phiR_[j], p);
    h.add(cell);
  }
  h.add(tail_coeff_N_ * abs_pow(v[0], p));
  return h.value();
}

double QuotientObjective::quotient(const std::vector<double>& v) const {
  return (energy(v) - L_ * abs_pow(v.back(), params_.p())) / hardy(v);
}

std::vector<double> QuotientObjective::gradient(const std::vector<double>& v) const {
  const double p = params_.p();
  const auto nodes = mesh_.nodes();
  const std::size_t N = v.size();
  std::vector<double> gE(N, 0.0), gN(N, 0.0);
  for (std::size_t c = 0; c < W_.size(); ++c) {
    const double h = nodes[c + 1] - nodes[c];
    const double s = (v[c + 1] - v[c]) / h;
    const double dEds =
        mu_ > 0 ? W_[c] * p * std::pow(s * s + mu_ * mu_, 0.5 * p - 1.0) * s : W_[c] * abs_pow_grad(s, p);
    gE[c] -= dEds / h;
    gE[c + 1] += dEds / h;
    for (int j = 0; j < 8; ++j) {
      const double u = v[c] * phiL_[j] + v[c + 1] * phiR_[j];
      const double d = gw_[8 * c + j] * abs_pow_grad(u, p);
      gN[c] += d * phiL_[j];
      gN[c + 1] += d * phiR_[j];
    }
  }
  gE[0] += tail_coeff_E_ * abs_pow_grad(v[0], p);
  gN[0] += tail_coeff_N_ * abs_pow_grad(v[0], p);
  gE[N - 1] -= L_ * abs_pow_grad(v[N - 1], p);

  const double Nv = hardy(v);
  const double Q = (energy(v) - L_ * abs_pow(v.back(), p)) / Nv;
  std::vector<double> g(N);
  for (std::size_t i = 0; i < N; ++i) g[i] = (gE[i] - Q * gN[i]) / Nv;
  if (pin_end_) g[N - 1] = 0.0;
  return g;
}

std::vector<double> QuotientObjective::precondition(const std::vector<double>& v,
                                                    const std::vector<double>& g, double q) const {
  const double p = params_.p();
  const auto nodes = mesh_.nodes();
  const std::size_t N = v.size();
  std::vector<double> diag(N, 0.0), off(N - 1, 0.0), mass(N, 0.0);
  std::vector<double> k(W_.size());
  double kmax = 0;
  for (std::size_t c = 0; c < W_.size(); ++c) {
    const double h = nodes[c + 1] - nodes[c];
    const double s = (v[c + 1] - v[c]) / h;
    double curv = p == 2.0 ? 2.0 : p * (p - 1.0) * std::pow(s * s + mu_ * mu_ + 1e-300, 0.5 * p - 1.0);
    k[c] = curv * W_[c] / (h * h);
    kmax = std::max(kmax, k[c]);
    double m = 0;
    for (int j = 0; j < 8; ++j) m += gw_[8 * c + j];
    mass[c] += 0.5 * m;
    mass[c + 1] += 0.5 * m;
  }
  for (std::size_t c = 0; c < W_.size(); ++c) {
    const double kc = std::clamp(k[c], 1e-12 * kmax, 1e12 * kmax);
    diag[c] += kc;
    diag[c + 1] += kc;
    off[c] = -kc;
  }
  // Hardy-mass shift keeps K positive definite; the tail adds to node 0
  const double pp = p * std::max(p - 1.0, 1.0);
  for (std::size_t i = 0; i < N; ++i) {
    const double scale = std::pow(std::abs(v[i]) + 1e-300, p - 2.0);
    diag[i] += std::max(q, 1e-3) * pp * mass[i] * std::min(scale, 1e12);
  }
  diag[0] += pp * (tail_coeff_E_ + std::max(q, 1e-3) * tail_coeff_N_) *
             std::min(std::pow(std::abs(v[0]) + 1e-300, p - 2.0), 1e12);

  std::vector<double> rhs(g);
  if (pin_end_) {
    diag[N - 1] = 1.0;
    off[N - 2] = 0.0;
    rhs[N - 1] = 0.0;
  }
  // Thomas algorithm
  std::vector<double> cp(N, 0.0), dp(N, 0.0);
  cp[0] = N > 1 ? off[0] / diag[0] : 0.0;
  dp[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < N; ++i) {
    const double lower = off[i - 1];
    const double denom = diag[i] - lower * cp[i - 1];
    cp[i] = i + 1 < N ? off[i] / denom : 0.0;
    dp[i] = (rhs[i] - lower * dp[i - 1]) / denom;
  }
  std::vector<double> d(N);
  d[N - 1] = dp[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) d[i] = dp[i] - cp[i] * d[i + 1];
  if (pin_end_) d[N - 1] = 0.0;
  return d;
}

void QuotientObjective::normalize(std::vector<double>& v) const {
  const double Nv = hardy(v);
  if (!(Nv > 0) || !std::isfinite(Nv)) throw std::runtime_error("normalize: Hardy integral is not positive");
  const double c = std::pow(Nv, -1.0 / params_.p());
  for (double& x : v) x *= c;
}

MinimizeResult minimize_energy(const QuotientObjective& obj, const PiecewiseFn& start,
                               const MinimizeConfig& config) {
  config.validate();
  if (start.values().size() != obj.size())
    throw std::invalid_argument("minimize_energy: start does not match the objective mesh");
  std::vector<double> v(start.values().begin(), start.values().end());
  if (obj.pin_end()) v.back() = 0.0;
  obj.normalize(v);

  MinimizeResult res;
  res.mu = obj.mu();
  double q = obj.quotient(v);
  res.history.push_back(q);
  double step0 = config.initial_step;
  std::size_t stalled = 0;
  std::vector<double> trial(v.size());

  for (std::size_t it = 0; it < config.max_iters; ++it) {
    const auto g = obj.gradient(v);
    auto d = obj.precondition(v, g, q);
    double slope = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      d[i] = -d[i];
      slope += g[i] * d[i];
    }
    // stationary to working precision
    if (!(slope < -config.tol * std::abs(q) * 1e-3)) {
      res.converged = true;
      break;
    }
    double s = step0;
    double q_new = q;
    bool accepted = false;
    while (s > 1e-20) {
      for (std::size_t i = 0; i < v.size(); ++i) trial[i] = v[i] + s * d[i];
      q_new = obj.quotient(trial);
      if (std::isfinite(q_new) && q_new <= q + config.armijo * s * slope) {
        accepted = true;
        break;
      }
      s *= config.shrink;
    }
    if (!accepted) {
      // line search cannot decrease any further
      res.converged = stalled > 0;
      break;
    }
    v.swap(trial);
    obj.normalize(v);
    const double change = q - q_new;
    q = q_new;
    res.history.push_back(q);
    ++res.iterations;
    step0 = std::min(config.initial_step, s / config.shrink);
    stalled = change <= config.tol * std::abs(q) ? stalled + 1 : 0;
    if (stalled >= config.stall_iters) {
      res.converged = true;
      break;
    }
  }
  res.quotient = q;
  res.minimizer = PiecewiseFn(obj.mesh(), v, 0);
  return res;
}

double discrete_min_energy(const Params& params, const GradedMesh& mesh) {
  const double p = params.p();
  const double ap = params.alpha_p();
  const auto nodes = mesh.nodes();
  // slopes s_c ~ (h_c / W_c)^{1/(p-1)} minimise sum W_c |s_c|^p with sum s_c h_c = 1
  KahanSum S;
  for (std::size_t c = 0; c < mesh.cells(); ++c) {
    const double h = nodes[c + 1] - nodes[c];
    const double W = power_moment(nodes[c], nodes[c + 1], ap);
    S.add(std::pow(h, p / (p - 1.0)) * std::pow(W, -1.0 / (p - 1.0)));
  }
  return std::pow(S.value(), 1.0 - p);
}

MinimizeResult best_constant(const Params& params, BoundaryMode mode, MinimizeConfig config) {
  config.validate();
  const double p = params.p();
  if (classify(params) != Regime::Noncritical) {
    MinimizeResult res;
    const double q = params.alpha_p() / (p - 1.0);
    for (int k = 1; k <= 8; ++k) {
      const double t0 = std::pow(10.0, -k);
      const GradedMesh mesh = make_mesh(config.n, config.gamma, t0);
      // exact: (int_{t0}^1 t^{-ap/(p-1)} dt)^{1-p}
      const double exact = std::pow(power_moment(t0, 1.0, -q), 1.0 - p);
      res.degeneration.push_back({t0, discrete_min_energy(params, mesh), exact});
      res.history.push_back(res.degeneration.back().energy_discrete);
    }
    res.quotient = res.degeneration.back().energy_discrete;
    res.converged = true;
    return res;
  }
  config.pin_end = mode.kind == BoundaryMode::Kind::Plain;
  config.boundary_coeff = config.pin_end ? 0.0 : mode.L;
  const GradedMesh mesh = make_mesh(config.n, config.gamma, config.t_min);
  const QuotientObjective obj(params, mesh, config.boundary_coeff, config.pin_end, config.tail_eps);
  const PiecewiseFn start = sample_family({TestFamily::Kind::PowerProbe, 0.1, params}, mesh);
  return minimize_energy(obj, start, config);
}

std::vector<SweepRow> sweep(const std::vector<double>& alphas, const std::vector<double>& ps,
                            double R, const MinimizeConfig& config, unsigned workers) {
  std::vector<std::pair<double, double>> grid;
  for (double a : alphas)
    for (double p : ps) {
      if (classify(Params(a, p, R)) != Regime::Noncritical)
        throw std::invalid_argument("sweep: grid point is critical");
      grid.emplace_back(a, p);
    }
  std::vector<SweepRow> rows(grid.size());
  auto run = [&](std::size_t i) {
    const Params P(grid[i].first, grid[i].second, R);
    const double lam = lambda_const(P);
    const auto res = best_constant(P, BoundaryMode::with_boundary(std::pow(lam, 1.0 - 1.0 / P.p())), config);
    rows[i] = {P.alpha(), P.p(), res.quotient, lam, (res.quotient - lam) / lam,
               config.n, config.t_min, res.iterations};
  };
  workers = std::max(1u, workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < grid.size(); i += workers) run(i);
    });
  for (auto& th : pool) th.join();
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  const auto old = os.precision(17);
  os << "alpha,p,quotient,lambda,relative_gap,n,t_min,iterations\n";
  for (const auto& r : rows)
    os << r.alpha << ',' << r.p << ',' << r.quotient << ',' << r.lambda << ',' << r.relative_gap
       << ',' << r.n << ',' << r.t_min << ',' << r.iterations << '\n';
  os.precision(old);
}

}  // namespace hardy
