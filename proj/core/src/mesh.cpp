#include "hardy/mesh.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hardy {

GradedMesh::GradedMesh(std::vector<double> nodes, double gamma)
    : nodes_(std::move(nodes)), gamma_(gamma) {
  if (nodes_.size() < 2) throw std::invalid_argument("GradedMesh: need at least two nodes");
  if (!(nodes_.front() > 0)) throw std::invalid_argument("GradedMesh: t_min must be positive");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i])) throw std::invalid_argument("GradedMesh: non-finite node");
    if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
      throw std::invalid_argument("GradedMesh: nodes must be strictly increasing");
  }
}

std::size_t GradedMesh::locate(double t) const noexcept {
  if (t <= nodes_.front()) return 0;
  if (t >= nodes_.back()) return cells() - 1;
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

GradedMesh GradedMesh::scaled(double factor) const {
  if (!(factor > 0)) throw std::invalid_argument("GradedMesh::scaled: factor must be positive");
  std::vector<double> n(nodes_);
  for (double& x : n) x *= factor;
  return GradedMesh(std::move(n), gamma_);
}

double GradedMesh::max_relative_width() const noexcept {
  double m = 0;
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
    m = std::max(m, (nodes_[i + 1] - nodes_[i]) / nodes_[i + 1]);
  return m;
}

GradedMesh make_mesh(std::size_t n, double gamma, double t_min) {
  if (n < 2) throw std::invalid_argument("make_mesh: n must be at least 2");
  if (!(gamma >= 1.0)) throw std::invalid_argument("make_mesh: gamma must be >= 1");
  if (!(t_min > 0) || !(t_min < 1.0))
    throw std::invalid_argument("make_mesh: t_min must lie in (0, 1)");
  std::vector<double> nodes(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    nodes[i] = t_min + (1.0 - t_min) * std::pow(static_cast<double>(i) / n, gamma);
  nodes[n] = 1.0;
  return GradedMesh(std::move(nodes), gamma);
}

GradedMesh make_composite_mesh(std::span<const double> breakpoints, std::size_t n_per_segment,
                               double gamma) {
  if (breakpoints.size() < 2 || n_per_segment < 1)
    throw std::invalid_argument("make_composite_mesh: need two breakpoints and n >= 1");
  std::vector<double> nodes{breakpoints.front()};
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double a = breakpoints[k], b = breakpoints[k + 1];
    if (!(b > a)) throw std::invalid_argument("make_composite_mesh: breakpoints must increase");
    for (std::size_t i = 1; i <= n_per_segment; ++i)
      nodes.push_back(i == n_per_segment
                          ? b
                          : a + (b - a) * std::pow(static_cast<double>(i) / n_per_segment, gamma));
  }
  return GradedMesh(std::move(nodes), gamma);
}

PiecewiseFn::PiecewiseFn(GradedMesh mesh, std::vector<double> values, std::size_t support_floor)
    : mesh_(std::move(mesh)), values_(std::move(values)), support_floor_(support_floor) {
  if (values_.size() != mesh_.nodes().size())
    throw std::invalid_argument("PiecewiseFn: one value per node required");
  if (support_floor_ >= values_.size())
    throw std::invalid_argument("PiecewiseFn: support floor beyond the last node");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw std::invalid_argument("PiecewiseFn: non-finite value");
    if (i < support_floor_ && values_[i] != 0.0)
      throw std::invalid_argument("PiecewiseFn: nonzero value below the support floor");
  }
}

PiecewiseFn PiecewiseFn::scaled(double c) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= c;
  return PiecewiseFn(mesh_, std::move(v), support_floor_);
}

std::string_view to_string(TestFamily::Kind k) noexcept {
  switch (k) {
    case TestFamily::Kind::PowerProbe: return "PowerProbe";
    case TestFamily::Kind::LogProbe: return "LogProbe";
    case TestFamily::Kind::Ramp: return "Ramp";
    case TestFamily::Kind::LogRamp: return "LogRamp";
  }
  return "?";
}

void TestFamily::validate() const {
  const double p = params.p();
  switch (kind) {
    case Kind::PowerProbe:
      if (!(eps > 0)) throw std::invalid_argument("PowerProbe: eps must be positive");
      break;
    case Kind::LogProbe:
      if (!(eps > 0) || !(eps < 1.0 - 1.0 / p))
        throw std::invalid_argument("LogProbe: eps must lie in (0, 1-1/p)");
      break;
    case Kind::Ramp:
      if (!(eps > 0) || !(eps <= 1.0)) throw std::invalid_argument("Ramp: eps must lie in (0, 1]");
      break;
    case Kind::LogRamp:
      if (!(eps > 0) || !(eps < 0.5)) throw std::invalid_argument("LogRamp: eps must lie in (0, 1/2)");
      break;
  }
}

double TestFamily::value(double t) const {
  const double p = params.p();
  switch (kind) {
    case Kind::PowerProbe: return std::pow(t, params.beta() + eps);
    case Kind::LogProbe: return std::pow(a1(t, params.R()), 1.0 - 1.0 / p - eps);
    case Kind::Ramp: return t < eps ? t / eps : 1.0;
    case Kind::LogRamp: {
      if (t <= eps) return 0.0;
      if (t >= 0.5) return 1.0;
      const double R = params.R();
      return (a1(eps, R) - a1(t, R)) / (a1(eps, R) - a1(0.5, R));
    }
  }
  return 0.0;
}

double TestFamily::derivative(double t) const {
  const double p = params.p();
  switch (kind) {
    case Kind::PowerProbe: {
      const double s = params.beta() + eps;
      return s * std::pow(t, s - 1.0);
    }
    case Kind::LogProbe: {
      const double s = 1.0 - 1.0 / p - eps;
      return -s * std::pow(a1(t, params.R()), s - 1.0) / t;
    }
    case Kind::Ramp: return t < eps ? 1.0 / eps : 0.0;
    case Kind::LogRamp: {
      if (t <= eps || t >= 0.5) return 0.0;
      return 1.0 / (t * std::log(0.5 / eps));
    }
  }
  return 0.0;
}

std::vector<double> TestFamily::breakpoints() const {
  switch (kind) {
    case Kind::Ramp: return eps < 1.0 ? std::vector<double>{eps} : std::vector<double>{};
    case Kind::LogRamp: return {eps, 0.5};
    default: return {};
  }
}

PiecewiseFn sample_family(const TestFamily& family, const GradedMesh& mesh) {
  family.validate();
  const auto nodes = mesh.nodes();
  std::vector<double> v(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = family.value(nodes[i]);
  std::size_t floor = 0;
  while (floor + 1 < v.size() && v[floor] == 0.0) ++floor;
  return PiecewiseFn(mesh, std::move(v), floor);
}

std::vector<double> differentiate(const PiecewiseFn& fn) {
  std::vector<double> s(fn.mesh().cells());
  for (std::size_t c = 0; c < s.size(); ++c) s[c] = fn.slope(c);
  return s;
}

bool is_g_admissible(const PiecewiseFn& fn) noexcept {
  const auto v = fn.values();
  if (v.front() != 0.0) return false;
  const std::size_t last = fn.mesh().cells() - 1;
  if (fn.slope(last) != 0.0) return false;
  std::size_t first = 0;
  while (first < v.size() && v[first] == 0.0) ++first;
  if (first >= v.size()) return false;
  // phi'(0) != 0: the first support cell must have a nonzero slope
  return fn.slope(first - 1) != 0.0;
}

namespace {

// Positive where the cell point belongs to B, zero on ties, negative in A.
struct BTest {
  double v0, t0, slope, M, R;
  PartitionWeight kind;
  double operator()(double t) const {
    const double phi = v0 + slope * (t - t0);
    const double w = kind == PartitionWeight::Plain ? t : t * a1(t, R);
    return std::abs(slope) * w - M * std::abs(phi);
  }
};

double bisect(const BTest& g, double a, double b) {
  double ga = g(a);
  for (int i = 0; i < 200 && b - a > 4 * std::numeric_limits<double>::epsilon() * b; ++i) {
    const double m = 0.5 * (a + b);
    const double gm = g(m);
    if ((gm > 0) == (ga > 0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

void push_merged(std::vector<Interval>& set, double a, double b) {
  if (!set.empty() && set.back().b == a)
    set.back().b = b;
  else
    set.push_back({a, b});
}

}  // namespace

PartitionResult partition_sets(const PiecewiseFn& fn, double M, PartitionWeight kind, double R) {
  if (!(M > 0)) throw std::invalid_argument("partition_sets: M must be positive");
  if (kind == PartitionWeight::LogWeighted && !(R > fn.mesh().t_max()))
    throw std::invalid_argument("partition_sets: log-weighted split needs R > t_max");
  PartitionResult out;
  out.M = M;
  out.weight_kind = kind;
  const auto nodes = fn.mesh().nodes();
  constexpr int kSamples = 17;

  for (std::size_t c = 0; c < fn.mesh().cells(); ++c) {
    const double t0 = nodes[c], t1 = nodes[c + 1];
    const BTest g{fn.values()[c], t0, fn.slope(c), M, R, kind};
    const double scale = std::abs(g.slope) * t1 * (kind == PartitionWeight::Plain ? 1.0 : a1(t0, R)) +
                         M * std::max(std::abs(fn.values()[c]), std::abs(fn.values()[c + 1]));
    const double tie = 1e-12 * scale;

    std::vector<double> cuts{t0};
    // phi changes sign at most once inside a linear cell
    const double v0 = fn.values()[c], v1 = fn.values()[c + 1];
    std::array<double, kSamples> ts{};
    for (int k = 0; k < kSamples; ++k) ts[k] = t0 + (t1 - t0) * k / (kSamples - 1);
    std::vector<double> extra;
    if ((v0 < 0 && v1 > 0) || (v0 > 0 && v1 < 0)) extra.push_back(t0 - v0 / g.slope);
    for (int k = 0; k + 1 < kSamples; ++k) {
      const double a = ts[k], b = ts[k + 1];
      const double ga = g(a), gb = g(b);
      if ((ga > tie && gb < -tie) || (ga < -tie && gb > tie)) extra.push_back(bisect(g, a, b));
    }
    std::sort(extra.begin(), extra.end());
    for (double x : extra)
      if (x > cuts.back() && x < t1) cuts.push_back(x);
    cuts.push_back(t1);

    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double a = cuts[k], b = cuts[k + 1];
      const bool in_B = g(0.5 * (a + b)) > tie;
      out.pieces.push_back({c, a, b, in_B});
    }
  }

  for (std::size_t i = 0; i < out.pieces.size(); ++i) {
    const auto& pc = out.pieces[i];
    push_merged(pc.in_B ? out.B_set : out.A_set, pc.a, pc.b);
    if (i > 0 && out.pieces[i - 1].in_B != pc.in_B) out.C_points.push_back(pc.a);
  }
  return out;
}

void write_piecewise(std::ostream& os, const PiecewiseFn& fn, const Params& params) {
  const auto old = os.precision(17);
  os << "# alpha=" << params.alpha() << " p=" << params.p() << " R=" << params.R()
     << " t_min=" << fn.mesh().t_min() << " support_floor=" << fn.support_floor()
     << " gamma=" << fn.mesh().gamma() << '\n';
  const auto nodes = fn.mesh().nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) os << nodes[i] << ' ' << fn.values()[i] << '\n';
  os.precision(old);
}

namespace {

double parse_double(std::string_view s, const char* what) {
  double v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::runtime_error(std::string("read_piecewise: bad ") + what + " '" + std::string(s) + "'");
  return v;
}

}  // namespace

PiecewiseFile read_piecewise(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("#", 0) != 0)
    throw std::runtime_error("read_piecewise: missing header line");
  double alpha = NAN, p = NAN, R = NAN, t_min = NAN, gamma = 1.0;
  std::size_t floor = 0;
  std::istringstream hs(header.substr(1));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::runtime_error("read_piecewise: bad header token " + tok);
    const std::string key = tok.substr(0, eq);
    const std::string_view val = std::string_view(tok).substr(eq + 1);
    if (key == "alpha") alpha = parse_double(val, "alpha");
    else if (key == "p") p = parse_double(val, "p");
    else if (key == "R") R = parse_double(val, "R");
    else if (key == "t_min") t_min = parse_double(val, "t_min");
    else if (key == "gamma") gamma = parse_double(val, "gamma");
    else if (key == "support_floor") floor = static_cast<std::size_t>(parse_double(val, "support_floor"));
    else throw std::runtime_error("read_piecewise: unknown header key " + key);
  }
  if (std::isnan(alpha) || std::isnan(p) || std::isnan(R) || std::isnan(t_min))
    throw std::runtime_error("read_piecewise: header needs alpha, p, R and t_min");

  std::vector<double> nodes, values;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string a, b, rest;
    if (!(ls >> a >> b) || (ls >> rest))
      throw std::runtime_error("read_piecewise: expected two columns in '" + line + "'");
    nodes.push_back(parse_double(a, "node"));
    values.push_back(parse_double(b, "value"));
  }
  if (nodes.empty() || nodes.front() != t_min)
    throw std::runtime_error("read_piecewise: first node does not match t_min");
  try {
    return {Params(alpha, p, R), PiecewiseFn(GradedMesh(std::move(nodes), gamma), std::move(values), floor)};
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("read_piecewise: ") + e.what());
  }
}

}  // namespace hardy
