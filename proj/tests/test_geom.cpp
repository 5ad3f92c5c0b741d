#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hardy/geom.hpp"
#include "hardy/quad.hpp"

using namespace hardy;

namespace {
constexpr double kPi = std::numbers::pi;
const double kE2 = std::exp(2.0);

// 1D integral of g(t) over phi's mesh with the disk weight 2 pi (rho - t).
double reduced(const PiecewiseFn& phi, double rho, const std::function<double(double, double, double)>& g) {
  const auto& rule = gauss8();
  const auto nodes = phi.mesh().nodes();
  double s = 0;
  for (std::size_t c = 0; c + 1 < nodes.size(); ++c) {
    const double h = 0.5 * (nodes[c + 1] - nodes[c]), mid = 0.5 * (nodes[c + 1] + nodes[c]);
    for (int k = 0; k < 8; ++k) {
      const double t = mid + h * rule.x[k];
      s += h * rule.w[k] * g(t, phi.eval_in_cell(c, t), phi.slope(c)) * 2 * kPi * (rho - t);
    }
  }
  return s;
}

double sampled_distance(const DomainSpec& d, Point x, int samples) {
  double best = 1e300;
  for (int i = 0; i < samples; ++i) {
    const Point b = d.frame(0, 2 * kPi * i / samples).X;
    best = std::min(best, std::hypot(b.x - x.x, b.y - x.y));
  }
  return best;
}
}  // namespace

TEST_CASE("domain parsing") {
  CHECK(parse_domain("disk:1").describe() == "disk:1");
  CHECK(parse_domain("annulus:1,2").kind() == DomainSpec::Kind::Annulus);
  CHECK(parse_domain("ellipse:2,1").b() == 1.0);
  CHECK_THROWS_AS(parse_domain("square:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_domain("annulus:2,1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_domain("disk:-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_domain("disk"), std::invalid_argument);
}

TEST_CASE("distance examples") {
  CHECK(distance(DomainSpec::disk(1), {0.5, 0}) == doctest::Approx(0.5));
  CHECK(distance(DomainSpec::disk(1), {0, 0}) == doctest::Approx(1.0));
  CHECK(distance(DomainSpec::annulus(1, 2), {1.2, 0}) == doctest::Approx(0.2));
  CHECK(distance(DomainSpec::annulus(1, 2), {0, -1.7}) == doctest::Approx(0.3));
  CHECK(distance(DomainSpec::ellipse(2, 1), {0, 0}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(distance(DomainSpec::ellipse(2, 1), {1.9, 0}) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(distance(DomainSpec::disk(1), {2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(distance(DomainSpec::annulus(1, 2), {0.5, 0}), std::invalid_argument);
}

TEST_CASE("ellipse distance against boundary sampling") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1, 1);
  for (auto d : {DomainSpec::ellipse(2, 1), DomainSpec::ellipse(1, 3)}) {
    int done = 0;
    while (done < 100) {
      const Point x{d.a() * U(rng), d.b() * U(rng)};
      if (!d.contains(x)) continue;
      const double exact = distance(d, x), sampled = sampled_distance(d, x, 10000);
      // a sample lies within half a spacing of the foot point
      const double h = std::max(d.a(), d.b()) * 2 * kPi / 10000;
      CHECK(exact <= sampled + 1e-12);
      CHECK(sampled <= std::sqrt(exact * exact + h * h / 4) + d.jacobian_c() * h * h / 4 + 1e-12);
      ++done;
    }
  }
}

TEST_CASE("geometric constants") {
  const auto disk = DomainSpec::disk(2), ann = DomainSpec::annulus(1, 2), ell = DomainSpec::ellipse(2, 1);
  CHECK(disk.eta0() == 2.0);
  CHECK(disk.jacobian_c() == 0.5);
  CHECK(ann.eta0() == 0.5);
  CHECK(ann.jacobian_c() == 1.0);
  CHECK(ann.max_distance() == 0.5);
  CHECK(ell.eta0() == doctest::Approx(0.5));
  CHECK(ell.jacobian_c() == doctest::Approx(2.0));
  CHECK(ell.area() == doctest::Approx(2 * kPi));
  // Ramanujan II is accurate to ~1e-10 at this eccentricity
  const double h = 1.0 / 9.0;
  CHECK(ell.perimeter() == doctest::Approx(3 * kPi * (1 + 3 * h / (10 + std::sqrt(4 - 3 * h)))).epsilon(1e-8));
  CHECK(default_eta(disk) == 0.25);
  CHECK(default_eta(ann) == 0.125);
}

TEST_CASE("Jacobian sandwich") {
  for (auto d : {DomainSpec::disk(1), DomainSpec::annulus(1, 2), DomainSpec::ellipse(2, 1),
                 DomainSpec::ellipse(1, 3)}) {
    const double c = d.jacobian_c();
    for (std::size_t comp = 0; comp < d.components(); ++comp)
      for (int i = 0; i < 64; ++i)
        for (int j = 1; j < 10; ++j) {
          const double t = 0.999 * d.eta0() * j / 10, th = 2 * kPi * i / 64;
          const double J = d.jacobian(comp, t, th);
          CHECK(std::abs(J - 1) <= c * t * (1 + 1e-12));
          CHECK(J > 0);
        }
  }
}

TEST_CASE("band areas and traces") {
  const auto disk = DomainSpec::disk(1);
  const auto one = [](double, double, std::size_t) { return 1.0; };
  CHECK(tubular_quadrature(disk, make_tubular_grid(disk, 0.25, 32, 2, 1e-4), one) ==
        doctest::Approx(0.4375 * kPi).epsilon(1e-13));
  const auto ann = DomainSpec::annulus(1, 2);
  CHECK(tubular_quadrature(ann, make_tubular_grid(ann, 0.25, 32, 2, 1e-4), one) ==
        doctest::Approx(kPi * (4 - 1.75 * 1.75) + kPi * (1.25 * 1.25 - 1)).epsilon(1e-13));
  // Steiner: inner band of a convex curve has area P eta - pi eta^2
  const auto ell = DomainSpec::ellipse(2, 1);
  CHECK(tubular_quadrature(ell, make_tubular_grid(ell, 0.125, 32, 2, 1e-4, 128), one) ==
        doctest::Approx(ell.perimeter() * 0.125 - kPi / 64).epsilon(1e-12));

  const GradedMesh m = make_mesh(16, 1, 1e-3).scaled(0.5);
  const FieldFn u = radial_field(PiecewiseFn(m, std::vector<double>(17, 1.0)));
  CHECK(trace_integral(disk, 0.5, u, 0, 2) == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(trace_integral(disk, 0.5, u, 2, 2) == doctest::Approx(0.25 * kPi).epsilon(1e-14));
  CHECK_THROWS_AS(trace_integral(disk, 0.6, u, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_tubular_grid(disk, 1.0, 16, 2, 1e-4), std::invalid_argument);
}

TEST_CASE("trigonometric modes integrate to zero and converge in n_sigma") {
  const auto disk = DomainSpec::disk(1);
  const auto grid = make_tubular_grid(disk, 0.25, 32, 2, 1e-4, 16);
  for (int k = 1; k < 8; ++k)
    CHECK(std::abs(tubular_quadrature(disk, grid, [k](double t, double th, std::size_t) {
            return (1 + t) * std::cos(k * th);
          })) < 1e-14);
  const auto ell = DomainSpec::ellipse(2, 1);
  auto band = [&](std::size_t ns) {
    return tubular_quadrature(ell, make_tubular_grid(ell, 0.125, 32, 2, 1e-4, ns),
                              [](double t, double th, std::size_t) { return t * (2 + std::sin(th)); });
  };
  const double e16 = std::abs(band(16) - band(256)), e32 = std::abs(band(32) - band(256));
  CHECK(e32 < 1e-3 * e16 + 1e-14);
  CHECK(std::abs(band(64) - band(256)) < 1e-12);
}

TEST_CASE("constants") {
  const auto disk = DomainSpec::disk(1);
  const auto k = nd_constants(disk, Params(0, 2, kE2), 0.25);
  CHECK(k.route == "monotone");
  CHECK(k.C2 == doctest::Approx(k.ledger.C3));
  CHECK(k.gamma == 0.25);
  CHECK(k.L > 0);
  const auto ann = DomainSpec::annulus(1, 2);
  const Params Pa(0, 2, 2 * kE2);
  CHECK_THROWS_AS(nd_constants(ann, Pa, 0.125), std::invalid_argument);
  const auto ka = nd_constants(ann, Pa, admissible_eta(ann, Pa, 0.125));
  CHECK(ka.route == "absorption");
  CHECK(ka.C1 >= ann.jacobian_c() * ka.eta);
  CHECK_THROWS_AS(nd_constants(disk, Params(0, 2, kE2), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(nd_constants(DomainSpec::disk(10), Params(0, 2, kE2), 0.25), std::invalid_argument);
  const double eta = admissible_eta(disk, Params(1, 2, kE2), 0.25);
  CHECK(eta > 0);
  CHECK(eta <= 0.25);
  const auto kc = nd_constants(disk, Params(1, 2, kE2), eta);
  CHECK(kc.gamma > 0);
  CHECK(kc.gamma <= kc.ledger.lambda);
  CHECK(kc.L_prime > 0);
}

TEST_CASE("radial fields reduce to 1D integrals on the disk") {
  const auto disk = DomainSpec::disk(1);
  std::mt19937_64 rng(4);
  for (const Params& P : {Params(0, 2, kE2), Params(-0.5, 3, kE2), Params(0.25, 1.5, 10)}) {
    const double eta = admissible_eta(disk, P, 0.25);
    const auto k = nd_constants(disk, P, eta);
    const GradedMesh m = make_mesh(128, 2, 1e-4).scaled(eta);
    const double p = P.p(), ap = P.alpha_p();
    for (int it = 0; it < 10; ++it) {
      const PiecewiseFn phi = random_test_function(m, P, rng);
      const auto r = nd_deficit(NdId::Eq2_6, disk, radial_field(phi), k);
      const double e1 = reduced(phi, 1, [&](double t, double, double s) { return std::pow(std::abs(s), p) * std::pow(t, ap); });
      const double h1 = reduced(phi, 1, [&](double t, double u, double) { return std::pow(std::abs(u), p) * std::pow(t, ap - p); });
      const double tr = std::pow(std::abs(phi.value_at_end()), p) * std::pow(eta, ap) * 2 * kPi * (1 - eta);
      CHECK(r.term("energy") == doctest::Approx(e1).epsilon(1e-10));
      CHECK(r.term("hardy") == doctest::Approx(k.ledger.lambda * h1).epsilon(1e-10));
      CHECK(r.term("trace") == doctest::Approx(k.L * tr).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero field") {
  const auto disk = DomainSpec::disk(1);
  const auto k = nd_constants(disk, Params(0, 2, kE2), 0.25);
  const GradedMesh m = make_mesh(32, 2, 1e-3).scaled(0.25);
  FieldFn u{PiecewiseFn(m, std::vector<double>(33, 0.0)), 0.0, {{2, 1.0, 0.5}}};
  const auto r = nd_deficit(NdId::Eq2_6, disk, u, k);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
  CHECK(r.deficit == 0.0);
  for (const auto& t : r.terms) CHECK(t.value == 0.0);
}

TEST_CASE("nd suites are nonnegative") {
  NdSuiteConfig cfg;
  cfg.radial_cases = 20;
  cfg.angular_cases = 10;
  cfg.n = 128;
  struct Case {
    NdId id;
    Params P;
  };
  const std::vector<Case> local{{NdId::Eq2_6, Params(0, 2, 2 * kE2)},
                                {NdId::Eq2_11, Params(1, 2, 2 * kE2)},
                                {NdId::Eq2_12, Params(0.5, 2, 2 * e_to_the_e())}};
  for (auto d : {DomainSpec::disk(1), DomainSpec::annulus(1, 2), DomainSpec::ellipse(2, 1)})
    for (const auto& c : local) {
      const auto k = nd_constants(d, c.P, admissible_eta(d, c.P, default_eta(d)));
      const auto recs = nd_suite(c.id, d, k, cfg);
      CHECK(recs.size() == 30);
      std::size_t bad = 0;
      for (const auto& r : recs) bad += !r.ok;
      CHECK_MESSAGE(bad == 0, d.describe(), " ", to_string(c.id));
    }
  const std::vector<Case> whole{{NdId::Eq2_7, Params(0, 2, 2 * kE2)},
                                {NdId::Eq2_14, Params(1, 2, 2 * kE2)},
                                {NdId::Eq2_15, Params(0.5, 2, 2 * e_to_the_e())}};
  const auto disk = DomainSpec::disk(1);
  for (const auto& c : whole) {
    const auto k = nd_constants(disk, c.P, admissible_eta(disk, c.P, default_eta(disk)));
    const auto recs = nd_suite(c.id, disk, k, cfg);
    std::size_t bad = 0;
    for (const auto& r : recs) bad += !r.ok;
    CHECK_MESSAGE(bad == 0, to_string(c.id));
    CHECK_THROWS_AS(nd_suite(c.id, DomainSpec::annulus(1, 2), k, cfg), std::invalid_argument);
  }
}

TEST_CASE("N-d critical demo on the disk") {
  const auto disk = DomainSpec::disk(1);
  const auto tab = nd_critical_demo(disk, Params(1, 2, kE2), {0.1, 0.05}, 0.5);
  CHECK(tab.family == "Ramp");
  const double eps = 0.1;
  const double oracle = 2 * kPi / (eps * eps) * (std::pow(eps, 3) / 3 - std::pow(eps, 4) / 4);
  CHECK(tab.rows[0].energy_closed == doctest::Approx(oracle).epsilon(1e-14));
  for (const auto& row : tab.rows)
    CHECK(std::abs(row.energy_quadrature - row.energy_closed) <= 1e-10 * row.energy_closed);
  CHECK(tab.strictly_decreasing);

  const Params Pb(0.5, 2, 2 * e_to_the_e());
  const auto lt = nd_critical_demo(disk, Pb, default_nd_demo_schedule(Pb, 0.25), 0.25);
  CHECK(lt.family == "LogRamp");
  CHECK(lt.strictly_decreasing);
  for (const auto& row : lt.rows)
    CHECK(std::abs(row.energy_quadrature - row.energy_closed) <= 1e-10 * row.energy_closed);
  CHECK_THROWS_AS(nd_critical_demo(disk, Params(0, 2, kE2), {0.1}, 0.5), std::invalid_argument);
}

TEST_CASE("config files") {
  std::istringstream is("# run\ndomain = annulus\nr_in=1\nr_out = 3\n\n");
  const auto cfg = read_config(is);
  CHECK(cfg.at("r_out") == "3");
  CHECK(domain_from_config(cfg).describe() == "annulus:1,3");
  std::istringstream bad("domain\n");
  CHECK_THROWS_AS(read_config(bad), std::runtime_error);
  CHECK(domain_from_config({{"domain", "disk"}, {"rho", "2"}}).describe() == "disk:2");
  CHECK(domain_from_config({{"domain", "ellipse:2,1"}}).describe() == "ellipse:2,1");
  CHECK_THROWS_AS(domain_from_config({{"domain", "annulus"}, {"r_in", "1"}}), std::invalid_argument);
}
