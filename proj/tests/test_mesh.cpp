#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <sstream>

#include "hardy/mesh.hpp"

using namespace hardy;

namespace {
const Params kP(0, 2, std::exp(2.0));

PiecewiseFn from_fn(const GradedMesh& m, double (*f)(double)) {
  std::vector<double> v;
  for (double t : m.nodes()) v.push_back(f(t));
  return PiecewiseFn(m, v);
}
}  // namespace

TEST_CASE("make_mesh examples") {
  const GradedMesh m = make_mesh(4, 1, 0.25);
  const std::vector<double> want{0.25, 0.4375, 0.625, 0.8125, 1.0};
  REQUIRE(m.nodes().size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(m.nodes()[i] == doctest::Approx(want[i]).epsilon(1e-15));

  const GradedMesh g = make_mesh(16, 2, 1e-4);
  CHECK(g.nodes()[1] - g.nodes()[0] < g.nodes()[16] - g.nodes()[15]);
  CHECK(g.t_min() == 1e-4);
  CHECK(g.t_max() == 1.0);

  const GradedMesh big = make_mesh(4096, 3, 1e-6);
  double worst = 0;
  for (std::size_t i = 0; i + 1 < big.nodes().size(); ++i)
    worst = std::max(worst, (big.nodes()[i + 1] - big.nodes()[i]) / big.nodes()[i + 1]);
  CHECK(big.max_relative_width() == worst);
  CHECK(worst < 0.04);

  CHECK_THROWS_AS(make_mesh(1, 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_mesh(8, 0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_mesh(8, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(GradedMesh({0.5, 0.4}), std::invalid_argument);
}

TEST_CASE("locate and scaled") {
  const GradedMesh m = make_mesh(4, 1, 0.25);
  CHECK(m.locate(0.3) == 0);
  CHECK(m.locate(0.9) == 3);
  CHECK(m.locate(1.0) == 3);
  CHECK(m.locate(0.0) == 0);
  CHECK(m.scaled(2).t_max() == 2.0);
}

TEST_CASE("families") {
  const TestFamily probe{TestFamily::Kind::PowerProbe, 0.5, kP};
  CHECK(probe.value(0.25) == doctest::Approx(0.25));
  const TestFamily ramp{TestFamily::Kind::Ramp, 0.5, kP};
  CHECK(ramp.value(0.25) == doctest::Approx(0.5));
  CHECK(ramp.value(0.75) == 1.0);
  const TestFamily lr{TestFamily::Kind::LogRamp, 0.25, Params(0.5, 2, std::numbers::e)};
  CHECK(lr.value(0.5) == doctest::Approx(1.0));
  CHECK(lr.value(0.9) == 1.0);
  CHECK(lr.value(0.2) == 0.0);
  CHECK_THROWS_AS((TestFamily{TestFamily::Kind::LogRamp, 0.7, kP}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((TestFamily{TestFamily::Kind::PowerProbe, -1, kP}.validate()), std::invalid_argument);
}

TEST_CASE("differentiate") {
  const GradedMesh m({0.5, 1.0});
  CHECK(differentiate(PiecewiseFn(m, {0, 1}))[0] == 2.0);
  const GradedMesh g = make_mesh(32, 2, 1e-3);
  for (double s : differentiate(PiecewiseFn(g, std::vector<double>(33, 3.0)))) CHECK(s == 0.0);

  // linearity
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::vector<double> f(33), h(33), comb(33);
  for (std::size_t i = 0; i < 33; ++i) {
    f[i] = n01(rng);
    h[i] = n01(rng);
    comb[i] = 2 * f[i] - 3 * h[i];
  }
  const auto df = differentiate(PiecewiseFn(g, f)), dh = differentiate(PiecewiseFn(g, h)),
             dc = differentiate(PiecewiseFn(g, comb));
  for (std::size_t c = 0; c < 32; ++c) CHECK(dc[c] == doctest::Approx(2 * df[c] - 3 * dh[c]));
}

TEST_CASE("sampled PowerProbe slopes converge at first order") {
  const TestFamily probe{TestFamily::Kind::PowerProbe, 0.3, kP};
  auto worst = [&](std::size_t n) {
    const GradedMesh m = make_mesh(n, 1, 0.1);
    const auto s = differentiate(sample_family(probe, m));
    double w = 0;
    for (std::size_t c = 0; c < m.cells(); ++c) {
      const double mid = 0.5 * (m.nodes()[c] + m.nodes()[c + 1]);
      w = std::max(w, std::abs(s[c] - probe.derivative(mid)));
    }
    return w;
  };
  const double e1 = worst(512), e2 = worst(1024);
  CHECK(e1 * 512 < 1.0);
  CHECK(e2 < e1);
}

TEST_CASE("interpolation error is second order for a smooth profile") {
  {
    const TestFamily fam{TestFamily::Kind::PowerProbe, 0.3, kP};
    auto err = [&](std::size_t n) {
      const GradedMesh m = make_mesh(n, 1, 0.01);
      const PiecewiseFn f = sample_family(fam, m);
      double w = 0;
      for (int k = 0; k < 20000; ++k) {
        const double t = 0.01 + 0.99 * (k + 0.5) / 20000;
        w = std::max(w, std::abs(f(t) - fam.value(t)));
      }
      return w;
    };
    CHECK(err(256) / err(512) > 3.5);
  }
}

TEST_CASE("PiecewiseFn") {
  const GradedMesh m = make_mesh(4, 1, 0.25);
  CHECK_THROWS_AS(PiecewiseFn(m, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseFn(m, {1, 0, 0, 0, 0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseFn(m, {0, NAN, 0, 0, 0}), std::invalid_argument);
  const PiecewiseFn f(m, {0, 0, 1, 2, 2}, 2);
  CHECK(f(0.53125) == doctest::Approx(0.5));
  CHECK(f.value_at_end() == 2.0);
  CHECK(f.scaled(-2).values()[3] == -4.0);
  CHECK(is_g_admissible(f));
  CHECK_FALSE(is_g_admissible(PiecewiseFn(m, {0, 0, 1, 2, 3}, 2)));
}

TEST_CASE("partition_sets examples") {
  const GradedMesh m = make_mesh(64, 1, 1e-3);
  {
    const auto r = partition_sets(from_fn(m, [](double t) { return t * (2 - t); }), 2,
                                  PartitionWeight::Plain);
    CHECK(r.B_set.empty());
    REQUIRE(r.A_set.size() == 1);
    CHECK(r.A_set[0].a == m.t_min());
    CHECK(r.A_set[0].b == 1.0);
  }
  {
    const auto r = partition_sets(from_fn(m, [](double t) { return 3 * t; }), 1, PartitionWeight::Plain);
    CHECK(r.B_set.empty());
  }
  {
    const auto r = partition_sets(from_fn(m, [](double t) { return t * t; }), 1.5, PartitionWeight::Plain);
    // the first cells fall in A: the chord slope ratio there is close to 1
    double b_len = 0;
    for (const auto& iv : r.B_set) b_len += iv.b - iv.a;
    CHECK(b_len > 0.95 * (1 - m.t_min()));
    CHECK_FALSE(r.A_set.empty());
  }
}

TEST_CASE("partition pieces cover the mesh") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  const GradedMesh m = make_mesh(128, 2, 1e-3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(129);
    for (auto& x : v) x = n01(rng);
    for (auto kind : {PartitionWeight::Plain, PartitionWeight::LogWeighted}) {
      const auto r = partition_sets(PiecewiseFn(m, v), 2.0, kind, std::exp(2.0));
      double pos = m.t_min(), a_len = 0, b_len = 0;
      for (const auto& pc : r.pieces) {
        CHECK(pc.a == doctest::Approx(pos).epsilon(1e-14));
        CHECK(pc.b >= pc.a);
        (pc.in_B ? b_len : a_len) += pc.b - pc.a;
        pos = pc.b;
      }
      CHECK(pos == doctest::Approx(1.0));
      CHECK(a_len + b_len == doctest::Approx(1 - m.t_min()).epsilon(1e-12));
      // merged sets are disjoint and ordered
      std::vector<Interval> all = r.A_set;
      all.insert(all.end(), r.B_set.begin(), r.B_set.end());
      std::sort(all.begin(), all.end(), [](auto x, auto y) { return x.a < y.a; });
      for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i].a >= all[i - 1].b - 1e-15);
    }
  }
}

TEST_CASE("piecewise text format round trip") {
  const GradedMesh m = make_mesh(16, 2, 1e-3);
  std::vector<double> v(17, 0.0);
  for (std::size_t i = 3; i < 17; ++i) v[i] = std::sin(static_cast<double>(i)) / 3;
  const PiecewiseFn f(m, v, 3);
  std::stringstream ss;
  write_piecewise(ss, f, kP);
  const PiecewiseFile back = read_piecewise(ss);
  CHECK(back.params == kP);
  CHECK(back.fn.support_floor() == 3);
  for (std::size_t i = 0; i < 17; ++i) {
    CHECK(back.fn.values()[i] == v[i]);
    CHECK(back.fn.mesh().nodes()[i] == m.nodes()[i]);
  }
  std::stringstream bad("# alpha=0 p=2\n0.1 x\n");
  CHECK_THROWS_AS(read_piecewise(bad), std::runtime_error);
}
