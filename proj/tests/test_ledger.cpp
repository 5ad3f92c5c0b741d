#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "hardy/ledger.hpp"

using namespace hardy;

TEST_CASE("noncritical ledger at alpha=0, p=2, R=e^2") {
  const ConstantLedger l = build_ledger(Params(0, 2, std::exp(2.0)));
  CHECK(l.lambda == 0.25);
  CHECK(l.C3 == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(l.L3 == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(l.C4 == doctest::Approx(1.0 / 6).epsilon(1e-9));
  CHECK(l.L4 == doctest::Approx(1.0 / 12).epsilon(1e-9));
  CHECK(l.C0 == doctest::Approx(1.0 / 72).epsilon(1e-9));
  CHECK(l.C1 == doctest::Approx(1.0 / 72).epsilon(1e-9));
  CHECK(l.L == l.L4);
  CHECK(l.L_sharp == doctest::Approx(0.5));
}

TEST_CASE("C4 (1 + 2 lambda) = C3") {
  for (double a : {0.0, -0.5, 0.25})
    for (double p : {1.5, 2.0, 3.0}) {
      if (a >= 1 - 1 / p) continue;
      const ConstantLedger l = build_ledger(Params(a, p, 20));
      CHECK(l.C4 * (1 + 2 * l.lambda) == doctest::Approx(l.C3).epsilon(1e-14));
    }
}

TEST_CASE("critical boundary ledger") {
  const ConstantLedger l = build_ledger(Params(0.5, 2, e_to_the_e()));
  CHECK(l.regime == Regime::CriticalBoundary);
  CHECK(l.C5 == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(l.C0 > 0);
  CHECK(l.C1 > 0);
  CHECK(l.L > 0);
}

TEST_CASE("ledger is deterministic and positive across a grid") {
  for (double p : {1.5, 2.0, 3.0, 4.0})
    for (double a : {-0.5, 0.0, 0.2, 1 - 1 / p, 1.0}) {
      const Params P(a, p, 2 * e_to_the_e());
      const ConstantLedger x = build_ledger(P), y = build_ledger(P);
      REQUIRE(x.entries.size() == y.entries.size());
      for (std::size_t i = 0; i < x.entries.size(); ++i) {
        CHECK(x.entries[i].value == y.entries[i].value);
        CHECK(x.entries[i].value > 0);
      }
      CHECK(x.C0 > 0);
      CHECK(x.C1 > 0);
    }
}

TEST_CASE("ledger threshold on R") {
  CHECK_THROWS_AS(build_ledger(Params(0.5, 2, 5)), std::invalid_argument);
  CHECK_NOTHROW(build_ledger(Params(0, 2, std::exp(2.0))));
}

TEST_CASE("choose_cap") {
  const double M = choose_cap(1.5, 0.33, std::log(20.0));
  CHECK(M >= 1);
  CHECK(std::pow(M, -0.5) / std::log(20.0) <= 1e-2);
  CHECK(std::log2(M) == doctest::Approx(std::round(std::log2(M))));
  CHECK_THROWS_AS(choose_cap(1.5, 0, 1), std::invalid_argument);
}

TEST_CASE("ledger JSON has one record per constant") {
  const ConstantLedger l = build_ledger(Params(0, 2, std::exp(2.0)));
  const auto j = nlohmann::json::parse(ledger_to_json(l));
  CHECK(j.size() == l.entries.size());
  CHECK(j["lambda"]["value"].get<double>() == 0.25);
  for (const auto& [k, v] : j.items()) {
    CHECK(v.contains("formula"));
    CHECK(v.contains("paper_location"));
  }
  CHECK(l.get("C0") == l.C0);
  CHECK_THROWS_AS(l.get("nope"), std::out_of_range);
}
