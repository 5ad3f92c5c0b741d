#include "hardy/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hardy {

double ConstantLedger::get(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e.value;
  throw std::out_of_range("ledger has no entry " + name);
}

double choose_cap(double p, double beta_abs, double log_scale) {
  if (!(log_scale > 0) || !(beta_abs > 0))
    throw std::invalid_argument("choose_cap: needs positive beta and log scale");
  for (double M = 1.0; M < 1e300; M *= 2.0) {
    const double bm = beta_abs * M;
    const bool tail_small = (p / 2.0) * std::pow(bm, 1.0 - p) / log_scale <= 0.125;
    const bool lemma_eps = std::pow(M, 1.0 - p) / log_scale <= 1e-2;
    // the B-set cross term must be absorbed by the |h'|^p term
    const bool absorbed = (2.0 / p) / (bm * log_scale) <= 1.0;
    if (tail_small && lemma_eps && absorbed) return M;
  }
  throw std::runtime_error("choose_cap: no admissible cap");
}

namespace {

constexpr const char* kNoncritLemma = "log-remainder lemma, noncritical case";
constexpr const char* kCombine = "remainder lemma combined with the monotone-weight lemma";
constexpr const char* kThmNC = "noncritical remainder theorem, proof";
constexpr const char* kCritLemma = "log-remainder lemma, critical case";
constexpr const char* kGradLemma = "gradient-remainder lemma, critical case";
constexpr const char* kThmC = "critical remainder theorem, proof";
constexpr const char* kFundamental = "fundamental inequality |1+X|^p - 1 - pX >= c(p) D(X)";

void require_positive(const ConstantLedger& l) {
  for (const auto& e : l.entries)
    if (!(e.value > 0) || !std::isfinite(e.value))
      throw std::runtime_error("build_ledger: constant " + e.name +
                               " is not positive; R is too small for the constructive formulas");
}

}  // namespace

ConstantLedger build_ledger(const Params& params) {
  ConstantLedger l;
  l.params = params;
  l.regime = classify(params);
  const double p = params.p();
  const double R = params.R();
  const double A1_one = std::log(R);
  l.lambda = lambda_const(params);
  l.L_sharp = std::pow(l.lambda, 1.0 - 1.0 / p);
  auto add = [&](std::string name, double v, std::string formula, std::string src) {
    l.entries.push_back({std::move(name), v, std::move(formula), std::move(src)});
  };
  add("lambda", l.lambda, l.regime == Regime::CriticalBoundary ? "(1-1/p)^p" : "|1-1/p-alpha|^p",
      "definition of the sharp constant");
  add("L_sharp", l.L_sharp, "lambda^(1-1/p)", "sharp boundary coefficient of the corollaries");

  if (l.regime == Regime::Noncritical) {
    const double b = params.beta();
    if (p >= 2.0) {
      l.cp = estimate_cp(p, 2.0, CpMode::global());
      add("cp", l.cp, "inf (|1+X|^p-1-pX)/X^2 (scanned)", kFundamental);
      l.C3 = l.cp * std::pow(b, p - 2.0) / (p * p);
    } else {
      l.M = choose_cap(p, b, A1_one);
      l.cp = estimate_cp(p, p, CpMode::capped(l.M));
      add("M", l.M, "smallest power of 2 meeting the cap conditions with log R", kNoncritLemma);
      add("cp", l.cp, "inf (|1+X|^p-1-pX)/capped(X; M) (scanned)", kFundamental);
      l.C3 = l.cp * std::pow(b * l.M, p - 2.0) / (p * p);
    }
    auto L3_of = [&](double c3) { return std::pow(b, p - 1.0) - 2.0 * c3 / A1_one; };
    // keep L3 >= beta^{p-1}/2 and the monotone weight C3/A1^2 <= 1
    while (L3_of(l.C3) < 0.5 * std::pow(b, p - 1.0) || l.C3 > A1_one * A1_one) {
      l.C3 *= 0.5;
      ++l.c3_halvings;
    }
    l.L3 = L3_of(l.C3);
    add("C3", l.C3,
        std::string(p >= 2.0 ? "cp*beta^(p-2)/p^2" : "cp*(M*beta)^(p-2)/p^2") + " / 2^" +
            std::to_string(l.c3_halvings) + " (halvings keeping L3 >= beta^(p-1)/2)",
        kNoncritLemma);
    add("L3", l.L3, "beta^(p-1) - 2*C3/A1(1)", kNoncritLemma);
    l.C4 = l.C3 / (1.0 + 2.0 * l.lambda);
    l.L4 = 2.0 * l.lambda * l.L3 / (1.0 + 2.0 * l.lambda);
    add("C4", l.C4, "C3/(1+2*lambda)", kCombine);
    add("L4", l.L4, "2*lambda*L3/(1+2*lambda)", kCombine);
    l.C0 = l.lambda * l.C4 / 3.0;
    if (l.C0 > l.lambda * A1_one * A1_one)
      throw std::runtime_error("build_ledger: C0 exceeds lambda*(log R)^2");
    l.envelope = 4.0 * R / (std::numbers::e * std::numbers::e);
    l.C1 = (l.C4 / 3.0) / l.envelope;
    l.L = l.L4;
    add("C0", l.C0, "lambda*C4/3", kThmNC);
    add("C1", l.C1, "(C4/3)*e^2/(4R)", kThmNC);
    add("L", l.L, "L4", kThmNC);
    require_positive(l);
    return l;
  }

  const bool boundary = l.regime == Regime::CriticalBoundary;
  if (boundary && !(R >= e_to_the_e() * (1.0 - 1e-15)))
    throw std::invalid_argument("build_ledger: the critical line needs R >= e^e");
  const double b = boundary ? 1.0 - 1.0 / p : std::abs(params.beta());
  const double A2_one = boundary ? std::log(A1_one) : 0.0;
  double factor = 1.0;
  if (p >= 2.0) {
    l.cp = estimate_cp(p, 2.0, CpMode::global());
    l.cp_pp = estimate_cp(p, p, CpMode::global());
    add("cp", l.cp, "inf (|1+X|^p-1-pX)/X^2 (scanned)", kFundamental);
    add("cp_pp", l.cp_pp, "inf (|1+X|^p-1-pX)/|X|^p (scanned)", kFundamental);
    l.C5 = l.cp * std::pow(b, p - 2.0) / (p * p);
  } else {
    l.M = choose_cap(p, b, boundary ? A2_one : A1_one);
    l.cp = estimate_cp(p, p, CpMode::capped(l.M));
    l.cp_pp = l.cp;
    factor = 1.0 + std::pow(l.M, p);
    add("M", l.M,
        boundary ? "smallest power of 2 meeting the cap conditions with log log R"
                 : "smallest power of 2 meeting the cap conditions with log R",
        kCritLemma);
    add("cp", l.cp, "inf (|1+X|^p-1-pX)/capped(X; M) (scanned)", kFundamental);
    l.C5 = l.cp * std::pow(b * l.M, p - 2.0) / (p * p);
  }
  add("C5", l.C5, p >= 2.0 ? "cp*beta^(p-2)/p^2" : "cp*(M*beta)^(p-2)/p^2", kCritLemma);

  // boundary value h(1)^p = A1(1)^{1-p} |u(1)|^p on the critical line
  const double trace_scale = boundary ? std::pow(A1_one, 1.0 - p) : 1.0;
  if (boundary) {
    l.L5 = trace_scale * (std::pow(b, p - 1.0) + 2.0 * l.C5 / A2_one);
    add("L5", l.L5, "A1(1)^(1-p)*(beta^(p-1) + 2*C5/A2(1))", kCritLemma);
  } else {
    l.L5 = std::pow(b, p - 1.0) + 2.0 * l.C5 / A1_one;
    add("L5", l.L5, "|beta|^(p-1) + 2*C5/A1(1)", kCritLemma);
  }

  const double two_p1 = std::pow(2.0, p + 1.0);
  l.C6 = std::min(l.C5 / (two_p1 * std::pow(b, p) * factor), l.cp_pp / two_p1);
  l.L6 = 0.5 * l.L5 + 0.5 * std::pow(b, p - 1.0) * trace_scale;
  add("C6", l.C6,
      p >= 2.0 ? "min(C5/(2^(p+1)*|beta|^p), cp_pp/2^(p+1))"
               : "min(C5/(2^(p+1)*|beta|^p*(1+M^p)), cp/2^(p+1))",
      kGradLemma);
  add("L6", l.L6, boundary ? "L5/2 + beta^(p-1)*A1(1)^(1-p)/2" : "L5/2 + |beta|^(p-1)/2",
      kGradLemma);

  const double c7_textbook = std::min(l.C5, l.lambda * l.C6) / 2.0;
  const double c7_valid = std::min(l.C6, l.C5 / l.lambda) / 2.0;
  l.C7 = std::min(c7_textbook, c7_valid);
  l.L7 = 0.5 * (l.L5 + l.L6);
  add("C7", l.C7, "min(C5, lambda*C6)/2, capped by min(C6, C5/lambda)/2", kThmC);
  add("L7", l.L7, "(L5+L6)/2", kThmC);

  l.C0 = l.lambda * l.C7 / 3.0;
  const double log_floor = boundary ? A2_one : A1_one;
  if (l.C0 > l.lambda * log_floor * log_floor)
    throw std::runtime_error("build_ledger: C0 exceeds the log-floor bound");
  if (boundary) {
    l.envelope = envelope_bound(R, EnvelopeKind::A2sq);
    l.C1 = (l.C7 / 3.0) / l.envelope;
    add("C1", l.C1, "(C7/3)/max_t t*A2(t)^2", kThmC);
  } else {
    l.envelope = 4.0 * R / (std::numbers::e * std::numbers::e);
    l.C1 = (l.C7 / 3.0) / l.envelope;
    add("C1", l.C1, "(C7/3)*e^2/(4R)", kThmC);
  }
  add("C0", l.C0, "lambda*C7/3", kThmC);
  l.L = l.L7;
  add("L", l.L, "L7", kThmC);
  require_positive(l);
  return l;
}

std::string ledger_to_json(const ConstantLedger& ledger, int indent) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& e : ledger.entries) {
    j[e.name] = {{"name", e.name},
                 {"value", e.value},
                 {"formula", e.formula},
                 {"paper_location", e.source}};
  }
  return j.dump(indent);
}

}  // namespace hardy
