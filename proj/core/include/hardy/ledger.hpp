#pragma once

#include <string>
#include <vector>

#include "hardy/params.hpp"

namespace hardy {

struct LedgerEntry {
  std::string name;
  double value;
  std::string formula;
  std::string source;  ///< which result of the theory the formula comes from
};

/// Constructive constants of the remainder inequalities for one Params.
///
/// Constants that do not apply to the regime are left at 0 and omitted
/// from `entries`. `L` is the boundary coefficient of the main theorem for
/// the regime; the intermediate boundary coefficients are kept alongside.
struct ConstantLedger {
  Params params{0.0, 2.0, 7.38905609893065};
  Regime regime = Regime::Noncritical;

  double lambda = 0;  ///< sharp Hardy constant
  double cp = 0;      ///< fundamental-inequality constant used for C3/C5
  double cp_pp = 0;   ///< same with exponent q = p (or capped), used for C6
  double M = 0;       ///< cap for 1 < p < 2, else 0

  double C3 = 0, C4 = 0;          // noncritical
  double C5 = 0, C6 = 0, C7 = 0;  // critical
  double C0 = 0, C1 = 0;
  double L = 0;

  double L3 = 0, L4 = 0;          // noncritical chain
  double L5 = 0, L6 = 0, L7 = 0;  // critical chain
  double L_sharp = 0;             ///< lambda^{1-1/p}, the corollary-level constant
  double envelope = 0;            ///< max t*A1^2 (or t*A2^2) used for C1

  int c3_halvings = 0;

  std::vector<LedgerEntry> entries;

  /// Value of the named entry; throws std::out_of_range if absent.
  double get(const std::string& name) const;
};

/// Assembles the ledger. Throws std::invalid_argument when R is below the
/// regime's threshold, std::runtime_error if a constant ends up nonpositive.
ConstantLedger build_ledger(const Params& params);

/// Smallest power of two satisfying the cap conditions for 1 < p < 2.
/// `log_scale` is log R (noncritical / interior) or log log R (boundary).
double choose_cap(double p, double beta_abs, double log_scale);

std::string ledger_to_json(const ConstantLedger& ledger, int indent = 2);

}  // namespace hardy
