#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hardy/ledger.hpp"
#include "hardy/mesh.hpp"
#include "hardy/quad.hpp"

namespace hardy {

enum class InequalityId {
  EqA, CorB, ThmNC1, ThmC1, ThmC2_10, CorD, CorE,
  Lem3_1, Lem3_2, Lem3_3, Lem3_6a, Lem3_6b, Lem3_7a, Lem3_7b, Eq3_16,
  Lem7_1, Lem7_2, Lem7_5, Lem7_6, Lem7_7
};

std::string_view to_string(InequalityId id) noexcept;
/// Throws std::invalid_argument for an unknown name.
InequalityId inequality_from_string(std::string_view name);
const std::vector<InequalityId>& all_inequalities();

struct InequalitySpec {
  InequalityId id;
  Params params;
  ConstantLedger ledger;
  std::optional<PiecewiseFn> f;  ///< monotone weight for Lem3_1
  std::optional<double> M;       ///< partition cap for Lem7_5..Lem7_7

  /// Checks the regime and parameter requirements of the id and fills the
  /// ledger. Throws std::invalid_argument on a mismatch.
  static InequalitySpec make(InequalityId id, const Params& params,
                             std::optional<PiecewiseFn> f = std::nullopt,
                             std::optional<double> M = std::nullopt);

  /// Degree k with deficit(c u) = |c|^k deficit(u).
  double homogeneity_degree() const noexcept;
  /// Cap used for the A/B split of the partition lemmas.
  double partition_cap() const;
};

/// Parameters at which every id is well defined, used by the suites.
std::vector<Params> default_params_for(InequalityId id);

struct TermValue {
  std::string name;
  bool lhs;  ///< side of the inequality the term sits on
  double value;
  double error_estimate;
};

struct DeficitReport {
  std::string id;
  double lhs = 0, rhs = 0, deficit = 0;
  std::vector<TermValue> terms;
  std::vector<std::pair<std::string, double>> info;
  double t_min = 0;
  std::size_t n = 0;
  int gauss_order = 8;
  double error_estimate = 0;
  bool divergence_warning = false;

  /// Value of the named term; throws std::out_of_range.
  double term(const std::string& name) const;
  /// -tol_rel * (|lhs| + |rhs|) - error_estimate
  double tolerance(double tol_rel = 1e-8) const noexcept;
};

/// One integral c * int |u|^a |u'|^b w(t) dt of a display, optionally
/// restricted to the A or B set of the partition lemmas.
struct Term {
  enum class Region { All, A, B };
  std::string name;
  bool lhs;
  double coeff;
  double a_exp, b_exp;
  std::function<double(double)> weight;
  Region region = Region::All;
};

/// The integral terms of a spec (boundary terms are handled separately).
std::vector<Term> spec_terms(const InequalitySpec& spec);

/// Value and derivative at t inside the given mesh cell.
using FieldEval = std::function<std::pair<double, double>(std::size_t cell, double t)>;

/// Deficit engine for one spec on one mesh. Weight tables at the Gauss
/// points are built once; each evaluation costs one pass over the points.
class DeficitEvaluator {
public:
  DeficitEvaluator(InequalitySpec spec, GradedMesh mesh);

  const InequalitySpec& spec() const noexcept { return spec_; }
  const GradedMesh& mesh() const noexcept { return mesh_; }

  /// Throws std::invalid_argument if fn is not on this evaluator's mesh or
  /// a partition lemma gets a function that is nonzero at t_min.
  DeficitReport operator()(const PiecewiseFn& fn) const;

  /// Evaluates an arbitrary field (e.g. an analytic family) given its value
  /// at the right end. Not available for the partition lemmas.
  DeficitReport evaluate_field(const FieldEval& field, double u_at_end) const;

private:
  template <bool kCellConstSlope, class F>
  void integrate_terms(const F& field, std::vector<double>& values, std::vector<double>& errors,
                       bool& divergence) const;
  void integrate_regions(const PiecewiseFn& fn, std::vector<double>& values,
                         std::vector<double>& errors) const;
  DeficitReport assemble(const std::vector<double>& values, const std::vector<double>& errors,
                         bool divergence, double u_end) const;

  InequalitySpec spec_;
  GradedMesh mesh_;
  std::vector<Term> terms_;
  std::vector<double> tc_, tf_;               // coarse / split-cell Gauss points
  std::vector<std::vector<double>> wc_, wf_;  // per-term weight times Gauss weight
  std::vector<double> a_exps_, b_exps_;       // distinct exponents of |u| and |u'|
  std::vector<std::size_t> a_idx_, b_idx_;    // per-term index into the lists above
};

/// One-off evaluation; builds a DeficitEvaluator on fn's mesh.
DeficitReport deficit(const InequalitySpec& spec, const PiecewiseFn& fn);

/// Weighted Hardy check for a monotone f with f(1) <= 1. Throws
/// std::invalid_argument when f has a negative slope or f(1) > 1.
DeficitReport lemma31_check(const Params& params, const PiecewiseFn& f, const PiecewiseFn& u);

struct SharpnessRow {
  double eps;
  double deficit;    ///< truncated + tail
  double truncated;  ///< integrals over [t_min, 1]
  double tail;       ///< analytic contribution of (0, t_min)
  double error_estimate;
};

struct SharpnessTable {
  std::string id;
  std::string family;
  std::vector<SharpnessRow> rows;
  double fitted_rate = 0;  ///< slope of log(deficit) against log(eps)
  double t_min = 0;
  std::size_t n = 0;
};

/// Deficits of the analytic family for CorB/CorD (PowerProbe) and CorE
/// (LogProbe). Throws std::invalid_argument on a family/spec mismatch.
SharpnessTable sharpness_probe(const InequalitySpec& spec, TestFamily::Kind family,
                               const std::vector<double>& eps_sequence, std::size_t n = 4096,
                               double t_min = 1e-6);

struct DemoRow {
  double eps;
  double energy_closed;
  double energy_quadrature;
};

struct DemoTable {
  std::string family;
  std::vector<DemoRow> rows;
  bool strictly_decreasing = false;
};

/// Default eps schedule for the critical demo of the given params.
std::vector<double> default_demo_schedule(const Params& params);

/// Energies of the minimizing sequence. Throws std::invalid_argument in
/// the noncritical regime.
DemoTable critical_infimum_demo(const Params& params, const std::vector<double>& eps_sequence);

/// Standard splitmix64 step applied to x.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Random test function on the mesh for the nonnegativity suites. The
/// values up to a random support floor are 0; `g_admissible` also makes the
/// last cell flat.
PiecewiseFn random_test_function(const GradedMesh& mesh, const Params& params,
                                 std::mt19937_64& rng, bool g_admissible = false);

struct SuiteRecord {
  std::string id;
  std::uint64_t seed;
  std::size_t n;
  double t_min;
  double lhs, rhs, deficit;
  bool ok;
};

struct SuiteConfig {
  std::size_t cases = 1000;
  std::size_t n = 1024;
  double t_min = 1e-4;
  double gamma = 2.0;
  std::uint64_t seed = 1;
  double tol_rel = 1e-8;
  unsigned workers = 1;
};

/// Runs the randomized nonnegativity suite for one id on one Params.
std::vector<SuiteRecord> nonnegativity_suite(InequalityId id, const Params& params,
                                             const SuiteConfig& config);

void write_suite_csv(std::ostream& os, const std::vector<SuiteRecord>& records, bool header = true);
std::string report_to_json(const DeficitReport& report, int indent = 2);

}  // namespace hardy
