#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hardy/params.hpp"

namespace hardy {

/// Strictly increasing nodes t_0 = t_min > 0, ..., t_n = 1 (or a rescaled
/// copy ending at some other right endpoint).
class GradedMesh {
public:
  /// Throws std::invalid_argument unless nodes are finite, positive and
  /// strictly increasing with at least two entries.
  explicit GradedMesh(std::vector<double> nodes, double gamma = 1.0);

  std::span<const double> nodes() const noexcept { return nodes_; }
  std::size_t cells() const noexcept { return nodes_.size() - 1; }
  double t_min() const noexcept { return nodes_.front(); }
  double t_max() const noexcept { return nodes_.back(); }
  double gamma() const noexcept { return gamma_; }
  double width(std::size_t cell) const { return nodes_[cell + 1] - nodes_[cell]; }

  /// Index of the cell containing t (clamped to the mesh).
  std::size_t locate(double t) const noexcept;

  /// Copy with every node multiplied by `factor`.
  GradedMesh scaled(double factor) const;

  /// Largest (t_{i+1} - t_i) / t_{i+1}.
  double max_relative_width() const noexcept;

private:
  std::vector<double> nodes_;
  double gamma_;
};

/// t_i = t_min + (1 - t_min) (i/n)^gamma, i = 0..n.
/// Throws std::invalid_argument unless n >= 2, gamma >= 1, 0 < t_min <= 1e-2
/// (the coarse n = 2..15 meshes are allowed for hand-checkable examples).
GradedMesh make_mesh(std::size_t n, double gamma, double t_min);

/// Concatenation of graded sub-meshes between consecutive breakpoints; each
/// segment gets `n_per_segment` cells graded towards its left end.
GradedMesh make_composite_mesh(std::span<const double> breakpoints, std::size_t n_per_segment,
                               double gamma);

/// Continuous piecewise-linear function on a GradedMesh. Nodes with index
/// below `support_floor` carry the value 0.
class PiecewiseFn {
public:
  /// Throws std::invalid_argument on a size mismatch, a non-finite value or
  /// a nonzero value below the support floor.
  PiecewiseFn(GradedMesh mesh, std::vector<double> values, std::size_t support_floor = 0);

  const GradedMesh& mesh() const noexcept { return mesh_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t support_floor() const noexcept { return support_floor_; }

  double value_at_end() const noexcept { return values_.back(); }
  double slope(std::size_t cell) const noexcept {
    return (values_[cell + 1] - values_[cell]) / (mesh_.nodes()[cell + 1] - mesh_.nodes()[cell]);
  }
  /// Value inside `cell` at t (linear interpolation, no range check).
  double eval_in_cell(std::size_t cell, double t) const noexcept {
    return values_[cell] + slope(cell) * (t - mesh_.nodes()[cell]);
  }
  double operator()(double t) const noexcept { return eval_in_cell(mesh_.locate(t), t); }

  PiecewiseFn scaled(double c) const;

private:
  GradedMesh mesh_;
  std::vector<double> values_;
  std::size_t support_floor_;
};

/// The named one-parameter families used as near-extremals and as
/// minimizing sequences.
struct TestFamily {
  enum class Kind { PowerProbe, LogProbe, Ramp, LogRamp };
  Kind kind;
  double eps;
  Params params;

  /// Throws std::invalid_argument when eps is outside the family's range.
  void validate() const;
  double value(double t) const;
  double derivative(double t) const;
  /// Points in (0,1) where the family has a kink.
  std::vector<double> breakpoints() const;
};

std::string_view to_string(TestFamily::Kind k) noexcept;

/// Nodal interpolation of the family on the mesh.
PiecewiseFn sample_family(const TestFamily& family, const GradedMesh& mesh);

/// Per-cell slopes.
std::vector<double> differentiate(const PiecewiseFn& fn);

/// Checks membership in G([0,1]) for the discrete surrogate: zero near 0,
/// nonzero first slope on the support, and zero slope in the last cell.
bool is_g_admissible(const PiecewiseFn& fn) noexcept;

enum class PartitionWeight { Plain, LogWeighted };

/// A sub-interval of one mesh cell assigned to A (|phi'| <= threshold) or B.
struct PartitionPiece {
  std::size_t cell;
  double a, b;
  bool in_B;
};

struct Interval {
  double a, b;
};

struct PartitionResult {
  std::vector<PartitionPiece> pieces;  ///< cell-ordered, covers [t_min, t_max]
  std::vector<Interval> A_set, B_set;  ///< merged pieces
  std::vector<double> C_points;
  double M;
  PartitionWeight weight_kind;
};

/// Splits [t_min, 1] according to |phi'| versus M|phi|/t (Plain) or
/// M|phi|/(t A1(t)) (LogWeighted, uses `R`). Ties go to A.
PartitionResult partition_sets(const PiecewiseFn& fn, double M, PartitionWeight kind,
                               double R = 0.0);

/// Two-column text format with a "# alpha=.. p=.. R=.. t_min=.." header.
void write_piecewise(std::ostream& os, const PiecewiseFn& fn, const Params& params);

struct PiecewiseFile {
  Params params;
  PiecewiseFn fn;
};

/// Throws std::runtime_error on malformed input.
PiecewiseFile read_piecewise(std::istream& is);

}  // namespace hardy
