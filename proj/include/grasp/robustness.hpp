#pragma once

#include <span>
#include <string>
#include <vector>

#include "grasp/geometry.hpp"
#include "grasp/stl.hpp"

namespace grasp {

/// Range of robustness values over all completions of a partial signal.
/// Sound intervals satisfy -1 <= lower <= upper <= 1; the heuristic variant
/// reuses this type without the clamp.
struct Interval {
  double lower = -1.0;
  double upper = 1.0;

  double width() const { return upper - lower; }
  bool contains(double v, double tol = 0.0) const {
    return v >= lower - tol && v <= upper + tol;
  }
  static constexpr Interval point(double v) { return {v, v}; }
  static constexpr Interval unknown() { return {-1.0, 1.0}; }
  friend constexpr bool operator==(Interval, Interval) = default;
};

/// Circular region predicate: satisfied inside the disk of `radius` around `center`.
struct PredicateDef {
  std::string id;
  Vec2 center;
  double radius = 1.0;
};

/// Predicates keyed by id; lookup is linear because tasks carry a handful.
class PredicateTable {
 public:
  PredicateTable() = default;
  explicit PredicateTable(std::vector<PredicateDef> defs);

  void add(PredicateDef def);
  const PredicateDef& at(const std::string& id) const;
  const PredicateDef* find(const std::string& id) const;
  const std::vector<PredicateDef>& defs() const { return defs_; }
  std::size_t size() const { return defs_.size(); }

 private:
  std::vector<PredicateDef> defs_;
};

/// r^2 - |p - c|^2.
double eval_predicate_raw(const PredicateDef& pred, Vec2 pos);

/// (r^2 - d^2) / (r^2 + d^2), in [-1, 1].
double eval_predicate_normalized(const PredicateDef& pred, Vec2 pos);

enum class AgmKind { And, Or };

/// Streaming AGM aggregation. Conjunction takes the geometric branch
/// (prod(1 + v))^(1/n) - 1 when every value is strictly positive and the
/// mean of min(v, 0) otherwise; disjunction is the dual. Products are kept
/// as sums of logs so long windows neither overflow nor underflow.
class AgmAccumulator {
 public:
  explicit AgmAccumulator(AgmKind kind) : kind_(kind) {}

  void add(double v) { add_repeated(v, 1); }
  void add_repeated(double v, int count);

  /// Aggregate of the values seen so far plus `fill_count` copies of `fill`.
  double value_with_fill(double fill, int fill_count) const;
  double value() const { return value_with_fill(0.0, 0); }

  int count() const { return count_; }
  AgmKind kind() const { return kind_; }

 private:
  AgmKind kind_;
  int count_ = 0;
  int breaking_ = 0;       // values that rule out the geometric branch
  double log_sum_ = 0.0;   // sum of log1p(|v|) over geometric-branch values
  double clipped_sum_ = 0.0;
};

double agm_and(std::span<const double> values);
double agm_or(std::span<const double> values);

/// Robustness of phi at step t on a complete signal. Requires
/// signal.size() >= t + horizon(phi) + 1.
double agm_robustness(const stl::Formula& phi, const PredicateTable& preds,
                      std::span<const Vec2> signal, int t = 0);

}  // namespace grasp
