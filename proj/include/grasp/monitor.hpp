#pragma once

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "grasp/geometry.hpp"
#include "grasp/robustness.hpp"
#include "grasp/stl.hpp"

namespace grasp {

enum class MonitorMode {
  /// Normalized predicates; intervals are sound and converge at the horizon.
  Sound,
  /// Raw predicate values and a discounted look-ahead before each temporal
  /// window opens. For search ordering only: neither sound nor convergent.
  Heuristic,
};

/// Per-endpoint running aggregates over the observed part of one temporal
/// window whose child is immutable.
struct RawAggregate {
  AgmAccumulator lower;
  AgmAccumulator upper;
};

/// Snapshot of the monitor tables after observing a signal prefix. Snapshots
/// are immutable; appending a sample returns a new snapshot that shares every
/// per-subformula table the sample did not touch.
class MonitorState {
 public:
  /// Storage for one subformula: H over its materialized steps, plus H_raw
  /// for temporal nodes with an immutable child.
  struct Table {
    int lo = 0;  // first materialized time step
    std::vector<Interval> values;
    std::vector<RawAggregate> raw;
  };

  MonitorState() = default;

  /// Interval of the whole formula at t = 0.
  Interval root() const;
  /// H[node, t] for a node index of the owning monitor and t in its range.
  Interval at(std::size_t node, int t) const;
  /// Number of samples observed.
  int prefix_len() const { return prefix_len_; }
  /// Full-window reaggregations performed since the blank tables were built.
  long reaggregations() const { return reaggregations_; }

 private:
  friend class IntervalMonitor;

  std::vector<std::shared_ptr<const Table>> tables_;
  int prefix_len_ = 0;
  long reaggregations_ = 0;
  std::size_t root_ = 0;
};

/// Incremental interval monitor over a compiled formula.
///
/// Subformulae are visited in post-order on every appended sample. Boolean
/// nodes update pointwise. A temporal node whose child is immutable keeps a
/// RawAggregate per time step and absorbs the new child value in O(1); its
/// interval fills the unobserved part of the window with the child's
/// all-unknown interval. A temporal node over a temporal child re-aggregates
/// the whole window for every entry whose window saw a child change.
///
/// Each node materializes only the time steps its ancestors read: the root
/// at t = 0, and the child of [a, b] over parent steps [lo, hi] at
/// [lo + a, hi + b] (heuristic mode widens this to [lo, hi + b] so the
/// look-ahead can read the child at the current step).
class IntervalMonitor {
 public:
  struct Node {
    const stl::Formula* formula = nullptr;
    stl::Op op = stl::Op::True;
    std::vector<std::size_t> children;
    int a = 0;
    int b = 0;
    int lo = 0;
    int hi = 0;
    bool immutable = false;
    bool keeps_raw = false;  // temporal with immutable child
    PredicateDef predicate;  // Op::Predicate only
    Interval fill;           // child's all-unknown interval (keeps_raw only)
  };

  IntervalMonitor(stl::FormulaPtr phi, const PredicateTable& preds,
                  MonitorMode mode = MonitorMode::Sound);

  /// Tables after observing the singleton prefix (x0).
  MonitorState init(Vec2 x0) const;

  /// Appends `sample` at step state.prefix_len(); the input snapshot is untouched.
  MonitorState append(const MonitorState& state, Vec2 sample) const;

  /// append() plus the root interval, mirroring EvalInterval's outputs.
  std::pair<Interval, MonitorState> eval_interval(Vec2 sample, const MonitorState& state) const {
    auto next = append(state, sample);
    return {next.root(), std::move(next)};
  }

  /// Tables before any sample is observed.
  const MonitorState& blank() const { return blank_; }

  const stl::Formula& formula() const { return *phi_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t root_index() const { return nodes_.size() - 1; }
  int horizon() const { return horizon_; }
  MonitorMode mode() const { return mode_; }

 private:
  struct Range {
    int lo = 0;
    int hi = -1;
    bool empty() const { return lo > hi; }
  };

  std::size_t compile(const stl::Formula& f, const PredicateTable& preds, int lo, int hi);
  double predicate_value(const Node& n, Vec2 pos) const;
  Interval unknown_interval(std::size_t node) const;
  Interval compute_entry(const Node& n, int t, int last_observed,
                         const std::vector<const MonitorState::Table*>& tables,
                         bool& reaggregated) const;
  Interval lookahead(const Node& n, int t, int last_observed, Interval child_now) const;
  static Interval from_raw(const Node& n, const RawAggregate& raw);

  stl::FormulaPtr phi_;
  MonitorMode mode_;
  int horizon_ = 0;
  std::vector<Node> nodes_;  // post-order; root last
  MonitorState blank_;
};

}  // namespace grasp
