#include "grasp/monitor.hpp"

#include <algorithm>
#include <stdexcept>

namespace grasp {

Interval MonitorState::root() const { return at(root_, 0); }

Interval MonitorState::at(std::size_t node, int t) const {
  const Table& table = *tables_.at(node);
  const int idx = t - table.lo;
  if (idx < 0 || idx >= static_cast<int>(table.values.size())) {
    throw std::out_of_range("time step " + std::to_string(t) + " is not materialized");
  }
  return table.values[static_cast<std::size_t>(idx)];
}

namespace {

AgmKind kind_of(stl::Op op) {
  return (op == stl::Op::And || op == stl::Op::Always) ? AgmKind::And : AgmKind::Or;
}

Interval value_of(const MonitorState::Table* table, int t) {
  return table->values[static_cast<std::size_t>(t - table->lo)];
}

}  // namespace

IntervalMonitor::IntervalMonitor(stl::FormulaPtr phi, const PredicateTable& preds,
                                 MonitorMode mode)
    : phi_(std::move(phi)), mode_(mode) {
  if (!phi_) throw std::invalid_argument("monitor needs a formula");
  horizon_ = stl::horizon(*phi_);
  compile(*phi_, preds, 0, 0);

  // Blank tables: nothing observed, every predicate unknown.
  std::vector<const MonitorState::Table*> view(nodes_.size(), nullptr);
  blank_.tables_.resize(nodes_.size());
  blank_.root_ = root_index();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    auto table = std::make_shared<MonitorState::Table>();
    table->lo = n.lo;
    table->values.resize(static_cast<std::size_t>(n.hi - n.lo + 1));
    if (n.keeps_raw) {
      table->raw.assign(table->values.size(), RawAggregate{AgmAccumulator(kind_of(n.op)),
                                                           AgmAccumulator(kind_of(n.op))});
    }
    for (int t = n.lo; t <= n.hi; ++t) {
      bool unused = false;
      table->values[static_cast<std::size_t>(t - n.lo)] =
          n.keeps_raw ? from_raw(n, table->raw[static_cast<std::size_t>(t - n.lo)])
                      : compute_entry(n, t, -1, view, unused);
    }
    view[i] = table.get();
    blank_.tables_[i] = std::move(table);
  }
}

std::size_t IntervalMonitor::compile(const stl::Formula& f, const PredicateTable& preds, int lo,
                                     int hi) {
  Node n;
  n.formula = &f;
  n.op = f.op;
  n.a = f.a;
  n.b = f.b;
  n.lo = lo;
  n.hi = hi;
  n.immutable = stl::is_immutable(f);
  if (f.is_temporal()) {
    const int child_lo = mode_ == MonitorMode::Heuristic ? lo : lo + f.a;
    n.children.push_back(compile(f.child(), preds, child_lo, hi + f.b));
    n.keeps_raw = nodes_[n.children.front()].immutable;
  } else {
    for (const auto& c : f.children) n.children.push_back(compile(*c, preds, lo, hi));
  }
  if (f.op == stl::Op::Predicate) n.predicate = preds.at(f.predicate);
  if (n.keeps_raw) n.fill = unknown_interval(n.children.front());
  nodes_.push_back(std::move(n));
  const std::size_t idx = nodes_.size() - 1;
  return idx;
}

Interval IntervalMonitor::unknown_interval(std::size_t node) const {
  const Node& n = nodes_[node];
  switch (n.op) {
    case stl::Op::True: return Interval::point(1.0);
    case stl::Op::Predicate: return Interval::unknown();
    case stl::Op::Not: {
      const Interval v = unknown_interval(n.children.front());
      return {-v.upper, -v.lower};
    }
    case stl::Op::And:
    case stl::Op::Or: {
      AgmAccumulator lower(kind_of(n.op));
      AgmAccumulator upper(kind_of(n.op));
      for (std::size_t c : n.children) {
        const Interval v = unknown_interval(c);
        lower.add(v.lower);
        upper.add(v.upper);
      }
      return {lower.value(), upper.value()};
    }
    default: throw std::logic_error("unknown_interval expects an immutable subformula");
  }
}

double IntervalMonitor::predicate_value(const Node& n, Vec2 pos) const {
  return mode_ == MonitorMode::Sound ? eval_predicate_normalized(n.predicate, pos)
                                     : eval_predicate_raw(n.predicate, pos);
}

Interval IntervalMonitor::from_raw(const Node& n, const RawAggregate& raw) {
  const int missing = (n.b - n.a + 1) - raw.lower.count();
  return {raw.lower.value_with_fill(n.fill.lower, missing),
          raw.upper.value_with_fill(n.fill.upper, missing)};
}

Interval IntervalMonitor::lookahead(const Node& n, int t, int last_observed,
                                    Interval child_now) const {
  // Discount the child's current value by how far away the window still is,
  // then treat the rest of the window as unknown.
  const double gamma = 1.0 / static_cast<double>(t + n.a - last_observed + 1);
  const double lower = gamma * child_now.lower + (1.0 - gamma) * -1.0;
  const double upper = gamma * child_now.upper + (1.0 - gamma) * 1.0;
  const int rest = n.b - n.a;
  AgmAccumulator lo_acc(kind_of(n.op));
  AgmAccumulator hi_acc(kind_of(n.op));
  lo_acc.add(lower);
  hi_acc.add(upper);
  return {lo_acc.value_with_fill(-1.0, rest), hi_acc.value_with_fill(1.0, rest)};
}

Interval IntervalMonitor::compute_entry(const Node& n, int t, int last_observed,
                                        const std::vector<const MonitorState::Table*>& tables,
                                        bool& reaggregated) const {
  reaggregated = false;
  switch (n.op) {
    case stl::Op::True: return Interval::point(1.0);
    case stl::Op::Predicate: return Interval::unknown();  // only reached while unobserved
    case stl::Op::Not: {
      const Interval v = value_of(tables[n.children.front()], t);
      return {-v.upper, -v.lower};
    }
    case stl::Op::And:
    case stl::Op::Or: {
      AgmAccumulator lower(kind_of(n.op));
      AgmAccumulator upper(kind_of(n.op));
      for (std::size_t c : n.children) {
        const Interval v = value_of(tables[c], t);
        lower.add(v.lower);
        upper.add(v.upper);
      }
      return {lower.value(), upper.value()};
    }
    case stl::Op::Always:
    case stl::Op::Eventually: {
      const auto* child = tables[n.children.front()];
      if (mode_ == MonitorMode::Heuristic && t <= last_observed && last_observed < t + n.a) {
        return lookahead(n, t, last_observed, value_of(child, last_observed));
      }
      AgmAccumulator lower(kind_of(n.op));
      AgmAccumulator upper(kind_of(n.op));
      for (int tau = t + n.a; tau <= t + n.b; ++tau) {
        const Interval v = value_of(child, tau);
        lower.add(v.lower);
        upper.add(v.upper);
      }
      reaggregated = true;
      return {lower.value(), upper.value()};
    }
  }
  return Interval::unknown();
}

MonitorState IntervalMonitor::init(Vec2 x0) const { return append(blank_, x0); }

MonitorState IntervalMonitor::append(const MonitorState& state, Vec2 sample) const {
  if (state.tables_.size() != nodes_.size()) {
    throw std::invalid_argument("monitor state does not belong to this monitor");
  }
  const int now = state.prefix_len_;
  MonitorState next = state;
  next.prefix_len_ = now + 1;

  std::vector<const MonitorState::Table*> view(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) view[i] = state.tables_[i].get();
  std::vector<Range> dirty(nodes_.size());

  auto clip = [](Range r, const Node& n) {
    return Range{std::max(r.lo, n.lo), std::min(r.hi, n.hi)};
  };
  auto hull = [](Range x, Range y) {
    if (x.empty()) return y;
    if (y.empty()) return x;
    return Range{std::min(x.lo, y.lo), std::max(x.hi, y.hi)};
  };

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    Range touched;
    switch (n.op) {
      case stl::Op::True: break;
      case stl::Op::Predicate: touched = clip({now, now}, n); break;
      case stl::Op::Not:
      case stl::Op::And:
      case stl::Op::Or:
        for (std::size_t c : n.children) touched = hull(touched, dirty[c]);
        touched = clip(touched, n);
        break;
      case stl::Op::Always:
      case stl::Op::Eventually:
        if (n.keeps_raw) {
          touched = clip({now - n.b, now - n.a}, n);
        } else {
          const Range d = dirty[n.children.front()];
          if (!d.empty()) touched = clip({d.lo - n.b, d.hi - n.a}, n);
        }
        if (mode_ == MonitorMode::Heuristic && n.a > 0) {
          // Look-ahead entries move with the clock, and the entry whose
          // window opens now switches back to ordinary aggregation.
          touched = hull(touched, clip({now - n.a, now}, n));
        }
        break;
    }
    if (touched.empty()) continue;

    auto table = std::make_shared<MonitorState::Table>(*view[i]);
    for (int t = touched.lo; t <= touched.hi; ++t) {
      const auto idx = static_cast<std::size_t>(t - n.lo);
      if (n.op == stl::Op::Predicate) {
        table->values[idx] = Interval::point(predicate_value(n, sample));
        continue;
      }
      const bool in_window = t + n.a <= now && now <= t + n.b;
      if (n.keeps_raw && in_window) {
        const Interval child = value_of(view[n.children.front()], now);
        table->raw[idx].lower.add(child.lower);
        table->raw[idx].upper.add(child.upper);
        table->values[idx] = from_raw(n, table->raw[idx]);
      } else if (n.keeps_raw && now < t + n.a && mode_ == MonitorMode::Heuristic) {
        table->values[idx] = lookahead(n, t, now, value_of(view[n.children.front()], now));
      } else if (!n.keeps_raw || mode_ == MonitorMode::Heuristic) {
        bool reaggregated = false;
        table->values[idx] = compute_entry(n, t, now, view, reaggregated);
        if (reaggregated) ++next.reaggregations_;
      }
    }
    dirty[i] = touched;
    view[i] = table.get();
    next.tables_[i] = std::move(table);
  }
  return next;
}

}  // namespace grasp
