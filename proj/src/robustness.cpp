#include "grasp/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grasp {

PredicateTable::PredicateTable(std::vector<PredicateDef> defs) {
  for (auto& d : defs) add(std::move(d));
}

void PredicateTable::add(PredicateDef def) {
  if (!(def.radius > 0.0)) {
    throw std::invalid_argument("predicate '" + def.id + "' must have a positive radius");
  }
  if (find(def.id) != nullptr) {
    throw std::invalid_argument("duplicate predicate id '" + def.id + "'");
  }
  defs_.push_back(std::move(def));
}

const PredicateDef* PredicateTable::find(const std::string& id) const {
  for (const auto& d : defs_) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

const PredicateDef& PredicateTable::at(const std::string& id) const {
  if (const auto* d = find(id)) return *d;
  throw std::out_of_range("unknown predicate '" + id + "'");
}

double eval_predicate_raw(const PredicateDef& pred, Vec2 pos) {
  return pred.radius * pred.radius - squared_norm(pos - pred.center);
}

double eval_predicate_normalized(const PredicateDef& pred, Vec2 pos) {
  const double r2 = pred.radius * pred.radius;
  const double d2 = squared_norm(pos - pred.center);
  return (r2 - d2) / (r2 + d2);
}

void AgmAccumulator::add_repeated(double v, int count) {
  if (count <= 0) return;
  count_ += count;
  if (kind_ == AgmKind::And) {
    if (v > 0.0) {
      log_sum_ += count * std::log1p(v);
    } else {
      breaking_ += count;
      clipped_sum_ += count * v;
    }
  } else {
    if (v < 0.0) {
      log_sum_ += count * std::log1p(-v);
    } else {
      breaking_ += count;
      clipped_sum_ += count * v;
    }
  }
}

double AgmAccumulator::value_with_fill(double fill, int fill_count) const {
  const int n = count_ + std::max(fill_count, 0);
  if (n == 0) throw std::invalid_argument("AGM aggregation over an empty set");
  AgmAccumulator all = *this;
  all.add_repeated(fill, fill_count);
  if (all.breaking_ == 0) {
    const double g = std::expm1(all.log_sum_ / n);
    return kind_ == AgmKind::And ? g : -g;
  }
  return all.clipped_sum_ / n;
}

namespace {

double aggregate(AgmKind kind, std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("AGM aggregation over an empty set");
  AgmAccumulator acc(kind);
  for (double v : values) acc.add(v);
  return acc.value();
}

double robustness_at(const stl::Formula& f, const PredicateTable& preds,
                     std::span<const Vec2> signal, int t) {
  using stl::Op;
  switch (f.op) {
    case Op::True: return 1.0;
    case Op::Predicate: return eval_predicate_normalized(preds.at(f.predicate), signal[t]);
    case Op::Not: return -robustness_at(f.child(), preds, signal, t);
    case Op::And:
    case Op::Or: {
      AgmAccumulator acc(f.op == Op::And ? AgmKind::And : AgmKind::Or);
      for (const auto& c : f.children) acc.add(robustness_at(*c, preds, signal, t));
      return acc.value();
    }
    case Op::Always:
    case Op::Eventually: {
      AgmAccumulator acc(f.op == Op::Always ? AgmKind::And : AgmKind::Or);
      for (int tau = t + f.a; tau <= t + f.b; ++tau) {
        acc.add(robustness_at(f.child(), preds, signal, tau));
      }
      return acc.value();
    }
  }
  return 0.0;
}

}  // namespace

double agm_and(std::span<const double> values) { return aggregate(AgmKind::And, values); }
double agm_or(std::span<const double> values) { return aggregate(AgmKind::Or, values); }

double agm_robustness(const stl::Formula& phi, const PredicateTable& preds,
                      std::span<const Vec2> signal, int t) {
  if (t < 0) throw std::invalid_argument("evaluation time must be non-negative");
  const auto needed = static_cast<std::size_t>(t) + stl::horizon(phi) + 1;
  if (signal.size() < needed) {
    throw std::invalid_argument("signal of length " + std::to_string(signal.size()) +
                                " is shorter than the " + std::to_string(needed) +
                                " samples the formula needs");
  }
  return robustness_at(phi, preds, signal, t);
}

}  // namespace grasp
