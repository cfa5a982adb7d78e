#pragma once

// Independent reference implementations used only by the tests. Nothing
// here calls into the library's evaluation code paths.

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "grasp/geometry.hpp"
#include "grasp/robustness.hpp"
#include "grasp/stl.hpp"

namespace oracle {

using grasp::Interval;
using grasp::PredicateTable;
using grasp::Vec2;
using grasp::stl::Formula;
using grasp::stl::FormulaPtr;
using grasp::stl::Op;

inline double direct_and(const std::vector<double>& v) {
  bool all_positive = true;
  for (double x : v) all_positive = all_positive && x > 0.0;
  if (all_positive) {
    double prod = 1.0;
    for (double x : v) prod *= 1.0 + x;
    return std::pow(prod, 1.0 / static_cast<double>(v.size())) - 1.0;
  }
  double sum = 0.0;
  for (double x : v) sum += std::min(x, 0.0);
  return sum / static_cast<double>(v.size());
}

inline double direct_or(const std::vector<double>& v) {
  bool all_negative = true;
  for (double x : v) all_negative = all_negative && x < 0.0;
  if (all_negative) {
    double prod = 1.0;
    for (double x : v) prod *= 1.0 - x;
    return 1.0 - std::pow(prod, 1.0 / static_cast<double>(v.size()));
  }
  double sum = 0.0;
  for (double x : v) sum += std::max(x, 0.0);
  return sum / static_cast<double>(v.size());
}

inline double direct_predicate(const grasp::PredicateDef& p, Vec2 s, bool normalized) {
  const double dx = s.x - p.center.x;
  const double dy = s.y - p.center.y;
  const double d2 = dx * dx + dy * dy;
  const double r2 = p.radius * p.radius;
  return normalized ? (r2 - d2) / (r2 + d2) : r2 - d2;
}

/// Recursive AGM robustness on a complete signal, straight from the closed forms.
inline double brute_force_agm(const Formula& f, const PredicateTable& preds,
                              const std::vector<Vec2>& signal, int t) {
  switch (f.op) {
    case Op::True: return 1.0;
    case Op::Predicate: return direct_predicate(preds.at(f.predicate), signal.at(t), true);
    case Op::Not: return -brute_force_agm(*f.children[0], preds, signal, t);
    case Op::And:
    case Op::Or: {
      std::vector<double> v;
      for (const auto& c : f.children) v.push_back(brute_force_agm(*c, preds, signal, t));
      return f.op == Op::And ? direct_and(v) : direct_or(v);
    }
    case Op::Always:
    case Op::Eventually: {
      std::vector<double> v;
      for (int tau = t + f.a; tau <= t + f.b; ++tau) {
        v.push_back(brute_force_agm(*f.children[0], preds, signal, tau));
      }
      return f.op == Op::Always ? direct_and(v) : direct_or(v);
    }
  }
  return 0.0;
}

/// Interval of f at t given only prefix[0..n), recomputed from nothing.
/// Unobserved predicate samples are [-1, 1]. With `heuristic`, predicates are
/// raw and a temporal window that has not opened yet is estimated from the
/// child's current value discounted by 1 / (t + a - now + 1).
inline Interval scratch_interval(const Formula& f, const PredicateTable& preds,
                                 const std::vector<Vec2>& prefix, int t, bool heuristic = false) {
  const int now = static_cast<int>(prefix.size()) - 1;
  auto pairwise = [&](const std::vector<Interval>& xs, Op op) {
    std::vector<double> lo, hi;
    for (auto x : xs) {
      lo.push_back(x.lower);
      hi.push_back(x.upper);
    }
    const bool conj = op == Op::And || op == Op::Always;
    return conj ? Interval{direct_and(lo), direct_and(hi)} : Interval{direct_or(lo), direct_or(hi)};
  };
  switch (f.op) {
    case Op::True: return {1.0, 1.0};
    case Op::Predicate:
      if (t <= now) {
        const double v = direct_predicate(preds.at(f.predicate), prefix[t], !heuristic);
        return {v, v};
      }
      return {-1.0, 1.0};
    case Op::Not: {
      auto c = scratch_interval(*f.children[0], preds, prefix, t, heuristic);
      return {-c.upper, -c.lower};
    }
    case Op::And:
    case Op::Or: {
      std::vector<Interval> xs;
      for (const auto& c : f.children) xs.push_back(scratch_interval(*c, preds, prefix, t, heuristic));
      return pairwise(xs, f.op);
    }
    case Op::Always:
    case Op::Eventually: {
      if (heuristic && t <= now && now < t + f.a) {
        const auto c = scratch_interval(*f.children[0], preds, prefix, now, heuristic);
        const double g = 1.0 / (t + f.a - now + 1);
        std::vector<Interval> xs{{g * c.lower - (1 - g), g * c.upper + (1 - g)}};
        for (int i = 0; i < f.b - f.a; ++i) xs.push_back({-1.0, 1.0});
        return pairwise(xs, f.op);
      }
      std::vector<Interval> xs;
      for (int tau = t + f.a; tau <= t + f.b; ++tau) {
        xs.push_back(scratch_interval(*f.children[0], preds, prefix, tau, heuristic));
      }
      return pairwise(xs, f.op);
    }
  }
  return {-1.0, 1.0};
}

/// Random formula over the given predicate ids.
class FormulaGen {
 public:
  FormulaGen(std::uint64_t seed, std::vector<std::string> ids, int max_bound = 4)
      : rng_(seed), ids_(std::move(ids)), max_bound_(max_bound) {}

  FormulaPtr operator()(int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 1 ? 1 : 7);
    const int kind = pick(rng_);
    if (kind == 0 || depth <= 1) {
      if (std::uniform_int_distribution<int>(0, 11)(rng_) == 0) return grasp::stl::make_true();
      return grasp::stl::make_predicate(ids_[index(ids_.size())]);
    }
    switch (kind) {
      case 1: return grasp::stl::make_predicate(ids_[index(ids_.size())]);
      case 2: return grasp::stl::make_not((*this)(depth - 1));
      case 3:
      case 4: {
        std::vector<FormulaPtr> kids;
        const int n = 2 + static_cast<int>(index(2));
        for (int i = 0; i < n; ++i) kids.push_back((*this)(depth - 1));
        return kind == 3 ? grasp::stl::make_and(std::move(kids))
                         : grasp::stl::make_or(std::move(kids));
      }
      default: {
        const int a = static_cast<int>(index(static_cast<std::size_t>(max_bound_) + 1));
        const int b = a + static_cast<int>(index(static_cast<std::size_t>(max_bound_) + 1));
        auto child = (*this)(depth - 1);
        return kind % 2 == 0 ? grasp::stl::make_always(a, b, std::move(child))
                             : grasp::stl::make_eventually(a, b, std::move(child));
      }
    }
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  std::mt19937_64 rng_;
  std::vector<std::string> ids_;
  int max_bound_;
};

inline PredicateTable random_predicates(std::mt19937_64& rng, int count, double extent = 10.0) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> rad(0.5, 3.0);
  PredicateTable table;
  for (int i = 0; i < count; ++i) {
    table.add({"p" + std::to_string(i + 1), {pos(rng), pos(rng)}, rad(rng)});
  }
  return table;
}

inline std::vector<Vec2> random_signal(std::mt19937_64& rng, std::size_t len, double extent = 10.0) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::vector<Vec2> s(len);
  for (auto& p : s) p = {pos(rng), pos(rng)};
  return s;
}

/// Position at which a unit-radius predicate centred at the origin has
/// normalized value v, for v in (-1, 1].
inline Vec2 point_with_value(double v) {
  return {std::sqrt((1.0 - v) / (1.0 + v)), 0.0};
}

}  // namespace oracle
