#include "l2map/policies.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <limits>

namespace l2map {

Action random_policy(const PolicyContext& ctx) {
  return kActions[uniform_index(ctx.rng, kActionCount)];
}

double expected_gain(const BeliefGrid& belief, Pose pose, double accuracy, Neighborhood hood) {
  const double a = effective_accuracy(accuracy);
  double gain = 0.0;
  for (Cell c : sensed_cells(belief.side(), pose, hood)) {
    const double p = belief.prob(c);
    gain += cell_entropy(p) - expected_posterior_entropy(p, a);
  }
  return gain;
}

std::array<double, kActionCount> myopic_scores(const BeliefGrid& belief, Pose pose, double accuracy,
                                               MyopicMotion motion, Neighborhood hood) {
  std::array<double, kActionCount> scores{};
  const double stay_gain = expected_gain(belief, pose, accuracy, hood);
  for (int i = 0; i < kActionCount; ++i) {
    const Cell target = shifted(pose, kActions[i]);
    if (!belief.contains(target)) {
      scores[i] = stay_gain;
      continue;
    }
    const double move_gain = expected_gain(belief, target, accuracy, hood);
    if (motion == MyopicMotion::Optimistic) {
      scores[i] = move_gain;
    } else {
      const double q = belief.prob(target);
      scores[i] = (1.0 - q) * move_gain + q * stay_gain;
    }
  }
  return scores;
}

Action myopic_policy(const PolicyContext& ctx, double accuracy, MyopicMotion motion, Neighborhood hood) {
  const auto scores = myopic_scores(ctx.belief, ctx.pose, accuracy, motion, hood);
  double best = -std::numeric_limits<double>::infinity();
  std::array<int, kActionCount> ties{};
  int n_ties = 0;
  for (int i = 0; i < kActionCount; ++i) {
    if (scores[i] > best) {
      best = scores[i];
      n_ties = 0;
    }
    if (scores[i] == best) ties[n_ties++] = i;
  }
  return kActions[ties[uniform_index(ctx.rng, n_ties)]];
}

std::vector<CellClass> classify_cells(const BeliefGrid& belief, const FrontierParams& params,
                                      const std::vector<std::uint8_t>& visited) {
  std::vector<CellClass> out(belief.cell_count());
  const int n = belief.side();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * n + c;
      const double p = belief.prob({r, c});
      if (!visited.empty() && visited[i]) {
        out[i] = CellClass::Free;
      } else if (cell_entropy(p) > params.unknown_entropy) {
        out[i] = CellClass::Unknown;
      } else {
        out[i] = p > 0.5 ? CellClass::Occupied : CellClass::Free;
      }
    }
  }
  return out;
}

void FrontierPolicy::reset() {
  plan_.clear();
  visited_.clear();
  last_pose_.reset();
  last_target_.reset();
  steps_since_plan_ = 0;
  fallback_ = false;
}

bool FrontierPolicy::replan(const PolicyContext& ctx) {
  plan_.clear();
  steps_since_plan_ = 0;
  const int n = ctx.belief.side();
  const auto cls = classify_cells(ctx.belief, params_, visited_);
  const auto at = [&](Cell c) { return cls[static_cast<std::size_t>(c.row) * n + c.col]; };
  const auto is_frontier = [&](Cell c) {
    if (at(c) != CellClass::Free) return false;
    for (Action a : kActions) {
      const Cell nb = shifted(c, a);
      if (ctx.belief.contains(nb) && at(nb) == CellClass::Unknown) return true;
    }
    return false;
  };

  // Breadth-first search over free cells; the first frontier popped is the
  // nearest one.
  std::vector<int> parent(static_cast<std::size_t>(n) * n, -1);
  const auto id = [n](Cell c) { return c.row * n + c.col; };
  std::deque<Cell> queue{ctx.pose};
  parent[id(ctx.pose)] = id(ctx.pose);
  while (!queue.empty()) {
    const Cell cur = queue.front();
    queue.pop_front();
    if (!(cur == ctx.pose) && is_frontier(cur)) {
      for (Cell c = cur; !(c == ctx.pose); c = {parent[id(c)] / n, parent[id(c)] % n}) plan_.push_back(c);
      std::reverse(plan_.begin(), plan_.end());
      return true;
    }
    for (Action a : kActions) {
      const Cell nb = shifted(cur, a);
      if (!ctx.belief.contains(nb) || parent[id(nb)] != -1 || at(nb) != CellClass::Free) continue;
      parent[id(nb)] = id(cur);
      queue.push_back(nb);
    }
  }
  return false;
}

Action FrontierPolicy::act(const PolicyContext& ctx) {
  const int n = ctx.belief.side();
  if (visited_.size() != static_cast<std::size_t>(n) * n) {
    reset();
    visited_.assign(static_cast<std::size_t>(n) * n, 0);
  }
  // The robot only ever stands on free cells.
  visited_[static_cast<std::size_t>(ctx.pose.row) * n + ctx.pose.col] = 1;

  const bool blocked = last_target_ && last_pose_ && *last_pose_ == ctx.pose;
  bool need_plan = plan_.empty() || blocked || steps_since_plan_ >= params_.replan_interval;
  if (!need_plan) {
    const Cell next = plan_.front();
    const bool adjacent = std::abs(next.row - ctx.pose.row) + std::abs(next.col - ctx.pose.col) == 1;
    const auto cls = classify_cells(ctx.belief, params_, visited_);
    need_plan = !adjacent || cls[static_cast<std::size_t>(next.row) * n + next.col] == CellClass::Occupied;
  }
  if (need_plan && !replan(ctx)) {
    fallback_ = true;
    last_target_.reset();
    last_pose_ = ctx.pose;
    return random_policy(ctx);
  }
  fallback_ = false;

  const Cell next = plan_.front();
  plan_.erase(plan_.begin());
  ++steps_since_plan_;
  last_pose_ = ctx.pose;
  last_target_ = next;
  for (Action a : kActions) {
    if (shifted(ctx.pose, a) == next) return a;
  }
  return random_policy(ctx);  // unreachable: plans are 4-connected
}

}  // namespace l2map
