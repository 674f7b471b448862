#include "l2map/env.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace l2map {

void EnvConfig::validate() const {
  if (side < 2) throw std::invalid_argument("env.side must be >= 2");
  if (!(density >= 0.0 && density < 1.0)) throw std::invalid_argument("env.density must lie in [0,1)");
  if (!(accuracy > 0.0 && accuracy <= 1.0)) throw std::invalid_argument("env.accuracy must lie in (0,1]");
  if (horizon <= 0) throw std::invalid_argument("env.horizon must be positive");
  if (move != Neighborhood::VonNeumann) {
    throw std::invalid_argument("env.move_neighborhood: only 4-connected motion is supported");
  }
}

int GridMap::occupied_count() const {
  return static_cast<int>(std::count(occupied_.begin(), occupied_.end(), std::uint8_t{1}));
}

GridMap sample_map(Rng& rng, int side, double density) {
  GridMap map(side);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) map.set({r, c}, bernoulli(rng, density));
  }
  return map;
}

Pose sample_pose(Rng& rng, const GridMap& map) {
  std::vector<Cell> free;
  for (int r = 0; r < map.side(); ++r) {
    for (int c = 0; c < map.side(); ++c) {
      if (!map.occupied({r, c})) free.push_back({r, c});
    }
  }
  if (free.empty()) throw std::invalid_argument("cannot place a robot on a fully occupied map");
  return free[uniform_index(rng, free.size())];
}

std::vector<Cell> sensed_cells(int side, Pose pose, Neighborhood hood) {
  std::vector<Cell> cells;
  cells.reserve(8);
  const auto add = [&](int dr, int dc) {
    const Cell c{pose.row + dr, pose.col + dc};
    if (c.row >= 0 && c.row < side && c.col >= 0 && c.col < side) cells.push_back(c);
  };
  if (hood == Neighborhood::Moore) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr != 0 || dc != 0) add(dr, dc);
      }
    }
  } else {
    add(-1, 0);
    add(0, -1);
    add(0, 1);
    add(1, 0);
  }
  return cells;
}

Observation sense(const GridMap& map, Pose pose, double accuracy, Rng& rng, Neighborhood hood) {
  Observation obs;
  for (Cell c : sensed_cells(map.side(), pose, hood)) {
    const bool flip = !bernoulli(rng, accuracy);
    obs.readings.push_back({c, map.occupied(c) != flip});
  }
  return obs;
}

DisasterEnv::DisasterEnv(EnvConfig config) : config_(config) { config_.validate(); }

StepResult DisasterEnv::reset(Rng rng) {
  GridMap map = sample_map(rng, config_.side, config_.density);
  Pose start;
  if (map.occupied_count() == map.side() * map.side()) {
    start = {static_cast<int>(uniform_index(rng, map.side())), static_cast<int>(uniform_index(rng, map.side()))};
    map.set(start, false);
  } else {
    start = sample_pose(rng, map);
  }
  return reset(std::move(map), start, std::move(rng));
}

StepResult DisasterEnv::reset(GridMap map, Pose start, Rng rng) {
  if (map.side() != config_.side) throw std::invalid_argument("map side does not match env.side");
  if (!map.passable(start)) throw std::invalid_argument("start pose must be a free in-bounds cell");
  map_ = std::move(map);
  pose_ = start;
  rng_ = std::move(rng);
  belief_ = BeliefGrid(config_.side, 0.0);
  step_count_ = 0;
  started_ = true;
  StepResult first = observe(false, belief_.total_entropy());
  first.reward = 0.0;
  return first;
}

StepResult DisasterEnv::step(Action action) {
  if (!started_) throw std::logic_error("step() before reset()");
  if (done()) throw std::logic_error("step() on a finished episode");
  const double before = belief_.total_entropy();
  const Cell target = shifted(pose_, action);
  const bool moved = map_.passable(target);
  if (moved) pose_ = target;
  ++step_count_;
  return observe(moved, before);
}

StepResult DisasterEnv::observe(bool moved, double entropy_before) {
  StepResult out;
  out.info.pose = pose_;
  out.info.moved = moved;
  out.info.observation = sense(map_, pose_, config_.accuracy, rng_, config_.sense);
  belief_.apply(out.info.observation, effective_accuracy(config_.accuracy));
  out.reward = entropy_before - belief_.total_entropy();
  out.done = done();
  if (config_.emit_features) out.features = features();
  return out;
}

}  // namespace l2map
