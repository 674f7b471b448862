#pragma once

#include <cstdint>
#include <vector>

#include "l2map/belief.hpp"
#include "l2map/rng.hpp"
#include "l2map/types.hpp"

namespace l2map {

enum class Neighborhood : std::uint8_t { VonNeumann = 4, Moore = 8 };

struct EnvConfig {
  int side = 25;
  double density = 0.1;
  double accuracy = 0.8;
  int horizon = 300;
  Neighborhood sense = Neighborhood::Moore;
  Neighborhood move = Neighborhood::VonNeumann;
  /// When false, StepResult::features is left empty (baseline policies never
  /// read it).
  bool emit_features = true;

  void validate() const;
};

/// The true (hidden) occupancy map. `true` marks a building.
class GridMap {
 public:
  GridMap() = default;
  explicit GridMap(int side) : side_(side), occupied_(static_cast<std::size_t>(side) * side, 0) {}

  int side() const { return side_; }
  bool contains(Cell c) const { return c.row >= 0 && c.row < side_ && c.col >= 0 && c.col < side_; }
  bool occupied(Cell c) const { return occupied_[static_cast<std::size_t>(c.row) * side_ + c.col] != 0; }
  void set(Cell c, bool occ) { occupied_[static_cast<std::size_t>(c.row) * side_ + c.col] = occ ? 1 : 0; }
  /// In bounds and not a building.
  bool passable(Cell c) const { return contains(c) && !occupied(c); }
  int occupied_count() const;

  bool operator==(const GridMap&) const = default;

 private:
  int side_ = 0;
  std::vector<std::uint8_t> occupied_;
};

GridMap sample_map(Rng& rng, int side, double density);

/// Uniform over free cells. Throws std::invalid_argument on a fully occupied map.
Pose sample_pose(Rng& rng, const GridMap& map);

/// In-bounds neighbors of `pose` in a fixed order (row-major over the 3x3
/// window for Moore, up/left/right/down for von Neumann).
std::vector<Cell> sensed_cells(int side, Pose pose, Neighborhood hood);

/// Reads each sensed neighbor, flipping the true bit with probability
/// 1 - accuracy. Consumes exactly one uniform draw per sensed cell.
Observation sense(const GridMap& map, Pose pose, double accuracy, Rng& rng,
                  Neighborhood hood = Neighborhood::Moore);

struct StepInfo {
  Pose pose;
  bool moved = false;
  Observation observation;
};

struct StepResult {
  FeatureTensor features;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// The Disaster Mapping MDP. Owns the hidden map, the robot pose, the belief
/// and the episode's random stream.
class DisasterEnv {
 public:
  explicit DisasterEnv(EnvConfig config);

  /// Samples a map and pose, resets the belief to all 0.5, senses once at the
  /// start pose. Returns the initial state (reward 0, info = first reading).
  StepResult reset(Rng rng);

  /// Resets onto a given map and start pose. Used by tests and tracing.
  StepResult reset(GridMap map, Pose start, Rng rng);

  /// Moves if the target is in bounds and free, then senses at the
  /// (possibly unchanged) pose. Throws std::logic_error after the horizon.
  StepResult step(Action action);

  const EnvConfig& config() const { return config_; }
  const GridMap& map() const { return map_; }
  const BeliefGrid& belief() const { return belief_; }
  Pose pose() const { return pose_; }
  int step_count() const { return step_count_; }
  bool done() const { return step_count_ >= config_.horizon; }
  Rng& rng() { return rng_; }

  FeatureTensor features() const { return centered_features(belief_, pose_); }

 private:
  StepResult observe(bool moved, double entropy_before);

  EnvConfig config_;
  GridMap map_;
  Pose pose_;
  BeliefGrid belief_;
  int step_count_ = 0;
  bool started_ = false;
  Rng rng_;
};

}  // namespace l2map
