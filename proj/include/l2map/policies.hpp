#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "l2map/belief.hpp"
#include "l2map/env.hpp"
#include "l2map/rng.hpp"

namespace l2map {

/// What a policy may look at. There is deliberately no handle to the true map.
struct PolicyContext {
  const BeliefGrid& belief;
  Pose pose;
  Rng& rng;
};

Action random_policy(const PolicyContext& ctx);

/// Expected entropy reduction from one sensing event at `pose`. The per-cell
/// factorization turns the 2^k joint-outcome sum into k independent terms.
double expected_gain(const BeliefGrid& belief, Pose pose, double accuracy,
                     Neighborhood hood = Neighborhood::Moore);

enum class MyopicMotion { BeliefWeighted, Optimistic };

/// Per-action one-step expected information gain. Belief-weighted motion
/// mixes the gain at the target and at the current pose by the target's
/// occupancy probability (out-of-bounds targets count as occupied).
std::array<double, kActionCount> myopic_scores(const BeliefGrid& belief, Pose pose, double accuracy,
                                               MyopicMotion motion = MyopicMotion::BeliefWeighted,
                                               Neighborhood hood = Neighborhood::Moore);

/// Argmax of myopic_scores with uniform random tie-breaking.
Action myopic_policy(const PolicyContext& ctx, double accuracy,
                     MyopicMotion motion = MyopicMotion::BeliefWeighted,
                     Neighborhood hood = Neighborhood::Moore);

struct FrontierParams {
  double unknown_entropy = 0.6;  // nats; cells above this are unknown
  int replan_interval = 20;
};

enum class CellClass { Unknown, Free, Occupied };

/// Classifies every cell of the belief. Cells in `visited` are known free.
std::vector<CellClass> classify_cells(const BeliefGrid& belief, const FrontierParams& params,
                                      const std::vector<std::uint8_t>& visited);

/// Nearest-frontier exploration. Keeps a cached plan, so one instance serves
/// exactly one episode at a time.
class FrontierPolicy {
 public:
  explicit FrontierPolicy(FrontierParams params = {}) : params_(params) {}

  Action act(const PolicyContext& ctx);
  void reset();

  /// Remaining planned cells (excluding the current pose), for inspection.
  const std::vector<Cell>& plan() const { return plan_; }
  bool used_fallback() const { return fallback_; }

 private:
  bool replan(const PolicyContext& ctx);

  FrontierParams params_;
  std::vector<Cell> plan_;
  std::vector<std::uint8_t> visited_;
  std::optional<Pose> last_pose_;
  std::optional<Cell> last_target_;
  int steps_since_plan_ = 0;
  bool fallback_ = false;
};

/// Uniform interface for the evaluation harness.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset() {}
  /// `features` is the pose-centered tensor of the current state; baseline
  /// policies ignore it.
  virtual Action act(const PolicyContext& ctx, const FeatureTensor& features) = 0;
  virtual bool needs_features() const { return false; }
  virtual std::string name() const = 0;
};

class RandomPolicy final : public Policy {
 public:
  Action act(const PolicyContext& ctx, const FeatureTensor&) override { return random_policy(ctx); }
  std::string name() const override { return "random"; }
};

class MyopicPolicy final : public Policy {
 public:
  MyopicPolicy(double accuracy, MyopicMotion motion, Neighborhood hood)
      : accuracy_(accuracy), motion_(motion), hood_(hood) {}
  Action act(const PolicyContext& ctx, const FeatureTensor&) override {
    return myopic_policy(ctx, accuracy_, motion_, hood_);
  }
  std::string name() const override { return "myopic"; }

 private:
  double accuracy_;
  MyopicMotion motion_;
  Neighborhood hood_;
};

class FrontierPolicyAdapter final : public Policy {
 public:
  explicit FrontierPolicyAdapter(FrontierParams params) : inner_(params) {}
  void reset() override { inner_.reset(); }
  Action act(const PolicyContext& ctx, const FeatureTensor&) override { return inner_.act(ctx); }
  std::string name() const override { return "frontier"; }

 private:
  FrontierPolicy inner_;
};

}  // namespace l2map
