#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "l2map/actor_critic.hpp"
#include "l2map/env.hpp"

namespace l2map {

struct Transition {
  ForwardTrace trace;
  Action action = Action::Up;
  double reward = 0.0;
};

/// Up to n_steps consecutive transitions plus what to bootstrap from.
struct RolloutBuffer {
  std::vector<Transition> steps;
  bool terminal = false;
  double bootstrap_value = 0.0;  // ignored (treated as 0) when terminal
};

/// n-step bootstrapped returns by one backward sweep:
/// R_t = r_t + gamma R_{t+1}, seeded with the bootstrap value (0 if terminal).
std::vector<double> compute_returns(const RolloutBuffer& buffer, double gamma);
std::vector<double> compute_returns(std::span<const double> rewards, double bootstrap, bool terminal, double gamma);

struct TrainConfig {
  int episodes = 10000;
  double gamma = 0.99;
  int n_steps = 20;
  double lr = 1e-4;
  int lr_halving_interval = 5000;  // episodes
  double entropy_coef = 0.001;
  double value_coef = 0.5;
  double max_grad_norm = 50.0;
  int hidden = 256;
  std::uint64_t seed = 0;
  /// 0 disables checkpoints.
  int checkpoint_interval = 0;
  std::filesystem::path checkpoint_path;

  void validate() const;
};

/// Step schedule: lr * 0.5^floor(episode / lr_halving_interval).
double learning_rate_at(const TrainConfig& config, int episode);

struct CurvePoint {
  int episode = 0;
  double reward = 0.0;
  double wall_seconds = 0.0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;

  std::vector<double> rewards() const;
};

struct EpisodeStats {
  int episode = 0;
  double reward = 0.0;
  double lr = 0.0;
  std::uint64_t updates = 0;
  double initial_entropy = 0.0;  // belief entropy after reset
  double final_entropy = 0.0;
};

using EpisodeCallback = std::function<void(const EpisodeStats&)>;

struct TrainResult {
  ActorCriticParams params;
  LearningCurve curve;
  std::uint64_t updates = 0;
};

/// A2C over independently sampled episodes. Rollouts are cut every n_steps
/// and at the horizon (terminal, value 0); each cut performs one clipped Adam
/// update. Deterministic for a given seed. Throws std::runtime_error with a
/// dump of the offending batch if the loss becomes non-finite.
TrainResult train(const TrainConfig& config, const EnvConfig& env_config, ActorCriticParams params,
                  const EpisodeCallback& on_episode = {});

/// Fresh parameters for `env_config` initialised from the training seed.
ActorCriticParams initial_params(const TrainConfig& config, const EnvConfig& env_config);

/// Gaussian smoothing (sigma = kernel_width samples, truncated at 4 sigma),
/// renormalized at the edges. Preserves length.
std::vector<double> smooth_curve(std::span<const double> series, double kernel_width);

/// Two-column "episode,reward" text.
void write_curve(const LearningCurve& curve, const std::filesystem::path& path);
void write_series(std::span<const double> series, const std::filesystem::path& path);
/// Parses a file written by write_curve / write_series. Throws on malformed rows.
std::vector<std::pair<double, double>> read_curve(const std::filesystem::path& path);

}  // namespace l2map
