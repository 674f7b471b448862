#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l2map/belief.hpp"
#include "l2map/rng.hpp"
#include "l2map/types.hpp"

namespace l2map {

/// Fully connected layer, weight row-major [out x in].
struct Dense {
  int in = 0;
  int out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  Dense() = default;
  Dense(int in_dim, int out_dim)
      : in(in_dim), out(out_dim), weight(static_cast<std::size_t>(in_dim) * out_dim, 0.0), bias(out_dim, 0.0) {}

  bool operator==(const Dense&) const = default;
};

struct NetSizes {
  int input = 0;
  int hidden = 256;
  int actions = kActionCount;

  /// Input width for a side x side grid: two channels of (2N-1)^2.
  static NetSizes for_grid(int side, int hidden = 256);

  bool operator==(const NetSizes&) const = default;
};

/// Shared-trunk MLP: input -> dense -> ReLU -> {policy logits, value}.
/// The same container holds gradients and Adam moments.
struct ActorCriticParams {
  Dense trunk;
  Dense policy_head;
  Dense value_head;
  /// Grid side the network was built for (0 when not tied to a grid).
  int grid_side = 0;
  /// Bumped by every optimizer step; traces remember the version that
  /// produced them.
  std::uint64_t version = 0;

  ActorCriticParams() = default;
  explicit ActorCriticParams(NetSizes sizes, int grid_side = 0);

  NetSizes sizes() const { return {trunk.in, trunk.out, policy_head.out}; }
  std::size_t parameter_count() const;

  /// Named views over the six tensors in a fixed order.
  std::vector<std::pair<std::string, std::span<double>>> tensors();
  std::vector<std::pair<std::string, std::span<const double>>> tensors() const;

  /// Zeroed container of the same shape.
  ActorCriticParams zeros_like() const;

  /// Tensor values and shapes only.
  bool same_values(const ActorCriticParams& other) const;
};

/// Uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
ActorCriticParams init_params(Rng& rng, NetSizes sizes, int grid_side = 0);

struct ForwardTrace {
  std::vector<double> input;
  std::vector<double> hidden_pre;
  std::vector<double> hidden;
  std::array<double, kActionCount> logits{};
  std::array<double, kActionCount> probs{};
  double value = 0.0;
  std::uint64_t version = 0;
};

ForwardTrace forward(const ActorCriticParams& params, std::span<const double> input);
ForwardTrace forward(const ActorCriticParams& params, const FeatureTensor& features);

double policy_entropy(const std::array<double, kActionCount>& probs);

/// Draws an action index from the trace's action distribution.
Action sample_action(const ForwardTrace& trace, Rng& rng);
Action greedy_action(const ForwardTrace& trace);

struct A2CSample {
  const ForwardTrace* trace = nullptr;
  Action action = Action::Up;
  double ret = 0.0;  // n-step bootstrapped return
};

struct A2CLoss {
  double policy = 0.0;   // sum of -log pi(a) * advantage
  double entropy = 0.0;  // sum of policy entropies
  double value = 0.0;    // sum of squared errors
  double total = 0.0;
};

struct A2CGradients {
  ActorCriticParams grads;
  A2CLoss loss;
};

/// Exact gradient of
///   sum_t [ -log pi(a_t) (R_t - V_t)_const - entropy_coef H(pi_t) + value_coef (R_t - V_t)^2 ].
/// Throws std::logic_error when a trace was produced by a different
/// parameter version.
A2CGradients a2c_grads(const ActorCriticParams& params, std::span<const A2CSample> batch, double entropy_coef,
                       double value_coef);

/// Same loss evaluated by a fresh forward pass, with advantages taken from
/// `fixed_advantages`. Test support for finite differences.
double a2c_loss_value(const ActorCriticParams& params, std::span<const std::vector<double>> inputs,
                      std::span<const Action> actions, std::span<const double> returns,
                      std::span<const double> fixed_advantages, double entropy_coef, double value_coef);

double global_norm(const ActorCriticParams& grads);

/// Rescales so the global L2 norm is at most max_norm. Returns the norm
/// before clipping.
double clip_global_norm(ActorCriticParams& grads, double max_norm);

struct OptimizerState {
  ActorCriticParams m;
  ActorCriticParams v;
  std::uint64_t step = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerState for_params(const ActorCriticParams& params, double lr);
};

void adam_step(OptimizerState& opt, ActorCriticParams& params, const ActorCriticParams& grads);

/// Binary weight file; layout documented in docs/weights-format.md.
void save_params(const ActorCriticParams& params, const std::filesystem::path& path);

/// Throws std::runtime_error on malformed or truncated files, and when
/// `expected_grid_side` is given and differs from the stored one.
ActorCriticParams load_params(const std::filesystem::path& path, std::optional<int> expected_grid_side = {});

}  // namespace l2map
