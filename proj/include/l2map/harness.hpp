#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "l2map/a2c.hpp"
#include "l2map/actor_critic.hpp"
#include "l2map/env.hpp"
#include "l2map/policies.hpp"

namespace l2map {

enum class PolicyKind { Random, Frontier, Myopic, Learned };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Random;
  std::filesystem::path weights;  // Learned only
  bool greedy = false;            // Learned only; default samples like training
  MyopicMotion myopic_motion = MyopicMotion::BeliefWeighted;
  FrontierParams frontier;

  /// "random", "frontier", "myopic" or "learned:<weights-path>".
  std::string label() const;
};

/// Parses the policy selector syntax accepted by --policy.
PolicySpec parse_policy(const std::string& text);

struct EvalConfig {
  int episodes = 1000;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct OutputConfig {
  std::filesystem::path report;
  std::filesystem::path curve;
  std::filesystem::path weights;
  std::filesystem::path trace;
  int trace_snapshot_stride = 50;
  double curve_smoothing = 20.0;
};

struct RunConfig {
  EnvConfig env;
  PolicySpec policy;
  EvalConfig eval;
  TrainConfig train;
  OutputConfig output;

  void validate() const;
};

/// Reads a JSON run configuration. Unknown keys are rejected.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

/// A trained network acting from pose-centered features.
class LearnedPolicy final : public Policy {
 public:
  LearnedPolicy(std::shared_ptr<const ActorCriticParams> params, bool greedy)
      : params_(std::move(params)), greedy_(greedy) {}
  Action act(const PolicyContext& ctx, const FeatureTensor& features) override;
  bool needs_features() const override { return true; }
  std::string name() const override { return "learned"; }

 private:
  std::shared_ptr<const ActorCriticParams> params_;
  bool greedy_;
};

/// Loads anything the policy needs up front (weights) so that mismatches
/// surface before any episode runs.
class PolicyFactory {
 public:
  PolicyFactory(const PolicySpec& spec, const EnvConfig& env);
  std::unique_ptr<Policy> make() const;
  const PolicySpec& spec() const { return spec_; }

 private:
  PolicySpec spec_;
  EnvConfig env_;
  std::shared_ptr<const ActorCriticParams> params_;
};

struct EpisodeOutcome {
  double reward = 0.0;
  std::uint64_t map_fingerprint = 0;
};

std::uint64_t fingerprint(const GridMap& map);

/// One evaluation episode on the streams keyed by (seed, index).
EpisodeOutcome run_episode(const EnvConfig& env, Policy& policy, std::uint64_t seed, std::uint64_t index);

struct EvalReport {
  std::string policy;
  std::vector<double> rewards;
  std::vector<std::uint64_t> map_fingerprints;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  int episodes = 0;
  nlohmann::json config;

  nlohmann::json to_json() const;
};

double mean_of(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);

/// Runs config.eval.episodes independent episodes on config.eval.workers
/// OpenMP threads. Results do not depend on the worker count.
EvalReport evaluate(const RunConfig& config);

struct PairedDifference {
  std::string first;
  std::string second;
  double mean_difference = 0.0;  // first - second
  double standard_error = 0.0;
};

struct CompareReport {
  std::vector<EvalReport> rows;
  std::vector<PairedDifference> differences;

  nlohmann::json to_json() const;
  std::string table() const;
};

/// Evaluates every policy on the same episode streams.
CompareReport compare(const RunConfig& base, const std::vector<PolicySpec>& policies);

/// Writes one JSON line per state (reset + every step): step index, pose,
/// action, readings, reward and cumulative reward. The reset record carries
/// the true map; belief snapshots appear every `snapshot_stride` steps.
/// Returns the episode reward.
double write_trace(const RunConfig& config, std::uint64_t episode_index, const std::filesystem::path& path);

/// Renders raw and smoothed learning curves as a standalone SVG. Throws
/// (without creating the file) on an empty or malformed curve.
void emit_curve_svg(const std::filesystem::path& curve_file, const std::filesystem::path& output,
                    double kernel_width = 20.0);

struct PlotFrame {
  double width = 800.0;
  double height = 480.0;
  double margin = 60.0;
};

/// SVG coordinates of a series inside the plot frame (y grows downward).
std::vector<std::pair<double, double>> plot_coordinates(const std::vector<std::pair<double, double>>& series,
                                                        double x_min, double x_max, double y_min, double y_max,
                                                        const PlotFrame& frame = {});

std::string render_curve_svg(const std::vector<std::pair<double, double>>& raw, const std::vector<double>& smoothed,
                             const PlotFrame& frame = {});

}  // namespace l2map
