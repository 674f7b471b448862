#include "l2map/a2c.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace l2map {

namespace {

constexpr std::uint32_t kActionStream = 2;
constexpr std::uint32_t kInitStream = 3;

std::string dump_batch(std::span<const A2CSample> batch, const A2CLoss& loss) {
  std::ostringstream os;
  os << std::setprecision(17) << "non-finite A2C loss (policy=" << loss.policy << " entropy=" << loss.entropy
     << " value=" << loss.value << ")";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = *batch[i].trace;
    os << "\n  [" << i << "] action=" << action_name(batch[i].action) << " return=" << batch[i].ret
       << " value=" << t.value << " probs=(" << t.probs[0] << "," << t.probs[1] << "," << t.probs[2] << ","
       << t.probs[3] << ")";
  }
  return os.str();
}

}  // namespace

std::vector<double> compute_returns(std::span<const double> rewards, double bootstrap, bool terminal, double gamma) {
  std::vector<double> out(rewards.size());
  double running = terminal ? 0.0 : bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    running = rewards[i] + gamma * running;
    out[i] = running;
  }
  return out;
}

std::vector<double> compute_returns(const RolloutBuffer& buffer, double gamma) {
  std::vector<double> rewards;
  rewards.reserve(buffer.steps.size());
  for (const auto& s : buffer.steps) rewards.push_back(s.reward);
  return compute_returns(rewards, buffer.bootstrap_value, buffer.terminal, gamma);
}

void TrainConfig::validate() const {
  if (episodes <= 0) throw std::invalid_argument("train.episodes must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("train.gamma must lie in (0,1]");
  if (n_steps <= 0) throw std::invalid_argument("train.n_steps must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("train.lr must be positive");
  if (lr_halving_interval <= 0) throw std::invalid_argument("train.lr_halving_interval must be positive");
  if (entropy_coef < 0.0 || value_coef <= 0.0) throw std::invalid_argument("train loss coefficients out of range");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("train.max_grad_norm must be positive");
  if (hidden <= 0) throw std::invalid_argument("train.hidden must be positive");
  if (checkpoint_interval < 0) throw std::invalid_argument("train.checkpoint_interval must be >= 0");
}

double learning_rate_at(const TrainConfig& config, int episode) {
  return std::ldexp(config.lr, -(episode / config.lr_halving_interval));
}

std::vector<double> LearningCurve::rewards() const {
  std::vector<double> r;
  r.reserve(points.size());
  for (const auto& p : points) r.push_back(p.reward);
  return r;
}

ActorCriticParams initial_params(const TrainConfig& config, const EnvConfig& env_config) {
  Rng rng = derive_stream(config.seed, 0, kInitStream);
  return init_params(rng, NetSizes::for_grid(env_config.side, config.hidden), env_config.side);
}

TrainResult train(const TrainConfig& config, const EnvConfig& env_config, ActorCriticParams params,
                  const EpisodeCallback& on_episode) {
  config.validate();
  EnvConfig ec = env_config;
  ec.emit_features = true;
  if (params.grid_side != ec.side || params.sizes() != NetSizes::for_grid(ec.side, params.sizes().hidden)) {
    throw std::invalid_argument("train: network shape does not match the environment grid");
  }

  TrainResult result;
  OptimizerState opt = OptimizerState::for_params(params, config.lr);
  DisasterEnv env(ec);
  const auto start = std::chrono::steady_clock::now();

  for (int ep = 0; ep < config.episodes; ++ep) {
    opt.lr = learning_rate_at(config, ep);
    Rng action_rng = derive_stream(config.seed, static_cast<std::uint64_t>(ep), kActionStream);
    StepResult state = env.reset(derive_stream(config.seed, static_cast<std::uint64_t>(ep), kEnvStream));
    ForwardTrace trace = forward(params, state.features);
    RolloutBuffer buffer;
    double episode_reward = 0.0;
    const double h0 = env.belief().total_entropy();

    while (!env.done()) {
      const Action action = sample_action(trace, action_rng);
      StepResult next = env.step(action);
      episode_reward += next.reward;
      buffer.steps.push_back({std::move(trace), action, next.reward});

      const bool cut = next.done || static_cast<int>(buffer.steps.size()) >= config.n_steps;
      if (!cut) {
        trace = forward(params, next.features);
        continue;
      }
      buffer.terminal = next.done;
      buffer.bootstrap_value = next.done ? 0.0 : forward(params, next.features).value;
      const auto returns = compute_returns(buffer, config.gamma);
      std::vector<A2CSample> batch;
      batch.reserve(buffer.steps.size());
      for (std::size_t i = 0; i < buffer.steps.size(); ++i) {
        batch.push_back({&buffer.steps[i].trace, buffer.steps[i].action, returns[i]});
      }
      A2CGradients g = a2c_grads(params, batch, config.entropy_coef, config.value_coef);
      if (!std::isfinite(g.loss.total)) throw std::runtime_error(dump_batch(batch, g.loss));
      clip_global_norm(g.grads, config.max_grad_norm);
      adam_step(opt, params, g.grads);
      ++result.updates;
      buffer = RolloutBuffer{};
      if (!next.done) trace = forward(params, next.features);
    }

    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.curve.points.push_back({ep, episode_reward, elapsed});
    if (on_episode) on_episode({ep, episode_reward, opt.lr, result.updates, h0, env.belief().total_entropy()});
    if (config.checkpoint_interval > 0 && (ep + 1) % config.checkpoint_interval == 0 &&
        !config.checkpoint_path.empty()) {
      save_params(params, config.checkpoint_path);
    }
  }
  result.params = std::move(params);
  return result;
}

std::vector<double> smooth_curve(std::span<const double> series, double kernel_width) {
  if (!(kernel_width > 0.0)) throw std::invalid_argument("kernel width must be positive");
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * kernel_width));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double x = static_cast<double>(k) / kernel_width;
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * x * x);
  }
  std::vector<double> out(series.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    double norm = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      const std::ptrdiff_t j = i + k;
      if (j < 0 || j >= n) continue;
      const double w = kernel[static_cast<std::size_t>(k + radius)];
      acc += w * series[static_cast<std::size_t>(j)];
      norm += w;
    }
    out[static_cast<std::size_t>(i)] = acc / norm;
  }
  return out;
}

void write_curve(const LearningCurve& curve, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << "episode,reward\n" << std::setprecision(17);
  for (const auto& p : curve.points) os << p.episode << ',' << p.reward << '\n';
}

void write_series(std::span<const double> series, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << "episode,reward\n" << std::setprecision(17);
  for (std::size_t i = 0; i < series.size(); ++i) os << i << ',' << series[i] << '\n';
}

std::vector<std::pair<double, double>> read_curve(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open curve file " + path.string());
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("episode", 0) == 0) continue;
    std::istringstream ls(line);
    double x = 0.0;
    double y = 0.0;
    char sep = 0;
    if (!(ls >> x >> sep >> y) || sep != ',' || !std::isfinite(x) || !std::isfinite(y)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed curve row");
    }
    std::string rest;
    if (ls >> rest) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": trailing data");
    rows.emplace_back(x, y);
  }
  return rows;
}

}  // namespace l2map
