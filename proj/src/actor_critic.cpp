#include "l2map/actor_critic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "l2map/kernels.hpp"

namespace l2map {

namespace {

struct Softmax {
  std::array<double, kActionCount> probs{};
  std::array<double, kActionCount> log_probs{};
};

Softmax softmax(const std::array<double, kActionCount>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lse = mx + std::log(z);
  Softmax s;
  for (int i = 0; i < kActionCount; ++i) {
    s.log_probs[i] = logits[i] - lse;
    s.probs[i] = std::exp(s.log_probs[i]);
  }
  return s;
}

double entropy_from(const Softmax& s) {
  double h = 0.0;
  for (int i = 0; i < kActionCount; ++i) {
    if (s.probs[i] > 0.0) h -= s.probs[i] * s.log_probs[i];
  }
  return h;
}

void check_actions(const NetSizes& sizes) {
  if (sizes.actions != kActionCount) throw std::invalid_argument("the policy head must have one logit per action");
  if (sizes.input <= 0 || sizes.hidden <= 0) throw std::invalid_argument("network sizes must be positive");
}

}  // namespace

NetSizes NetSizes::for_grid(int side, int hidden) {
  const int c = 2 * side - 1;
  return {FeatureTensor::kChannels * c * c, hidden, kActionCount};
}

ActorCriticParams::ActorCriticParams(NetSizes sizes, int side)
    : trunk(sizes.input, sizes.hidden),
      policy_head(sizes.hidden, sizes.actions),
      value_head(sizes.hidden, 1),
      grid_side(side) {
  check_actions(sizes);
}

std::size_t ActorCriticParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors()) n += t.size();
  return n;
}

std::vector<std::pair<std::string, std::span<double>>> ActorCriticParams::tensors() {
  return {{"trunk.weight", trunk.weight},
          {"trunk.bias", trunk.bias},
          {"policy.weight", policy_head.weight},
          {"policy.bias", policy_head.bias},
          {"value.weight", value_head.weight},
          {"value.bias", value_head.bias}};
}

std::vector<std::pair<std::string, std::span<const double>>> ActorCriticParams::tensors() const {
  return {{"trunk.weight", trunk.weight},
          {"trunk.bias", trunk.bias},
          {"policy.weight", policy_head.weight},
          {"policy.bias", policy_head.bias},
          {"value.weight", value_head.weight},
          {"value.bias", value_head.bias}};
}

ActorCriticParams ActorCriticParams::zeros_like() const {
  ActorCriticParams z(sizes(), grid_side);
  z.version = version;
  return z;
}

bool ActorCriticParams::same_values(const ActorCriticParams& other) const {
  return trunk == other.trunk && policy_head == other.policy_head && value_head == other.value_head;
}

ActorCriticParams init_params(Rng& rng, NetSizes sizes, int grid_side) {
  ActorCriticParams p(sizes, grid_side);
  for (Dense* layer : {&p.trunk, &p.policy_head, &p.value_head}) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer->in));
    for (double& w : layer->weight) w = (2.0 * uniform01(rng) - 1.0) * bound;
  }
  return p;
}

ForwardTrace forward(const ActorCriticParams& params, std::span<const double> input) {
  if (input.size() != static_cast<std::size_t>(params.trunk.in)) {
    throw std::invalid_argument("forward: expected " + std::to_string(params.trunk.in) + " inputs, got " +
                                std::to_string(input.size()));
  }
  ForwardTrace t;
  t.version = params.version;
  t.input.assign(input.begin(), input.end());
  t.hidden_pre.resize(params.trunk.out);
  kernels::dense_forward(params.trunk.weight, params.trunk.bias, input, t.hidden_pre);
  t.hidden.resize(params.trunk.out);
  std::transform(t.hidden_pre.begin(), t.hidden_pre.end(), t.hidden.begin(),
                 [](double v) { return v > 0.0 ? v : 0.0; });
  kernels::dense_forward(params.policy_head.weight, params.policy_head.bias, t.hidden, t.logits, kernels::Exec::Serial);
  std::array<double, 1> value{};
  kernels::dense_forward(params.value_head.weight, params.value_head.bias, t.hidden, value, kernels::Exec::Serial);
  t.value = value[0];
  t.probs = softmax(t.logits).probs;
  return t;
}

ForwardTrace forward(const ActorCriticParams& params, const FeatureTensor& features) {
  if (params.grid_side != 0 && features.side != 2 * params.grid_side - 1) {
    throw std::invalid_argument("forward: feature tensor side " + std::to_string(features.side) +
                                " does not match a network built for grid side " + std::to_string(params.grid_side));
  }
  return forward(params, std::span<const double>(features.values));
}

double policy_entropy(const std::array<double, kActionCount>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

Action sample_action(const ForwardTrace& trace, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int i = 0; i < kActionCount; ++i) {
    acc += trace.probs[i];
    if (u < acc) return kActions[i];
  }
  // Rounding left u above the cumulative sum: take the last positive action.
  for (int i = kActionCount - 1; i >= 0; --i) {
    if (trace.probs[i] > 0.0) return kActions[i];
  }
  return kActions[kActionCount - 1];
}

Action greedy_action(const ForwardTrace& trace) {
  return kActions[std::max_element(trace.probs.begin(), trace.probs.end()) - trace.probs.begin()];
}

A2CGradients a2c_grads(const ActorCriticParams& params, std::span<const A2CSample> batch, double entropy_coef,
                       double value_coef) {
  if (batch.empty()) throw std::invalid_argument("a2c_grads: empty batch");
  const std::size_t hidden = params.trunk.out;
  const std::size_t in = params.trunk.in;
  A2CGradients out{params.zeros_like(), {}};
  auto& g = out.grads;

  std::vector<double> d_pre(batch.size() * hidden, 0.0);
  std::vector<double> inputs(batch.size() * in);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const ForwardTrace& t = *batch[s].trace;
    if (t.version != params.version) {
      throw std::logic_error("a2c_grads: trace from parameter version " + std::to_string(t.version) +
                             " used with version " + std::to_string(params.version));
    }
    if (t.input.size() != in || t.hidden.size() != hidden) throw std::invalid_argument("a2c_grads: trace shape");

    const Softmax sm = softmax(t.logits);
    const double h = entropy_from(sm);
    const int a = static_cast<int>(batch[s].action);
    const double adv = batch[s].ret - t.value;

    out.loss.policy += -sm.log_probs[a] * adv;
    out.loss.entropy += h;
    out.loss.value += adv * adv;

    std::array<double, kActionCount> d_logits{};
    for (int j = 0; j < kActionCount; ++j) {
      const double onehot = j == a ? 1.0 : 0.0;
      const double plogp = sm.probs[j] > 0.0 ? sm.probs[j] * (sm.log_probs[j] + h) : 0.0;
      d_logits[j] = -adv * (onehot - sm.probs[j]) + entropy_coef * plogp;
    }
    const double d_value = -2.0 * value_coef * adv;

    for (int j = 0; j < kActionCount; ++j) {
      double* row = g.policy_head.weight.data() + static_cast<std::size_t>(j) * hidden;
      for (std::size_t k = 0; k < hidden; ++k) row[k] += d_logits[j] * t.hidden[k];
      g.policy_head.bias[j] += d_logits[j];
    }
    for (std::size_t k = 0; k < hidden; ++k) g.value_head.weight[k] += d_value * t.hidden[k];
    g.value_head.bias[0] += d_value;

    std::vector<double> d_hidden(hidden, 0.0);
    kernels::dense_backward_input(params.policy_head.weight, d_logits, d_hidden);
    kernels::dense_backward_input(params.value_head.weight, std::span<const double>(&d_value, 1), d_hidden);
    double* dp = d_pre.data() + s * hidden;
    for (std::size_t k = 0; k < hidden; ++k) {
      dp[k] = t.hidden_pre[k] > 0.0 ? d_hidden[k] : 0.0;
      g.trunk.bias[k] += dp[k];
    }
    std::copy(t.input.begin(), t.input.end(), inputs.begin() + static_cast<std::ptrdiff_t>(s * in));
  }
  kernels::accumulate_outer(g.trunk.weight, d_pre, inputs, batch.size());

  out.loss.total = out.loss.policy - entropy_coef * out.loss.entropy + value_coef * out.loss.value;
  return out;
}

double a2c_loss_value(const ActorCriticParams& params, std::span<const std::vector<double>> inputs,
                      std::span<const Action> actions, std::span<const double> returns,
                      std::span<const double> fixed_advantages, double entropy_coef, double value_coef) {
  double total = 0.0;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const ForwardTrace t = forward(params, std::span<const double>(inputs[s]));
    const Softmax sm = softmax(t.logits);
    const double err = returns[s] - t.value;
    total += -sm.log_probs[static_cast<int>(actions[s])] * fixed_advantages[s] - entropy_coef * entropy_from(sm) +
             value_coef * err * err;
  }
  return total;
}

double global_norm(const ActorCriticParams& grads) {
  double sq = 0.0;
  for (const auto& [name, t] : grads.tensors()) sq += kernels::sum_squares(t);
  return std::sqrt(sq);
}

double clip_global_norm(ActorCriticParams& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("max_norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& [name, t] : grads.tensors()) kernels::scale(t, factor);
  }
  return norm;
}

OptimizerState OptimizerState::for_params(const ActorCriticParams& params, double lr) {
  OptimizerState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  s.lr = lr;
  return s;
}

void adam_step(OptimizerState& opt, ActorCriticParams& params, const ActorCriticParams& grads) {
  if (params.sizes() != grads.sizes() || params.sizes() != opt.m.sizes()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment shapes differ");
  }
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const kernels::AdamCoefficients c{opt.lr,  opt.beta1, opt.beta2, opt.eps, 1.0 - std::pow(opt.beta1, t),
                                    1.0 - std::pow(opt.beta2, t)};
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = opt.m.tensors();
  auto v = opt.v.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) kernels::adam_update(p[i].second, g[i].second, m[i].second, v[i].second, c);
  ++params.version;
}

// ---------------------------------------------------------------------------
// Weight files

namespace {

constexpr char kMagic[8] = {'L', '2', 'M', 'A', 'P', 'N', 'E', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "weight files assume a little-endian host");

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("weight file truncated in header");
  return v;
}

std::vector<int> shape_of(const std::string& name, const ActorCriticParams& p) {
  const auto dense_shape = [&](const Dense& d, bool weight) {
    return weight ? std::vector<int>{d.out, d.in} : std::vector<int>{d.out};
  };
  if (name == "trunk.weight") return dense_shape(p.trunk, true);
  if (name == "trunk.bias") return dense_shape(p.trunk, false);
  if (name == "policy.weight") return dense_shape(p.policy_head, true);
  if (name == "policy.bias") return dense_shape(p.policy_head, false);
  if (name == "value.weight") return dense_shape(p.value_head, true);
  return dense_shape(p.value_head, false);
}

}  // namespace

void save_params(const ActorCriticParams& params, const std::filesystem::path& path) {
  const NetSizes sz = params.sizes();
  nlohmann::json header;
  header["grid_side"] = params.grid_side;
  header["channels"] = FeatureTensor::kChannels;
  header["input"] = sz.input;
  header["hidden"] = sz.hidden;
  header["actions"] = sz.actions;
  header["dtype"] = "f64le";
  for (const auto& [name, t] : params.tensors()) {
    header["tensors"].push_back({{"name", name}, {"shape", shape_of(name, params)}});
  }
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  write_u32(os, kFormatVersion);
  write_u32(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : params.tensors()) {
    os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size_bytes()));
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

ActorCriticParams load_params(const std::filesystem::path& path, std::optional<int> expected_grid_side) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open weight file " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("not an l2map weight file: " + path.string());
  }
  if (const auto v = read_u32(is); v != kFormatVersion) {
    throw std::runtime_error("unsupported weight format version " + std::to_string(v));
  }
  const std::uint32_t header_len = read_u32(is);
  std::string text(header_len, '\0');
  if (!is.read(text.data(), header_len)) throw std::runtime_error("weight file truncated in header");

  nlohmann::json header;
  NetSizes sizes;
  int grid_side = 0;
  try {
    header = nlohmann::json::parse(text);
    sizes = {header.at("input").get<int>(), header.at("hidden").get<int>(), header.at("actions").get<int>()};
    grid_side = header.at("grid_side").get<int>();
    if (header.at("dtype").get<std::string>() != "f64le") throw std::runtime_error("unsupported dtype");
    if (header.at("channels").get<int>() != FeatureTensor::kChannels) throw std::runtime_error("channel count");
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed weight header: ") + e.what());
  }
  if (expected_grid_side && *expected_grid_side != grid_side) {
    const NetSizes want = NetSizes::for_grid(*expected_grid_side, sizes.hidden);
    throw std::runtime_error("weights were trained for grid side " + std::to_string(grid_side) + " (input " +
                             std::to_string(sizes.input) + "), harness expects side " +
                             std::to_string(*expected_grid_side) + " (input " + std::to_string(want.input) + ")");
  }
  if (grid_side != 0 && NetSizes::for_grid(grid_side, sizes.hidden).input != sizes.input) {
    throw std::runtime_error("weight header input width inconsistent with its grid side");
  }

  ActorCriticParams params(sizes, grid_side);
  const auto& listed = header.at("tensors");
  auto views = params.tensors();
  if (listed.size() != views.size()) throw std::runtime_error("weight file lists an unexpected tensor count");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto found = listed[i].at("shape").get<std::vector<int>>();
    const auto want = shape_of(views[i].first, params);
    if (listed[i].at("name").get<std::string>() != views[i].first || found != want) {
      throw std::runtime_error("tensor " + views[i].first + " shape mismatch: expected " + nlohmann::json(want).dump() +
                               ", found " + nlohmann::json(found).dump());
    }
  }
  for (auto& [name, t] : views) {
    if (!is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size_bytes()))) {
      throw std::runtime_error("weight file truncated in tensor " + name);
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes after weight payload");
  return params;
}

}  // namespace l2map
