#include "l2map/harness.hpp"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace l2map {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw std::invalid_argument("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Neighborhood parse_hood(int v, const char* key) {
  if (v == 4) return Neighborhood::VonNeumann;
  if (v == 8) return Neighborhood::Moore;
  throw std::invalid_argument(std::string("env.") + key + " must be 4 or 8");
}

MyopicMotion parse_motion(const std::string& s) {
  if (s == "belief-weighted") return MyopicMotion::BeliefWeighted;
  if (s == "optimistic") return MyopicMotion::Optimistic;
  throw std::invalid_argument("policy.myopic_motion must be 'belief-weighted' or 'optimistic'");
}

const char* motion_name(MyopicMotion m) {
  return m == MyopicMotion::BeliefWeighted ? "belief-weighted" : "optimistic";
}

json cell_json(Cell c) { return json::array({c.row, c.col}); }

json readings_json(const Observation& obs) {
  json out = json::array();
  for (const auto& r : obs.readings) out.push_back(json::array({r.cell.row, r.cell.col, r.occupied ? 1 : 0}));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Policies

std::string PolicySpec::label() const {
  switch (kind) {
    case PolicyKind::Random:
      return "random";
    case PolicyKind::Frontier:
      return "frontier";
    case PolicyKind::Myopic:
      return "myopic";
    case PolicyKind::Learned:
      return "learned:" + weights.string();
  }
  return "?";
}

PolicySpec parse_policy(const std::string& text) {
  PolicySpec spec;
  if (text == "random") {
    spec.kind = PolicyKind::Random;
  } else if (text == "frontier") {
    spec.kind = PolicyKind::Frontier;
  } else if (text == "myopic") {
    spec.kind = PolicyKind::Myopic;
  } else if (text.rfind("learned:", 0) == 0 && text.size() > 8) {
    spec.kind = PolicyKind::Learned;
    spec.weights = text.substr(8);
  } else {
    throw std::invalid_argument("unknown policy '" + text + "' (expected random|frontier|myopic|learned:<path>)");
  }
  return spec;
}

Action LearnedPolicy::act(const PolicyContext& ctx, const FeatureTensor& features) {
  const ForwardTrace t = forward(*params_, features);
  return greedy_ ? greedy_action(t) : sample_action(t, ctx.rng);
}

PolicyFactory::PolicyFactory(const PolicySpec& spec, const EnvConfig& env) : spec_(spec), env_(env) {
  if (spec_.kind == PolicyKind::Learned) {
    params_ = std::make_shared<const ActorCriticParams>(load_params(spec_.weights, env_.side));
  }
}

std::unique_ptr<Policy> PolicyFactory::make() const {
  switch (spec_.kind) {
    case PolicyKind::Random:
      return std::make_unique<RandomPolicy>();
    case PolicyKind::Frontier:
      return std::make_unique<FrontierPolicyAdapter>(spec_.frontier);
    case PolicyKind::Myopic:
      return std::make_unique<MyopicPolicy>(env_.accuracy, spec_.myopic_motion, env_.sense);
    case PolicyKind::Learned:
      return std::make_unique<LearnedPolicy>(params_, spec_.greedy);
  }
  throw std::logic_error("unhandled policy kind");
}

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
  env.validate();
  train.validate();
  if (eval.episodes <= 0) throw std::invalid_argument("eval.episodes must be positive");
  if (eval.workers <= 0) throw std::invalid_argument("eval.workers must be positive");
  if (output.trace_snapshot_stride <= 0) throw std::invalid_argument("output.trace_snapshot_stride must be positive");
  if (!(output.curve_smoothing > 0.0)) throw std::invalid_argument("output.curve_smoothing must be positive");
  if (!(policy.frontier.unknown_entropy > 0.0) || policy.frontier.replan_interval <= 0) {
    throw std::invalid_argument("frontier parameters out of range");
  }
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  reject_unknown(j, "config", {"env", "policy", "eval", "train", "output"});
  try {
    if (j.contains("env")) {
      const auto& e = j.at("env");
      reject_unknown(e, "env", {"side", "density", "accuracy", "horizon", "sense_neighborhood", "move_neighborhood"});
      read_opt(e, "side", c.env.side);
      read_opt(e, "density", c.env.density);
      read_opt(e, "accuracy", c.env.accuracy);
      read_opt(e, "horizon", c.env.horizon);
      if (e.contains("sense_neighborhood")) c.env.sense = parse_hood(e.at("sense_neighborhood").get<int>(), "sense_neighborhood");
      if (e.contains("move_neighborhood")) c.env.move = parse_hood(e.at("move_neighborhood").get<int>(), "move_neighborhood");
    }
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      reject_unknown(p, "policy",
                     {"name", "greedy", "myopic_motion", "frontier_unknown_entropy", "frontier_replan_interval"});
      if (p.contains("name")) c.policy = parse_policy(p.at("name").get<std::string>());
      read_opt(p, "greedy", c.policy.greedy);
      if (p.contains("myopic_motion")) c.policy.myopic_motion = parse_motion(p.at("myopic_motion").get<std::string>());
      read_opt(p, "frontier_unknown_entropy", c.policy.frontier.unknown_entropy);
      read_opt(p, "frontier_replan_interval", c.policy.frontier.replan_interval);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      reject_unknown(e, "eval", {"episodes", "seed", "workers"});
      read_opt(e, "episodes", c.eval.episodes);
      read_opt(e, "seed", c.eval.seed);
      read_opt(e, "workers", c.eval.workers);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      reject_unknown(t, "train",
                     {"episodes", "gamma", "n_steps", "lr", "lr_halving_interval", "entropy_coef", "value_coef",
                      "max_grad_norm", "hidden", "seed", "checkpoint_interval"});
      read_opt(t, "episodes", c.train.episodes);
      read_opt(t, "gamma", c.train.gamma);
      read_opt(t, "n_steps", c.train.n_steps);
      read_opt(t, "lr", c.train.lr);
      read_opt(t, "lr_halving_interval", c.train.lr_halving_interval);
      read_opt(t, "entropy_coef", c.train.entropy_coef);
      read_opt(t, "value_coef", c.train.value_coef);
      read_opt(t, "max_grad_norm", c.train.max_grad_norm);
      read_opt(t, "hidden", c.train.hidden);
      read_opt(t, "seed", c.train.seed);
      read_opt(t, "checkpoint_interval", c.train.checkpoint_interval);
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      reject_unknown(o, "output", {"report", "curve", "weights", "trace", "trace_snapshot_stride", "curve_smoothing"});
      if (o.contains("report")) c.output.report = o.at("report").get<std::string>();
      if (o.contains("curve")) c.output.curve = o.at("curve").get<std::string>();
      if (o.contains("weights")) c.output.weights = o.at("weights").get<std::string>();
      if (o.contains("trace")) c.output.trace = o.at("trace").get<std::string>();
      read_opt(o, "trace_snapshot_stride", c.output.trace_snapshot_stride);
      read_opt(o, "curve_smoothing", c.output.curve_smoothing);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config type error: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

json to_json(const RunConfig& c) {
  json j;
  j["env"] = {{"side", c.env.side},
              {"density", c.env.density},
              {"accuracy", c.env.accuracy},
              {"horizon", c.env.horizon},
              {"sense_neighborhood", static_cast<int>(c.env.sense)},
              {"move_neighborhood", static_cast<int>(c.env.move)}};
  j["policy"] = {{"name", c.policy.label()},
                 {"greedy", c.policy.greedy},
                 {"myopic_motion", motion_name(c.policy.myopic_motion)},
                 {"frontier_unknown_entropy", c.policy.frontier.unknown_entropy},
                 {"frontier_replan_interval", c.policy.frontier.replan_interval}};
  j["eval"] = {{"episodes", c.eval.episodes}, {"seed", c.eval.seed}, {"workers", c.eval.workers}};
  j["train"] = {{"episodes", c.train.episodes},
                {"gamma", c.train.gamma},
                {"n_steps", c.train.n_steps},
                {"lr", c.train.lr},
                {"lr_halving_interval", c.train.lr_halving_interval},
                {"entropy_coef", c.train.entropy_coef},
                {"value_coef", c.train.value_coef},
                {"max_grad_norm", c.train.max_grad_norm},
                {"hidden", c.train.hidden},
                {"seed", c.train.seed},
                {"checkpoint_interval", c.train.checkpoint_interval}};
  return j;
}

// ---------------------------------------------------------------------------
// Evaluation

std::uint64_t fingerprint(const GridMap& map) {
  // FNV-1a over the occupancy bits.
  std::uint64_t h = 1469598103934665603ULL;
  for (int r = 0; r < map.side(); ++r) {
    for (int c = 0; c < map.side(); ++c) {
      h ^= map.occupied({r, c}) ? 1U : 0U;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

EpisodeOutcome run_episode(const EnvConfig& env_config, Policy& policy, std::uint64_t seed, std::uint64_t index) {
  EnvConfig ec = env_config;
  ec.emit_features = policy.needs_features();
  DisasterEnv env(ec);
  StepResult state = env.reset(derive_stream(seed, index, kEnvStream));
  Rng policy_rng = derive_stream(seed, index, kPolicyStream);
  policy.reset();
  EpisodeOutcome out;
  out.map_fingerprint = fingerprint(env.map());
  while (!env.done()) {
    const PolicyContext ctx{env.belief(), env.pose(), policy_rng};
    state = env.step(policy.act(ctx, state.features));
    out.reward += state.reward;
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

EvalReport evaluate(const RunConfig& config) {
  config.validate();
  const PolicyFactory factory(config.policy, config.env);
  const int n = config.eval.episodes;
  std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(n));

#pragma omp parallel num_threads(config.eval.workers)
  {
    const auto policy = factory.make();
#pragma omp for schedule(dynamic, 4)
    for (int i = 0; i < n; ++i) {
      outcomes[static_cast<std::size_t>(i)] =
          run_episode(config.env, *policy, config.eval.seed, static_cast<std::uint64_t>(i));
    }
  }

  EvalReport report;
  report.policy = config.policy.label();
  report.episodes = n;
  for (const auto& o : outcomes) {
    report.rewards.push_back(o.reward);
    report.map_fingerprints.push_back(o.map_fingerprint);
  }
  report.mean = mean_of(report.rewards);
  report.stddev = sample_stddev(report.rewards);
  report.config = to_json(config);
  return report;
}

json EvalReport::to_json() const {
  return {{"policy", policy}, {"episodes", episodes}, {"mean", mean},     {"stddev", stddev},
          {"rewards", rewards}, {"map_fingerprints", map_fingerprints}, {"config", config}};
}

CompareReport compare(const RunConfig& base, const std::vector<PolicySpec>& policies) {
  if (policies.size() < 2) throw std::invalid_argument("compare needs at least two policies");
  CompareReport out;
  for (const auto& spec : policies) {
    RunConfig c = base;
    c.policy = spec;
    out.rows.push_back(evaluate(c));
  }
  for (std::size_t a = 0; a < out.rows.size(); ++a) {
    for (std::size_t b = a + 1; b < out.rows.size(); ++b) {
      std::vector<double> diff(out.rows[a].rewards.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = out.rows[a].rewards[i] - out.rows[b].rewards[i];
      out.differences.push_back({out.rows[a].policy, out.rows[b].policy, mean_of(diff),
                                 sample_stddev(diff) / std::sqrt(static_cast<double>(diff.size()))});
    }
  }
  return out;
}

json CompareReport::to_json() const {
  json j;
  j["rows"] = json::array();
  for (const auto& r : rows) j["rows"].push_back(r.to_json());
  j["differences"] = json::array();
  for (const auto& d : differences) {
    j["differences"].push_back({{"first", d.first},
                                {"second", d.second},
                                {"mean_difference", d.mean_difference},
                                {"standard_error", d.standard_error}});
  }
  return j;
}

std::string CompareReport::table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << std::left << std::setw(32) << "Approach" << "Performance\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(32) << r.policy << r.mean << " +- " << r.stddev << "  (n=" << r.episodes << ")\n";
  }
  if (!differences.empty()) os << "\nPaired differences (first - second):\n";
  for (const auto& d : differences) {
    os << "  " << d.first << " - " << d.second << ": " << d.mean_difference << " (se " << d.standard_error << ")\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Traces

double write_trace(const RunConfig& config, std::uint64_t episode_index, const std::filesystem::path& path) {
  config.validate();
  const PolicyFactory factory(config.policy, config.env);
  const auto policy = factory.make();
  EnvConfig ec = config.env;
  ec.emit_features = policy->needs_features();
  DisasterEnv env(ec);
  StepResult state = env.reset(derive_stream(config.eval.seed, episode_index, kEnvStream));
  Rng policy_rng = derive_stream(config.eval.seed, episode_index, kPolicyStream);
  policy->reset();

  std::ostringstream buf;
  const int stride = config.output.trace_snapshot_stride;
  const auto belief_snapshot = [&] {
    json rows = json::array();
    for (int r = 0; r < env.belief().side(); ++r) {
      json row = json::array();
      for (int c = 0; c < env.belief().side(); ++c) row.push_back(env.belief().prob({r, c}));
      rows.push_back(std::move(row));
    }
    return rows;
  };

  json first = {{"step", 0},
                {"pose", cell_json(env.pose())},
                {"action", nullptr},
                {"moved", false},
                {"observation", readings_json(state.info.observation)},
                {"reward", 0.0},
                {"cumulative_reward", 0.0}};
  json map_rows = json::array();
  for (int r = 0; r < env.map().side(); ++r) {
    std::string row;
    for (int c = 0; c < env.map().side(); ++c) row.push_back(env.map().occupied({r, c}) ? '#' : '.');
    map_rows.push_back(row);
  }
  first["map"] = std::move(map_rows);
  first["belief"] = belief_snapshot();
  buf << first.dump() << '\n';

  double cumulative = 0.0;
  while (!env.done()) {
    const PolicyContext ctx{env.belief(), env.pose(), policy_rng};
    const Action a = policy->act(ctx, state.features);
    state = env.step(a);
    cumulative += state.reward;
    json rec = {{"step", env.step_count()},
                {"pose", cell_json(state.info.pose)},
                {"action", action_name(a)},
                {"moved", state.info.moved},
                {"observation", readings_json(state.info.observation)},
                {"reward", state.reward},
                {"cumulative_reward", cumulative}};
    if (env.step_count() % stride == 0) rec["belief"] = belief_snapshot();
    buf << rec.dump() << '\n';
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open trace output " + path.string());
  os << buf.str();
  if (!os) throw std::runtime_error("failed writing trace " + path.string());
  return cumulative;
}

}  // namespace l2map
