// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
//
//   l2map_acceptance [--group fast|training|all] [--workdir DIR]
//
// "fast" runs the baseline rows, the property suite and the worked feature
// example (a few minutes). "training" trains the MLP for 2000 episodes and
// then checks the policy ordering; it takes well over ten minutes on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "l2map/a2c.hpp"
#include "l2map/harness.hpp"
#include "oracles.hpp"

using namespace l2map;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::printf("%s  %-26s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

RunConfig reference_run(PolicyKind kind, int episodes) {
  RunConfig c;  // defaults: N=25, density 0.1, accuracy 0.8, horizon 300
  c.policy.kind = kind;
  c.eval.episodes = episodes;
  c.eval.seed = 20240;
  return c;
}

Outcome random_row() {
  const EvalReport r = evaluate(reference_run(PolicyKind::Random, 1000));
  return {r.mean >= 85.0 && r.mean <= 100.0, fmt("mean %.2f +- %.2f over %.0f episodes, band [85, 100]", r.mean, r.stddev, r.episodes)};
}

Outcome myopic_row() {
  const EvalReport r = evaluate(reference_run(PolicyKind::Myopic, 1000));
  return {r.mean >= 240.0 && r.mean <= 262.0, fmt("mean %.2f +- %.2f over %.0f episodes, band [240, 262]", r.mean, r.stddev, r.episodes)};
}

// Property suite: each entry returns an empty string on success.
using Property = std::pair<const char*, std::function<std::string()>>;

std::string telescoping() {
  EnvConfig cfg;
  cfg.emit_features = false;
  for (std::uint64_t ep = 0; ep < 100; ++ep) {
    DisasterEnv env(cfg);
    env.reset(derive_stream(7, ep, kEnvStream));
    Rng prng = derive_stream(7, ep, kPolicyStream);
    const double h0 = env.belief().total_entropy();
    double sum = 0.0;
    while (!env.done()) sum += env.step(random_policy({env.belief(), env.pose(), prng})).reward;
    const double err = std::abs(sum - (h0 - env.belief().total_entropy()));
    if (err >= 1e-9) return fmt("episode %.0f off by %.3g", static_cast<double>(ep), err);
  }
  return {};
}

std::string commutativity() {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    Observation obs;
    for (int i = 0; i < 30; ++i) obs.readings.push_back({{static_cast<int>(rng() % 4), static_cast<int>(rng() % 4)}, (rng() & 1) != 0});
    const BeliefGrid ref = apply_observation(BeliefGrid(4), obs, 0.7);
    std::shuffle(obs.readings.begin(), obs.readings.end(), rng);
    if (!(apply_observation(BeliefGrid(4), obs, 0.7) == ref)) return "permuted readings changed the belief";
  }
  return {};
}

std::string gain_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    BeliefGrid b(5);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) b.set_logodds({r, c}, (rng() % 5 == 0) ? (u(rng) > 0 ? 15.0 : -15.0) : u(rng));
    }
    const Pose p{static_cast<int>(rng() % 5), static_cast<int>(rng() % 5)};
    worst = std::max(worst, std::abs(expected_gain(b, p, 0.8) - oracle::brute_force_gain(b, p, 0.8)));
  }
  return worst < 1e-9 ? std::string{} : fmt("max deviation %.3g", worst);
}

std::string gradients() {
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng = derive_stream(99, trial, 0);
    const int in = 3 + static_cast<int>(uniform_index(rng, 6));
    auto p = init_params(rng, NetSizes{in, 2 + static_cast<int>(uniform_index(rng, 6)), 4});
    for (Dense* d : {&p.trunk, &p.policy_head, &p.value_head}) {
      for (double& b : d->bias) b = 0.3 * (2.0 * uniform01(rng) - 1.0);
    }
    const std::size_t batch = 1 + uniform_index(rng, 4);
    std::vector<std::vector<double>> inputs(batch);
    std::vector<ForwardTrace> traces;
    std::vector<Action> actions;
    std::vector<double> returns, adv;
    for (auto& x : inputs) {
      x.resize(in);
      for (double& v : x) v = 4.0 * uniform01(rng) - 2.0;
      traces.push_back(forward(p, x));
      actions.push_back(kActions[uniform_index(rng, 4)]);
      returns.push_back(4.0 * uniform01(rng) - 2.0);
      adv.push_back(returns.back() - traces.back().value);
    }
    std::vector<A2CSample> samples;
    for (std::size_t s = 0; s < batch; ++s) samples.push_back({&traces[s], actions[s], returns[s]});
    const auto g = a2c_grads(p, samples, 0.05, 0.5);
    const auto fd = oracle::finite_difference(
        p, [&](const ActorCriticParams& q) { return a2c_loss_value(q, inputs, actions, returns, adv, 0.05, 0.5); }, 1e-6);
    worst = std::max(worst, oracle::max_relative_error(g.grads, fd, 1e-4));
  }
  return worst < 1e-4 ? std::string{} : fmt("max relative error %.3g", worst);
}

std::string hand_arithmetic() {
  ActorCriticParams p(NetSizes{1, 1, 4});
  p.value_head.bias[0] = 1.0;
  auto g = p.zeros_like();
  auto opt = OptimizerState::for_params(p, 0.1);
  g.value_head.bias[0] = 2.0;
  adam_step(opt, p, g);
  const double p1 = p.value_head.bias[0];
  g.value_head.bias[0] = -1.0;
  adam_step(opt, p, g);
  const double p2 = p.value_head.bias[0];
  if (std::abs(p1 - 0.9000000004999999975) > 1e-9 || std::abs(p2 - 0.873366296702431357842) > 1e-9) {
    return fmt("adam trace %.17g, %.17g", p1, p2);
  }
  const double one[] = {1.0};
  const double ones[] = {1.0, 1.0, 1.0};
  const double gm = 0.9;
  const auto r = compute_returns(ones, 5.0, true, gm);
  if (std::abs(compute_returns(one, 2.0, false, 0.99)[0] - 2.98) > 1e-9 || std::abs(r[0] - (1 + gm + gm * gm)) > 1e-9 ||
      std::abs(r[1] - (1 + gm)) > 1e-9 || std::abs(r[2] - 1.0) > 1e-9) {
    return "n-step returns disagree with the closed form";
  }
  return {};
}

std::string sensor_error_rate() {
  Rng rng(5);
  GridMap m(8);
  int wrong = 0;
  for (int i = 0; i < 10000; ++i) wrong += sense(m, {0, 0}, 0.8, rng).readings[0].occupied ? 1 : 0;
  const double rate = wrong / 10000.0;
  return std::abs(rate - 0.2) < 0.02 ? std::string{} : fmt("error rate %.4f", rate);
}

std::string determinism_and_parallel() {
  for (PolicyKind k : {PolicyKind::Random, PolicyKind::Myopic, PolicyKind::Frontier}) {
    RunConfig c = reference_run(k, 16);
    const std::string a = evaluate(c).to_json().dump();
    if (evaluate(c).to_json().dump() != a) return "repeated seeded run differs";
    c.eval.workers = 4;
    const EvalReport par = evaluate(c);
    c.eval.workers = 1;
    if (par.rewards != evaluate(c).rewards) return "parallel evaluation differs from serial";
  }
  TrainConfig t;
  t.episodes = 3;
  t.hidden = 32;
  EnvConfig e;
  e.side = 8;
  e.horizon = 50;
  const auto r1 = train(t, e, initial_params(t, e));
  const auto r2 = train(t, e, initial_params(t, e));
  if (r1.curve.rewards() != r2.curve.rewards() || !r1.params.same_values(r2.params)) return "training not reproducible";
  return {};
}

Outcome property_suite() {
  const std::vector<Property> props = {{"telescoping reward", telescoping},
                                       {"log-odds commutativity", commutativity},
                                       {"expected gain vs enumeration", gain_oracle},
                                       {"gradients vs finite differences", gradients},
                                       {"adam and return arithmetic", hand_arithmetic},
                                       {"sensor error rate", sensor_error_rate},
                                       {"determinism, parallel == serial", determinism_and_parallel}};
  std::string failed;
  for (const auto& [name, check] : props) {
    const std::string why = check();
    if (!why.empty()) failed += std::string(failed.empty() ? "" : "; ") + name + ": " + why;
  }
  return {failed.empty(), failed.empty() ? std::to_string(props.size()) + " properties hold" : failed};
}

Outcome worked_example() {
  std::vector<double> probs(9, 0.5);
  probs[0] = 0.0;
  const FeatureTensor f = centered_raw(probs, 3, {0, 0});
  const double c[5][5] = {{1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}, {1, 1, 0, .5, .5}, {1, 1, .5, .5, .5}, {1, 1, .5, .5, .5}};
  bool ok = f.side == 5;
  for (int r = 0; ok && r < 5; ++r) {
    for (int k = 0; k < 5; ++k) {
      const double h = (c[r][k] == 0.5) ? std::numbers::ln2 : 0.0;
      ok = ok && f.at(0, r, k) == c[r][k] && f.at(1, r, k) == h && std::abs(f.at(1, r, k) - (h ? 0.69 : 0.0)) < 0.005;
    }
  }
  return {ok, ok ? "5x5 occupancy and entropy matrices match" : "feature matrices differ"};
}

double trailing_mean(const std::vector<double>& x, std::size_t end, std::size_t window) {
  const std::size_t begin = end - window;
  return std::accumulate(x.begin() + begin, x.begin() + end, 0.0) / static_cast<double>(window);
}

void training_group(const fs::path& workdir) {
  TrainConfig t;
  t.episodes = 2000;
  t.seed = 0;
  const EnvConfig env;
  const auto start = std::chrono::steady_clock::now();
  const TrainResult r = train(t, env, initial_params(t, env));
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  const auto rewards = r.curve.rewards();
  double best = 0.0;
  for (std::size_t end = 100; end <= rewards.size(); ++end) best = std::max(best, trailing_mean(rewards, end, 100));
  const double final_mean = trailing_mean(rewards, rewards.size(), 100);

  fs::create_directories(workdir);
  const fs::path weights = workdir / "mlp_2000.l2m";
  save_params(r.params, weights);
  write_curve(r.curve, workdir / "mlp_2000_curve.csv");

  report("mlp-training-2000",
         {final_mean >= 150.0, fmt("trailing-100 mean at episode 2000: %.2f (best window %.2f), target >= 150, %.1f min",
                                   final_mean, best, minutes)});

  RunConfig c = reference_run(PolicyKind::Random, 300);
  const CompareReport cmp = compare(c, {parse_policy("myopic"), parse_policy("random"),
                                         parse_policy("learned:" + weights.string())});
  const double myopic = cmp.rows[0].mean;
  const double random = cmp.rows[1].mean;
  const double mlp = cmp.rows[2].mean;
  const double diff = cmp.differences[0].mean_difference;  // myopic - random
  report("policy-ordering", {diff > 100.0 && mlp >= 1.5 * random,
                            fmt("myopic - random %.2f (need > 100); mlp/random %.3f (mlp %.2f, random %.2f, need >= 1.5)",
                                diff, mlp / random, mlp, random)});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string group = "all";
  std::string workdir = "acceptance_out";
  app.add_option("--group", group)->check(CLI::IsMember({"fast", "training", "all"}));
  app.add_option("--workdir", workdir);
  CLI11_PARSE(app, argc, argv);

  try {
    if (group != "training") {
      report("random-baseline", random_row());
      report("myopic-baseline", myopic_row());
      report("property-suite", property_suite());
      report("worked-feature-example", worked_example());
    }
    if (group != "fast") training_group(workdir);
  } catch (const std::exception& e) {
    std::printf("FAIL  %-26s %s\n", "unexpected-error", e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
