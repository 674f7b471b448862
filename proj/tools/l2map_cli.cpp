// Command-line driver: train / eval / compare / trace / plot.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "l2map/a2c.hpp"
#include "l2map/harness.hpp"

namespace {

using namespace l2map;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> workers;
  std::vector<std::string> policies;
  std::string weights;
  bool greedy = false;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--episodes", o.episodes, "episode count");
}

PolicySpec resolve_policy(const std::string& text, const Overrides& o, const PolicySpec& base) {
  PolicySpec spec = base;
  const PolicySpec parsed = text == "learned" ? PolicySpec{PolicyKind::Learned, o.weights} : parse_policy(text);
  spec.kind = parsed.kind;
  spec.weights = parsed.weights;
  if (spec.kind == PolicyKind::Learned && spec.weights.empty()) {
    throw std::invalid_argument("learned policy needs weights (learned:<path> or --weights)");
  }
  if (o.greedy) spec.greedy = true;
  return spec;
}

RunConfig base_config(const Overrides& o, bool training) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (training) {
    if (o.seed) c.train.seed = *o.seed;
    if (o.episodes) c.train.episodes = *o.episodes;
  } else {
    if (o.seed) c.eval.seed = *o.seed;
    if (o.episodes) c.eval.episodes = *o.episodes;
  }
  if (o.workers) c.eval.workers = *o.workers;
  if (!o.policies.empty()) c.policy = resolve_policy(o.policies.front(), o, c.policy);
  if (!o.weights.empty() && c.policy.kind == PolicyKind::Learned && o.policies.empty()) c.policy.weights = o.weights;
  if (o.greedy) c.policy.greedy = true;
  c.validate();
  return c;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

int run_train(const Overrides& o) {
  RunConfig c = base_config(o, true);
  if (!o.out.empty()) c.output.weights = o.out;
  if (c.output.weights.empty()) c.output.weights = "weights.l2m";
  if (c.output.curve.empty()) c.output.curve = "curve.csv";
  c.train.checkpoint_path = c.output.weights;

  double window = 0.0;
  int count = 0;
  const auto progress = [&](const EpisodeStats& s) {
    window += s.reward;
    if (++count == 100) {
      std::fprintf(stderr, "episode %d  mean(100) %.2f  lr %.3g  updates %llu\n", s.episode + 1, window / count, s.lr,
                   static_cast<unsigned long long>(s.updates));
      window = 0.0;
      count = 0;
    }
  };
  TrainResult r = train(c.train, c.env, initial_params(c.train, c.env), progress);
  save_params(r.params, c.output.weights);
  write_curve(r.curve, c.output.curve);
  auto smoothed_path = c.output.curve;
  smoothed_path.replace_extension(".smoothed.csv");
  write_series(smooth_curve(r.curve.rewards(), c.output.curve_smoothing), smoothed_path);
  std::cout << "weights " << c.output.weights.string() << "\ncurve " << c.output.curve.string() << "\nsmoothed "
            << smoothed_path.string() << '\n';
  return 0;
}

int run_eval(const Overrides& o) {
  const RunConfig c = base_config(o, false);
  const EvalReport r = evaluate(c);
  std::printf("%-32s %.2f +- %.2f  (n=%d)\n", r.policy.c_str(), r.mean, r.stddev, r.episodes);
  const auto out = !o.out.empty() ? std::filesystem::path(o.out) : c.output.report;
  if (!out.empty()) write_json(r.to_json(), out);
  return 0;
}

int run_compare(const Overrides& o) {
  Overrides base = o;
  base.policies.clear();
  const RunConfig c = base_config(base, false);
  std::vector<PolicySpec> specs;
  for (const auto& p : o.policies) specs.push_back(resolve_policy(p, o, c.policy));
  const CompareReport r = compare(c, specs);
  std::cout << r.table();
  const auto out = !o.out.empty() ? std::filesystem::path(o.out) : c.output.report;
  if (!out.empty()) write_json(r.to_json(), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active mapping simulator: train, evaluate and compare exploration policies"};
  app.require_subcommand(1);
  Overrides o;
  std::uint64_t episode_index = 0;
  std::string curve_path;
  double width = 20.0;

  auto* train_cmd = app.add_subcommand("train", "train the MLP actor-critic with A2C");
  add_common(train_cmd, o);
  train_cmd->add_option("--out", o.out, "output weight file");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate one policy");
  add_common(eval_cmd, o);
  eval_cmd->add_option("--policy", o.policies, "random|frontier|myopic|learned:<path>")->expected(1);
  eval_cmd->add_option("--weights", o.weights, "weights for --policy learned");
  eval_cmd->add_option("--workers", o.workers, "parallel evaluation threads");
  eval_cmd->add_flag("--greedy", o.greedy, "learned policy acts greedily instead of sampling");
  eval_cmd->add_option("--out", o.out, "JSON report path");

  auto* cmp_cmd = app.add_subcommand("compare", "evaluate several policies on paired episodes");
  add_common(cmp_cmd, o);
  cmp_cmd->add_option("--policy", o.policies, "repeatable policy selector")->required();
  cmp_cmd->add_option("--weights", o.weights, "weights for --policy learned");
  cmp_cmd->add_option("--workers", o.workers, "parallel evaluation threads");
  cmp_cmd->add_flag("--greedy", o.greedy, "learned policies act greedily");
  cmp_cmd->add_option("--out", o.out, "JSON report path");

  auto* trace_cmd = app.add_subcommand("trace", "record one episode as JSON lines");
  trace_cmd->add_option("--config", o.config, "JSON run configuration");
  trace_cmd->add_option("--seed", o.seed, "master seed");
  trace_cmd->add_option("--episode", episode_index, "episode index under the master seed");
  trace_cmd->add_option("--policy", o.policies, "policy selector")->expected(1);
  trace_cmd->add_option("--weights", o.weights, "weights for --policy learned");
  trace_cmd->add_flag("--greedy", o.greedy, "learned policy acts greedily");
  trace_cmd->add_option("--out", o.out, "trace output path");

  auto* plot_cmd = app.add_subcommand("plot", "render a learning curve as SVG");
  plot_cmd->add_option("--curve", curve_path, "curve file (episode,reward)")->required();
  plot_cmd->add_option("--width", width, "Gaussian smoothing width in episodes");
  plot_cmd->add_option("--out", o.out, "SVG output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*train_cmd) return run_train(o);
    if (*eval_cmd) return run_eval(o);
    if (*cmp_cmd) return run_compare(o);
    if (*trace_cmd) {
      const RunConfig c = base_config(o, false);
      const auto out = !o.out.empty() ? std::filesystem::path(o.out) : c.output.trace;
      if (out.empty()) throw std::invalid_argument("trace needs --out or output.trace");
      const double reward = write_trace(c, episode_index, out);
      std::printf("trace %s reward %.6f\n", out.string().c_str(), reward);
      return 0;
    }
    if (*plot_cmd) {
      emit_curve_svg(curve_path, o.out, width);
      std::printf("plot %s\n", o.out.c_str());
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 1;
}
