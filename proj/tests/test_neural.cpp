#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "l2map/actor_critic.hpp"
#include "l2map/kernels.hpp"
#include "oracles.hpp"

using namespace l2map;
namespace fs = std::filesystem;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * (2.0 * uniform01(rng) - 1.0);
  return v;
}

void perturb_biases(ActorCriticParams& p, Rng& rng) {
  for (Dense* d : {&p.trunk, &p.policy_head, &p.value_head}) {
    for (double& b : d->bias) b = 0.3 * (2.0 * uniform01(rng) - 1.0);
  }
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("l2map_test_" + name); }

}  // namespace

TEST_CASE("kernels: serial and parallel agree bit for bit") {
  using kernels::Exec;
  Rng rng(1);
  const int in = 1153;
  const int out = 37;
  const auto w = random_vector(static_cast<std::size_t>(in) * out, rng);
  const auto b = random_vector(out, rng);
  const auto x = random_vector(in, rng);
  std::vector<double> ys(out);
  std::vector<double> yp(out);
  kernels::dense_forward(w, b, x, ys, Exec::Serial);
  kernels::dense_forward(w, b, x, yp, Exec::Parallel);
  CHECK(ys == yp);
  for (int i = 0; i < out; ++i) {
    long double ref = b[i];
    for (int j = 0; j < in; ++j) ref += static_cast<long double>(w[i * in + j]) * x[j];
    CHECK(ys[i] == doctest::Approx(static_cast<double>(ref)).epsilon(1e-11));
  }

  const std::size_t batch = 5;
  const auto gy = random_vector(batch * out, rng);
  const auto xs = random_vector(batch * in, rng);
  std::vector<double> gs(w.size(), 0.25);
  std::vector<double> gp(w.size(), 0.25);
  kernels::accumulate_outer(gs, gy, xs, batch, Exec::Serial);
  kernels::accumulate_outer(gp, gy, xs, batch, Exec::Parallel);
  CHECK(gs == gp);

  auto ps = w;
  auto pp = w;
  std::vector<double> ms(w.size(), 0.0), vs(w.size(), 0.0), mp(w.size(), 0.0), vp(w.size(), 0.0);
  const kernels::AdamCoefficients c{1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001};
  kernels::adam_update(ps, gs, ms, vs, c, Exec::Serial);
  kernels::adam_update(pp, gs, mp, vp, c, Exec::Parallel);
  CHECK(ps == pp);
  CHECK(ms == mp);
  CHECK(vs == vp);
}

TEST_CASE("init_params") {
  const NetSizes sizes = NetSizes::for_grid(25);
  CHECK(sizes.input == 2 * 49 * 49);
  Rng a(3);
  Rng b(3);
  const auto p = init_params(a, sizes, 25);
  CHECK(p.same_values(init_params(b, sizes, 25)));
  CHECK(p.parameter_count() == static_cast<std::size_t>(4802) * 256 + 256 + 256 * 4 + 4 + 256 + 1);

  const auto& w = p.trunk.weight;
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  double var = 0.0;
  for (double x : w) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(w.size() - 1));
  const double bound = 1.0 / std::sqrt(4802.0);
  CHECK(std::abs(sd - bound / std::sqrt(3.0)) < 0.05 * bound / std::sqrt(3.0));
  double largest = 0.0;
  for (double x : w) largest = std::max(largest, std::abs(x));
  CHECK(largest <= bound);
  for (double x : p.trunk.bias) CHECK(x == 0.0);
}

TEST_CASE("forward pass") {
  SUBCASE("zero weights give a uniform policy and zero value") {
    const ActorCriticParams p(NetSizes{10, 8, 4});
    const auto t = forward(p, std::vector<double>(10, 0.7));
    for (double q : t.probs) CHECK(q == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(t.value == 0.0);
  }
  SUBCASE("probabilities sum to one and logit shifts leave them unchanged") {
    Rng rng(5);
    auto p = init_params(rng, NetSizes{30, 16, 4});
    const auto x = random_vector(30, rng);
    const auto t = forward(p, x);
    CHECK(std::accumulate(t.probs.begin(), t.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double& bias : p.policy_head.bias) bias += 7.5;
    const auto shifted_t = forward(p, x);
    for (int i = 0; i < 4; ++i) CHECK(shifted_t.probs[i] == doctest::Approx(t.probs[i]).epsilon(1e-12));
  }
  SUBCASE("input width and grid side are checked") {
    Rng rng(6);
    const auto p = init_params(rng, NetSizes::for_grid(5, 8), 5);
    CHECK_THROWS_AS(forward(p, std::vector<double>(3, 0.0)), std::invalid_argument);
    const BeliefGrid b(6);
    CHECK_THROWS(forward(p, centered_features(b, {0, 0})));
    CHECK_NOTHROW(forward(p, centered_features(BeliefGrid(5), {0, 0})));
  }
}

TEST_CASE("a2c gradients match central finite differences on 20 random nets") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng = derive_stream(99, trial, 0);
    const int in = 3 + static_cast<int>(uniform_index(rng, 6));
    const int hidden = 2 + static_cast<int>(uniform_index(rng, 6));
    auto p = init_params(rng, NetSizes{in, hidden, 4});
    perturb_biases(p, rng);
    const std::size_t batch = 1 + uniform_index(rng, 4);
    std::vector<std::vector<double>> inputs;
    std::vector<ForwardTrace> traces;
    std::vector<Action> actions;
    std::vector<double> returns;
    std::vector<double> advantages;
    for (std::size_t s = 0; s < batch; ++s) {
      inputs.push_back(random_vector(in, rng, 2.0));
      traces.push_back(forward(p, inputs.back()));
      actions.push_back(kActions[uniform_index(rng, 4)]);
      returns.push_back(4.0 * uniform01(rng) - 2.0);
      advantages.push_back(returns.back() - traces.back().value);
    }
    std::vector<A2CSample> samples;
    for (std::size_t s = 0; s < batch; ++s) samples.push_back({&traces[s], actions[s], returns[s]});
    const double beta = 0.05;
    const double c = 0.5;
    const auto g = a2c_grads(p, samples, beta, c);
    const auto fd = oracle::finite_difference(
        p, [&](const ActorCriticParams& q) { return a2c_loss_value(q, inputs, actions, returns, advantages, beta, c); },
        1e-6);
    CHECK(oracle::max_relative_error(g.grads, fd, 1e-4) < 1e-4);
    CHECK(g.loss.total == doctest::Approx(a2c_loss_value(p, inputs, actions, returns, advantages, beta, c)));
  }
}

TEST_CASE("a2c gradient properties") {
  Rng rng(12);
  auto p = init_params(rng, NetSizes{6, 5, 4});
  perturb_biases(p, rng);
  const auto x1 = random_vector(6, rng);
  const auto x2 = random_vector(6, rng);
  const auto t1 = forward(p, x1);
  const auto t2 = forward(p, x2);

  SUBCASE("entropy term alone pushes toward uniform") {
    const A2CSample s{&t1, Action::Up, t1.value};  // zero advantage, zero value error
    const auto g = a2c_grads(p, std::span(&s, 1), 1.0, 0.0);
    auto q = p;
    auto qv = q.tensors();
    const auto gv = g.grads.tensors();
    for (std::size_t i = 0; i < qv.size(); ++i) {
      for (std::size_t j = 0; j < qv[i].second.size(); ++j) qv[i].second[j] -= 1e-3 * gv[i].second[j];
    }
    CHECK(policy_entropy(forward(q, x1).probs) > policy_entropy(t1.probs));
  }
  SUBCASE("batch gradient is the sum of per-sample gradients") {
    const A2CSample batch[2] = {{&t1, Action::Left, 1.5}, {&t2, Action::Down, -0.5}};
    const auto g12 = a2c_grads(p, batch, 0.01, 0.5);
    const auto g1 = a2c_grads(p, std::span(batch, 1), 0.01, 0.5);
    const auto g2 = a2c_grads(p, std::span(batch + 1, 1), 0.01, 0.5);
    const auto a = g12.grads.tensors();
    const auto b1 = g1.grads.tensors();
    const auto b2 = g2.grads.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < a[i].second.size(); ++j) {
        CHECK(a[i].second[j] == doctest::Approx(b1[i].second[j] + b2[i].second[j]).epsilon(1e-12));
      }
    }
  }
  SUBCASE("stale traces are rejected") {
    const A2CSample s{&t1, Action::Up, 1.0};
    auto opt = OptimizerState::for_params(p, 1e-3);
    auto g = a2c_grads(p, std::span(&s, 1), 0.0, 0.5);
    adam_step(opt, p, g.grads);
    CHECK_THROWS_AS(a2c_grads(p, std::span(&s, 1), 0.0, 0.5), std::logic_error);
  }
}

TEST_CASE("global norm clipping") {
  ActorCriticParams g(NetSizes{3, 2, 4});
  g.value_head.bias[0] = 100.0;
  CHECK(clip_global_norm(g, 50.0) == doctest::Approx(100.0));
  CHECK(g.value_head.bias[0] == doctest::Approx(50.0));
  CHECK(global_norm(g) == doctest::Approx(50.0));

  ActorCriticParams h(NetSizes{3, 2, 4});
  h.trunk.weight[0] = 6.0;
  h.policy_head.bias[2] = 8.0;
  CHECK(clip_global_norm(h, 50.0) == doctest::Approx(10.0));
  CHECK(h.trunk.weight[0] == 6.0);
  CHECK(h.policy_head.bias[2] == 8.0);
}

TEST_CASE("adam") {
  SUBCASE("first step moves each parameter by about lr against its gradient") {
    Rng rng(4);
    auto p = init_params(rng, NetSizes{4, 3, 4});
    const auto before = p;
    auto g = p.zeros_like();
    auto gv = g.tensors();
    for (auto& [name, t] : gv) {
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = (i % 3 == 0) ? 0.0 : (i % 2 ? 0.7 : -2.0);
    }
    auto opt = OptimizerState::for_params(p, 1e-3);
    adam_step(opt, p, g);
    const auto after = p.tensors();
    const auto orig = before.tensors();
    for (std::size_t t = 0; t < after.size(); ++t) {
      for (std::size_t i = 0; i < after[t].second.size(); ++i) {
        const double gi = gv[t].second[i];
        const double delta = after[t].second[i] - orig[t].second[i];
        if (gi == 0.0) {
          CHECK(delta == 0.0);
        } else {
          CHECK(delta == doctest::Approx(gi > 0 ? -1e-3 : 1e-3).epsilon(1e-6));
        }
      }
    }
    CHECK(p.version == before.version + 1);
  }
  SUBCASE("vanishing moments are flushed instead of going subnormal") {
    std::vector<double> p{0.5, 0.5};
    const std::vector<double> g{0.0, 1e-3};
    std::vector<double> m{1e-299, 1e-3};
    std::vector<double> v{1e-299, 1e-6};  // v decays by 0.999 per step
    const kernels::AdamCoefficients c{1e-3, 0.9, 0.999, 1e-8, 1.0, 1.0};
    for (int i = 0; i < 3000; ++i) kernels::adam_update(p, g, m, v, c, kernels::Exec::Serial);
    CHECK(m[0] == 0.0);
    CHECK(v[0] == 0.0);
    CHECK(std::isnormal(m[1]));
    CHECK(p[0] == 0.5);
  }
  SUBCASE("two-step trace matches exact arithmetic") {
    ActorCriticParams p(NetSizes{1, 1, 4});
    p.value_head.bias[0] = 1.0;
    auto g = p.zeros_like();
    auto opt = OptimizerState::for_params(p, 0.1);
    g.value_head.bias[0] = 2.0;
    adam_step(opt, p, g);
    CHECK(p.value_head.bias[0] == doctest::Approx(0.9000000004999999975).epsilon(1e-15));
    g.value_head.bias[0] = -1.0;
    adam_step(opt, p, g);
    CHECK(p.value_head.bias[0] == doctest::Approx(0.873366296702431357842).epsilon(1e-14));
  }
}

TEST_CASE("weight files") {
  Rng rng(8);
  auto p = init_params(rng, NetSizes::for_grid(5, 16), 5);
  perturb_biases(p, rng);
  const fs::path path = temp_file("weights.bin");
  save_params(p, path);

  SUBCASE("round trip is exact and gives identical outputs") {
    const auto q = load_params(path, 5);
    CHECK(q.same_values(p));
    CHECK(q.grid_side == 5);
    const auto f = centered_features(BeliefGrid(5), {1, 3});
    const auto a = forward(p, f);
    const auto b = forward(q, f);
    CHECK(a.probs == b.probs);
    CHECK(a.value == b.value);
  }
  SUBCASE("grid side mismatch names both shapes") {
    try {
      load_params(path, 7);
      FAIL("expected an error");
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      CHECK(msg.find('5') != std::string::npos);
      CHECK(msg.find('7') != std::string::npos);
    }
  }
  SUBCASE("truncated and padded files are rejected") {
    const auto size = fs::file_size(path);
    const fs::path cut = temp_file("cut.bin");
    fs::copy_file(path, cut, fs::copy_options::overwrite_existing);
    fs::resize_file(cut, size - 8);
    CHECK_THROWS_AS(load_params(cut), std::runtime_error);
    fs::resize_file(cut, 20);
    CHECK_THROWS_AS(load_params(cut), std::runtime_error);
    fs::copy_file(path, cut, fs::copy_options::overwrite_existing);
    std::ofstream(cut, std::ios::app | std::ios::binary).put('\0');
    CHECK_THROWS_AS(load_params(cut), std::runtime_error);
    fs::remove(cut);
  }
  SUBCASE("wrong magic is rejected") {
    const fs::path junk = temp_file("junk.bin");
    std::ofstream(junk, std::ios::binary) << "NOTAMAPNETWORK";
    CHECK_THROWS_AS(load_params(junk), std::runtime_error);
    fs::remove(junk);
  }
  fs::remove(path);
}
