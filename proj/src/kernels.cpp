#include "l2map/kernels.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace l2map::kernels {

namespace {

std::atomic<Exec> g_default_exec{Exec::Parallel};

// Shared loop bodies so both execution paths run the same arithmetic.
// Eight interleaved partial sums, combined in a fixed order. Lets the
// compiler vectorize without changing results between call sites.
inline double row_dot(const double* w, const double* x, std::size_t n) {
  constexpr std::size_t kLanes = 8;
  double acc[kLanes] = {};
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    for (std::size_t k = 0; k < kLanes; ++k) acc[k] += w[j + k] * x[j + k];
  }
  double tail = 0.0;
  for (; j < n; ++j) tail += w[j] * x[j];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

inline void outer_row(double* g_row, const double* gy, const double* x, std::size_t i, std::size_t out,
                      std::size_t in, std::size_t batch) {
  for (std::size_t t = 0; t < batch; ++t) {
    const double coef = gy[t * out + i];
    if (coef == 0.0) continue;
    const double* xt = x + t * in;
    for (std::size_t j = 0; j < in; ++j) g_row[j] += coef * xt[j];
  }
}

// Moments of parameters whose gradient stays zero (dead ReLU units) decay
// geometrically into the subnormal range, where arithmetic is ~30x slower.
// Anything this small moves a parameter by < 1e-290, so it is dropped.
constexpr double kMomentFloor = 1e-300;

inline void adam_one(double& p, double g, double& m, double& v, const AdamCoefficients& c) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g * g;
  m = std::abs(m) < kMomentFloor ? 0.0 : m;
  v = v < kMomentFloor ? 0.0 : v;
  const double m_hat = m / c.bias1;
  const double v_hat = v / c.bias2;
  p -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
}

}  // namespace

Exec default_exec() { return g_default_exec.load(std::memory_order_relaxed); }
void set_default_exec(Exec exec) { g_default_exec.store(exec, std::memory_order_relaxed); }

void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, Exec exec) {
  const std::size_t out = y.size();
  const std::size_t in = x.size();
  if (w.size() != out * in || b.size() != out) throw std::invalid_argument("dense_forward: shape mismatch");
  const double* wp = w.data();
  const double* xp = x.data();
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < out; ++i) y[i] = b[i] + row_dot(wp + i * in, xp, in);
    return;
  }
  const auto n = static_cast<std::ptrdiff_t>(out);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    y[k] = b[k] + row_dot(wp + k * in, xp, in);
  }
}

void dense_backward_input(std::span<const double> w, std::span<const double> gy, std::span<double> gx) {
  const std::size_t out = gy.size();
  const std::size_t in = gx.size();
  if (w.size() != out * in) throw std::invalid_argument("dense_backward_input: shape mismatch");
  for (std::size_t i = 0; i < out; ++i) {
    const double coef = gy[i];
    const double* row = w.data() + i * in;
    for (std::size_t j = 0; j < in; ++j) gx[j] += coef * row[j];
  }
}

void accumulate_outer(std::span<double> g, std::span<const double> gy, std::span<const double> x, std::size_t batch,
                      Exec exec) {
  if (batch == 0) return;
  const std::size_t out = gy.size() / batch;
  const std::size_t in = x.size() / batch;
  if (gy.size() != out * batch || x.size() != in * batch || g.size() != out * in) {
    throw std::invalid_argument("accumulate_outer: shape mismatch");
  }
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < out; ++i) outer_row(g.data() + i * in, gy.data(), x.data(), i, out, in, batch);
    return;
  }
  const auto n = static_cast<std::ptrdiff_t>(out);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    outer_row(g.data() + k * in, gy.data(), x.data(), k, out, in, batch);
  }
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 const AdamCoefficients& c, Exec exec) {
  const std::size_t n = param.size();
  if (grad.size() != n || m.size() != n || v.size() != n) throw std::invalid_argument("adam_update: shape mismatch");
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < n; ++i) adam_one(param[i], grad[i], m[i], v[i], c);
    return;
  }
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    adam_one(param[k], grad[k], m[k], v[k], c);
  }
}

double sum_squares(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

void scale(std::span<double> x, double factor) {
  for (double& v : x) v *= factor;
}

}  // namespace l2map::kernels
