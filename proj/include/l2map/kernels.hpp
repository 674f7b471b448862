#pragma once

#include <cstddef>
#include <span>

// Dense kernels behind the actor-critic. Each kernel has a serial reference
// and an OpenMP version. The parallel versions split work over output rows or
// elements only, so they produce bit-identical results to the serial ones.

namespace l2map::kernels {

enum class Exec { Serial, Parallel };

/// Kernels called without an explicit Exec use this (default Parallel).
Exec default_exec();
void set_default_exec(Exec exec);

/// y = W x + b, W row-major [out x in].
void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, Exec exec);
inline void dense_forward(std::span<const double> w, std::span<const double> b, std::span<const double> x,
                          std::span<double> y) {
  dense_forward(w, b, x, y, default_exec());
}

/// gx += W^T gy.
void dense_backward_input(std::span<const double> w, std::span<const double> gy, std::span<double> gx);

/// G[i, :] += sum_t gy[t][i] * x[t][:] for a batch of `batch` rows.
/// gy is [batch x out], x is [batch x in], G is [out x in].
void accumulate_outer(std::span<double> g, std::span<const double> gy, std::span<const double> x, std::size_t batch,
                      Exec exec);
inline void accumulate_outer(std::span<double> g, std::span<const double> gy, std::span<const double> x,
                             std::size_t batch) {
  accumulate_outer(g, gy, x, batch, default_exec());
}

/// One bias-corrected Adam update of `param` in place.
struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 const AdamCoefficients& c, Exec exec);
inline void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                        std::span<double> v, const AdamCoefficients& c) {
  adam_update(param, grad, m, v, c, default_exec());
}

double sum_squares(std::span<const double> x);
void scale(std::span<double> x, double factor);

}  // namespace l2map::kernels
