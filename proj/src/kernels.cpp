#include "xtsc/kernels.hpp"

#include <algorithm>

namespace xtsc::kernels {
namespace {

// Range of output steps t for which t + k - pad is a valid input step.
inline void valid_range(std::size_t k, std::size_t pad, std::size_t steps, std::size_t& lo, std::size_t& hi) {
  lo = k < pad ? pad - k : 0;
  hi = steps + pad > k ? std::min(steps, steps + pad - k) : 0;
}

// Parallel regions only pay off once there is enough work per thread.
constexpr std::size_t kParallelWork = 1 << 15;

}  // namespace

void conv1d_forward_reference(const ConvShape& s, std::span<const double> x, std::span<const double> weight,
                              std::span<const double> bias, std::span<double> y) {
  const long pad = static_cast<long>(s.width / 2);
  for (std::size_t co = 0; co < s.out_channels; ++co) {
    for (std::size_t t = 0; t < s.steps; ++t) {
      double acc = bias.empty() ? 0.0 : bias[co];
      for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
        for (std::size_t k = 0; k < s.width; ++k) {
          const long src = static_cast<long>(t) + static_cast<long>(k) - pad;
          if (src < 0 || src >= static_cast<long>(s.steps)) continue;
          acc += weight[(co * s.in_channels + ci) * s.width + k] * x[ci * s.steps + static_cast<std::size_t>(src)];
        }
      }
      y[co * s.steps + t] = acc;
    }
  }
}

void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> y) {
  const std::size_t pad = s.width / 2;
  const long n_out = static_cast<long>(s.out_channels);
  const bool parallel = s.out_channels * s.in_channels * s.width * s.steps >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (long co_l = 0; co_l < n_out; ++co_l) {
    const std::size_t co = static_cast<std::size_t>(co_l);
    double* out = y.data() + co * s.steps;
    std::fill(out, out + s.steps, bias.empty() ? 0.0 : bias[co]);
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      const double* in = x.data() + ci * s.steps;
      const double* w = weight.data() + (co * s.in_channels + ci) * s.width;
      for (std::size_t k = 0; k < s.width; ++k) {
        std::size_t lo, hi;
        valid_range(k, pad, s.steps, lo, hi);
        const double wk = w[k];
        for (std::size_t t = lo; t < hi; ++t) out[t] += wk * in[t + k - pad];
      }
    }
  }
}

void conv1d_backward_reference(const ConvShape& s, std::span<const double> x, std::span<const double> weight,
                               std::span<const double> dy, std::span<double> dx, std::span<double> dweight,
                               std::span<double> dbias) {
  const long pad = static_cast<long>(s.width / 2);
  const long steps = static_cast<long>(s.steps);
  for (std::size_t co = 0; co < s.out_channels; ++co) {
    if (!dbias.empty()) {
      double acc = 0.0;
      for (std::size_t t = 0; t < s.steps; ++t) acc += dy[co * s.steps + t];
      dbias[co] += acc;
    }
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      for (std::size_t k = 0; k < s.width; ++k) {
        if (dweight.empty()) continue;
        double acc = 0.0;
        for (long t = 0; t < steps; ++t) {
          const long src = t + static_cast<long>(k) - pad;
          if (src < 0 || src >= steps) continue;
          acc += dy[co * s.steps + static_cast<std::size_t>(t)] * x[ci * s.steps + static_cast<std::size_t>(src)];
        }
        dweight[(co * s.in_channels + ci) * s.width + k] += acc;
      }
    }
  }
  if (dx.empty()) return;
  for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
    for (long u = 0; u < steps; ++u) {
      double acc = 0.0;
      for (std::size_t co = 0; co < s.out_channels; ++co) {
        for (std::size_t k = 0; k < s.width; ++k) {
          const long t = u - static_cast<long>(k) + pad;
          if (t < 0 || t >= steps) continue;
          acc += weight[(co * s.in_channels + ci) * s.width + k] * dy[co * s.steps + static_cast<std::size_t>(t)];
        }
      }
      dx[ci * s.steps + static_cast<std::size_t>(u)] += acc;
    }
  }
}

void conv1d_backward(const ConvShape& s, std::span<const double> x, std::span<const double> weight,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dweight,
                     std::span<double> dbias) {
  const std::size_t pad = s.width / 2;
  const bool parallel = s.out_channels * s.in_channels * s.width * s.steps >= kParallelWork;

  // Weight and bias gradients: each output channel owns its slice.
  const long n_out = static_cast<long>(s.out_channels);
#pragma omp parallel for schedule(static) if (parallel)
  for (long co_l = 0; co_l < n_out; ++co_l) {
    const std::size_t co = static_cast<std::size_t>(co_l);
    const double* g = dy.data() + co * s.steps;
    if (!dbias.empty()) {
      double acc = 0.0;
      for (std::size_t t = 0; t < s.steps; ++t) acc += g[t];
      dbias[co] += acc;
    }
    if (dweight.empty()) continue;
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      const double* in = x.data() + ci * s.steps;
      double* dw = dweight.data() + (co * s.in_channels + ci) * s.width;
      for (std::size_t k = 0; k < s.width; ++k) {
        std::size_t lo, hi;
        valid_range(k, pad, s.steps, lo, hi);
        double acc = 0.0;
        for (std::size_t t = lo; t < hi; ++t) acc += g[t] * in[t + k - pad];
        dw[k] += acc;
      }
    }
  }

  if (dx.empty()) return;
  // Input gradient: each input channel owns its row.
  const long n_in = static_cast<long>(s.in_channels);
#pragma omp parallel for schedule(static) if (parallel)
  for (long ci_l = 0; ci_l < n_in; ++ci_l) {
    const std::size_t ci = static_cast<std::size_t>(ci_l);
    double* out = dx.data() + ci * s.steps;
    for (std::size_t co = 0; co < s.out_channels; ++co) {
      const double* g = dy.data() + co * s.steps;
      const double* w = weight.data() + (co * s.in_channels + ci) * s.width;
      for (std::size_t k = 0; k < s.width; ++k) {
        std::size_t lo, hi;
        valid_range(k, pad, s.steps, lo, hi);
        const double wk = w[k];
        for (std::size_t t = lo; t < hi; ++t) out[t + k - pad] += wk * g[t];
      }
    }
  }
}

void matvec_reference(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> x,
                      std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * x[c];
    y[r] = acc;
  }
}

void matvec(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> x,
            std::span<double> y) {
  const long n = static_cast<long>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (long r = 0; r < n; ++r) {
    const double* row = w.data() + static_cast<std::size_t>(r) * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[static_cast<std::size_t>(r)] = acc;
  }
}

}  // namespace xtsc::kernels
