#pragma once

#include <cstddef>
#include <span>

// Dense kernels behind the neural network layers. Each comes in two flavours:
// a *_reference version that evaluates the textbook formula one output at a
// time, and an OpenMP version with cache-friendly loop order. The OpenMP
// versions partition work so that every output element is owned by a single
// thread, which keeps results independent of the thread count.
namespace xtsc::kernels {

/// 1-D convolution over time with zero "same" padding (pad = width / 2).
/// x: in_channels x steps, weight: out_channels x in_channels x width,
/// y: out_channels x steps.
struct ConvShape {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t width = 1;
  std::size_t steps = 0;
};

void conv1d_forward_reference(const ConvShape& s, std::span<const double> x, std::span<const double> weight,
                              std::span<const double> bias, std::span<double> y);
void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> y);

/// Accumulates (+=) into dx, dweight and dbias. Empty spans are skipped.
void conv1d_backward_reference(const ConvShape& s, std::span<const double> x, std::span<const double> weight,
                               std::span<const double> dy, std::span<double> dx, std::span<double> dweight,
                               std::span<double> dbias);
void conv1d_backward(const ConvShape& s, std::span<const double> x, std::span<const double> weight,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dweight,
                     std::span<double> dbias);

/// y = W x for a rows x cols row-major W.
void matvec_reference(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> x,
                      std::span<double> y);
void matvec(std::size_t rows, std::size_t cols, std::span<const double> w, std::span<const double> x,
            std::span<double> y);

}  // namespace xtsc::kernels
