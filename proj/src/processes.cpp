#include "xtsc/processes.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "xtsc/error.hpp"

namespace xtsc {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void fill_channel(const GenerationSpec& spec, Rng& rng, std::span<double> out) {
  const ProcessParams& p = spec.params;
  const std::size_t T = spec.t_steps;
  switch (spec.process) {
    case ProcessKind::Gaussian:
      for (double& v : out) v = rng.normal();
      return;
    case ProcessKind::Harmonic:
      for (std::size_t k = 0; k < T; ++k) {
        out[k] = std::sin(kTwoPi * p.harmonic_frequency * time_point(k, T)) + rng.normal();
      }
      return;
    case ProcessKind::PseudoPeriodic:
      // Amplitude and frequency are redrawn at every step.
      for (std::size_t k = 0; k < T; ++k) {
        const double amplitude = rng.normal(p.amplitude_mean, p.amplitude_sd);
        const double frequency = rng.normal(p.frequency_mean, p.frequency_sd);
        out[k] = amplitude * std::sin(kTwoPi * frequency * time_point(k, T)) + rng.normal();
      }
      return;
    case ProcessKind::Autoregressive:
    case ProcessKind::ContinuousAutoregressive: {
      const bool continuous = spec.process == ProcessKind::ContinuousAutoregressive;
      const double drift = p.sigma * (1.0 - p.phi) * (1.0 - p.phi);
      const std::size_t total = static_cast<std::size_t>(p.burn_in) + T;
      double x = 0.0;
      for (std::size_t k = 0; k < total; ++k) {
        x = p.phi * x + rng.normal();
        if (continuous) x += drift * rng.normal();
        if (k >= static_cast<std::size_t>(p.burn_in)) out[k - p.burn_in] = x;
      }
      return;
    }
    case ProcessKind::Narma: {
      // Divergent trajectories are discarded and redrawn from the continuing stream.
      NarmaTrace trace = simulate_narma(p, T, rng);
      while (narma_diverged(trace)) trace = simulate_narma(p, T, rng);
      const std::size_t offset = trace.latent.size() - T;
      for (std::size_t k = 0; k < T; ++k) out[k] = trace.latent[offset + k] + trace.noise[offset + k];
      return;
    }
  }
}

}  // namespace

std::string_view to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::Gaussian: return "Gaussian";
    case ProcessKind::Harmonic: return "Harmonic";
    case ProcessKind::PseudoPeriodic: return "PseudoPeriodic";
    case ProcessKind::Autoregressive: return "Autoregressive";
    case ProcessKind::ContinuousAutoregressive: return "ContinuousAutoregressive";
    case ProcessKind::Narma: return "NARMA";
  }
  return "Unknown";
}

ProcessKind parse_process_kind(std::string_view name) {
  for (ProcessKind k : kAllProcesses) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorCode::FormatError, "unknown process kind '" + std::string(name) + "'");
}

double time_point(std::size_t k, std::size_t t_steps) noexcept {
  return static_cast<double>(k) / static_cast<double>(t_steps);
}

void validate(const GenerationSpec& spec) {
  if (spec.t_steps < 1 || spec.n_features < 1) {
    fail(ErrorCode::InvalidShape, "generation shape must be positive, got " + to_string(spec.shape()));
  }
  const ProcessParams& p = spec.params;
  const bool autoregressive =
      spec.process == ProcessKind::Autoregressive || spec.process == ProcessKind::ContinuousAutoregressive;
  if (autoregressive && !(std::abs(p.phi) < 1.0)) {
    fail(ErrorCode::NonStationaryParameter, "|phi| must be < 1, got " + std::to_string(p.phi));
  }
  if (p.burn_in < 0) fail(ErrorCode::InvalidParameter, "burn_in must be >= 0");
  if (p.amplitude_sd < 0 || p.frequency_sd < 0 || p.sigma < 0) {
    fail(ErrorCode::InvalidParameter, "standard deviations must be >= 0");
  }
  if (spec.process == ProcessKind::Narma && (p.narma_order < 1 || !(p.narma_input_high > 0))) {
    fail(ErrorCode::InvalidParameter, "NARMA needs order >= 1 and a positive input bound");
  }
}

TimeSeries generate_base(const GenerationSpec& spec) {
  validate(spec);
  TimeSeries out(spec.shape());
  for (std::size_t i = 0; i < spec.n_features; ++i) {
    Rng rng(spec.seed, i);
    fill_channel(spec, rng, out.row(i));
  }
  return out;
}

TimeSeries sample_reference(const GenerationSpec& spec, Shape shape, std::uint64_t seed) {
  if (shape != spec.shape()) {
    fail(ErrorCode::InvalidShape,
         "reference shape " + to_string(shape) + " does not match generating spec " + to_string(spec.shape()));
  }
  GenerationSpec fresh = spec;
  fresh.seed = seed;
  return generate_base(fresh);
}

bool narma_diverged(const NarmaTrace& trace) noexcept {
  for (double v : trace.latent) {
    if (!(std::abs(v) <= kNarmaBound)) return true;
  }
  return false;
}

NarmaTrace simulate_narma(const ProcessParams& p, std::size_t t_steps, Rng& rng) {
  const std::size_t total = static_cast<std::size_t>(p.burn_in) + t_steps;
  const std::size_t order = static_cast<std::size_t>(p.narma_order);
  NarmaTrace trace;
  trace.latent.assign(total, 0.0);
  trace.input.resize(total);
  trace.noise.resize(total);
  for (std::size_t k = 0; k < total; ++k) {
    trace.input[k] = rng.uniform(0.0, p.narma_input_high);
    trace.noise[k] = rng.normal();
    const double prev = k > 0 ? trace.latent[k - 1] : 0.0;
    double window = 0.0;
    for (std::size_t i = 0; i < order && i + 1 <= k; ++i) window += trace.latent[k - 1 - i];
    const double lagged_input = k + 1 >= order ? trace.input[k + 1 - order] : 0.0;
    trace.latent[k] = 0.3 * prev + 0.05 * prev * window + 1.5 * lagged_input * trace.input[k] + 0.1;
  }
  return trace;
}

}  // namespace xtsc
