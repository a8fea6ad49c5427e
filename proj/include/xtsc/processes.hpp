#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "xtsc/rng.hpp"
#include "xtsc/series.hpp"

namespace xtsc {

enum class ProcessKind { Gaussian, Harmonic, PseudoPeriodic, Autoregressive, ContinuousAutoregressive, Narma };

inline constexpr std::array<ProcessKind, 6> kAllProcesses = {
    ProcessKind::Gaussian,       ProcessKind::Harmonic,
    ProcessKind::PseudoPeriodic, ProcessKind::Autoregressive,
    ProcessKind::ContinuousAutoregressive, ProcessKind::Narma,
};

std::string_view to_string(ProcessKind kind);
/// Throws FormatError for unknown names.
ProcessKind parse_process_kind(std::string_view name);

struct ProcessParams {
  double phi = 0.9;                 // AR, CAR
  double sigma = 0.1;               // CAR
  double harmonic_frequency = 2.0;  // Harmonic
  double amplitude_mean = 0.0;      // PseudoPeriodic A_t ~ N(mean, sd)
  double amplitude_sd = 0.5;
  double frequency_mean = 2.0;      // PseudoPeriodic f_t ~ N(mean, sd)
  double frequency_sd = 0.01;
  int narma_order = 10;
  double narma_input_high = 0.5;    // U ~ Uniform(0, high)
  int burn_in = 100;                // AR, CAR, NARMA

  bool operator==(const ProcessParams&) const = default;
};

struct GenerationSpec {
  ProcessKind process = ProcessKind::Gaussian;
  ProcessParams params;
  std::uint64_t seed = 0;
  std::size_t t_steps = 50;
  std::size_t n_features = 1;

  Shape shape() const noexcept { return {n_features, t_steps}; }
  bool operator==(const GenerationSpec&) const = default;
};

/// Sampling time of step k for the periodic processes: t_k = k / T.
double time_point(std::size_t k, std::size_t t_steps) noexcept;

/// Throws InvalidShape / NonStationaryParameter / InvalidParameter.
void validate(const GenerationSpec& spec);

/// N independent channels of the chosen process. Channel i draws from stream i
/// of Rng(spec.seed), so the result is a pure function of the spec.
TimeSeries generate_base(const GenerationSpec& spec);

/// Fresh uninformative draw from the same process. The caller normalizes it with
/// the owning dataset's parameters before use as a reference baseline.
TimeSeries sample_reference(const GenerationSpec& spec, Shape shape, std::uint64_t seed);

/// Full NARMA simulation of one channel, including burn-in. latent follows the
/// noise-free recurrence; the observed channel is latent + noise over the last
/// t_steps entries.
struct NarmaTrace {
  std::vector<double> latent;
  std::vector<double> input;
  std::vector<double> noise;
};

NarmaTrace simulate_narma(const ProcessParams& params, std::size_t t_steps, Rng& rng);

/// Latent magnitude beyond which a NARMA trajectory counts as divergent.
inline constexpr double kNarmaBound = 10.0;
bool narma_diverged(const NarmaTrace& trace) noexcept;

}  // namespace xtsc
