#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xtsc/baselines.hpp"
#include "xtsc/classifier.hpp"
#include "xtsc/explainers.hpp"
#include "xtsc/series.hpp"

namespace xtsc {

// ---------------------------------------------------------------------------
// Robustness

enum class Norm { L2, Linf };

struct RobustnessParams {
  double radius = 0.1;
  int n_perturbations = 10;
  std::uint64_t seed = 0;
  /// Used for both the input ball and the explanation distance.
  Norm norm = Norm::L2;
};

double norm(std::span<const double> v, Norm kind);

/// Perturbed copies x + eps of x. L2: eps = r s u / |u|_2 with u ~ U[-1, 1]^d
/// and s ~ U(0, 1). Linf: eps = r u.
std::vector<TimeSeries> perturbation_samples(const TimeSeries& x, const RobustnessParams& params);

struct SensitivityResult {
  double max = 0.0;
  double mean = 0.0;
  /// Explanation distance per perturbation.
  std::vector<double> distances;
  /// Argmax unchanged on at least half of the perturbations.
  bool prediction_stable = true;
};

/// Eq. 1 and Eq. 2 over one shared sample set. The explainer is called with
/// the same target and explainer seed at x and at every perturbation. Explainer
/// errors are rethrown with the perturbation index.
SensitivityResult sensitivity(const Explainer& explainer, const Classifier& model, const TimeSeries& x,
                              std::size_t target, const RobustnessParams& params, std::uint64_t explainer_seed = 0);
double sens_max(const Explainer& explainer, const Classifier& model, const TimeSeries& x, std::size_t target,
                const RobustnessParams& params, std::uint64_t explainer_seed = 0);
double sens_mean(const Explainer& explainer, const Classifier& model, const TimeSeries& x, std::size_t target,
                 const RobustnessParams& params, std::uint64_t explainer_seed = 0);

// ---------------------------------------------------------------------------
// Faithfulness

struct FaithfulnessParams {
  double subset_fraction = 0.1;
  int n_runs = 20;
  std::uint64_t seed = 0;
  Readout readout = Readout::Probability;
};

/// Number of cells per subset: round(fraction * N * T), at least one.
std::size_t subset_size(Shape shape, double fraction);

/// Eq. 3. One baseline draw per call; n_runs random cell subsets S. Pearson
/// correlation between sum_S a and f(x) - f(x with S taken from the
/// baseline), where f reads the class predicted at x. Zero variance in either
/// series raises DegenerateCorrelation.
double faithfulness_corr(const Classifier& model, const Matrix& attribution, const TimeSeries& x,
                         const BaselineSource& baseline, const FaithfulnessParams& params);

/// Raises DegenerateCorrelation when either input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);
/// Pearson correlation of average ranks.
double spearman(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Complexity and reliability

/// Eq. 4: entropy of |a| / sum|a|. All-zero input raises DegenerateAttribution.
double complexity(const Matrix& attribution);

/// Eq. 5 with K = |GT|: fraction of the K largest |a| cells inside the mask.
/// Ties keep feature-major cell order. Empty mask raises MaskInfeasible.
double relevance_rank_acc(const Matrix& attribution, const GroundTruthMask& mask);

/// Eq. 6 on |a|. Empty mask raises MaskInfeasible; all-zero input raises
/// DegenerateAttribution.
double relevance_mass_acc(const Matrix& attribution, const GroundTruthMask& mask);

}  // namespace xtsc
