#include "xtsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xtsc/error.hpp"
#include "xtsc/rng.hpp"

namespace xtsc {

double norm(std::span<const double> v, Norm kind) {
  if (kind == Norm::Linf) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  }
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

std::vector<TimeSeries> perturbation_samples(const TimeSeries& x, const RobustnessParams& params) {
  if (!(params.radius >= 0.0)) fail(ErrorCode::InvalidParameter, "robustness radius must be nonnegative");
  if (params.n_perturbations < 1) fail(ErrorCode::InvalidParameter, "robustness needs at least one perturbation");
  Rng rng(params.seed, 0x726F62ull);
  std::vector<TimeSeries> out;
  out.reserve(static_cast<std::size_t>(params.n_perturbations));
  std::vector<double> u(x.size());
  for (int k = 0; k < params.n_perturbations; ++k) {
    for (double& e : u) e = rng.uniform(-1.0, 1.0);
    double scale = params.radius;
    if (params.norm == Norm::L2) {
      const double len = norm(u, Norm::L2);
      scale = len > 0.0 ? params.radius * rng.uniform() / len : 0.0;
    }
    TimeSeries p = x;
    for (std::size_t c = 0; c < x.size(); ++c) p[c] += scale * u[c];
    out.push_back(std::move(p));
  }
  return out;
}

SensitivityResult sensitivity(const Explainer& explainer, const Classifier& model, const TimeSeries& x,
                              std::size_t target, const RobustnessParams& params, std::uint64_t explainer_seed) {
  const Matrix reference = explainer.explain(model, x, target, explainer_seed).scores;
  const std::size_t predicted = model.predict(x);
  const auto samples = perturbation_samples(x, params);

  SensitivityResult out;
  out.distances.reserve(samples.size());
  std::size_t unchanged = 0;
  std::vector<double> diff(x.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    Matrix e;
    try {
      e = explainer.explain(model, samples[k], target, explainer_seed).scores;
    } catch (const Error& err) {
      fail(err.code(), "perturbation " + std::to_string(k) + ": " + err.what());
    }
    require_shape(e.shape(), reference.shape(), "perturbed explanation");
    for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = e[c] - reference[c];
    out.distances.push_back(norm(diff, params.norm));
    unchanged += model.predict(samples[k]) == predicted;
  }
  out.max = *std::max_element(out.distances.begin(), out.distances.end());
  out.mean = std::accumulate(out.distances.begin(), out.distances.end(), 0.0) /
             static_cast<double>(out.distances.size());
  // The mean of a set never exceeds its maximum, but rounding can push it a
  // hair above when every distance is equal.
  out.mean = std::min(out.mean, out.max);
  out.prediction_stable = 2 * unchanged >= samples.size();
  return out;
}

double sens_max(const Explainer& explainer, const Classifier& model, const TimeSeries& x, std::size_t target,
                const RobustnessParams& params, std::uint64_t explainer_seed) {
  return sensitivity(explainer, model, x, target, params, explainer_seed).max;
}

double sens_mean(const Explainer& explainer, const Classifier& model, const TimeSeries& x, std::size_t target,
                 const RobustnessParams& params, std::uint64_t explainer_seed) {
  return sensitivity(explainer, model, x, target, params, explainer_seed).mean;
}

std::size_t subset_size(Shape shape, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorCode::InvalidParameter, "subset fraction must lie in (0, 1)");
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(shape.cells())));
  return std::clamp<std::size_t>(k, 1, shape.cells());
}

double faithfulness_corr(const Classifier& model, const Matrix& attribution, const TimeSeries& x,
                         const BaselineSource& baseline, const FaithfulnessParams& params) {
  require_shape(attribution.shape(), x.shape(), "attribution");
  if (params.n_runs < 2) fail(ErrorCode::InvalidParameter, "faithfulness needs at least two subsets");
  const std::size_t k = subset_size(x.shape(), params.subset_fraction);
  const TimeSeries ref = baseline.sample(derive_seed(params.seed, {0x626173ull}));
  require_shape(ref.shape(), x.shape(), "faithfulness baseline");

  const std::size_t cls = model.predict(x);
  const double original = model.readout(x, cls, params.readout);
  Rng rng(params.seed, 0x666169ull);
  std::vector<std::size_t> cells(x.size());
  std::vector<double> sums;
  std::vector<double> drops;
  TimeSeries masked = x;
  for (int run = 0; run < params.n_runs; ++run) {
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k entries form a uniform subset.
    for (std::size_t j = 0; j < k; ++j) std::swap(cells[j], cells[j + rng.below(cells.size() - j)]);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      s += attribution[cells[j]];
      masked[cells[j]] = ref[cells[j]];
    }
    sums.push_back(s);
    drops.push_back(original - model.readout(masked, cls, params.readout));
    for (std::size_t j = 0; j < k; ++j) masked[cells[j]] = x[cells[j]];
  }
  return pearson(sums, drops);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) fail(ErrorCode::InvalidParameter, "correlation needs two equal series");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) fail(ErrorCode::DegenerateCorrelation, "zero variance across subsets");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return v[l] < v[r]; });
  std::vector<double> ranks(v.size());
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    while (hi + 1 < order.size() && v[order[hi + 1]] == v[order[lo]]) ++hi;
    const double r = 0.5 * static_cast<double>(lo + hi) + 1.0;
    for (std::size_t k = lo; k <= hi; ++k) ranks[order[k]] = r;
    lo = hi + 1;
  }
  return ranks;
}

double abs_total(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += std::abs(v);
  return s;
}

void require_mask(const Matrix& a, const GroundTruthMask& mask) {
  require_shape(mask.shape(), a.shape(), "ground-truth mask");
  if (mask.empty()) fail(ErrorCode::MaskInfeasible, "ground-truth mask is empty");
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

double complexity(const Matrix& attribution) {
  const double total = abs_total(attribution);
  if (!(total > 0.0)) fail(ErrorCode::DegenerateAttribution, "attribution is all zero");
  double h = 0.0;
  for (double v : attribution.values()) {
    const double p = std::abs(v) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double relevance_rank_acc(const Matrix& attribution, const GroundTruthMask& mask) {
  require_mask(attribution, mask);
  const std::size_t k = mask.count();
  std::vector<std::size_t> order(attribution.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return std::abs(attribution[l]) > std::abs(attribution[r]);
  });
  std::size_t hits = 0;
  for (std::size_t j = 0; j < k; ++j) hits += mask[order[j]];
  return static_cast<double>(hits) / static_cast<double>(k);
}

double relevance_mass_acc(const Matrix& attribution, const GroundTruthMask& mask) {
  require_mask(attribution, mask);
  const double total = abs_total(attribution);
  if (!(total > 0.0)) fail(ErrorCode::DegenerateAttribution, "attribution is all zero");
  double inside = 0.0;
  for (std::size_t c = 0; c < attribution.size(); ++c)
    if (mask[c]) inside += std::abs(attribution[c]);
  return std::min(inside / total, 1.0);
}

}  // namespace xtsc
