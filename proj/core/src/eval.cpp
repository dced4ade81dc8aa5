#include "cohort/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cohort/error.hpp"

namespace cohort {

namespace {

std::vector<std::string> sorted_unique(std::span<const std::string> ids) {
  std::vector<std::string> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double f_measure(double precision, double recall, double n) {
  const double n2 = n * n;
  const double denominator = n2 * precision + recall;
  if (denominator <= 0.0) return 0.0;
  return (1.0 + n2) * precision * recall / denominator;
}

EvalReport evaluate(std::span<const std::string> predicted, std::span<const std::string> truth,
                    double n) {
  if (truth.empty()) fail(ErrorKind::input, "evaluate: ground truth is empty");
  if (!(n >= 0.0)) fail(ErrorKind::input, "evaluate: F-measure weight must be non-negative");
  const auto pred = sorted_unique(predicted);
  const auto gold = sorted_unique(truth);

  std::vector<std::string> overlap;
  std::set_intersection(pred.begin(), pred.end(), gold.begin(), gold.end(),
                        std::back_inserter(overlap));

  EvalReport r;
  r.n = n;
  r.group_size = pred.size();
  r.truth_size = gold.size();
  r.true_positives = overlap.size();
  r.false_positives = pred.size() - overlap.size();
  r.false_negatives = gold.size() - overlap.size();
  r.empty_prediction = pred.empty();
  r.precision = pred.empty() ? 0.0
                             : static_cast<double>(r.true_positives) /
                                   static_cast<double>(r.group_size);
  r.recall = static_cast<double>(r.true_positives) / static_cast<double>(r.truth_size);
  r.f_measure = f_measure(r.precision, r.recall, n);
  return r;
}

SamplePlan draw_sample(std::span<const std::string> truth, std::size_t size, std::uint64_t seed,
                       double split) {
  const auto population = sorted_unique(truth);
  if (size < 2) fail(ErrorKind::input, "sample size must be at least 2");
  if (size > population.size()) {
    fail(ErrorKind::input, "sample size " + std::to_string(size) + " exceeds the " +
                               std::to_string(population.size()) + " ground-truth members");
  }
  if (!(split > 0.0 && split <= 1.0)) fail(ErrorKind::input, "split must lie in (0, 1]");

  std::mt19937_64 rng(seed);
  std::vector<std::string> drawn;
  drawn.reserve(size);
  std::sample(population.begin(), population.end(), std::back_inserter(drawn), size, rng);
  std::shuffle(drawn.begin(), drawn.end(), rng);

  SamplePlan plan;
  plan.seed = seed;
  plan.split = split;
  plan.sample = drawn;
  std::sort(plan.sample.begin(), plan.sample.end());
  if (split >= 1.0) {
    plan.optimistic = true;
    plan.train = plan.sample;
    plan.holdout = plan.sample;
    return plan;
  }
  auto train_size = static_cast<std::size_t>(std::ceil(static_cast<double>(size) * split - 1e-9));
  train_size = std::clamp<std::size_t>(train_size, 1, size - 1);
  plan.train.assign(drawn.begin(), drawn.begin() + static_cast<std::ptrdiff_t>(train_size));
  plan.holdout.assign(drawn.begin() + static_cast<std::ptrdiff_t>(train_size), drawn.end());
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.holdout.begin(), plan.holdout.end());
  return plan;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) fail(ErrorKind::input, "spearman: sequences differ in length");
  if (xs.size() < 2) fail(ErrorKind::input, "spearman: need at least two observations");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(xs) || constant(ys)) fail(ErrorKind::input, "spearman: constant sequence");

  // Pearson correlation of the rank vectors handles ties exactly.
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace cohort
