#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cohort {

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  double n = 1.0;  // F-measure weight
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t group_size = 0;  // |Ĝ|
  std::size_t truth_size = 0;  // |G|
  bool empty_prediction = false;
};

/// Precision, recall and the weighted F-measure
/// (1 + n^2) P R / (n^2 P + R) of a prediction against ground truth.
/// Precision of an empty prediction is reported as 0 with empty_prediction set.
/// Throws Error(input) on empty truth or a negative weight.
EvalReport evaluate(std::span<const std::string> predicted, std::span<const std::string> truth,
                    double n = 1.0);

/// Recomputes the F-measure from a precision/recall pair (0 when both are 0).
double f_measure(double precision, double recall, double n = 1.0);

/// Positive sample drawn from the ground truth and split into a mining half
/// and a held-out half.
struct SamplePlan {
  std::vector<std::string> sample;   // sorted
  std::vector<std::string> train;    // sorted
  std::vector<std::string> holdout;  // sorted; equals train when optimistic
  std::uint64_t seed = 0;
  double split = 0.5;
  bool optimistic = false;  // split == 1: recall estimated on the mining half
};

/// Uniform draw without replacement, deterministic per seed. The train part
/// gets ceil(size * split) patients, so odd sizes give train the extra one.
/// split == 1 keeps the whole sample for training and reuses it as holdout.
/// Throws Error(input) when size < 2, size > |truth|, or split is outside (0, 1].
SamplePlan draw_sample(std::span<const std::string> truth, std::size_t size, std::uint64_t seed,
                       double split = 0.5);

/// Spearman rank correlation with average ranks for ties.
/// Throws Error(input) on length mismatch, fewer than two values, or a
/// constant sequence.
double spearman(std::span<const double> xs, std::span<const double> ys);

/// Average (fractional) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace cohort
