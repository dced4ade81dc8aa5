#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cohort/eventlog.hpp"

namespace cohort {

/// Exact count/total ratio. Threshold tests go through meets() so that
/// 12 of 15 patients satisfies 0.8 without floating-point drift.
struct Fraction {
  std::size_t count = 0;
  std::size_t total = 0;

  double value() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
  }
  bool meets(double threshold) const noexcept;

  friend bool operator==(const Fraction&, const Fraction&) = default;
};

/// Smallest count c with c/total >= threshold (at least 1). A relative slack of
/// 1e-9 absorbs decimal thresholds such as 0.8 or 1.0 - 4 * 0.05.
std::size_t min_count_for(double threshold, std::size_t total);

/// Sorted, duplicate-free set of activities.
using Itemset = std::vector<ActivityId>;

struct FrequentPattern {
  Itemset items;
  Fraction support;
};

struct MiningResult {
  std::vector<FrequentPattern> patterns;
  double threshold = 1.0;
  std::size_t sample_size = 0;
};

/// Fraction of sample patients whose activity set contains every item.
/// Throws Error(input) on an empty sample.
Fraction support_of(std::span<const ActivityId> itemset,
                    std::span<const PatientProjection> sample);

/// Orders patterns by descending length, then descending support, then
/// lexicographic item list.
void sort_patterns(std::vector<FrequentPattern>& patterns);

/// All non-empty itemsets with support >= threshold, via FP-growth.
/// Throws Error(input) for an empty sample or a threshold outside (0, 1].
MiningResult fp_growth(std::span<const PatientProjection> sample, double threshold);

/// Same contract on bare transactions (each sorted and duplicate-free).
MiningResult fp_growth(std::span<const Itemset> transactions, double threshold);

/// Enumerates every subset of the sample's activity union. Refuses unions
/// larger than kBruteForceItemLimit items.
MiningResult brute_force_mine(std::span<const PatientProjection> sample, double threshold);

inline constexpr std::size_t kBruteForceItemLimit = 20;

/// The pattern select_pattern() would pick from fp_growth(sample, threshold):
/// longest, then highest support, then lexicographically smallest. Searches
/// closed itemsets depth-first with a length bound instead of materializing
/// every frequent itemset, so it stays cheap at very low thresholds.
/// Returns an empty pattern (support 0) when nothing is frequent.
FrequentPattern longest_frequent_pattern(std::span<const PatientProjection> sample,
                                         double threshold);

}  // namespace cohort
