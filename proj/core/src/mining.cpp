#include "cohort/mining.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>

#include "cohort/error.hpp"

namespace cohort {

bool Fraction::meets(double threshold) const noexcept {
  return count >= min_count_for(threshold, total);
}

std::size_t min_count_for(double threshold, std::size_t total) {
  const double scaled = threshold * static_cast<double>(total) * (1.0 - 1e-9);
  const auto needed = static_cast<std::size_t>(std::max(0.0, std::ceil(scaled)));
  return std::max<std::size_t>(needed, 1);
}

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    fail(ErrorKind::input,
         "support threshold must lie in (0, 1], got " + std::to_string(threshold));
  }
}

}  // namespace

Fraction support_of(std::span<const ActivityId> itemset,
                    std::span<const PatientProjection> sample) {
  if (sample.empty()) fail(ErrorKind::input, "support_of: empty sample");
  Itemset items(itemset.begin(), itemset.end());
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  Fraction f{0, sample.size()};
  for (const auto& p : sample) {
    if (std::includes(p.activities.begin(), p.activities.end(), items.begin(), items.end())) {
      ++f.count;
    }
  }
  return f;
}

void sort_patterns(std::vector<FrequentPattern>& patterns) {
  std::sort(patterns.begin(), patterns.end(),
            [](const FrequentPattern& x, const FrequentPattern& y) {
              if (x.items.size() != y.items.size()) return x.items.size() > y.items.size();
              if (x.support.count != y.support.count) return x.support.count > y.support.count;
              return x.items < y.items;
            });
}

// ---------------------------------------------------------------------------
// FP-growth

namespace {

using Item = std::uint32_t;

struct WeightedTransaction {
  std::vector<Item> items;
  std::size_t weight;
};

class FpTree {
 public:
  struct Node {
    Item item;
    std::size_t count;
    std::int32_t parent;
    std::int32_t first_child = -1;
    std::int32_t next_sibling = -1;
    std::int32_t next_same_item = -1;
  };

  struct Header {
    Item item;
    std::size_t count;
    std::int32_t head = -1;
  };

  // Keeps items with total weight >= min_count, ranked by descending count
  // (ties by item id), and inserts each transaction's frequent items in rank order.
  FpTree(const std::vector<WeightedTransaction>& transactions, std::size_t min_count) {
    std::unordered_map<Item, std::size_t> counts;
    for (const auto& t : transactions) {
      for (Item i : t.items) counts[i] += t.weight;
    }
    for (const auto& [item, count] : counts) {
      if (count >= min_count) header_.push_back(Header{item, count});
    }
    std::sort(header_.begin(), header_.end(), [](const Header& x, const Header& y) {
      return x.count != y.count ? x.count > y.count : x.item < y.item;
    });
    for (std::size_t r = 0; r < header_.size(); ++r) rank_.emplace(header_[r].item, r);

    nodes_.push_back(Node{0, 0, -1});
    std::vector<std::size_t> ranked;
    for (const auto& t : transactions) {
      ranked.clear();
      for (Item i : t.items) {
        if (auto it = rank_.find(i); it != rank_.end()) ranked.push_back(it->second);
      }
      std::sort(ranked.begin(), ranked.end());
      insert(ranked, t.weight);
    }
  }

  const std::vector<Header>& header() const noexcept { return header_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  bool single_path() const {
    for (const auto& n : nodes_) {
      if (n.first_child >= 0 && nodes_[n.first_child].next_sibling >= 0) return false;
    }
    return true;
  }

 private:
  void insert(const std::vector<std::size_t>& ranked, std::size_t weight) {
    std::int32_t current = 0;
    for (std::size_t r : ranked) {
      const Item item = header_[r].item;
      std::int32_t child = nodes_[current].first_child;
      while (child >= 0 && nodes_[child].item != item) child = nodes_[child].next_sibling;
      if (child < 0) {
        child = static_cast<std::int32_t>(nodes_.size());
        Node node{item, 0, current};
        node.next_sibling = nodes_[current].first_child;
        node.next_same_item = header_[r].head;
        nodes_.push_back(node);
        nodes_[current].first_child = child;
        header_[r].head = child;
      }
      nodes_[child].count += weight;
      current = child;
    }
  }

  std::vector<Header> header_;
  std::unordered_map<Item, std::size_t> rank_;
  std::vector<Node> nodes_;
};

class FpGrowth {
 public:
  FpGrowth(std::size_t min_count, std::size_t total) : min_count_(min_count), total_(total) {}

  void mine(const std::vector<WeightedTransaction>& transactions, std::vector<Item>& suffix) {
    const FpTree tree(transactions, min_count_);
    if (tree.header().empty()) return;
    if (tree.single_path()) {
      emit_single_path(tree, suffix);
      return;
    }
    // Least frequent item first: its conditional base is the smallest.
    const auto& header = tree.header();
    for (auto h = header.rbegin(); h != header.rend(); ++h) {
      suffix.push_back(h->item);
      emit(suffix, h->count);

      std::vector<WeightedTransaction> base;
      for (std::int32_t n = h->head; n >= 0; n = tree.nodes()[n].next_same_item) {
        WeightedTransaction prefix{{}, tree.nodes()[n].count};
        for (std::int32_t p = tree.nodes()[n].parent; p > 0; p = tree.nodes()[p].parent) {
          prefix.items.push_back(tree.nodes()[p].item);
        }
        if (!prefix.items.empty()) base.push_back(std::move(prefix));
      }
      if (!base.empty()) mine(base, suffix);
      suffix.pop_back();
    }
  }

  std::vector<FrequentPattern> take() { return std::move(out_); }

 private:
  void emit(const std::vector<Item>& items, std::size_t count) {
    FrequentPattern p;
    p.items.reserve(items.size());
    for (Item i : items) p.items.push_back(ActivityId{i});
    std::sort(p.items.begin(), p.items.end());
    p.support = Fraction{count, total_};
    out_.push_back(std::move(p));
  }

  // Every non-empty combination of path nodes, with the count of its deepest node.
  void emit_single_path(const FpTree& tree, std::vector<Item>& suffix) {
    std::vector<const FpTree::Node*> path;
    for (std::int32_t n = tree.nodes()[0].first_child; n >= 0; n = tree.nodes()[n].first_child) {
      path.push_back(&tree.nodes()[n]);
    }
    const std::size_t base = suffix.size();
    const auto combos = std::uint64_t{1} << path.size();
    for (std::uint64_t mask = 1; mask < combos; ++mask) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < path.size(); ++i) {
        if (mask >> i & 1) {
          suffix.push_back(path[i]->item);
          count = path[i]->count;
        }
      }
      emit(suffix, count);
      suffix.resize(base);
    }
  }

  std::size_t min_count_;
  std::size_t total_;
  std::vector<FrequentPattern> out_;
};

}  // namespace

MiningResult fp_growth(std::span<const Itemset> transactions, double threshold) {
  check_threshold(threshold);
  if (transactions.empty()) fail(ErrorKind::input, "fp_growth: empty sample");

  std::vector<WeightedTransaction> base;
  base.reserve(transactions.size());
  for (const auto& t : transactions) {
    WeightedTransaction w{{}, 1};
    w.items.reserve(t.size());
    for (ActivityId a : t) w.items.push_back(index(a));
    base.push_back(std::move(w));
  }

  FpGrowth miner(min_count_for(threshold, transactions.size()), transactions.size());
  std::vector<Item> suffix;
  miner.mine(base, suffix);

  MiningResult result{miner.take(), threshold, transactions.size()};
  sort_patterns(result.patterns);
  return result;
}

MiningResult fp_growth(std::span<const PatientProjection> sample, double threshold) {
  std::vector<Itemset> transactions;
  transactions.reserve(sample.size());
  for (const auto& p : sample) transactions.push_back(p.activities);
  return fp_growth(transactions, threshold);
}

// ---------------------------------------------------------------------------

MiningResult brute_force_mine(std::span<const PatientProjection> sample, double threshold) {
  check_threshold(threshold);
  if (sample.empty()) fail(ErrorKind::input, "brute_force_mine: empty sample");

  Itemset universe;
  for (const auto& p : sample) universe.insert(universe.end(), p.activities.begin(), p.activities.end());
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  if (universe.size() > kBruteForceItemLimit) {
    fail(ErrorKind::input, "brute_force_mine: " + std::to_string(universe.size()) +
                               " distinct activities exceeds the limit of " +
                               std::to_string(kBruteForceItemLimit));
  }

  std::vector<std::uint32_t> masks;
  masks.reserve(sample.size());
  for (const auto& p : sample) {
    std::uint32_t m = 0;
    for (ActivityId a : p.activities) {
      const auto pos = std::lower_bound(universe.begin(), universe.end(), a) - universe.begin();
      m |= std::uint32_t{1} << pos;
    }
    masks.push_back(m);
  }

  const std::size_t needed = min_count_for(threshold, sample.size());
  MiningResult result{{}, threshold, sample.size()};
  const std::uint32_t limit = std::uint32_t{1} << universe.size();
  for (std::uint32_t subset = 1; subset < limit; ++subset) {
    std::size_t count = 0;
    for (std::uint32_t m : masks) count += (m & subset) == subset;
    if (count < needed) continue;
    FrequentPattern p;
    for (std::size_t i = 0; i < universe.size(); ++i) {
      if (subset >> i & 1) p.items.push_back(universe[i]);
    }
    p.support = Fraction{count, sample.size()};
    result.patterns.push_back(std::move(p));
  }
  sort_patterns(result.patterns);
  return result;
}


// ---------------------------------------------------------------------------
// Longest-pattern search

namespace {

using Bits = std::vector<std::uint64_t>;

std::size_t popcount(const Bits& b) {
  std::size_t n = 0;
  for (auto w : b) n += static_cast<std::size_t>(__builtin_popcountll(w));
  return n;
}

Bits intersect(const Bits& x, const Bits& y) {
  Bits out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] & y[i];
  return out;
}

struct Candidate {
  ActivityId item;
  Bits tids;
  std::size_t count;
};

class LongestSearch {
 public:
  LongestSearch(std::size_t min_count, std::size_t total) : min_count_(min_count), total_(total) {}

  void run(Itemset prefix, std::size_t prefix_count, std::vector<Candidate> candidates) {
    // Perfect extensions belong to every longest pattern through this prefix.
    std::vector<Candidate> rest;
    rest.reserve(candidates.size());
    for (auto& c : candidates) {
      if (c.count == prefix_count) {
        prefix.push_back(c.item);
      } else {
        rest.push_back(std::move(c));
      }
    }
    std::sort(prefix.begin(), prefix.end());
    if (!prefix.empty()) offer(prefix, prefix_count);
    if (prefix.size() + rest.size() < best_.items.size()) return;

    for (std::size_t i = 0; i < rest.size(); ++i) {
      std::vector<Candidate> next;
      for (std::size_t j = i + 1; j < rest.size(); ++j) {
        Bits tids = intersect(rest[i].tids, rest[j].tids);
        const std::size_t count = popcount(tids);
        if (count >= min_count_) next.push_back(Candidate{rest[j].item, std::move(tids), count});
      }
      if (prefix.size() + 1 + next.size() < best_.items.size()) continue;
      Itemset extended = prefix;
      extended.push_back(rest[i].item);
      run(std::move(extended), rest[i].count, std::move(next));
    }
  }

  FrequentPattern take() { return std::move(best_); }

 private:
  void offer(const Itemset& items, std::size_t count) {
    const auto& b = best_;
    const bool better =
        items.size() != b.items.size()
            ? items.size() > b.items.size()
            : (count != b.support.count ? count > b.support.count : items < b.items);
    if (better) best_ = FrequentPattern{items, Fraction{count, total_}};
  }

  std::size_t min_count_;
  std::size_t total_;
  FrequentPattern best_{{}, Fraction{0, 0}};
};

}  // namespace

FrequentPattern longest_frequent_pattern(std::span<const PatientProjection> sample,
                                         double threshold) {
  check_threshold(threshold);
  if (sample.empty()) fail(ErrorKind::input, "longest_frequent_pattern: empty sample");

  const std::size_t n = sample.size();
  const std::size_t words = (n + 63) / 64;
  std::unordered_map<std::uint32_t, Bits> tids;
  for (std::size_t p = 0; p < n; ++p) {
    for (ActivityId a : sample[p].activities) {
      auto& bits = tids[index(a)];
      if (bits.empty()) bits.assign(words, 0);
      bits[p / 64] |= std::uint64_t{1} << (p % 64);
    }
  }

  const std::size_t min_count = min_count_for(threshold, n);
  std::vector<Candidate> candidates;
  for (auto& [item, bits] : tids) {
    const std::size_t count = popcount(bits);
    if (count >= min_count) candidates.push_back(Candidate{ActivityId{item}, std::move(bits), count});
  }
  // Rare items first keeps the candidate lists of deep branches short.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return x.count != y.count ? x.count < y.count : x.item < y.item;
  });

  LongestSearch search(min_count, n);
  search.run({}, n, std::move(candidates));
  auto best = search.take();
  best.support.total = n;
  return best;
}

}  // namespace cohort
