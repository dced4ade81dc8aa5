#include "cohort/groupdef.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "cohort/error.hpp"
#include "cohort/version.hpp"

namespace cohort {

namespace {
__extension__ typedef unsigned __int128 Wide;
}  // namespace

void validate(const GroupDefinition& def) {
  if (def.pattern.empty()) fail(ErrorKind::input, "definition pattern is empty");
  auto in_unit = [](double phi) { return phi > 0.0 && phi <= 1.0; };
  if (!in_unit(def.phi_a) || !in_unit(def.phi_d)) {
    fail(ErrorKind::input, "definition thresholds must lie in (0, 1]");
  }
  if (def.alpha_f > def.pattern.size()) {
    fail(ErrorKind::input, "alpha_f exceeds the pattern size");
  }
  if (def.alpha_d > def.dbcs.size()) fail(ErrorKind::input, "alpha_d exceeds the code-set size");
  if (!std::is_sorted(def.pattern.begin(), def.pattern.end()) ||
      std::adjacent_find(def.pattern.begin(), def.pattern.end()) != def.pattern.end() ||
      !std::is_sorted(def.dbcs.begin(), def.dbcs.end()) ||
      std::adjacent_find(def.dbcs.begin(), def.dbcs.end()) != def.dbcs.end()) {
    fail(ErrorKind::input, "definition labels must be sorted and unique");
  }
}

Itemset select_pattern(const MiningResult& result) {
  if (result.patterns.empty()) {
    fail(ErrorKind::empty_pattern,
         "no frequent pattern at phi_a=" + std::to_string(result.threshold) +
             "; relax the activity threshold");
  }
  // Canonical order puts the selected pattern first, but do not rely on callers
  // having sorted a hand-built result.
  const auto best = std::min_element(
      result.patterns.begin(), result.patterns.end(),
      [](const FrequentPattern& x, const FrequentPattern& y) {
        if (x.items.size() != y.items.size()) return x.items.size() > y.items.size();
        // Compare supports exactly; patterns may come from different denominators.
        const auto lhs = static_cast<Wide>(x.support.count) * y.support.total;
        const auto rhs = static_cast<Wide>(y.support.count) * x.support.total;
        if (lhs != rhs) return lhs > rhs;
        return x.items < y.items;
      });
  return best->items;
}

Fraction dbc_support(CodeId code, std::span<const ActivityId> pattern,
                     std::span<const PatientProjection> sample) {
  if (sample.empty()) fail(ErrorKind::input, "dbc_support: empty sample");
  Fraction f{0, sample.size()};
  for (const auto& p : sample) {
    const bool hit = std::any_of(pattern.begin(), pattern.end(), [&](ActivityId a) {
      return std::binary_search(p.cooccurrence.begin(), p.cooccurrence.end(),
                                std::pair{a, code});
    });
    f.count += hit;
  }
  return f;
}

std::vector<CodeId> select_dbcs(std::span<const ActivityId> pattern,
                                std::span<const PatientProjection> sample, double phi_d) {
  if (sample.empty()) fail(ErrorKind::input, "select_dbcs: empty sample");
  if (!(phi_d > 0.0 && phi_d <= 1.0)) {
    fail(ErrorKind::input, "phi_d must lie in (0, 1], got " + std::to_string(phi_d));
  }
  std::vector<CodeId> observed;
  for (const auto& p : sample) observed.insert(observed.end(), p.dbcs.begin(), p.dbcs.end());
  std::sort(observed.begin(), observed.end());
  observed.erase(std::unique(observed.begin(), observed.end()), observed.end());

  std::vector<CodeId> selected;
  for (CodeId d : observed) {
    if (dbc_support(d, pattern, sample).meets(phi_d)) selected.push_back(d);
  }
  return selected;
}

// ---------------------------------------------------------------------------

void validate(const RelaxationOptions& options) {
  if (!(options.step > 0.0 && options.step < 1.0)) {
    fail(ErrorKind::input, "relaxation step must lie in (0, 1), got " + std::to_string(options.step));
  }
  if (!(options.start > 0.0 && options.start <= 1.0)) {
    fail(ErrorKind::input, "relaxation start must lie in (0, 1]");
  }
  if (!(options.floor > 0.0 && options.floor <= options.start)) {
    fail(ErrorKind::input, "relaxation floor must lie in (0, start]");
  }
}

double relaxation_threshold(const RelaxationOptions& options, std::size_t k) {
  const double raw = options.start - static_cast<double>(k) * options.step;
  return std::round(raw * 1e9) / 1e9;
}

std::size_t relaxation_steps(const RelaxationOptions& options) {
  return static_cast<std::size_t>(
             std::floor((options.start - options.floor) / options.step + 1e-9)) +
         1;
}

namespace {

template <typename Id>
RelaxationStep<Id> make_step(double threshold, std::vector<Id> previous, std::vector<Id> current) {
  RelaxationStep<Id> step;
  step.threshold = threshold;
  std::set_difference(current.begin(), current.end(), previous.begin(), previous.end(),
                      std::back_inserter(step.added_items));
  std::set_difference(previous.begin(), previous.end(), current.begin(), current.end(),
                      std::back_inserter(step.removed_items));
  step.current_selection = std::move(current);
  return step;
}

}  // namespace

ActivityRelaxation::ActivityRelaxation(std::span<const PatientProjection> sample,
                                       RelaxationOptions options)
    : sample_(sample), options_(options) {
  validate(options_);
  if (sample_.empty()) fail(ErrorKind::input, "relaxation needs a non-empty sample");
  count_ = relaxation_steps(options_);
}

Itemset ActivityRelaxation::selection_at(std::size_t k) const {
  return longest_frequent_pattern(sample_, relaxation_threshold(options_, k)).items;
}

ActivityStep ActivityRelaxation::at(std::size_t k) const {
  if (k >= count_) fail(ErrorKind::input, "relaxation step index out of range");
  return make_step(relaxation_threshold(options_, k), k == 0 ? Itemset{} : selection_at(k - 1),
                   selection_at(k));
}

DbcRelaxation::DbcRelaxation(Itemset pattern, std::span<const PatientProjection> sample,
                             RelaxationOptions options)
    : pattern_(std::move(pattern)), sample_(sample), options_(options) {
  validate(options_);
  if (pattern_.empty()) fail(ErrorKind::input, "code relaxation needs a non-empty pattern");
  if (sample_.empty()) fail(ErrorKind::input, "relaxation needs a non-empty sample");
  count_ = relaxation_steps(options_);
}

std::vector<CodeId> DbcRelaxation::selection_at(std::size_t k) const {
  return select_dbcs(pattern_, sample_, relaxation_threshold(options_, k));
}

DbcStep DbcRelaxation::at(std::size_t k) const {
  if (k >= count_) fail(ErrorKind::input, "relaxation step index out of range");
  return make_step(relaxation_threshold(options_, k),
                   k == 0 ? std::vector<CodeId>{} : selection_at(k - 1), selection_at(k));
}

std::vector<ActivityStep> relax_activities(std::span<const PatientProjection> sample,
                                           RelaxationOptions options) {
  const ActivityRelaxation relaxation(sample, options);
  std::vector<ActivityStep> steps;
  Itemset previous;
  for (std::size_t k = 0; k < relaxation.size(); ++k) {
    auto current = relaxation.selection_at(k);
    steps.push_back(make_step(relaxation_threshold(options, k), previous, current));
    previous = std::move(current);
  }
  return steps;
}

std::vector<DbcStep> relax_dbcs(std::span<const ActivityId> pattern,
                                std::span<const PatientProjection> sample,
                                RelaxationOptions options) {
  const DbcRelaxation relaxation(Itemset(pattern.begin(), pattern.end()), sample, options);
  std::vector<DbcStep> steps;
  std::vector<CodeId> previous;
  for (std::size_t k = 0; k < relaxation.size(); ++k) {
    auto current = relaxation.selection_at(k);
    steps.push_back(make_step(relaxation_threshold(options, k), previous, current));
    previous = std::move(current);
  }
  return steps;
}

// ---------------------------------------------------------------------------

GroupDefinition build_definition(const EventLog& log, std::span<const PatientProjection> sample,
                                 double phi_a, double phi_d) {
  if (!(phi_d > 0.0 && phi_d <= 1.0)) {
    fail(ErrorKind::input, "phi_d must lie in (0, 1], got " + std::to_string(phi_d));
  }
  const MiningResult mined = fp_growth(sample, phi_a);
  const Itemset pattern = select_pattern(mined);
  const std::vector<CodeId> codes = select_dbcs(pattern, sample, phi_d);

  GroupDefinition def;
  def.pattern = labels_of<ActivityId>(log, pattern);
  def.dbcs = labels_of<CodeId>(log, codes);
  def.phi_a = phi_a;
  def.phi_d = phi_d;
  def.provenance.version = std::string(version());
  for (const auto& p : sample) def.provenance.sample.push_back(p.patient_id);
  std::sort(def.provenance.sample.begin(), def.provenance.sample.end());
  return def;
}

Itemset resolve_pattern(const GroupDefinition& def, const EventLog& log) {
  Itemset out;
  for (const auto& label : def.pattern) {
    if (auto id = log.activity_id(label)) out.push_back(*id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CodeId> resolve_dbcs(const GroupDefinition& def, const EventLog& log) {
  std::vector<CodeId> out;
  for (const auto& label : def.dbcs) {
    if (auto id = log.dbc_id(label)) out.push_back(*id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cohort
