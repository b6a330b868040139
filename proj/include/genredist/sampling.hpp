#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genredist/corpus.hpp"
#include "genredist/error.hpp"
#include "genredist/label.hpp"
#include "genredist/random.hpp"

namespace genredist {

struct Sample {
  std::string label;
  std::optional<CategoryLabel> category;
  std::vector<std::string> volume_ids;
  std::uint64_t seed = 0;
  std::set<CategoryLabel> exclusions;
  std::vector<std::string> warnings;
};

struct MatchedContrast {
  Sample target;
  std::vector<std::string> volume_ids;
  std::uint64_t seed = 0;
  // widest year offset any match needed (0, 1 or 2)
  int max_offset_used = 0;
};

struct SamplePair {
  Sample a_not_b;
  Sample b_not_a;
  std::optional<std::string> warning;
};

inline constexpr int kMaxYearOffset = 2;

using LabelPair = std::pair<CategoryLabel, CategoryLabel>;

inline LabelPair canonical_pair(const CategoryLabel& a, const CategoryLabel& b) {
  return a < b ? LabelPair{a, b} : LabelPair{b, a};
}

inline std::uint64_t pair_seed(std::uint64_t master, std::string_view stage, const CategoryLabel& a,
                               const CategoryLabel& b) {
  auto [lo, hi] = canonical_pair(a, b);
  return derive_seed(master, std::string(stage) + "|" + lo.str() + "|" + hi.str());
}


inline std::string sample_label(const CategoryLabel& category, const std::set<CategoryLabel>& exclusions) {
  std::string label = category.str();
  for (const auto& ex : exclusions) label += " -not- " + ex.str();
  return label;
}

// Volumes tagged `category` carrying none of `exclusions`, in id order.
inline std::vector<std::string> eligible_volumes(const CorpusIndex& index, const CategoryLabel& category,
                                                 const std::set<CategoryLabel>& exclusions) {
  std::vector<std::string> out;
  for (const auto& id : index.with_category(category)) {
    const auto& volume = index.volume(id);
    bool excluded = false;
    for (const auto& ex : exclusions)
      if (volume.has_tag(ex)) {
        excluded = true;
        break;
      }
    if (!excluded) out.push_back(id);
  }
  return out;
}

// Uniform random n-subset of the eligible pool, in draw order.
inline Sample draw_category_sample(const CorpusIndex& index, const CategoryLabel& category, std::size_t n,
                                   std::uint64_t seed, const std::set<CategoryLabel>& exclusions = {}) {
  auto pool = eligible_volumes(index, category, exclusions);
  if (pool.size() < n)
    throw Error("category " + sample_label(category, exclusions) + ": need " + std::to_string(n) +
                " eligible volumes, have " + std::to_string(pool.size()) + " (short by " +
                std::to_string(n - pool.size()) + ")");
  Rng rng(seed);
  rng.partial_shuffle(pool, n);
  pool.resize(n);
  return Sample{sample_label(category, exclusions), category, std::move(pool), seed, exclusions, {}};
}

namespace detail {

struct YearPool {
  std::map<int, std::vector<std::string>> by_year;

  // Removes and returns a uniformly chosen volume from year±offset, or
  // nullopt if that ring is empty.
  std::optional<std::string> take(int year, int offset, Rng& rng) {
    std::vector<int> years = offset == 0 ? std::vector<int>{year} : std::vector<int>{year - offset, year + offset};
    std::size_t total = 0;
    for (int y : years) {
      auto it = by_year.find(y);
      if (it != by_year.end()) total += it->second.size();
    }
    if (total == 0) return std::nullopt;
    std::size_t pick = rng.index(total);
    for (int y : years) {
      auto it = by_year.find(y);
      if (it == by_year.end()) continue;
      auto& bucket = it->second;
      if (pick < bucket.size()) {
        std::string id = std::move(bucket[pick]);
        bucket[pick] = std::move(bucket.back());
        bucket.pop_back();
        if (bucket.empty()) by_year.erase(it);
        return id;
      }
      pick -= bucket.size();
    }
    return std::nullopt;
  }
};

inline YearPool build_pool(const CorpusIndex& index, const std::set<std::string>& skip_ids,
                           const std::set<CategoryLabel>& pool_exclusions) {
  YearPool pool;
  for (const auto& [id, volume] : index.volumes()) {
    if (skip_ids.contains(id)) continue;
    bool excluded = false;
    for (const auto& ex : pool_exclusions)
      if (volume.has_tag(ex)) {
        excluded = true;
        break;
      }
    if (!excluded) pool.by_year[volume.year].push_back(id);
  }
  return pool;
}

struct MatchOutcome {
  std::vector<std::string> ids;
  std::set<int> deficient_years;
  int max_offset_used = 0;
};

// One pool volume per target year: same year, else ±1, else ±2.
inline MatchOutcome match_years(YearPool& pool, const std::vector<int>& target_years, Rng& rng) {
  MatchOutcome out;
  for (int year : target_years) {
    bool found = false;
    for (int offset = 0; offset <= kMaxYearOffset && !found; ++offset) {
      if (auto id = pool.take(year, offset, rng)) {
        out.ids.push_back(std::move(*id));
        out.max_offset_used = std::max(out.max_offset_used, offset);
        found = true;
      }
    }
    if (!found) out.deficient_years.insert(year);
  }
  return out;
}

inline std::string join_years(const std::set<int>& years) {
  std::string s;
  for (int y : years) s += (s.empty() ? "" : ", ") + std::to_string(y);
  return s;
}

}  // namespace detail

// Random contrast set with the target's chronological distribution: one pool
// volume per target volume, drawn without replacement from the same year, with
// fallback to ±1 then ±2 years. The pool excludes the target's own volumes and
// anything tagged with one of `pool_exclusions`.
inline MatchedContrast draw_matched_contrast(const CorpusIndex& index, const Sample& target,
                                             const std::set<CategoryLabel>& pool_exclusions, std::uint64_t seed) {
  std::set<std::string> skip(target.volume_ids.begin(), target.volume_ids.end());
  auto pool = detail::build_pool(index, skip, pool_exclusions);
  std::vector<int> years;
  years.reserve(target.volume_ids.size());
  for (const auto& id : target.volume_ids) years.push_back(index.volume(id).year);
  Rng rng(seed);
  auto outcome = detail::match_years(pool, years, rng);
  if (!outcome.deficient_years.empty())
    throw Error("contrast for " + target.label + ": no pool volume within ±" + std::to_string(kMaxYearOffset) +
                " years of " + detail::join_years(outcome.deficient_years));
  return MatchedContrast{target, std::move(outcome.ids), seed, outcome.max_offset_used};
}

// Year-matched complement of `target_ids`, `size` volumes long: the target's
// year list is cycled until `size` entries are requested. Unfillable requests
// are dropped rather than fatal, so the result is capped by the pool.
inline std::vector<std::string> draw_matched_complement(const CorpusIndex& index,
                                                        const std::vector<std::string>& target_ids,
                                                        std::size_t size,
                                                        const std::set<CategoryLabel>& pool_exclusions,
                                                        std::uint64_t seed) {
  if (target_ids.empty() || size == 0) return {};
  std::set<std::string> skip(target_ids.begin(), target_ids.end());
  auto pool = detail::build_pool(index, skip, pool_exclusions);
  std::vector<int> years;
  years.reserve(size);
  for (std::size_t i = 0; i < size; ++i) years.push_back(index.volume(target_ids[i % target_ids.size()]).year);
  Rng rng(seed);
  return detail::match_years(pool, years, rng).ids;
}

// "a-not-b" and "b-not-a" samples of equal size. If a pool is smaller than n,
// both samples shrink to the largest feasible equal size and a warning is set.
inline SamplePair symmetric_difference_samples(const CorpusIndex& index, const CategoryLabel& a,
                                               const CategoryLabel& b, std::size_t n, std::uint64_t seed) {
  if (a == b) throw Error("symmetric difference of " + a.str() + " with itself");
  const auto pool_a = eligible_volumes(index, a, {b});
  const auto pool_b = eligible_volumes(index, b, {a});
  if (pool_a.empty() || pool_b.empty())
    throw Error("pair " + a.str() + " / " + b.str() + " incomparable: " +
                (pool_a.empty() ? a.str() + "-not-" + b.str() : b.str() + "-not-" + a.str()) + " is empty");
  const std::size_t size = std::min({n, pool_a.size(), pool_b.size()});
  SamplePair out{draw_category_sample(index, a, size, derive_seed(seed, a.str()), {b}),
                 draw_category_sample(index, b, size, derive_seed(seed, b.str()), {a}),
                 std::nullopt};
  if (size < n)
    out.warning = "pair " + a.str() + " / " + b.str() + ": symmetric-difference samples shortened to " +
                  std::to_string(size) + " of " + std::to_string(n);
  return out;
}

inline nlohmann::json to_json(const Sample& sample) {
  nlohmann::json j;
  j["label"] = sample.label;
  j["category"] = sample.category ? nlohmann::json(sample.category->str()) : nlohmann::json(nullptr);
  j["volume_ids"] = sample.volume_ids;
  j["seed"] = sample.seed;
  auto ex = nlohmann::json::array();
  for (const auto& e : sample.exclusions) ex.push_back(e.str());
  j["exclusions"] = ex;
  if (!sample.warnings.empty()) j["warnings"] = sample.warnings;
  return j;
}

inline Sample sample_from_json(const nlohmann::json& j) {
  Sample s;
  try {
    s.label = j.at("label").get<std::string>();
    if (j.contains("category") && !j["category"].is_null())
      s.category = CategoryLabel::parse(j["category"].get<std::string>());
    s.volume_ids = j.at("volume_ids").get<std::vector<std::string>>();
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& e : j.value("exclusions", nlohmann::json::array()))
      s.exclusions.insert(CategoryLabel::parse(e.get<std::string>()));
    s.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed sample: ") + e.what());
  }
  return s;
}

}  // namespace genredist
