#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "genredist/corpus.hpp"
#include "genredist/distance_matrix.hpp"
#include "genredist/error.hpp"
#include "genredist/parallel.hpp"
#include "genredist/random.hpp"
#include "genredist/sampling.hpp"
#include "genredist/stats.hpp"

namespace genredist {

struct PmiConfig {
  // added to the joint count only
  double smoothing = 0.1;
  // complement size as a multiple of |a ∪ b| when complement_size is unset
  double complement_multiplier = 10.0;
  std::optional<std::size_t> complement_size;
};

struct ProximityRecord {
  // stored in canonical order (a < b) so the record is the same for either
  // argument order
  CategoryLabel a;
  CategoryLabel b;
  double pmi = 0.0;
  // counts within the normalization sample t
  std::uint64_t joint_count = 0;
  std::uint64_t count_a = 0;
  std::uint64_t count_b = 0;
  std::uint64_t sample_size = 0;
  // joint count over the whole corpus, before restricting to t
  std::uint64_t corpus_joint_count = 0;
  bool prior_applied = false;
};

// Normalization sample t for a pair: every volume of a ∪ b followed by a
// year-matched random complement drawn from the rest of the corpus.
inline std::vector<std::string> draw_pmi_sample(const CorpusIndex& index, const CategoryLabel& a,
                                                const CategoryLabel& b, std::uint64_t seed,
                                                const PmiConfig& config = {}) {
  const auto [lo, hi] = canonical_pair(a, b);
  std::set<std::string> united(index.with_category(lo).begin(), index.with_category(lo).end());
  united.insert(index.with_category(hi).begin(), index.with_category(hi).end());
  std::vector<std::string> t(united.begin(), united.end());
  const std::size_t wanted =
      config.complement_size
          ? *config.complement_size
          : static_cast<std::size_t>(std::llround(config.complement_multiplier * static_cast<double>(t.size())));
  auto complement = draw_matched_complement(index, t, wanted, {}, pair_seed(seed, "pmi", lo, hi));
  t.insert(t.end(), complement.begin(), complement.end());
  return t;
}

// Smoothed PMI of two labels within their normalization sample t. Natural log.
inline ProximityRecord compute_pmi(const CorpusIndex& index, const CategoryLabel& a, const CategoryLabel& b,
                                   std::uint64_t seed, const PmiConfig& config = {}) {
  if (a == b) throw Error("compute_pmi: " + a.str() + " paired with itself");
  const auto [lo, hi] = canonical_pair(a, b);
  const auto& ids_a = index.with_category(lo);
  const auto& ids_b = index.with_category(hi);
  if (ids_a.empty()) throw Error("compute_pmi: category " + lo.str() + " is empty in corpus");
  if (ids_b.empty()) throw Error("compute_pmi: category " + hi.str() + " is empty in corpus");
  const auto t = draw_pmi_sample(index, lo, hi, seed, config);

  ProximityRecord rec;
  rec.a = lo;
  rec.b = hi;
  rec.count_a = ids_a.size();
  rec.count_b = ids_b.size();
  for (const auto& id : ids_a)
    if (ids_b.contains(id)) ++rec.joint_count;
  // t contains all of a ∪ b and the complement carries neither label, so the
  // in-sample counts equal the corpus counts
  rec.corpus_joint_count = rec.joint_count;
  rec.sample_size = t.size();

  const double n = static_cast<double>(rec.sample_size);
  const double p_joint = (static_cast<double>(rec.joint_count) + config.smoothing) / n;
  const double p_a = static_cast<double>(rec.count_a) / n;
  const double p_b = static_cast<double>(rec.count_b) / n;
  rec.pmi = std::log(p_joint / (p_a * p_b));
  if (!std::isfinite(rec.pmi))
    throw Error("compute_pmi: non-finite PMI for " + lo.str() + " / " + hi.str() + " (smoothing must be > 0)");
  return rec;
}

inline std::vector<ProximityRecord> compute_all_pmi(const CorpusIndex& index,
                                                    const std::vector<CategoryLabel>& categories,
                                                    std::uint64_t seed, const PmiConfig& config = {},
                                                    unsigned threads = 1) {
  std::vector<LabelPair> pairs;
  for (std::size_t i = 0; i < categories.size(); ++i)
    for (std::size_t j = i + 1; j < categories.size(); ++j) pairs.emplace_back(categories[i], categories[j]);
  std::vector<ProximityRecord> records(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    records[k] = compute_pmi(index, pairs[k].first, pairs[k].second, seed, config);
  });
  return records;
}

struct PriorTable {
  std::map<LabelPair, double> pairs;  // canonical keys
  double blend_weight = 0.5;

  void set(const CategoryLabel& a, const CategoryLabel& b, double value) { pairs[canonical_pair(a, b)] = value; }

  std::optional<double> find(const CategoryLabel& a, const CategoryLabel& b) const {
    auto it = pairs.find(canonical_pair(a, b));
    if (it == pairs.end()) return std::nullopt;
    return it->second;
  }
};

// pmi <- (1 - w) * pmi + w * prior for pairs in the table.
inline std::vector<ProximityRecord> apply_priors(std::vector<ProximityRecord> records, const PriorTable& priors) {
  if (priors.blend_weight < 0.0 || priors.blend_weight > 1.0) throw Error("prior blend_weight must be in [0, 1]");
  const double w = priors.blend_weight;
  for (auto& rec : records) {
    if (auto prior = priors.find(rec.a, rec.b)) {
      rec.pmi = (1.0 - w) * rec.pmi + w * *prior;
      rec.prior_applied = true;
    }
  }
  return records;
}

// Priors for every genre/subject pair sharing a name, set to the given
// percentile of the empirical PMIs.
inline PriorTable default_priors(const std::vector<ProximityRecord>& records,
                                 const std::vector<CategoryLabel>& categories, double percentile = 90.0,
                                 double blend_weight = 0.5) {
  PriorTable table;
  table.blend_weight = blend_weight;
  if (records.empty()) return table;
  std::vector<double> values;
  for (const auto& r : records) values.push_back(r.pmi);
  const double anchor = stats::percentile(values, percentile);
  for (const auto& x : categories)
    for (const auto& y : categories)
      if (x.kind == LabelKind::genre && y.kind == LabelKind::subject && x.name == y.name) table.set(x, y, anchor);
  return table;
}

// JSON layout: {"blend_weight": w, "same_name_defaults": bool,
// "percentile": q, "pairs": [{"a": "Name:kind", "b": "Name:kind", "value": v}]}
inline PriorTable priors_from_json(const nlohmann::json& j, const std::vector<ProximityRecord>& records,
                                   const std::vector<CategoryLabel>& categories) {
  try {
    const double w = j.value("blend_weight", 0.5);
    PriorTable table;
    if (j.value("same_name_defaults", false))
      table = default_priors(records, categories, j.value("percentile", 90.0), w);
    table.blend_weight = w;
    for (const auto& p : j.value("pairs", nlohmann::json::array()))
      table.set(CategoryLabel::parse(p.at("a").get<std::string>()), CategoryLabel::parse(p.at("b").get<std::string>()),
                p.at("value").get<double>());
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed priors: ") + e.what());
  }
}

// D[a][b] = -pmi(a; b), zero diagonal.
inline DistanceMatrix social_distance_matrix(const std::vector<ProximityRecord>& records,
                                             const std::vector<CategoryLabel>& categories) {
  std::map<LabelPair, double> lookup;
  for (const auto& r : records) lookup[canonical_pair(r.a, r.b)] = r.pmi;
  std::vector<std::string> labels;
  for (const auto& c : categories) labels.push_back(c.str());
  DistanceMatrix m(labels, "social-pmi");
  std::string missing;
  for (std::size_t i = 0; i < categories.size(); ++i)
    for (std::size_t j = i + 1; j < categories.size(); ++j) {
      auto it = lookup.find(canonical_pair(categories[i], categories[j]));
      if (it == lookup.end()) {
        missing += (missing.empty() ? "" : "; ") + categories[i].str() + " / " + categories[j].str();
        continue;
      }
      m.set(i, j, -it->second);
    }
  if (!missing.empty()) throw Error("social_distance_matrix: missing pairs: " + missing);
  return m;
}

// Raw counts per pair, including both zero-overlap views.
inline std::string pmi_records_csv(const std::vector<ProximityRecord>& records) {
  std::string out = "a,b,pmi,joint_count,count_a,count_b,sample_size,corpus_joint_count,prior_applied\n";
  for (const auto& r : records) {
    out += csv::quote(r.a.str()) + "," + csv::quote(r.b.str()) + "," + csv::format_number(r.pmi) + "," +
           std::to_string(r.joint_count) + "," + std::to_string(r.count_a) + "," + std::to_string(r.count_b) + "," +
           std::to_string(r.sample_size) + "," + std::to_string(r.corpus_joint_count) + "," +
           (r.prior_applied ? "true" : "false") + "\n";
  }
  return out;
}

}  // namespace genredist
