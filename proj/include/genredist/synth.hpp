#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "genredist/corpus.hpp"
#include "genredist/error.hpp"
#include "genredist/label.hpp"
#include "genredist/parallel.hpp"
#include "genredist/random.hpp"

namespace genredist::synth {

struct SynthSpec {
  std::size_t n_categories = 4;
  std::size_t n_volumes = 400;
  std::size_t vocab_size = 1000;
  std::size_t n_topics = 0;  // 0: one per category
  // n_categories rows of n_topics weights; empty: drawn from the seed
  std::vector<std::vector<double>> topics_per_category;
  double drift_rate = 0.0;
  // diagonal: base tag rate; off-diagonal: target joint rate
  std::vector<std::vector<double>> co_assignment;
  int year_min = 1850;
  int year_max = 1950;
  std::size_t tokens_per_volume = 1000;
  std::uint64_t seed = 1;
  std::vector<std::string> category_names;
  std::vector<double> category_year_centers;  // empty: uniform years
  double year_sd = 10.0;
  double topic_concentration = 0.05;  // Dirichlet over words per topic
  double doc_concentration = 50.0;    // spread of a volume's topics around its mixture
  double mixture_concentration = 0.3; // only when mixtures are drawn from the seed

  std::size_t topics() const { return n_topics == 0 ? n_categories : n_topics; }
};

inline std::string word(std::size_t i, std::size_t vocab_size) {
  std::size_t width = 1;
  for (std::size_t cap = 26; cap < vocab_size; cap *= 26) ++width;
  std::string s(width, 'a');
  for (std::size_t k = width; k-- > 0; i /= 26) s[k] = static_cast<char>('a' + i % 26);
  return "zq" + s;
}

inline CategoryLabel category(const SynthSpec& spec, std::size_t c) {
  if (c < spec.category_names.size()) return CategoryLabel::parse(spec.category_names[c]);
  char buf[16];
  std::snprintf(buf, sizeof buf, "Cat%02zu", c + 1);
  return CategoryLabel{buf, LabelKind::genre};
}

inline std::vector<std::vector<double>> mixtures(const SynthSpec& spec) {
  if (!spec.topics_per_category.empty()) return spec.topics_per_category;
  std::vector<std::vector<double>> out;
  const std::vector<double> alpha(spec.topics(), spec.mixture_concentration);
  for (std::size_t c = 0; c < spec.n_categories; ++c) {
    Rng rng(derive_seed(spec.seed, "mixture|" + std::to_string(c)));
    out.push_back(rng.dirichlet(alpha));
  }
  return out;
}

inline void validate(const SynthSpec& spec) {
  const std::size_t k = spec.topics();
  if (spec.n_categories == 0 || spec.n_volumes == 0 || spec.tokens_per_volume == 0)
    throw Error("synth spec: n_categories, n_volumes and tokens_per_volume must be positive");
  if (spec.vocab_size < 2 * k)
    throw Error("synth spec: vocab_size " + std::to_string(spec.vocab_size) + " too small for " + std::to_string(k) +
                " topics (need at least " + std::to_string(2 * k) + ")");
  if (spec.year_min > spec.year_max) throw Error("synth spec: year_range is reversed");
  if (spec.drift_rate < 0.0) throw Error("synth spec: drift_rate must be non-negative");
  if (!(spec.topic_concentration > 0.0 && spec.doc_concentration > 0.0 && spec.mixture_concentration > 0.0))
    throw Error("synth spec: concentrations must be positive");
  if (!spec.topics_per_category.empty()) {
    if (spec.topics_per_category.size() != spec.n_categories)
      throw Error("synth spec: topics_per_category needs one row per category");
    for (std::size_t c = 0; c < spec.n_categories; ++c) {
      const auto& row = spec.topics_per_category[c];
      if (row.size() != k) throw Error("synth spec: topics_per_category[" + std::to_string(c) + "] has wrong length");
      double sum = 0.0;
      for (double w : row) {
        if (w < 0.0) throw Error("synth spec: negative mixture weight in row " + std::to_string(c));
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw Error("synth spec: topics_per_category[" + std::to_string(c) + "] does not sum to 1");
    }
  }
  if (spec.co_assignment.size() != spec.n_categories)
    throw Error("synth spec: co_assignment must be n_categories x n_categories");
  for (std::size_t a = 0; a < spec.n_categories; ++a) {
    if (spec.co_assignment[a].size() != spec.n_categories)
      throw Error("synth spec: co_assignment must be n_categories x n_categories");
    for (std::size_t b = 0; b < spec.n_categories; ++b) {
      const double v = spec.co_assignment[a][b];
      if (!(v >= 0.0 && v <= 1.0)) throw Error("synth spec: co_assignment entries must lie in [0, 1]");
      if (v != spec.co_assignment[b][a]) throw Error("synth spec: co_assignment is not symmetric");
    }
  }
  if (!spec.category_year_centers.empty() && spec.category_year_centers.size() != spec.n_categories)
    throw Error("synth spec: category_year_centers needs one entry per category");
  if (!spec.category_names.empty() && spec.category_names.size() != spec.n_categories)
    throw Error("synth spec: category_names needs one entry per category");
}

// Per-topic word distributions, fixed by the seed.
inline std::vector<std::vector<double>> topic_word(const SynthSpec& spec) {
  std::vector<std::vector<double>> out;
  const std::vector<double> beta(spec.vocab_size, spec.topic_concentration);
  for (std::size_t k = 0; k < spec.topics(); ++k) {
    Rng rng(derive_seed(spec.seed, "topic|" + std::to_string(k)));
    out.push_back(rng.dirichlet(beta));
  }
  return out;
}

// Word distribution that volumes drift toward as their year increases.
inline std::vector<double> late_distribution(const SynthSpec& spec) {
  Rng rng(derive_seed(spec.seed, "late"));
  return rng.dirichlet(std::vector<double>(spec.vocab_size, spec.topic_concentration));
}

inline double drift_weight(const SynthSpec& spec, int year) {
  return std::min(1.0, spec.drift_rate * static_cast<double>(year - spec.year_min));
}

inline std::vector<double> mixture_words(const std::vector<double>& mixture, const std::vector<std::vector<double>>& phi) {
  std::vector<double> out(phi.empty() ? 0 : phi[0].size(), 0.0);
  for (std::size_t k = 0; k < phi.size(); ++k)
    for (std::size_t w = 0; w < out.size(); ++w) out[w] += mixture[k] * phi[k][w];
  return out;
}

inline double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw Error("js_divergence: length mismatch");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::max(0.0, js);
}

struct CoAssignmentTruth {
  std::vector<double> marginal;             // P(a)
  std::vector<std::vector<double>> joint;   // P(a and b); diagonal = marginal
};

// Tags: each category independently at its base rate, plus for every pair a
// coupling event at rate max(0, co_ab - p_a p_b) that assigns both.
inline double coupling(const SynthSpec& spec, std::size_t a, std::size_t b) {
  return std::max(0.0, spec.co_assignment[a][b] - spec.co_assignment[a][a] * spec.co_assignment[b][b]);
}

inline CoAssignmentTruth co_assignment_truth(const SynthSpec& spec) {
  const std::size_t n = spec.n_categories;
  CoAssignmentTruth t;
  // P(no tag from any event touching the given categories)
  auto absent = [&](std::vector<std::size_t> cats) {
    double p = 1.0;
    for (auto c : cats) p *= 1.0 - spec.co_assignment[c][c];
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = x + 1; y < n; ++y)
        if (std::find(cats.begin(), cats.end(), x) != cats.end() || std::find(cats.begin(), cats.end(), y) != cats.end())
          p *= 1.0 - coupling(spec, x, y);
    return p;
  };
  for (std::size_t a = 0; a < n; ++a) t.marginal.push_back(1.0 - absent({a}));
  t.joint.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      t.joint[a][b] = a == b ? t.marginal[a] : t.marginal[a] + t.marginal[b] - (1.0 - absent({a, b}));
  return t;
}

struct Truth {
  std::vector<CategoryLabel> categories;
  std::vector<std::vector<double>> mixtures;
  std::vector<std::vector<double>> js;  // nats
  CoAssignmentTruth co_assignment;
};

// Everything here follows from the spec; generate() is not consulted.
inline Truth compute_truth(const SynthSpec& spec) {
  validate(spec);
  Truth t;
  for (std::size_t c = 0; c < spec.n_categories; ++c) t.categories.push_back(category(spec, c));
  t.mixtures = mixtures(spec);
  const auto phi = topic_word(spec);
  std::vector<std::vector<double>> words;
  for (const auto& m : t.mixtures) words.push_back(mixture_words(m, phi));
  t.js.assign(spec.n_categories, std::vector<double>(spec.n_categories, 0.0));
  for (std::size_t a = 0; a < spec.n_categories; ++a)
    for (std::size_t b = a + 1; b < spec.n_categories; ++b) t.js[a][b] = t.js[b][a] = js_divergence(words[a], words[b]);
  t.co_assignment = co_assignment_truth(spec);
  return t;
}

struct Volume {
  std::string id;
  int year = 0;
  std::vector<std::size_t> tags;
  std::map<std::string, std::uint64_t> tokens;
};

inline std::string volume_id(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "syn%06zu", i);
  return buf;
}

namespace detail {

inline std::vector<double> to_cdf(const std::vector<double>& p) {
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = acc += p[i];
  return cdf;
}

struct Model {
  std::vector<std::vector<double>> mixtures;
  std::vector<double> mean_mixture;
  std::vector<std::vector<double>> phi_cdf;
  std::vector<double> late_cdf;
  std::vector<std::vector<double>> coupling;
};

inline Model build_model(const SynthSpec& spec) {
  Model m;
  m.mixtures = mixtures(spec);
  m.mean_mixture.assign(spec.topics(), 0.0);
  for (const auto& row : m.mixtures)
    for (std::size_t k = 0; k < row.size(); ++k) m.mean_mixture[k] += row[k] / static_cast<double>(spec.n_categories);
  for (const auto& row : topic_word(spec)) m.phi_cdf.push_back(to_cdf(row));
  m.late_cdf = to_cdf(late_distribution(spec));
  m.coupling.assign(spec.n_categories, std::vector<double>(spec.n_categories, 0.0));
  for (std::size_t a = 0; a < spec.n_categories; ++a)
    for (std::size_t b = a + 1; b < spec.n_categories; ++b) m.coupling[a][b] = coupling(spec, a, b);
  return m;
}

inline Volume make_volume(const SynthSpec& spec, const Model& m, std::size_t i) {
  Rng rng(derive_seed(spec.seed, "volume|" + std::to_string(i)));
  const std::size_t n = spec.n_categories;
  std::vector<bool> tagged(n, false);
  for (std::size_t a = 0; a < n; ++a)
    if (rng.bernoulli(spec.co_assignment[a][a])) tagged[a] = true;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (m.coupling[a][b] > 0.0 && rng.bernoulli(m.coupling[a][b])) tagged[a] = tagged[b] = true;

  Volume v;
  v.id = volume_id(i);
  for (std::size_t a = 0; a < n; ++a)
    if (tagged[a]) v.tags.push_back(a);

  if (!v.tags.empty() && !spec.category_year_centers.empty()) {
    const double center = spec.category_year_centers[v.tags[rng.index(v.tags.size())]];
    const double y = std::round(center + spec.year_sd * rng.normal());
    v.year = static_cast<int>(std::clamp(y, static_cast<double>(spec.year_min), static_cast<double>(spec.year_max)));
  } else {
    v.year = spec.year_min + static_cast<int>(rng.index(static_cast<std::size_t>(spec.year_max - spec.year_min) + 1));
  }

  std::vector<double> mixture(spec.topics(), 0.0);
  if (v.tags.empty()) {
    mixture = m.mean_mixture;
  } else {
    for (auto a : v.tags)
      for (std::size_t k = 0; k < mixture.size(); ++k) mixture[k] += m.mixtures[a][k] / static_cast<double>(v.tags.size());
  }
  std::vector<double> alpha(mixture.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) alpha[k] = std::max(1e-3, spec.doc_concentration * mixture[k]);
  const auto theta_cdf = to_cdf(rng.dirichlet(alpha));

  const double delta = drift_weight(spec, v.year);
  const auto length = static_cast<std::size_t>(
      std::llround(static_cast<double>(spec.tokens_per_volume) * (0.5 + rng.uniform())));
  std::vector<std::uint64_t> counts(spec.vocab_size, 0);
  for (std::size_t t = 0; t < std::max<std::size_t>(length, 1); ++t) {
    if (delta > 0.0 && rng.uniform() < delta)
      ++counts[rng.categorical_cdf(m.late_cdf)];
    else
      ++counts[rng.categorical_cdf(m.phi_cdf[rng.categorical_cdf(theta_cdf)])];
  }
  for (std::size_t w = 0; w < counts.size(); ++w)
    if (counts[w] > 0) v.tokens.emplace(word(w, spec.vocab_size), counts[w]);
  return v;
}

}  // namespace detail

// Volumes in id order; each volume has its own seed, so the result does not
// depend on the thread count.
inline std::vector<Volume> generate_volumes(const SynthSpec& spec, unsigned threads = 1) {
  validate(spec);
  const auto model = detail::build_model(spec);
  std::vector<Volume> out(spec.n_volumes);
  parallel_for(spec.n_volumes, threads, [&](std::size_t i) { out[i] = detail::make_volume(spec, model, i); });
  return out;
}

// In-memory equivalent of generate() followed by ingest.
inline std::vector<VolumeRecord> to_records(const SynthSpec& spec, const std::vector<Volume>& volumes) {
  std::vector<VolumeRecord> out;
  out.reserve(volumes.size());
  for (const auto& v : volumes) {
    VolumeRecord r;
    r.volume_id = v.id;
    r.title_key = v.id;
    r.year = v.year;
    for (auto a : v.tags) r.tags.insert(category(spec, a));
    r.tokens = TokenCounts(v.tokens.begin(), v.tokens.end());
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json to_json(const Truth& t) {
  nlohmann::json j;
  auto cats = nlohmann::json::array();
  for (const auto& c : t.categories) cats.push_back(c.str());
  j["categories"] = cats;
  j["mixtures"] = t.mixtures;
  j["js_divergence"] = t.js;
  j["js_units"] = "nats";
  j["tag_marginal"] = t.co_assignment.marginal;
  j["tag_joint"] = t.co_assignment.joint;
  return j;
}

inline SynthSpec spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.n_categories = j.at("n_categories").get<std::size_t>();
    s.n_volumes = j.at("n_volumes").get<std::size_t>();
    s.vocab_size = j.at("vocab_size").get<std::size_t>();
    s.n_topics = j.value("n_topics", std::size_t{0});
    s.topics_per_category = j.value("topics_per_category", std::vector<std::vector<double>>{});
    s.drift_rate = j.value("drift_rate", 0.0);
    if (j.contains("co_assignment")) {
      s.co_assignment = j["co_assignment"].get<std::vector<std::vector<double>>>();
    } else {
      const double rate = j.value("tag_rate", 0.1);
      s.co_assignment.assign(s.n_categories, std::vector<double>(s.n_categories, rate * rate));
      for (std::size_t a = 0; a < s.n_categories; ++a) s.co_assignment[a][a] = rate;
    }
    if (j.contains("year_range")) {
      const auto yr = j["year_range"].get<std::vector<int>>();
      if (yr.size() != 2) throw Error("synth spec: year_range must be [min, max]");
      s.year_min = yr[0];
      s.year_max = yr[1];
    }
    s.tokens_per_volume = j.value("tokens_per_volume", s.tokens_per_volume);
    s.seed = j.value("seed", s.seed);
    s.category_names = j.value("category_names", std::vector<std::string>{});
    s.category_year_centers = j.value("category_year_centers", std::vector<double>{});
    s.year_sd = j.value("year_sd", s.year_sd);
    s.topic_concentration = j.value("topic_concentration", s.topic_concentration);
    s.doc_concentration = j.value("doc_concentration", s.doc_concentration);
    s.mixture_concentration = j.value("mixture_concentration", s.mixture_concentration);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("synth spec: ") + e.what());
  }
  validate(s);
  return s;
}

inline nlohmann::json to_json(const SynthSpec& s) {
  nlohmann::json j;
  j["n_categories"] = s.n_categories;
  j["n_volumes"] = s.n_volumes;
  j["vocab_size"] = s.vocab_size;
  j["n_topics"] = s.topics();
  j["topics_per_category"] = mixtures(s);
  j["drift_rate"] = s.drift_rate;
  j["co_assignment"] = s.co_assignment;
  j["year_range"] = {s.year_min, s.year_max};
  j["tokens_per_volume"] = s.tokens_per_volume;
  j["seed"] = s.seed;
  auto names = nlohmann::json::array();
  for (std::size_t c = 0; c < s.n_categories; ++c) names.push_back(category(s, c).str());
  j["category_names"] = names;
  if (!s.category_year_centers.empty()) j["category_year_centers"] = s.category_year_centers;
  j["year_sd"] = s.year_sd;
  j["topic_concentration"] = s.topic_concentration;
  j["doc_concentration"] = s.doc_concentration;
  return j;
}

struct GeneratedPaths {
  std::filesystem::path metadata;
  std::filesystem::path features;
  std::filesystem::path truth;
};

// Writes metadata.jsonl, features/<id>.tsv and truth.json under out_dir.
inline GeneratedPaths generate(const SynthSpec& spec, const std::filesystem::path& out_dir, unsigned threads = 1) {
  const auto volumes = generate_volumes(spec, threads);
  GeneratedPaths paths{out_dir / "metadata.jsonl", out_dir / "features", out_dir / "truth.json"};
  std::filesystem::create_directories(paths.features);
  std::ofstream meta(paths.metadata, std::ios::binary);
  if (!meta) throw Error("cannot write " + paths.metadata.string());
  for (const auto& v : volumes) {
    nlohmann::json row;
    row["volume_id"] = v.id;
    row["title_key"] = v.id;
    row["year"] = v.year;
    auto tags = nlohmann::json::array();
    for (auto a : v.tags) {
      const auto c = category(spec, a);
      tags.push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}});
    }
    row["tags"] = tags;
    row["feature_file"] = v.id + ".tsv";
    meta << row.dump() << '\n';
    std::ofstream f(paths.features / (v.id + ".tsv"), std::ios::binary);
    if (!f) throw Error("cannot write feature file for " + v.id);
    for (const auto& [token, count] : v.tokens) f << token << '\t' << count << '\n';
  }
  std::ofstream truth(paths.truth, std::ios::binary);
  if (!truth) throw Error("cannot write " + paths.truth.string());
  auto tj = to_json(compute_truth(spec));
  tj["spec"] = to_json(spec);
  truth << tj.dump(2) << '\n';
  return paths;
}

}  // namespace genredist::synth
