#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <new>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/map.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include "genredist/corpus.hpp"
#include "genredist/distance_matrix.hpp"
#include "genredist/error.hpp"
#include "genredist/lexical_distance.hpp"
#include "genredist/random.hpp"
#include "genredist/sampling.hpp"
#include "genredist/vocabulary.hpp"

namespace genredist {

struct LdaConfig {
  std::size_t topics = 100;
  double alpha = 0.1;
  double beta = 0.01;
  std::size_t iterations = 500;
  std::uint64_t seed = 0;
  // cap on lexicon size by document frequency; 0 keeps every non-stopword
  std::size_t max_lexicon = 0;
};

// Fitted LDA state read off the final Gibbs sample with Dirichlet smoothing.
struct TopicModel {
  std::size_t topics = 0;
  Vocabulary lexicon;
  std::vector<double> topic_word;  // topics x lexicon.size(), row-major
  std::map<std::string, std::vector<double>> doc_topic;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  double word_probability(std::size_t topic, std::size_t word) const {
    return topic_word[topic * lexicon.size() + word];
  }

  const std::vector<double>& topics_of(const std::string& volume_id) const {
    auto it = doc_topic.find(volume_id);
    if (it == doc_topic.end()) throw Error("volume " + volume_id + " has no topic vector in this model");
    return it->second;
  }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(topics, lexicon, topic_word, doc_topic, alpha, beta, iterations, seed, warnings);
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    cereal::PortableBinaryOutputArchive ar(out);
    ar(std::string("genredist-lda"), std::uint32_t{1}, *this);
  }

  static TopicModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read topic model " + path.string());
    TopicModel model;
    try {
      cereal::PortableBinaryInputArchive ar(in);
      std::string magic;
      std::uint32_t version = 0;
      ar(magic, version);
      if (magic != "genredist-lda" || version != 1) throw Error(path.string() + " is not a topic model");
      ar(model);
    } catch (const cereal::Exception& e) {
      throw Error("corrupt topic model " + path.string() + ": " + e.what());
    } catch (const std::bad_alloc&) {
      throw Error("corrupt topic model " + path.string());
    } catch (const std::length_error&) {
      throw Error("corrupt topic model " + path.string());
    }
    return model;
  }
};

// Collapsed Gibbs sampling over the given volumes (duplicates ignored) with
// symmetric priors. Single-threaded, deterministic given the seed.
inline TopicModel fit_lda(const CorpusIndex& index, const std::vector<std::string>& volume_ids,
                          const std::set<std::string>& stopwords, const LdaConfig& config) {
  if (config.topics < 1) throw Error("fit_lda: need at least one topic");
  const std::set<std::string> unique_ids(volume_ids.begin(), volume_ids.end());

  std::map<std::string, std::uint64_t> df;
  for (const auto& id : unique_ids)
    for (const auto& [token, count] : index.volume(id).tokens) ++df[token];
  TopicModel model;
  model.topics = config.topics;
  model.lexicon = Vocabulary::from_document_frequency(df, config.max_lexicon, stopwords);
  model.alpha = config.alpha;
  model.beta = config.beta;
  model.iterations = config.iterations;
  model.seed = config.seed;
  if (model.lexicon.empty()) throw Error("fit_lda: lexicon is empty after stopword removal");

  const std::size_t K = config.topics;
  const std::size_t V = model.lexicon.size();

  std::vector<std::string> doc_ids;
  std::vector<std::vector<std::uint32_t>> words;
  for (const auto& id : unique_ids) {
    std::vector<std::uint32_t> doc;
    for (const auto& [token, count] : index.volume(id).tokens) {
      auto w = model.lexicon.find(token);
      if (w < 0) continue;
      doc.insert(doc.end(), count, static_cast<std::uint32_t>(w));
    }
    if (doc.empty()) {
      model.warnings.push_back("volume " + id + " has no in-lexicon tokens; excluded from topic model");
      continue;
    }
    doc_ids.push_back(id);
    words.push_back(std::move(doc));
  }
  if (doc_ids.empty()) throw Error("fit_lda: no volume has in-lexicon tokens");

  const std::size_t D = doc_ids.size();
  std::vector<std::uint32_t> doc_topic_counts(D * K, 0);
  std::vector<std::uint32_t> topic_word_counts(K * V, 0);
  std::vector<std::uint64_t> topic_totals(K, 0);
  std::vector<std::vector<std::uint32_t>> assignments(D);

  Rng rng(config.seed);
  for (std::size_t d = 0; d < D; ++d) {
    assignments[d].resize(words[d].size());
    for (std::size_t i = 0; i < words[d].size(); ++i) {
      const auto k = static_cast<std::uint32_t>(rng.index(K));
      assignments[d][i] = k;
      ++doc_topic_counts[d * K + k];
      ++topic_word_counts[k * V + words[d][i]];
      ++topic_totals[k];
    }
  }

  const double vbeta = static_cast<double>(V) * config.beta;
  std::vector<double> cdf(K);
  std::vector<double> inv_totals(K);
  for (std::size_t k = 0; k < K; ++k) inv_totals[k] = 1.0 / (static_cast<double>(topic_totals[k]) + vbeta);
  if (K > 1) {
    for (std::size_t sweep = 0; sweep < config.iterations; ++sweep) {
      for (std::size_t d = 0; d < D; ++d) {
        std::uint32_t* nd = &doc_topic_counts[d * K];
        for (std::size_t i = 0; i < words[d].size(); ++i) {
          const std::uint32_t w = words[d][i];
          std::uint32_t k = assignments[d][i];
          --nd[k];
          --topic_word_counts[k * V + w];
          --topic_totals[k];
          inv_totals[k] = 1.0 / (static_cast<double>(topic_totals[k]) + vbeta);
          double acc = 0.0;
          for (std::size_t t = 0; t < K; ++t) {
            acc += (nd[t] + config.alpha) * (topic_word_counts[t * V + w] + config.beta) * inv_totals[t];
            cdf[t] = acc;
          }
          k = static_cast<std::uint32_t>(rng.categorical_cdf(cdf));
          assignments[d][i] = k;
          ++nd[k];
          ++topic_word_counts[k * V + w];
          ++topic_totals[k];
          inv_totals[k] = 1.0 / (static_cast<double>(topic_totals[k]) + vbeta);
        }
      }
    }
  }

  model.topic_word.resize(K * V);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t w = 0; w < V; ++w)
      model.topic_word[k * V + w] = (topic_word_counts[k * V + w] + config.beta) * inv_totals[k];
  const double kalpha = static_cast<double>(K) * config.alpha;
  for (std::size_t d = 0; d < D; ++d) {
    std::vector<double> theta(K);
    const double denom = static_cast<double>(words[d].size()) + kalpha;
    for (std::size_t k = 0; k < K; ++k) theta[k] = (doc_topic_counts[d * K + k] + config.alpha) / denom;
    model.doc_topic.emplace(doc_ids[d], std::move(theta));
  }
  return model;
}

enum class TopicStrategy { summed, symdiff, time_centered };

inline std::string_view method_tag(TopicStrategy s) {
  switch (s) {
    case TopicStrategy::summed: return "topic-summed";
    case TopicStrategy::symdiff: return "topic-symdiff";
    case TopicStrategy::time_centered: return "topic-centered";
  }
  return "topic";
}

inline TopicStrategy parse_strategy(std::string_view text) {
  if (text == "summed") return TopicStrategy::summed;
  if (text == "symdiff") return TopicStrategy::symdiff;
  if (text == "centered" || text == "time_centered") return TopicStrategy::time_centered;
  throw Error("unknown topic strategy '" + std::string(text) + "' (summed, symdiff or centered)");
}

struct GenreTopicVector {
  std::string label;
  std::vector<double> vector;
  TopicStrategy strategy = TopicStrategy::summed;
  std::optional<std::pair<CategoryLabel, CategoryLabel>> pair_context;
};

namespace detail {

inline std::string sample_name(const Sample& sample) {
  return sample.category ? sample.category->str() : sample.label;
}

inline std::vector<double> sum_vectors(const Sample& sample, std::size_t dims,
                                       const std::function<const std::vector<double>&(const std::string&)>& lookup) {
  if (sample.volume_ids.empty()) throw Error("sample " + sample.label + " is empty");
  std::vector<double> total(dims, 0.0);
  for (const auto& id : sample.volume_ids) {
    const auto& v = lookup(id);
    for (std::size_t k = 0; k < dims; ++k) total[k] += v[k];
  }
  return total;
}

}  // namespace detail

// Entrywise sum of the sample's document-topic vectors; each volume
// contributes unit mass regardless of length.
inline GenreTopicVector summed_vector(const TopicModel& model, const Sample& sample) {
  auto v = detail::sum_vectors(sample, model.topics,
                               [&](const std::string& id) -> const std::vector<double>& { return model.topics_of(id); });
  return GenreTopicVector{detail::sample_name(sample), std::move(v), TopicStrategy::summed, std::nullopt};
}

// Summed vectors over the a-not-b and b-not-a samples for one comparison.
// Argument order only swaps the outputs; the underlying draw is the same.
inline std::pair<GenreTopicVector, GenreTopicVector> symdiff_vectors(const TopicModel& model,
                                                                     const CorpusIndex& index,
                                                                     const CategoryLabel& a, const CategoryLabel& b,
                                                                     std::size_t n, std::uint64_t seed) {
  const bool swapped = b < a;
  const CategoryLabel& lo = swapped ? b : a;
  const CategoryLabel& hi = swapped ? a : b;
  auto samples = symmetric_difference_samples(index, lo, hi, n, seed);
  auto first = summed_vector(model, samples.a_not_b);
  auto second = summed_vector(model, samples.b_not_a);
  first.label = lo.str();
  second.label = hi.str();
  first.strategy = second.strategy = TopicStrategy::symdiff;
  first.pair_context = second.pair_context = std::make_pair(lo, hi);
  if (swapped) return {std::move(second), std::move(first)};
  return {std::move(first), std::move(second)};
}

// Subtracts from each modeled volume's topic vector the mean vector of all
// modeled volumes within ±window_years of it (itself included).
inline std::map<std::string, std::vector<double>> time_center(const TopicModel& model, const CorpusIndex& index,
                                                              int window_years) {
  const std::size_t K = model.topics;
  std::map<int, std::vector<const std::string*>> by_year;
  for (const auto& [id, theta] : model.doc_topic) by_year[index.volume(id).year].push_back(&id);

  // per-year sums, then a sliding window over years
  std::vector<int> years;
  std::vector<std::vector<double>> year_sums;
  std::vector<double> year_counts;
  for (const auto& [year, ids] : by_year) {
    years.push_back(year);
    std::vector<double> sum(K, 0.0);
    for (const auto* id : ids) {
      const auto& theta = model.doc_topic.at(*id);
      for (std::size_t k = 0; k < K; ++k) sum[k] += theta[k];
    }
    year_sums.push_back(std::move(sum));
    year_counts.push_back(static_cast<double>(ids.size()));
  }

  std::map<std::string, std::vector<double>> centered;
  std::size_t lo = 0, hi = 0;
  for (std::size_t y = 0; y < years.size(); ++y) {
    while (years[lo] < years[y] - window_years) ++lo;
    while (hi + 1 < years.size() && years[hi + 1] <= years[y] + window_years) ++hi;
    std::vector<double> mean(K, 0.0);
    double count = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      for (std::size_t k = 0; k < K; ++k) mean[k] += year_sums[j][k];
      count += year_counts[j];
    }
    for (double& m : mean) m /= count;
    for (const auto* id : by_year[years[y]]) {
      const auto& theta = model.doc_topic.at(*id);
      std::vector<double> c(K);
      for (std::size_t k = 0; k < K; ++k) c[k] = theta[k] - mean[k];
      centered.emplace(*id, std::move(c));
    }
  }
  return centered;
}

// Sum of time-centered vectors over the sample.
inline GenreTopicVector centered_vector(const std::map<std::string, std::vector<double>>& centered,
                                        std::size_t topics, const Sample& sample) {
  auto v = detail::sum_vectors(sample, topics, [&](const std::string& id) -> const std::vector<double>& {
    auto it = centered.find(id);
    if (it == centered.end()) throw Error("volume " + id + " has no centered topic vector");
    return it->second;
  });
  return GenreTopicVector{detail::sample_name(sample), std::move(v), TopicStrategy::time_centered, std::nullopt};
}

// One vector per category (summed or time-centered strategy).
inline DistanceMatrix topic_distance_matrix(const std::vector<GenreTopicVector>& vectors, TopicStrategy strategy) {
  std::vector<std::string> labels;
  for (const auto& v : vectors) labels.push_back(v.label);
  DistanceMatrix m(labels, std::string(method_tag(strategy)));
  for (std::size_t i = 0; i < vectors.size(); ++i)
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      if (vectors[i].vector.size() != vectors[j].vector.size())
        throw Error("topic vectors for " + labels[i] + " and " + labels[j] + " differ in length");
      for (std::size_t x : {i, j})
        if (std::all_of(vectors[x].vector.begin(), vectors[x].vector.end(), [](double v) { return v == 0.0; }))
          throw Error("topic vector for " + labels[x] + " is zero");
      m.set(i, j, 1.0 - cosine_similarity(vectors[i].vector, vectors[j].vector));
    }
  return m;
}

// One vector pair per category pair. Pairs whose symmetric-difference
// samples cannot be drawn stay missing and are reported in `warnings`.
inline DistanceMatrix symdiff_distance_matrix(const TopicModel& model, const CorpusIndex& index,
                                              const std::vector<CategoryLabel>& categories, std::size_t n,
                                              std::uint64_t seed, std::vector<std::string>* warnings = nullptr) {
  std::vector<std::string> labels;
  for (const auto& c : categories) labels.push_back(c.str());
  DistanceMatrix m(labels, std::string(method_tag(TopicStrategy::symdiff)));
  for (std::size_t i = 0; i < categories.size(); ++i)
    for (std::size_t j = i + 1; j < categories.size(); ++j) {
      try {
        auto [u, v] = symdiff_vectors(model, index, categories[i], categories[j], n,
                                      pair_seed(seed, "symdiff", categories[i], categories[j]));
        m.set(i, j, 1.0 - cosine_similarity(u.vector, v.vector));
      } catch (const Error& e) {
        if (!warnings) throw;
        warnings->push_back(std::string("topic-symdiff: ") + e.what());
      }
    }
  return m;
}

}  // namespace genredist
