#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "genredist/corpus.hpp"
#include "genredist/distance_matrix.hpp"
#include "genredist/error.hpp"
#include "genredist/sampling.hpp"
#include "genredist/vocabulary.hpp"

namespace genredist {

struct TermVector {
  std::vector<double> weights;  // dense over the basis vocabulary
  std::uint64_t basis = 0;
};

// Top-k tokens by document frequency over the whole ingested corpus.
inline Vocabulary build_vocabulary(const CorpusIndex& index, std::size_t top_k) {
  return Vocabulary::from_document_frequency(index.document_frequency(), top_k);
}

// Smoothed idf: ln((N + 1) / (df + 1)) + 1.
inline double idf(std::uint64_t corpus_size, std::uint64_t df) {
  return std::log((static_cast<double>(corpus_size) + 1.0) / (static_cast<double>(df) + 1.0)) + 1.0;
}

// Aggregate tf-idf vector for a sample: term counts summed over its volumes,
// each weighted by corpus-level idf. Longer volumes contribute more.
inline TermVector genre_tfidf_vector(const CorpusIndex& index, const Sample& sample, const Vocabulary& vocab) {
  if (sample.volume_ids.empty()) throw Error("genre_tfidf_vector: sample " + sample.label + " is empty");
  TermVector v{std::vector<double>(vocab.size(), 0.0), vocab.id()};
  for (const auto& id : sample.volume_ids) {
    for (const auto& [token, count] : index.volume(id).tokens) {
      auto pos = vocab.find(token);
      if (pos >= 0) v.weights[static_cast<std::size_t>(pos)] += static_cast<double>(count);
    }
  }
  const auto& df = index.document_frequency();
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    auto it = df.find(vocab[i]);
    v.weights[i] *= idf(index.size(), it == df.end() ? 0 : it->second);
  }
  return v;
}

inline double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw Error("cosine_similarity: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw Error("cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

inline double cosine_similarity(const TermVector& u, const TermVector& v) {
  if (u.basis != v.basis) throw Error("cosine_similarity: vectors built on different vocabularies");
  return cosine_similarity(u.weights, v.weights);
}

// D[a][b] = 1 - cosine of the categories' aggregate tf-idf vectors.
inline DistanceMatrix tfidf_distance_matrix(const CorpusIndex& index, const std::vector<Sample>& samples,
                                            const Vocabulary& vocab) {
  std::vector<std::string> labels;
  std::vector<TermVector> vectors;
  for (const auto& s : samples) {
    labels.push_back(s.category ? s.category->str() : s.label);
    vectors.push_back(genre_tfidf_vector(index, s, vocab));
  }
  DistanceMatrix m(labels, "tfidf");
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      try {
        m.set(i, j, 1.0 - cosine_similarity(vectors[i], vectors[j]));
      } catch (const Error& e) {
        throw Error("tfidf: " + labels[i] + " / " + labels[j] + ": " + e.what());
      }
    }
  return m;
}

}  // namespace genredist
