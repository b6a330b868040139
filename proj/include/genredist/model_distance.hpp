#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "genredist/corpus.hpp"
#include "genredist/distance_matrix.hpp"
#include "genredist/error.hpp"
#include "genredist/logistic.hpp"
#include "genredist/parallel.hpp"
#include "genredist/random.hpp"
#include "genredist/sampling.hpp"
#include "genredist/stats.hpp"
#include "genredist/vocabulary.hpp"

namespace genredist {

// |rho| is clamped here before arctanh so identical rankings give a finite
// distance.
inline constexpr double kRhoClamp = 1.0 - 1e-6;

struct FeatureScaling {
  std::vector<double> mean;
  std::vector<double> sd;
};

// Relative frequencies over the vocabulary: count / total in-vocabulary tokens.
inline std::vector<double> relative_frequencies(const TokenCounts& tokens, const Vocabulary& vocab) {
  std::vector<double> out(vocab.size(), 0.0);
  double total = 0.0;
  for (const auto& [token, count] : tokens) {
    auto pos = vocab.find(token);
    if (pos < 0) continue;
    out[static_cast<std::size_t>(pos)] += static_cast<double>(count);
    total += static_cast<double>(count);
  }
  if (total == 0.0) throw Error("volume has no in-vocabulary tokens");
  for (double& x : out) x /= total;
  return out;
}

// Standardizes in place; a feature with zero spread is emitted as 0.
inline void apply_scaling(std::vector<double>& features, const FeatureScaling& scaling) {
  for (std::size_t j = 0; j < features.size(); ++j)
    features[j] = scaling.sd[j] > 0.0 ? (features[j] - scaling.mean[j]) / scaling.sd[j] : 0.0;
}

inline std::vector<double> featurize(const VolumeRecord& volume, const Vocabulary& vocab,
                                     const FeatureScaling& scaling) {
  std::vector<double> features;
  try {
    features = relative_frequencies(volume.tokens, vocab);
  } catch (const Error& e) {
    throw Error("featurize " + volume.volume_id + ": " + e.what());
  }
  apply_scaling(features, scaling);
  return features;
}

inline FeatureScaling fit_scaling(const Eigen::MatrixXd& raw) {
  FeatureScaling s;
  const auto n = static_cast<double>(raw.rows());
  s.mean.resize(static_cast<std::size_t>(raw.cols()));
  s.sd.resize(static_cast<std::size_t>(raw.cols()));
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double m = raw.col(j).mean();
    const double var = (raw.col(j).array() - m).square().sum() / n;
    s.mean[static_cast<std::size_t>(j)] = m;
    s.sd[static_cast<std::size_t>(j)] = std::sqrt(var);
  }
  return s;
}

struct GridSpec {
  std::vector<std::size_t> feature_counts;
  std::vector<double> regularization;  // C, larger = weaker penalty

  static GridSpec defaults() { return {{500, 1000, 2000, 4000, 8000}, {0.001, 0.01, 0.1, 1.0, 10.0}}; }

  // "default", or "500,1000:0.01,0.1,1" (feature counts, then C values)
  static GridSpec parse(const std::string& text) {
    if (text == "default") return defaults();
    auto colon = text.find(':');
    if (colon == std::string::npos) throw Error("grid must be 'default' or 'N1,N2,...:C1,C2,...'");
    GridSpec g;
    auto split = [](const std::string& s) {
      std::vector<std::string> parts;
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) parts.push_back(item);
      return parts;
    };
    try {
      for (const auto& p : split(text.substr(0, colon))) g.feature_counts.push_back(std::stoul(p));
      for (const auto& p : split(text.substr(colon + 1))) g.regularization.push_back(std::stod(p));
    } catch (const std::exception&) {
      throw Error("bad grid '" + text + "'");
    }
    if (g.feature_counts.empty() || g.regularization.empty()) throw Error("grid '" + text + "' is empty");
    return g;
  }
};

struct GridCell {
  std::size_t features = 0;
  double regularization = 0.0;
  double cv_auc = 0.0;
};

struct TrainedClassifier {
  CategoryLabel category;
  Vocabulary vocabulary;
  std::vector<double> weights;
  double bias = 0.0;
  double regularization = 0.0;
  FeatureScaling scaling;
  Sample train_sample;
  MatchedContrast contrast;
  double cv_score = 0.0;
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  std::vector<GridCell> grid;

  // log-odds of membership; ranks identically to the probability
  double decision(const TokenCounts& tokens) const {
    auto x = relative_frequencies(tokens, vocabulary);
    apply_scaling(x, scaling);
    double m = bias;
    for (std::size_t j = 0; j < x.size(); ++j) m += weights[j] * x[j];
    return m;
  }

  // strictly inside (0, 1)
  double probability(const TokenCounts& tokens) const {
    return std::clamp(logistic::sigmoid(decision(tokens)), 1e-15, 1.0 - 1e-15);
  }

  std::vector<std::string> population() const {
    std::vector<std::string> ids = train_sample.volume_ids;
    ids.insert(ids.end(), contrast.volume_ids.begin(), contrast.volume_ids.end());
    return ids;
  }
};

namespace detail {

inline Eigen::MatrixXd raw_matrix(const std::vector<const TokenCounts*>& docs, const Vocabulary& vocab) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto row = relative_frequencies(*docs[i], vocab);
    for (std::size_t j = 0; j < row.size(); ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return X;
}

inline Eigen::MatrixXd scaled(const Eigen::MatrixXd& raw, const FeatureScaling& s) {
  Eigen::MatrixXd X = raw;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    if (s.sd[jj] > 0.0)
      X.col(j) = (X.col(j).array() - s.mean[jj]) / s.sd[jj];
    else
      X.col(j).setZero();
  }
  return X;
}

inline Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

inline Vocabulary population_vocabulary(const std::vector<const TokenCounts*>& docs, std::size_t top_k) {
  std::map<std::string, std::uint64_t> df;
  for (const auto* doc : docs)
    for (const auto& [token, count] : *doc)
      if (count > 0) ++df[token];
  return Vocabulary::from_document_frequency(df, top_k);
}

// Stratified fold assignment: each class is shuffled and dealt round-robin.
inline std::vector<std::size_t> assign_folds(const std::vector<int>& labels, std::size_t folds, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> fold(labels.size());
  for (int cls : {1, 0}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k) fold[members[k]] = k % folds;
  }
  return fold;
}

struct FittedModel {
  Vocabulary vocabulary;
  FeatureScaling scaling;
  std::vector<double> weights;
  double bias = 0.0;
};

inline FittedModel fit_fixed(const std::vector<const TokenCounts*>& docs, const std::vector<int>& labels,
                             std::size_t features, double C) {
  FittedModel m;
  m.vocabulary = population_vocabulary(docs, features);
  const Eigen::MatrixXd raw = raw_matrix(docs, m.vocabulary);
  m.scaling = fit_scaling(raw);
  auto result = logistic::fit(scaled(raw, m.scaling), labels, C);
  m.weights.assign(result.weights.data(), result.weights.data() + result.weights.size());
  m.bias = result.bias;
  return m;
}

struct TuneResult {
  std::vector<GridCell> cells;
  std::size_t best = 0;
};

// k-fold cross-validated AUC for every grid cell; the best cell maximizes
// mean held-out AUC, ties going to fewer features, then stronger
// regularization (smaller C).
inline TuneResult tune(const std::vector<const TokenCounts*>& docs, const std::vector<int>& labels,
                       const GridSpec& grid, std::size_t folds, std::uint64_t seed) {
  if (grid.feature_counts.empty() || grid.regularization.empty()) throw Error("grid search: empty grid");
  if (folds < 2) throw Error("grid search: need at least two folds");
  const Vocabulary full = population_vocabulary(docs, 0);
  std::set<std::size_t> counts;
  for (auto n : grid.feature_counts) counts.insert(std::min<std::size_t>(n, full.size()));
  std::vector<double> Cs = grid.regularization;
  std::sort(Cs.begin(), Cs.end());
  Cs.erase(std::unique(Cs.begin(), Cs.end()), Cs.end());

  const auto fold_of = assign_folds(labels, folds, seed);
  TuneResult out;
  for (std::size_t n_features : counts) {
    const Vocabulary vocab = full.prefix(n_features);
    const Eigen::MatrixXd raw = raw_matrix(docs, vocab);
    std::vector<double> auc_sum(Cs.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < docs.size(); ++i) (fold_of[i] == f ? test : train).push_back(i);
      const Eigen::MatrixXd train_raw = rows_of(raw, train);
      const FeatureScaling scaling = fit_scaling(train_raw);
      const Eigen::MatrixXd Xtrain = scaled(train_raw, scaling);
      const Eigen::MatrixXd Xtest = scaled(rows_of(raw, test), scaling);
      std::vector<int> ytrain, ytest;
      for (auto i : train) ytrain.push_back(labels[i]);
      for (auto i : test) ytest.push_back(labels[i]);
      Eigen::VectorXd warm;
      for (std::size_t c = 0; c < Cs.size(); ++c) {
        auto fit = logistic::fit(Xtrain, ytrain, Cs[c], {}, c == 0 ? nullptr : &warm);
        warm.resize(fit.weights.size() + 1);
        warm.head(fit.weights.size()) = fit.weights;
        warm[fit.weights.size()] = fit.bias;
        const Eigen::VectorXd scores = (Xtest * fit.weights).array() + fit.bias;
        std::vector<double> s(scores.data(), scores.data() + scores.size());
        auc_sum[c] += stats::auc(s, ytest);
      }
    }
    for (std::size_t c = 0; c < Cs.size(); ++c)
      out.cells.push_back(GridCell{n_features, Cs[c], auc_sum[c] / static_cast<double>(folds)});
  }
  for (std::size_t i = 1; i < out.cells.size(); ++i)
    if (out.cells[i].cv_auc > out.cells[out.best].cv_auc) out.best = i;
  return out;
}

}  // namespace detail

// Regularized logistic model of a category against its year-matched
// contrast set, tuned by grid search over (feature count, C).
inline TrainedClassifier train_genre_model(const CorpusIndex& index, const Sample& sample,
                                           const MatchedContrast& contrast, const GridSpec& grid, std::size_t folds,
                                           std::uint64_t seed) {
  if (sample.volume_ids.size() != contrast.volume_ids.size())
    throw Error("train_genre_model: sample and contrast sizes differ for " + sample.label);
  if (sample.volume_ids.empty()) throw Error("train_genre_model: empty sample " + sample.label);
  std::vector<const TokenCounts*> docs;
  std::vector<int> labels;
  for (const auto& id : sample.volume_ids) {
    docs.push_back(&index.volume(id).tokens);
    labels.push_back(1);
  }
  for (const auto& id : contrast.volume_ids) {
    docs.push_back(&index.volume(id).tokens);
    labels.push_back(0);
  }
  auto tuned = detail::tune(docs, labels, grid, folds, seed);
  const GridCell best = tuned.cells[tuned.best];
  auto fitted = detail::fit_fixed(docs, labels, best.features, best.regularization);

  TrainedClassifier model;
  model.category = sample.category.value_or(CategoryLabel{sample.label, LabelKind::genre});
  model.vocabulary = std::move(fitted.vocabulary);
  model.weights = std::move(fitted.weights);
  model.bias = fitted.bias;
  model.regularization = best.regularization;
  model.scaling = std::move(fitted.scaling);
  model.train_sample = sample;
  model.contrast = contrast;
  model.cv_score = best.cv_auc;
  model.seed = seed;
  model.folds = folds;
  model.grid = std::move(tuned.cells);
  return model;
}

struct CrossApplication {
  CategoryLabel a;
  CategoryLabel b;
  double rho_a = 0.0;
  double rho_b = 0.0;
  double distance = 0.0;
};

inline double fisher_z(double rho) { return std::atanh(std::clamp(rho, -kRhoClamp, kRhoClamp)); }

// d = -(z(rho_a) + z(rho_b)) / 2; the sum is commutative, so swapping the two
// models gives a bit-identical distance.
inline double cross_model_distance(double rho_a, double rho_b) { return -0.5 * (fisher_z(rho_a) + fisher_z(rho_b)); }

// Agreement between `own` and `other` when both score the same books:
// Spearman on log-odds, or Pearson on probabilities.
inline double ranking_agreement(const TrainedClassifier& own, const TrainedClassifier& other,
                                const std::vector<const TokenCounts*>& books, bool pearson) {
  std::vector<double> s_own, s_other;
  for (const auto* tokens : books) {
    if (pearson) {
      s_own.push_back(own.probability(*tokens));
      s_other.push_back(other.probability(*tokens));
    } else {
      s_own.push_back(own.decision(*tokens));
      s_other.push_back(other.decision(*tokens));
    }
  }
  for (const auto* m : {&own, &other})
    if (stats::is_constant(m == &own ? s_own : s_other))
      throw Error("model of " + m->category.str() + " gives constant scores on the books of " + own.category.str());
  return pearson ? stats::pearson(s_own, s_other) : stats::spearman(s_own, s_other);
}

inline std::vector<const TokenCounts*> population_tokens(const CorpusIndex& index, const TrainedClassifier& m) {
  std::vector<const TokenCounts*> out;
  for (const auto& id : m.population()) out.push_back(&index.volume(id).tokens);
  return out;
}

inline CrossApplication cross_apply_on(const TrainedClassifier& A, const std::vector<const TokenCounts*>& books_a,
                                       const TrainedClassifier& B, const std::vector<const TokenCounts*>& books_b,
                                       bool pearson = false) {
  if (A.category == B.category) throw Error("cross_apply: self-comparison of " + A.category.str());
  CrossApplication out;
  out.a = A.category;
  out.b = B.category;
  out.rho_a = ranking_agreement(A, B, books_a, pearson);
  out.rho_b = ranking_agreement(B, A, books_b, pearson);
  out.distance = cross_model_distance(out.rho_a, out.rho_b);
  return out;
}

// Each model ranks the other's training population (sample plus contrast).
inline CrossApplication cross_apply(const TrainedClassifier& A, const TrainedClassifier& B, const CorpusIndex& index,
                                    bool pearson = false) {
  return cross_apply_on(A, population_tokens(index, A), B, population_tokens(index, B), pearson);
}

inline DistanceMatrix supervised_distance_matrix(const std::vector<TrainedClassifier>& models,
                                                 const CorpusIndex& index, bool pearson = false,
                                                 unsigned threads = 1) {
  std::vector<std::string> labels;
  for (const auto& m : models) labels.push_back(m.category.str());
  DistanceMatrix out(labels, pearson ? "supervised-pearson" : "supervised");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = i + 1; j < models.size(); ++j) pairs.emplace_back(i, j);
  std::vector<double> d(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    d[k] = cross_apply(models[pairs[k].first], models[pairs[k].second], index, pearson).distance;
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) out.set(pairs[k].first, pairs[k].second, d[k]);
  return out;
}

// Replaces round(fraction * T) of a volume's T tokens, chosen uniformly
// without replacement, with draws from a unigram distribution.
class Diluter {
 public:
  explicit Diluter(const CorpusIndex& index) {
    std::map<std::string, double> totals;
    for (const auto& [id, v] : index.volumes())
      for (const auto& [token, count] : v.tokens) totals[token] += static_cast<double>(count);
    double acc = 0.0;
    for (const auto& [token, total] : totals) {
      tokens_.push_back(token);
      acc += total;
      cdf_.push_back(acc);
    }
  }

  TokenCounts dilute(const TokenCounts& volume, double fraction, Rng& rng) const {
    std::uint64_t total = 0;
    for (const auto& [t, c] : volume) total += c;
    const auto replace = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(total)));
    TokenCounts out;
    // selection sampling over token positions
    std::uint64_t remaining = total, to_remove = replace;
    for (const auto& [token, count] : volume) {
      std::uint64_t kept = 0;
      for (std::uint64_t i = 0; i < count; ++i, --remaining) {
        if (to_remove > 0 && rng.uniform() * static_cast<double>(remaining) < static_cast<double>(to_remove))
          --to_remove;
        else
          ++kept;
      }
      if (kept > 0) out[token] += kept;
    }
    for (std::uint64_t i = 0; i < replace; ++i) ++out[tokens_[rng.categorical_cdf(cdf_)]];
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<double> cdf_;
};

struct DilutionPoint {
  double fraction = 0.0;
  double distance = 0.0;
};

struct DilutionCurve {
  std::vector<DilutionPoint> points;
  stats::LinearFit fit;

  // Dilution fraction equivalent to distance d, read off the linear fit.
  double equivalent_fraction(double d) const { return fit.slope == 0.0 ? 0.0 : (d - fit.intercept) / fit.slope; }
};

// Calibration curve. For each fraction f every volume in either model's
// population is diluted once, B is refit on its diluted population with its
// tuned hyperparameters, and the two models are compared with A reading the
// original books and B reading the diluted copies. f = 0 reproduces
// cross_apply(A, B).
inline DilutionCurve dilution_curve(const TrainedClassifier& A, const TrainedClassifier& B, const CorpusIndex& index,
                                    const std::vector<double>& fractions, std::uint64_t seed, bool pearson = false) {
  if (A.category == B.category) throw Error("dilution_curve: self-comparison of " + A.category.str());
  const Diluter diluter(index);
  const auto ids_a = A.population();
  const auto ids_b = B.population();
  std::set<std::string> all(ids_a.begin(), ids_a.end());
  all.insert(ids_b.begin(), ids_b.end());
  std::vector<int> labels(B.train_sample.volume_ids.size(), 1);
  labels.resize(ids_b.size(), 0);

  auto scores = [&](const TrainedClassifier& m, const std::vector<const TokenCounts*>& books) {
    std::vector<double> out;
    for (const auto* t : books) out.push_back(pearson ? m.probability(*t) : m.decision(*t));
    if (stats::is_constant(out)) throw Error("model of " + m.category.str() + " gives constant scores under dilution");
    return out;
  };
  auto agreement = [&](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson ? stats::pearson(x, y) : stats::spearman(x, y);
  };

  DilutionCurve curve;
  for (double f : fractions) {
    if (f < 0.0 || f >= 1.0) throw Error("dilution fraction must be in [0, 1)");
    Rng rng(derive_seed(seed, "dilution|" + csv::format_number(f)));
    std::map<std::string, TokenCounts> diluted;
    for (const auto& id : all) diluted.emplace(id, diluter.dilute(index.volume(id).tokens, f, rng));
    auto originals = [&](const std::vector<std::string>& ids) {
      std::vector<const TokenCounts*> out;
      for (const auto& id : ids) out.push_back(&index.volume(id).tokens);
      return out;
    };
    auto copies = [&](const std::vector<std::string>& ids) {
      std::vector<const TokenCounts*> out;
      for (const auto& id : ids) out.push_back(&diluted.at(id));
      return out;
    };

    auto fitted = detail::fit_fixed(copies(ids_b), labels, B.vocabulary.size(), B.regularization);
    TrainedClassifier refit = B;
    refit.vocabulary = std::move(fitted.vocabulary);
    refit.scaling = std::move(fitted.scaling);
    refit.weights = std::move(fitted.weights);
    refit.bias = fitted.bias;

    const double rho_a = agreement(scores(A, originals(ids_a)), scores(refit, copies(ids_a)));
    const double rho_b = agreement(scores(refit, copies(ids_b)), scores(A, originals(ids_b)));
    curve.points.push_back({f, cross_model_distance(rho_a, rho_b)});
  }
  if (curve.points.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& p : curve.points) {
      x.push_back(p.fraction);
      y.push_back(p.distance);
    }
    curve.fit = stats::linear_fit(x, y);
  }
  return curve;
}

// JSON persistence for trained models (one file per category).
inline nlohmann::json to_json(const TrainedClassifier& m) {
  nlohmann::json j;
  j["category"] = m.category.str();
  j["vocabulary"] = m.vocabulary.tokens();
  j["weights"] = m.weights;
  j["bias"] = m.bias;
  j["regularization"] = m.regularization;
  j["scaling"] = {{"mean", m.scaling.mean}, {"sd", m.scaling.sd}};
  j["train_sample"] = to_json(m.train_sample);
  j["contrast"] = {{"volume_ids", m.contrast.volume_ids},
                   {"seed", m.contrast.seed},
                   {"max_offset_used", m.contrast.max_offset_used}};
  j["cv_score"] = m.cv_score;
  j["seed"] = m.seed;
  j["folds"] = m.folds;
  auto grid = nlohmann::json::array();
  for (const auto& c : m.grid) grid.push_back({{"features", c.features}, {"C", c.regularization}, {"cv_auc", c.cv_auc}});
  j["grid"] = grid;
  return j;
}

inline TrainedClassifier classifier_from_json(const nlohmann::json& j) {
  TrainedClassifier m;
  try {
    m.category = CategoryLabel::parse(j.at("category").get<std::string>());
    m.vocabulary = Vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.regularization = j.at("regularization").get<double>();
    m.scaling.mean = j.at("scaling").at("mean").get<std::vector<double>>();
    m.scaling.sd = j.at("scaling").at("sd").get<std::vector<double>>();
    m.train_sample = sample_from_json(j.at("train_sample"));
    m.contrast.target = m.train_sample;
    m.contrast.volume_ids = j.at("contrast").at("volume_ids").get<std::vector<std::string>>();
    m.contrast.seed = j.at("contrast").value("seed", std::uint64_t{0});
    m.contrast.max_offset_used = j.at("contrast").value("max_offset_used", 0);
    m.cv_score = j.at("cv_score").get<double>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.folds = j.value("folds", std::size_t{0});
    for (const auto& c : j.value("grid", nlohmann::json::array()))
      m.grid.push_back(GridCell{c.at("features").get<std::size_t>(), c.at("C").get<double>(), c.at("cv_auc").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model file: ") + e.what());
  }
  if (m.weights.size() != m.vocabulary.size() || m.scaling.mean.size() != m.vocabulary.size() ||
      m.scaling.sd.size() != m.vocabulary.size())
    throw Error("model of " + m.category.str() + ": weights and vocabulary differ in length");
  return m;
}

}  // namespace genredist
