// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "genredist/genredist.hpp"

using namespace genredist;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <typename... Args>
std::string fmt(const char* pattern, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, static_cast<double>(args)...);
  return buf;
}

CategoryLabel genre(std::string name) { return {std::move(name), LabelKind::genre}; }

VolumeRecord bare_volume(std::size_t i, int year, std::set<CategoryLabel> tags, TokenCounts tokens = {{"w", 1}}) {
  VolumeRecord v;
  v.volume_id = "v" + std::to_string(i);
  v.title_key = v.volume_id;
  v.year = year;
  v.tags = std::move(tags);
  v.tokens = std::move(tokens);
  return v;
}

// --- social proximity -----------------------------------------------------

Outcome pmi_oracle() {
  synth::SynthSpec spec;
  spec.n_categories = 6;
  spec.n_volumes = 1000;
  spec.vocab_size = 20;
  spec.tokens_per_volume = 5;
  spec.seed = 41;
  spec.co_assignment.assign(6, std::vector<double>(6, 0.01));
  for (std::size_t a = 0; a < 6; ++a) spec.co_assignment[a][a] = 0.08 + 0.02 * static_cast<double>(a);
  spec.co_assignment[0][1] = spec.co_assignment[1][0] = 0.05;
  spec.co_assignment[2][3] = spec.co_assignment[3][2] = 0.0;
  const CorpusIndex index(synth::to_records(spec, synth::generate_volumes(spec)));
  const auto cats = index.categories();

  const auto t0 = Clock::now();
  const auto records = compute_all_pmi(index, cats, 123);
  const double elapsed = seconds_since(t0);

  double worst = 0.0;
  for (const auto& rec : records) {
    // count and divide over the same normalization sample
    const auto t = draw_pmi_sample(index, rec.a, rec.b, 123);
    double na = 0, nb = 0, nab = 0;
    for (const auto& id : t) {
      const auto& v = index.volume(id);
      na += v.has_tag(rec.a);
      nb += v.has_tag(rec.b);
      nab += v.has_tag(rec.a) && v.has_tag(rec.b);
    }
    const double n = static_cast<double>(t.size());
    const double oracle = std::log(((nab + 0.1) / n) / ((na / n) * (nb / n)));
    worst = std::max(worst, std::abs(oracle - rec.pmi));
  }
  return {worst <= 1e-12 && elapsed < 10.0 && records.size() == 15,
          std::to_string(records.size()) + fmt(" pairs, max |diff| %.3g, %.2f s", worst, elapsed)};
}

Outcome pmi_independence() {
  Rng rng(2718);
  std::vector<VolumeRecord> volumes;
  for (std::size_t i = 0; i < 100000; ++i) {
    std::set<CategoryLabel> tags;
    if (rng.bernoulli(0.1)) tags.insert(genre("A"));
    if (rng.bernoulli(0.2)) tags.insert(genre("B"));
    volumes.push_back(bare_volume(i, 1850 + static_cast<int>(rng.index(100)), std::move(tags)));
  }
  const CorpusIndex index(std::move(volumes));
  const auto rec = compute_pmi(index, genre("A"), genre("B"), 9);
  return {std::abs(rec.pmi) < 0.05, fmt("pmi %.4f over %.0f sampled volumes", rec.pmi, double(rec.sample_size))};
}

// --- rank statistics and the cross-model distance -------------------------------

double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<long double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      long double less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= rx.size();
  my /= ry.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

Outcome rank_statistics() {
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng.index(60);
    const double grain = 1.0 + static_cast<double>(rng.index(6));  // coarse values force ties
    std::vector<double> x(n), y(n);
    do {
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::round(grain * rng.normal());
        y[i] = std::round(grain * (0.5 * x[i] / grain + rng.normal()));
      }
    } while (stats::is_constant(x) || stats::is_constant(y));
    worst = std::max(worst, std::abs(stats::spearman(x, y) - brute_spearman(x, y)));
  }
  // the bound is atanh(1 - 1e-6) = 7.25433..., quoted as 7.254
  const double bound = std::atanh(kRhoClamp);
  bool odd = true, bounded = true;
  double largest = 0.0;
  std::vector<double> edge = {-1.0, 1.0, -1.0 + 1e-17, 1.0 - 1e-17, 0.0, -0.0, 1.5, -1.5};
  for (int i = 0; i < 10000; ++i) edge.push_back(2.0 * rng.uniform() - 1.0);
  for (double r : edge) {
    odd = odd && fisher_z(-r) == -fisher_z(r);
    for (double s : {r, -r, 1.0, -1.0, 2.0 * rng.uniform() - 1.0}) {
      const double d = cross_model_distance(r, s);
      bounded = bounded && std::isfinite(d) && std::abs(d) <= bound;
      largest = std::max(largest, std::abs(d));
    }
  }
  return {worst <= 1e-12 && odd && bounded,
          fmt("max spearman diff %.3g, max |d| %.5f (bound %.5f)", worst, largest, bound) + (odd ? ", atanh odd" : ", atanh NOT odd")};
}

TrainedClassifier random_classifier(Rng& rng, const std::string& name, const Vocabulary& vocab) {
  TrainedClassifier m;
  m.category = genre(name);
  m.vocabulary = vocab;
  for (std::size_t j = 0; j < vocab.size(); ++j) {
    m.weights.push_back(rng.normal());
    m.scaling.mean.push_back(0.1 * rng.uniform());
    m.scaling.sd.push_back(0.05 + 0.1 * rng.uniform());
  }
  m.bias = rng.normal();
  return m;
}

Outcome distance_symmetry() {
  Rng rng(91);
  const Vocabulary vocab(std::vector<std::string>{"a", "b", "c", "d", "e", "f"});
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto A = random_classifier(rng, "A", vocab);
    auto B = random_classifier(rng, "B", vocab);
    std::vector<TokenCounts> books(80);
    for (auto& b : books)
      for (int t = 0; t < 30; ++t) ++b[vocab[rng.index(vocab.size())]];
    std::vector<const TokenCounts*> books_a, books_b;
    for (std::size_t i = 0; i < 40; ++i) books_a.push_back(&books[i]);
    for (std::size_t i = 40; i < 80; ++i) books_b.push_back(&books[i]);

    const bool pearson = trial % 2 == 1;
    const double ab = cross_apply_on(A, books_a, B, books_b, pearson).distance;
    const double ba = cross_apply_on(B, books_b, A, books_a, pearson).distance;
    if (ab != ba) ++failures;
    if (pearson) continue;

    // rescaling weights and shifting the bias transforms scores monotonically
    TrainedClassifier B2 = B;
    const double c = 0.1 + 5.0 * rng.uniform();
    for (double& w : B2.weights) w *= c;
    B2.bias = B2.bias * c + rng.normal();
    const double rescaled = cross_apply_on(A, books_a, B2, books_b).distance;

    // arbitrary strictly increasing maps applied to each model's raw scores
    auto scores = [](const TrainedClassifier& m, const std::vector<const TokenCounts*>& bs) {
      std::vector<double> s;
      for (const auto* b : bs) s.push_back(m.decision(*b));
      return s;
    };
    auto warp = [](std::vector<double> s, int kind) {
      for (double& v : s) v = kind == 0 ? std::exp(v) : kind == 1 ? v * v * v + v : std::atan(v) * 10.0 - 3.0;
      return s;
    };
    const int kind = static_cast<int>(rng.index(3));
    const double warped = cross_model_distance(
        stats::spearman(warp(scores(A, books_a), kind), scores(B, books_a)),
        stats::spearman(scores(B, books_b), warp(scores(A, books_b), (kind + 1) % 3)));
    if (rescaled != ab || warped != ab) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " of 100 fuzz cases broke symmetry or invariance"};
}

// --- logistic training --------------------------------------------------------

Outcome logistic_training() {
  Rng rng(5150);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(4 + rng.index(30));
    const auto p = static_cast<Eigen::Index>(1 + rng.index(8));
    Eigen::MatrixXd X(n, p);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
      y[static_cast<std::size_t>(i)] = rng.bernoulli(0.5);
    }
    Eigen::VectorXd w(p + 1);
    for (Eigen::Index j = 0; j <= p; ++j) w[j] = rng.normal();
    const double C = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
    const auto g = logistic::objective(X, y, w, C).gradient;
    Eigen::VectorXd fd(p + 1);
    for (Eigen::Index j = 0; j <= p; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(w[j]));
      Eigen::VectorXd up = w, down = w;
      up[j] += h;
      down[j] -= h;
      fd[j] = (logistic::objective(X, y, up, C).value - logistic::objective(X, y, down, C).value) / (2.0 * h);
    }
    worst_rel = std::max(worst_rel, (fd - g).norm() / std::max(g.norm(), 1e-12));
  }

  // separable: two disjoint one-hot classes, "alpha" for the category and
  // "beta" for the contrast
  Rng corpus_rng(8);
  auto one_hot = [&](bool marked) { return TokenCounts{{marked ? "alpha" : "beta", 1 + corpus_rng.index(5)}}; };
  std::vector<VolumeRecord> vols;
  Sample sample{"Marked:genre", genre("Marked"), {}, 0, {}, {}};
  MatchedContrast contrast;
  for (std::size_t i = 0; i < 200; ++i) {
    const bool marked = i % 2 == 0;
    vols.push_back(bare_volume(i, 1900, marked ? std::set<CategoryLabel>{genre("Marked")} : std::set<CategoryLabel>{},
                               one_hot(marked)));
    (marked ? sample.volume_ids : contrast.volume_ids).push_back(vols.back().volume_id);
  }
  const CorpusIndex separable(std::move(vols));
  const auto sep = train_genre_model(separable, sample, contrast, GridSpec::defaults(), 5, 1);
  std::size_t correct = 0;
  const std::size_t held_out = 200;
  for (std::size_t i = 0; i < held_out; ++i) {
    const bool marked = i % 2 == 0;
    correct += (sep.probability(one_hot(marked)) > 0.5) == marked;
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(held_out);

  // shuffled: labels assigned at random over volumes from one generator
  std::vector<VolumeRecord> same;
  Sample s2{"Null:genre", genre("Null"), {}, 0, {}, {}};
  MatchedContrast c2;
  std::vector<std::size_t> order(400);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  corpus_rng.shuffle(order);
  for (std::size_t i = 0; i < 400; ++i) {
    TokenCounts tokens;
    for (int t = 0; t < 150; ++t) ++tokens["w" + std::to_string(corpus_rng.index(200))];
    same.push_back(bare_volume(i, 1900, {}, tokens));
  }
  for (std::size_t k = 0; k < 400; ++k) (k < 200 ? s2.volume_ids : c2.volume_ids).push_back("v" + std::to_string(order[k]));
  const CorpusIndex shuffled(std::move(same));
  const auto null = train_genre_model(shuffled, s2, c2, GridSpec::defaults(), 5, 2);

  const bool pass = worst_rel < 1e-5 && sep.cv_score == 1.0 && accuracy >= 0.95 && null.cv_score >= 0.4 && null.cv_score <= 0.6;
  return {pass, fmt("gradient rel err %.2g, separable cv AUC %.4f, held-out accuracy %.3f, shuffled cv AUC %.4f",
                    worst_rel, sep.cv_score, accuracy, null.cv_score)};
}

// --- dilution --------------------------------------------------------------------

Outcome dilution_linearity() {
  const auto t0 = Clock::now();
  synth::SynthSpec spec;
  spec.n_categories = 3;
  spec.n_volumes = 1000;
  spec.vocab_size = 1000;
  spec.n_topics = 4;
  // the pair shares one generator; the third category is distinct
  spec.topics_per_category = {{0.7, 0.1, 0.1, 0.1}, {0.7, 0.1, 0.1, 0.1}, {0.1, 0.1, 0.1, 0.7}};
  spec.tokens_per_volume = 300;
  spec.seed = 1;
  spec.co_assignment = {{0.15, 0.0225, 0.0225}, {0.0225, 0.15, 0.0225}, {0.0225, 0.0225, 0.15}};
  const CorpusIndex index(synth::to_records(spec, synth::generate_volumes(spec)));
  const auto samples = draw_all_samples(index, index.categories(), 100, 17);
  const auto models = train_all(index, samples, GridSpec::defaults(), 5, 17, 1);
  const std::vector<double> fractions = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const auto curve = dilution_curve(models[0], models[1], index, fractions, 99);
  const double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "R^2 " << fmt("%.3f", curve.fit.r_squared) << ", slope " << fmt("%.3f", curve.fit.slope) << ", d(f) =";
  for (const auto& p : curve.points) os << ' ' << fmt("%.3f", p.distance);
  os << fmt(", %.1f s", elapsed);
  return {curve.fit.r_squared >= 0.9 && elapsed < 300.0, os.str()};
}

// --- topic model ---------------------------------------------------------------

Outcome lda_recovery() {
  synth::SynthSpec spec;
  spec.n_categories = 5;
  spec.n_topics = 5;
  spec.n_volumes = 2000;
  spec.vocab_size = 2000;
  spec.tokens_per_volume = 120;
  spec.seed = 12;
  spec.topics_per_category.assign(5, std::vector<double>(5, 0.2));
  spec.doc_concentration = 1.0;
  spec.co_assignment.assign(5, std::vector<double>(5, 0.0));
  const CorpusIndex index(synth::to_records(spec, synth::generate_volumes(spec)));
  std::vector<std::string> ids;
  for (const auto& [id, v] : index.volumes()) ids.push_back(id);

  const auto t0 = Clock::now();
  LdaConfig cfg;
  cfg.topics = 5;
  cfg.iterations = 300;
  cfg.seed = 4;
  const auto model = fit_lda(index, ids, {}, cfg);
  const double elapsed = seconds_since(t0);

  double worst_norm = 0.0;
  for (std::size_t k = 0; k < model.topics; ++k) {
    double row = 0.0;
    for (std::size_t w = 0; w < model.lexicon.size(); ++w) row += model.word_probability(k, w);
    worst_norm = std::max(worst_norm, std::abs(row - 1.0));
  }
  for (const auto& [id, theta] : model.doc_topic) {
    double s = 0.0;
    for (double x : theta) s += x;
    worst_norm = std::max(worst_norm, std::abs(s - 1.0));
  }

  // true rows projected onto the fitted lexicon, then greedy matching
  const auto truth = synth::topic_word(spec);
  std::vector<std::vector<double>> fitted(5, std::vector<double>(spec.vocab_size, 0.0));
  for (std::size_t w = 0; w < model.lexicon.size(); ++w) {
    std::size_t idx = 0;
    for (char ch : model.lexicon[w].substr(2)) idx = idx * 26 + static_cast<std::size_t>(ch - 'a');
    for (std::size_t k = 0; k < 5; ++k) fitted[k][idx] = model.word_probability(k, w);
  }
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) pairs.emplace_back(cosine_similarity(truth[a], fitted[b]), a, b);
  std::sort(pairs.rbegin(), pairs.rend());
  std::set<std::size_t> used_a, used_b;
  double total = 0.0;
  for (const auto& [cos, a, b] : pairs) {
    if (used_a.contains(a) || used_b.contains(b)) continue;
    used_a.insert(a);
    used_b.insert(b);
    total += cos;
  }
  const double mean_cos = total / 5.0;
  return {mean_cos >= 0.7 && worst_norm <= 1e-9 && elapsed < 300.0,
          fmt("mean matched cosine %.3f, normalization error %.2g, %.1f s", mean_cos, worst_norm, elapsed)};
}

// --- embedding -----------------------------------------------------------------

Outcome mds_recovery() {
  Rng rng(64);
  Eigen::MatrixXd pts(10, 2);
  for (Eigen::Index i = 0; i < 10; ++i) pts.row(i) << 20.0 * rng.uniform() - 10.0, 20.0 * rng.uniform() - 10.0;
  std::vector<std::string> labels;
  for (int i = 0; i < 10; ++i) labels.push_back("P" + std::to_string(i) + ":genre");
  DistanceMatrix D(labels, "points");
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = i + 1; j < 10; ++j)
      D.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j), (pts.row(i) - pts.row(j)).norm());
  const auto r = mds_embed(D, 2);
  Eigen::MatrixXd y(10, 2);
  for (Eigen::Index i = 0; i < 10; ++i) y.row(i) << r.coords[static_cast<std::size_t>(i)][0], r.coords[static_cast<std::size_t>(i)][1];
  const Eigen::MatrixXd xc = pts.rowwise() - pts.colwise().mean();
  const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(yc.transpose() * xc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double rmse = std::sqrt((yc * svd.matrixU() * svd.matrixV().transpose() - xc).squaredNorm() / 10.0);

  DistanceMatrix neg({"A:genre", "B:genre", "C:genre", "D:genre"}, "supervised");
  neg.set(0, 1, -2.0);
  neg.set(0, 2, 0.5);
  neg.set(0, 3, 1.0);
  neg.set(1, 2, -1.0);
  neg.set(1, 3, 0.0);
  neg.set(2, 3, 3.0);
  const auto s = mds_embed(neg, 2);
  bool diagonal_ok = true;
  for (std::size_t i = 0; i < 4; ++i) diagonal_ok = diagonal_ok && neg.at(i, i) == 0.0;
  return {rmse < 1e-6 && s.shift_applied == 2.0 && diagonal_ok && !s.coords.empty(),
          fmt("Procrustes RMSE %.2g, shift applied %.1f", rmse, s.shift_applied)};
}

// --- qualitative ordering --------------------------------------------------------

Outcome qualitative_ordering() {
  const auto t0 = Clock::now();
  synth::SynthSpec spec;
  spec.n_categories = 8;
  spec.n_volumes = 3000;
  spec.vocab_size = 2000;
  spec.n_topics = 12;
  // neighbouring categories share topics, so true distances are graded
  for (std::size_t c = 0; c < 8; ++c) {
    std::vector<double> row(12);
    double z = 0.0;
    const double pos = static_cast<double>(c) * 11.0 / 7.0;
    for (std::size_t k = 0; k < 12; ++k) z += row[k] = std::exp(-0.5 * std::pow((static_cast<double>(k) - pos) / 1.5, 2));
    for (double& x : row) x /= z;
    spec.topics_per_category.push_back(row);
  }
  spec.drift_rate = 0.006;
  spec.tokens_per_volume = 600;
  spec.seed = 7;
  spec.year_sd = 12.0;
  spec.category_year_centers = {1860, 1940, 1875, 1925, 1890, 1910, 1900, 1935};
  spec.co_assignment.assign(8, std::vector<double>(8, 0.06 * 0.06));
  for (std::size_t a = 0; a < 8; ++a) spec.co_assignment[a][a] = 0.06;

  const auto truth = synth::compute_truth(spec);
  const CorpusIndex index(synth::to_records(spec, synth::generate_volumes(spec)));
  std::vector<std::string> labels;
  for (const auto& c : truth.categories) labels.push_back(c.str());
  DistanceMatrix js(labels, "truth-js");
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j) js.set(i, j, truth.js[i][j]);

  const std::uint64_t seed = 17;
  const auto samples = draw_all_samples(index, truth.categories, 100, seed);
  std::vector<Sample> primaries;
  for (const auto& s : samples) primaries.push_back(s.sample);

  std::vector<DistanceMatrix> methods;
  methods.push_back(tfidf_distance_matrix(index, primaries, build_vocabulary(index, 10000)));
  LdaConfig lda;
  lda.topics = 24;
  lda.iterations = 200;
  lda.seed = derive_seed(seed, "lda");
  std::vector<std::string> all;
  for (const auto& [id, v] : index.volumes()) all.push_back(id);
  const auto model = fit_lda(index, all, default_stopwords(), lda);
  const auto centered = time_center(model, index, 5);
  std::vector<GenreTopicVector> summed_v, centered_v;
  for (const auto& s : primaries) {
    summed_v.push_back(summed_vector(model, s));
    centered_v.push_back(centered_vector(centered, model.topics, s));
  }
  methods.push_back(topic_distance_matrix(summed_v, TopicStrategy::summed));
  methods.push_back(symdiff_distance_matrix(model, index, truth.categories, 100, seed));
  methods.push_back(topic_distance_matrix(centered_v, TopicStrategy::time_centered));
  const auto models = train_all(index, samples, GridSpec::defaults(), 5, seed, 1);
  methods.push_back(supervised_distance_matrix(models, index));

  std::map<std::string, double> r;
  bool all_strong = true;
  std::ostringstream os;
  for (const auto& m : methods) {
    r[m.method()] = correlate(m, js).r;
    all_strong = all_strong && r[m.method()] >= 0.5;
    os << m.method() << ' ' << fmt("%.3f", r[m.method()]) << ", ";
  }
  const bool ordered = r["topic-centered"] > r["tfidf"] && r["supervised"] > r["tfidf"];
  const double elapsed = seconds_since(t0);
  os << fmt("%.0f s", elapsed);
  return {all_strong && ordered && elapsed < 900.0, os.str()};
}

// --- determinism -----------------------------------------------------------------

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).generic_string()] = read_file(e.path());
  return out;
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / ("genredist-acceptance-" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  synth::SynthSpec spec;
  spec.n_categories = 5;
  spec.n_volumes = 800;
  spec.vocab_size = 400;
  spec.drift_rate = 0.003;
  spec.tokens_per_volume = 200;
  spec.seed = 21;
  spec.co_assignment.assign(5, std::vector<double>(5, 0.03));
  for (std::size_t a = 0; a < 5; ++a) spec.co_assignment[a][a] = 0.15;
  synth::generate(spec, root / "corpus");
  {
    std::ofstream ini(root / "run.ini");
    ini << "[run]\nseed = 17\nthreads = 2\nout_dir = out\n"
           "[corpus]\nmetadata = corpus/metadata.jsonl\nfeatures = corpus/features\n"
           "[categories]\nsample_size = 40\n"
           "[topics]\ntopics = 10\niterations = 60\n"
           "[supervised]\ngrid = 100,300:0.01,0.1,1\nfolds = 3\n";
  }
  const auto config = load_config(root / "run.ini");
  const auto first = run_pipeline(config);
  const auto a = snapshot(root / "out");
  std::filesystem::remove_all(root / "out");
  const auto second = run_pipeline(config);
  const auto b = snapshot(root / "out");
  std::filesystem::remove_all(root);

  std::size_t differing = 0, checked = 0;
  for (const auto& [name, bytes] : a) {
    const bool artifact = name.ends_with(".csv") || name.ends_with(".json") || name.ends_with(".svg");
    checked += artifact;
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) ++differing;
  }
  const bool pass = first.ok && second.ok && a.size() == b.size() && differing == 0 && checked >= 10;
  return {pass, std::to_string(checked) + " CSV/JSON/SVG artifacts (" + std::to_string(a.size()) + " files), " +
                    std::to_string(differing) + " differ" + (first.ok ? "" : ", first run failed")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"pmi-oracle", pmi_oracle},
      {"pmi-independence", pmi_independence},
      {"rank-statistics", rank_statistics},
      {"distance-symmetry-invariance", distance_symmetry},
      {"logistic-training", logistic_training},
      {"dilution-linearity", dilution_linearity},
      {"lda-recovery", lda_recovery},
      {"mds-recovery", mds_recovery},
      {"qualitative-ordering", qualitative_ordering},
      {"pipeline-determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
