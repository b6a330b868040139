#include <gtest/gtest.h>

#include <cmath>

#include "genredist/model_distance.hpp"
#include "genredist/synth.hpp"
#include "test_util.hpp"

using namespace genredist;
using namespace genredist::testing;

namespace {

synth::SynthSpec three_way_spec() {
  synth::SynthSpec s;
  s.n_categories = 3;
  s.n_volumes = 700;
  s.vocab_size = 300;
  s.n_topics = 3;
  s.topics_per_category = {{0.8, 0.1, 0.1}, {0.6, 0.3, 0.1}, {0.1, 0.1, 0.8}};
  s.co_assignment = {{0.2, 0.04, 0.04}, {0.04, 0.2, 0.04}, {0.04, 0.04, 0.2}};
  s.tokens_per_volume = 200;
  s.seed = 3;
  return s;
}

struct Fixture {
  CorpusIndex index;
  std::vector<TrainedClassifier> models;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const auto spec = three_way_spec();
    Fixture out{CorpusIndex(synth::to_records(spec, synth::generate_volumes(spec))), {}};
    const auto grid = GridSpec::parse("50,100:0.01,1");
    for (std::size_t c = 0; c < 3; ++c) {
      const auto label = synth::category(spec, c);
      auto s = draw_category_sample(out.index, label, 40, derive_seed(1, label.str()));
      auto contrast = draw_matched_contrast(out.index, s, {label}, derive_seed(2, label.str()));
      out.models.push_back(train_genre_model(out.index, s, contrast, grid, 3, derive_seed(3, label.str())));
    }
    return out;
  }();
  return f;
}

}  // namespace

TEST(Features, RelativeFrequencies) {
  const Vocabulary vocab(std::vector<std::string>{"a", "b", "z"});
  const auto f = relative_frequencies({{"a", 3}, {"b", 1}, {"q", 4}}, vocab);
  // normalized by in-vocabulary tokens only
  EXPECT_DOUBLE_EQ(f[0], 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(f[1], 1.0 / 4.0);
  EXPECT_EQ(f[2], 0.0);
}

TEST(Features, ConstantColumnScalesToZero) {
  Eigen::MatrixXd raw(3, 2);
  raw << 1, 5, 2, 5, 3, 5;
  const auto s = fit_scaling(raw);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.sd[0], std::sqrt(2.0 / 3.0));
  std::vector<double> row = {2.0, 7.0};
  apply_scaling(row, s);
  EXPECT_EQ(row[0], 0.0);
  EXPECT_EQ(row[1], 0.0);
}

TEST(Grid, Parsing) {
  const auto g = GridSpec::parse("10,20:0.5,2");
  EXPECT_EQ(g.feature_counts, (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(g.regularization, (std::vector<double>{0.5, 2.0}));
  EXPECT_EQ(GridSpec::parse("default").feature_counts.size(), 5u);
  EXPECT_THROW(GridSpec::parse("10,20"), Error);
  EXPECT_THROW(GridSpec::parse("x:1"), Error);
  EXPECT_THROW(GridSpec::parse(":1"), Error);
}

TEST(Grid, FoldsAreStratified) {
  std::vector<int> labels(23, 1);
  labels.resize(50, 0);
  const auto folds = detail::assign_folds(labels, 5, 4);
  std::vector<int> pos(5, 0), neg(5, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg)[folds[i]]++;
  for (int k = 0; k < 5; ++k) {
    EXPECT_GE(pos[k], 4);
    EXPECT_LE(pos[k], 5);
    EXPECT_GE(neg[k], 5);
    EXPECT_LE(neg[k], 6);
  }
}

TEST(CrossDistance, FisherTransformOddAndBounded) {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const double r = 2.0 * rng.uniform() - 1.0;
    EXPECT_EQ(fisher_z(-r), -fisher_z(r));
  }
  const double bound = std::atanh(1.0 - 1e-6);
  EXPECT_NEAR(bound, 7.254, 5e-4);
  EXPECT_EQ(cross_model_distance(1.0, 1.0), -bound);
  EXPECT_EQ(cross_model_distance(-1.0, -1.0), bound);
  EXPECT_TRUE(std::isfinite(cross_model_distance(1.0, -1.0)));
  EXPECT_EQ(cross_model_distance(0.3, 0.7), cross_model_distance(0.7, 0.3));
}

TEST(CrossDistance, SpearmanInvariantUnderMonotoneTransforms) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(30), y(30), fx(30);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::round(4.0 * rng.normal()) / 2.0;  // ties on purpose
      y[i] = rng.normal() + 0.5 * x[i];
      fx[i] = std::exp(x[i]) * 3.0 - 1.0;
    }
    EXPECT_EQ(stats::spearman(fx, y), stats::spearman(x, y));
  }
}

TEST(Supervised, TrainedModelsHaveSensibleScores) {
  const auto& f = fixture();
  for (const auto& m : f.models) {
    EXPECT_GT(m.cv_score, 0.5);
    EXPECT_LE(m.cv_score, 1.0);
    EXPECT_EQ(m.grid.size(), 4u);
    EXPECT_EQ(m.population().size(), 80u);
    EXPECT_EQ(m.weights.size(), m.vocabulary.size());
  }
  // the distinct third category is easy to separate from the rest
  EXPECT_GT(f.models[2].cv_score, 0.9);
}

TEST(Supervised, ProbabilityIsSigmoidOfDecision) {
  const auto& m = fixture().models[0];
  const auto& tokens = fixture().index.volume(m.train_sample.volume_ids[0]).tokens;
  EXPECT_NEAR(m.probability(tokens), 1.0 / (1.0 + std::exp(-m.decision(tokens))), 1e-12);
}

TEST(Supervised, DistanceIsSymmetricAndOrdered) {
  const auto& f = fixture();
  const auto ab = cross_apply(f.models[0], f.models[1], f.index);
  const auto ba = cross_apply(f.models[1], f.models[0], f.index);
  EXPECT_EQ(ab.distance, ba.distance);
  const auto ac = cross_apply(f.models[0], f.models[2], f.index);
  EXPECT_LT(ab.distance, ac.distance);
  EXPECT_THROW(cross_apply(f.models[0], f.models[0], f.index), Error);

  const auto m = supervised_distance_matrix(f.models, f.index);
  EXPECT_EQ(m.method(), "supervised");
  EXPECT_TRUE(m.is_symmetric());
  EXPECT_EQ(m.at(0, 1), ab.distance);
  EXPECT_EQ(supervised_distance_matrix(f.models, f.index, true).method(), "supervised-pearson");
}

TEST(Supervised, DilutionAtZeroMatchesCrossApplication) {
  const auto& f = fixture();
  const auto curve = dilution_curve(f.models[0], f.models[1], f.index, {0.0, 0.4}, 5);
  ASSERT_EQ(curve.points.size(), 2u);
  EXPECT_NEAR(curve.points[0].distance, cross_apply(f.models[0], f.models[1], f.index).distance, 1e-9);
  EXPECT_GT(curve.points[1].distance, curve.points[0].distance);
  EXPECT_NEAR(curve.equivalent_fraction(curve.points[1].distance), 0.4, 1e-9);
  EXPECT_THROW(dilution_curve(f.models[0], f.models[1], f.index, {1.0}, 5), Error);
}

TEST(Supervised, DiluterPreservesLength) {
  const auto& f = fixture();
  const Diluter diluter(f.index);
  Rng rng(4);
  const auto& original = f.index.volume("syn000001").tokens;
  std::uint64_t before = 0, after = 0;
  for (const auto& [t, c] : original) before += c;
  for (const auto& [t, c] : diluter.dilute(original, 0.3, rng)) after += c;
  EXPECT_EQ(before, after);
  Rng again(4);
  EXPECT_EQ(diluter.dilute(original, 0.0, again), original);
}

TEST(Supervised, JsonRoundTripPreservesScores) {
  const auto& f = fixture();
  const auto& m = f.models[1];
  const auto back = classifier_from_json(nlohmann::json::parse(to_json(m).dump()));
  for (const auto& id : m.population())
    EXPECT_EQ(back.decision(f.index.volume(id).tokens), m.decision(f.index.volume(id).tokens));
  EXPECT_EQ(back.category, m.category);
  EXPECT_EQ(back.population(), m.population());
  auto broken = to_json(m);
  broken["weights"].erase(0);
  EXPECT_THROW(classifier_from_json(broken), Error);
}

TEST(Supervised, SizeMismatchRejected) {
  const auto& f = fixture();
  auto contrast = f.models[0].contrast;
  contrast.volume_ids.pop_back();
  EXPECT_THROW(train_genre_model(f.index, f.models[0].train_sample, contrast, GridSpec::parse("10:1"), 3, 1), Error);
}
