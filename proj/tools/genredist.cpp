// Command-line front end: one subcommand per pipeline stage plus `pipeline`.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genredist/genredist.hpp"

namespace fs = std::filesystem;
using namespace genredist;

namespace {

struct Globals {
  std::uint64_t seed = 17;
  unsigned threads = 1;
  std::string out_dir;
  bool seed_set = false;
};

fs::path output_path(const Globals& g, const std::string& path) {
  fs::path p(path);
  if (g.out_dir.empty() || p.is_absolute()) return p;
  return fs::path(g.out_dir) / p;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::vector<CategoryLabel> read_category_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<CategoryLabel> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(CategoryLabel::parse(line));
  }
  return out;
}

std::vector<TrainedClassifier> read_models_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<TrainedClassifier> models;
  for (const auto& f : files) {
    try {
      models.push_back(classifier_from_json(nlohmann::json::parse(read_file(f))));
    } catch (const nlohmann::json::exception& e) {
      throw Error(f.string() + ": " + e.what());
    }
  }
  std::sort(models.begin(), models.end(), [](const auto& a, const auto& b) { return a.category < b.category; });
  return models;
}

std::vector<Sample> primaries_of(const std::vector<CategorySamples>& samples) {
  std::vector<Sample> out;
  for (const auto& s : samples) out.push_back(s.sample);
  return out;
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error("bad fraction '" + item + "'");
    }
  }
  if (out.empty()) throw Error("no dilution fractions given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Category distance toolkit: social proximity vs. textual similarity of library categories"};
  app.require_subcommand(1);
  Globals g;
  app.set_version_flag("--version", std::string("genredist ") + kVersion);
  app.add_option("--seed", g.seed, "Master seed")->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");
  app.fallthrough();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a corpus index from metadata and feature files");
  std::string in_meta, in_features, in_out;
  IngestConfig in_cfg;
  ingest->add_option("--metadata", in_meta)->required();
  ingest->add_option("--features", in_features)->required();
  ingest->add_option("--out", in_out)->required();
  ingest->add_option("--head-trim", in_cfg.head_trim);
  ingest->add_option("--tail-trim", in_cfg.tail_trim);
  ingest->add_option("--min-year", in_cfg.min_year);
  ingest->add_option("--max-year", in_cfg.max_year);

  // sample
  auto* sample = app.add_subcommand("sample", "Draw a category sample and its year-matched contrast");
  std::string sa_index, sa_category, sa_out;
  std::size_t sa_n = 100;
  std::vector<std::string> sa_exclude;
  bool sa_no_contrast = false;
  sample->add_option("--index", sa_index)->required();
  sample->add_option("--category", sa_category)->required();
  sample->add_option("--n", sa_n);
  sample->add_option("--exclude", sa_exclude);
  sample->add_flag("--no-contrast", sa_no_contrast);
  sample->add_option("--out", sa_out)->required();

  // pmi
  auto* pmi = app.add_subcommand("pmi", "Social proximity (PMI) between categories");
  std::string pm_index, pm_categories, pm_priors, pm_out, pm_records;
  PmiConfig pm_cfg;
  bool pm_default_priors = false;
  pmi->add_option("--index", pm_index)->required();
  pmi->add_option("--categories", pm_categories, "File with one Name:kind per line");
  pmi->add_option("--priors", pm_priors, "Prior table JSON");
  pmi->add_flag("--default-priors", pm_default_priors, "Prior for same-name genre/subject pairs");
  pmi->add_option("--smoothing", pm_cfg.smoothing);
  pmi->add_option("--records", pm_records, "Also write per-pair counts CSV");
  pmi->add_option("--out", pm_out)->required();

  // tfidf
  auto* tfidf = app.add_subcommand("tfidf", "Aggregate tf-idf cosine distance between samples");
  std::string tf_index, tf_samples, tf_out;
  std::size_t tf_top_k = 10000;
  tfidf->add_option("--index", tf_index)->required();
  tfidf->add_option("--samples", tf_samples)->required();
  tfidf->add_option("--top-k", tf_top_k);
  tfidf->add_option("--out", tf_out)->required();

  // topics
  auto* topics = app.add_subcommand("topics", "Topic model and topic-vector distances");
  topics->require_subcommand(1);
  auto* tfit = topics->add_subcommand("fit", "Fit LDA by collapsed Gibbs sampling");
  std::string to_index, to_out, to_stopwords, to_samples;
  LdaConfig to_cfg;
  bool to_samples_only = false;
  tfit->add_option("--index", to_index)->required();
  tfit->add_option("--k", to_cfg.topics);
  tfit->add_option("--alpha", to_cfg.alpha);
  tfit->add_option("--beta", to_cfg.beta);
  tfit->add_option("--iterations", to_cfg.iterations);
  tfit->add_option("--max-lexicon", to_cfg.max_lexicon);
  tfit->add_option("--stopwords", to_stopwords);
  tfit->add_option("--samples", to_samples, "Model only these samples and contrasts");
  tfit->add_flag("--samples-only", to_samples_only);
  tfit->add_option("--out", to_out)->required();
  auto* tdist = topics->add_subcommand("distance", "Topic-vector distance matrix");
  std::string td_model, td_index, td_samples, td_strategy = "summed", td_out;
  int td_window = 5;
  std::size_t td_n = 0;
  tdist->add_option("--model", td_model)->required();
  tdist->add_option("--index", td_index)->required();
  tdist->add_option("--samples", td_samples)->required();
  tdist->add_option("--strategy", td_strategy)->check(CLI::IsMember({"summed", "symdiff", "centered"}));
  tdist->add_option("--window", td_window);
  tdist->add_option("--n", td_n, "Symmetric-difference sample size (default: sample size)");
  tdist->add_option("--out", td_out)->required();

  // supervised
  auto* sup = app.add_subcommand("supervised", "Supervised cross-model distance");
  sup->require_subcommand(1);
  auto* strain = sup->add_subcommand("train", "Train one model per sample");
  std::string st_index, st_samples, st_grid = "default", st_out;
  std::size_t st_folds = 5;
  strain->add_option("--index", st_index)->required();
  strain->add_option("--samples", st_samples)->required();
  strain->add_option("--grid", st_grid);
  strain->add_option("--folds", st_folds);
  strain->add_option("--out", st_out)->required();
  auto* sdist = sup->add_subcommand("distance", "Cross-apply every model pair");
  std::string sd_models, sd_index, sd_out;
  bool sd_pearson = false;
  sdist->add_option("--models", sd_models)->required();
  sdist->add_option("--index", sd_index)->required();
  sdist->add_flag("--pearson", sd_pearson, "Pearson on probabilities instead of Spearman");
  sdist->add_option("--out", sd_out)->required();
  auto* sdil = sup->add_subcommand("dilution", "Distance as a function of random dilution");
  std::string sl_models, sl_index, sl_pair, sl_fractions = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8", sl_out;
  sdil->add_option("--models", sl_models)->required();
  sdil->add_option("--index", sl_index)->required();
  sdil->add_option("--pair", sl_pair, "\"A:kind,B:kind\"")->required();
  sdil->add_option("--fractions", sl_fractions);
  sdil->add_option("--out", sl_out);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Correlate textual distances with social distance");
  std::string ev_social, ev_out, ev_bars;
  std::vector<std::string> ev_textual;
  double ev_level = 0.95;
  eval->add_option("--social", ev_social)->required();
  eval->add_option("--textual", ev_textual)->required();
  eval->add_option("--level", ev_level);
  eval->add_option("--out", ev_out)->required();
  eval->add_option("--bars", ev_bars, "Bar chart SVG");

  // mds
  auto* mds = app.add_subcommand("mds", "Classical MDS map of a distance matrix");
  std::string md_dist, md_out, md_svg, md_index, md_samples;
  std::size_t md_dims = 2;
  mds->add_option("--distances", md_dist)->required();
  mds->add_option("--out", md_out)->required();
  mds->add_option("--svg", md_svg);
  mds->add_option("--dims", md_dims);
  mds->add_option("--index", md_index, "For mean publication dates");
  mds->add_option("--samples", md_samples, "For mean publication dates");

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic corpus with known structure");
  std::string sy_spec;
  syn->add_option("--spec", sy_spec)->required();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run every stage from an INI config");
  std::string pi_config;
  pipe->add_option("--config", pi_config)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      in_cfg.threads = g.threads;
      auto index = ingest_corpus(in_meta, in_features, in_cfg);
      for (const auto& w : index.warnings()) std::cerr << "warning: " << w << '\n';
      const auto out = output_path(g, in_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      index.save(out);
      std::cerr << "indexed " << index.size() << " volumes\n";
    } else if (sample->parsed()) {
      const auto index = CorpusIndex::load(sa_index);
      const auto category = CategoryLabel::parse(sa_category);
      std::set<CategoryLabel> exclusions;
      for (const auto& e : sa_exclude) exclusions.insert(CategoryLabel::parse(e));
      CategorySamples s;
      s.sample = draw_category_sample(index, category, sa_n, derive_seed(g.seed, "sample|" + category.str()), exclusions);
      if (sa_no_contrast) {
        write_text(output_path(g, sa_out), to_json(s.sample).dump(2) + "\n");
      } else {
        s.contrast = draw_matched_contrast(index, s.sample, {category}, derive_seed(g.seed, "contrast|" + category.str()));
        write_text(output_path(g, sa_out), to_json(s).dump(2) + "\n");
      }
    } else if (pmi->parsed()) {
      const auto index = CorpusIndex::load(pm_index);
      const auto cats = pm_categories.empty() ? index.categories() : read_category_file(pm_categories);
      auto records = compute_all_pmi(index, cats, g.seed, pm_cfg, g.threads);
      if (!pm_priors.empty())
        records = apply_priors(std::move(records), priors_from_json(nlohmann::json::parse(read_file(pm_priors)), records, cats));
      else if (pm_default_priors)
        records = apply_priors(std::move(records), default_priors(records, cats));
      social_distance_matrix(records, cats).write_csv(output_path(g, pm_out));
      if (!pm_records.empty()) write_text(output_path(g, pm_records), pmi_records_csv(records));
    } else if (tfidf->parsed()) {
      const auto index = CorpusIndex::load(tf_index);
      const auto samples = primaries_of(read_samples_dir(tf_samples));
      tfidf_distance_matrix(index, samples, build_vocabulary(index, tf_top_k)).write_csv(output_path(g, tf_out));
    } else if (tfit->parsed()) {
      const auto index = CorpusIndex::load(to_index);
      const auto stop = to_stopwords.empty() ? default_stopwords() : read_stopwords(to_stopwords);
      std::vector<std::string> ids;
      if (to_samples_only && !to_samples.empty()) {
        for (const auto& s : read_samples_dir(to_samples)) {
          ids.insert(ids.end(), s.sample.volume_ids.begin(), s.sample.volume_ids.end());
          ids.insert(ids.end(), s.contrast.volume_ids.begin(), s.contrast.volume_ids.end());
        }
      } else {
        for (const auto& [id, v] : index.volumes()) ids.push_back(id);
      }
      to_cfg.seed = derive_seed(g.seed, "lda");
      const auto model = fit_lda(index, ids, stop, to_cfg);
      for (const auto& w : model.warnings) std::cerr << "warning: " << w << '\n';
      const auto out = output_path(g, to_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      model.save(out);
    } else if (tdist->parsed()) {
      const auto model = TopicModel::load(td_model);
      const auto index = CorpusIndex::load(td_index);
      const auto samples = primaries_of(read_samples_dir(td_samples));
      const auto strategy = parse_strategy(td_strategy);
      DistanceMatrix m;
      if (strategy == TopicStrategy::symdiff) {
        std::vector<CategoryLabel> cats;
        for (const auto& s : samples) cats.push_back(s.category.value_or(CategoryLabel::parse(s.label)));
        std::vector<std::string> warnings;
        const std::size_t n = td_n ? td_n : (samples.empty() ? 0 : samples.front().volume_ids.size());
        m = symdiff_distance_matrix(model, index, cats, n, g.seed, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      } else {
        std::vector<GenreTopicVector> vectors;
        const auto centered = strategy == TopicStrategy::time_centered
                                  ? time_center(model, index, td_window)
                                  : std::map<std::string, std::vector<double>>{};
        for (const auto& s : samples)
          vectors.push_back(strategy == TopicStrategy::summed ? summed_vector(model, s)
                                                              : centered_vector(centered, model.topics, s));
        m = topic_distance_matrix(vectors, strategy);
      }
      m.write_csv(output_path(g, td_out));
    } else if (strain->parsed()) {
      const auto index = CorpusIndex::load(st_index);
      auto samples = read_samples_dir(st_samples);
      for (auto& s : samples)
        if (s.contrast.volume_ids.empty()) {
          const auto cat = s.sample.category.value_or(CategoryLabel::parse(s.sample.label));
          s.contrast = draw_matched_contrast(index, s.sample, {cat}, derive_seed(g.seed, "contrast|" + cat.str()));
        }
      const auto models = train_all(index, samples, GridSpec::parse(st_grid), st_folds, g.seed, g.threads);
      const auto dir = output_path(g, st_out);
      fs::create_directories(dir);
      for (const auto& m : models) {
        write_text(dir / (file_stem(m.category.str()) + ".json"), to_json(m).dump(1) + "\n");
        std::cerr << m.category.str() << ": cv AUC " << m.cv_score << ", " << m.vocabulary.size() << " features, C "
                  << m.regularization << '\n';
      }
    } else if (sdist->parsed()) {
      const auto models = read_models_dir(sd_models);
      const auto index = CorpusIndex::load(sd_index);
      supervised_distance_matrix(models, index, sd_pearson, g.threads).write_csv(output_path(g, sd_out));
    } else if (sdil->parsed()) {
      const auto models = read_models_dir(sl_models);
      const auto index = CorpusIndex::load(sl_index);
      const auto comma = sl_pair.find(',');
      if (comma == std::string::npos) throw Error("--pair must be \"A:kind,B:kind\"");
      const auto a = CategoryLabel::parse(sl_pair.substr(0, comma));
      const auto b = CategoryLabel::parse(sl_pair.substr(comma + 1));
      auto find = [&](const CategoryLabel& c) -> const TrainedClassifier& {
        for (const auto& m : models)
          if (m.category == c) return m;
        throw Error("no model for " + c.str() + " in " + sl_models);
      };
      const auto curve = dilution_curve(find(a), find(b), index, parse_fractions(sl_fractions),
                                        pair_seed(g.seed, "dilution", a, b));
      std::string csv = "fraction,distance\n";
      for (const auto& p : curve.points) csv += csv::format_number(p.fraction) + "," + csv::format_number(p.distance) + "\n";
      if (sl_out.empty())
        std::cout << csv;
      else
        write_text(output_path(g, sl_out), csv);
      std::cerr << "slope " << curve.fit.slope << ", intercept " << curve.fit.intercept << ", R^2 "
                << curve.fit.r_squared << '\n';
    } else if (eval->parsed()) {
      const auto social = DistanceMatrix::read_csv(ev_social);
      std::vector<DistanceMatrix> textual;
      for (const auto& t : ev_textual) textual.push_back(DistanceMatrix::read_csv(t));
      const auto reports = correlate_all(textual, social, ev_level);
      write_text(output_path(g, ev_out), report_json(reports, ev_level).dump(2) + "\n");
      if (!ev_bars.empty()) write_text(output_path(g, ev_bars), render_bars(reports));
      for (const auto& r : reports)
        std::cerr << r.method << ": r = " << r.r << " [" << r.ci_low << ", " << r.ci_high << "], n = " << r.n_pairs
                  << '\n';
    } else if (mds->parsed()) {
      auto result = mds_embed(DistanceMatrix::read_csv(md_dist), md_dims);
      if (!md_index.empty() && !md_samples.empty())
        attach_dates(result, mean_dates(CorpusIndex::load(md_index), primaries_of(read_samples_dir(md_samples))));
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      if (result.shift_applied > 0.0) std::cerr << "shifted distances by " << result.shift_applied << '\n';
      write_text(output_path(g, md_out), coords_csv(result));
      if (!md_svg.empty()) write_text(output_path(g, md_svg), render_map(result));
    } else if (syn->parsed()) {
      auto spec = synth::spec_from_json(nlohmann::json::parse(read_file(sy_spec)));
      if (g.seed_set) spec.seed = g.seed;
      const auto paths = synth::generate(spec, g.out_dir.empty() ? fs::path(".") : fs::path(g.out_dir), g.threads);
      std::cerr << "wrote " << paths.metadata.string() << ", " << paths.truth.string() << '\n';
    } else if (pipe->parsed()) {
      auto config = load_config(pi_config);
      if (g.seed_set) config.seed = g.seed;
      if (app.get_option("--threads")->count() > 0) config.threads = g.threads;
      if (!g.out_dir.empty()) config.out_dir = g.out_dir;
      const auto result = run_pipeline(config);
      for (const auto& w : result.manifest["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
      if (!result.ok) {
        std::cerr << "pipeline failed at stage " << result.manifest["failed_stage"].get<std::string>() << ": "
                  << result.manifest["stages"].back().value("error", std::string()) << '\n';
        return 1;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
