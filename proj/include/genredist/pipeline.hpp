#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "genredist/corpus.hpp"
#include "genredist/distance_matrix.hpp"
#include "genredist/embedding.hpp"
#include "genredist/error.hpp"
#include "genredist/evaluation.hpp"
#include "genredist/lexical_distance.hpp"
#include "genredist/model_distance.hpp"
#include "genredist/random.hpp"
#include "genredist/sampling.hpp"
#include "genredist/social_proximity.hpp"
#include "genredist/stopwords.hpp"
#include "genredist/topic_distance.hpp"
#include "genredist/version.hpp"

namespace genredist {

inline const std::vector<std::string> kStages = {"ingest", "sample",     "pmi",      "tfidf",
                                                 "topics", "supervised", "evaluate", "mds"};

// INI layout, one section per stage. Relative paths resolve against the
// config file's directory.
struct PipelineConfig {
  std::filesystem::path base_dir;
  std::map<std::string, std::string> snapshot;  // "section.key" -> raw value

  std::uint64_t seed = 17;
  unsigned threads = 1;
  std::filesystem::path out_dir = "out";
  std::set<std::string> stages{kStages.begin(), kStages.end()};

  std::filesystem::path metadata;
  std::filesystem::path features;
  IngestConfig ingest;

  std::vector<CategoryLabel> categories;  // empty: every category with a full sample
  std::size_t sample_size = 100;

  PmiConfig pmi;
  std::optional<std::filesystem::path> priors;
  bool default_priors = false;

  std::size_t tfidf_vocab = 10000;

  LdaConfig lda;
  std::optional<std::filesystem::path> stopwords;
  int center_window = 5;
  std::size_t symdiff_size = 0;  // 0: sample_size

  GridSpec grid = GridSpec::defaults();
  std::size_t folds = 5;
  bool pearson = false;

  double ci_level = 0.95;

  std::string mds_source = "supervised";
  std::size_t mds_dims = 2;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"run", {"seed", "threads", "out_dir", "stages"}},
      {"corpus", {"metadata", "features", "head_trim", "tail_trim", "min_year", "max_year"}},
      {"categories", {"list", "sample_size"}},
      {"pmi", {"smoothing", "complement_multiplier", "complement_size", "priors", "default_priors"}},
      {"tfidf", {"vocab_size"}},
      {"topics", {"topics", "alpha", "beta", "iterations", "max_lexicon", "stopwords", "window", "symdiff_size"}},
      {"supervised", {"grid", "folds", "pearson"}},
      {"evaluate", {"level"}},
      {"mds", {"source", "dims"}},
  };
  return schema;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

class ConfigReader {
 public:
  ConfigReader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& path) const {
    if (auto v = tree_.get_optional<std::string>(path)) return *v;
    return std::nullopt;
  }

  template <class T>
  void read(const std::string& path, T& target) const {
    auto text = raw(path);
    if (!text) return;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, double>) {
        target = std::stod(*text, &used);
      } else if constexpr (std::is_same_v<T, bool>) {
        if (*text == "true" || *text == "1" || *text == "yes") target = true;
        else if (*text == "false" || *text == "0" || *text == "no") target = false;
        else throw std::invalid_argument("bool");
        used = text->size();
      } else if constexpr (std::is_same_v<T, int>) {
        target = std::stoi(*text, &used);
      } else {
        if (!text->empty() && (*text)[0] == '-') throw std::invalid_argument("negative");
        target = static_cast<T>(std::stoull(*text, &used));
      }
      if (used != text->size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error("config field " + path + ": cannot parse '" + *text + "'");
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
};

}  // namespace detail

inline PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error("config: line " + std::to_string(e.line()) + ": " + e.message());
  }
  PipelineConfig c;
  c.base_dir = base_dir;
  const auto& schema = detail::config_schema();
  for (const auto& [section, body] : tree) {
    auto it = schema.find(section);
    if (it == schema.end()) throw Error("config field " + section + ": unknown section");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw Error("config field " + section + "." + key + ": unknown key");
      c.snapshot[section + "." + key] = value.data();
    }
  }
  const detail::ConfigReader r(tree);
  auto path_of = [&](const std::string& field) -> std::optional<std::filesystem::path> {
    auto text = r.raw(field);
    if (!text || text->empty()) return std::nullopt;
    std::filesystem::path p(*text);
    return p.is_absolute() ? p : base_dir / p;
  };

  r.read("run.seed", c.seed);
  r.read("run.threads", c.threads);
  if (auto p = path_of("run.out_dir")) c.out_dir = *p;
  if (auto s = r.raw("run.stages"); s && *s != "all") {
    c.stages.clear();
    for (const auto& name : detail::split_list(*s)) {
      if (std::find(kStages.begin(), kStages.end(), name) == kStages.end())
        throw Error("config field run.stages: unknown stage '" + name + "'");
      c.stages.insert(name);
    }
    c.stages.insert("ingest");
    c.stages.insert("sample");
  }

  auto metadata = path_of("corpus.metadata");
  if (!metadata) throw Error("config field corpus.metadata: required");
  auto features = path_of("corpus.features");
  if (!features) throw Error("config field corpus.features: required");
  c.metadata = *metadata;
  c.features = *features;
  r.read("corpus.head_trim", c.ingest.head_trim);
  r.read("corpus.tail_trim", c.ingest.tail_trim);
  r.read("corpus.min_year", c.ingest.min_year);
  r.read("corpus.max_year", c.ingest.max_year);

  if (auto list = r.raw("categories.list")) {
    for (const auto& item : detail::split_list(*list)) {
      try {
        c.categories.push_back(CategoryLabel::parse(item));
      } catch (const Error& e) {
        throw Error(std::string("config field categories.list: ") + e.what());
      }
    }
  }
  r.read("categories.sample_size", c.sample_size);
  if (c.sample_size == 0) throw Error("config field categories.sample_size: must be positive");

  r.read("pmi.smoothing", c.pmi.smoothing);
  r.read("pmi.complement_multiplier", c.pmi.complement_multiplier);
  if (r.raw("pmi.complement_size")) {
    std::size_t n = 0;
    r.read("pmi.complement_size", n);
    c.pmi.complement_size = n;
  }
  c.priors = path_of("pmi.priors");
  r.read("pmi.default_priors", c.default_priors);

  r.read("tfidf.vocab_size", c.tfidf_vocab);

  r.read("topics.topics", c.lda.topics);
  r.read("topics.alpha", c.lda.alpha);
  r.read("topics.beta", c.lda.beta);
  r.read("topics.iterations", c.lda.iterations);
  r.read("topics.max_lexicon", c.lda.max_lexicon);
  c.stopwords = path_of("topics.stopwords");
  r.read("topics.window", c.center_window);
  r.read("topics.symdiff_size", c.symdiff_size);

  if (auto g = r.raw("supervised.grid")) {
    try {
      c.grid = GridSpec::parse(*g);
    } catch (const Error& e) {
      throw Error(std::string("config field supervised.grid: ") + e.what());
    }
  }
  r.read("supervised.folds", c.folds);
  r.read("supervised.pearson", c.pearson);

  r.read("evaluate.level", c.ci_level);
  if (auto s = r.raw("mds.source")) c.mds_source = *s;
  r.read("mds.dims", c.mds_dims);
  return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  return parse_config(in, path.parent_path());
}

inline std::string hash_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string hash_file(const std::filesystem::path& path) { return hash_hex(read_file(path)); }

// Hash over the sorted relative paths and contents of regular files.
inline std::string hash_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a("dir");
  for (const auto& f : files) {
    h = fnv1a(std::filesystem::relative(f, dir).generic_string(), h);
    h = fnv1a(read_file(f), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Held for the lifetime of a pipeline run; a second run on the same output
// directory fails fast.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir) : path_(dir / ".genredist.lock") {
    std::filesystem::create_directories(dir);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw Error("output directory " + dir.string() + " is locked by another run (remove " + path_.string() + " if stale)");
    std::fclose(f);
  }
  ~OutputLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Filesystem-safe stem for a category label.
inline std::string file_stem(const std::string& label) {
  std::string out;
  for (char c : label) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out + "-" + hash_hex(label).substr(0, 6);
}

struct CategorySamples {
  Sample sample;
  MatchedContrast contrast;
};

// Sample fields at top level plus an optional "contrast" object.
inline nlohmann::json to_json(const CategorySamples& s) {
  auto j = to_json(s.sample);
  j["contrast"] = {{"volume_ids", s.contrast.volume_ids},
                   {"seed", s.contrast.seed},
                   {"max_offset_used", s.contrast.max_offset_used}};
  return j;
}

inline CategorySamples category_samples_from_json(const nlohmann::json& j) {
  CategorySamples s;
  s.sample = sample_from_json(j);
  s.contrast.target = s.sample;
  if (!j.contains("contrast")) return s;
  try {
    s.contrast.volume_ids = j.at("contrast").at("volume_ids").get<std::vector<std::string>>();
    s.contrast.seed = j.at("contrast").value("seed", std::uint64_t{0});
    s.contrast.max_offset_used = j.at("contrast").value("max_offset_used", 0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed contrast: ") + e.what());
  }
  return s;
}

// Primary sample and year-matched contrast per category. The contrast pool
// excludes every volume tagged with the category.
inline std::vector<CategorySamples> draw_all_samples(const CorpusIndex& index,
                                                     const std::vector<CategoryLabel>& categories, std::size_t n,
                                                     std::uint64_t master_seed) {
  std::vector<CategorySamples> out;
  for (const auto& c : categories) {
    CategorySamples s;
    s.sample = draw_category_sample(index, c, n, derive_seed(master_seed, "sample|" + c.str()));
    s.contrast = draw_matched_contrast(index, s.sample, {c}, derive_seed(master_seed, "contrast|" + c.str()));
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<CategorySamples> read_samples_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<CategorySamples> out;
  for (const auto& f : files) {
    try {
      out.push_back(category_samples_from_json(nlohmann::json::parse(read_file(f))));
    } catch (const nlohmann::json::exception& e) {
      throw Error(f.string() + ": " + e.what());
    } catch (const Error& e) {
      throw Error(f.string() + ": " + e.what());
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.sample.label < b.sample.label; });
  return out;
}

inline std::vector<TrainedClassifier> train_all(const CorpusIndex& index, const std::vector<CategorySamples>& samples,
                                               const GridSpec& grid, std::size_t folds, std::uint64_t master_seed,
                                               unsigned threads) {
  std::vector<TrainedClassifier> models(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const auto& s = samples[i];
    models[i] = train_genre_model(index, s.sample, s.contrast, grid, folds,
                                  derive_seed(master_seed, "train|" + s.sample.label));
  });
  return models;
}

struct RunResult {
  bool ok = false;
  nlohmann::json manifest;
};

namespace detail {

class Recorder {
 public:
  Recorder(std::filesystem::path out_dir) : out_dir_(std::move(out_dir)) {}

  void begin(const std::string& stage) {
    current_ = {{"name", stage}, {"status", "running"}, {"inputs", nlohmann::json::object()},
                {"outputs", nlohmann::json::object()}};
  }
  void input(const std::string& name, const std::string& hash) { current_["inputs"][name] = hash; }
  void input_file(const std::filesystem::path& path) { input(relative(path), hash_file(path)); }

  void write(const std::string& rel, const std::string& bytes) {
    const auto path = out_dir_ / rel;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << bytes;
    out.close();
    current_["outputs"][rel] = hash_hex(bytes);
  }
  void written(const std::string& rel) { current_["outputs"][rel] = hash_file(out_dir_ / rel); }

  void end(const std::string& status) {
    current_["status"] = status;
    stages_.push_back(current_);
  }
  void fail(const std::string& message) {
    current_["error"] = message;
    end("failed");
  }

  const nlohmann::json& stages() const { return stages_; }
  std::filesystem::path path(const std::string& rel) const { return out_dir_ / rel; }

 private:
  std::string relative(const std::filesystem::path& path) const { return path.generic_string(); }

  std::filesystem::path out_dir_;
  nlohmann::json current_;
  nlohmann::json stages_ = nlohmann::json::array();
};

}  // namespace detail

// Runs the requested stages in order, writing artifacts and manifest.json to
// config.out_dir. A failing stage stops the run; earlier artifacts stay and
// the manifest records where it stopped.
inline RunResult run_pipeline(const PipelineConfig& config) {
  OutputLock lock(config.out_dir);
  detail::Recorder rec(config.out_dir);
  std::vector<std::string> warnings;
  std::string failed_stage;

  CorpusIndex index;
  std::vector<CategoryLabel> categories;
  std::vector<CategorySamples> samples;
  std::optional<DistanceMatrix> social;
  std::vector<DistanceMatrix> textual;
  std::map<std::string, DistanceMatrix> by_name;

  auto stage = [&](const std::string& name, const std::function<void()>& body) {
    if (!failed_stage.empty() || !config.stages.contains(name)) return;
    rec.begin(name);
    try {
      body();
      rec.end("ok");
    } catch (const std::exception& e) {
      rec.fail(e.what());
      failed_stage = name;
    }
  };

  stage("ingest", [&] {
    rec.input_file(config.metadata);
    rec.input(config.features.generic_string(), hash_directory(config.features));
    index = ingest_corpus(config.metadata, config.features, config.ingest);
    for (const auto& w : index.warnings()) warnings.push_back("ingest: " + w);
    rec.write("index.bin", index.serialize());
  });

  stage("sample", [&] {
    categories = config.categories;
    if (categories.empty()) {
      for (const auto& c : index.categories())
        if (index.with_category(c).size() >= config.sample_size) categories.push_back(c);
        else warnings.push_back("sample: skipping " + c.str() + " (" + std::to_string(index.with_category(c).size()) +
                                " volumes < sample size)");
    }
    if (categories.size() < 2) throw Error("need at least two categories with full samples");
    samples = draw_all_samples(index, categories, config.sample_size, config.seed);
    for (const auto& s : samples) rec.write("samples/" + file_stem(s.sample.label) + ".json", to_json(s).dump(2) + "\n");
  });

  stage("pmi", [&] {
    auto records = compute_all_pmi(index, categories, config.seed, config.pmi, config.threads);
    std::optional<PriorTable> priors;
    if (config.priors) {
      rec.input_file(*config.priors);
      try {
        priors = priors_from_json(nlohmann::json::parse(read_file(*config.priors)), records, categories);
      } catch (const nlohmann::json::exception& e) {
        throw Error(config.priors->string() + ": " + e.what());
      }
    } else if (config.default_priors) {
      priors = default_priors(records, categories);
    }
    if (priors) records = apply_priors(std::move(records), *priors);
    social = social_distance_matrix(records, categories);
    rec.write("pmi_records.csv", pmi_records_csv(records));
    rec.write("social.csv", social->to_csv());
  });

  auto add_textual = [&](const std::string& file, DistanceMatrix m) {
    rec.write(file, m.to_csv());
    by_name[m.method()] = m;
    textual.push_back(std::move(m));
  };

  std::vector<Sample> primaries;
  auto refresh_primaries = [&] {
    primaries.clear();
    for (const auto& s : samples) primaries.push_back(s.sample);
  };

  stage("tfidf", [&] {
    refresh_primaries();
    add_textual("tfidf.csv", tfidf_distance_matrix(index, primaries, build_vocabulary(index, config.tfidf_vocab)));
  });

  stage("topics", [&] {
    refresh_primaries();
    std::set<std::string> stop = default_stopwords();
    if (config.stopwords) {
      rec.input_file(*config.stopwords);
      stop = read_stopwords(*config.stopwords);
    }
    LdaConfig lda = config.lda;
    lda.seed = derive_seed(config.seed, "lda");
    std::vector<std::string> all;
    for (const auto& [id, v] : index.volumes()) all.push_back(id);
    const TopicModel model = fit_lda(index, all, stop, lda);
    for (const auto& w : model.warnings) warnings.push_back("topics: " + w);
    model.save(rec.path("model.bin"));
    rec.written("model.bin");

    std::vector<GenreTopicVector> summed, centered;
    const auto centered_docs = time_center(model, index, config.center_window);
    for (const auto& s : primaries) {
      summed.push_back(summed_vector(model, s));
      centered.push_back(centered_vector(centered_docs, model.topics, s));
    }
    add_textual("topic_summed.csv", topic_distance_matrix(summed, TopicStrategy::summed));
    std::vector<std::string> pair_warnings;
    add_textual("topic_symdiff.csv",
                symdiff_distance_matrix(model, index, categories,
                                        config.symdiff_size ? config.symdiff_size : config.sample_size, config.seed,
                                        &pair_warnings));
    for (const auto& w : pair_warnings) warnings.push_back(w);
    add_textual("topic_centered.csv", topic_distance_matrix(centered, TopicStrategy::time_centered));
  });

  stage("supervised", [&] {
    const auto models = train_all(index, samples, config.grid, config.folds, config.seed, config.threads);
    for (const auto& m : models) rec.write("models/" + file_stem(m.category.str()) + ".json", to_json(m).dump(1) + "\n");
    add_textual("model_dist.csv", supervised_distance_matrix(models, index, config.pearson, config.threads));
  });

  stage("evaluate", [&] {
    if (!social) throw Error("evaluate needs the pmi stage");
    if (textual.empty()) throw Error("evaluate needs at least one textual distance matrix");
    const auto reports = correlate_all(textual, *social, config.ci_level);
    for (const auto& r : reports)
      if (!r.excluded_pairs.empty())
        warnings.push_back("evaluate: " + std::to_string(r.excluded_pairs.size()) + " pair(s) excluded from " + r.method);
    rec.write("report.json", report_json(reports, config.ci_level).dump(2) + "\n");
    rec.write("report.svg", render_bars(reports));
  });

  stage("mds", [&] {
    auto it = by_name.find(config.mds_source);
    if (it == by_name.end()) throw Error("mds source '" + config.mds_source + "' was not computed in this run");
    auto result = mds_embed(it->second, config.mds_dims);
    refresh_primaries();
    attach_dates(result, mean_dates(index, primaries));
    for (const auto& w : result.warnings) warnings.push_back(w);
    rec.write("coords.csv", coords_csv(result));
    rec.write("map.svg", render_map(result));
  });

  nlohmann::json manifest;
  manifest["tool"] = "genredist";
  manifest["version"] = kVersion;
  manifest["module_versions"] = {{"corpus", kVersion},   {"sampling", kVersion},       {"social_proximity", kVersion},
                                 {"lexical_distance", kVersion}, {"topic_distance", kVersion},
                                 {"model_distance", kVersion},   {"evaluation", kVersion}, {"embedding", kVersion}};
  manifest["seed"] = config.seed;
  manifest["config"] = config.snapshot;
  manifest["stages"] = rec.stages();
  manifest["warnings"] = warnings;
  manifest["status"] = failed_stage.empty() ? "ok" : "failed";
  if (!failed_stage.empty()) manifest["failed_stage"] = failed_stage;
  std::ofstream out(config.out_dir / "manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write manifest");
  out << manifest.dump(2) << '\n';
  return RunResult{failed_stage.empty(), manifest};
}

}  // namespace genredist
