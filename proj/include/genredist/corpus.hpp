#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <new>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/map.hpp>
#include <cereal/types/set.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>
#include <nlohmann/json.hpp>

#include "genredist/error.hpp"
#include "genredist/label.hpp"
#include "genredist/parallel.hpp"

namespace genredist {

using TokenCounts = std::map<std::string, std::uint64_t>;

inline constexpr std::string_view kArabicNumberToken = "#arabicnumber";

struct VolumeRecord {
  std::string volume_id;
  std::string title_key;
  int year = 0;
  std::set<CategoryLabel> tags;
  TokenCounts tokens;

  bool has_tag(const CategoryLabel& label) const { return tags.contains(label); }

  std::uint64_t total_tokens() const {
    std::uint64_t total = 0;
    for (const auto& [token, count] : tokens) total += count;
    return total;
  }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(volume_id, title_key, year, tags, tokens);
  }
};

struct ConsolidationRules {
  bool lowercase = true;
  bool strip_punctuation = true;
  // Tokens whose first character is a digit ("1848", "3rd", "1,000") become
  // "#arabicnumber". Always on; the flag exists only for diagnostics.
  bool arabic_numbers = true;
};

struct IngestConfig {
  double head_trim = 0.10;
  double tail_trim = 0.05;
  int min_year = 1700;
  int max_year = 2020;
  ConsolidationRules rules;
  unsigned threads = 1;
};

inline std::string normalize_token(std::string_view token, const ConsolidationRules& rules) {
  std::string_view core = token;
  if (rules.strip_punctuation) {
    auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    std::size_t begin = 0;
    std::size_t end = core.size();
    while (begin < end && is_punct(core[begin])) ++begin;
    while (end > begin && is_punct(core[end - 1])) --end;
    // punctuation-only tokens are kept verbatim so no mass is dropped
    if (begin < end) core = core.substr(begin, end - begin);
  }
  if (rules.arabic_numbers && !core.empty() &&
      std::isdigit(static_cast<unsigned char>(core.front())))
    return std::string(kArabicNumberToken);
  std::string out(core);
  if (rules.lowercase)
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Case folding, edge-punctuation stripping and number consolidation. Total
// count is preserved exactly.
inline TokenCounts consolidate_tokens(const TokenCounts& raw, const ConsolidationRules& rules) {
  if (!rules.arabic_numbers) throw Error("consolidation rules must include the Arabic-number rule");
  TokenCounts out;
  for (const auto& [token, count] : raw) {
    if (count == 0) continue;
    out[normalize_token(token, rules)] += count;
  }
  return out;
}

// Drops floor(head_frac * P) leading and floor(tail_frac * P) trailing pages
// and sums the rest.
inline TokenCounts trim_pages(const std::vector<TokenCounts>& pages, double head_frac, double tail_frac) {
  if (pages.empty()) throw Error("trim_pages: volume has no pages");
  if (head_frac < 0.0 || tail_frac < 0.0 || head_frac + tail_frac >= 1.0)
    throw Error("trim_pages: need 0 <= head + tail < 1");
  const std::size_t count = pages.size();
  const auto head = static_cast<std::size_t>(std::floor(head_frac * static_cast<double>(count)));
  const auto tail = static_cast<std::size_t>(std::floor(tail_frac * static_cast<double>(count)));
  if (head + tail >= count) throw Error("trim_pages: every page trimmed away (degenerate volume)");
  TokenCounts merged;
  for (std::size_t p = head; p < count - tail; ++p)
    for (const auto& [token, n] : pages[p]) merged[token] += n;
  std::erase_if(merged, [](const auto& kv) { return kv.second == 0; });
  if (merged.empty()) throw Error("trim_pages: no tokens left after trimming (degenerate volume)");
  return merged;
}

// Immutable after construction; safe for concurrent readers.
class CorpusIndex {
 public:
  CorpusIndex() = default;

  explicit CorpusIndex(std::vector<VolumeRecord> records, std::vector<std::string> warnings = {})
      : warnings_(std::move(warnings)) {
    for (auto& record : records) {
      if (record.volume_id.empty()) throw Error("volume with empty volume_id");
      std::erase_if(record.tokens, [](const auto& kv) { return kv.second == 0; });
      if (record.tokens.empty()) throw Error("volume " + record.volume_id + " has no tokens");
      std::string id = record.volume_id;
      if (!volumes_.emplace(id, std::move(record)).second)
        throw Error("duplicate volume_id " + id);
    }
    rebuild();
  }

  std::size_t size() const { return volumes_.size(); }
  const std::map<std::string, VolumeRecord>& volumes() const { return volumes_; }
  const std::map<CategoryLabel, std::set<std::string>>& by_category() const { return by_category_; }
  const std::map<int, std::set<std::string>>& by_year() const { return by_year_; }
  const std::map<std::string, std::uint64_t>& document_frequency() const { return document_frequency_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  bool contains(const std::string& id) const { return volumes_.contains(id); }

  const VolumeRecord& volume(const std::string& id) const {
    auto it = volumes_.find(id);
    if (it == volumes_.end()) throw Error("volume " + id + " not in index");
    return it->second;
  }

  const std::set<std::string>& with_category(const CategoryLabel& label) const {
    static const std::set<std::string> empty;
    auto it = by_category_.find(label);
    return it == by_category_.end() ? empty : it->second;
  }

  std::vector<CategoryLabel> categories() const {
    std::vector<CategoryLabel> out;
    for (const auto& [label, ids] : by_category_) out.push_back(label);
    return out;
  }

  std::string serialize() const {
    std::ostringstream os(std::ios::binary);
    {
      cereal::PortableBinaryOutputArchive ar(os);
      std::vector<VolumeRecord> records;
      records.reserve(volumes_.size());
      for (const auto& [id, record] : volumes_) records.push_back(record);
      ar(std::string("genredist-index"), std::uint32_t{1}, records, warnings_);
    }
    return os.str();
  }

  static CorpusIndex deserialize(const std::string& bytes) {
    std::istringstream is(bytes, std::ios::binary);
    cereal::PortableBinaryInputArchive ar(is);
    std::string magic;
    std::uint32_t version = 0;
    std::vector<VolumeRecord> records;
    std::vector<std::string> warnings;
    try {
      ar(magic, version);
      if (magic != "genredist-index" || version != 1) throw Error("not a genredist index");
      ar(records, warnings);
    } catch (const cereal::Exception& e) {
      throw Error(std::string("corrupt index: ") + e.what());
    } catch (const std::bad_alloc&) {
      throw Error("corrupt index");
    } catch (const std::length_error&) {
      throw Error("corrupt index");
    }
    return CorpusIndex(std::move(records), std::move(warnings));
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    const std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  static CorpusIndex load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read index " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
  }

 private:
  void rebuild() {
    for (const auto& [id, record] : volumes_) {
      for (const auto& tag : record.tags) by_category_[tag].insert(id);
      by_year_[record.year].insert(id);
      for (const auto& [token, count] : record.tokens) ++document_frequency_[token];
    }
  }

  std::map<std::string, VolumeRecord> volumes_;
  std::map<CategoryLabel, std::set<std::string>> by_category_;
  std::map<int, std::set<std::string>> by_year_;
  std::map<std::string, std::uint64_t> document_frequency_;
  std::vector<std::string> warnings_;
};

namespace detail {

inline std::uint64_t parse_count(std::string_view text, const std::string& where) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(where + ": bad count '" + std::string(text) + "'");
  return value;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace detail

// Reads one feature file. Two layouts are accepted: `token<TAB>count` or
// page-level `page<TAB>token<TAB>count` (pages numbered from 1; missing page
// numbers count as blank pages). Page-level files are trimmed.
inline TokenCounts read_feature_file(const std::filesystem::path& path, const IngestConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error("missing feature file " + path.string());
  TokenCounts flat;
  std::map<std::size_t, TokenCounts> paged;
  int columns = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    auto fields = detail::split_tabs(line);
    const int n = static_cast<int>(fields.size());
    if (n != 2 && n != 3) throw Error(where + ": expected 2 or 3 tab-separated fields");
    if (columns == 0) columns = n;
    if (n != columns) throw Error(where + ": mixed flat and page-level lines");
    if (n == 2) {
      flat[std::string(fields[0])] += detail::parse_count(fields[1], where);
    } else {
      const auto page = detail::parse_count(fields[0], where);
      if (page == 0) throw Error(where + ": pages are numbered from 1");
      paged[page][std::string(fields[1])] += detail::parse_count(fields[2], where);
    }
  }
  if (columns == 3) {
    std::vector<TokenCounts> pages(paged.rbegin()->first);
    for (auto& [page, counts] : paged) pages[page - 1] = std::move(counts);
    flat = trim_pages(pages, config.head_trim, config.tail_trim);
  }
  return flat;
}

// Builds an index from JSON-lines metadata and per-volume feature files.
// Record-level problems (unreadable feature file, missing or out-of-range
// year, empty volume) skip the volume and are reported as warnings; a row that
// does not parse is fatal.
inline CorpusIndex ingest_corpus(const std::filesystem::path& metadata_path,
                                 const std::filesystem::path& features_dir,
                                 const IngestConfig& config = {}) {
  std::ifstream in(metadata_path);
  if (!in) throw Error("cannot read metadata " + metadata_path.string());

  struct Row {
    std::size_t line_no;
    VolumeRecord record;
    std::string feature_file;
    std::string problem;
  };
  std::vector<Row> rows;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = metadata_path.string() + ":" + std::to_string(line_no);
    Row row{line_no, {}, {}, {}};
    try {
      auto obj = nlohmann::json::parse(line);
      if (!obj.is_object()) throw Error("row is not an object");
      row.record.volume_id = obj.at("volume_id").get<std::string>();
      row.record.title_key = obj.contains("title_key") && !obj["title_key"].is_null()
                                 ? obj["title_key"].get<std::string>()
                                 : row.record.volume_id;
      for (const auto& tag : obj.value("tags", nlohmann::json::array()))
        row.record.tags.insert(
            CategoryLabel{tag.at("name").get<std::string>(), parse_kind(tag.at("kind").get<std::string>())});
      row.feature_file = obj.at("feature_file").get<std::string>();
      if (!obj.contains("year") || obj["year"].is_null()) {
        row.problem = "missing year";
      } else {
        row.record.year = obj["year"].get<int>();
        if (row.record.year < config.min_year || row.record.year > config.max_year)
          row.problem = "year " + std::to_string(row.record.year) + " outside " +
                        std::to_string(config.min_year) + "-" + std::to_string(config.max_year);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(where + ": unparseable metadata row: " + e.what());
    } catch (const Error& e) {
      throw Error(where + ": unparseable metadata row: " + e.what());
    }
    if (!seen.insert(row.record.volume_id).second)
      throw Error(where + ": duplicate volume_id " + row.record.volume_id);
    rows.push_back(std::move(row));
  }

  parallel_for(rows.size(), config.threads, [&](std::size_t i) {
    Row& row = rows[i];
    if (!row.problem.empty()) return;
    try {
      auto raw = read_feature_file(features_dir / row.feature_file, config);
      row.record.tokens = consolidate_tokens(raw, config.rules);
      if (row.record.total_tokens() == 0) row.problem = "no tokens";
    } catch (const Error& e) {
      row.problem = e.what();
    }
  });

  std::vector<VolumeRecord> records;
  std::vector<std::string> warnings;
  for (auto& row : rows) {
    if (!row.problem.empty()) {
      warnings.push_back("line " + std::to_string(row.line_no) + ": volume " + row.record.volume_id +
                         " skipped: " + row.problem);
      continue;
    }
    records.push_back(std::move(row.record));
  }
  return CorpusIndex(std::move(records), std::move(warnings));
}

}  // namespace genredist
