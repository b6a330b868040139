#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "genredist/random.hpp"

namespace genredist {

// Ordered token list: descending document frequency, ties lexicographic.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) { reindex(); }

  static Vocabulary from_document_frequency(const std::map<std::string, std::uint64_t>& df, std::size_t top_k,
                                            const std::set<std::string>& exclude = {}) {
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    entries.reserve(df.size());
    for (const auto& [token, count] : df)
      if (count > 0 && !exclude.contains(token)) entries.emplace_back(token, count);
    auto better = [](const auto& x, const auto& y) {
      return x.second != y.second ? x.second > y.second : x.first < y.first;
    };
    const std::size_t k = top_k == 0 ? entries.size() : std::min(top_k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k), entries.end(), better);
    std::vector<std::string> tokens;
    tokens.reserve(k);
    for (std::size_t i = 0; i < k; ++i) tokens.push_back(std::move(entries[i].first));
    return Vocabulary(std::move(tokens));
  }

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }

  // -1 when absent
  std::ptrdiff_t find(const std::string& token) const {
    auto it = positions_.find(token);
    return it == positions_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  // Identifies the basis; equal vocabularies have equal ids.
  std::uint64_t id() const { return id_; }

  Vocabulary prefix(std::size_t k) const {
    return Vocabulary(std::vector<std::string>(tokens_.begin(), tokens_.begin() + static_cast<std::ptrdiff_t>(std::min(k, tokens_.size()))));
  }

  template <class Archive>
  void save(Archive& ar) const {
    ar(tokens_);
  }
  template <class Archive>
  void load(Archive& ar) {
    ar(tokens_);
    reindex();
  }

 private:
  void reindex() {
    positions_.clear();
    positions_.reserve(tokens_.size());
    id_ = fnv1a("vocab");
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      positions_.emplace(tokens_[i], i);
      id_ = fnv1a(tokens_[i], fnv1a(std::string_view("\x1f", 1), id_));
    }
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> positions_;
  std::uint64_t id_ = 0;
};

}  // namespace genredist
