#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "genredist/corpus.hpp"
#include "genredist/random.hpp"

namespace genredist::testing {

class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
      path_ = base / ("genredist-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
      if (std::filesystem::create_directory(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline VolumeRecord volume(std::string id, int year, std::set<CategoryLabel> tags, TokenCounts tokens = {{"word", 1}}) {
  VolumeRecord v;
  v.volume_id = id;
  v.title_key = std::move(id);
  v.year = year;
  v.tags = std::move(tags);
  v.tokens = std::move(tokens);
  return v;
}

inline CategoryLabel genre(std::string name) { return {std::move(name), LabelKind::genre}; }
inline CategoryLabel subject(std::string name) { return {std::move(name), LabelKind::subject}; }

}  // namespace genredist::testing
