#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "genredist/error.hpp"

namespace genredist {

enum class LabelKind : std::uint8_t { genre, subject, audience, form };

inline std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::genre: return "genre";
    case LabelKind::subject: return "subject";
    case LabelKind::audience: return "audience";
    case LabelKind::form: return "form";
  }
  return "genre";
}

inline LabelKind parse_kind(std::string_view text) {
  if (text == "genre") return LabelKind::genre;
  if (text == "subject") return LabelKind::subject;
  if (text == "audience") return LabelKind::audience;
  if (text == "form") return LabelKind::form;
  throw Error("unknown label kind '" + std::string(text) +
              "' (expected genre, subject, audience or form)");
}

// A library category. Identity is the (name, kind) pair, so the genre
// "Humor" and the subject heading "Humor" are different categories.
struct CategoryLabel {
  std::string name;
  LabelKind kind = LabelKind::genre;

  friend auto operator<=>(const CategoryLabel&, const CategoryLabel&) = default;
  friend bool operator==(const CategoryLabel&, const CategoryLabel&) = default;

  // "Name:kind"
  std::string str() const { return name + ":" + std::string(to_string(kind)); }

  // Parses "Name:kind", splitting on the last colon so names may contain
  // colons themselves.
  static CategoryLabel parse(std::string_view text) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0)
      throw Error("category '" + std::string(text) + "' must be written as Name:kind");
    return CategoryLabel{std::string(text.substr(0, colon)), parse_kind(text.substr(colon + 1))};
  }

  template <class Archive>
  void serialize(Archive& ar) {
    ar(name, kind);
  }
};

}  // namespace genredist
