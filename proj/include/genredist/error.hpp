#pragma once

#include <stdexcept>
#include <string>

namespace genredist {

// All library failures surface as this type; messages name the offending
// input (category, volume, line, field) so the CLI can print them directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace genredist
