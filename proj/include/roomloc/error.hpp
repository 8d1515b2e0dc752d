#pragma once

#include <stdexcept>
#include <string>

namespace roomloc {

// Single exception type for contract violations and malformed input.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace roomloc
