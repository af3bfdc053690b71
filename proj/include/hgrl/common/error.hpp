#pragma once

#include <stdexcept>
#include <string>

namespace hgrl {

/// Raised for contract violations and unrecoverable I/O problems.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hgrl
