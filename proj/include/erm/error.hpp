#pragma once

#include <stdexcept>
#include <string>

namespace erm {

/// Raised for contract violations: bad dimensions, invalid parameters,
/// malformed input files.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

}  // namespace detail
}  // namespace erm
