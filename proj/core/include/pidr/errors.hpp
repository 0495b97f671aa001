#pragma once

#include <stdexcept>

namespace pidr {

/// Filesystem failures (open/read/write), as opposed to schema or
/// validation errors. The CLI maps these to a distinct exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pidr
