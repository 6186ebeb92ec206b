#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "difflab/error.hpp"

namespace difflab {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;

inline void require_same_dim(const char* where, std::size_t expected, std::size_t got) {
  if (expected != got) throw DimensionError(where, expected, got);
}

}  // namespace difflab
