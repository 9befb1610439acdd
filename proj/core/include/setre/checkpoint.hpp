#pragma once

#include <string>
#include <utility>
#include <vector>

#include "setre/tensor.hpp"

namespace setre {

/// Flat binary parameter container: versioned header, then one record per
/// tensor (name, shape, raw little-endian float64 payload). Round-trips
/// bit-exactly.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& entries);

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

}  // namespace setre
