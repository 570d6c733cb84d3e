#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "taac/tensor.hpp"

namespace taac::ckpt {

// Binary tensor bundle: magic "TAAC", format version, then a list of named
// float32 tensors (little-endian). Loading by name makes checkpoints robust
// to parameter-list reordering.

using NamedViews = std::vector<std::pair<std::string, const TensorF*>>;
using NamedSlots = std::vector<std::pair<std::string, TensorF*>>;

void save(const std::string& path, const NamedViews& entries);

std::map<std::string, TensorF> load(const std::string& path);

// Fill existing tensors by name; throws IoError on a missing entry and
// DimensionError on a shape mismatch.
void load_into(const std::string& path, const NamedSlots& slots);

}  // namespace taac::ckpt
