#pragma once

#include "scope/nn.hpp"

#include <string>

namespace scope {

/// Flat binary container. Layout: magic bytes "SCOPEv1", then for each named
/// parameter: u32 name length, name bytes, u32 rank, u64 extents, payload as
/// little-endian 64-bit floats. A 1x1 "meta.patch_size" entry records the
/// patch size the model was trained with.
void save_checkpoint(const ScopeNet& net, const std::string& path);

/// Validates every tensor's name and shape against the model architecture;
/// throws std::runtime_error on mismatch or malformed container.
void load_checkpoint(ScopeNet& net, const std::string& path);

}  // namespace scope
