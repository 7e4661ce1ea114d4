#pragma once

#include <cstdint>
#include <string>

#include "hedmod/parameters.hpp"

namespace hedmod {

/// Binary layout, all integers and floats little-endian:
///   "HEDMODCK" | u32 version | u32 count |
///   count x ( u32 name_len | name | u32 rank | u64 dims[rank] | f64 data[] )
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParameterStore& store);
Snapshot load_checkpoint(const std::string& path);

}  // namespace hedmod
