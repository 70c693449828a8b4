#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "prelac/parameters.hpp"

namespace prelac::ad {

/// Binary checkpoint layout (all integers and floats little-endian):
///
///   magic "PLCK" | u32 version | u64 count
///   count x { u32 name_len | name bytes | u32 rank | rank x u64 dim | f64 values }
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParameterSet& params);
ParameterSet read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& path);

}  // namespace prelac::ad
