#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "physgrid/field_net.hpp"

namespace physgrid {

/// PGNET container:
///   "PGNET" | u16 version | u8 role | u32 layer count L | L+1 u32 widths |
///   6 f64 axis affines (offset, scale for x, y, t) | u32 k | k output affines |
///   u32 name count + names (u32 length + UTF-8) | u32 aux count + f64 aux |
///   u64 parameter count + f64 parameters.
/// Little-endian throughout.
inline constexpr std::uint16_t kNetFormatVersion = 1;

struct Checkpoint {
    NetRole role = NetRole::Surrogate;
    std::vector<std::size_t> widths;
    NormalizationSpec normalization;
    /// Output variable names.
    std::vector<std::string> names;
    /// Role-specific extras (forecast window sizes, grid spacing, ...).
    std::vector<double> aux;
    Buffer params;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint to_checkpoint(const FieldNet& net, std::vector<std::string> names, std::vector<double> aux = {});
FieldNet to_field_net(const Checkpoint& c);

}  // namespace physgrid
