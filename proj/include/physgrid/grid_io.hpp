#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "physgrid/grid_field.hpp"

namespace physgrid {

/// PGWF container:
///   "PGWF" | u16 version | u32 T, m(ny), n(nx), h | f64 x0 dx y0 dy t0 dt |
///   name table: h variable names, space units, time units, each u32 length +
///   UTF-8 bytes | T*m*n*h f64 payload in [t][y][x][var] order.
/// All integers and floats little-endian.
inline constexpr std::uint16_t kGridFormatVersion = 1;

std::vector<std::uint8_t> encode_grid(const GridField& field);
GridField decode_grid(const std::vector<std::uint8_t>& bytes);

void save_grid(const GridField& field, const std::filesystem::path& path);
GridField load_grid(const std::filesystem::path& path);

}  // namespace physgrid
