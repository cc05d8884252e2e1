#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lwr/layout.hpp"

namespace lwr::gdsii {

// Record types (high byte) combined with their data type (low byte).
enum Record : std::uint16_t {
  HEADER = 0x0002,
  BGNLIB = 0x0102,
  LIBNAME = 0x0206,
  UNITS = 0x0305,
  ENDLIB = 0x0400,
  BGNSTR = 0x0502,
  STRNAME = 0x0606,
  ENDSTR = 0x0700,
  BOUNDARY = 0x0800,
  SREF = 0x0A00,
  LAYER = 0x0D02,
  DATATYPE = 0x0E02,
  XY = 0x1003,
  ENDEL = 0x1100,
  SNAME = 0x1206,
  STRANS = 0x1A01,
  MAG = 0x1B05,
  ANGLE = 0x1C05,
};

inline constexpr std::int16_t kStreamVersion = 600;

// 8-byte excess-64 base-16 real.
std::array<std::uint8_t, 8> encode_real8(double v);
double decode_real8(std::span<const std::uint8_t, 8> bytes);

// Serialises a validated library. Timestamps are written as zeros so output
// is deterministic.
std::vector<std::uint8_t> write_gdsii(const layout::Library& lib);

// Parses BOUNDARY and SREF elements. Throws ParseError with the byte offset
// of the offending record on bad framing, truncation, unknown records, or
// unsupported elements (PATH, TEXT, AREF, BOX, NODE).
layout::Library read_gdsii(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, const layout::Library& lib);
layout::Library read_file(const std::filesystem::path& path);

}  // namespace lwr::gdsii
