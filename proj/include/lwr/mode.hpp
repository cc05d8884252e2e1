#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "lwr/error.hpp"

namespace lwr {

// The four primary Lamb modes. Labels index branches by ascending frequency
// within a symmetry family.
enum class LambMode { A0, S0, A1, S1 };

inline constexpr std::array<LambMode, 4> kAllModes{LambMode::A0, LambMode::S0, LambMode::A1,
                                                   LambMode::S1};

inline std::string_view to_string(LambMode m) {
  switch (m) {
    case LambMode::A0: return "A0";
    case LambMode::S0: return "S0";
    case LambMode::A1: return "A1";
    case LambMode::S1: return "S1";
  }
  return "?";
}

inline LambMode parse_mode(std::string_view s) {
  if (s == "A0" || s == "a0") return LambMode::A0;
  if (s == "S0" || s == "s0") return LambMode::S0;
  if (s == "A1" || s == "a1") return LambMode::A1;
  if (s == "S1" || s == "s1") return LambMode::S1;
  throw InputError("unknown Lamb mode '" + std::string(s) + "'");
}

inline bool is_symmetric(LambMode m) { return m == LambMode::S0 || m == LambMode::S1; }

// 0 for A0/S0, 1 for A1/S1.
inline std::size_t branch_order(LambMode m) {
  return (m == LambMode::A1 || m == LambMode::S1) ? 1 : 0;
}

}  // namespace lwr
