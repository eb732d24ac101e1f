#include "rfseq/board.hpp"

#include <array>

#include "rfseq/errors.hpp"

namespace rfseq::sim {

namespace {

// Converter counts and rates of the standard firmware builds.
const std::array<BoardProfile, 3> kProfiles = {{
    {"ZCU111", 7, 2, 6.554e9, 4.096e9, 6.0e9},
    {"RFSoc4x2", 2, 2, 9.85e9, 5.0e9, 6.0e9},
    {"ZCU216", 7, 2, 9.85e9, 2.5e9, 6.0e9},
}};

}  // namespace

std::span<const BoardProfile> board_profiles() { return kProfiles; }

std::optional<BoardProfile> find_board_profile(std::string_view name) {
  for (const auto& p : kProfiles) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

const BoardProfile& board_profile(std::string_view name) {
  for (const auto& p : kProfiles) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("unknown board profile: " + std::string(name));
}

}  // namespace rfseq::sim
