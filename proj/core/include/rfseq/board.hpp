#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace rfseq::sim {

// Converter layout of one supported RFSoC evaluation board, as exposed by the
// standard firmware. Rates in samples per second, frequencies in Hz.
struct BoardProfile {
  std::string name;
  int active_dacs = 0;
  int active_adcs = 0;
  double dac_rate = 0.0;
  double adc_rate = 0.0;
  double max_frequency = 0.0;

  bool operator==(const BoardProfile&) const = default;
};

// ZCU111, RFSoc4x2 and ZCU216, in that order.
std::span<const BoardProfile> board_profiles();

std::optional<BoardProfile> find_board_profile(std::string_view name);

// Throws InvalidArgument for unknown names.
const BoardProfile& board_profile(std::string_view name);

}  // namespace rfseq::sim
