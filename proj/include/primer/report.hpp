#pragma once

#include "primer/analysis.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace primer {

inline constexpr std::string_view kConversationTsvHeader =
    "Address A\tPort A\tAddress B\tPort B\tPackets\tBytes";

std::string conversation_tsv(const std::vector<ConversationStats>& rows);

void to_json(nlohmann::json& j, const ConversationStats& row);
void to_json(nlohmann::json& j, const AccuracyReport& report);
void to_json(nlohmann::json& j, const VolumeSeries& series);

std::string accuracy_text(const AccuracyReport& report);

// "bin_start,packets,bytes" with bin_start in seconds relative to the first bin.
std::string volume_csv(const VolumeSeries& series);

// Fixed four-decimal rendering used for ratios in text output.
std::string format_ratio(double value);

} // namespace primer
