#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "beamsim/config.hpp"
#include "beamsim/preset_data.hpp"

namespace beamsim {

inline std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, _] : detail::kPresetTable) names.emplace_back(name);
    return names;
}

inline std::string_view preset_text(std::string_view name) {
    for (const auto& [n, text] : detail::kPresetTable) {
        if (n == name) return text;
    }
    throw std::out_of_range("unknown preset '" + std::string(name) + "'");
}

inline ExperimentSpec load_preset(std::string_view name) { return parse_config(preset_text(name)); }

}  // namespace beamsim
