#pragma once

#include "elba/config.hpp"
#include "elba/episode.hpp"

namespace elba {

// Room layouts, episodes (task + expert demo + dialog), splits, and the
// split-dependent hint-rate pass, all driven by gen.* config keys.
std::vector<Episode> build_episodes(const RunConfig& cfg);

std::vector<Episode> episodes_of_split(const std::vector<Episode>& all, Split split);

// Layout list the generator uses (exposed for tests).
std::vector<RoomSpec> build_layouts(const RunConfig& cfg);

}  // namespace elba
