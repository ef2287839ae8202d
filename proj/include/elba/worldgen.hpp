#pragma once

#include <cstdint>
#include <map>

#include "elba/world.hpp"

namespace elba {

// A room layout: fixed dimensions, interior walls and furniture arrangement
// (all derived from layout_seed), plus required object counts. Episodes of the
// same spec share walls and furniture; movable placement, attributes and the
// agent pose come from the per-episode seed.
struct RoomSpec {
    int width = 7;
    int height = 7;
    uint64_t layout_seed = 0;
    std::map<Category, int> counts;

    bool operator==(const RoomSpec&) const = default;
    uint64_t identity_hash() const;
};

GridWorld generate_world(uint64_t seed, const RoomSpec& spec);

}  // namespace elba
