#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "elba/lexicon.hpp"

namespace elba {

enum class Facing : int { North, East, South, West };

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

enum class Terrain : uint8_t { Floor, Wall };

struct ObjectInstance {
    int id = 0;
    Category category = Category::Potato;
    Color color = Color::Brown;
    Material material = Material::Organic;
    Cell position;                      // meaningless while held
    std::optional<int> container;       // id of hosting container object
    uint8_t state_flags = 0;

    bool has_flag(Flag f) const { return state_flags & static_cast<uint8_t>(f); }
    void set_flag(Flag f) { state_flags |= static_cast<uint8_t>(f); }
    void clear_flag(Flag f) { state_flags &= static_cast<uint8_t>(~static_cast<uint8_t>(f)); }
};

struct Action {
    ActionKind kind = ActionKind::Stop;
    std::optional<Category> arg;

    std::string encode() const;                       // "Forward" / "Pickup:Potato"
    static Action decode(const std::string& text);
};

enum class StepOutcome { Ok, Blocked, InvalidTarget };

// Value-semantic world state; step() copies and mutates the copy.
// All state is integral, so replay is bit-exact everywhere.
struct GridWorld {
    int width = 0;
    int height = 0;
    std::vector<Terrain> cells;         // row-major, y * width + x
    std::vector<ObjectInstance> objects;
    Cell agent_pos;
    Facing agent_facing = Facing::North;
    std::optional<int> held_object;
    uint64_t rng_seed = 0;

    bool in_bounds(Cell c) const {
        return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
    }
    Terrain terrain(Cell c) const { return cells[static_cast<size_t>(c.y) * width + c.x]; }
    void set_terrain(Cell c, Terrain t) { cells[static_cast<size_t>(c.y) * width + c.x] = t; }

    const ObjectInstance* object_by_id(int id) const;
    ObjectInstance* object_by_id(int id);
    // Cell an object effectively occupies (its container's cell while contained).
    Cell effective_cell(const ObjectInstance& obj) const;
    // Fixed furniture blocks walking; loose movables do not.
    bool walkable(Cell c) const;
    // True when the object can be seen / targeted: not inside a closed container.
    bool visible(const ObjectInstance& obj) const;
    std::vector<const ObjectInstance*> objects_at(Cell c) const;
    const ObjectInstance* find_visible(Cell c, Category cat) const;
    bool validate(std::string* why = nullptr) const;
};

Cell forward_cell(Cell from, Facing f);
Cell facing_cell(const GridWorld& w);
Facing turn_left(Facing f);
Facing turn_right(Facing f);

std::pair<GridWorld, StepOutcome> step(const GridWorld& world, const Action& action);

// ---------------------------------------------------------------------------
// Symbolic egocentric observation: a 5x5 window (rows 0..4 ahead of the agent,
// columns -2..+2 lateral, rotated into the agent frame), three symbols per
// cell (category, color, material) plus three for the held object.
// ---------------------------------------------------------------------------
constexpr int kPatchSide = 5;
constexpr int kPatchSlots = kPatchSide * kPatchSide * 3 + 3;

// Observation symbol ids: categories, then colors, then materials, then markers.
constexpr int kObsSymEmpty = kCategoryCount + kColorCount + kMaterialCount;
constexpr int kObsSymWall = kObsSymEmpty + 1;
constexpr int kObsSymOut = kObsSymEmpty + 2;
constexpr int kObsSymNone = kObsSymEmpty + 3;
constexpr int kObsSymbolCount = kObsSymEmpty + 4;

using ObsPatch = std::vector<int>;  // always kPatchSlots long

ObsPatch observe(const GridWorld& world);

}  // namespace elba
