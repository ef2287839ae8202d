#include "elba/world.hpp"

#include <algorithm>
#include <set>

#include "elba/error.hpp"

namespace elba {

std::string Action::encode() const {
    std::string s = action_kind_id(kind);
    if (arg) {
        s += ':';
        s += category_id(*arg);
    }
    return s;
}

Action Action::decode(const std::string& text) {
    Action a;
    auto colon = text.find(':');
    std::string kind_part = colon == std::string::npos ? text : text.substr(0, colon);
    auto kind = action_kind_from_id(kind_part);
    if (!kind) raise("BadActionEncoding", "unknown action kind '" + kind_part + "'");
    a.kind = *kind;
    if (colon != std::string::npos) {
        auto cat = category_from_id(text.substr(colon + 1));
        if (!cat) raise("BadActionEncoding", "unknown category in '" + text + "'");
        a.arg = *cat;
    }
    return a;
}

const ObjectInstance* GridWorld::object_by_id(int id) const {
    for (const auto& o : objects)
        if (o.id == id) return &o;
    return nullptr;
}

ObjectInstance* GridWorld::object_by_id(int id) {
    for (auto& o : objects)
        if (o.id == id) return &o;
    return nullptr;
}

Cell GridWorld::effective_cell(const ObjectInstance& obj) const {
    if (obj.container) {
        const ObjectInstance* host = object_by_id(*obj.container);
        if (host) return effective_cell(*host);
    }
    return obj.position;
}

bool GridWorld::walkable(Cell c) const {
    if (!in_bounds(c) || terrain(c) != Terrain::Floor) return false;
    for (const auto& o : objects) {
        if (held_object && o.id == *held_object) continue;
        if (!is_movable(o.category) && !o.container && o.position == c) return false;
    }
    return true;
}

bool GridWorld::visible(const ObjectInstance& obj) const {
    if (held_object && obj.id == *held_object) return false;
    std::optional<int> host = obj.container;
    while (host) {
        const ObjectInstance* h = object_by_id(*host);
        if (!h) break;
        if (is_openable(h->category) && !h->has_flag(Flag::Open)) return false;
        host = h->container;
    }
    return true;
}

std::vector<const ObjectInstance*> GridWorld::objects_at(Cell c) const {
    std::vector<const ObjectInstance*> out;
    for (const auto& o : objects) {
        if (held_object && o.id == *held_object) continue;
        if (effective_cell(o) == c) out.push_back(&o);
    }
    return out;
}

const ObjectInstance* GridWorld::find_visible(Cell c, Category cat) const {
    const ObjectInstance* best = nullptr;
    for (const auto* o : objects_at(c)) {
        if (o->category != cat || !visible(*o)) continue;
        if (!best || o->id < best->id) best = o;
    }
    return best;
}

bool GridWorld::validate(std::string* why) const {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (!in_bounds(agent_pos) || terrain(agent_pos) != Terrain::Floor)
        return fail("agent not on a floor cell");
    std::set<int> ids;
    for (const auto& o : objects) {
        if (!ids.insert(o.id).second) return fail("duplicate object id");
        bool held = held_object && o.id == *held_object;
        if (!held) {
            Cell c = effective_cell(o);
            if (!in_bounds(c) || terrain(c) != Terrain::Floor)
                return fail("object off the floor: " + category_id(o.category));
        }
        if (o.container) {
            const ObjectInstance* host = object_by_id(*o.container);
            if (!host || !is_container(host->category)) return fail("bad container reference");
        }
        if (o.state_flags & ~allowed_flags(o.category)) return fail("illegal state flag");
    }
    if (held_object && !object_by_id(*held_object)) return fail("held id missing");
    return true;
}

Cell forward_cell(Cell from, Facing f) {
    switch (f) {
        case Facing::North: return {from.x, from.y - 1};
        case Facing::East:  return {from.x + 1, from.y};
        case Facing::South: return {from.x, from.y + 1};
        case Facing::West:  return {from.x - 1, from.y};
    }
    return from;
}

Cell facing_cell(const GridWorld& w) { return forward_cell(w.agent_pos, w.agent_facing); }

Facing turn_left(Facing f) { return static_cast<Facing>((static_cast<int>(f) + 3) % 4); }
Facing turn_right(Facing f) { return static_cast<Facing>((static_cast<int>(f) + 1) % 4); }

namespace {

Cell lateral_cell(const GridWorld& w, bool left) {
    Facing f = left ? turn_left(w.agent_facing) : turn_right(w.agent_facing);
    return forward_cell(w.agent_pos, f);
}

// Heat applies at placement time: an item placed into a pot sitting on a
// running stove boils, one placed into a running coffee machine cooks.
void apply_heat(GridWorld& w, ObjectInstance& placed, const ObjectInstance& host) {
    if (host.category == Category::Pot && host.container) {
        const ObjectInstance* under = w.object_by_id(*host.container);
        if (under && under->category == Category::Stove && under->has_flag(Flag::ToggledOn) &&
            (allowed_flags(placed.category) & static_cast<uint8_t>(Flag::Boiled)))
            placed.set_flag(Flag::Boiled);
    }
    if (host.category == Category::CoffeeMachine && host.has_flag(Flag::ToggledOn) &&
        (allowed_flags(placed.category) & static_cast<uint8_t>(Flag::Cooked)))
        placed.set_flag(Flag::Cooked);
}

StepOutcome apply(GridWorld& w, const Action& action) {
    switch (action.kind) {
        case ActionKind::Stop:
            return StepOutcome::Ok;
        case ActionKind::TurnLeft:
            w.agent_facing = turn_left(w.agent_facing);
            return StepOutcome::Ok;
        case ActionKind::TurnRight:
            w.agent_facing = turn_right(w.agent_facing);
            return StepOutcome::Ok;
        case ActionKind::Forward:
        case ActionKind::PanLeft:
        case ActionKind::PanRight: {
            Cell dest = action.kind == ActionKind::Forward
                            ? facing_cell(w)
                            : lateral_cell(w, action.kind == ActionKind::PanLeft);
            if (!w.walkable(dest)) return StepOutcome::Blocked;
            w.agent_pos = dest;
            return StepOutcome::Ok;
        }
        default:
            break;
    }

    // Interactions target the facing cell and need an object argument.
    if (!action.arg) return StepOutcome::InvalidTarget;
    Cell target = facing_cell(w);
    if (!w.in_bounds(target)) return StepOutcome::InvalidTarget;
    Category cat = *action.arg;

    switch (action.kind) {
        case ActionKind::Pickup: {
            if (w.held_object) return StepOutcome::InvalidTarget;
            if (!is_movable(cat)) return StepOutcome::InvalidTarget;
            const ObjectInstance* found = w.find_visible(target, cat);
            if (!found) return StepOutcome::InvalidTarget;
            ObjectInstance* obj = w.object_by_id(found->id);
            obj->container.reset();
            w.held_object = obj->id;
            return StepOutcome::Ok;
        }
        case ActionKind::Place: {
            if (!w.held_object) return StepOutcome::InvalidTarget;
            if (!is_container(cat)) return StepOutcome::InvalidTarget;
            const ObjectInstance* host = w.find_visible(target, cat);
            if (!host) return StepOutcome::InvalidTarget;
            if (is_openable(host->category) && !host->has_flag(Flag::Open))
                return StepOutcome::InvalidTarget;
            ObjectInstance* obj = w.object_by_id(*w.held_object);
            obj->container = host->id;
            obj->position = w.effective_cell(*host);
            apply_heat(w, *obj, *host);
            w.held_object.reset();
            return StepOutcome::Ok;
        }
        case ActionKind::Slice: {
            if (!w.held_object) return StepOutcome::InvalidTarget;
            const ObjectInstance* knife = w.object_by_id(*w.held_object);
            if (knife->category != Category::Knife) return StepOutcome::InvalidTarget;
            if (!is_sliceable(cat)) return StepOutcome::InvalidTarget;
            const ObjectInstance* found = w.find_visible(target, cat);
            if (!found) return StepOutcome::InvalidTarget;
            w.object_by_id(found->id)->set_flag(Flag::Sliced);
            return StepOutcome::Ok;
        }
        case ActionKind::Open:
        case ActionKind::Close: {
            if (!is_openable(cat)) return StepOutcome::InvalidTarget;
            const ObjectInstance* found = w.find_visible(target, cat);
            if (!found) return StepOutcome::InvalidTarget;
            ObjectInstance* obj = w.object_by_id(found->id);
            if (action.kind == ActionKind::Open)
                obj->set_flag(Flag::Open);
            else
                obj->clear_flag(Flag::Open);
            return StepOutcome::Ok;
        }
        case ActionKind::ToggleOn:
        case ActionKind::ToggleOff: {
            if (!is_toggleable(cat)) return StepOutcome::InvalidTarget;
            const ObjectInstance* found = w.find_visible(target, cat);
            if (!found) return StepOutcome::InvalidTarget;
            ObjectInstance* obj = w.object_by_id(found->id);
            if (action.kind == ActionKind::ToggleOn)
                obj->set_flag(Flag::ToggledOn);
            else
                obj->clear_flag(Flag::ToggledOn);
            return StepOutcome::Ok;
        }
        default:
            return StepOutcome::InvalidTarget;
    }
}

}  // namespace

std::pair<GridWorld, StepOutcome> step(const GridWorld& world, const Action& action) {
    GridWorld next = world;
    StepOutcome out = apply(next, action);
    if (out != StepOutcome::Ok) return {world, out};
    return {next, out};
}

ObsPatch observe(const GridWorld& w) {
    ObsPatch patch(kPatchSlots, kObsSymNone);
    // Agent-frame axes: "ahead" along facing, "lateral" to the right of it.
    int fx = 0, fy = 0;
    switch (w.agent_facing) {
        case Facing::North: fx = 0; fy = -1; break;
        case Facing::East:  fx = 1; fy = 0; break;
        case Facing::South: fx = 0; fy = 1; break;
        case Facing::West:  fx = -1; fy = 0; break;
    }
    int rx = -fy, ry = fx;  // right-hand lateral

    int slot = 0;
    for (int ahead = 0; ahead < kPatchSide; ++ahead) {
        for (int lat = -kPatchSide / 2; lat <= kPatchSide / 2; ++lat) {
            Cell c{w.agent_pos.x + fx * ahead + rx * lat,
                   w.agent_pos.y + fy * ahead + ry * lat};
            int cat_sym = kObsSymEmpty, col_sym = kObsSymEmpty, mat_sym = kObsSymEmpty;
            if (!w.in_bounds(c)) {
                cat_sym = col_sym = mat_sym = kObsSymOut;
            } else if (w.terrain(c) == Terrain::Wall) {
                cat_sym = col_sym = mat_sym = kObsSymWall;
            } else {
                // Topmost visible object: loose movables over furniture.
                const ObjectInstance* shown = nullptr;
                for (const auto* o : w.objects_at(c)) {
                    if (!w.visible(*o)) continue;
                    if (!shown) {
                        shown = o;
                        continue;
                    }
                    bool o_loose = is_movable(o->category);
                    bool s_loose = is_movable(shown->category);
                    if (o_loose != s_loose ? o_loose : o->id < shown->id) shown = o;
                }
                if (shown) {
                    cat_sym = static_cast<int>(shown->category);
                    col_sym = kCategoryCount + static_cast<int>(shown->color);
                    mat_sym = kCategoryCount + kColorCount + static_cast<int>(shown->material);
                }
            }
            patch[slot++] = cat_sym;
            patch[slot++] = col_sym;
            patch[slot++] = mat_sym;
        }
    }
    if (w.held_object) {
        const ObjectInstance* held = w.object_by_id(*w.held_object);
        patch[slot++] = static_cast<int>(held->category);
        patch[slot++] = kCategoryCount + static_cast<int>(held->color);
        patch[slot++] = kCategoryCount + kColorCount + static_cast<int>(held->material);
    } else {
        patch[slot++] = kObsSymNone;
        patch[slot++] = kObsSymNone;
        patch[slot++] = kObsSymNone;
    }
    return patch;
}

}  // namespace elba
