#include "elba/worldgen.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "elba/error.hpp"
#include "elba/rng.hpp"

namespace elba {

namespace {

// Floor cells not blocked by furniture must stay mutually reachable.
bool connected_if_blocked(const GridWorld& w, const std::vector<Cell>& extra_blocked) {
    auto blocked = [&](Cell c) {
        for (const auto& b : extra_blocked)
            if (b == c) return true;
        for (const auto& o : w.objects)
            if (!is_movable(o.category) && !o.container && o.position == c) return true;
        return false;
    };
    Cell start{-1, -1};
    int open_count = 0;
    for (int y = 0; y < w.height; ++y)
        for (int x = 0; x < w.width; ++x) {
            Cell c{x, y};
            if (w.terrain(c) == Terrain::Floor && !blocked(c)) {
                if (start.x < 0) start = c;
                ++open_count;
            }
        }
    if (open_count == 0) return false;
    std::vector<bool> seen(static_cast<size_t>(w.width) * w.height, false);
    std::queue<Cell> q;
    q.push(start);
    seen[static_cast<size_t>(start.y) * w.width + start.x] = true;
    int reached = 0;
    while (!q.empty()) {
        Cell c = q.front();
        q.pop();
        ++reached;
        const Cell nbrs[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
        for (Cell n : nbrs) {
            if (!w.in_bounds(n) || w.terrain(n) != Terrain::Floor || blocked(n)) continue;
            size_t i = static_cast<size_t>(n.y) * w.width + n.x;
            if (!seen[i]) {
                seen[i] = true;
                q.push(n);
            }
        }
    }
    return reached == open_count;
}

bool furniture_at(const GridWorld& w, Cell c);

bool has_free_neighbor(const GridWorld& w, Cell c) {
    const Cell nbrs[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
    for (Cell n : nbrs) {
        if (w.in_bounds(n) && w.terrain(n) == Terrain::Floor && !furniture_at(w, n))
            return true;
    }
    return false;
}

std::vector<Cell> shuffled_floor_cells(const GridWorld& w, Rng& rng) {
    std::vector<Cell> cells;
    for (int y = 0; y < w.height; ++y)
        for (int x = 0; x < w.width; ++x)
            if (w.terrain({x, y}) == Terrain::Floor) cells.push_back({x, y});
    rng.shuffle(cells);
    return cells;
}

bool furniture_at(const GridWorld& w, Cell c) {
    for (const auto& o : w.objects)
        if (!is_movable(o.category) && !o.container && o.position == c) return true;
    return false;
}

}  // namespace

uint64_t RoomSpec::identity_hash() const {
    std::string repr = std::to_string(width) + "x" + std::to_string(height) + "#" +
                       std::to_string(layout_seed);
    for (const auto& [cat, n] : counts)
        repr += "," + category_id(cat) + ":" + std::to_string(n);
    return Rng::hash_name(repr);
}

GridWorld generate_world(uint64_t seed, const RoomSpec& spec) {
    if (spec.width < 5 || spec.height < 5)
        raise("SpecInfeasible", "room must be at least 5x5");

    GridWorld w;
    w.width = spec.width;
    w.height = spec.height;
    w.rng_seed = seed;
    w.cells.assign(static_cast<size_t>(spec.width) * spec.height, Terrain::Floor);
    for (int x = 0; x < spec.width; ++x) {
        w.set_terrain({x, 0}, Terrain::Wall);
        w.set_terrain({x, spec.height - 1}, Terrain::Wall);
    }
    for (int y = 0; y < spec.height; ++y) {
        w.set_terrain({0, y}, Terrain::Wall);
        w.set_terrain({spec.width - 1, y}, Terrain::Wall);
    }

    // Interior wall stubs from the layout stream; keep the floor connected.
    Rng layout_rng = Rng(spec.layout_seed).substream("walls");
    int stubs = static_cast<int>(layout_rng.below(3));
    for (int s = 0; s < stubs; ++s) {
        bool vertical = layout_rng.chance(0.5);
        int len = 1 + static_cast<int>(layout_rng.below(static_cast<uint64_t>(
                          std::max(2, (vertical ? spec.height : spec.width) / 3))));
        int x0 = 2 + static_cast<int>(layout_rng.below(static_cast<uint64_t>(spec.width - 4)));
        int y0 = 2 + static_cast<int>(layout_rng.below(static_cast<uint64_t>(spec.height - 4)));
        std::vector<Cell> segment;
        for (int i = 0; i < len; ++i) {
            Cell c = vertical ? Cell{x0, y0 + i} : Cell{x0 + i, y0};
            if (c.x <= 0 || c.y <= 0 || c.x >= spec.width - 1 || c.y >= spec.height - 1) break;
            segment.push_back(c);
        }
        GridWorld trial = w;
        for (Cell c : segment) trial.set_terrain(c, Terrain::Wall);
        if (connected_if_blocked(trial, {})) w = trial;
    }

    int next_id = 1;
    // Furniture from the layout stream so episodes of one room share the map.
    Rng furn_rng = Rng(spec.layout_seed).substream("furniture");
    Rng attr_rng = Rng(seed).substream("attributes");
    std::vector<std::pair<Category, int>> furniture, movables;
    for (const auto& [cat, n] : spec.counts)
        (is_movable(cat) ? movables : furniture).emplace_back(cat, n);

    for (const auto& [cat, n] : furniture) {
        for (int i = 0; i < n; ++i) {
            // Pot prefers a stove top (boiling needs the pot on the stove).
            if (cat == Category::Pot) {
                const ObjectInstance* stove = nullptr;
                for (const auto& o : w.objects)
                    if (o.category == Category::Stove) stove = &o;
                if (stove) {
                    ObjectInstance pot;
                    pot.id = next_id++;
                    pot.category = cat;
                    pot.color = color_pool(cat)[attr_rng.below(color_pool(cat).size())];
                    pot.material = material_pool(cat)[attr_rng.below(material_pool(cat).size())];
                    pot.position = stove->position;
                    pot.container = stove->id;
                    w.objects.push_back(pot);
                    continue;
                }
            }
            bool placed = false;
            for (Cell c : shuffled_floor_cells(w, furn_rng)) {
                if (furniture_at(w, c)) continue;
                if (!connected_if_blocked(w, {c})) continue;
                GridWorld trial = w;
                ObjectInstance obj;
                obj.id = next_id;
                obj.category = cat;
                obj.color = color_pool(cat)[attr_rng.below(color_pool(cat).size())];
                obj.material = material_pool(cat)[attr_rng.below(material_pool(cat).size())];
                obj.position = c;
                trial.objects.push_back(obj);
                if (!has_free_neighbor(trial, c)) continue;
                w = trial;
                ++next_id;
                placed = true;
                break;
            }
            if (!placed)
                raise("SpecInfeasible", "cannot place " + category_id(cat));
        }
    }

    // Movables from the episode stream: loose on the floor or hosted.
    Rng mov_rng = Rng(seed).substream("movables");
    for (const auto& [cat, n] : movables) {
        for (int i = 0; i < n; ++i) {
            ObjectInstance obj;
            obj.id = next_id;
            obj.category = cat;
            obj.color = color_pool(cat)[attr_rng.below(color_pool(cat).size())];
            obj.material = material_pool(cat)[attr_rng.below(material_pool(cat).size())];
            // Host on furniture half the time; never inside appliances the
            // tasks need empty (pot, coffee machine, sink). Containers hold
            // at most 3 items, floor cells at most one loose movable.
            std::vector<const ObjectInstance*> hosts;
            for (const auto& o : w.objects) {
                if (!is_container(o.category)) continue;
                if (o.category == Category::Pot || o.category == Category::CoffeeMachine ||
                    o.category == Category::Sink)
                    continue;
                int load = 0;
                for (const auto& other : w.objects)
                    if (other.container && *other.container == o.id) ++load;
                if (load < 3) hosts.push_back(&o);
            }
            auto loose_at = [&](Cell c) {
                for (const auto& o : w.objects)
                    if (is_movable(o.category) && !o.container && o.position == c) return true;
                return false;
            };
            std::vector<Cell> free;
            for (Cell c : shuffled_floor_cells(w, mov_rng)) {
                if (!furniture_at(w, c) && !loose_at(c)) {
                    free.push_back(c);
                    break;
                }
            }
            bool hosted = !hosts.empty() && (free.empty() || mov_rng.chance(0.5));
            if (hosted) {
                const ObjectInstance* host = hosts[mov_rng.below(hosts.size())];
                obj.container = host->id;
                obj.position = host->position;
            } else if (!free.empty()) {
                obj.position = free[0];
            } else {
                raise("SpecInfeasible", "no room for " + category_id(cat));
            }
            w.objects.push_back(obj);
            ++next_id;
        }
    }

    // Agent pose from the episode stream.
    Rng pose_rng = Rng(seed).substream("pose");
    std::vector<Cell> open;
    for (Cell c : shuffled_floor_cells(w, pose_rng))
        if (!furniture_at(w, c)) open.push_back(c);
    if (open.empty()) raise("SpecInfeasible", "no open cell for the agent");
    w.agent_pos = open[0];
    w.agent_facing = static_cast<Facing>(pose_rng.below(4));

    std::string why;
    if (!w.validate(&why)) raise("SpecInfeasible", "generated world invalid: " + why);
    for (const auto& [cat, n] : spec.counts) {
        int have = 0;
        for (const auto& o : w.objects)
            if (o.category == cat) ++have;
        if (have < n) raise("SpecInfeasible", "short on " + category_id(cat));
    }
    return w;
}

}  // namespace elba
