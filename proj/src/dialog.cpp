#include "elba/dialog.hpp"

#include <array>
#include <cstdlib>
#include <limits>

#include "elba/error.hpp"
#include "elba/expert.hpp"
#include "elba/rng.hpp"

namespace elba {

std::vector<Utterance> synthesize_dialog(const Task& task,
                                         const std::vector<std::pair<int, SubGoal>>& spans,
                                         uint64_t seed, double hint_rate) {
    std::vector<Utterance> out;
    out.push_back({0, "please " + task.phrase()});
    Rng rng = Rng(seed).substream("dialog");
    for (const auto& [start, sg] : spans) {
        if (rng.chance(hint_rate))
            out.push_back({start, "now you should " + sg.render()});
    }
    return out;
}

const std::string& direction_word(RelativeDirection d) {
    static const std::array<std::string, 4> words = {"left", "right", "front", "behind"};
    return words[static_cast<size_t>(d)];
}

namespace {

const ObjectInstance* nearest_instance(const GridWorld& w, Category target) {
    const ObjectInstance* best = nullptr;
    int best_dist = std::numeric_limits<int>::max();
    for (const auto& o : w.objects) {
        if (o.category != target) continue;
        if (w.held_object && o.id == *w.held_object) continue;
        Cell c = w.effective_cell(o);
        int d = std::abs(c.x - w.agent_pos.x) + std::abs(c.y - w.agent_pos.y);
        if (d < best_dist || (d == best_dist && best && o.id < best->id)) {
            best = &o;
            best_dist = d;
        }
    }
    if (!best) raise("NoSuchObject", "no " + category_id(target) + " in world");
    return best;
}

}  // namespace

LocationFacts oracle_location(const GridWorld& w, Category target) {
    const ObjectInstance* obj = nearest_instance(w, target);
    Cell c = w.effective_cell(*obj);
    int dx = c.x - w.agent_pos.x;
    int dy = c.y - w.agent_pos.y;
    // Rotate into the agent frame: ahead is +a, right is +r.
    int a = 0, r = 0;
    switch (w.agent_facing) {
        case Facing::North: a = -dy; r = dx; break;
        case Facing::South: a = dy; r = -dx; break;
        case Facing::East:  a = dx; r = dy; break;
        case Facing::West:  a = -dx; r = -dy; break;
    }
    LocationFacts facts;
    if (std::abs(a) >= std::abs(r))
        facts.direction = a >= 0 ? RelativeDirection::Front : RelativeDirection::Behind;
    else
        facts.direction = r > 0 ? RelativeDirection::Right : RelativeDirection::Left;
    if (obj->container) {
        const ObjectInstance* host = w.object_by_id(*obj->container);
        facts.container = host ? category_word(host->category) : "floor";
    } else {
        facts.container = "floor";
    }
    return facts;
}

AppearanceFacts oracle_appearance(const GridWorld& w, Category target) {
    const ObjectInstance* obj = nearest_instance(w, target);
    return {obj->color, obj->material};
}

TurnHint oracle_direction(const GridWorld& w, Category target) {
    nearest_instance(w, target);  // NoSuchObject when the category is absent
    auto first = first_step_toward(w, target);  // NoPath when boxed in
    if (!first || first->kind == ActionKind::Forward) return TurnHint::None;
    return first->kind == ActionKind::TurnLeft ? TurnHint::Left : TurnHint::Right;
}

}  // namespace elba
