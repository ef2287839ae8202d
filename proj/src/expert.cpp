#include "elba/expert.hpp"

#include <algorithm>
#include <queue>

#include "elba/error.hpp"

namespace elba {

namespace {

struct PoseKey {
    int x, y, f;
    bool operator==(const PoseKey&) const = default;
};

// BFS over (x, y, facing); expansion order Forward, TurnLeft, TurnRight makes
// the first shortest path found the lexicographically smallest one.
std::optional<std::vector<Action>> navigate_to_face(const GridWorld& w,
                                                    const std::vector<Cell>& targets) {
    auto is_target = [&](PoseKey p) {
        Cell ahead = forward_cell({p.x, p.y}, static_cast<Facing>(p.f));
        return std::find(targets.begin(), targets.end(), ahead) != targets.end();
    };

    PoseKey start{w.agent_pos.x, w.agent_pos.y, static_cast<int>(w.agent_facing)};
    if (is_target(start)) return std::vector<Action>{};

    auto index = [&](PoseKey p) {
        return (static_cast<size_t>(p.y) * w.width + p.x) * 4 + p.f;
    };
    std::vector<int> prev_state(static_cast<size_t>(w.width) * w.height * 4, -1);
    std::vector<ActionKind> prev_action(prev_state.size(), ActionKind::Stop);
    std::vector<bool> seen(prev_state.size(), false);

    std::queue<PoseKey> q;
    q.push(start);
    seen[index(start)] = true;

    while (!q.empty()) {
        PoseKey cur = q.front();
        q.pop();
        const std::pair<ActionKind, PoseKey> moves[3] = {
            {ActionKind::Forward,
             [&] {
                 Cell ahead = forward_cell({cur.x, cur.y}, static_cast<Facing>(cur.f));
                 return w.walkable(ahead) ? PoseKey{ahead.x, ahead.y, cur.f} : cur;
             }()},
            {ActionKind::TurnLeft,
             {cur.x, cur.y, static_cast<int>(turn_left(static_cast<Facing>(cur.f)))}},
            {ActionKind::TurnRight,
             {cur.x, cur.y, static_cast<int>(turn_right(static_cast<Facing>(cur.f)))}},
        };
        for (const auto& [act, nxt] : moves) {
            if (nxt == cur) continue;
            size_t i = index(nxt);
            if (seen[i]) continue;
            seen[i] = true;
            prev_state[i] = static_cast<int>(index(cur));
            prev_action[i] = act;
            if (is_target(nxt)) {
                std::vector<Action> path;
                size_t walk = i;
                while (static_cast<int>(walk) != static_cast<int>(index(start))) {
                    path.push_back({prev_action[walk], std::nullopt});
                    walk = static_cast<size_t>(prev_state[walk]);
                }
                std::reverse(path.begin(), path.end());
                return path;
            }
            q.push(nxt);
        }
    }
    return std::nullopt;
}

bool inside(const GridWorld& w, const ObjectInstance& o, Category host_cat) {
    std::optional<int> host = o.container;
    while (host) {
        const ObjectInstance* h = w.object_by_id(*host);
        if (!h) return false;
        if (h->category == host_cat) return true;
        host = h->container;
    }
    return false;
}

std::vector<Cell> target_cells(const GridWorld& w, Category cat,
                               std::optional<Category> exclude_host = std::nullopt) {
    std::vector<Cell> cells;
    for (const auto& o : w.objects) {
        if (o.category != cat) continue;
        if (w.held_object && o.id == *w.held_object) continue;
        if (exclude_host && inside(w, o, *exclude_host)) continue;
        Cell c = w.effective_cell(o);
        if (std::find(cells.begin(), cells.end(), c) == cells.end()) cells.push_back(c);
    }
    return cells;
}

void run(GridWorld& w, std::vector<Action>& actions, const Action& a) {
    auto [next, outcome] = step(w, a);
    if (outcome != StepOutcome::Ok)
        raise("ExpertActionFailed", "expert action " + a.encode() + " failed");
    w = next;
    actions.push_back(a);
}

}  // namespace

std::optional<Action> first_step_toward(const GridWorld& world, Category target) {
    auto cells = target_cells(world, target);
    if (cells.empty()) raise("NoPath", "no instance of " + category_id(target));
    auto path = navigate_to_face(world, cells);
    if (!path) raise("NoPath", "unreachable " + category_id(target));
    if (path->empty()) return std::nullopt;
    return (*path)[0];
}

ExpertResult expert_rollout(const GridWorld& world, const Task& task) {
    ExpertResult result;
    GridWorld w = world;

    auto all_done = [&] {
        auto checks = check_goal_conditions(w, task);
        return std::all_of(checks.begin(), checks.end(), [](bool b) { return b; });
    };

    if (all_done()) {
        result.actions.push_back({ActionKind::Stop, std::nullopt});
        result.subgoal_spans.emplace_back(0, SubGoal{SubGoalVerb::Find, Category::Potato, std::nullopt});
        if (!task.gold_subgoals.empty())
            result.subgoal_spans.back().second = task.gold_subgoals.front();
        return result;
    }

    // Items already delivered to the task's destination container must not
    // be picked up again for the next goal instance.
    std::optional<Category> destination;
    switch (task.type) {
        case TaskType::PlaceAllXInY: destination = task.params.y; break;
        case TaskType::CleanX:       destination = Category::Sink; break;
        case TaskType::BoilX:        destination = Category::Pot; break;
        case TaskType::MakeCoffee:   destination = Category::CoffeeMachine; break;
        case TaskType::SliceX:       break;
    }

    auto navigate = [&](Category cat, bool exclude_done) {
        auto cells = target_cells(w, cat, exclude_done ? destination : std::nullopt);
        if (cells.empty()) raise("NoPath", "no instance of " + category_id(cat));
        auto path = navigate_to_face(w, cells);
        if (!path) raise("NoPath", "unreachable " + category_id(cat));
        for (const auto& a : *path) run(w, result.actions, a);
    };

    for (const SubGoal& sg : task.gold_subgoals) {
        int span_start = static_cast<int>(result.actions.size());
        bool movable_target = is_movable(sg.noun1);
        switch (sg.verb) {
            case SubGoalVerb::Find:
                navigate(sg.noun1, movable_target);
                break;
            case SubGoalVerb::Pickup: {
                navigate(sg.noun1, movable_target);
                // Open a closed host first if the item sits inside one.
                Cell ahead = facing_cell(w);
                const ObjectInstance* item = nullptr;
                for (const auto* o : w.objects_at(ahead))
                    if (o->category == sg.noun1 && (!item || o->id < item->id)) item = o;
                if (item && item->container) {
                    const ObjectInstance* host = w.object_by_id(*item->container);
                    if (host && is_openable(host->category) && !host->has_flag(Flag::Open))
                        run(w, result.actions, {ActionKind::Open, host->category});
                }
                run(w, result.actions, {ActionKind::Pickup, sg.noun1});
                break;
            }
            case SubGoalVerb::Place: {
                Category host = sg.noun2.value_or(sg.noun1);
                navigate(host, false);
                Cell ahead = facing_cell(w);
                const ObjectInstance* hobj = w.find_visible(ahead, host);
                if (!hobj) {
                    // Closed hosts are invisible; look them up directly.
                    for (const auto* o : w.objects_at(ahead))
                        if (o->category == host) hobj = o;
                }
                if (hobj && is_openable(hobj->category) && !hobj->has_flag(Flag::Open))
                    run(w, result.actions, {ActionKind::Open, host});
                run(w, result.actions, {ActionKind::Place, host});
                break;
            }
            case SubGoalVerb::Slice:
                navigate(sg.noun1, sg.verb == SubGoalVerb::Slice ? false : movable_target);
                run(w, result.actions, {ActionKind::Slice, sg.noun1});
                break;
            case SubGoalVerb::Open:
                navigate(sg.noun1, sg.verb == SubGoalVerb::Slice ? false : movable_target);
                run(w, result.actions, {ActionKind::Open, sg.noun1});
                break;
            case SubGoalVerb::Close:
                navigate(sg.noun1, sg.verb == SubGoalVerb::Slice ? false : movable_target);
                run(w, result.actions, {ActionKind::Close, sg.noun1});
                break;
            case SubGoalVerb::ToggleOn:
                navigate(sg.noun1, sg.verb == SubGoalVerb::Slice ? false : movable_target);
                run(w, result.actions, {ActionKind::ToggleOn, sg.noun1});
                break;
            case SubGoalVerb::Boil:
                raise("NoPath", "boil sub-goals are compiled away");
        }
        if (static_cast<int>(result.actions.size()) > span_start)
            result.subgoal_spans.emplace_back(span_start, sg);
    }

    int stop_at = static_cast<int>(result.actions.size());
    result.actions.push_back({ActionKind::Stop, std::nullopt});
    if (result.subgoal_spans.empty() && !task.gold_subgoals.empty())
        result.subgoal_spans.emplace_back(0, task.gold_subgoals.front());
    // The Stop step belongs to the final span.
    (void)stop_at;

    if (!all_done()) raise("ExpertActionFailed", "expert finished without meeting goals");
    return result;
}

}  // namespace elba
