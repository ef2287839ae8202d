#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <queue>
#include <set>

#include "elba/dataset.hpp"
#include "elba/dialog.hpp"
#include "elba/episode.hpp"
#include "elba/error.hpp"
#include "elba/expert.hpp"
#include "elba/task.hpp"
#include "elba/worldgen.hpp"

using namespace elba;

namespace {

RoomSpec small_spec() {
    RoomSpec spec;
    spec.width = 7;
    spec.height = 7;
    spec.layout_seed = 11;
    spec.counts = {{Category::Potato, 1}, {Category::Knife, 1}, {Category::Countertop, 1}};
    return spec;
}

RoomSpec kitchen_spec() {
    RoomSpec spec;
    spec.width = 8;
    spec.height = 8;
    spec.layout_seed = 23;
    spec.counts = {{Category::Potato, 1},    {Category::Knife, 1},  {Category::SaltShaker, 2},
                   {Category::Cabinet, 1},   {Category::Stove, 1},  {Category::Pot, 1},
                   {Category::Mug, 1},       {Category::Sink, 1},   {Category::CoffeeMachine, 1},
                   {Category::Countertop, 1}};
    return spec;
}

std::string world_fingerprint(const GridWorld& w) {
    std::string s = std::to_string(w.width) + "x" + std::to_string(w.height) + "|";
    for (auto t : w.cells) s += t == Terrain::Wall ? '#' : '.';
    s += "|" + std::to_string(w.agent_pos.x) + "," + std::to_string(w.agent_pos.y) + "," +
         std::to_string(static_cast<int>(w.agent_facing));
    for (const auto& o : w.objects) {
        s += "|" + std::to_string(o.id) + ":" + category_id(o.category) + ":" +
             std::to_string(static_cast<int>(o.color)) + ":" +
             std::to_string(static_cast<int>(o.material)) + ":" + std::to_string(o.position.x) +
             "," + std::to_string(o.position.y) + ":" +
             (o.container ? std::to_string(*o.container) : "-") + ":" +
             std::to_string(static_cast<int>(o.state_flags));
    }
    if (w.held_object) s += "|held=" + std::to_string(*w.held_object);
    return s;
}

// Exhaustive shortest-plan search over full world states (BFS over the step
// function itself). Only viable on tiny instances; used as the independent
// oracle for expert plan length.
int exhaustive_shortest_plan(const GridWorld& start, const Task& task, int limit) {
    std::vector<Action> moves;
    for (ActionKind k :
         {ActionKind::Forward, ActionKind::TurnLeft, ActionKind::TurnRight}) {
        moves.push_back({k, std::nullopt});
    }
    for (Category c : all_categories()) {
        moves.push_back({ActionKind::Pickup, c});
        moves.push_back({ActionKind::Place, c});
        moves.push_back({ActionKind::Slice, c});
        moves.push_back({ActionKind::Open, c});
        moves.push_back({ActionKind::ToggleOn, c});
    }

    std::set<std::string> seen;
    std::queue<std::pair<GridWorld, int>> frontier;
    frontier.push({start, 0});
    seen.insert(world_fingerprint(start));
    while (!frontier.empty()) {
        auto [w, depth] = frontier.front();
        frontier.pop();
        auto checks = check_goal_conditions(w, task);
        bool done = true;
        for (bool b : checks) done = done && b;
        if (done) return depth;
        if (depth >= limit) continue;
        for (const auto& a : moves) {
            auto [next, outcome] = step(w, a);
            if (outcome != StepOutcome::Ok) continue;
            std::string fp = world_fingerprint(next);
            if (seen.insert(fp).second) frontier.push({next, depth + 1});
        }
    }
    return -1;
}

GridWorld empty_room(int w, int h) {
    GridWorld world;
    world.width = w;
    world.height = h;
    world.cells.assign(static_cast<size_t>(w) * h, Terrain::Floor);
    for (int x = 0; x < w; ++x) {
        world.set_terrain({x, 0}, Terrain::Wall);
        world.set_terrain({x, h - 1}, Terrain::Wall);
    }
    for (int y = 0; y < h; ++y) {
        world.set_terrain({0, y}, Terrain::Wall);
        world.set_terrain({w - 1, y}, Terrain::Wall);
    }
    world.agent_pos = {1, 1};
    world.agent_facing = Facing::East;
    return world;
}

ObjectInstance make_object(int id, Category cat, Cell pos) {
    ObjectInstance o;
    o.id = id;
    o.category = cat;
    o.color = color_pool(cat)[0];
    o.material = material_pool(cat)[0];
    o.position = pos;
    return o;
}

}  // namespace

TEST_CASE("generate_world places exactly the requested objects") {
    GridWorld w = generate_world(1, small_spec());
    CHECK(w.objects.size() == 3);
    std::multiset<Category> cats;
    for (const auto& o : w.objects) cats.insert(o.category);
    CHECK(cats.count(Category::Potato) == 1);
    CHECK(cats.count(Category::Knife) == 1);
    CHECK(cats.count(Category::Countertop) == 1);
    std::string why;
    CHECK(w.validate(&why));
}

TEST_CASE("generate_world is bit-identical for a fixed seed and spec") {
    GridWorld a = generate_world(42, kitchen_spec());
    GridWorld b = generate_world(42, kitchen_spec());
    CHECK(world_fingerprint(a) == world_fingerprint(b));
}

TEST_CASE("generate_world rejects oversized object lists") {
    RoomSpec spec;
    spec.width = 5;
    spec.height = 5;
    spec.layout_seed = 3;
    spec.counts = {{Category::Potato, 100}};
    CHECK_THROWS_WITH_AS(generate_world(1, spec), doctest::Contains("SpecInfeasible"), Error);
}

TEST_CASE("compile_task: one InContainer condition per shaker instance") {
    GridWorld w = generate_world(5, kitchen_spec());
    Task task = compile_task(TaskType::PlaceAllXInY,
                             {Category::SaltShaker, Category::Cabinet}, w);
    CHECK(task.goal_conditions.size() == 2);
    for (const auto& g : task.goal_conditions) {
        CHECK(g.predicate == Predicate::InContainer);
        CHECK(g.container_arg == Category::Cabinet);
        CHECK(std::holds_alternative<int>(g.subject));
    }
}

TEST_CASE("compile_task: slice chain is knife then target") {
    GridWorld w = generate_world(7, kitchen_spec());
    Task task = compile_task(TaskType::SliceX, {Category::Potato, std::nullopt}, w);
    REQUIRE(task.goal_conditions.size() == 1);
    CHECK(task.goal_conditions[0].predicate == Predicate::HasFlag);
    CHECK(task.goal_conditions[0].flag_arg == Flag::Sliced);
    std::vector<std::string> rendered;
    for (const auto& sg : task.gold_subgoals) rendered.push_back(sg.render());
    CHECK(rendered == std::vector<std::string>{"find knife", "pickup knife", "find potato",
                                               "slice potato"});
    // The expert actually achieves the goal with this chain.
    ExpertResult ex = expert_rollout(w, task);
    GridWorld end = w;
    for (const auto& a : ex.actions) end = step(end, a).first;
    auto checks = check_goal_conditions(end, task);
    for (bool b : checks) CHECK(b);
}

TEST_CASE("compile_task: boil without a pot is MissingCategory") {
    GridWorld w = generate_world(1, small_spec());
    CHECK_THROWS_WITH_AS(compile_task(TaskType::BoilX, {Category::Potato, std::nullopt}, w),
                         doctest::Contains("MissingCategory"), Error);
}

TEST_CASE("step: turning right from north faces east, position fixed") {
    GridWorld w = empty_room(5, 5);
    w.agent_facing = Facing::North;
    auto [next, outcome] = step(w, {ActionKind::TurnRight, std::nullopt});
    CHECK(outcome == StepOutcome::Ok);
    CHECK(next.agent_facing == Facing::East);
    CHECK(next.agent_pos == w.agent_pos);
}

TEST_CASE("step: pickup with a full hand is InvalidTarget and world unchanged") {
    GridWorld w = empty_room(5, 5);
    w.objects.push_back(make_object(1, Category::Mug, {2, 1}));
    w.objects.push_back(make_object(2, Category::Potato, {2, 1}));
    w.held_object = 1;
    auto [next, outcome] = step(w, {ActionKind::Pickup, Category::Potato});
    CHECK(outcome == StepOutcome::InvalidTarget);
    CHECK(world_fingerprint(next) == world_fingerprint(w));
}

TEST_CASE("step: forward into a wall is Blocked and world unchanged") {
    GridWorld w = empty_room(5, 5);
    w.agent_pos = {1, 1};
    w.agent_facing = Facing::West;
    auto [next, outcome] = step(w, {ActionKind::Forward, std::nullopt});
    CHECK(outcome == StepOutcome::Blocked);
    CHECK(world_fingerprint(next) == world_fingerprint(w));
}

TEST_CASE("check_goal_conditions tracks per-instance progress") {
    GridWorld w = empty_room(7, 7);
    w.objects.push_back(make_object(1, Category::Cabinet, {4, 1}));
    w.objects[0].set_flag(Flag::Open);
    w.objects.push_back(make_object(2, Category::SaltShaker, {2, 1}));
    w.objects.push_back(make_object(3, Category::SaltShaker, {2, 2}));
    Task task = compile_task(TaskType::PlaceAllXInY,
                             {Category::SaltShaker, Category::Cabinet}, w);

    auto checks = check_goal_conditions(w, task);
    CHECK(checks == std::vector<bool>{false, false});

    // Script one shaker into the cabinet through step() only.
    GridWorld cur = w;
    cur.agent_pos = {1, 1};
    cur.agent_facing = Facing::East;
    auto run = [&](const Action& a) {
        auto [next, outcome] = step(cur, a);
        REQUIRE(outcome == StepOutcome::Ok);
        cur = next;
    };
    run({ActionKind::Pickup, Category::SaltShaker});
    run({ActionKind::Forward, std::nullopt});
    run({ActionKind::Forward, std::nullopt});
    run({ActionKind::Place, Category::Cabinet});
    checks = check_goal_conditions(cur, task);
    int met = 0;
    for (bool b : checks) met += b ? 1 : 0;
    CHECK(met == 1);
}

TEST_CASE("expert_rollout: satisfied task stops immediately") {
    GridWorld w = empty_room(6, 6);
    w.objects.push_back(make_object(1, Category::Knife, {2, 1}));
    w.objects.push_back(make_object(2, Category::Potato, {3, 1}));
    w.objects[1].set_flag(Flag::Sliced);
    Task task = compile_task(TaskType::SliceX, {Category::Potato, std::nullopt}, w);
    ExpertResult ex = expert_rollout(w, task);
    REQUIRE(ex.actions.size() == 1);
    CHECK(ex.actions[0].kind == ActionKind::Stop);
    CHECK(ex.subgoal_spans.size() == 1);
}

TEST_CASE("expert_rollout matches the exhaustive planner on a 5x5 slice task") {
    GridWorld w = empty_room(5, 5);
    w.agent_pos = {1, 2};
    w.agent_facing = Facing::East;
    w.objects.push_back(make_object(1, Category::Knife, {2, 1}));
    w.objects.push_back(make_object(2, Category::Potato, {3, 3}));
    Task task = compile_task(TaskType::SliceX, {Category::Potato, std::nullopt}, w);

    ExpertResult ex = expert_rollout(w, task);
    GridWorld end = w;
    for (const auto& a : ex.actions) {
        auto [next, outcome] = step(end, a);
        CHECK(outcome == StepOutcome::Ok);
        end = next;
    }
    auto checks = check_goal_conditions(end, task);
    for (bool b : checks) CHECK(b);

    int oracle = exhaustive_shortest_plan(w, task, 24);
    REQUIRE(oracle > 0);
    // Expert navigates per sub-goal (greedy), so allow a small rotation slack
    // over the globally optimal plan; the Stop action is not counted.
    int expert_moves = static_cast<int>(ex.actions.size()) - 1;
    CHECK(expert_moves >= oracle);
    CHECK(expert_moves <= oracle + 4);
}

TEST_CASE("expert_rollout: walled-off target raises NoPath") {
    GridWorld w = empty_room(7, 7);
    // Box in the potato at (5,5) with walls.
    w.set_terrain({4, 4}, Terrain::Wall);
    w.set_terrain({5, 4}, Terrain::Wall);
    w.set_terrain({4, 5}, Terrain::Wall);
    w.objects.push_back(make_object(1, Category::Knife, {2, 1}));
    w.objects.push_back(make_object(2, Category::Potato, {5, 5}));
    Task task = compile_task(TaskType::SliceX, {Category::Potato, std::nullopt}, w);
    CHECK_THROWS_WITH_AS(expert_rollout(w, task), doctest::Contains("NoPath"), Error);
}

TEST_CASE("synthesize_dialog: instruction phrase and hint controls") {
    GridWorld w = generate_world(9, kitchen_spec());
    Task task = compile_task(TaskType::PlaceAllXInY,
                             {Category::SaltShaker, Category::Cabinet}, w);
    ExpertResult ex = expert_rollout(w, task);

    auto no_hints = synthesize_dialog(task, ex.subgoal_spans, 7, 0.0);
    REQUIRE(no_hints.size() == 1);
    CHECK(no_hints[0].text == "please put all salt shakers in one cabinet");
    CHECK(no_hints[0].step == 0);

    auto a = synthesize_dialog(task, ex.subgoal_spans, 7, 0.5);
    auto b = synthesize_dialog(task, ex.subgoal_spans, 7, 0.5);
    CHECK(a == b);
}

TEST_CASE("oracle answers: appearance readback and absent categories") {
    GridWorld w = empty_room(6, 6);
    auto potato = make_object(1, Category::Potato, {3, 1});
    potato.color = Color::Brown;
    potato.material = Material::Organic;
    w.objects.push_back(potato);

    AppearanceFacts facts = oracle_appearance(w, Category::Potato);
    CHECK(facts.color == Color::Brown);
    CHECK(facts.material == Material::Organic);

    CHECK_THROWS_WITH_AS(oracle_location(w, Category::Fridge),
                         doctest::Contains("NoSuchObject"), Error);
}

TEST_CASE("oracle direction: facing the path already means no turn") {
    GridWorld w = empty_room(6, 6);
    w.agent_pos = {1, 1};
    w.agent_facing = Facing::East;
    w.objects.push_back(make_object(1, Category::Mug, {4, 1}));
    CHECK(oracle_direction(w, Category::Mug) == TurnHint::None);
    w.agent_facing = Facing::North;  // wall ahead, must turn right
    CHECK(oracle_direction(w, Category::Mug) == TurnHint::Right);
}

TEST_CASE("make_splits: unseen layouts are disjoint and tagging is deterministic") {
    RunConfig cfg = RunConfig::defaults();
    cfg.set("gen.n_layouts", "10");
    cfg.set("gen.episodes_per_layout", "4");
    cfg.set("gen.hint_rate", "0.0");
    cfg.set("gen.eval_hint_rate", "0.0");
    auto episodes = build_episodes(cfg);
    REQUIRE(episodes.size() == 40);

    std::set<uint64_t> unseen_layouts, other_layouts;
    int unseen_count = 0;
    for (const auto& ep : episodes) {
        if (ep.split == Split::TestUnseen) {
            unseen_layouts.insert(ep.room_spec.identity_hash());
            ++unseen_count;
        } else {
            other_layouts.insert(ep.room_spec.identity_hash());
        }
    }
    CHECK(unseen_count > 0);
    for (uint64_t h : unseen_layouts) CHECK(other_layouts.count(h) == 0);

    auto again = build_episodes(cfg);
    for (size_t i = 0; i < episodes.size(); ++i)
        CHECK(episodes[i].split == again[i].split);
}

TEST_CASE("make_splits: fewer than four layouts is TooFewRooms") {
    RoomSpec spec_a = small_spec();
    RoomSpec spec_b = small_spec();
    spec_b.layout_seed = 99;
    std::vector<Episode> eps;
    for (int i = 0; i < 6; ++i) {
        Episode ep;
        ep.room_spec = i % 2 == 0 ? spec_a : spec_b;
        eps.push_back(ep);
    }
    std::array<double, 4> ratios = {6, 1, 2, 1};
    CHECK_THROWS_WITH_AS(make_splits(eps, 1, ratios), doctest::Contains("TooFewRooms"), Error);
}

TEST_CASE("replay determinism and expert soundness over generated episodes") {
    RunConfig cfg = RunConfig::defaults();
    cfg.set("gen.n_layouts", "4");
    cfg.set("gen.episodes_per_layout", "6");
    auto episodes = build_episodes(cfg);
    REQUIRE(!episodes.empty());
    for (const auto& ep : episodes) {
        GridWorld a = ep.world0();
        GridWorld b = ep.world0();
        for (const auto& act : ep.expert_actions) {
            a = step(a, act).first;
            b = step(b, act).first;
        }
        CHECK(world_fingerprint(a) == world_fingerprint(b));
        auto checks = check_goal_conditions(a, ep.task);
        for (bool met : checks) CHECK(met);
        // Every step index maps to some active sub-goal.
        REQUIRE(!ep.subgoal_spans.empty());
        CHECK(ep.subgoal_spans.front().first == 0);
    }
}

TEST_CASE("transition locality: a step touches the agent and at most one object") {
    GridWorld w = generate_world(77, kitchen_spec());
    Rng rng(123);
    std::vector<Action> pool;
    for (ActionKind k : {ActionKind::Forward, ActionKind::TurnLeft, ActionKind::TurnRight,
                         ActionKind::PanLeft, ActionKind::PanRight})
        pool.push_back({k, std::nullopt});
    for (Category c : {Category::Potato, Category::Knife, Category::Cabinet, Category::Stove})
        for (ActionKind k : {ActionKind::Pickup, ActionKind::Place, ActionKind::Slice,
                             ActionKind::Open, ActionKind::ToggleOn})
            pool.push_back({k, c});

    GridWorld cur = w;
    for (int i = 0; i < 300; ++i) {
        Action a = pool[rng.below(pool.size())];
        auto [next, outcome] = step(cur, a);
        if (outcome != StepOutcome::Ok) {
            CHECK(world_fingerprint(next) == world_fingerprint(cur));
            continue;
        }
        int changed = 0;
        REQUIRE(next.objects.size() == cur.objects.size());
        for (size_t oi = 0; oi < cur.objects.size(); ++oi) {
            const auto& before = cur.objects[oi];
            const auto& after = next.objects[oi];
            bool same = before.position == after.position &&
                        before.container == after.container &&
                        before.state_flags == after.state_flags;
            if (!same) ++changed;
        }
        CHECK(changed <= 1);
        cur = next;
    }
}

TEST_CASE("episode records round-trip through the line format") {
    RunConfig cfg = RunConfig::defaults();
    cfg.set("gen.n_layouts", "4");
    cfg.set("gen.episodes_per_layout", "2");
    auto episodes = build_episodes(cfg);
    for (const auto& ep : episodes) {
        std::string line = ep.to_json_line();
        Episode back = Episode::from_json_line(line);
        CHECK(back.to_json_line() == line);
        CHECK(world_fingerprint(back.world0()) == world_fingerprint(ep.world0()));
    }
}
