#include "elba/dataset.hpp"

#include <algorithm>

#include "elba/error.hpp"
#include "elba/expert.hpp"

namespace elba {

namespace {

std::map<Category, int> base_counts(int layout_index) {
    std::map<Category, int> counts = {
        {Category::Knife, 1},    {Category::Potato, 2},       {Category::Tomato, 1},
        {Category::Mug, 1},      {Category::Cup, 1},          {Category::Plate, 1},
        {Category::SaltShaker, 2}, {Category::PepperShaker, 1},
        {Category::Pot, 1},      {Category::Stove, 1},        {Category::CoffeeMachine, 1},
        {Category::Sink, 1},     {Category::Cabinet, 1},      {Category::Fridge, 1},
        {Category::Table, 1},    {Category::Countertop, 1},
    };
    // A little per-layout furniture variety.
    if (layout_index % 2 == 0) counts[Category::Shelf] = 1;
    if (layout_index % 3 == 0) counts[Category::Desk] = 1;
    return counts;
}

// Task assignment cycles the five types; parameters drawn from a per-episode
// stream over categories the layout guarantees.
std::pair<TaskType, TaskParams> choose_task(int episode_index, Rng& rng) {
    TaskType type = static_cast<TaskType>(episode_index % kTaskTypeCount);
    TaskParams params;
    switch (type) {
        case TaskType::PlaceAllXInY: {
            const Category xs[] = {Category::SaltShaker, Category::Mug, Category::Plate,
                                   Category::PepperShaker};
            const Category ys[] = {Category::Cabinet, Category::Fridge};
            params.x = xs[rng.below(4)];
            params.y = ys[rng.below(2)];
            break;
        }
        case TaskType::SliceX:
            params.x = rng.chance(0.5) ? Category::Potato : Category::Tomato;
            break;
        case TaskType::BoilX:
            params.x = rng.chance(0.5) ? Category::Potato : Category::Tomato;
            break;
        case TaskType::MakeCoffee:
            break;
        case TaskType::CleanX: {
            const Category xs[] = {Category::Plate, Category::Cup, Category::Tomato,
                                   Category::Mug};
            params.x = xs[rng.below(4)];
            break;
        }
    }
    return {type, params};
}

}  // namespace

std::vector<RoomSpec> build_layouts(const RunConfig& cfg) {
    int n = static_cast<int>(cfg.geti("gen.n_layouts"));
    int min_size = static_cast<int>(cfg.geti("gen.min_size"));
    int max_size = static_cast<int>(cfg.geti("gen.max_size"));
    if (n < 4) raise("TooFewRooms", "gen.n_layouts must be >= 4");
    if (min_size < 5 || max_size < min_size) raise("BadConfig", "bad gen size range");

    std::vector<RoomSpec> layouts;
    int span = max_size - min_size + 1;
    for (int i = 0; i < n; ++i) {
        RoomSpec spec;
        spec.width = min_size + (i % span);
        spec.height = min_size + ((i / span) % span);
        spec.layout_seed = Rng::mix(cfg.seed(), Rng::hash_name("layout/" + std::to_string(i)));
        spec.counts = base_counts(i);
        layouts.push_back(std::move(spec));
    }
    return layouts;
}

std::vector<Episode> build_episodes(const RunConfig& cfg) {
    auto layouts = build_layouts(cfg);
    int per_layout = static_cast<int>(cfg.geti("gen.episodes_per_layout"));
    double hint_rate = cfg.getd("gen.hint_rate");
    double eval_hint_rate = cfg.getd("gen.eval_hint_rate");
    uint64_t seed = cfg.seed();

    std::vector<Episode> episodes;
    for (size_t li = 0; li < layouts.size(); ++li) {
        for (int i = 0; i < per_layout; ++i) {
            // A handful of retries tolerates rare unplaceable/unreachable draws.
            for (int attempt = 0; attempt < 8; ++attempt) {
                uint64_t ep_seed = Rng::mix(
                    seed, Rng::hash_name("episode/" + std::to_string(li) + "/" +
                                         std::to_string(i) + "/" + std::to_string(attempt)));
                try {
                    GridWorld world = generate_world(ep_seed, layouts[li]);
                    Rng task_rng = Rng(ep_seed).substream("task");
                    auto [type, params] =
                        choose_task(static_cast<int>(episodes.size()) + attempt, task_rng);
                    Episode ep;
                    ep.seed = ep_seed;
                    ep.room_spec = layouts[li];
                    ep.task = compile_task(type, params, world);
                    ExpertResult expert = expert_rollout(world, ep.task);
                    ep.expert_actions = std::move(expert.actions);
                    ep.subgoal_spans = std::move(expert.subgoal_spans);
                    ep.dialog = synthesize_dialog(ep.task, ep.subgoal_spans, ep_seed, hint_rate);
                    episodes.push_back(std::move(ep));
                    break;
                } catch (const Error& e) {
                    if (e.code() == "NoPath" || e.code() == "SpecInfeasible" ||
                        e.code() == "ExpertActionFailed" || e.code() == "MissingCategory") {
                        if (attempt == 7) throw;
                        continue;
                    }
                    throw;
                }
            }
        }
    }

    std::array<double, 4> ratios = {cfg.getd("gen.ratio_train"), cfg.getd("gen.ratio_valid"),
                                    cfg.getd("gen.ratio_test_seen"),
                                    cfg.getd("gen.ratio_test_unseen")};
    make_splits(episodes, seed, ratios);

    // Split-dependent hint rate: evaluation dialogs are re-synthesized with
    // gen.eval_hint_rate (0 keeps eval dialogs instruction-only).
    if (eval_hint_rate != hint_rate) {
        for (auto& ep : episodes) {
            if (ep.split == Split::Train) continue;
            ep.dialog = synthesize_dialog(ep.task, ep.subgoal_spans, ep.seed, eval_hint_rate);
        }
    }
    return episodes;
}

std::vector<Episode> episodes_of_split(const std::vector<Episode>& all, Split split) {
    std::vector<Episode> out;
    for (const auto& ep : all)
        if (ep.split == split) out.push_back(ep);
    return out;
}

}  // namespace elba
