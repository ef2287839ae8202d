#include "elba/task.hpp"

#include <algorithm>
#include <array>

#include "elba/error.hpp"

namespace elba {

namespace {

const std::array<std::string, kTaskTypeCount> kTaskIds = {
    "PlaceAllXInY", "SliceX", "BoilX", "MakeCoffee", "CleanX"};

const std::array<std::string, 8> kVerbWords = {
    "find", "pickup", "place", "slice", "boil", "open", "close", "toggle on"};

bool in_container_chain(const GridWorld& w, const ObjectInstance& obj, Category container_cat) {
    std::optional<int> host = obj.container;
    while (host) {
        const ObjectInstance* h = w.object_by_id(*host);
        if (!h) return false;
        if (h->category == container_cat) return true;
        host = h->container;
    }
    return false;
}

bool subject_matches(const Subject& s, const ObjectInstance& o) {
    if (std::holds_alternative<Category>(s)) return o.category == std::get<Category>(s);
    return o.id == std::get<int>(s);
}

int count_instances(const GridWorld& w, Category c) {
    int n = 0;
    for (const auto& o : w.objects)
        if (o.category == c) ++n;
    return n;
}

void require_category(const GridWorld& w, Category c) {
    if (count_instances(w, c) == 0)
        raise("MissingCategory", "world has no " + category_id(c));
}

}  // namespace

const std::string& task_type_id(TaskType t) { return kTaskIds[static_cast<size_t>(t)]; }

std::optional<TaskType> task_type_from_id(std::string_view id) {
    for (int i = 0; i < kTaskTypeCount; ++i)
        if (kTaskIds[i] == id) return static_cast<TaskType>(i);
    return std::nullopt;
}

bool GoalCondition::holds(const GridWorld& world) const {
    switch (predicate) {
        case Predicate::InContainer:
            for (const auto& o : world.objects) {
                if (!subject_matches(subject, o)) continue;
                if (world.held_object && o.id == *world.held_object) continue;
                if (container_arg && in_container_chain(world, o, *container_arg)) return true;
            }
            return false;
        case Predicate::HasFlag:
            for (const auto& o : world.objects)
                if (subject_matches(subject, o) && flag_arg && o.has_flag(*flag_arg)) return true;
            return false;
        case Predicate::Holding:
            if (!world.held_object) return false;
            return subject_matches(subject, *world.object_by_id(*world.held_object));
    }
    return false;
}

std::string SubGoal::render() const {
    std::string s = kVerbWords[static_cast<size_t>(verb)];
    s += ' ';
    s += category_word(noun1);
    if (noun2) {
        s += ' ';
        s += container_preposition(*noun2);
        s += ' ';
        s += category_word(*noun2);
    }
    return s;
}

std::optional<SubGoal> SubGoal::parse(const std::string& phrase) {
    auto words = tokenize_words(phrase);
    if (words.empty()) return std::nullopt;
    SubGoal sg;
    size_t pos = 0;
    if (words[0] == "toggle" && words.size() > 1 && words[1] == "on") {
        sg.verb = SubGoalVerb::ToggleOn;
        pos = 2;
    } else {
        bool found = false;
        for (int v = 0; v < 8; ++v) {
            if (kVerbWords[v] == words[0]) {
                sg.verb = static_cast<SubGoalVerb>(v);
                found = true;
                break;
            }
        }
        if (!found) return std::nullopt;
        pos = 1;
    }
    auto cats = extract_categories({words.begin() + pos, words.end()});
    if (cats.empty()) return std::nullopt;
    sg.noun1 = cats[0];
    if (cats.size() > 1) sg.noun2 = cats[1];
    return sg;
}

std::string Task::phrase() const {
    switch (type) {
        case TaskType::PlaceAllXInY:
            return "put all " + category_plural(*params.x) + " in one " + category_word(*params.y);
        case TaskType::SliceX:
            return "slice a " + category_word(*params.x);
        case TaskType::BoilX:
            return "boil a " + category_word(*params.x);
        case TaskType::MakeCoffee:
            return "make a coffee";
        case TaskType::CleanX:
            return "clean a " + category_word(*params.x);
    }
    return {};
}

Task compile_task(TaskType type, const TaskParams& params, const GridWorld& world) {
    Task task;
    task.type = type;
    task.params = params;
    auto& goals = task.goal_conditions;
    auto& subs = task.gold_subgoals;

    auto find_pickup = [&](Category c) {
        subs.push_back({SubGoalVerb::Find, c, std::nullopt});
        subs.push_back({SubGoalVerb::Pickup, c, std::nullopt});
    };
    auto find_place = [&](Category item, Category host, bool open_first) {
        subs.push_back({SubGoalVerb::Find, host, std::nullopt});
        if (open_first) subs.push_back({SubGoalVerb::Open, host, std::nullopt});
        subs.push_back({SubGoalVerb::Place, item, host});
    };

    switch (type) {
        case TaskType::PlaceAllXInY: {
            if (!params.x || !params.y) raise("MissingCategory", "PlaceAllXInY needs x and y");
            require_category(world, *params.x);
            require_category(world, *params.y);
            bool openable = is_openable(*params.y);
            int n = count_instances(world, *params.x);
            for (int i = 0; i < n; ++i) {
                GoalCondition g;
                g.predicate = Predicate::InContainer;
                // One condition per concrete instance.
                int seen = 0;
                for (const auto& o : world.objects) {
                    if (o.category == *params.x && seen++ == i) g.subject = o.id;
                }
                g.container_arg = *params.y;
                goals.push_back(g);
                find_pickup(*params.x);
                find_place(*params.x, *params.y, openable && i == 0);
            }
            break;
        }
        case TaskType::SliceX: {
            if (!params.x || !is_sliceable(*params.x))
                raise("MissingCategory", "SliceX needs a sliceable category");
            require_category(world, *params.x);
            require_category(world, Category::Knife);
            goals.push_back({Predicate::HasFlag, *params.x, std::nullopt, Flag::Sliced});
            find_pickup(Category::Knife);
            subs.push_back({SubGoalVerb::Find, *params.x, std::nullopt});
            subs.push_back({SubGoalVerb::Slice, *params.x, std::nullopt});
            break;
        }
        case TaskType::BoilX: {
            if (!params.x) raise("MissingCategory", "BoilX needs x");
            require_category(world, *params.x);
            require_category(world, Category::Pot);
            require_category(world, Category::Stove);
            goals.push_back({Predicate::HasFlag, *params.x, std::nullopt, Flag::Boiled});
            subs.push_back({SubGoalVerb::Find, Category::Stove, std::nullopt});
            subs.push_back({SubGoalVerb::ToggleOn, Category::Stove, std::nullopt});
            find_pickup(*params.x);
            find_place(*params.x, Category::Pot, false);
            break;
        }
        case TaskType::MakeCoffee: {
            require_category(world, Category::Mug);
            require_category(world, Category::CoffeeMachine);
            goals.push_back({Predicate::HasFlag, Category::Mug, std::nullopt, Flag::Cooked});
            subs.push_back({SubGoalVerb::Find, Category::CoffeeMachine, std::nullopt});
            subs.push_back({SubGoalVerb::ToggleOn, Category::CoffeeMachine, std::nullopt});
            find_pickup(Category::Mug);
            find_place(Category::Mug, Category::CoffeeMachine, false);
            break;
        }
        case TaskType::CleanX: {
            if (!params.x) raise("MissingCategory", "CleanX needs x");
            require_category(world, *params.x);
            require_category(world, Category::Sink);
            goals.push_back({Predicate::InContainer, *params.x, Category::Sink, std::nullopt});
            goals.push_back({Predicate::HasFlag, Category::Sink, std::nullopt, Flag::ToggledOn});
            find_pickup(*params.x);
            find_place(*params.x, Category::Sink, false);
            subs.push_back({SubGoalVerb::ToggleOn, Category::Sink, std::nullopt});
            break;
        }
    }
    if (goals.empty()) raise("MissingCategory", "task compiled to zero goal conditions");
    return task;
}

std::vector<bool> check_goal_conditions(const GridWorld& world, const Task& task) {
    std::vector<bool> out;
    out.reserve(task.goal_conditions.size());
    for (const auto& g : task.goal_conditions) out.push_back(g.holds(world));
    return out;
}

}  // namespace elba
