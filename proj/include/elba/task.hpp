#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "elba/world.hpp"

namespace elba {

enum class TaskType : int { PlaceAllXInY, SliceX, BoilX, MakeCoffee, CleanX };
constexpr int kTaskTypeCount = 5;
const std::string& task_type_id(TaskType t);
std::optional<TaskType> task_type_from_id(std::string_view id);

enum class Predicate : int { InContainer, HasFlag, Holding };

// Subject is a category or a concrete object id.
using Subject = std::variant<Category, int>;

struct GoalCondition {
    Predicate predicate = Predicate::InContainer;
    Subject subject = Category::Potato;
    std::optional<Category> container_arg;  // InContainer target category
    std::optional<Flag> flag_arg;           // HasFlag argument

    bool holds(const GridWorld& world) const;
};

enum class SubGoalVerb : int { Find, Pickup, Place, Slice, Boil, Open, Close, ToggleOn };

struct SubGoal {
    SubGoalVerb verb = SubGoalVerb::Find;
    Category noun1 = Category::Potato;
    std::optional<Category> noun2;

    // Canonical lowercase phrase ("place potato on desk").
    std::string render() const;
    static std::optional<SubGoal> parse(const std::string& phrase);
    bool operator==(const SubGoal&) const = default;
};

struct TaskParams {
    std::optional<Category> x;
    std::optional<Category> y;
};

struct Task {
    TaskType type = TaskType::SliceX;
    TaskParams params;
    std::vector<GoalCondition> goal_conditions;
    std::vector<SubGoal> gold_subgoals;

    // Templated instruction phrase ("put all salt shakers in one cabinet").
    std::string phrase() const;
};

Task compile_task(TaskType type, const TaskParams& params, const GridWorld& world);

std::vector<bool> check_goal_conditions(const GridWorld& world, const Task& task);

}  // namespace elba
