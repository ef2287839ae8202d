#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "elba/dialog.hpp"
#include "elba/expert.hpp"
#include "elba/task.hpp"
#include "elba/worldgen.hpp"

namespace elba {

enum class Split : int { Train, Valid, TestSeen, TestUnseen };
constexpr int kSplitCount = 4;
const std::string& split_tag(Split s);
std::optional<Split> split_from_tag(std::string_view tag);

struct Episode {
    uint64_t seed = 0;
    RoomSpec room_spec;
    Task task;
    std::vector<Utterance> dialog;
    std::vector<Action> expert_actions;
    std::vector<std::pair<int, SubGoal>> subgoal_spans;
    Split split = Split::Train;

    GridWorld world0() const { return generate_world(seed, room_spec); }
    // Sub-goal active at 1-based step t.
    const SubGoal& subgoal_at(int t) const;

    std::string to_json_line() const;
    static Episode from_json_line(const std::string& line);
};

// Episode-level splitting: a slice of room layouts is reserved for
// test_unseen (all their episodes go there); remaining episodes are
// shuffled into train/valid/test_seen by ratio, so test_seen layouts also
// appear in training. Requires at least 4 distinct layouts.
void make_splits(std::vector<Episode>& episodes, uint64_t seed,
                 const std::array<double, 4>& ratios);

void write_episodes(std::ostream& os, const std::vector<Episode>& episodes);
std::vector<Episode> read_episodes(std::istream& is);
std::vector<Episode> load_episode_file(const std::string& path);
void save_episode_file(const std::string& path, const std::vector<Episode>& episodes);

}  // namespace elba
