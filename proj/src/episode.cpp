#include "elba/episode.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "elba/error.hpp"
#include "elba/rng.hpp"

namespace elba {

using nlohmann::json;

namespace {

const std::array<std::string, kSplitCount> kSplitTags = {"train", "valid", "test_seen",
                                                         "test_unseen"};

json room_spec_to_json(const RoomSpec& spec) {
    json counts = json::object();
    for (const auto& [cat, n] : spec.counts) counts[category_id(cat)] = n;
    return {{"width", spec.width},
            {"height", spec.height},
            {"layout_seed", spec.layout_seed},
            {"counts", counts}};
}

RoomSpec room_spec_from_json(const json& j) {
    RoomSpec spec;
    spec.width = j.at("width").get<int>();
    spec.height = j.at("height").get<int>();
    spec.layout_seed = j.at("layout_seed").get<uint64_t>();
    for (const auto& [key, val] : j.at("counts").items()) {
        auto cat = category_from_id(key);
        if (!cat) raise("BadEpisodeRecord", "unknown category " + key);
        spec.counts[*cat] = val.get<int>();
    }
    return spec;
}

json goal_to_json(const GoalCondition& g) {
    json j;
    switch (g.predicate) {
        case Predicate::InContainer: j["predicate"] = "InContainer"; break;
        case Predicate::HasFlag: j["predicate"] = "HasFlag"; break;
        case Predicate::Holding: j["predicate"] = "Holding"; break;
    }
    if (std::holds_alternative<Category>(g.subject))
        j["subject"] = category_id(std::get<Category>(g.subject));
    else
        j["subject"] = std::get<int>(g.subject);
    if (g.container_arg) j["object_arg"] = category_id(*g.container_arg);
    if (g.flag_arg) j["flag"] = static_cast<int>(*g.flag_arg);
    return j;
}

GoalCondition goal_from_json(const json& j) {
    GoalCondition g;
    std::string p = j.at("predicate").get<std::string>();
    g.predicate = p == "InContainer" ? Predicate::InContainer
                  : p == "HasFlag"   ? Predicate::HasFlag
                                     : Predicate::Holding;
    if (j.at("subject").is_string()) {
        auto cat = category_from_id(j.at("subject").get<std::string>());
        if (!cat) raise("BadEpisodeRecord", "bad goal subject");
        g.subject = *cat;
    } else {
        g.subject = j.at("subject").get<int>();
    }
    if (j.contains("object_arg")) {
        auto cat = category_from_id(j.at("object_arg").get<std::string>());
        if (!cat) raise("BadEpisodeRecord", "bad goal object_arg");
        g.container_arg = *cat;
    }
    if (j.contains("flag")) g.flag_arg = static_cast<Flag>(j.at("flag").get<int>());
    return g;
}

}  // namespace

const std::string& split_tag(Split s) { return kSplitTags[static_cast<size_t>(s)]; }

std::optional<Split> split_from_tag(std::string_view tag) {
    for (int i = 0; i < kSplitCount; ++i)
        if (kSplitTags[i] == tag) return static_cast<Split>(i);
    return std::nullopt;
}

const SubGoal& Episode::subgoal_at(int t) const {
    const SubGoal* active = &subgoal_spans.front().second;
    for (const auto& [start, sg] : subgoal_spans) {
        if (start <= t - 1) active = &sg;
    }
    return *active;
}

std::string Episode::to_json_line() const {
    json j;
    j["schema_version"] = 1;
    j["seed"] = seed;
    j["room_spec"] = room_spec_to_json(room_spec);
    json task_j;
    task_j["type"] = task_type_id(task.type);
    json params = json::object();
    if (task.params.x) params["x"] = category_id(*task.params.x);
    if (task.params.y) params["y"] = category_id(*task.params.y);
    task_j["params"] = params;
    json goals = json::array();
    for (const auto& g : task.goal_conditions) goals.push_back(goal_to_json(g));
    task_j["goal_conditions"] = goals;
    json golds = json::array();
    for (const auto& sg : task.gold_subgoals) golds.push_back(sg.render());
    task_j["gold_subgoals"] = golds;
    j["task"] = task_j;
    json dia = json::array();
    for (const auto& u : dialog) dia.push_back({{"step", u.step}, {"text", u.text}});
    j["dialog"] = dia;
    json acts = json::array();
    for (const auto& a : expert_actions) acts.push_back(a.encode());
    j["expert_actions"] = acts;
    json spans = json::array();
    for (const auto& [start, sg] : subgoal_spans)
        spans.push_back({{"start", start}, {"subgoal", sg.render()}});
    j["subgoal_spans"] = spans;
    j["split_tag"] = split_tag(split);
    return j.dump();
}

Episode Episode::from_json_line(const std::string& line) {
    json j = json::parse(line);
    if (j.at("schema_version").get<int>() != 1)
        raise("BadEpisodeRecord", "unsupported schema version");
    Episode ep;
    ep.seed = j.at("seed").get<uint64_t>();
    ep.room_spec = room_spec_from_json(j.at("room_spec"));
    const json& tj = j.at("task");
    auto type = task_type_from_id(tj.at("type").get<std::string>());
    if (!type) raise("BadEpisodeRecord", "unknown task type");
    ep.task.type = *type;
    if (tj.at("params").contains("x"))
        ep.task.params.x = category_from_id(tj.at("params").at("x").get<std::string>());
    if (tj.at("params").contains("y"))
        ep.task.params.y = category_from_id(tj.at("params").at("y").get<std::string>());
    for (const auto& g : tj.at("goal_conditions")) ep.task.goal_conditions.push_back(goal_from_json(g));
    for (const auto& s : tj.at("gold_subgoals")) {
        auto sg = SubGoal::parse(s.get<std::string>());
        if (!sg) raise("BadEpisodeRecord", "bad sub-goal " + s.get<std::string>());
        ep.task.gold_subgoals.push_back(*sg);
    }
    for (const auto& u : j.at("dialog"))
        ep.dialog.push_back({u.at("step").get<int>(), u.at("text").get<std::string>()});
    for (const auto& a : j.at("expert_actions"))
        ep.expert_actions.push_back(Action::decode(a.get<std::string>()));
    for (const auto& s : j.at("subgoal_spans")) {
        auto sg = SubGoal::parse(s.at("subgoal").get<std::string>());
        if (!sg) raise("BadEpisodeRecord", "bad span sub-goal");
        ep.subgoal_spans.emplace_back(s.at("start").get<int>(), *sg);
    }
    auto split = split_from_tag(j.at("split_tag").get<std::string>());
    if (!split) raise("BadEpisodeRecord", "unknown split tag");
    ep.split = *split;
    return ep;
}

void make_splits(std::vector<Episode>& episodes, uint64_t seed,
                 const std::array<double, 4>& ratios) {
    std::set<uint64_t> layout_ids;
    for (const auto& ep : episodes) layout_ids.insert(ep.room_spec.identity_hash());
    if (layout_ids.size() < 4) raise("TooFewRooms", "need at least 4 distinct room layouts");

    std::vector<uint64_t> layouts(layout_ids.begin(), layout_ids.end());
    Rng rng = Rng(seed).substream("splits");
    rng.shuffle(layouts);

    double total = ratios[0] + ratios[1] + ratios[2] + ratios[3];
    size_t n_unseen_layouts = std::max<size_t>(
        1, static_cast<size_t>(layouts.size() * (ratios[3] / total) + 0.5));
    n_unseen_layouts = std::min(n_unseen_layouts, layouts.size() - 3);
    std::set<uint64_t> unseen(layouts.end() - static_cast<long>(n_unseen_layouts), layouts.end());

    std::vector<size_t> rest;
    for (size_t i = 0; i < episodes.size(); ++i) {
        if (unseen.count(episodes[i].room_spec.identity_hash()))
            episodes[i].split = Split::TestUnseen;
        else
            rest.push_back(i);
    }
    rng.shuffle(rest);
    double seen_total = ratios[0] + ratios[1] + ratios[2];
    size_t n_train = static_cast<size_t>(rest.size() * (ratios[0] / seen_total) + 0.5);
    size_t n_valid = static_cast<size_t>(rest.size() * (ratios[1] / seen_total) + 0.5);
    for (size_t r = 0; r < rest.size(); ++r) {
        Split s = r < n_train              ? Split::Train
                  : r < n_train + n_valid  ? Split::Valid
                                           : Split::TestSeen;
        episodes[rest[r]].split = s;
    }
}

void write_episodes(std::ostream& os, const std::vector<Episode>& episodes) {
    for (const auto& ep : episodes) os << ep.to_json_line() << "\n";
}

std::vector<Episode> read_episodes(std::istream& is) {
    std::vector<Episode> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(Episode::from_json_line(line));
    }
    return out;
}

std::vector<Episode> load_episode_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise("IO", "cannot open " + path);
    return read_episodes(f);
}

void save_episode_file(const std::string& path, const std::vector<Episode>& episodes) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise("IO", "cannot write " + path);
    write_episodes(f, episodes);
}

}  // namespace elba
