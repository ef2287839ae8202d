#include "elba/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "elba/error.hpp"
#include "elba/rng.hpp"

namespace elba {

namespace {

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> d = {
        {"seed", "1"},
        {"jobs", "1"},
        // dataset generation
        {"gen.n_layouts", "10"},
        {"gen.episodes_per_layout", "150"},
        {"gen.min_size", "7"},
        {"gen.max_size", "9"},
        {"gen.hint_rate", "0.7"},
        {"gen.eval_hint_rate", "0.0"},
        {"gen.ratio_train", "6"},
        {"gen.ratio_valid", "1"},
        {"gen.ratio_test_seen", "2"},
        {"gen.ratio_test_unseen", "1"},
        // actioner
        {"actioner.d", "64"},
        {"actioner.window", "16"},
        {"actioner.head_hidden", "64"},
        {"actioner.lr", "0.003"},
        {"actioner.batch", "16"},
        {"actioner.epochs", "2"},
        {"actioner.grad_clip", "5.0"},
        {"actioner.qa_augment_rate", "0.5"},
        // planner
        {"planner.emb_dim", "32"},
        {"planner.lr", "0.01"},
        {"planner.batch", "16"},
        {"planner.epochs", "10"},
        // qa evaluator
        {"qaeval.e_dim", "32"},
        {"qaeval.lr", "0.003"},
        {"qaeval.batch", "16"},
        {"qaeval.epochs", "4"},
        {"qaeval.tau_init", "0.07"},
        {"qaeval.tau_sample", "1.0"},
        {"qaeval.max_examples", "6000"},
        // confusion module
        {"confusion.mode", "entropy"},
        {"confusion.entropy_action_threshold", "0.9"},
        {"confusion.entropy_object_threshold", "0.9"},
        {"confusion.grad_norm_threshold", "1.2"},
        {"confusion.fixed_period", "3"},
        {"confusion.max_questions_per_step", "1"},
        {"confusion.fixed_uses_commit_check", "false"},
        {"confusion.grad_includes_object_always", "false"},
        // agent loop
        {"agent.qa_mode", "oracle"},
        {"agent.k", "5"},
        {"agent.candidate_cap", "16"},
        {"agent.horizon", "200"},
        {"agent.malform_rate", "0.0"},
        // evaluation
        {"eval.n_seeds", "3"},
        {"eval.max_episodes", "0"},
        {"eval.splits", "test_seen,test_unseen"},
        {"eval.write_trajectories", "false"},
        // ablation driver
        {"ablate.kind", "thresholds"},
        {"ablate.thresholds", "0.7,0.9,1.1"},
        {"ablate.periods", "1,3,5,10"},
        {"ablate.ks", "1,3,5,8"},
    };
    return d;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.values_ = default_values();
    if (const char* env = std::getenv("ELBA_SEED")) {
        std::string v = trim(env);
        if (!v.empty()) c.values_["seed"] = v;
    }
    return c;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise("IO", "cannot open config " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            raise("BadConfig", path + ":" + std::to_string(lineno) + " expected key = value");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!default_values().count(key)) raise("BadConfig", "unknown config key '" + key + "'");
    values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& RunConfig::gets(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) raise("BadConfig", "unknown config key '" + key + "'");
    return it->second;
}

long RunConfig::geti(const std::string& key) const {
    try {
        return std::stol(gets(key));
    } catch (const std::exception&) {
        raise("BadConfig", "key '" + key + "' is not an integer");
    }
}

double RunConfig::getd(const std::string& key) const {
    try {
        return std::stod(gets(key));
    } catch (const std::exception&) {
        raise("BadConfig", "key '" + key + "' is not a number");
    }
}

bool RunConfig::getb(const std::string& key) const {
    const std::string& v = gets(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    raise("BadConfig", "key '" + key + "' is not a boolean");
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(gets(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    std::vector<int> out;
    std::stringstream ss(gets(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

std::string RunConfig::resolved_text() const {
    std::ostringstream ss;
    for (const auto& [k, v] : values_) ss << k << " = " << v << "\n";
    return ss.str();
}

std::string RunConfig::hash() const {
    uint64_t h = Rng::hash_name(resolved_text());
    std::ostringstream ss;
    ss << std::hex;
    ss.width(16);
    ss.fill('0');
    ss << h;
    return ss.str();
}

ActionerConfig RunConfig::actioner_config() const {
    ActionerConfig c;
    c.d = static_cast<int>(geti("actioner.d"));
    c.window = static_cast<int>(geti("actioner.window"));
    c.head_hidden = static_cast<int>(geti("actioner.head_hidden"));
    c.train.learning_rate = getd("actioner.lr");
    c.train.batch_size = static_cast<int>(geti("actioner.batch"));
    c.train.epochs = static_cast<int>(geti("actioner.epochs"));
    c.train.grad_clip = getd("actioner.grad_clip");
    c.train.seed = seed();
    c.qa_augment_rate = getd("actioner.qa_augment_rate");
    return c;
}

PlannerConfig RunConfig::planner_config() const {
    PlannerConfig c;
    c.emb_dim = static_cast<int>(geti("planner.emb_dim"));
    c.train.learning_rate = getd("planner.lr");
    c.train.batch_size = static_cast<int>(geti("planner.batch"));
    c.train.epochs = static_cast<int>(geti("planner.epochs"));
    c.train.seed = Rng::mix(seed(), Rng::hash_name("planner"));
    return c;
}

QaevalConfig RunConfig::qaeval_config() const {
    QaevalConfig c;
    c.e_dim = static_cast<int>(geti("qaeval.e_dim"));
    c.tau_init = getd("qaeval.tau_init");
    c.tau_sample = getd("qaeval.tau_sample");
    c.train.learning_rate = getd("qaeval.lr");
    c.train.batch_size = static_cast<int>(geti("qaeval.batch"));
    c.train.epochs = static_cast<int>(geti("qaeval.epochs"));
    c.train.seed = Rng::mix(seed(), Rng::hash_name("qaeval"));
    return c;
}

ConfusionConfig RunConfig::confusion_config() const {
    ConfusionConfig c;
    auto mode = confusion_mode_from_id(gets("confusion.mode"));
    if (!mode) raise("BadConfig", "confusion.mode must be entropy|gradient|fixed");
    c.mode = *mode;
    c.entropy_action_threshold = getd("confusion.entropy_action_threshold");
    c.entropy_object_threshold = getd("confusion.entropy_object_threshold");
    c.grad_norm_threshold = getd("confusion.grad_norm_threshold");
    c.fixed_period = static_cast<int>(geti("confusion.fixed_period"));
    c.max_questions_per_step = static_cast<int>(geti("confusion.max_questions_per_step"));
    c.fixed_uses_commit_check = getb("confusion.fixed_uses_commit_check");
    c.grad_includes_object_always = getb("confusion.grad_includes_object_always");
    if (c.fixed_period < 1) raise("BadConfig", "confusion.fixed_period must be >= 1");
    if (c.max_questions_per_step < 1)
        raise("BadConfig", "confusion.max_questions_per_step must be >= 1");
    return c;
}

AgentConfig RunConfig::agent_config() const {
    AgentConfig c;
    c.confusion = confusion_config();
    auto mode = qa_mode_from_id(gets("agent.qa_mode"));
    if (!mode) raise("BadConfig", "agent.qa_mode must be none|oracle|generated|combined");
    c.qa_mode = *mode;
    c.k = static_cast<int>(geti("agent.k"));
    c.candidate_cap = static_cast<int>(geti("agent.candidate_cap"));
    c.horizon = static_cast<int>(geti("agent.horizon"));
    c.malform_rate = getd("agent.malform_rate");
    c.seed = seed();
    if (c.k < 1) raise("BadConfig", "agent.k must be >= 1");
    if (c.horizon < 1) raise("BadConfig", "agent.horizon must be >= 1");
    return c;
}

}  // namespace elba
