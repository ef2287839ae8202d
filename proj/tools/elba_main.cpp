// elba: data generation, training, evaluation and ablations for the
// ask-when-confused gridworld agent. Subcommands: gen, train, eval, ablate,
// report, rouge.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "elba/agent.hpp"
#include "elba/config.hpp"
#include "elba/dataset.hpp"
#include "elba/error.hpp"
#include "elba/evalkit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
    int jobs = 0;  // 0 = use config value
};

elba::RunConfig resolve_config(const CommonArgs& args) {
    elba::RunConfig cfg = elba::RunConfig::defaults();
    if (!args.config_path.empty()) cfg.load_file(args.config_path);
    for (const auto& kv : args.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            elba::raise("BadConfig", "--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) elba::raise("IO", "cannot write " + path.string());
    f << text;
}

void write_resolved_config(const elba::RunConfig& cfg, const fs::path& out_dir,
                           const std::string& stem) {
    write_text(out_dir / (stem + ".config.txt"), cfg.resolved_text());
}

int jobs_of(const CommonArgs& args, const elba::RunConfig& cfg) {
    return args.jobs > 0 ? args.jobs : static_cast<int>(cfg.geti("jobs"));
}

const std::array<elba::Split, 4> kAllSplits = {elba::Split::Train, elba::Split::Valid,
                                               elba::Split::TestSeen, elba::Split::TestUnseen};

int cmd_gen(const CommonArgs& args) {
    elba::RunConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    auto episodes = elba::build_episodes(cfg);
    for (elba::Split split : kAllSplits) {
        auto part = elba::episodes_of_split(episodes, split);
        elba::save_episode_file(
            (fs::path(args.out_dir) / (elba::split_tag(split) + ".jsonl")).string(), part);
    }
    json manifest;
    manifest["config_hash"] = cfg.hash();
    manifest["n_episodes"] = episodes.size();
    for (elba::Split split : kAllSplits)
        manifest["n_" + elba::split_tag(split)] =
            elba::episodes_of_split(episodes, split).size();
    write_text(fs::path(args.out_dir) / "manifest.json", manifest.dump(2) + "\n");
    write_resolved_config(cfg, args.out_dir, "gen");
    std::cout << "wrote " << episodes.size() << " episodes to " << args.out_dir << "\n";
    return 0;
}

std::vector<elba::Episode> load_split(const std::string& data_dir, elba::Split split) {
    return elba::load_episode_file(
        (fs::path(data_dir) / (elba::split_tag(split) + ".jsonl")).string());
}

int cmd_train(const CommonArgs& args, const std::string& component, const std::string& data_dir,
              const std::string& resume) {
    elba::RunConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    auto train_eps = load_split(data_dir, elba::Split::Train);
    if (train_eps.empty()) elba::raise("IO", "no training episodes in " + data_dir);

    if (component == "actioner") {
        elba::ActionerModel start;
        bool has_resume = !resume.empty();
        if (has_resume) start = elba::load_actioner(resume);
        elba::BcStats stats;
        elba::ActionerModel model = elba::train_bc(train_eps, cfg.actioner_config(), &stats,
                                                   has_resume ? &start : nullptr);
        elba::save_actioner(model, (fs::path(args.out_dir) / "actioner.json").string());
        std::cout << "actioner: loss " << stats.final_loss << ", train action accuracy "
                  << stats.action_accuracy << " over " << stats.steps_seen << " steps\n";
    } else if (component == "planner") {
        elba::PlannerModel start;
        bool has_resume = !resume.empty();
        if (has_resume) start = elba::load_planner(resume);
        elba::PlannerModel model =
            elba::train_planner(train_eps, cfg.planner_config(), has_resume ? &start : nullptr);
        elba::save_planner(model, (fs::path(args.out_dir) / "planner.json").string());
        std::cout << "planner: " << model.subgoal_list.size() << " sub-goals indexed\n";
    } else if (component == "qaeval") {
        elba::ActionerModel actioner =
            elba::load_actioner((fs::path(args.out_dir) / "actioner.json").string());
        auto examples = elba::harvest_qa_examples(train_eps, actioner);
        size_t cap = static_cast<size_t>(cfg.geti("qaeval.max_examples"));
        if (cap > 0 && examples.size() > cap) examples.resize(cap);
        elba::QaevalConfig qcfg = cfg.qaeval_config();
        elba::QaevalModel model;
        if (!resume.empty())
            model = elba::load_qaeval(resume);
        else
            model = elba::make_qaeval(qcfg, actioner.d, qcfg.train.seed);
        elba::ContrastiveStats stats;
        elba::train_contrastive(model, examples, qcfg, &stats);
        elba::save_qaeval(model, (fs::path(args.out_dir) / "qaeval.json").string());
        std::cout << "qaeval: " << examples.size() << " examples, final loss "
                  << stats.final_loss << "\n";
    } else {
        elba::raise("BadConfig", "unknown component '" + component + "'");
    }
    write_resolved_config(cfg, args.out_dir, "train_" + component);
    return 0;
}

struct LoadedModels {
    elba::ActionerModel actioner;
    elba::PlannerModel planner;
    elba::QaevalModel qaeval;
    elba::ModelSet set;
};

LoadedModels load_models(const std::string& models_dir, bool need_qa) {
    LoadedModels m;
    m.actioner = elba::load_actioner((fs::path(models_dir) / "actioner.json").string());
    m.set.actioner = &m.actioner;
    if (need_qa) {
        m.planner = elba::load_planner((fs::path(models_dir) / "planner.json").string());
        m.qaeval = elba::load_qaeval((fs::path(models_dir) / "qaeval.json").string());
        m.set.planner = &m.planner;
        m.set.qaeval = &m.qaeval;
    }
    return m;
}

std::vector<elba::Episode> clip_episodes(std::vector<elba::Episode> eps, long max_episodes) {
    if (max_episodes > 0 && static_cast<long>(eps.size()) > max_episodes)
        eps.resize(static_cast<size_t>(max_episodes));
    return eps;
}

int cmd_eval(const CommonArgs& args, const std::string& data_dir, const std::string& models_dir) {
    elba::RunConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    elba::AgentConfig agent_cfg = cfg.agent_config();
    LoadedModels models = load_models(models_dir, agent_cfg.qa_mode != elba::QaMode::None);

    elba::ArmSpec baseline;
    baseline.label = "baseline";
    baseline.agent = agent_cfg;
    baseline.agent.qa_mode = elba::QaMode::None;
    elba::ArmSpec elba_arm;
    elba_arm.label = "elba_" + elba::confusion_mode_id(agent_cfg.confusion.mode) + "_" +
                     elba::qa_mode_id(agent_cfg.qa_mode);
    elba_arm.agent = agent_cfg;

    int n_seeds = static_cast<int>(cfg.geti("eval.n_seeds"));
    long max_eps = cfg.geti("eval.max_episodes");
    bool write_trajs = cfg.getb("eval.write_trajectories");
    int jobs = jobs_of(args, cfg);

    std::vector<elba::MetricsReport> reports;
    std::ostringstream csv;
    csv << elba::metrics_csv_header() << "\n";
    std::stringstream split_names(cfg.gets("eval.splits"));
    std::string split_name;
    while (std::getline(split_names, split_name, ',')) {
        auto split = elba::split_from_tag(split_name);
        if (!split) elba::raise("BadConfig", "unknown split '" + split_name + "'");
        auto episodes = clip_episodes(load_split(data_dir, *split), max_eps);
        if (episodes.empty()) continue;
        for (const auto& arm : {baseline, elba_arm}) {
            std::vector<elba::Trajectory> trajs;
            auto report =
                elba::run_arm(episodes, models.set, arm, split_name, n_seeds, cfg.seed(),
                              cfg.hash(), write_trajs ? &trajs : nullptr, jobs);
            reports.push_back(report);
            csv << elba::metrics_csv_rows(report);
            if (write_trajs) {
                std::ofstream tf(fs::path(args.out_dir) /
                                 ("trajectories_" + arm.label + "_" + split_name + ".jsonl"));
                for (const auto& t : trajs) tf << t.to_json_line() << "\n";
            }
        }
    }
    write_text(fs::path(args.out_dir) / "eval.csv", csv.str());
    write_text(fs::path(args.out_dir) / "eval.summary.json",
               elba::reports_summary_json(reports) + "\n");
    write_resolved_config(cfg, args.out_dir, "eval");
    std::cout << "wrote " << reports.size() << " report rows to " << args.out_dir << "\n";
    return 0;
}

int cmd_ablate(const CommonArgs& args, const std::string& data_dir,
               const std::string& models_dir, const std::string& kind_flag) {
    elba::RunConfig cfg = resolve_config(args);
    fs::create_directories(args.out_dir);
    std::string kind_name = kind_flag.empty() ? cfg.gets("ablate.kind") : kind_flag;

    elba::AblationRequest req;
    req.base = cfg.agent_config();
    if (kind_name == "question_type") {
        req.kind = elba::AblationKind::QuestionType;
    } else if (kind_name == "timing") {
        req.kind = elba::AblationKind::Timing;
        req.period_grid = cfg.get_int_list("ablate.periods");
    } else if (kind_name == "thresholds") {
        req.kind = elba::AblationKind::Thresholds;
        req.threshold_grid = cfg.get_double_list("ablate.thresholds");
    } else if (kind_name == "k_sweep") {
        req.kind = elba::AblationKind::KSweep;
        req.k_grid = cfg.get_int_list("ablate.ks");
    } else {
        elba::raise("BadConfig", "unknown ablation kind '" + kind_name + "'");
    }

    LoadedModels models = load_models(models_dir, true);
    int n_seeds = static_cast<int>(cfg.geti("eval.n_seeds"));
    long max_eps = cfg.geti("eval.max_episodes");
    auto episodes = clip_episodes(load_split(data_dir, elba::Split::TestSeen), max_eps);
    auto reports = elba::run_ablation(episodes, models.set, req, "test_seen", n_seeds,
                                      cfg.seed(), cfg.hash(), jobs_of(args, cfg));

    std::ostringstream csv;
    csv << elba::metrics_csv_header() << "\n";
    for (const auto& r : reports) csv << elba::metrics_csv_rows(r);
    write_text(fs::path(args.out_dir) / ("ablate_" + kind_name + ".csv"), csv.str());
    write_text(fs::path(args.out_dir) / ("ablate_" + kind_name + ".summary.json"),
               elba::reports_summary_json(reports) + "\n");
    write_resolved_config(cfg, args.out_dir, "ablate_" + kind_name);
    std::cout << "wrote " << reports.size() << " ablation rows to " << args.out_dir << "\n";
    return 0;
}

int cmd_report(const CommonArgs& args, const std::vector<std::string>& inputs) {
    fs::create_directories(args.out_dir);
    std::vector<std::string> rows;
    std::string header;
    for (const auto& input : inputs) {
        std::ifstream f(input);
        if (!f) elba::raise("IO", "cannot open " + input);
        std::string line;
        bool first = true;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            if (first) {
                first = false;
                if (header.empty())
                    header = line;
                else if (header != line)
                    elba::raise("BadConfig", "CSV headers differ across inputs");
                continue;
            }
            rows.push_back(line);
        }
    }
    // Group by config hash (last column), stable order within a group.
    std::stable_sort(rows.begin(), rows.end(), [](const std::string& a, const std::string& b) {
        return a.substr(a.rfind(',')) < b.substr(b.rfind(','));
    });
    std::ostringstream merged;
    merged << header << "\n";
    for (const auto& r : rows) merged << r << "\n";
    write_text(fs::path(args.out_dir) / "report.csv", merged.str());
    std::cout << "merged " << rows.size() << " rows from " << inputs.size() << " files\n";
    return 0;
}

int cmd_rouge(const std::string& ref_path, const std::string& hyp_path) {
    std::ifstream rf(ref_path), hf(hyp_path);
    if (!rf) elba::raise("IO", "cannot open " + ref_path);
    if (!hf) elba::raise("IO", "cannot open " + hyp_path);
    std::string rline, hline;
    double total = 0.0;
    long n = 0;
    while (std::getline(rf, rline) && std::getline(hf, hline)) {
        total += elba::rouge_l(elba::tokenize_words(rline), elba::tokenize_words(hline));
        ++n;
    }
    if (n == 0) elba::raise("BadConfig", "no line pairs to score");
    std::cout << "rouge_l " << total / static_cast<double>(n) << " over " << n << " pairs\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridworld agent that asks questions when confused"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string component, data_dir = "data", models_dir = "models", resume, kind;
    std::vector<std::string> inputs;
    std::string rouge_ref, rouge_hyp;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "config file of key = value lines");
        sub->add_option("--set", common.overrides, "override, key=value (repeatable)");
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--jobs", common.jobs, "parallel episode workers");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate episode dataset + splits");
    add_common(gen);

    CLI::App* train = app.add_subcommand("train", "train a component");
    add_common(train);
    train->add_option("--component", component, "actioner|planner|qaeval")->required();
    train->add_option("--data", data_dir, "dataset directory");
    train->add_option("--resume", resume, "checkpoint to continue from");

    CLI::App* eval_cmd = app.add_subcommand("eval", "baseline vs asking agent");
    add_common(eval_cmd);
    eval_cmd->add_option("--data", data_dir, "dataset directory");
    eval_cmd->add_option("--models", models_dir, "model checkpoint directory");

    CLI::App* ablate = app.add_subcommand("ablate", "run an ablation grid");
    add_common(ablate);
    ablate->add_option("--data", data_dir, "dataset directory");
    ablate->add_option("--models", models_dir, "model checkpoint directory");
    ablate->add_option("--kind", kind, "question_type|timing|thresholds|k_sweep");

    CLI::App* report = app.add_subcommand("report", "merge metric CSVs");
    add_common(report);
    report->add_option("--inputs", inputs, "CSV files to merge")->required();

    CLI::App* rouge = app.add_subcommand("rouge", "corpus Rouge-L of two token files");
    rouge->add_option("--ref", rouge_ref, "reference file")->required();
    rouge->add_option("--hyp", rouge_hyp, "hypothesis file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(common);
        if (train->parsed()) return cmd_train(common, component, data_dir, resume);
        if (eval_cmd->parsed()) return cmd_eval(common, data_dir, models_dir);
        if (ablate->parsed()) return cmd_ablate(common, data_dir, models_dir, kind);
        if (report->parsed()) return cmd_report(common, inputs);
        if (rouge->parsed()) return cmd_rouge(rouge_ref, rouge_hyp);
    } catch (const elba::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
