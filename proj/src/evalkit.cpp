#include "elba/evalkit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "elba/error.hpp"

namespace elba {

using nlohmann::json;

int task_success(const Trajectory& traj) { return traj.success ? 1 : 0; }

double goal_condition_rate(const Trajectory& traj) { return traj.gc_fraction; }

double tlw(double metric_value, int ref_len, int inferred_len) {
    if (ref_len < 1 || inferred_len < 1) raise("InvalidLength", "lengths must be >= 1");
    return metric_value * static_cast<double>(ref_len) /
           static_cast<double>(std::max(ref_len, inferred_len));
}

namespace {

SeedReport summarize_seed(const std::vector<Trajectory>& trajs, uint64_t seed) {
    SeedReport r;
    r.seed = seed;
    r.n_episodes = static_cast<int>(trajs.size());
    for (const auto& t : trajs) {
        double s = task_success(t);
        double g = goal_condition_rate(t);
        r.sr += s;
        r.gc += g;
        r.sr_tlw += tlw(s, std::max(1, t.expert_steps), std::max(1, t.env_steps));
        r.gc_tlw += tlw(g, std::max(1, t.expert_steps), std::max(1, t.env_steps));
    }
    double n = std::max<size_t>(1, trajs.size());
    r.sr /= n;
    r.gc /= n;
    r.sr_tlw /= n;
    r.gc_tlw /= n;
    auto [mq, sq] = question_stats(trajs);
    r.mean_q = mq;
    r.std_q = sq;
    return r;
}

std::vector<Trajectory> run_split(const std::vector<Episode>& episodes, const ModelSet& models,
                                  const AgentConfig& cfg, int jobs) {
    std::vector<Trajectory> out(episodes.size());
    if (jobs <= 1 || episodes.size() < 2) {
        for (size_t i = 0; i < episodes.size(); ++i) out[i] = run_episode(models, episodes[i], cfg);
        return out;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= episodes.size()) return;
            out[i] = run_episode(models, episodes[i], cfg);
        }
    };
    std::vector<std::thread> pool;
    int n = std::min<int>(jobs, static_cast<int>(episodes.size()));
    pool.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace

MetricsReport run_arm(const std::vector<Episode>& episodes, const ModelSet& models,
                      const ArmSpec& arm, const std::string& split_name, int n_seeds,
                      uint64_t base_seed, const std::string& config_hash,
                      std::vector<Trajectory>* collected, int jobs) {
    if (episodes.empty()) raise("DimensionMismatch", "run_arm needs a non-empty split");
    MetricsReport report;
    report.arm = arm.label;
    report.split = split_name;
    report.config_hash = config_hash;
    report.n_episodes = static_cast<int>(episodes.size());

    // Question-type shares, normalized by trajectory length per episode.
    std::map<std::string, double> type_sums;
    long type_episodes = 0;

    for (int s = 0; s < n_seeds; ++s) {
        AgentConfig cfg = arm.agent;
        cfg.seed = Rng::mix(base_seed, static_cast<uint64_t>(s));
        auto trajs = run_split(episodes, models, cfg, jobs);
        SeedReport sr = summarize_seed(trajs, cfg.seed);
        report.per_seed.push_back(sr);
        report.sr += sr.sr;
        report.gc += sr.gc;
        report.sr_tlw += sr.sr_tlw;
        report.gc_tlw += sr.gc_tlw;
        report.mean_q += sr.mean_q;
        report.std_q += sr.std_q;
        for (const auto& t : trajs) {
            std::map<std::string, double> counts;
            for (const auto& st : t.steps)
                for (const auto& at : st.attempts)
                    if (at.committed) counts[qa_type_id(at.pair.qa_type)] += 1.0;
            double len = std::max(1, t.env_steps);
            for (const auto& [type, c] : counts) type_sums[type] += c / len;
            ++type_episodes;
        }
        if (collected)
            collected->insert(collected->end(), trajs.begin(), trajs.end());
    }
    double ns = std::max(1, n_seeds);
    report.sr /= ns;
    report.gc /= ns;
    report.sr_tlw /= ns;
    report.gc_tlw /= ns;
    report.mean_q /= ns;
    report.std_q /= ns;
    if (type_episodes > 0)
        for (const auto& [type, total] : type_sums)
            report.type_percentages[type] = total / static_cast<double>(type_episodes);
    return report;
}

std::vector<MetricsReport> run_ablation(const std::vector<Episode>& episodes,
                                        const ModelSet& models, const AblationRequest& req,
                                        const std::string& split_name, int n_seeds,
                                        uint64_t base_seed, const std::string& config_hash,
                                        int jobs) {
    std::vector<ArmSpec> arms;
    switch (req.kind) {
        case AblationKind::QuestionType: {
            for (QaMode mode : {QaMode::None, QaMode::Oracle, QaMode::Generated, QaMode::Combined}) {
                ArmSpec arm;
                arm.agent = req.base;
                arm.agent.qa_mode = mode;
                arm.label = "qa_" + qa_mode_id(mode);
                arms.push_back(arm);
            }
            break;
        }
        case AblationKind::Timing: {
            ArmSpec confused;
            confused.agent = req.base;
            confused.label = "timing_confusion_" + confusion_mode_id(req.base.confusion.mode);
            arms.push_back(confused);
            for (int period : req.period_grid) {
                ArmSpec arm;
                arm.agent = req.base;
                arm.agent.confusion.mode = ConfusionMode::Fixed;
                arm.agent.confusion.fixed_period = period;
                arm.label = "timing_fixed_" + std::to_string(period);
                arms.push_back(arm);
            }
            break;
        }
        case AblationKind::Thresholds: {
            if (req.base.confusion.mode == ConfusionMode::Entropy) {
                for (double ea : req.threshold_grid)
                    for (double eo : req.threshold_grid) {
                        ArmSpec arm;
                        arm.agent = req.base;
                        arm.agent.confusion.entropy_action_threshold = ea;
                        arm.agent.confusion.entropy_object_threshold = eo;
                        std::ostringstream label;
                        label << "thresh_entropy_" << ea << "_" << eo;
                        arm.label = label.str();
                        arms.push_back(arm);
                    }
            } else {
                for (double eg : req.threshold_grid) {
                    ArmSpec arm;
                    arm.agent = req.base;
                    arm.agent.confusion.grad_norm_threshold = eg;
                    std::ostringstream label;
                    label << "thresh_gradient_" << eg;
                    arm.label = label.str();
                    arms.push_back(arm);
                }
            }
            break;
        }
        case AblationKind::KSweep: {
            for (int k : req.k_grid) {
                ArmSpec arm;
                arm.agent = req.base;
                arm.agent.k = k;
                arm.label = "k_" + std::to_string(k);
                arms.push_back(arm);
            }
            break;
        }
    }
    if (arms.empty()) raise("DimensionMismatch", "empty ablation grid");

    std::vector<MetricsReport> out;
    for (const auto& arm : arms)
        out.push_back(run_arm(episodes, models, arm, split_name, n_seeds, base_seed,
                              config_hash, nullptr, jobs));
    return out;
}

std::string metrics_csv_header() {
    return "arm,split,seed,SR,SR_TLW,GC,GC_TLW,mean_q,std_q,n_episodes,config_hash";
}

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(10);
    ss << v;
    return ss.str();
}

}  // namespace

std::string metrics_csv_rows(const MetricsReport& r) {
    std::ostringstream ss;
    for (const auto& s : r.per_seed) {
        ss << r.arm << ',' << r.split << ',' << s.seed << ',' << fmt(s.sr) << ','
           << fmt(s.sr_tlw) << ',' << fmt(s.gc) << ',' << fmt(s.gc_tlw) << ',' << fmt(s.mean_q)
           << ',' << fmt(s.std_q) << ',' << s.n_episodes << ',' << r.config_hash << '\n';
    }
    ss << r.arm << ',' << r.split << ",mean," << fmt(r.sr) << ',' << fmt(r.sr_tlw) << ','
       << fmt(r.gc) << ',' << fmt(r.gc_tlw) << ',' << fmt(r.mean_q) << ',' << fmt(r.std_q) << ','
       << r.n_episodes << ',' << r.config_hash << '\n';
    return ss.str();
}

std::string reports_summary_json(const std::vector<MetricsReport>& reports) {
    json out = json::array();
    for (const auto& r : reports) {
        json j;
        j["arm"] = r.arm;
        j["split"] = r.split;
        j["SR"] = r.sr;
        j["SR_TLW"] = r.sr_tlw;
        j["GC"] = r.gc;
        j["GC_TLW"] = r.gc_tlw;
        j["mean_q"] = r.mean_q;
        j["std_q"] = r.std_q;
        j["n_episodes"] = r.n_episodes;
        j["config_hash"] = r.config_hash;
        json seeds = json::array();
        for (const auto& s : r.per_seed)
            seeds.push_back({{"seed", s.seed},
                             {"SR", s.sr},
                             {"SR_TLW", s.sr_tlw},
                             {"GC", s.gc},
                             {"GC_TLW", s.gc_tlw},
                             {"mean_q", s.mean_q},
                             {"std_q", s.std_q},
                             {"n_episodes", s.n_episodes}});
        j["per_seed"] = seeds;
        if (!r.type_percentages.empty()) j["type_percentages"] = r.type_percentages;
        out.push_back(j);
    }
    return out.dump(2);
}

}  // namespace elba
