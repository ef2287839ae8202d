#pragma once

#include <map>
#include <string>
#include <vector>

#include "elba/agent.hpp"

namespace elba {

int task_success(const Trajectory& traj);
double goal_condition_rate(const Trajectory& traj);

// Trajectory-length weighting: value * |L| / max(|L|, |L_hat|).
double tlw(double metric_value, int ref_len, int inferred_len);

struct SeedReport {
    uint64_t seed = 0;
    double sr = 0.0, sr_tlw = 0.0, gc = 0.0, gc_tlw = 0.0;
    double mean_q = 0.0, std_q = 0.0;
    int n_episodes = 0;
};

struct MetricsReport {
    std::string arm;
    std::string split;
    double sr = 0.0, sr_tlw = 0.0, gc = 0.0, gc_tlw = 0.0;
    double mean_q = 0.0, std_q = 0.0;
    int n_episodes = 0;
    std::vector<SeedReport> per_seed;
    std::string config_hash;
    // Per-QA-type asked-question shares, normalized by trajectory length and
    // averaged over episodes (question-type ablation only).
    std::map<std::string, double> type_percentages;
};

struct ArmSpec {
    std::string label;
    AgentConfig agent;
};

MetricsReport run_arm(const std::vector<Episode>& episodes, const ModelSet& models,
                      const ArmSpec& arm, const std::string& split_name, int n_seeds,
                      uint64_t base_seed, const std::string& config_hash,
                      std::vector<Trajectory>* collected = nullptr, int jobs = 1);

enum class AblationKind { QuestionType, Timing, Thresholds, KSweep };

struct AblationRequest {
    AblationKind kind = AblationKind::QuestionType;
    AgentConfig base;
    std::vector<double> threshold_grid;  // entropy or gradient values
    std::vector<int> period_grid;        // timing
    std::vector<int> k_grid;             // k sweep
};

std::vector<MetricsReport> run_ablation(const std::vector<Episode>& episodes,
                                        const ModelSet& models, const AblationRequest& req,
                                        const std::string& split_name, int n_seeds,
                                        uint64_t base_seed, const std::string& config_hash,
                                        int jobs = 1);

std::string metrics_csv_header();
std::string metrics_csv_rows(const MetricsReport& report);
std::string reports_summary_json(const std::vector<MetricsReport>& reports);

}  // namespace elba
