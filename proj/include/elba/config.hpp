#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "elba/actioner.hpp"
#include "elba/agent.hpp"
#include "elba/planner.hpp"
#include "elba/qaeval.hpp"

namespace elba {

// Flat dotted-key configuration. Every known key has a registered default;
// unknown keys are rejected at parse time. The resolved (sorted) text is
// what the config hash covers, so identical hashes mean identical runs.
class RunConfig {
public:
    // Registry defaults; ELBA_SEED overrides the seed default when set.
    static RunConfig defaults();

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    const std::string& gets(const std::string& key) const;
    long geti(const std::string& key) const;
    double getd(const std::string& key) const;
    bool getb(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    std::string resolved_text() const;
    std::string hash() const;  // 16 hex chars over resolved_text()

    uint64_t seed() const { return static_cast<uint64_t>(geti("seed")); }

    ActionerConfig actioner_config() const;
    PlannerConfig planner_config() const;
    QaevalConfig qaeval_config() const;
    ConfusionConfig confusion_config() const;
    AgentConfig agent_config() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace elba
