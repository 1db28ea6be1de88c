#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "caplearn/orchestrator.hpp"

namespace caplearn {

/// A seeded campaign: one generated network per seed, each run under every
/// requested policy (the foresighted policy crossed with the gamma list).
struct ExperimentConfig {
    int schema_version = 1;
    int link_count = 12;
    int user_count = 200;
    int target_route_length = 4;
    int total_steps = 1800;
    std::vector<std::string> policies = {"greedy", "foresighted"};
    std::vector<double> gammas = {0.99};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    SystemParams params;
    std::string output_dir = "out";

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    void save(const std::string& path) const;
    static ExperimentConfig load(const std::string& path);
};

struct CampaignResult {
    std::vector<std::string> trace_files;
    std::string summary_file;
    int failed_runs = 0;
};

/// Runs the whole campaign, writing one trace CSV per (policy, gamma, seed)
/// and a summary JSON with per-step and final-step mean/std of the error
/// metrics across seeds. Per-run failures are recorded and skipped.
CampaignResult run_campaign(const ExperimentConfig& config);

}  // namespace caplearn
