#include "caplearn/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace caplearn {

namespace {

std::string gamma_label(double gamma) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", gamma);
    return buf;
}

struct RunGroup {
    std::string label;
    PolicyKind kind = PolicyKind::Greedy;
    double gamma = 0.0;
};

std::vector<RunGroup> build_groups(const ExperimentConfig& config) {
    std::vector<RunGroup> groups;
    for (const std::string& policy : config.policies) {
        if (policy == "greedy") {
            groups.push_back({"greedy", PolicyKind::Greedy, 0.0});
        } else if (policy == "foresighted") {
            if (config.gammas.empty()) {
                throw std::invalid_argument("run_campaign: foresighted policy needs gammas");
            }
            for (double gamma : config.gammas) {
                groups.push_back({"foresighted_g" + gamma_label(gamma),
                                  PolicyKind::Foresighted, gamma});
            }
        } else {
            throw std::invalid_argument("run_campaign: unknown policy '" + policy + "'");
        }
    }
    return groups;
}

void mean_std(const std::vector<double>& values, double& mean, double& stddev) {
    mean = 0.0;
    stddev = 0.0;
    if (values.empty()) return;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    for (double v : values) stddev += (v - mean) * (v - mean);
    stddev = std::sqrt(stddev / static_cast<double>(values.size()));
}

}  // namespace

std::string ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["link_count"] = link_count;
    j["user_count"] = user_count;
    j["target_route_length"] = target_route_length;
    j["total_steps"] = total_steps;
    j["policies"] = policies;
    j["gammas"] = gammas;
    j["seeds"] = seeds;
    j["params"] = nlohmann::json::parse(params.to_json());
    j["output_dir"] = output_dir;
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ExperimentConfig c;
    const int version = j.value("schema_version", c.schema_version);
    if (version != 1) {
        throw std::invalid_argument("ExperimentConfig: unsupported schema_version " +
                                    std::to_string(version));
    }
    c.link_count = j.value("link_count", c.link_count);
    c.user_count = j.value("user_count", c.user_count);
    c.target_route_length = j.value("target_route_length", c.target_route_length);
    c.total_steps = j.value("total_steps", c.total_steps);
    c.policies = j.value("policies", c.policies);
    c.gammas = j.value("gammas", c.gammas);
    c.seeds = j.value("seeds", c.seeds);
    if (j.contains("params")) c.params = SystemParams::from_json(j["params"].dump());
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

void ExperimentConfig::save(const std::string& path) const {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("ExperimentConfig::save: cannot open " + path);
    const std::string text = to_json() + "\n";
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("ExperimentConfig::load: cannot open " + path);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return from_json(buffer.str());
}

CampaignResult run_campaign(const ExperimentConfig& config) {
    if (config.seeds.empty()) throw std::invalid_argument("run_campaign: empty seed list");
    if (config.policies.empty()) throw std::invalid_argument("run_campaign: empty policy list");
    const std::vector<RunGroup> groups = build_groups(config);
    std::filesystem::create_directories(config.output_dir);

    CampaignResult result;
    nlohmann::json summary;
    summary["schema_version"] = 1;
    summary["config"] = nlohmann::json::parse(config.to_json());
    summary["groups"] = nlohmann::json::array();
    summary["failures"] = nlohmann::json::array();

    for (const RunGroup& group : groups) {
        nlohmann::json entry;
        entry["label"] = group.label;
        if (group.kind == PolicyKind::Foresighted) entry["gamma"] = group.gamma;
        entry["seeds"] = nlohmann::json::array();

        // Per-seed metric series, kept in memory for aggregation.
        std::vector<std::vector<double>> links_series, users_series;
        for (std::uint64_t seed : config.seeds) {
            const NetworkInstance inst = generate_network(seed, config.link_count,
                                                          config.user_count,
                                                          config.target_route_length);
            RunConfig rc;
            rc.policy = group.kind;
            rc.gamma = group.gamma;
            rc.total_steps = config.total_steps;
            rc.seed = seed;
            try {
                const Trace trace = run(inst, rc, config.params);
                const std::string file = config.output_dir + "/" + group.label + "_seed" +
                                         std::to_string(seed) + ".csv";
                trace.write_csv(file);
                result.trace_files.push_back(file);
                entry["seeds"].push_back(seed);
                links_series.push_back(trace.e_links);
                users_series.push_back(trace.e_users);
            } catch (const std::exception& e) {
                result.failed_runs += 1;
                summary["failures"].push_back({{"label", group.label},
                                               {"seed", seed},
                                               {"error", e.what()}});
            }
        }

        entry["runs"] = links_series.size();
        nlohmann::json per_step;
        per_step["e_links_mean"] = nlohmann::json::array();
        per_step["e_links_std"] = nlohmann::json::array();
        per_step["e_users_mean"] = nlohmann::json::array();
        per_step["e_users_std"] = nlohmann::json::array();
        const std::size_t steps = links_series.empty() ? 0 : links_series.front().size();
        std::vector<double> column(links_series.size());
        for (std::size_t t = 0; t < steps; ++t) {
            double mean = 0.0, stddev = 0.0;
            for (std::size_t r = 0; r < links_series.size(); ++r) column[r] = links_series[r][t];
            mean_std(column, mean, stddev);
            per_step["e_links_mean"].push_back(mean);
            per_step["e_links_std"].push_back(stddev);
            for (std::size_t r = 0; r < users_series.size(); ++r) column[r] = users_series[r][t];
            mean_std(column, mean, stddev);
            per_step["e_users_mean"].push_back(mean);
            per_step["e_users_std"].push_back(stddev);
        }
        entry["per_step"] = per_step;

        nlohmann::json final_snapshot;
        if (steps > 0) {
            std::vector<double> final_links, final_users;
            for (const auto& s : links_series) final_links.push_back(s.back());
            for (const auto& s : users_series) final_users.push_back(s.back());
            double mean = 0.0, stddev = 0.0;
            mean_std(final_links, mean, stddev);
            final_snapshot["e_links_mean"] = mean;
            final_snapshot["e_links_std"] = stddev;
            mean_std(final_users, mean, stddev);
            final_snapshot["e_users_mean"] = mean;
            final_snapshot["e_users_std"] = stddev;
            final_snapshot["e_links_per_seed"] = final_links;
            final_snapshot["e_users_per_seed"] = final_users;
        }
        entry["final"] = final_snapshot;
        summary["groups"].push_back(entry);
    }

    result.summary_file = config.output_dir + "/summary.json";
    std::ofstream file(result.summary_file, std::ios::binary);
    if (!file) throw std::runtime_error("run_campaign: cannot open " + result.summary_file);
    const std::string text = summary.dump(2) + "\n";
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    return result;
}

}  // namespace caplearn
