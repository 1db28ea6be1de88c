#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "caplearn/experiment.hpp"

namespace {

caplearn::SystemParams load_params(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open params file " + path);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return caplearn::SystemParams::from_json(buffer.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Overlay rate allocation with online capacity inference"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    int links = 12;
    int users = 200;
    int route_length = 4;
    std::string out = "instance.json";
    auto* generate = app.add_subcommand("generate", "Generate a random network instance");
    generate->add_option("--seed", seed, "Instance seed");
    generate->add_option("--links", links, "Number of overlay links (M)");
    generate->add_option("--users", users, "Number of users (N)");
    generate->add_option("--route-length", route_length, "Target mean route length");
    generate->add_option("-o,--out", out, "Output instance file");
    generate->callback([&] {
        const caplearn::NetworkInstance inst =
            caplearn::generate_network(seed, links, users, route_length);
        inst.save(out);
        const caplearn::GraphStats stats = caplearn::graph_stats(inst.topology);
        std::printf("wrote %s: M=%d N=%d L_R=%.3f L_C=%.3f\n", out.c_str(),
                    inst.topology.link_count, inst.topology.user_count,
                    stats.mean_route_length, stats.mean_coupled_links);
    });

    std::string instance_path;
    std::string policy = "greedy";
    std::string params_path;
    std::string trace_out = "trace.csv";
    double gamma = 0.99;
    int steps = 1800;
    std::uint64_t run_seed = 1;
    auto* single = app.add_subcommand("run", "Run the closed loop on one instance");
    single->add_option("-i,--instance", instance_path, "Instance file")->required();
    single->add_option("--policy", policy, "greedy or foresighted");
    single->add_option("--gamma", gamma, "Discount factor (foresighted)");
    single->add_option("--steps", steps, "Inner-loop steps");
    single->add_option("--seed", run_seed, "Run seed (feedback and consensus streams)");
    single->add_option("--params", params_path, "System parameters JSON");
    single->add_option("-o,--out", trace_out, "Trace CSV path");
    single->callback([&] {
        const caplearn::NetworkInstance inst = caplearn::NetworkInstance::load(instance_path);
        caplearn::RunConfig rc;
        if (policy == "greedy") {
            rc.policy = caplearn::PolicyKind::Greedy;
        } else if (policy == "foresighted") {
            rc.policy = caplearn::PolicyKind::Foresighted;
        } else {
            throw std::runtime_error("unknown policy '" + policy + "'");
        }
        rc.gamma = gamma;
        rc.total_steps = steps;
        rc.seed = run_seed;
        const caplearn::Trace trace = caplearn::run(inst, rc, load_params(params_path));
        trace.write_csv(trace_out);
        std::printf("wrote %s: final e_links=%.3f%% e_users=%.3f%% (%d outer updates)\n",
                    trace_out.c_str(), trace.e_links.back(), trace.e_users.back(),
                    trace.outer_updates.back());
    });

    std::string config_path;
    std::string out_dir;
    auto* campaign = app.add_subcommand("campaign", "Run a seeded campaign from a config file");
    campaign->add_option("-c,--config", config_path, "Campaign config JSON")->required();
    campaign->add_option("--out-dir", out_dir, "Override the configured output directory");
    campaign->callback([&] {
        caplearn::ExperimentConfig cfg = caplearn::ExperimentConfig::load(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        const caplearn::CampaignResult result = caplearn::run_campaign(cfg);
        std::printf("%zu trace files, %d failed runs, summary at %s\n",
                    result.trace_files.size(), result.failed_runs,
                    result.summary_file.c_str());
    });

    std::string oracle_instance;
    std::string oracle_out;
    auto* oracle = app.add_subcommand("oracle", "Compute the optimal rates x* for an instance");
    oracle->add_option("-i,--instance", oracle_instance, "Instance file")->required();
    oracle->add_option("-o,--out", oracle_out, "Output file (stdout if omitted)");
    oracle->callback([&] {
        const caplearn::NetworkInstance inst = caplearn::NetworkInstance::load(oracle_instance);
        const std::vector<double> x_star = caplearn::oracle_rates(inst);
        std::string text = "user,x_star\n";
        char buf[48];
        for (std::size_t n = 0; n < x_star.size(); ++n) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", n, x_star[n]);
            text += buf;
        }
        if (oracle_out.empty()) {
            std::fputs(text.c_str(), stdout);
        } else {
            std::ofstream file(oracle_out, std::ios::binary);
            if (!file) throw std::runtime_error("cannot open " + oracle_out);
            file.write(text.data(), static_cast<std::streamsize>(text.size()));
            std::printf("wrote %s\n", oracle_out.c_str());
        }
    });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
