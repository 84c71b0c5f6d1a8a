// vancorisk: vancomycin-associated creatinine elevation modeling pipeline.
// Runs the full pipeline or any single stage on serialized intermediates.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vancorisk/pipeline.hpp"
#include "vancorisk/version.hpp"

namespace {

using vancorisk::pipeline::RunConfig;

RunConfig load_config(const std::string& config_path, std::uint64_t seed_override,
                      bool seed_given, const std::string& out_override,
                      int threads_override) {
    nlohmann::json j;
    if (!config_path.empty()) {
        j = vancorisk::io::read_json(config_path);
    } else {
        vancorisk::require(seed_given, "invalid-config",
                           "either --config or --seed must be given");
        j = {{"seed", seed_override}};
    }
    if (seed_given) j["seed"] = seed_override;
    auto cfg = vancorisk::pipeline::parse_config(j);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (const char* env_out = std::getenv("VANCORISK_OUT"); env_out && out_override.empty())
        cfg.out_dir = env_out;
    if (threads_override > 0) cfg.threads = threads_override;
    if (const char* env_thr = std::getenv("VANCORISK_THREADS");
        env_thr && threads_override <= 0)
        cfg.threads = std::max(1, std::atoi(env_thr));
    return cfg;
}

int fail_with_record(const std::string& stage, const std::string& code,
                     const std::string& message) {
    nlohmann::json err{{"stage", stage}, {"code", code}, {"message", message}};
    std::cerr << err.dump() << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vancomycin-associated creatinine elevation pipeline"};
    app.set_version_flag("--version", vancorisk::kVersion);

    std::string config_path, out_dir, stage;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;

    app.add_option("--config", config_path, "run configuration JSON");
    app.add_option("--seed", seed, "seed override")->each([&](const std::string&) {
        seed_given = true;
    });
    app.add_option("--out", out_dir, "artifact directory override");
    app.add_option("--threads", threads, "worker thread cap");
    app.add_option("--stage", stage, "run a single stage by name");

    app.add_subcommand("run", "execute the full pipeline")->fallthrough();
    for (const auto& name : vancorisk::pipeline::stage_names())
        app.add_subcommand(name, "run the '" + name + "' stage")->fallthrough();

    CLI11_PARSE(app, argc, argv);

    std::string selected = stage;
    for (const auto* sub : app.get_subcommands())
        selected = sub->get_name();

    std::string running = "config";
    try {
        const auto cfg = load_config(config_path, seed, seed_given, out_dir, threads);
        if (selected.empty() || selected == "run") {
            running = "run";
            const auto dir = vancorisk::pipeline::run_pipeline(cfg);
            std::cout << "artifacts written to " << dir.string() << "\n";
        } else {
            running = selected;
            const auto record = vancorisk::pipeline::run_stage(cfg, selected);
            std::cout << "stage " << record.name << " done ("
                      << static_cast<int>(record.wall_ms) << " ms)\n";
        }
    } catch (const vancorisk::Error& e) {
        return fail_with_record(running, e.code(), e.what());
    } catch (const std::exception& e) {
        return fail_with_record(running, "internal-error", e.what());
    }
    return 0;
}
