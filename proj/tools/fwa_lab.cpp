#include <fwa/experiments.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

/// Accepts "1,2,3" and inclusive ranges such as "1-5".
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        const auto dash = part.find('-');
        try {
            if (dash == std::string::npos) {
                seeds.push_back(std::stoull(part));
            } else {
                const auto lo = std::stoull(part.substr(0, dash));
                const auto hi = std::stoull(part.substr(dash + 1));
                if (hi < lo) {
                    throw fwa::ConfigError("empty seed range '" + part + "'");
                }
                for (auto s = lo; s <= hi; ++s) {
                    seeds.push_back(s);
                }
            }
        } catch (const std::logic_error&) {
            throw fwa::ConfigError("cannot read seed list '" + text + "'");
        }
    }
    if (seeds.empty()) {
        throw fwa::ConfigError("--seeds needs at least one seed");
    }
    return seeds;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite weight averaging lab: training, stability, convergence and bound audits"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::optional<std::string> out_dir;
    std::optional<std::string> seeds;
    std::optional<std::size_t> workers;
    std::vector<std::string> overrides;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"gen-data", "Generate or load a dataset and write data/train/test CSVs"},
        {"train", "Train every scheme per seed and write trajectories and a summary"},
        {"stability", "Twin-dataset stability sweep: parameter distance and generalization error"},
        {"convergence", "Per-step suboptimality of the averaged models against a reference minimizer"},
        {"bounds", "Evaluate the closed-form bounds on a grid and audit their invariants"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
        sub->add_option("--seeds", seeds, "Seed list, e.g. 1,2,3 or 1-5 (overrides seeds)");
        sub->add_option("--workers", workers, "Concurrent sweep cells (overrides workers)");
        sub->add_option("--set", overrides, "Override a config value: key.path=value (repeatable)");
    }
    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (out_dir) {
            overrides.push_back("output_dir=\"" + *out_dir + "\"");
        }
        if (seeds) {
            fwa::Json list = fwa::Json::array();
            for (auto s : parse_seed_list(*seeds)) {
                list.push_back(s);
            }
            overrides.push_back("seeds=" + list.dump());
        }
        if (workers) {
            overrides.push_back("workers=" + std::to_string(*workers));
        }
        std::optional<std::filesystem::path> path;
        if (config_path) {
            path = *config_path;
        }
        const fwa::ExperimentConfig cfg = fwa::load_config(path, overrides);
        const fwa::ExperimentOutcome outcome = fwa::run_command(command, cfg);
        for (const auto& message : outcome.messages) {
            std::cout << message << '\n';
        }
        for (const auto& file : outcome.files) {
            std::cout << "wrote " << file.string() << '\n';
        }
        return outcome.exit_code;
    } catch (const fwa::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
    } catch (const fwa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
    } catch (const fwa::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
    } catch (const fwa::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
    } catch (const fwa::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return 2;
}
