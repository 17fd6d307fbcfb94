// beamsim: Monte-Carlo driver for constrained-CM adaptive beamforming.
//
//   beamsim run --config <file> --runs <K> --seed <u64> --out <csv>
//               [--mechanisms fss,ass,mass,taass] [--counters] [--bound-report]
//               [--summary] [--workers <n>]
//   beamsim presets list
//   beamsim presets dump <name>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "beamsim/beamsim.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_csv(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Blind adaptive beamforming simulator (CCM stochastic gradient, FSS/ASS/MASS/TAASS)"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a Monte-Carlo experiment and write averaged SINR traces");
    std::string config_path;
    std::string preset;
    std::string out_path;
    std::string mechanisms;
    std::optional<std::size_t> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> snapshots;
    bool counters = false;
    bool bound_report = false;
    bool summary = false;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    auto* source = run->add_option_group("source");
    source->add_option("--config", config_path, "Scenario file")->check(CLI::ExistingFile);
    source->add_option("--preset", preset, "Bundled scenario name (see 'presets list')");
    source->require_option(1);
    run->add_option("--runs", runs, "Monte-Carlo runs (overrides [run] runs)")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Master seed (overrides [run] seed)");
    run->add_option("--snapshots", snapshots, "Snapshots per run (overrides [run] snapshots)")
        ->check(CLI::PositiveNumber);
    run->add_option("--out", out_path, "Output CSV path")->required();
    run->add_option("--mechanisms", mechanisms, "Comma-separated subset of mechanism labels to run");
    run->add_flag("--counters", counters, "Append per-update operation counts to the CSV");
    run->add_flag("--bound-report", bound_report, "Add the step-size bound diagnostic to <out>.summary");
    run->add_flag("--summary", summary, "Write <out>.summary (implied by --bound-report)");
    run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

    auto* presets = app.add_subcommand("presets", "List or print bundled scenario files");
    presets->require_subcommand(1);
    auto* list = presets->add_subcommand("list", "List preset names");
    auto* dump = presets->add_subcommand("dump", "Print a preset's scenario file");
    std::string dump_name;
    dump->add_option("name", dump_name, "Preset name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& name : beamsim::preset_names()) std::cout << name << '\n';
            return 0;
        }
        if (dump->parsed()) {
            std::cout << beamsim::preset_text(dump_name);
            return 0;
        }

        beamsim::ExperimentSpec spec =
            preset.empty() ? beamsim::parse_config(read_file(config_path)) : beamsim::load_preset(preset);
        if (runs) spec.scenario.runs = *runs;
        if (seed) spec.scenario.master_seed = *seed;
        if (snapshots) spec.scenario.snapshots = *snapshots;
        if (!mechanisms.empty()) {
            std::vector<beamsim::MechanismSpec> selected;
            for (const auto& label : split_csv(mechanisms)) {
                auto it = std::find_if(spec.mechanisms.begin(), spec.mechanisms.end(),
                                       [&](const auto& m) { return m.label == label; });
                if (it == spec.mechanisms.end()) throw std::runtime_error("no mechanism labelled '" + label + "'");
                selected.push_back(*it);
            }
            spec.mechanisms = std::move(selected);
        }

        const auto traces = beamsim::monte_carlo(spec, {.workers = workers});
        beamsim::emit_csv(traces, out_path, {.counters = counters});
        if (summary || bound_report) {
            beamsim::emit_summary(spec.scenario, traces, bound_report, out_path + ".summary");
        }
        for (const auto& t : traces) {
            if (t.diverged > 0) {
                std::cerr << "warning: " << t.mechanism << ": " << t.diverged << " of " << (t.runs + t.diverged)
                          << " runs diverged and were excluded from the averages\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "beamsim: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
