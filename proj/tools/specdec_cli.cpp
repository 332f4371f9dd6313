#include "specdec/experiment.hpp"
#include "specdec/trace.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads_override,
            long long seed_override) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open config file " << config_path << "\n";
        return 1;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();

    specdec::ExperimentConfig cfg;
    try {
        cfg = specdec::parse_experiment_config(buffer.str());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (threads_override > 0) cfg.threads = threads_override;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (const char* env_seed = std::getenv("SPECDEC_SEED")) {
        try {
            cfg.seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            std::cerr << "error: SPECDEC_SEED is not a non-negative integer: " << env_seed << "\n";
            return 1;
        }
    }

    fs::create_directories(out_dir);
    const fs::path csv_path = fs::path(out_dir) / cfg.csv_name;

    try {
        std::ofstream trace_out;
        std::unique_ptr<specdec::JsonlTraceSink> sink;
        if (!cfg.trace_name.empty()) {
            const fs::path trace_path = fs::path(out_dir) / cfg.trace_name;
            trace_out.open(trace_path);
            if (!trace_out) {
                std::cerr << "error: cannot open trace output " << trace_path.string() << "\n";
                return 1;
            }
            sink = std::make_unique<specdec::JsonlTraceSink>(trace_out);
        }

        const auto result = specdec::run_experiment(cfg, sink.get());

        std::ofstream csv_out(csv_path);
        if (!csv_out) {
            std::cerr << "error: cannot open csv output " << csv_path.string() << "\n";
            return 1;
        }
        csv_out << result.csv;

        std::cout << "wrote " << result.cells.size() << " grid cells to " << csv_path.string()
                  << "\n";
        for (const auto& cell : result.cells) {
            std::cout << "  " << cell.method << (cell.tree != "-" ? " [" + cell.tree + "]" : "")
                      << (cell.lambda != "-" ? " lambda=" + cell.lambda : "")
                      << (cell.delta != "-" ? " delta=" + cell.delta : "") << ": S=" << cell.mean_S
                      << " (stderr " << cell.stderr_S << ")\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cmd_trace(const std::string& trace_path, bool plot) {
    std::ifstream in(trace_path);
    if (!in) {
        std::cerr << "error: cannot open trace file " << trace_path << "\n";
        return 1;
    }
    specdec::TraceReport report;
    try {
        report = specdec::analyze_trace(in);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << specdec::format_report(report);
    if (plot) {
        const fs::path stem = fs::path(trace_path).stem();
        const fs::path dir = fs::path(trace_path).parent_path();
        const fs::path v_path = dir / (stem.string() + "_vdepth.svg");
        const fs::path h_path = dir / (stem.string() + "_acceptlen.svg");
        std::ofstream(v_path) << specdec::render_v_decay_svg(report);
        std::ofstream(h_path) << specdec::render_accept_hist_svg(report);
        std::cout << "plots: " << v_path.string() << ", " << h_path.string() << "\n";
    }
    return 0;
}

int cmd_dump_tree(const std::string& name) {
    try {
        std::cout << specdec::tree_preset(name).dump();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"specdec - speculative decoding laboratory on synthetic model oracles"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", trace_path, preset_name;
    int threads = 0;
    long long seed = -1;
    bool plot = false;

    auto* run = app.add_subcommand("run", "run an experiment config and write the result CSV");
    run->add_option("config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory (default: current directory)");
    run->add_option("--threads", threads, "worker threads (0 = from config)");
    run->add_option("--seed", seed, "override the config seed");

    auto* trace = app.add_subcommand("trace", "analyze a JSON-lines decode trace");
    trace->add_option("file", trace_path, "trace file")->required();
    trace->add_flag("--plot", plot, "write SVG plots next to the trace file");

    auto* dump = app.add_subcommand("dump-tree", "print an embedded static tree preset");
    dump->add_option("name", preset_name, "preset name")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, out_dir, threads, seed);
    if (trace->parsed()) return cmd_trace(trace_path, plot);
    return cmd_dump_tree(preset_name);
}
