#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gatslice/config.hpp"
#include "gatslice/error.hpp"
#include "gatslice/plotdata.hpp"
#include "gatslice/selftest.hpp"
#include "gatslice/trainer.hpp"

namespace fs = std::filesystem;
using namespace gatslice;

namespace {

struct RunOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> algorithm;
    std::optional<std::string> resume;
};

void add_run_flags(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--config", o.config, "INI run configuration (defaults when omitted)")->check(CLI::ExistingFile);
    cmd->add_option("--override", o.overrides, "section.key=value, applied after the file (repeatable)");
    cmd->add_option("--seed", o.seed, "Sets run.seed");
    cmd->add_option("--out", o.out, "Sets run.output");
    cmd->add_option("--algorithm", o.algorithm, "Sets run.algorithm")
        ->check(CLI::IsMember({"hard", "dqn", "gat-dqn", "a2c", "gat-a2c"}));
}

// File, then --override, then the dedicated flags, then `extra`.
std::vector<std::string> collect_overrides(const RunOptions& o, const std::vector<std::string>& extra = {}) {
    std::vector<std::string> all = o.overrides;
    if (o.seed) all.push_back("run.seed=" + std::to_string(*o.seed));
    if (o.out) all.push_back("run.output=" + *o.out);
    if (o.algorithm) all.push_back("run.algorithm=" + *o.algorithm);
    all.insert(all.end(), extra.begin(), extra.end());
    return all;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void execute(RunConfig cfg, const std::optional<std::string>& resume) {
    const fs::path out = cfg.output;
    fs::create_directories(out);
    write_text(out / "resolved.config", render_run_config(cfg));
    cfg.experiment.out_dir = out;
    cfg.experiment.log = &std::cout;
    if (resume) cfg.experiment.resume_from = fs::path(*resume);
    const ExperimentResult r = run_experiment(cfg.experiment);
    const std::size_t tail = std::min<std::size_t>(500, r.periods.size());
    std::printf("done: %s, final %zu periods mean utility %.4f mean ssr %.4f, reward clips %ld\n", out.c_str(), tail,
                tail_mean(r.periods, tail, &PeriodSummary::utility), tail_mean(r.periods, tail, &PeriodSummary::mean_ssr),
                r.reward_clips);
}

int cmd_run(const RunOptions& o) {
    execute(load_run_config(o.config, collect_overrides(o)), o.resume);
    return 0;
}

int cmd_sweep(const RunOptions& o, const std::string& sweep_file, const std::vector<std::string>& vary) {
    const auto combos = expand_sweep(sweep_file.empty() ? std::string() : read_text(sweep_file), vary);
    const fs::path root = load_run_config(o.config, collect_overrides(o)).output;
    fs::create_directories(root);
    // Validate every combination before running any.
    std::vector<RunConfig> configs;
    for (std::size_t i = 0; i < combos.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu", i);
        auto extra = combos[i];
        extra.push_back("run.output=" + (root / name).string());
        configs.push_back(load_run_config(o.config, collect_overrides(o, extra)));
    }
    std::ofstream index(root / "sweep.csv", std::ios::trunc);
    index << "run,overrides\n";
    for (std::size_t i = 0; i < combos.size(); ++i) {
        std::string joined;
        for (const auto& c : combos[i]) joined += (joined.empty() ? "" : " ") + c;
        index << fs::path(configs[i].output).filename().string() << ",\"" << joined << "\"\n";
    }
    index.close();
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::printf("sweep %zu/%zu: %s\n", i + 1, configs.size(), configs[i].output.c_str());
        execute(configs[i], std::nullopt);
    }
    return 0;
}

int cmd_selftest() {
    int failed = 0;
    for (const CheckResult& c : run_selftest()) {
        std::printf("%s %s (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        failed += c.passed ? 0 : 1;
    }
    std::printf("%d check(s) failed\n", failed);
    return failed == 0 ? 0 : 1;
}

int cmd_plotdata(const std::string& run_dir, const std::string& output, std::size_t window) {
    const std::string csv = tidy_plot_data(read_metrics_csv(fs::path(run_dir) / "metrics.csv"), window);
    if (output == "-") {
        std::cout << csv;
    } else {
        const fs::path path = output.empty() ? fs::path(run_dir) / "plotdata.csv" : fs::path(output);
        write_text(path, csv);
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent network slicing simulator and learners"};
    app.require_subcommand(1);

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Run one experiment");
    add_run_flags(run, run_opts);
    run->add_option("--resume", run_opts.resume, "Checkpoint directory to resume from")->check(CLI::ExistingDirectory);

    RunOptions sweep_opts;
    std::string sweep_file;
    std::vector<std::string> vary;
    auto* sweep = app.add_subcommand("sweep", "Run one experiment per override combination");
    add_run_flags(sweep, sweep_opts);
    sweep->add_option("--sweep", sweep_file, "File with one line of overrides per run")->check(CLI::ExistingFile);
    sweep->add_option("--vary", vary, "section.key=v1|v2|... (repeatable, crossed with the file lines)");

    auto* selftest = app.add_subcommand("selftest", "Gradient, codec, attention and toy-oracle checks");

    std::string plot_dir;
    std::string plot_out;
    std::size_t window = 50;
    auto* plot = app.add_subcommand("plotdata", "Tidy CSV of per-period means and rolling medians");
    plot->add_option("run_dir", plot_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);
    plot->add_option("-o,--output", plot_out, "Output file, '-' for stdout (default <run_dir>/plotdata.csv)");
    plot->add_option("--window", window, "Rolling median window")->check(CLI::PositiveNumber);

    RunOptions show_opts;
    auto* show = app.add_subcommand("config", "Print the resolved configuration");
    add_run_flags(show, show_opts);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(run_opts);
        if (*sweep) return cmd_sweep(sweep_opts, sweep_file, vary);
        if (*selftest) return cmd_selftest();
        if (*plot) return cmd_plotdata(plot_dir, plot_out, window);
        if (*show) {
            std::cout << render_run_config(load_run_config(show_opts.config, collect_overrides(show_opts)));
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
