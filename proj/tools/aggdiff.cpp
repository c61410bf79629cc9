// aggdiff: run presets and configs, re-fit stored series, run property suites.
#include "aggdiff/checks.hpp"
#include "aggdiff/experiment.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;
using namespace aggdiff;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Source {
    std::string preset;
    std::string config;
};

ConfigMap load_source(const Source& src)
{
    if (!src.preset.empty() && !src.config.empty()) throw ConfigError("use either --preset or --config, not both");
    if (!src.preset.empty()) return preset_config(src.preset);
    if (!src.config.empty()) return load_config_file(src.config);
    throw ConfigError("one of --preset or --config is required");
}

void apply_common(ConfigMap& cfg, const std::vector<std::string>& overrides, const std::string& out,
                  const std::optional<std::uint64_t>& seed)
{
    for (const auto& o : overrides) apply_override(cfg, o);
    if (!out.empty()) cfg["output.dir"] = out;
    if (seed) cfg["run.seed"] = std::to_string(*seed);
}

void print_result(const ExperimentConfig& cfg, const ExperimentResult& r, std::ostream& os)
{
    os << format_report_table(r.report);
    for (const auto& inv : r.invariants) {
        os << (inv.pass ? "PASS " : "FAIL ") << inv.name << "  worst=" << inv.worst << " tol=" << inv.tolerance;
        if (!inv.detail.empty()) os << "  (" << inv.detail << ")";
        os << "\n";
    }
    for (const auto& line : r.fractional_lines) os << line << "\n";
    if (!r.run.completed) os << "solver aborted at time " << r.run.error_time << ": " << r.run.error << "\n";
    os << "outputs in " << cfg.out_dir << " (" << r.run.records.size() << " records, " << r.run.steps << " steps, "
       << r.run.runtime_seconds << " s)\n";
}

int cmd_run(const Source& src, const std::vector<std::string>& overrides, const std::string& out,
            const std::optional<std::uint64_t>& seed, bool quiet)
{
    ExperimentConfig cfg;
    try {
        ConfigMap raw = load_source(src);
        apply_common(raw, overrides, out, seed);
        cfg = build_config(raw);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    ExperimentOptions opts;
    if (!quiet) opts.log = [](const std::string& line) { std::cerr << line << "\n"; };
    const auto result = run_experiment(cfg, opts);
    print_result(cfg, result, std::cout);
    return result.ok() ? 0 : kExitFailure;
}

int cmd_rates(const std::string& csv, const std::string& column, const std::string& window,
              const std::string& modifier, const std::optional<double>& floor, std::optional<int> dim)
{
    CsvTable table;
    try {
        table = read_csv(csv);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    std::vector<double> values;
    try {
        if (column == "N2_minus_n") {
            if (!dim) {
                const auto summary = fs::path(csv).parent_path() / "summary.json";
                std::ifstream in(summary);
                if (!in) throw std::runtime_error("N2_minus_n needs --dim or a summary.json beside the series");
                const auto j = nlohmann::json::parse(in);
                dim = std::stoi(j.at("config_echo").at("grid.dim").get<std::string>());
            }
            const auto n2 = table.column("second_moment");
            const auto mass = table.column("mass");
            for (std::size_t i = 0; i < n2.size(); ++i) values.push_back(std::abs(n2[i] - *dim * mass[i]));
        } else {
            values = table.column(column);
        }
    } catch (const std::out_of_range& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    try {
        const auto w = parse_config_text("w = " + window);
        std::vector<double> ab;
        std::stringstream ss(w.at("w"));
        std::string part;
        while (std::getline(ss, part, ',')) ab.push_back(std::stod(part));
        if (ab.size() != 2) throw std::invalid_argument("window must be 'a,b'");
        const auto fit = fit_decay(table.column("tau"), values, {ab[0], ab[1]}, modifier_from_string(modifier), floor);
        nlohmann::ordered_json j{{"column", column},
                                 {"slope", fit.slope},
                                 {"intercept", fit.intercept},
                                 {"r_squared", fit.r_squared},
                                 {"window", {fit.window_begin, fit.window_end}},
                                 {"modifier", to_string(fit.modifier)},
                                 {"n_points", fit.n_points},
                                 {"floor", fit.floor}};
        std::cout << j.dump(2) << "\n";
    } catch (const std::exception& e) {
        std::cerr << "fit failed: " << e.what() << "\n";
        return kExitFailure;
    }
    return 0;
}

int cmd_check(const std::string& suite, std::uint64_t seed)
{
    std::vector<CheckLine> lines;
    try {
        lines = run_check_suite(suite, seed);
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << " (known: ";
        for (const auto& n : check_suite_names()) std::cerr << n << " ";
        std::cerr << ")\n";
        return kExitUsage;
    }
    bool ok = true;
    for (const auto& l : lines) {
        std::cout << (l.pass ? "PASS " : "FAIL ") << l.name;
        if (!l.detail.empty()) std::cout << "  [" << l.detail << "]";
        std::cout << "\n";
        ok = ok && l.pass;
    }
    std::cout << suite << ": " << (ok ? "all pass" : "FAILURES") << "\n";
    return ok ? 0 : kExitFailure;
}

int cmd_sweep(const std::vector<std::string>& presets, const std::vector<std::string>& configs,
              const std::vector<std::string>& vary, const std::vector<std::string>& overrides, const std::string& out,
              const std::optional<std::uint64_t>& seed, unsigned jobs)
{
    std::vector<ExperimentConfig> runs;
    try {
        std::vector<std::pair<std::string, ConfigMap>> bases;
        for (const auto& p : presets) bases.emplace_back(p, preset_config(p));
        for (const auto& c : configs) bases.emplace_back(fs::path(c).stem().string(), load_config_file(c));
        if (bases.empty()) throw ConfigError("sweep needs at least one --preset or --config");

        // Cartesian product of --vary key=v1,v2,...
        std::vector<std::vector<std::pair<std::string, std::string>>> combos{{}};
        for (const auto& v : vary) {
            const auto eq = v.find('=');
            if (eq == std::string::npos) throw ConfigError("--vary must be key=v1,v2,...");
            const std::string key = v.substr(0, eq);
            std::vector<std::vector<std::pair<std::string, std::string>>> next;
            std::stringstream ss(v.substr(eq + 1));
            std::string val;
            std::vector<std::string> vals;
            while (std::getline(ss, val, ',')) vals.push_back(val);
            for (const auto& c : combos) {
                for (const auto& x : vals) {
                    auto d = c;
                    d.emplace_back(key, x);
                    next.push_back(d);
                }
            }
            combos = std::move(next);
        }
        const std::string root = out.empty() ? "sweep" : out;
        for (const auto& [name, base] : bases) {
            for (const auto& c : combos) {
                ConfigMap m = base;
                std::string tag = name;
                for (const auto& [k, v] : c) {
                    apply_override(m, k + "=" + v);
                    tag += "_" + k + "-" + v;
                }
                apply_common(m, overrides, "", seed);
                m["output.dir"] = (fs::path(root) / tag).string();
                runs.push_back(build_config(m));
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> all_ok{true};
    std::mutex io;
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            const auto r = run_experiment(runs[i]);
            std::lock_guard lock(io);
            std::cout << (r.ok() ? "ok   " : "FAIL ") << runs[i].out_dir << "  (" << r.run.runtime_seconds << " s)\n";
            if (!r.ok()) all_ok = false;
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return all_ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Aggregation-diffusion solver with entropy and decay-rate diagnostics"};
    app.require_subcommand(1);

    Source src;
    std::vector<std::string> overrides;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Simulate a preset or config file");
    run->add_option("--preset", src.preset, "Preset name")->check(CLI::IsMember(preset_names()));
    run->add_option("--config", src.config, "Config file (section.key = value lines)");
    run->add_option("--override", overrides, "Override key=value (repeatable)");
    run->add_option("--out", out, "Output directory");
    run->add_option("--seed", seed, "Random seed");
    run->add_flag("--quiet", quiet, "No progress lines");

    std::string csv, column = "E1", window = "1,4", modifier = "none";
    std::optional<double> floor;
    std::optional<int> dim;
    auto* rates = app.add_subcommand("rates", "Fit a decay rate to a stored series.csv");
    rates->add_option("series", csv, "series.csv path")->required();
    rates->add_option("--column", column, "Column (or N2_minus_n)");
    rates->add_option("--window", window, "Fit window a,b in tau");
    rates->add_option("--modifier", modifier, "none | div_by_1ptau | div_by_1ptau_sq");
    rates->add_option("--floor", floor, "Noise floor (default: 10x tail minimum)");
    rates->add_option("--dim", dim, "Dimension for N2_minus_n");

    std::string suite;
    std::uint64_t check_seed = 0;
    auto* check = app.add_subcommand("check", "Run a property suite");
    check->add_option("suite", suite, "quadrature | gaussian-oracles | convolution | fractional | appendix-c | lemma44-scaling")
        ->required();
    check->add_option("--seed", check_seed, "Random seed");

    std::vector<std::string> presets, configs, vary, sweep_overrides;
    std::string sweep_out;
    std::optional<std::uint64_t> sweep_seed;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep = app.add_subcommand("sweep", "Run several experiments in a worker pool");
    sweep->add_option("--preset", presets, "Preset (repeatable)")->check(CLI::IsMember(preset_names()));
    sweep->add_option("--config", configs, "Config file (repeatable)");
    sweep->add_option("--vary", vary, "key=v1,v2,... (repeatable; Cartesian product)");
    sweep->add_option("--override", sweep_overrides, "Override key=value for every run");
    sweep->add_option("--out", sweep_out, "Root output directory");
    sweep->add_option("--seed", sweep_seed, "Random seed");
    sweep->add_option("--jobs", jobs, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*run) return cmd_run(src, overrides, out, seed, quiet);
        if (*rates) return cmd_rates(csv, column, window, modifier, floor, dim);
        if (*check) return cmd_check(suite, check_seed);
        if (*sweep) return cmd_sweep(presets, configs, vary, sweep_overrides, sweep_out, sweep_seed, jobs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
