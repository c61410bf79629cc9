#pragma once

#include "aggdiff/rates.hpp"
#include "aggdiff/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aggdiff {

/// Bad config text, unknown key, or unknown kind.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `section.key = value` settings, kept as text so they can be echoed verbatim.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
/// Throws ConfigError("config not found: ...") if the file is missing.
ConfigMap load_config_file(const std::filesystem::path& path);
/// Applies "key=value"; the key must be known.
void apply_override(ConfigMap& cfg, const std::string& assignment);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
ConfigMap preset_config(const std::string& name);

/// Every key accepted in a config, with its default.
const ConfigMap& config_defaults();

struct ExperimentConfig {
    std::string name = "experiment";
    int dim = 1;
    double half_width = 10.0;
    std::size_t cells = 256;

    std::string potential_kind = "zero";
    std::vector<std::pair<std::string, double>> potential_params;

    std::string initial_kind = "gaussian";
    Point mean{};
    double variance = 1.0;
    std::vector<MixtureComponent> components;
    double box_lo = -1.0;
    double box_hi = 1.0;

    SolverConfig solver;

    bool e2 = true;
    std::vector<double> holder_alphas;
    bool fractional_checks = false;
    bool snapshots = false;

    std::pair<double, double> e1_window{1.0, 4.0};
    std::pair<double, double> l1_window{1.0, 4.0};
    std::pair<double, double> e2_window{1.0, 4.0};
    std::pair<double, double> n2_window{1.0, 4.0};

    std::string out_dir = "out";
    std::uint64_t seed = 0;

    ConfigMap echo;
};

/// Typed view of a config; rejects unknown keys and kinds.
ExperimentConfig build_config(const ConfigMap& cfg);

DensityField initial_density(const ExperimentConfig& cfg);
PotentialSpec potential_of(const ExperimentConfig& cfg);

struct InvariantResult {
    std::string name;
    bool pass = true;
    double worst = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct ExperimentResult {
    RunResult run;
    std::map<std::string, std::optional<RateFit>> fits;
    std::map<std::string, std::string> fit_errors;
    TheoremReport report;
    std::vector<InvariantResult> invariants;
    std::vector<std::string> fractional_lines;
    bool ok() const;
};

struct ExperimentOptions {
    bool write_outputs = true;
    std::function<void(const std::string&)> log;
};

/// Runs the simulation and writes series.csv, summary.json and plots/*.svg under cfg.out_dir.
/// series.csv is streamed row by row, so it survives a solver abort.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& options = {});

/// Inequality and conservation checks over a finished run.
std::vector<InvariantResult> check_invariants(const std::vector<DiagnosticsRecord>& records, int dim,
                                              double initial_mass, bool completed);

/// Fits of E1, l1_dist_G, E2 and |N2 - n| with the windows of `cfg`.
void fit_series(const ExperimentConfig& cfg, const std::vector<DiagnosticsRecord>& records, ExperimentResult& out);

/// "%.17g"-formatted CSV cell.
std::string format_csv_number(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    /// Throws std::out_of_range for unknown columns.
    std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Minimal line plot; `log_x`/`log_y` use base-10 axes and drop nonpositive points.
std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<double>& x, const std::vector<double>& y, bool log_x, bool log_y);

}  // namespace aggdiff
