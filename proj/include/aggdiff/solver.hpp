#pragma once

#include "aggdiff/functionals.hpp"

#include <functional>
#include <memory>
#include <stdexcept>

namespace aggdiff {

enum class Frame { original, rescaled };
enum class Scheme { fv_ssprk2, fv_euler, imex_cn, heat_splitting };

std::string to_string(Frame f);
std::string to_string(Scheme s);
Frame frame_from_string(const std::string& s);
Scheme scheme_from_string(const std::string& s);

struct SolverConfig {
    Frame frame = Frame::rescaled;
    Scheme scheme = Scheme::fv_ssprk2;
    double cfl_safety = 0.4;
    /// tau_end in the rescaled frame, t_end in the original frame.
    double end_time = 1.0;
    /// Diagnostic cadence in frame time (delta tau or delta t).
    double output_every = 0.1;
    int kernel_refresh = 1;
    int kernel_subsamples = 8;
    int positivity_retry_limit = 8;
    DriftMode drift = DriftMode::potential_difference;
    double boundary_tolerance = 1e-8;
    /// Largest accepted step; 0 means unbounded (used by the splitting scheme when there is no drift).
    double max_dt = 0.0;

    void validate() const;
};

/// Step failure carrying the frame time at which it happened.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

/// A simulation in progress: frame time, density, and the interaction operator.
class Simulation {
public:
    Simulation(DensityField rho0, PotentialSpec W, SolverConfig config, double start_time = 0.0);

    double time() const { return time_; }
    const DensityField& density() const { return rho_; }
    const SolverConfig& config() const { return config_; }
    const PotentialSpec& potential() const { return W_; }
    std::size_t steps() const { return steps_; }
    double last_dt() const { return last_dt_; }
    double max_mass_drift() const { return max_mass_drift_; }

    /// Stable step size at the current state (before clipping to `limit`).
    double stable_dt();

    /// Advances by at most `max_step`; returns the accepted dt.
    double step(double max_step);

    /// Rescaled density at the current time (identity in the rescaled frame).
    DensityField rescaled_density() const;
    double current_tau() const;

private:
    // dρ/dt for the flux-form schemes with the given face drift.
    Field flux_rhs(std::span<const double> rho, const VectorField& drift) const;
    VectorField face_drift(std::span<const double> rho);
    double max_drift(const VectorField& drift) const;
    bool try_step(double dt, const VectorField& drift0, Field& out);
    bool imex_step(double dt, const VectorField& drift0, Field& out);
    bool splitting_step(double dt, Field& out);
    void refresh_kernel_if_due();
    void check_boundary() const;

    SolverConfig config_;
    PotentialSpec W_;
    DensityField rho_;
    InteractionOperator op_;
    double time_;
    std::size_t steps_ = 0;
    double last_dt_ = 0.0;
    // Face values of y_d in the rescaled frame; empty in the original frame.
    VectorField confinement_faces_;
    std::unique_ptr<Convolver> heat_conv_;
    double heat_dt_ = -1.0;
    double max_mass_drift_ = 0.0;
    double initial_mass_ = 0.0;
};

struct RunOptions {
    DiagnosticsOptions diagnostics;
    /// Optional directory for snapshot dumps at every output point.
    std::string snapshot_dir;
    /// Called with each finished record, in order, after its ODE residual is known.
    std::function<void(const DiagnosticsRecord&)> on_record;
    /// Progress lines "tau= t= dt= mass= min=" at output cadence.
    std::function<void(const std::string&)> log;
};

struct RunResult {
    std::vector<DiagnosticsRecord> records;
    bool completed = false;
    std::string error;
    double error_time = 0.0;
    double initial_mass = 0.0;
    double max_mass_drift = 0.0;
    std::size_t steps = 0;
    double runtime_seconds = 0.0;
    std::vector<std::string> snapshots;
};

/// Steps to config.end_time, emitting a DiagnosticsRecord at every output point.
/// Solver failures are captured in the result (completed = false) with the records so far.
RunResult run(const DensityField& rho0, const PotentialSpec& W, const SolverConfig& config,
              const RunOptions& options = {});

/// Diagnostics of an original- or rescaled-frame density at frame time `time`.
DiagnosticsRecord diagnostics_at(const DensityField& rho, Frame frame, double time, const PotentialSpec& W,
                                 int subsamples, const DiagnosticsOptions& opts);

/// |dN2/dtau - (2n - 2 N2 - 2 J1)| with three-point derivatives of the series.
void fill_n2_residuals(std::vector<DiagnosticsRecord>& records, int dim);

/// Scharfetter–Gummel weight B(z) = z / (e^z - 1).
double bernoulli(double z);

}  // namespace aggdiff
