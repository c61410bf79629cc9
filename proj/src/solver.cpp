#include "aggdiff/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace aggdiff {

namespace {

constexpr double kTimeEps = 1e-12;

// Thomas algorithm for (I - c D) u = rhs on one line, D the Neumann 3-point Laplacian / h^2.
void solve_neumann_line(std::vector<double>& line, double c, std::vector<double>& cp, std::vector<double>& dp)
{
    const std::size_t n = line.size();
    cp.resize(n);
    dp.resize(n);
    auto diag = [&](std::size_t i) { return 1.0 + c * ((i == 0 || i == n - 1) ? 1.0 : 2.0); };
    const double off = -c;
    cp[0] = off / diag(0);
    dp[0] = line[0] / diag(0);
    for (std::size_t i = 1; i < n; ++i) {
        const double m = diag(i) - off * cp[i - 1];
        cp[i] = off / m;
        dp[i] = (line[i] - off * dp[i - 1]) / m;
    }
    line[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) line[i] = dp[i] - cp[i] * line[i + 1];
}

bool all_nonnegative(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
}

// Derivative at x[k] of the quadratic through three points.
double three_point_derivative(const double* x, const double* y, int k)
{
    const double x0 = x[0], x1 = x[1], x2 = x[2];
    const double xk = x[k];
    const double d0 = ((xk - x1) + (xk - x2)) / ((x0 - x1) * (x0 - x2));
    const double d1 = ((xk - x0) + (xk - x2)) / ((x1 - x0) * (x1 - x2));
    const double d2 = ((xk - x0) + (xk - x1)) / ((x2 - x0) * (x2 - x1));
    return d0 * y[0] + d1 * y[1] + d2 * y[2];
}

double n2_residual_at(const std::vector<DiagnosticsRecord>& r, std::size_t k, int dim)
{
    if (r.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    std::size_t first = 0;
    int at = 1;
    if (k == 0) {
        first = 0;
        at = 0;
    } else if (k + 1 == r.size()) {
        first = k - 2;
        at = 2;
    } else {
        first = k - 1;
    }
    const double x[3] = {r[first].tau, r[first + 1].tau, r[first + 2].tau};
    const double y[3] = {r[first].second_moment, r[first + 1].second_moment, r[first + 2].second_moment};
    const double dn2 = three_point_derivative(x, y, at);
    return std::abs(dn2 - (2.0 * dim * r[k].mass - 2.0 * r[k].second_moment - 2.0 * r[k].J1));
}

std::string format_progress(double tau, double t, double dt, double mass, double min_value)
{
    std::ostringstream os;
    os << std::setprecision(6) << "tau=" << tau << " t=" << t << " dt=" << dt << std::setprecision(15)
       << " mass=" << mass << std::setprecision(6) << " min=" << min_value;
    return os.str();
}

}  // namespace

double bernoulli(double z)
{
    if (std::abs(z) < 1e-10) return 1.0 - 0.5 * z;
    return z / std::expm1(z);
}

std::string to_string(Frame f) { return f == Frame::original ? "original" : "rescaled"; }

std::string to_string(Scheme s)
{
    switch (s) {
    case Scheme::fv_ssprk2: return "fv_ssprk2";
    case Scheme::fv_euler: return "fv_euler";
    case Scheme::imex_cn: return "imex_cn";
    case Scheme::heat_splitting: return "heat_splitting";
    }
    return "?";
}

Frame frame_from_string(const std::string& s)
{
    if (s == "original") return Frame::original;
    if (s == "rescaled") return Frame::rescaled;
    throw std::invalid_argument("unknown frame '" + s + "'");
}

Scheme scheme_from_string(const std::string& s)
{
    for (Scheme k : {Scheme::fv_ssprk2, Scheme::fv_euler, Scheme::imex_cn, Scheme::heat_splitting}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

void SolverConfig::validate() const
{
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw std::invalid_argument("cfl_safety must lie in (0, 1]");
    if (!(end_time > 0.0)) throw std::invalid_argument("end time must be positive");
    if (!(output_every > 0.0)) throw std::invalid_argument("output_every must be positive");
    if (kernel_refresh < 1) throw std::invalid_argument("kernel_refresh must be >= 1");
    if (kernel_subsamples < 1) throw std::invalid_argument("kernel_subsamples must be >= 1");
    if (positivity_retry_limit < 0) throw std::invalid_argument("positivity_retry_limit must be >= 0");
    if (max_dt < 0.0) throw std::invalid_argument("max_dt must be >= 0");
    if (scheme == Scheme::heat_splitting && frame != Frame::original) {
        throw std::invalid_argument("heat_splitting integrates the original-frame equation only");
    }
}

Simulation::Simulation(DensityField rho0, PotentialSpec W, SolverConfig config, double start_time)
    : config_(std::move(config)),
      W_(std::move(W)),
      rho_(std::move(rho0)),
      op_(rho_.grid(), W_, config_.kernel_subsamples, config_.drift),
      time_(start_time)
{
    config_.validate();
    initial_mass_ = rho_.mass();
    op_.refresh(config_.frame == Frame::rescaled ? time_ : 0.0);
    if (config_.frame == Frame::rescaled) {
        const Grid& g = rho_.grid();
        const std::size_t n = g.cells_per_axis();
        const double h = g.spacing();
        for (int d = 0; d < g.dim(); ++d) {
            const std::size_t s = g.stride(d);
            Field f(g.size(), 0.0);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const std::size_t k = (i / s) % n;
                if (k + 1 < n) f[i] = g.center(k) + 0.5 * h;
            }
            confinement_faces_.components.push_back(std::move(f));
        }
    }
    if (config_.scheme == Scheme::heat_splitting) heat_conv_ = std::make_unique<Convolver>(rho_.grid());
}

double Simulation::current_tau() const { return config_.frame == Frame::rescaled ? time_ : tau_from_t(time_); }

DensityField Simulation::rescaled_density() const
{
    if (config_.frame == Frame::rescaled) return rho_;
    return to_rescaled_frame(rho_, tau_from_t(time_));
}

VectorField Simulation::face_drift(std::span<const double> rho)
{
    VectorField a = op_.face_gradient(rho);
    if (!confinement_faces_.components.empty()) {
        for (std::size_t d = 0; d < a.components.size(); ++d) {
            auto& c = a.components[d];
            const auto& y = confinement_faces_.components[d];
            for (std::size_t i = 0; i < c.size(); ++i) c[i] += y[i];
        }
    }
    return a;
}

double Simulation::max_drift(const VectorField& drift) const
{
    double m = 0.0;
    for (const auto& c : drift.components) {
        for (double v : c) m = std::max(m, std::abs(v));
    }
    return m;
}

Field Simulation::flux_rhs(std::span<const double> rho, const VectorField& drift) const
{
    const Grid& g = rho_.grid();
    const std::size_t n = g.cells_per_axis();
    const double h = g.spacing();
    const double inv_h2 = 1.0 / (h * h);
    Field out(g.size(), 0.0);
    for (int d = 0; d < g.dim(); ++d) {
        const std::size_t s = g.stride(d);
        const auto& a = drift.components[d];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if ((i / s) % n + 1 == n) continue;  // no-flux boundary face
            const double z = h * a[i];
            // Mass flux from cell i to its +d neighbour, times h.
            const double j = bernoulli(z) * rho[i] - bernoulli(-z) * rho[i + s];
            out[i] -= j * inv_h2;
            out[i + s] += j * inv_h2;
        }
    }
    return out;
}

void Simulation::refresh_kernel_if_due()
{
    if (config_.frame != Frame::rescaled || op_.is_zero()) return;
    if (steps_ % static_cast<std::size_t>(config_.kernel_refresh) == 0 || !op_.kernel_tau()) op_.refresh(time_);
}

double Simulation::stable_dt()
{
    refresh_kernel_if_due();
    const Grid& g = rho_.grid();
    const double h = g.spacing();
    const double amax = max_drift(face_drift(rho_.view()));
    const double adv = amax > 0.0 ? h / amax : std::numeric_limits<double>::infinity();
    double dt = 0.0;
    switch (config_.scheme) {
    case Scheme::fv_ssprk2:
    case Scheme::fv_euler: dt = std::min(h * h / (2.0 * g.dim()), adv); break;
    case Scheme::imex_cn:
    case Scheme::heat_splitting: dt = adv; break;
    }
    dt *= config_.cfl_safety;
    if (config_.max_dt > 0.0) dt = std::min(dt, config_.max_dt);
    return dt;
}

bool Simulation::imex_step(double dt, const VectorField& drift0, Field& out)
{
    const Grid& g = rho_.grid();
    const std::size_t n = g.cells_per_axis();
    const double h = g.spacing();
    const auto& rho = rho_.values();
    out = rho;
    // Explicit upwind drift: velocity -a, mass flux to the +d neighbour.
    for (int d = 0; d < g.dim(); ++d) {
        const std::size_t s = g.stride(d);
        const auto& a = drift0.components[d];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if ((i / s) % n + 1 == n) continue;
            const double v = -a[i];
            const double j = v > 0.0 ? v * rho[i] : v * rho[i + s];
            out[i] -= dt / h * j;
            out[i + s] += dt / h * j;
        }
    }
    if (!all_nonnegative(out)) return false;
    // Crank–Nicolson diffusion, one axis at a time.
    const double c = 0.5 * dt / (h * h);
    std::vector<double> line(n), cp, dp;
    for (int d = 0; d < g.dim(); ++d) {
        const std::size_t s = g.stride(d);
        for (std::size_t base = 0; base < g.size(); ++base) {
            if ((base / s) % n != 0) continue;
            for (std::size_t k = 0; k < n; ++k) line[k] = out[base + k * s];
            std::vector<double> rhs(n);
            for (std::size_t k = 0; k < n; ++k) {
                const double left = k > 0 ? line[k - 1] : line[k];
                const double right = k + 1 < n ? line[k + 1] : line[k];
                rhs[k] = line[k] + c * (left - 2.0 * line[k] + right);
            }
            solve_neumann_line(rhs, c, cp, dp);
            for (std::size_t k = 0; k < n; ++k) out[base + k * s] = rhs[k];
        }
    }
    return all_nonnegative(out);
}

bool Simulation::splitting_step(double dt, Field& out)
{
    const Grid& g = rho_.grid();
    if (heat_dt_ != dt) {
        // Heat kernel of variance 2 dt at every pairwise offset, normalized to unit discrete mass.
        const KernelGrid kg(g);
        Field k(kg.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < kg.size(); ++i) {
            const Point z = kg.point(i);
            k[i] = std::exp(-(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) / (4.0 * dt));
            sum += k[i];
        }
        const double scale = 1.0 / (sum * g.cell_volume());
        for (double& v : k) v *= scale;
        heat_conv_->set_kernel(k);
        heat_dt_ = dt;
    }
    out = heat_conv_->apply(rho_.values());
    // FFT round-off leaves |values| ~ 1e-17 max where the true value underflows; those are zeros.
    const double peak = *std::max_element(out.begin(), out.end());
    for (double& v : out) {
        if (v < 0.0 && v > -1e-13 * peak) v = 0.0;
    }
    if (op_.is_zero()) return all_nonnegative(out);

    const std::size_t n = g.cells_per_axis();
    const double h = g.spacing();
    const VectorField a = op_.face_gradient(out);
    const Field mid = out;
    for (int d = 0; d < g.dim(); ++d) {
        const std::size_t s = g.stride(d);
        const auto& ad = a.components[d];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if ((i / s) % n + 1 == n) continue;
            const double v = -ad[i];
            const double j = v > 0.0 ? v * mid[i] : v * mid[i + s];
            out[i] -= dt / h * j;
            out[i + s] += dt / h * j;
        }
    }
    return all_nonnegative(out);
}

bool Simulation::try_step(double dt, const VectorField& drift0, Field& out)
{
    const auto& rho = rho_.values();
    switch (config_.scheme) {
    case Scheme::fv_euler: {
        const Field k1 = flux_rhs(rho, drift0);
        out.resize(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) out[i] = rho[i] + dt * k1[i];
        return all_nonnegative(out);
    }
    case Scheme::fv_ssprk2: {
        const Field k1 = flux_rhs(rho, drift0);
        Field u1(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) u1[i] = rho[i] + dt * k1[i];
        if (!all_nonnegative(u1)) return false;
        const Field k2 = flux_rhs(u1, face_drift(u1));
        out.resize(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) out[i] = 0.5 * rho[i] + 0.5 * (u1[i] + dt * k2[i]);
        return all_nonnegative(out);
    }
    case Scheme::imex_cn: return imex_step(dt, drift0, out);
    case Scheme::heat_splitting: return splitting_step(dt, out);
    }
    return false;
}

double Simulation::step(double max_step)
{
    if (!(max_step > 0.0)) throw std::invalid_argument("step: max_step must be positive");
    refresh_kernel_if_due();
    const Grid& g = rho_.grid();
    const double h = g.spacing();
    VectorField drift0;
    double amax = 0.0;
    if (config_.scheme != Scheme::heat_splitting) {
        drift0 = face_drift(rho_.view());
        amax = max_drift(drift0);
    } else if (!op_.is_zero()) {
        amax = max_drift(op_.face_gradient(rho_.view()));
    }
    const double adv = amax > 0.0 ? h / amax : std::numeric_limits<double>::infinity();
    double dt = (config_.scheme == Scheme::fv_ssprk2 || config_.scheme == Scheme::fv_euler)
                    ? std::min(h * h / (2.0 * g.dim()), adv)
                    : adv;
    dt *= config_.cfl_safety;
    if (config_.max_dt > 0.0) dt = std::min(dt, config_.max_dt);
    dt = std::min(dt, max_step);

    Field next;
    for (int attempt = 0; attempt <= config_.positivity_retry_limit; ++attempt) {
        if (try_step(dt, drift0, next)) {
            rho_.mutable_values() = std::move(next);
            rho_.refresh_mass();
            time_ += dt;
            ++steps_;
            last_dt_ = dt;
            max_mass_drift_ = std::max(max_mass_drift_, std::abs(rho_.mass() - initial_mass_));
            check_boundary();
            return dt;
        }
        dt *= 0.5;
    }
    throw SolverError("positivity could not be restored after " + std::to_string(config_.positivity_retry_limit) +
                          " step halvings",
                      time_);
}

void Simulation::check_boundary() const
{
    const Grid& g = rho_.grid();
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (is_boundary_cell(g, i)) m = std::max(m, rho_.values()[i]);
    }
    if (m > config_.boundary_tolerance) {
        std::ostringstream os;
        os << "boundary density " << m << " exceeds " << config_.boundary_tolerance << "; enlarge the domain";
        throw SolverError(os.str(), time_);
    }
}

DiagnosticsRecord diagnostics_at(const DensityField& rho, Frame frame, double time, const PotentialSpec& W,
                                 int subsamples, const DiagnosticsOptions& opts)
{
    const double tau = frame == Frame::rescaled ? time : tau_from_t(time);
    const DensityField rt = frame == Frame::rescaled ? rho : to_rescaled_frame(rho, tau);
    InteractionOperator op(rt.grid(), W, subsamples, DriftMode::potential_difference);
    DiagnosticsRecord r = compute_diagnostics(rt, tau, op, opts);
    if (frame == Frame::original) r.t = time;
    return r;
}

void fill_n2_residuals(std::vector<DiagnosticsRecord>& records, int dim)
{
    for (std::size_t k = 0; k < records.size(); ++k) records[k].n2_ode_residual = n2_residual_at(records, k, dim);
}

RunResult run(const DensityField& rho0, const PotentialSpec& W, const SolverConfig& config, const RunOptions& options)
{
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    RunResult result;
    result.initial_mass = rho0.mass();
    const int dim = rho0.grid().dim();

    Simulation sim(rho0, W, config);
    // Diagnostics in the rescaled frame reuse one operator; the original frame's y-grid moves.
    std::unique_ptr<InteractionOperator> diag_op;
    if (config.frame == Frame::rescaled) {
        diag_op = std::make_unique<InteractionOperator>(rho0.grid(), W, config.kernel_subsamples,
                                                        config.drift);
    }

    std::size_t emitted = 0;
    auto emit_ready = [&](bool final) {
        auto& recs = result.records;
        // A row is final once its successor exists (or the run is over).
        const std::size_t ready = final ? recs.size() : (recs.size() >= 3 ? recs.size() - 1 : 0);
        for (; emitted < ready; ++emitted) {
            recs[emitted].n2_ode_residual = n2_residual_at(recs, emitted, dim);
            if (options.on_record) options.on_record(recs[emitted]);
        }
    };

    auto record_now = [&]() {
        DiagnosticsRecord r;
        if (diag_op) {
            r = compute_diagnostics(sim.density(), sim.time(), *diag_op, options.diagnostics);
        } else {
            r = diagnostics_at(sim.density(), config.frame, sim.time(), W, config.kernel_subsamples,
                               options.diagnostics);
        }
        r.dt = sim.last_dt();
        result.records.push_back(r);
        if (!options.snapshot_dir.empty()) {
            std::ostringstream name;
            name << "snapshot_" << std::setw(5) << std::setfill('0') << (result.records.size() - 1) << ".bin";
            const auto path = std::filesystem::path(options.snapshot_dir) / name.str();
            write_snapshot(path, sim.rescaled_density(), r.tau, r.t);
            result.snapshots.push_back(path.string());
        }
        if (options.log) options.log(format_progress(r.tau, r.t, r.dt, r.mass, r.min_value));
        emit_ready(false);
    };

    if (!options.snapshot_dir.empty()) std::filesystem::create_directories(options.snapshot_dir);

    const auto outputs = static_cast<std::size_t>(std::floor(config.end_time / config.output_every + 1e-9));
    try {
        record_now();
        for (std::size_t k = 1; k <= outputs; ++k) {
            const double target = static_cast<double>(k) * config.output_every;
            while (target - sim.time() > kTimeEps * std::max(1.0, target)) sim.step(target - sim.time());
            record_now();
        }
        result.completed = true;
    } catch (const SolverError& e) {
        result.error = e.what();
        result.error_time = e.time();
        if (options.log) options.log(std::string("solver abort: ") + e.what());
    }
    emit_ready(true);
    result.steps = sim.steps();
    result.max_mass_drift = sim.max_mass_drift();
    result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace aggdiff
