// Acceptance run: every preset once, then one PASS/FAIL line per criterion.
#include "aggdiff/checks.hpp"
#include "aggdiff/experiment.hpp"
#include "aggdiff/functionals.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace aggdiff;

namespace {

// Tolerances.
constexpr double kHeatSlope = -1.85;
constexpr double kHeatVarianceErr = 5e-3;
constexpr double kHeatSeconds = 60.0;
constexpr double kBoundedRise = 0.2;
constexpr double kL1Slope = -0.45;
constexpr double kN2TrendSlope = 1e-3;
constexpr double kN2RefinementGain = 3.0;
constexpr double kEnergyIdentity = 1e-6;
constexpr double kForwardDifference = 1e-3;
constexpr double kBorderlineSlope = -0.05;

struct Line {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " FAILED: " << what << ";";
        }
    }
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// Largest f(b) - f(a) over a < b: the total increase of f.
double max_rise(const std::vector<double>& f)
{
    double lo = std::numeric_limits<double>::infinity(), rise = 0.0;
    for (double v : f) {
        lo = std::min(lo, v);
        rise = std::max(rise, v - lo);
    }
    return rise;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// g(record) over records with tau in [a, b].
template <class Fn>
std::pair<std::vector<double>, std::vector<double>> series(const ExperimentResult& r, double a, double b, Fn&& g)
{
    std::vector<double> tau, v;
    for (const auto& rec : r.run.records) {
        if (rec.tau >= a - 1e-9 && rec.tau <= b + 1e-9) {
            tau.push_back(rec.tau);
            v.push_back(g(rec));
        }
    }
    return {tau, v};
}

ExperimentResult run_preset(const std::string& name, const fs::path& root, const std::vector<std::string>& overrides = {},
                            const std::string& tag = "")
{
    ConfigMap m = preset_config(name);
    for (const auto& o : overrides) apply_override(m, o);
    m["output.dir"] = (root / (tag.empty() ? name : tag)).string();
    const auto cfg = build_config(m);
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run_experiment(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "  ran " << (tag.empty() ? name : tag) << " in " << num(secs) << " s\n";
    return r;
}

const InvariantResult* invariant(const ExperimentResult& r, const std::string& name)
{
    for (const auto& i : r.invariants)
        if (i.name == name) return &i;
    return nullptr;
}

double max_n2_residual(const ExperimentResult& r, double from)
{
    double worst = 0.0;
    for (const auto& rec : r.run.records)
        if (rec.tau >= from && std::isfinite(rec.n2_ode_residual)) worst = std::max(worst, rec.n2_ode_residual);
    return worst;
}

}  // namespace

int main(int argc, char** argv)
{
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "aggdiff_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);

    std::map<std::string, ExperimentResult> runs;
    double heat_seconds = 0.0;
    for (const auto& name : preset_names()) {
        std::vector<std::string> extra;
        if (name == "l1-potential-n1") extra.push_back("diagnostics.snapshots=true");
        const auto t0 = std::chrono::steady_clock::now();
        runs.emplace(name, run_preset(name, root, extra));
        if (name == "heat-baseline")
            heat_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    const std::vector<std::string> refine = {"solver.tau_end=2", "rates.e1_window=0.5,2", "rates.l1_window=0.5,2",
                                             "rates.n2_window=0.5,2"};
    auto coarse_o = refine, fine_o = refine;
    coarse_o.insert(coarse_o.end(), {"grid.N=128", "solver.output_every=0.1"});
    fine_o.insert(fine_o.end(), {"grid.N=256", "solver.output_every=0.05"});
    const auto coarse = run_preset("l1-potential-n1", root, coarse_o, "refine-coarse");
    const auto fine = run_preset("l1-potential-n1", root, fine_o, "refine-fine");

    std::vector<std::pair<std::string, Line>> lines;
    auto add = [&](const std::string& title) -> Line& { return lines.emplace_back(title, Line{}).second; };

    {
        Line& l = add("1 heat baseline: E1 slope and variance oracle");
        const auto& r = runs.at("heat-baseline");
        const auto& fit = r.fits.at("E1");
        l.require(r.run.completed, "solver completed");
        l.require(fit && fit->slope <= kHeatSlope, "E1 slope <= " + num(kHeatSlope));
        // Mean m0 = 1 and variance s0 = 1.3 relax as m e^{-tau}, 1 + (s0 - 1) e^{-2 tau}.
        double err = 0.0;
        for (const auto& rec : r.run.records) {
            const double m = std::exp(-rec.tau);
            const double s = 1.0 + 0.3 * std::exp(-2.0 * rec.tau);
            err = std::max(err, std::abs((rec.second_moment - m * m) - s));
        }
        l.require(err <= kHeatVarianceErr, "variance error <= " + num(kHeatVarianceErr));
        l.require(heat_seconds < kHeatSeconds, "runtime < 60 s");
        l.detail << " slope=" << (fit ? num(fit->slope) : "none") << " variance_err=" << num(err)
                 << " runtime=" << num(heat_seconds) << "s";
    }
    {
        Line& l = add("2 L1-potential regimes: rescaled E1 envelopes bounded on [1,5]");
        const std::vector<std::pair<std::string, std::function<double(const DiagnosticsRecord&)>>> cases = {
            {"l1-potential-n1", [](const DiagnosticsRecord& d) { return std::log(d.E1) + d.tau; }},
            {"l1-potential-n2", [](const DiagnosticsRecord& d) { return std::log(d.E1) + 2 * d.tau - std::log1p(d.tau); }},
            {"l1-potential-n3", [](const DiagnosticsRecord& d) { return std::log(d.E1) + 2 * d.tau; }},
        };
        for (const auto& [name, g] : cases) {
            const auto [tau, v] = series(runs.at(name), 1.0, 5.0, g);
            const double rise = tau.empty() ? INFINITY : max_rise(v);
            l.require(runs.at(name).run.completed && !tau.empty() && rise <= kBoundedRise, name + " rise <= 0.2");
            l.detail << " " << name << "_rise=" << num(rise);
        }
    }
    {
        Line& l = add("3 L1 distance to G decays at least like e^{-tau/2} (n=1)");
        const auto& fit = runs.at("l1-potential-n1").fits.at("l1_dist_G");
        l.require(fit && fit->slope <= kL1Slope, "slope <= " + num(kL1Slope));
        l.detail << " slope=" << (fit ? num(fit->slope) : "none");
    }
    {
        Line& l = add("4 second moment: bounded, ODE residual converges, |N2 - n| decays");
        for (const auto& [name, r] : runs) {
            const double end = std::min(6.0, r.run.records.empty() ? 0.0 : r.run.records.back().tau);
            const auto [tau, n2] = series(r, 1.0, end, [](const DiagnosticsRecord& d) { return d.second_moment; });
            const double sup = n2.empty() ? INFINITY : *std::max_element(n2.begin(), n2.end());
            const double trend = tau.size() < 2 ? INFINITY : ls_slope(tau, n2);
            l.require(std::isfinite(sup) && trend <= kN2TrendSlope, name + " N2 trend <= 1e-3");
            l.detail << " " << name << "_trend=" << num(trend);
            if (name != "log-borderline") {
                const auto& fit = r.fits.at("N2_minus_n");
                l.require(fit && fit->slope < 0.0, name + " |N2 - n| slope < 0");
            }
        }
        const double rc = max_n2_residual(coarse, 0.5), rf = max_n2_residual(fine, 0.5);
        l.require(rf > 0.0 && rc / rf >= kN2RefinementGain, "ODE residual drops >= 3x under N, step doubling");
        l.detail << " residual N=128:" << num(rc) << " N=256:" << num(rf) << " gain=" << num(rc / rf);
    }
    {
        Line& l = add("5 energy identities and dissipation");
        const auto& r = runs.at("l1-potential-n1");
        const auto spec = potential_of(build_config(preset_config("l1-potential-n1")));
        double worst = 0.0;
        for (const auto& path : r.run.snapshots) {
            const auto snap = read_snapshot(path);
            worst = std::max(worst, energy_identity_residual(snap.density, snap.tau, spec, 8));
        }
        l.require(!r.run.snapshots.empty() && worst <= kEnergyIdentity, "snapshot energy identity <= 1e-6");
        l.detail << " snapshots=" << r.run.snapshots.size() << " identity=" << num(worst);
        for (const std::string name : {"heat-baseline", "l1-potential-n1", "l1-potential-n2", "l1-potential-n3"}) {
            const auto& recs = runs.at(name).run.records;
            double fd = -INFINITY;
            for (std::size_t i = 1; i < recs.size(); ++i) {
                const double a = recs[i - 1].F_tilde + 0.5 * recs[i - 1].second_moment;
                const double b = recs[i].F_tilde + 0.5 * recs[i].second_moment;
                fd = std::max(fd, b - a);
            }
            l.require(fd <= kForwardDifference, name + " F~ + N2/2 forward differences <= 1e-3");
            const int dim = build_config(preset_config(name)).dim;
            std::vector<double> lyap;
            for (const auto& d : recs) lyap.push_back(d.E_orig + 0.5 * dim * std::log1p(d.t));
            const double rise = max_rise(lyap);
            l.require(rise <= kBoundedRise, name + " E + (n/2) log(1+t) rise <= 0.2");
            l.detail << " " << name << "_fd=" << num(fd) << "_rise=" << num(rise);
        }
    }
    {
        Line& l = add("6 inequality suite on every output of every preset");
        for (const auto& [name, r] : runs) {
            for (const char* inv : {"E1_nonnegative", "csiszar_kullback", "lsi_gap", "poincare_gap", "mass_drift",
                                    "min_nonnegative"}) {
                const auto* i = invariant(r, inv);
                l.require(i && i->pass, name + " " + inv);
            }
        }
        l.detail << " presets=" << runs.size();
    }
    {
        Line& l = add("7 L2 entropy envelope bounded on [1,5] (n=2)");
        const auto& r = runs.at("l2-entropy");
        const auto [tau, v] = series(r, 1.0, 5.0, [](const DiagnosticsRecord& d) {
            return std::log(d.E2) + 2 * d.tau - 2 * std::log1p(d.tau);
        });
        const double rise = tau.empty() ? INFINITY : max_rise(v);
        l.require(r.run.completed && rise <= kBoundedRise, "rise <= 0.2");
        l.detail << " rise=" << num(rise);
    }
    auto suite_line = [&](const std::string& title, const std::string& suite) {
        Line& l = add(title);
        std::size_t n = 0;
        for (const auto& c : run_check_suite(suite, 0)) {
            ++n;
            l.require(c.pass, c.name + " [" + c.detail + "]");
        }
        l.detail << " checks=" << n;
    };
    suite_line("8 Gaussian closed-form oracles within 1e-5", "gaussian-oracles");
    suite_line("9 fractional scaling and Young checks", "fractional");
    suite_line("10 L log L bound, randomized densities", "appendix-c");
    {
        Line& l = add("11 negative control: logarithmic potential does not converge");
        const auto& r = runs.at("log-borderline");
        const auto& fit = r.fits.at("E1");
        l.require(fit && fit->slope > kBorderlineSlope, "E1 slope > -0.05 on [2,6]");
        l.detail << " slope=" << (fit ? num(fit->slope) : "none");
    }

    bool all = true;
    for (const auto& [title, l] : lines) {
        std::cout << (l.pass ? "PASS " : "FAIL ") << title << " |" << l.detail.str() << "\n";
        all = all && l.pass;
    }
    std::cout << (all ? "acceptance: all criteria pass" : "acceptance: FAILURES") << "\n";
    return all ? 0 : 1;
}
