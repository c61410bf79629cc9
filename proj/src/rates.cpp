#include "aggdiff/rates.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace aggdiff {

namespace {

// Fitted t-exponents at or beyond this magnitude cannot separate K(t) from K(t + 1/2).
constexpr double kProfileSwapExponent = 1.0;

double modifier_factor(Modifier m, double tau)
{
    switch (m) {
    case Modifier::none: return 1.0;
    case Modifier::div_by_1ptau: return 1.0 + tau;
    case Modifier::div_by_1ptau_sq: return (1.0 + tau) * (1.0 + tau);
    }
    return 1.0;
}

std::optional<double> smallest_finite(const std::vector<std::pair<double, NormValue>>& list, double lo, double hi)
{
    std::optional<double> best;
    for (const auto& [p, v] : list) {
        if (p >= lo && p < hi && v.is_finite() && (!best || p < *best)) best = p;
    }
    return best;
}

std::string fmt(double v, int precision = 4)
{
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

}  // namespace

std::string to_string(Modifier m)
{
    switch (m) {
    case Modifier::none: return "none";
    case Modifier::div_by_1ptau: return "div_by_1ptau";
    case Modifier::div_by_1ptau_sq: return "div_by_1ptau_sq";
    }
    return "none";
}

Modifier modifier_from_string(const std::string& s)
{
    for (Modifier m : {Modifier::none, Modifier::div_by_1ptau, Modifier::div_by_1ptau_sq}) {
        if (to_string(m) == s) return m;
    }
    throw std::invalid_argument("unknown modifier '" + s + "'");
}

double f_alpha(double tau, double alpha)
{
    if (!(alpha > 0.0)) throw std::invalid_argument("f_alpha: alpha must be positive");
    if (!(tau >= 0.0)) throw std::invalid_argument("f_alpha: tau must be nonnegative");
    if (alpha == 2.0) return tau * std::exp(-2.0 * tau);
    // (e^{-alpha tau} - e^{-2 tau}) / (2 - alpha), written to stay accurate near alpha = 2.
    const double d = 2.0 - alpha;
    return std::exp(-2.0 * tau) * std::expm1(d * tau) / d;
}

double f_alpha_bound(double tau, double alpha)
{
    if (alpha > 2.0) return std::exp(-2.0 * tau) / (alpha - 2.0);
    if (alpha == 2.0) return tau * std::exp(-2.0 * tau);
    return std::exp(-alpha * tau) / (2.0 - alpha);
}

double default_floor(const std::vector<double>& tau, const std::vector<double>& values)
{
    if (tau.empty() || tau.size() != values.size()) throw std::invalid_argument("series size mismatch");
    const double t0 = tau.front();
    const double t1 = tau.back();
    const double cut = t1 - 0.1 * (t1 - t0);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] >= cut && std::isfinite(values[i])) m = std::min(m, values[i]);
    }
    return std::isfinite(m) ? 10.0 * std::max(m, 0.0) : 0.0;
}

RateFit fit_decay(const std::vector<double>& tau, const std::vector<double>& values, std::pair<double, double> window,
                  Modifier modifier, std::optional<double> floor)
{
    if (tau.size() != values.size()) throw std::invalid_argument("fit_decay: series size mismatch");
    if (!(window.first < window.second)) throw std::invalid_argument("fit_decay: empty window");
    if (tau.empty() || window.first > tau.back() || window.second < tau.front()) {
        throw std::invalid_argument("fit_decay: window lies outside the data range");
    }
    RateFit fit;
    fit.modifier = modifier;
    fit.window_begin = window.first;
    fit.window_end = window.second;
    fit.floor = floor ? *floor : default_floor(tau, values);

    std::vector<double> x, y;
    const double slack = 1e-9 * std::max(1.0, std::abs(window.second));
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (tau[i] < window.first - slack || tau[i] > window.second + slack) continue;
        if (!(values[i] > fit.floor) || !std::isfinite(values[i])) break;
        x.push_back(tau[i]);
        y.push_back(std::log(values[i] / modifier_factor(modifier, tau[i])));
    }
    fit.n_points = x.size();
    if (x.size() < 5) {
        throw std::invalid_argument("fit_decay: only " + std::to_string(x.size()) +
                                    " points above the floor in the window (need 5)");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return fit;
}

std::vector<double> default_p_list()
{
    return {1.0, 1.1, 1.2, 1.25, 1.3, 1.4, 1.5, 1.6, 1.75, 2.0, 2.5, 3.0, 4.0, 6.0};
}

Prediction predict_e1(int dim, const PotentialSpec& spec, const PotentialNorms& norms)
{
    Prediction p;
    const double n = dim;
    if (spec.is_zero()) {
        p.exponent = -2.0;
        p.hypothesis = "W = 0: logarithmic Sobolev decay";
        return p;
    }
    if (std::holds_alternative<SmoothedLog>(spec.kind())) {
        p.hypothesis = "no convergence predicted: grad W not in L^n (logarithmic potential)";
        return p;
    }
    const bool bounded = norms.sup_W.is_finite();
    // grad W in L^n and, for n >= 2, Lap W in L^{n/2}.
    const auto grad_n = smallest_finite(norms.Lp_gradW, n, n + 1e-12);
    const auto lap_half = dim >= 2 ? smallest_finite(norms.Lp_lapW, 0.5 * n, 0.5 * n + 1e-12) : std::optional<double>(1.0);
    if (!bounded || !grad_n || !lap_half) {
        p.hypothesis = "no convergence predicted: base hypotheses on W not met by the computed norms";
        return p;
    }
    if (norms.L1_W.is_finite()) {
        p.exponent = -std::min(n, 2.0);
        if (dim == 2) p.modifier = Modifier::div_by_1ptau;
        p.hypothesis = "W in L^1";
        return p;
    }
    if (dim == 1) {
        if (const auto* pt = std::get_if<SmoothedPowerTail>(&spec.kind())) {
            // (-Lap)^{1/2 - e'} W in L^1 for every e' < eps/2, giving e^{-2 e' tau}.
            p.exponent = -pt->eps;
            p.hypothesis = "n = 1, fractional derivative of W in L^1 (power tail)";
            return p;
        }
        p.hypothesis = "no convergence predicted: no n = 1 hypothesis class matched";
        return p;
    }
    const auto p1 = smallest_finite(norms.Lp_gradW, 1.0, n);
    if (!p1) {
        p.hypothesis = "no convergence predicted: grad W in no L^p with p < n";
        return p;
    }
    double alpha = n / *p1 - 1.0;
    std::ostringstream hyp;
    hyp << "grad W in L^" << *p1;
    if (dim >= 3) {
        const auto p2 = smallest_finite(norms.Lp_lapW, 1.0, 0.5 * n);
        if (!p2) {
            p.hypothesis = "no convergence predicted: Lap W in no L^p with p < n/2";
            return p;
        }
        alpha = std::min(alpha, n / *p2 - 2.0);
        hyp << ", Lap W in L^" << *p2;
    }
    p.exponent = -std::min(alpha, 2.0);
    p.hypothesis = hyp.str();
    return p;
}

TheoremReport theorem_report(int dim, const PotentialSpec& spec, const PotentialNorms& norms, const SeriesFits& fits)
{
    TheoremReport report;
    const Prediction e1 = predict_e1(dim, spec, norms);
    report.hypothesis = e1.hypothesis;

    auto make_row = [&](const std::string& name, std::optional<double> predicted, const std::optional<RateFit>& fit,
                        Modifier modifier, double slope_scale = 1.0) {
        TheoremRow row;
        row.quantity = name;
        row.predicted_exponent = predicted;
        row.modifier = modifier;
        if (fit) {
            row.fitted_slope = fit->slope * slope_scale;
            row.r_squared = fit->r_squared;
            row.window = {fit->window_begin, fit->window_end};
        }
        if (!predicted) {
            row.pass = true;
            row.note = "no convergence predicted";
        } else if (!row.fitted_slope) {
            row.pass = false;
            row.note = "no fit available";
        } else {
            row.pass = *row.fitted_slope <= *predicted + kSlopeTolerance;
        }
        return row;
    };

    report.rows.push_back(make_row("E1", e1.exponent, fits.E1, e1.modifier));

    std::optional<double> l1_tau;
    std::optional<double> l1_t;
    if (e1.exponent) {
        l1_tau = *e1.exponent / 2.0;
        l1_t = *e1.exponent / 4.0;
    }
    report.rows.push_back(make_row("l1_dist_G", l1_tau, fits.l1_dist_G, Modifier::none));
    {
        auto row = make_row("l1_dist_t_via_CK", l1_t, fits.E1, e1.modifier, 0.25);
        row.quantity = "l1_dist_t_via_CK";
        if (row.fitted_slope && std::abs(*row.fitted_slope) >= kProfileSwapExponent) {
            row.profile_swap_flag = true;
            row.note = "rate at the K vs K(t+1/2) profile-swap boundary";
        }
        report.rows.push_back(row);
    }

    // |N2 - n| follows the grad W envelope only.
    std::optional<double> n2_pred = e1.exponent;
    Modifier n2_mod = e1.modifier;
    if (e1.exponent && dim >= 3 && !norms.L1_W.is_finite() && !spec.is_zero()) {
        if (const auto p1 = smallest_finite(norms.Lp_gradW, 1.0, dim)) {
            n2_pred = -std::min(dim / *p1 - 1.0, 2.0);
        }
    }
    report.rows.push_back(make_row("N2_minus_n", n2_pred, fits.N2_minus_n, n2_mod));

    if (dim >= 2 && fits.E2) {
        const auto g1 = smallest_finite(norms.Lp_gradW, 1.0, 1.0 + 1e-12);
        const bool applies = spec.is_zero() || (g1 && norms.sup_W.is_finite());
        const Modifier m = dim == 2 ? Modifier::div_by_1ptau_sq : Modifier::none;
        auto row = make_row("E2", applies ? std::optional<double>(-2.0) : std::nullopt, fits.E2, m);
        if (!applies) row.note = "grad W not in L^1: no L^2 rate predicted";
        report.rows.push_back(row);
    }
    return report;
}

std::string format_report_table(const TheoremReport& report)
{
    std::ostringstream os;
    os << "hypothesis: " << report.hypothesis << "\n";
    os << std::left << std::setw(20) << "quantity" << std::setw(12) << "predicted" << std::setw(12) << "fitted"
       << std::setw(10) << "r2" << std::setw(16) << "window" << std::setw(18) << "modifier" << "pass\n";
    for (const auto& r : report.rows) {
        os << std::left << std::setw(20) << r.quantity << std::setw(12)
           << (r.predicted_exponent ? fmt(*r.predicted_exponent) : "-") << std::setw(12)
           << (r.fitted_slope ? fmt(*r.fitted_slope) : "-") << std::setw(10) << fmt(r.r_squared) << std::setw(16)
           << ("[" + fmt(r.window.first, 3) + "," + fmt(r.window.second, 3) + "]") << std::setw(18)
           << to_string(r.modifier) << (r.pass ? "yes" : "NO");
        if (r.profile_swap_flag) os << " (profile-swap)";
        if (!r.note.empty()) os << "  " << r.note;
        os << "\n";
    }
    return os.str();
}

}  // namespace aggdiff
