#include "aggdiff/functionals.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace aggdiff {

namespace {

constexpr double kFisherFloor = 1e-14;
constexpr double kCutFraction = 0.9;
constexpr double kExcludedMassWarning = 1e-8;

double weighted_integral(const DensityField& rho, std::span<const double> w)
{
    if (w.size() != rho.values().size()) throw std::invalid_argument("field size does not match density");
    Field f(w.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = rho.values()[i] * w[i];
    return integrate(rho.grid(), f);
}

double cut_radius_sq(const Grid& grid)
{
    const double R = kCutFraction * grid.half_width();
    return R * R;
}

double s_log_s(double s) { return s > 0.0 ? s * std::log(s) : 0.0; }

std::string format_alpha(double a)
{
    std::ostringstream os;
    os << a;
    return "holder_" + os.str();
}

}  // namespace

std::vector<std::string> record_columns(const std::vector<double>& holder_alphas)
{
    std::vector<std::string> c{"tau",    "t",     "mass",      "min_value", "second_moment", "entropy",
                               "l_log_l", "E_orig", "E_tilde", "F_tilde",  "E1",            "I1",
                               "E2",     "J1",    "J2",        "l1_dist_G", "ck_rhs",        "lsi_gap",
                               "poincare_gap", "l2_norm", "h1_norm"};
    for (double a : holder_alphas) c.push_back(format_alpha(a));
    for (const char* extra : {"J2_lap", "e2_excluded_mass", "n2_ode_residual", "kernel_resolution", "dt"}) {
        c.emplace_back(extra);
    }
    return c;
}

std::vector<double> record_values(const DiagnosticsRecord& r)
{
    std::vector<double> v{r.tau,    r.t,      r.mass,    r.min_value, r.second_moment, r.entropy, r.l_log_l,
                          r.E_orig, r.E_tilde, r.F_tilde, r.E1,        r.I1,            r.E2,      r.J1,
                          r.J2,     r.l1_dist_G, r.ck_rhs, r.lsi_gap, r.poincare_gap,  r.l2_norm, r.h1_norm};
    for (const auto& [a, value] : r.holder) v.push_back(value);
    for (double x : {r.J2_lap, r.e2_excluded_mass, r.n2_ode_residual, r.kernel_resolution, r.dt}) v.push_back(x);
    return v;
}

double record_value(const DiagnosticsRecord& r, const std::string& column)
{
    std::vector<double> alphas;
    for (const auto& [a, v] : r.holder) alphas.push_back(a);
    const auto names = record_columns(alphas);
    const auto values = record_values(r);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == column) return values[i];
    }
    throw std::out_of_range("unknown diagnostics column '" + column + "'");
}

double free_energy(const DensityField& rho, std::span<const double> w_conv)
{
    return entropy(rho) + 0.5 * weighted_integral(rho, w_conv);
}

double rescaled_energy(const DensityField& rho_tilde, std::span<const double> w_conv)
{
    return free_energy(rho_tilde, w_conv);
}

double f_tilde(const DensityField& rho_tilde, std::span<const double> w_conv)
{
    return rescaled_energy(rho_tilde, w_conv) + 0.5 * second_moment(rho_tilde);
}

double f_tilde_direct(const DensityField& rho_tilde, std::span<const double> w_conv)
{
    const Grid& g = rho_tilde.grid();
    const auto& v = rho_tilde.values();
    Field f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = s_log_s(v[i]) + 0.5 * v[i] * g.radius_sq(i) + 0.5 * v[i] * w_conv[i];
    }
    return integrate(g, f);
}

double energy_identity_residual(const DensityField& rho_tilde, double tau, const PotentialSpec& W, int subsamples)
{
    const int n = rho_tilde.grid().dim();
    InteractionOperator tilde_op(rho_tilde.grid(), W, subsamples, DriftMode::potential_difference);
    tilde_op.refresh(tau);
    const double e_tilde = rescaled_energy(rho_tilde, tilde_op.potential_field(rho_tilde.view()));

    const DensityField rho = to_original_frame(rho_tilde, tau);
    InteractionOperator orig_op(rho.grid(), W, subsamples, DriftMode::potential_difference);
    orig_op.refresh(0.0);
    const double e = free_energy(rho, orig_op.potential_field(rho.view()));
    return std::abs(e - (e_tilde - n * tau));
}

double relative_entropy_L1(const DensityField& rho_tilde)
{
    const int n = rho_tilde.grid().dim();
    return entropy(rho_tilde) + 0.5 * second_moment(rho_tilde) +
           0.5 * n * std::log(2.0 * std::numbers::pi) * rho_tilde.mass();
}

double fisher_info(const DensityField& rho_tilde)
{
    const Grid& g = rho_tilde.grid();
    const auto& v = rho_tilde.values();
    const double floor = kFisherFloor * *std::max_element(v.begin(), v.end());
    const auto grad = gradient(g, v);
    Field f(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (v[i] < floor || v[i] <= 0.0) continue;
        const Point y = g.point(i);
        double s = 0.0;
        for (int d = 0; d < g.dim(); ++d) {
            const double c = grad.components[d][i] / v[i] + y[d];
            s += c * c;
        }
        f[i] = v[i] * s;
    }
    return integrate(g, f);
}

double j1(const DensityField& rho_tilde, const VectorField& grad_w_conv)
{
    const Grid& g = rho_tilde.grid();
    Field f(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point y = g.point(i);
        double s = 0.0;
        for (int d = 0; d < g.dim(); ++d) s += y[d] * grad_w_conv.components[d][i];
        f[i] = rho_tilde.values()[i] * s;
    }
    return integrate(g, f);
}

double j2(const DensityField& rho_tilde, const VectorField& grad_w_conv)
{
    const Grid& g = rho_tilde.grid();
    const auto grad = gradient(g, rho_tilde.values());
    Field f(g.size(), 0.0);
    for (int d = 0; d < g.dim(); ++d) {
        for (std::size_t i = 0; i < g.size(); ++i) f[i] += grad.components[d][i] * grad_w_conv.components[d][i];
    }
    return integrate(g, f);
}

double j2_lap(const DensityField& rho_tilde, std::span<const double> lap_w_conv)
{
    return -weighted_integral(rho_tilde, lap_w_conv);
}

Field gaussian_samples(const Grid& grid)
{
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * grid.dim());
    return sample(grid, [&](const Point& y) { return norm * std::exp(-0.5 * (y[0] * y[0] + y[1] * y[1] + y[2] * y[2])); });
}

L2EntropyResult relative_entropy_L2(const DensityField& rho_tilde)
{
    const Grid& g = rho_tilde.grid();
    const auto& v = rho_tilde.values();
    const Field G = gaussian_samples(g);
    const double R2 = cut_radius_sq(g);
    Field direct(g.size(), 0.0);
    Field ratio(g.size(), 0.0);
    Field inside_rho(g.size(), 0.0);
    Field inside_g(g.size(), 0.0);
    Field outside(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.radius_sq(i) > R2) {
            outside[i] = v[i];
            continue;
        }
        const double diff = v[i] - G[i];
        direct[i] = diff * diff / G[i];
        ratio[i] = v[i] * v[i] / G[i];
        inside_rho[i] = v[i];
        inside_g[i] = G[i];
    }
    L2EntropyResult r;
    r.E2 = integrate(g, direct);
    r.E2_identity = integrate(g, ratio) - 2.0 * integrate(g, inside_rho) + integrate(g, inside_g);
    r.excluded_mass = integrate(g, outside);
    r.warning = r.excluded_mass > kExcludedMassWarning;
    return r;
}

double lsi_gap(const DensityField& rho_tilde) { return 0.5 * fisher_info(rho_tilde) - relative_entropy_L1(rho_tilde); }

double poincare_gap(const DensityField& rho_tilde)
{
    const Grid& g = rho_tilde.grid();
    const auto& v = rho_tilde.values();
    const Field G = gaussian_samples(g);
    Field w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) w[i] = v[i] / G[i];
    const auto grad = gradient(g, w);
    const double R2 = cut_radius_sq(g);
    Field f(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.radius_sq(i) > R2) continue;
        double gw2 = 0.0;
        for (int d = 0; d < g.dim(); ++d) gw2 += grad.components[d][i] * grad.components[d][i];
        f[i] = (gw2 - (w[i] - 1.0) * (w[i] - 1.0)) * G[i];
    }
    return integrate(g, f);
}

double moc_linf_bound(double K, double /*C0*/, int dim, double alpha)
{
    if (!(K > 1.0)) throw std::invalid_argument("moc_linf_bound: K must exceed 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("moc_linf_bound: alpha must lie in (0, 1]");
    const double n = dim;
    return std::pow(K, n / (n + alpha)) * std::pow(std::log(K), -alpha / (n + alpha));
}

AppendixCResult appendix_c_check(const DensityField& rho)
{
    const Grid& g = rho.grid();
    const int n = g.dim();
    const auto& v = rho.values();

    Field abs_f(g.size());
    Field f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        f[i] = s_log_s(v[i]);
        abs_f[i] = std::abs(f[i]);
    }
    const double mass = rho.mass();
    const double moment = second_moment(rho);
    const double rho1 = std::exp(-1.0);
    const double sup_f = std::exp(-1.0);  // max of |s log s| on (1/e, 1), attained at 1/e

    AppendixCResult r;
    r.r0 = std::pow(mass / (rho1 * ball_volume(n)), 1.0 / n);
    r.C0 = ball_volume(n) * std::pow(r.r0, n);

    // |S| int_{r0}^inf |F(c r^{-(n+2)})| r^{n-1} dr with c = N_g (n+2) / |S|.
    const double area = sphere_area(n);
    const double c = moment * (n + 2) / area;
    auto integrand = [&](double r) { return std::abs(s_log_s(c * std::pow(r, -(n + 2.0)))) * std::pow(r, n - 1.0); };
    const double r_unit = std::pow(c, 1.0 / (n + 2.0));  // kink of |F| where the argument equals 1
    double tail = 0.0;
    double start = r.r0;
    if (r_unit > start) {
        tail += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, start, r_unit, 15, 1e-12);
        start = r_unit;
    }
    boost::math::quadrature::exp_sinh<double> es;
    tail += es.integrate(integrand, start, std::numeric_limits<double>::infinity());
    r.tail = area * tail;

    r.lhs = integrate(g, abs_f);
    r.rhs = integrate(g, f) + r.C0 * (sup_f + r.tail);
    r.margin = r.rhs - r.lhs;
    return r;
}

double kernel_resolution(const PotentialSpec& spec, double tau, double h)
{
    const double ell = std::visit(
        [](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, GaussianBump>) return k.sigma;
            else if constexpr (std::is_same_v<T, SmoothedPowerTail> || std::is_same_v<T, SmoothedLog>) return k.delta;
            else if constexpr (std::is_same_v<T, Morse>) return std::min(k.la, k.lr);
            else return std::numeric_limits<double>::infinity();
        },
        spec.kind());
    return std::exp(-tau) * ell / h;
}

DiagnosticsRecord compute_diagnostics(const DensityField& rho_tilde, double tau, InteractionOperator& op,
                                      const DiagnosticsOptions& opts)
{
    const Grid& g = rho_tilde.grid();
    const int n = g.dim();
    if (op.grid().cells_per_axis() != g.cells_per_axis() || op.grid().half_width() != g.half_width()) {
        throw std::invalid_argument("interaction operator lives on a different grid");
    }
    if (!op.kernel_tau() || *op.kernel_tau() != tau) op.refresh(tau);

    DiagnosticsRecord r;
    r.tau = tau;
    r.t = t_from_tau(tau);
    r.mass = rho_tilde.mass();
    r.min_value = *std::min_element(rho_tilde.values().begin(), rho_tilde.values().end());
    r.second_moment = second_moment(rho_tilde);
    r.entropy = entropy(rho_tilde);
    r.l_log_l = l_log_l(rho_tilde);

    const Field phi = op.potential_field(rho_tilde.view());
    r.E_tilde = rescaled_energy(rho_tilde, phi);
    r.F_tilde = r.E_tilde + 0.5 * r.second_moment;

    {
        const DensityField rho = to_original_frame(rho_tilde, tau);
        double interaction = 0.0;
        if (!op.is_zero()) {
            // Independent path: W itself on the stretched grid.
            InteractionOperator orig(rho.grid(), op.potential(), op.subsamples(), DriftMode::potential_difference);
            orig.refresh(0.0);
            interaction = 0.5 * weighted_integral(rho, orig.potential_field(rho.view()));
        }
        r.E_orig = entropy(rho) + interaction;
    }

    r.E1 = r.entropy + 0.5 * r.second_moment + 0.5 * n * std::log(2.0 * std::numbers::pi) * r.mass;
    r.I1 = fisher_info(rho_tilde);
    if (opts.e2) {
        const auto e2 = relative_entropy_L2(rho_tilde);
        r.E2 = e2.E2;
        r.e2_excluded_mass = e2.excluded_mass;
        r.poincare_gap = poincare_gap(rho_tilde);
    } else {
        r.E2 = std::numeric_limits<double>::quiet_NaN();
        r.e2_excluded_mass = std::numeric_limits<double>::quiet_NaN();
        r.poincare_gap = std::numeric_limits<double>::quiet_NaN();
    }

    const VectorField grad_phi = op.cell_gradient(rho_tilde.view());
    r.J1 = j1(rho_tilde, grad_phi);
    r.J2 = j2(rho_tilde, grad_phi);
    r.J2_lap = j2_lap(rho_tilde, op.laplacian_field(rho_tilde.view()));

    const Field G = gaussian_samples(g);
    r.l1_dist_G = l1_distance(g, rho_tilde.values(), G);
    r.ck_rhs = 2.0 * std::sqrt(std::max(r.E1, 0.0));
    r.lsi_gap = 0.5 * r.I1 - r.E1;
    r.l2_norm = lp_norm(g, rho_tilde.values(), 2.0);
    r.h1_norm = aggdiff::h1_norm(g, rho_tilde.values());
    for (double a : opts.holder_alphas) {
        r.holder.emplace_back(a, holder_seminorm(g, rho_tilde.values(), a, default_holder_options(g, opts.seed)));
    }
    r.kernel_resolution = kernel_resolution(op.potential(), tau, g.spacing());
    return r;
}

}  // namespace aggdiff
