#include "aggdiff/checks.hpp"

#include "aggdiff/convolve.hpp"
#include "aggdiff/fractional.hpp"
#include "aggdiff/functionals.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace aggdiff {

namespace {

using Suite = std::vector<CheckLine>;

std::string num(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void expect_close(Suite& out, const std::string& name, double got, double want, double tol)
{
    const double err = std::abs(got - want);
    out.push_back({name, err <= tol, "got " + num(got) + ", want " + num(want) + ", |err| " + num(err) +
                                         " (tol " + num(tol) + ")"});
}

void expect_le(Suite& out, const std::string& name, double got, double bound)
{
    out.push_back({name, got <= bound, num(got) + " <= " + num(bound)});
}

Suite quadrature_suite()
{
    Suite out;
    const double pi = std::numbers::pi;
    {
        const Grid g(1, 10.0, 256);
        const Field f = sample(g, [](const Point& p) { return std::exp(-0.5 * p[0] * p[0]); });
        expect_close(out, "midpoint integral of exp(-x^2/2) = sqrt(2 pi)", integrate(g, f), std::sqrt(2.0 * pi), 1e-12);
    }
    for (int n : {1, 2}) {
        const Grid g(n, 10.0, n == 1 ? 512 : 256);
        const auto rho = gaussian_profile(g, {}, 0.7);
        expect_close(out, "second moment of N(0, 0.7 I), n = " + std::to_string(n), second_moment(rho), 0.7 * n, 1e-10);
    }
    expect_close(out, "|S^2| = 4 pi", sphere_area(3), 4.0 * pi, 1e-14);
    expect_close(out, "|B_1| in R^2 = pi", ball_volume(2), pi, 1e-14);
    {
        const double A = 0.3, sigma = 0.8;
        const auto W = make_potential("gaussian_bump", {{"A", A}, {"sigma", sigma}});
        const auto n1 = potential_norms(W, 1, {1.0});
        expect_close(out, "||W||_1, Gaussian bump n = 1", n1.L1_W.value, A * std::sqrt(2.0 * pi) * sigma, 1e-8);
        expect_close(out, "||W'||_1 = 2|A|, n = 1", n1.grad(1.0).value, 2.0 * A, 1e-8);
        const auto n2 = potential_norms(W, 2, {1.0});
        expect_close(out, "||W||_1, Gaussian bump n = 2", n2.L1_W.value, A * 2.0 * pi * sigma * sigma, 1e-8);
        expect_close(out, "||grad W||_1, Gaussian bump n = 2", n2.grad(1.0).value,
                     A * sigma * std::pow(pi, 1.5) * std::sqrt(2.0), 1e-8);
    }
    {
        // Cell-averaged kernel keeps the gradient mass scaling e^{(1-n) tau} ||grad W||_1.
        const double A = 0.05, sigma = 1.0;
        const auto W = make_potential("gaussian_bump", {{"A", A}, {"sigma", sigma}});
        const Grid g(1, 2.0, 2048);
        for (double tau : {0.0, 1.0, 2.0, 3.0, 4.0}) {
            const auto gs = rescaled_grad_samples(W, tau, g, 8);
            double s = 0.0;
            for (double v : gs.components[0]) s += std::abs(v);
            s *= g.spacing();
            const double want = 2.0 * A;
            out.push_back({"kernel gradient mass scaling, n = 1, tau = " + num(tau), std::abs(s / want - 1.0) <= 0.02,
                           "ratio " + num(s / want)});
        }
    }
    return out;
}

}  // namespace

GaussianClosedForms gaussian_closed_forms(int dim, double mean_sq, double s)
{
    if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("gaussian_closed_forms: need 0 < s < 2");
    const double n = dim;
    GaussianClosedForms c{};
    c.entropy = -0.5 * n * std::log(2.0 * std::numbers::pi * std::numbers::e * s);
    c.E1 = 0.5 * n * (s - 1.0 - std::log(s)) + 0.5 * mean_sq;
    c.I1 = n * (s - 1.0) * (s - 1.0) / s + mean_sq;
    c.E2 = std::pow(s * (2.0 - s), -0.5 * n) * std::exp(mean_sq / (2.0 - s)) - 1.0;
    c.N2 = n * s + mean_sq;
    return c;
}

double lemma44_amplitude(double K, double alpha, double C0)
{
    using boost::math::quadrature::gauss_kronrod;
    auto mass_log = [&](double A) {
        const double R = std::pow(A / K, 1.0 / alpha);
        auto f = [&](double x) {
            const double v = A - K * std::pow(x, alpha);
            return v > 0.0 ? std::abs(v * std::log(v)) : 0.0;
        };
        double total = 0.0;
        if (A > 1.0) {
            const double kink = std::pow((A - 1.0) / K, 1.0 / alpha);
            total += gauss_kronrod<double, 61>::integrate(f, 0.0, kink, 15, 1e-13);
            total += gauss_kronrod<double, 61>::integrate(f, kink, R, 15, 1e-13);
        } else {
            total += gauss_kronrod<double, 61>::integrate(f, 0.0, R, 15, 1e-13);
        }
        return 2.0 * total - C0;
    };
    double lo = 1.0 + 1e-9, hi = 2.0;
    while (mass_log(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("lemma44_amplitude: no bracket");
    }
    if (mass_log(lo) > 0.0) throw std::runtime_error("lemma44_amplitude: C0 too small for A > 1");
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(mass_log, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                                     iters);
    return 0.5 * (r.first + r.second);
}

namespace {

Suite gaussian_oracle_suite()
{
    Suite out;
    struct Case {
        int n;
        Point m;
        double s;
    };
    const std::vector<Case> cases{{1, {0.0, 0, 0}, 1.0}, {1, {0.5, 0, 0}, 0.8}, {1, {-0.3, 0, 0}, 1.4},
                                  {2, {0.4, -0.2, 0}, 1.2}, {2, {0.0, 0.0, 0}, 0.6}};
    for (const auto& c : cases) {
        const Grid g(c.n, 10.0, 512);
        const auto rho = gaussian_profile(g, c.m, c.s);
        double msq = 0.0;
        for (int d = 0; d < c.n; ++d) msq += c.m[d] * c.m[d];
        const auto cf = gaussian_closed_forms(c.n, msq, c.s);
        std::ostringstream tag;
        tag << " N(m, " << c.s << " I), n = " << c.n << ", |m|^2 = " << msq;
        expect_close(out, "entropy" + tag.str(), entropy(rho), cf.entropy, 1e-5);
        expect_close(out, "E1" + tag.str(), relative_entropy_L1(rho), cf.E1, 1e-5);
        expect_close(out, "I1" + tag.str(), fisher_info(rho), cf.I1, 1e-5);
        expect_close(out, "E2" + tag.str(), relative_entropy_L2(rho).E2, cf.E2, 1e-5);
        expect_close(out, "N2" + tag.str(), second_moment(rho), cf.N2, 1e-5);
    }
    return out;
}

Suite convolution_suite(std::uint64_t seed)
{
    Suite out;
    const double pi = std::numbers::pi;
    {
        const Grid g(1, 10.0, 256);
        const auto a = gaussian_profile(g, {}, 0.5);
        const auto b = gaussian_profile(g, {}, 0.8);
        const auto c = conv_fields(g, a.values(), b.values());
        const auto want = gaussian_profile(g, {}, 1.3);
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(c[i] - want.values()[i]));
        expect_le(out, "N(0,0.5) * N(0,0.8) = N(0,1.3), max error", err, 1e-10);
        expect_close(out, "mass of f*g = mass f * mass g", integrate(g, c), 1.0, 1e-10);
    }
    {
        const Grid g(2, 8.0, 64);
        const auto a = gaussian_profile(g, {0.5, 0.0, 0}, 0.4);
        const auto b = gaussian_profile(g, {-0.5, 0.3, 0}, 0.6);
        const auto c = conv_fields(g, a.values(), b.values());
        const auto want = gaussian_profile(g, {0.0, 0.3, 0}, 1.0);
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(c[i] - want.values()[i]));
        expect_le(out, "shifted Gaussians convolve to a shifted Gaussian, n = 2", err, 1e-8);
    }
    {
        const Grid g(1, 12.0, 512);
        const Field f = sample(g, [](const Point& p) { return std::exp(-0.5 * p[0] * p[0]); });
        const auto lap = frac_laplacian(g, f, 1.0);
        double err = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.center(i);
            err = std::max(err, std::abs(lap.values[i] - (1.0 - x * x) * f[i]));
        }
        expect_le(out, "(-Lap)^1 of exp(-x^2/2) = (1 - x^2) exp(-x^2/2)", err, 1e-9);

        // Periodic symbol on the box: (1/L) sum_{m >= 1} k_m sqrt(2 pi) e^{-k_m^2/2} cos(k_m x), k_m = pi m / L.
        const auto half = frac_laplacian(g, f, 0.5);
        const double L = g.half_width();
        double herr = 0.0;
        for (std::size_t i = 0; i < g.size(); i += 8) {
            const double x = g.center(i);
            double v = 0.0;
            for (int m = 1; m * pi / L < 40.0; ++m) {
                const double k = m * pi / L;
                v += k * std::sqrt(2.0 * pi) * std::exp(-0.5 * k * k) * std::cos(k * x);
            }
            herr = std::max(herr, std::abs(half.values[i] - v / L));
        }
        expect_le(out, "(-Lap)^{1/2} of exp(-x^2/2) against its Fourier series on the box", herr, 1e-10);
        out.push_back({"decaying field raises no boundary warning", !lap.boundary_warning, ""});
    }
    {
        const Grid g(1, 12.0, 512);
        const auto a = gaussian_profile(g, {}, 0.6);
        const auto b = gaussian_profile(g, {0.5, 0, 0}, 1.1);
        for (double s : {0.25, 0.5, 0.75}) {
            expect_le(out, "Lap(f*g) = (-Lap)^{1-s} f * (-Lap)^s g, s = " + num(s),
                      laplacian_split_check(g, a.values(), b.values(), s), 1e-6);
        }
    }
    {
        // Discrete Young with s = 0: kernel values at integer offsets make the sum exact.
        const Grid g(1, 5.0, 64);
        const KernelGrid kg(g);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const std::vector<std::pair<double, double>> exps{{1.0, 1.0}, {1.0, 2.0}, {2.0, 2.0}};
        for (int trial = 0; trial < 5; ++trial) {
            Field f(g.size());
            for (auto& v : f) v = u(rng);
            Field k(kg.size(), 0.0);
            for (std::size_t i = kg.size() / 4; i < 3 * kg.size() / 4; ++i) k[i] = u(rng);
            const Field fk = conv(g, f, k);
            const double hk = kg.spacing();
            auto knorm = [&](double p) {
                double s = 0.0;
                for (double v : k) s += std::pow(std::abs(v), p);
                return std::pow(s * hk, 1.0 / p);
            };
            for (const auto& [p0, p1] : exps) {
                const double inv = 1.0 / p0 + 1.0 / p1 - 1.0;
                const double p = inv <= 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / inv;
                const double lhs = lp_norm(g, fk, p);
                const double rhs = lp_norm(g, f, p0) * knorm(p1);
                out.push_back({"Young (p0, p1) = (" + num(p0) + ", " + num(p1) + "), random trial " +
                                   std::to_string(trial),
                               lhs <= rhs * (1.0 + 1e-12), num(lhs) + " <= " + num(rhs)});
            }
        }
    }
    return out;
}

Suite fractional_suite()
{
    Suite out;
    const Grid g(1, 10.0, 1024);
    auto G = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
    for (double s : {0.25, 0.5, 0.75}) {
        for (double p : {1.0, 2.0}) {
            for (double lambda : {0.5, 2.0}) {
                const double r = scaling_check(g, G, s, p, lambda);
                out.push_back({"scaling ratio s = " + num(s) + ", p = " + num(p) + ", lambda = " + num(lambda),
                               r >= 0.97 && r <= 1.03, num(r) + " in [0.97, 1.03]"});
            }
        }
    }
    Field f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = G(g.center(i));
    // s(1-s) int |xi| |f^|^2 = 1/4 for the standard Gaussian, via Plancherel.
    expect_close(out, "[G]_{W^{1/2,2}} = 1/2", frac_seminorm(g, f, 0.5, 2.0), 0.5, 1e-4);
    {
        Field f2(f);
        for (auto& v : f2) v *= 2.0;
        const double a = frac_seminorm(g, f, 0.3, 1.5), b = frac_seminorm(g, f2, 0.3, 1.5);
        expect_close(out, "p-homogeneity [2f] = 2[f]", b / a, 2.0, 1e-12);
        Field shifted(g.size(), 0.0);
        for (std::size_t i = 0; i + 7 < g.size(); ++i) shifted[i + 7] = f[i];
        const double c = frac_seminorm(g, shifted, 0.3, 1.5);
        expect_close(out, "translation by 7 cells leaves the seminorm unchanged", c / a, 1.0, 1e-12);
    }
    {
        const Grid gy(1, 20.0, 1024);
        Field a(gy.size());
        for (std::size_t i = 0; i < gy.size(); ++i) a[i] = G(gy.center(i));
        const auto r = young_check(gy, a, a, 0.0, 0.0, 1.0, 1.0, 1.0);
        expect_le(out, "classical Young ratio, p0 = p1 = p = 1", r.ratio, 1.0 + 1e-6);
    }
    {
        std::vector<double> ratios;
        for (double w : {0.5, 1.0, 2.0}) {
            Field a(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) a[i] = G(g.center(i) / w) / w;
            ratios.push_back(young_check(g, a, a, 0.3, 0.2, 2.0, 1.0, 2.0).ratio);
        }
        const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
        expect_le(out, "fractional Young family spread, widths {0.5, 1, 2}", *mx / *mn, 3.0);
    }
    {
        bool rejected = false;
        try {
            (void)young_check(g, f, f, 0.1, 0.1, 2.0, 2.0, 2.0);
        } catch (const std::invalid_argument&) {
            rejected = true;
        }
        out.push_back({"Young exponent relation enforced", rejected, "(p0, p1, p) = (2, 2, 2) rejected"});
    }
    return out;
}

Suite appendix_c_suite(std::uint64_t seed)
{
    Suite out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto record = [&](const std::string& name, const DensityField& rho) {
        const auto r = appendix_c_check(rho);
        out.push_back({name, r.margin >= 0.0, "margin " + num(r.margin) + " (lhs " + num(r.lhs) + ", rhs " +
                                                  num(r.rhs) + ")"});
    };
    record("standard Gaussian, n = 1", gaussian_profile(Grid(1, 10.0, 512), {}, 1.0));
    record("tall box, n = 1", box_profile(Grid(1, 10.0, 512), {-0.2, 0, 0}, {0.2, 0, 0}));
    for (int k = 0; k < 20; ++k) {
        const int n = 1 + k % 2;
        const Grid g(n, 10.0, n == 1 ? 512 : 128);
        std::ostringstream name;
        name << "random density " << k << ", n = " << n;
        if (k % 5 == 4) {
            const double w = 0.1 + 2.0 * u(rng);
            const double c = -2.0 + 4.0 * u(rng);
            Point lo{}, hi{};
            for (int d = 0; d < n; ++d) {
                lo[d] = c - w;
                hi[d] = c + w;
            }
            name << " (box, half-width " << num(w) << ")";
            record(name.str(), box_profile(g, lo, hi));
            continue;
        }
        const int ncomp = 1 + static_cast<int>(3.0 * u(rng));
        std::vector<MixtureComponent> comps;
        for (int c = 0; c < ncomp; ++c) {
            MixtureComponent m{0.2 + u(rng), {}, 0.05 + 1.15 * u(rng)};
            for (int d = 0; d < n; ++d) m.mean[d] = -3.0 + 6.0 * u(rng);
            comps.push_back(m);
        }
        name << " (" << ncomp << "-component mixture)";
        record(name.str(), gaussian_mixture(g, comps));
    }
    return out;
}

Suite lemma44_suite()
{
    Suite out;
    const double C0 = 1.0;
    for (double alpha : {0.5, 1.0}) {
        std::vector<double> ratios;
        std::ostringstream detail;
        for (double K : {10.0, 1e2, 1e3, 1e4}) {
            const double A = lemma44_amplitude(K, alpha, C0);
            ratios.push_back(A / moc_linf_bound(K, C0, 1, alpha));
            detail << "K=" << K << ": " << num(ratios.back()) << "  ";
        }
        const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
        out.push_back({"sup f_K / (K^{n/(n+a)} (log K)^{-a/(n+a)}) spread <= 1.5, alpha = " + num(alpha),
                       *mx / *mn <= 1.5, detail.str()});
    }
    return out;
}

}  // namespace

std::vector<std::string> check_suite_names()
{
    return {"quadrature", "gaussian-oracles", "convolution", "fractional", "appendix-c", "lemma44-scaling"};
}

std::vector<CheckLine> run_check_suite(const std::string& name, std::uint64_t seed)
{
    if (name == "quadrature") return quadrature_suite();
    if (name == "gaussian-oracles") return gaussian_oracle_suite();
    if (name == "convolution") return convolution_suite(seed);
    if (name == "fractional") return fractional_suite();
    if (name == "appendix-c") return appendix_c_suite(seed);
    if (name == "lemma44-scaling") return lemma44_suite();
    throw std::invalid_argument("unknown check suite '" + name + "'");
}

}  // namespace aggdiff
