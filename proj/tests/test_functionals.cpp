#include "aggdiff/checks.hpp"
#include "aggdiff/functionals.hpp"
#include "aggdiff/interaction.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>

using namespace aggdiff;

TEST_CASE("relative entropies and Fisher information of shifted, scaled Gaussians")
{
    const Grid g(1, 10.0, 512);
    for (double s : {0.6, 1.0, 1.4}) {
        const double m = 0.3;
        const auto rho = gaussian_profile(g, {m, 0, 0}, s);
        // Independent closed forms for N(m, s) against N(0, 1).
        const double E1 = 0.5 * (s - 1 - std::log(s)) + 0.5 * m * m;
        const double I1 = (s - 1) * (s - 1) / s + m * m;
        const double E2 = std::exp(m * m / (2 - s)) / std::sqrt(s * (2 - s)) - 1;
        CHECK(relative_entropy_L1(rho) == Approx(E1).margin(1e-7));
        CHECK(fisher_info(rho) == Approx(I1).margin(1e-6));
        CHECK(relative_entropy_L2(rho).E2 == Approx(E2).margin(1e-6));
        CHECK(relative_entropy_L2(rho).E2_identity == Approx(relative_entropy_L2(rho).E2).margin(1e-10));
        CHECK(lsi_gap(rho) >= -1e-8);
        CHECK(poincare_gap(rho) >= -1e-8);
        const auto cf = gaussian_closed_forms(1, m * m, s);
        CHECK(cf.E1 == Approx(E1));
        CHECK(cf.I1 == Approx(I1));
    }
}

TEST_CASE("free energy reduces to entropy without interaction")
{
    const Grid g(1, 10.0, 256);
    const auto rho = gaussian_profile(g, {0, 0, 0}, 1.0);
    const Field zero(g.size(), 0.0);
    CHECK(free_energy(rho, zero) == Approx(entropy(rho)));
    CHECK(f_tilde(rho, zero) == Approx(entropy(rho) + 0.5 * second_moment(rho)));
    CHECK(f_tilde_direct(rho, zero) == Approx(f_tilde(rho, zero)).epsilon(1e-12));
}

TEST_CASE("interaction energy of a Gaussian bump against a Gaussian density")
{
    // rho = N(0, s), W = A exp(-x^2 / 2 sigma^2): int rho (W * rho) = A sigma / sqrt(sigma^2 + 2 s).
    const Grid g(1, 10.0, 512);
    const double A = 0.3, sigma = 0.9, s = 0.8;
    const auto rho = gaussian_profile(g, {0, 0, 0}, s);
    InteractionOperator op(g, GaussianBump{A, sigma}, 8, DriftMode::potential_difference);
    op.refresh(0.0);
    const Field wc = op.potential_field(rho.view());
    const double pair = 2.0 * (free_energy(rho, wc) - entropy(rho));
    CHECK(pair == Approx(A * sigma / std::sqrt(sigma * sigma + 2 * s)).epsilon(1e-4));
}

TEST_CASE("energy identity between frames")
{
    const Grid g(1, 8.0, 256);
    const auto rho = gaussian_profile(g, {0.2, 0, 0}, 1.1);
    CHECK(energy_identity_residual(rho, 0.7, GaussianBump{0.05, 1.0}, 8) < 1e-6);
}

TEST_CASE("Gaussian samples and diagnostics record layout")
{
    const Grid g(1, 10.0, 256);
    const Field G = gaussian_samples(g);
    CHECK(G[128] == Approx(std::exp(-0.5 * g.center(128) * g.center(128)) / std::sqrt(2 * std::numbers::pi)));

    const auto cols = record_columns({0.5, 1.0});
    DiagnosticsRecord r;
    r.holder = {{0.5, 1.0}, {1.0, 2.0}};
    r.E1 = 0.25;
    CHECK(cols.size() == record_values(r).size());
    CHECK(cols.front() == "tau");
    CHECK(std::find(cols.begin(), cols.end(), "holder_0.5") != cols.end());
    CHECK(record_value(r, "E1") == 0.25);
    CHECK_THROWS_AS(record_value(r, "nope"), std::out_of_range);
}

TEST_CASE("compute_diagnostics at the steady state")
{
    const Grid g(1, 10.0, 512);
    const auto G = gaussian_profile(g, {0, 0, 0}, 1.0);
    InteractionOperator op(g, PotentialSpec{}, 8, DriftMode::potential_difference);
    DiagnosticsOptions opts;
    opts.holder_alphas = {0.5};
    const auto r = compute_diagnostics(G, 0.0, op, opts);
    CHECK(r.mass == Approx(1.0));
    CHECK(std::abs(r.E1) < 1e-9);
    CHECK(std::abs(r.I1) < 1e-6);
    CHECK(std::abs(r.E2) < 1e-9);
    CHECK(r.l1_dist_G < 1e-7);
    CHECK(r.second_moment == Approx(1.0).epsilon(1e-9));
    CHECK(r.J1 == 0.0);
    REQUIRE(r.holder.size() == 1);
    CHECK(r.holder[0].second > 0.0);
}

TEST_CASE("L log L bound on a Gaussian and a box")
{
    const Grid g(1, 10.0, 512);
    for (const auto& rho : {gaussian_profile(g, {0, 0, 0}, 0.5), box_profile(g, {-0.2, 0, 0}, {0.2, 0, 0})}) {
        const auto r = appendix_c_check(rho);
        CHECK(r.lhs == Approx(l_log_l(rho)));
        CHECK(r.lhs <= r.rhs);
        CHECK(r.C0 == Approx(2.0 * r.r0));
    }
}

TEST_CASE("modulus-of-continuity bound and kernel resolution")
{
    const double K = 100.0;
    CHECK(moc_linf_bound(K, 1.0, 1, 0.5) == Approx(std::pow(K, 1 / 1.5) * std::pow(std::log(K), -0.5 / 1.5)));
    CHECK(kernel_resolution(PotentialSpec{}, 0.0, 0.1) == std::numeric_limits<double>::infinity());
    CHECK(kernel_resolution(GaussianBump{1.0, 1.0}, 1.0, 0.1) == Approx(kernel_resolution(GaussianBump{1.0, 1.0}, 0.0, 0.1) * std::exp(-1.0)));
}
