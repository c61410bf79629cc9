#include "aggdiff/fractional.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>

using namespace aggdiff;

namespace {

double G(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }

Field sampled(const Grid& g, double (*f)(double))
{
    Field out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = f(g.center(i));
    return out;
}

}  // namespace

TEST_CASE("W^{s,2} seminorm of the standard Gaussian via Plancherel")
{
    // Plancherel and int (1 - cos u) |u|^{-1-2s} du = pi / (Gamma(1+2s) sin(pi s)) give
    // [G]^2 = s(1-s) Gamma(s + 1/2) / (Gamma(1 + 2s) sin(pi s)).
    const Grid g(1, 10.0, 1024);
    const Field f = sampled(g, G);
    for (double s : {0.25, 0.5, 0.75}) {
        const double want2 = s * (1 - s) * std::tgamma(s + 0.5) / (std::tgamma(1 + 2 * s) * std::sin(std::numbers::pi * s));
        INFO("s = " << s);
        CHECK(frac_seminorm(g, f, s, 2.0) == Approx(std::sqrt(want2)).epsilon(2e-3));
    }
}

TEST_CASE("seminorm symmetries")
{
    const Grid g(1, 10.0, 512);
    const Field f = sampled(g, G);
    Field twice(f), negated(f), shifted(g.size(), 0.0);
    for (auto& v : twice) v *= 2.0;
    for (auto& v : negated) v = -v;
    for (std::size_t i = 0; i + 5 < g.size(); ++i) shifted[i + 5] = f[i];
    const double a = frac_seminorm(g, f, 0.4, 1.5);
    CHECK(frac_seminorm(g, twice, 0.4, 1.5) == Approx(2 * a).epsilon(1e-13));
    CHECK(frac_seminorm(g, negated, 0.4, 1.5) == Approx(a).epsilon(1e-13));
    CHECK(frac_seminorm(g, shifted, 0.4, 1.5) == Approx(a).epsilon(1e-12));
    CHECK(frac_seminorm(g, Field(g.size(), 0.0), 0.4, 1.5) == 0.0);
    CHECK(frac_norm(g, f, 0.0, 2.0) == Approx(std::pow(4 * std::numbers::pi, -0.25)).epsilon(1e-10));
}

TEST_CASE("dilation scaling lambda^{s - 1/p}")
{
    const Grid g(1, 12.0, 1024);
    for (double lambda : {0.5, 2.0}) {
        CHECK(scaling_check(g, [](double x) { return G(x); }, 0.3, 2.0, lambda) == Approx(1.0).epsilon(1e-2));
        CHECK(scaling_check(g, [](double x) { return G(x); }, 0.6, 1.0, lambda) == Approx(1.0).epsilon(1e-2));
    }
}

TEST_CASE("Young inequality checks")
{
    const Grid g(1, 20.0, 1024);
    const Field f = sampled(g, G);
    const auto r = young_check(g, f, f, 0.0, 0.0, 1.0, 1.0, 1.0);
    // ||G*G||_1 = ||G||_1^2 exactly for nonnegative functions.
    CHECK(r.lhs == Approx(r.rhs_product).epsilon(1e-8));
    CHECK(r.ratio == Approx(1.0).epsilon(1e-8));
    const auto frac = young_check(g, f, f, 0.3, 0.2, 2.0, 1.0, 2.0);
    CHECK(frac.ratio > 0.0);
    CHECK(std::isfinite(frac.ratio));
    CHECK_THROWS_AS(young_check(g, f, f, 0.1, 0.1, 2.0, 2.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(young_check(g, f, f, 0.6, 0.5, 2.0, 1.0, 2.0), std::invalid_argument);
    CHECK_THROWS(frac_seminorm(Grid(2, 1.0, 16), Field(256, 0.0), 0.5, 2.0));
}
