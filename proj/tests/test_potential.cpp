#include "aggdiff/potential.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>

using namespace aggdiff;

namespace {

std::vector<PotentialSpec> all_kinds()
{
    return {GaussianBump{0.7, 1.3}, SmoothedPowerTail{0.6, 0.8}, SmoothedLog{0.5, 0.5}, Morse{1.0, 1.0, 0.5, 0.3}};
}

// Plain radial trapezoid of |S^{n-1}| r^{n-1} f(r)^p on [0, R].
double radial_integral(int dim, double R, std::size_t n, const std::function<double(double)>& f)
{
    const double h = R / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double r = h * static_cast<double>(i);
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * std::pow(r, dim - 1) * f(r);
    }
    return sphere_area(dim) * acc * h;
}

}  // namespace

TEST_CASE("gradient and Laplacian match centred finite differences of W")
{
    const Point x{0.37, -0.81, 0.52};
    const double e = 1e-5;
    for (const auto& W : all_kinds()) {
        for (int dim = 1; dim <= 3; ++dim) {
            Point y{};
            for (int d = 0; d < dim; ++d) y[d] = x[d];
            const Point g = eval_gradW(W, y);
            double lap_fd = 0.0;
            for (int d = 0; d < dim; ++d) {
                Point p = y, m = y;
                p[d] += e;
                m[d] -= e;
                CHECK(g[d] == Approx((eval_W(W, p) - eval_W(W, m)) / (2 * e)).margin(1e-8));
                Point p2 = y, m2 = y;
                p2[d] += 1e-3;
                m2[d] -= 1e-3;
                lap_fd += (eval_W(W, p2) - 2 * eval_W(W, y) + eval_W(W, m2)) / 1e-6;
            }
            INFO(W.name() << " dim " << dim);
            CHECK(eval_lapW(W, y, dim) == Approx(lap_fd).margin(1e-5));
        }
    }
}

TEST_CASE("rescaled potential is W(e^tau y) with the chain rule")
{
    const PotentialSpec W = GaussianBump{-1.2, 0.9};
    const double tau = 0.4;
    const Point y{0.3, -0.2, 0.0};
    const double s = std::exp(tau);
    const Point sy{s * y[0], s * y[1], 0.0};
    CHECK(eval_rescaled_W(W, tau, y) == Approx(eval_W(W, sy)));
    CHECK(eval_rescaled_gradW(W, tau, y)[1] == Approx(s * eval_gradW(W, sy)[1]));
    CHECK(eval_rescaled_lapW(W, tau, y, 2) == Approx(s * s * eval_lapW(W, sy, 2)));
}

TEST_CASE("explicit formulas of each kind")
{
    CHECK(eval_W(GaussianBump{2.0, 1.0}, {1.0, 0, 0}) == Approx(2.0 * std::exp(-0.5)));
    CHECK(eval_W(SmoothedPowerTail{0.5, 1.0}, {0.0, 0, 0}) == Approx(-1.0));
    CHECK(eval_W(SmoothedPowerTail{0.5, 1.0}, {std::sqrt(15.0), 0, 0}) == Approx(-0.5));
    CHECK(eval_W(SmoothedLog{0.5, 1.0}, {std::sqrt(std::exp(4.0) - 1.0), 0, 0}) == Approx(1.0));
    CHECK(eval_W(Morse{1.0, 1.0, 0.5, 0.5}, {1.0, 0, 0}) == Approx(-std::exp(-1.0) + 0.5 * std::exp(-2.0)));
    CHECK(eval_W(ZeroPotential{}, {3.0, 1.0, 0}) == 0.0);
    CHECK_THROWS_AS(make_potential("gaussian_bump", {{"bogus", 1.0}}), std::invalid_argument);
    CHECK_THROWS(make_potential("nonsense", {}));
}

TEST_CASE("unit sphere and ball measures")
{
    CHECK(sphere_area(1) == Approx(2.0));
    CHECK(sphere_area(2) == Approx(2 * std::numbers::pi));
    CHECK(sphere_area(3) == Approx(4 * std::numbers::pi));
    CHECK(ball_volume(2) == Approx(std::numbers::pi));
    CHECK(ball_volume(3) == Approx(4.0 / 3.0 * std::numbers::pi));
}

TEST_CASE("potential norms against closed forms and direct quadrature")
{
    const double A = -0.8, sigma = 1.1;
    const PotentialSpec W = GaussianBump{A, sigma};
    for (int dim = 1; dim <= 3; ++dim) {
        const auto norms = potential_norms(W, dim, {1.0, 2.0, 1.5});
        REQUIRE(norms.sup_W.is_finite());
        CHECK(norms.sup_W.value == Approx(std::abs(A)));
        CHECK(norms.L1_W.value == Approx(std::abs(A) * std::pow(2 * std::numbers::pi * sigma * sigma, dim / 2.0)).epsilon(1e-8));
        // |grad W| = |A| r / sigma^2 exp(-r^2 / 2 sigma^2)
        auto grad = [&](double r) { return std::abs(A) * r / (sigma * sigma) * std::exp(-r * r / (2 * sigma * sigma)); };
        for (double p : {1.0, 1.5, 2.0}) {
            const double want = std::pow(radial_integral(dim, 20.0, 200000, [&](double r) { return std::pow(grad(r), p); }), 1.0 / p);
            CHECK(norms.grad(p).value == Approx(want).epsilon(1e-6));
        }
    }

    const auto tail = potential_norms(SmoothedPowerTail{0.6, 1.0}, 2, {1.0, 2.0, 4.0});
    CHECK(tail.sup_W.is_finite());
    CHECK(tail.sup_W.value == Approx(1.0));
    CHECK(tail.L1_W.divergent);
    // |grad W| ~ eps r^{-eps-1}: in L^p(R^2) iff p (eps + 1) > 2.
    CHECK(tail.grad(1.0).divergent);
    CHECK(tail.grad(2.0).is_finite());

    const auto logw = potential_norms(SmoothedLog{0.5, 0.5}, 1, {1.0, 2.0});
    CHECK(logw.sup_W.divergent);
    CHECK(logw.grad(1.0).divergent);
    CHECK(logw.grad(2.0).is_finite());
}

TEST_CASE("kernel grid covers every pairwise offset")
{
    const Grid g(2, 4.0, 16);
    const KernelGrid k(g);
    CHECK(k.cells_per_axis() == 32);
    CHECK(k.size() == 32 * 32);
    CHECK(k.offset(16) == 0.0);
    CHECK(k.offset(0) == Approx(-8.0));
    CHECK(k.offset(31) == Approx(7.5));

    const Grid g1(1, 4.0, 16);
    const auto samples = rescaled_potential_samples(GaussianBump{1.0, 100.0}, 0.0, g1, 4);
    const KernelGrid k1(g1);
    for (std::size_t i = 0; i < k1.size(); i += 5) {
        const double z = k1.point(i)[0];
        // A wide bump is flat to O(z^2 / sigma^2).
        CHECK(samples[i] == Approx(std::exp(-z * z / 2e4)).epsilon(1e-6));
    }
}
