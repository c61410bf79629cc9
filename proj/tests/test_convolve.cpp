#include "aggdiff/convolve.hpp"
#include "aggdiff/density.hpp"
#include "aggdiff/potential.hpp"

#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace aggdiff;

namespace {

double gauss1(double x, double v) { return std::exp(-x * x / (2 * v)) / std::sqrt(2 * std::numbers::pi * v); }

}  // namespace

TEST_CASE("FFT convolution equals the direct double sum")
{
    const Grid g(1, 3.0, 32);
    const KernelGrid k(g);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(g.size()), kern(k.size());
    for (auto& v : f) v = u(rng);
    for (auto& v : kern) v = u(rng);
    const Field fast = conv(g, f, kern);
    const double h = g.spacing();
    const std::size_t N = g.cells_per_axis();
    for (std::size_t i = 0; i < N; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < N; ++j) acc += kern[i + N - j] * f[j];
        CHECK(fast[i] == Approx(h * acc).margin(1e-12));
    }
}

TEST_CASE("2D FFT convolution equals the direct double sum")
{
    const Grid g(2, 2.0, 16);
    const KernelGrid k(g);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Field f(g.size()), kern(k.size());
    for (auto& v : f) v = u(rng);
    for (auto& v : kern) v = u(rng);
    Convolver c(g);
    c.set_kernel(kern);
    const Field fast = c.apply(f);
    const std::size_t N = 16;
    const double h2 = g.cell_volume();
    for (std::size_t i0 : {0u, 5u, 15u}) {
        for (std::size_t i1 : {0u, 9u, 15u}) {
            double acc = 0.0;
            for (std::size_t j0 = 0; j0 < N; ++j0)
                for (std::size_t j1 = 0; j1 < N; ++j1)
                    acc += kern[(i0 + N - j0) * 2 * N + (i1 + N - j1)] * f[j0 * N + j1];
            CHECK(fast[i0 * N + i1] == Approx(h2 * acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("Gaussians convolve to a Gaussian of summed variance")
{
    const Grid g(1, 12.0, 512);
    Field a(g.size()), b(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        a[i] = gauss1(g.center(i), 0.5);
        b[i] = gauss1(g.center(i), 0.8);
    }
    const Field c = conv_fields(g, a, b);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(c[i] - gauss1(g.center(i), 1.3)));
    CHECK(err < 1e-10);
}

TEST_CASE("half-cell shift moves a Gaussian by h/2")
{
    const Grid g(1, 10.0, 256);
    Field f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = gauss1(g.center(i), 1.0);
    const Field s = half_cell_shift(g, f, 1);
    const double h = g.spacing();
    for (std::size_t i = 0; i < g.size(); i += 7) CHECK(s[i] == Approx(gauss1(g.center(i) + 0.5 * h, 1.0)).margin(1e-12));
}

TEST_CASE("kernel_from_field samples g at pairwise offsets")
{
    const Grid g(1, 10.0, 256);
    Field f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = gauss1(g.center(i), 1.0);
    const Field kf = kernel_from_field(g, f);
    const KernelGrid k(g);
    for (std::size_t i = 0; i < k.size(); i += 13) CHECK(kf[i] == Approx(gauss1(k.point(i)[0], 1.0)).margin(1e-12));
}

TEST_CASE("fractional Laplacian with s = 1 is minus the Laplacian")
{
    const Grid g(1, 12.0, 512);
    Field f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = gauss1(g.center(i), 1.0);
    const auto r = frac_laplacian(g, f, 1.0);
    CHECK_FALSE(r.boundary_warning);
    for (std::size_t i = 0; i < g.size(); i += 9) {
        const double x = g.center(i);
        CHECK(r.values[i] == Approx((1.0 - x * x) * gauss1(x, 1.0)).margin(1e-10));
    }
    const auto zero = frac_laplacian(g, f, 0.0);
    for (std::size_t i = 0; i < g.size(); i += 9) CHECK(zero.values[i] == Approx(f[i]).margin(1e-12));

    Field wide(g.size(), 1.0);
    CHECK(frac_laplacian(g, wide, 0.5).boundary_warning);
}

TEST_CASE("Laplacian splits across a convolution")
{
    const Grid g(1, 10.0, 256);
    Field a(g.size()), b(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        a[i] = gauss1(g.center(i) - 0.5, 0.6);
        b[i] = gauss1(g.center(i) + 0.3, 1.1);
    }
    for (double s : {0.25, 0.5, 0.75}) CHECK(laplacian_split_check(g, a, b, s) < 1e-6);
}
