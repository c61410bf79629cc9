#include "aggdiff/fractional.hpp"

#include "aggdiff/convolve.hpp"
#include "aggdiff/density.hpp"

#include <cmath>
#include <stdexcept>

namespace aggdiff {

namespace {

double abs_pow(double x, double p)
{
    const double a = std::abs(x);
    if (p == 1.0) return a;
    if (p == 2.0) return a * a;
    return std::pow(a, p);
}

// Suffix sums S[k] = sum_{m >= k} m^{-q} for k = 1 .. kmax (S[0] unused), q > 1.
std::vector<double> lattice_tail(std::size_t kmax, double q)
{
    // Euler–Maclaurin remainder beyond K: K^{1-q}/(q-1) + K^{-q}/2 + q K^{-q-1}/12 - q(q+1)(q+2) K^{-q-3}/720.
    const double K = static_cast<double>(kmax + 16);
    double s = std::pow(K, 1.0 - q) / (q - 1.0) + 0.5 * std::pow(K, -q) + q * std::pow(K, -q - 1.0) / 12.0 -
               q * (q + 1.0) * (q + 2.0) * std::pow(K, -q - 3.0) / 720.0;
    for (std::size_t m = kmax + 15; m > kmax; --m) s += std::pow(static_cast<double>(m), -q);
    std::vector<double> out(kmax + 1, 0.0);
    for (std::size_t k = kmax; k >= 1; --k) {
        s += std::pow(static_cast<double>(k), -q);
        out[k] = s;
    }
    return out;
}

void require_1d(const Grid& grid, std::span<const double> f)
{
    if (grid.dim() != 1) throw std::invalid_argument("fractional seminorms are implemented for n = 1");
    if (f.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
}

}  // namespace

double frac_seminorm(const Grid& grid, std::span<const double> f, double s, double p)
{
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("frac_seminorm: s must lie in (0, 1)");
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("frac_seminorm: p must lie in [1, inf)");
    require_1d(grid, f);
    const std::size_t N = grid.cells_per_axis();
    const double h = grid.spacing();
    const double sp = s * p;

    // Pair weight depends only on the index offset.
    std::vector<double> w(N, 0.0);
    for (std::size_t k = 1; k < N; ++k) w[k] = h * h / std::pow(static_cast<double>(k) * h, 1.0 + sp);

    // Each unordered pair counted twice to match the full double integral.
    double off = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double row = 0.0;
        for (std::size_t j = i + 1; j < N; ++j) row += abs_pow(f[i] - f[j], p) * w[j - i];
        off += row;
    }
    off *= 2.0;

    const double core = 2.0 * std::pow(0.5 * h, p - sp) / (p - sp);
    // tail[k] = sum_{m >= k} w[m]: the zero extension on the outer lattice.
    const std::vector<double> tail = lattice_tail(N + 1, 1.0 + sp);
    const double wscale = h * h / std::pow(h, 1.0 + sp);
    double diag = 0.0;
    double outside = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double slope;
        if (N == 1) {
            slope = 0.0;
        } else if (i == 0) {
            slope = (f[1] - f[0]) / h;
        } else if (i == N - 1) {
            slope = (f[N - 1] - f[N - 2]) / h;
        } else {
            slope = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        diag += h * abs_pow(slope, p) * core;
        outside += 2.0 * wscale * abs_pow(f[i], p) * (tail[N - i] + tail[i + 1]);
    }
    const double total = off + diag + outside;
    return std::pow(s * (1.0 - s) * total, 1.0 / p);
}

double frac_norm(const Grid& grid, std::span<const double> f, double s, double p)
{
    const double lp = lp_norm(grid, f, p);
    return s == 0.0 ? lp : lp + frac_seminorm(grid, f, s, p);
}

double scaling_check(const Grid& grid, const std::function<double(double)>& f, double s, double p, double lambda)
{
    if (!(lambda > 0.0)) throw std::invalid_argument("scaling_check: lambda must be positive");
    if (grid.dim() != 1) throw std::invalid_argument("scaling_check: n = 1 only");
    Field base(grid.size()), scaled(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.center(i);
        base[i] = f(x);
        scaled[i] = f(lambda * x);
    }
    if (lambda == 1.0) return 1.0;
    const double ref = frac_seminorm(grid, base, s, p);
    return frac_seminorm(grid, scaled, s, p) / (std::pow(lambda, s - 1.0 / p) * ref);
}

YoungResult young_check(const Grid& grid, std::span<const double> f, std::span<const double> g, double s0, double s1,
                        double p0, double p1, double p)
{
    for (double q : {p0, p1, p}) {
        if (!(q >= 1.0)) throw std::invalid_argument("young_check: exponents must be >= 1");
    }
    if (std::abs(1.0 / p + 1.0 - 1.0 / p0 - 1.0 / p1) > 1e-12) {
        throw std::invalid_argument("young_check: exponents violate 1/p + 1 = 1/p0 + 1/p1");
    }
    if (s0 < 0.0 || s1 < 0.0 || !(s0 + s1 < 1.0)) {
        throw std::invalid_argument("young_check: need s0, s1 >= 0 and s0 + s1 < 1");
    }
    require_1d(grid, f);
    require_1d(grid, g);
    const Field fg = conv_fields(grid, f, g);
    YoungResult r;
    r.lhs = frac_norm(grid, fg, s0 + s1, p);
    r.rhs_product = frac_norm(grid, f, s0, p0) * frac_norm(grid, g, s1, p1);
    r.ratio = r.lhs / r.rhs_product;
    return r;
}

}  // namespace aggdiff
