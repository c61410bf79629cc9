#include "aggdiff/density.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace aggdiff {

namespace {

constexpr double kLogClamp = 1e-300;
constexpr char kMagic[8] = {'A', 'G', 'G', 'D', 'F', 'L', 'D', '1'};

double safe_log(double v) { return std::log(std::max(v, kLogClamp)); }

// Continuum Gaussian mass inside [-L, L]^n.
double gaussian_mass_inside(const Grid& grid, const Point& mean, double variance)
{
    const double sd = std::sqrt(2.0 * variance);
    double inside = 1.0;
    for (int d = 0; d < grid.dim(); ++d) {
        const double L = grid.half_width();
        const double lost = 0.5 * std::erfc((L - mean[d]) / sd) + 0.5 * std::erfc((L + mean[d]) / sd);
        inside *= 1.0 - lost;
    }
    return inside;
}

Field gaussian_values(const Grid& grid, const Point& mean, double variance)
{
    if (!(variance > 0.0)) throw std::invalid_argument("Gaussian variance must be positive");
    if (1.0 - gaussian_mass_inside(grid, mean, variance) > 1e-10) {
        throw std::invalid_argument("Gaussian clips more than 1e-10 of its mass at the domain boundary");
    }
    const double norm = std::pow(2.0 * std::numbers::pi * variance, -0.5 * grid.dim());
    return sample(grid, [&](const Point& y) {
        double r2 = 0.0;
        for (int d = 0; d < 3; ++d) r2 += (y[d] - mean[d]) * (y[d] - mean[d]);
        return norm * std::exp(-r2 / (2.0 * variance));
    });
}

DensityField normalized(const Grid& grid, Field values)
{
    const double m = integrate(grid, values);
    if (!(m > 0.0)) throw std::invalid_argument("density has no mass on this grid");
    for (double& v : values) v /= m;
    return DensityField(grid, std::move(values));
}

template <class T>
void put_le(std::string& buf, std::size_t offset, T value)
{
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(buf.data() + offset, bytes, sizeof(T));
}

template <class T>
T get_le(const char* buf)
{
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, buf, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

double distance(const Point& a, const Point& b)
{
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

}  // namespace

DensityField::DensityField(Grid grid, Field values) : grid_(std::move(grid)), values_(std::move(values))
{
    if (values_.size() != grid_.size()) throw std::invalid_argument("density values do not match grid size");
    for (double v : values_) {
        if (!(v >= 0.0)) throw std::invalid_argument("density values must be nonnegative and finite");
    }
    refresh_mass();
    if (!(mass_ > 0.0)) throw std::invalid_argument("density must have positive mass");
}

void DensityField::refresh_mass() { mass_ = integrate(grid_, values_); }

DensityField gaussian_profile(const Grid& grid, const Point& mean, double variance)
{
    return normalized(grid, gaussian_values(grid, mean, variance));
}

DensityField heat_kernel_field(const Grid& grid, double t)
{
    if (!(t > 0.0)) throw std::invalid_argument("heat kernel time must be positive");
    return gaussian_profile(grid, {0.0, 0.0, 0.0}, 2.0 * t);
}

DensityField gaussian_mixture(const Grid& grid, const std::vector<MixtureComponent>& components)
{
    if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
    Field total(grid.size(), 0.0);
    for (const auto& c : components) {
        if (!(c.weight > 0.0)) throw std::invalid_argument("mixture weights must be positive");
        const Field g = gaussian_values(grid, c.mean, c.variance);
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += c.weight * g[i];
    }
    return normalized(grid, std::move(total));
}

DensityField box_profile(const Grid& grid, const Point& lo, const Point& hi)
{
    Field v = sample(grid, [&](const Point& y) {
        for (int d = 0; d < grid.dim(); ++d) {
            if (y[d] < lo[d] || y[d] > hi[d]) return 0.0;
        }
        return 1.0;
    });
    return normalized(grid, std::move(v));
}

double entropy(const DensityField& rho)
{
    Field f(rho.values().size());
    std::transform(rho.values().begin(), rho.values().end(), f.begin(),
                   [](double v) { return v > 0.0 ? v * safe_log(v) : 0.0; });
    return integrate(rho.grid(), f);
}

double l_log_l(const DensityField& rho)
{
    Field f(rho.values().size());
    std::transform(rho.values().begin(), rho.values().end(), f.begin(),
                   [](double v) { return v > 0.0 ? v * std::abs(safe_log(v)) : 0.0; });
    return integrate(rho.grid(), f);
}

double second_moment(const DensityField& rho)
{
    const Grid& g = rho.grid();
    Field f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = g.radius_sq(i) * rho.values()[i];
    return integrate(g, f);
}

Point first_moment(const DensityField& rho)
{
    const Grid& g = rho.grid();
    Point m{0.0, 0.0, 0.0};
    for (int d = 0; d < g.dim(); ++d) {
        Field f(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) f[i] = g.point(i)[d] * rho.values()[i];
        m[d] = integrate(g, f);
    }
    return m;
}

double lp_norm(const Grid& grid, std::span<const double> f, double p)
{
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f) m = std::max(m, std::abs(v));
        return m;
    }
    Field g(f.size());
    std::transform(f.begin(), f.end(), g.begin(), [p](double v) { return std::pow(std::abs(v), p); });
    return std::pow(integrate(grid, g), 1.0 / p);
}

double h1_norm(const Grid& grid, std::span<const double> f)
{
    Field sq(f.size());
    std::transform(f.begin(), f.end(), sq.begin(), [](double v) { return v * v; });
    const auto grad = gradient(grid, f);
    for (const auto& comp : grad.components) {
        for (std::size_t i = 0; i < sq.size(); ++i) sq[i] += comp[i] * comp[i];
    }
    return std::sqrt(integrate(grid, sq));
}

HolderOptions default_holder_options(const Grid& grid, std::uint64_t seed)
{
    HolderOptions o;
    o.strategy = grid.dim() == 1 ? HolderStrategy::exhaustive : HolderStrategy::sampled;
    o.seed = seed;
    return o;
}

double holder_seminorm(const Grid& grid, std::span<const double> f, double alpha, const HolderOptions& opts)
{
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("Hölder exponent must lie in (0, 1]");
    if (f.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
    double best = 0.0;
    auto consider = [&](std::size_t i, std::size_t j) {
        if (i == j) return;
        const double q = std::abs(f[i] - f[j]) / std::pow(distance(grid.point(i), grid.point(j)), alpha);
        best = std::max(best, q);
    };

    if (opts.strategy == HolderStrategy::exhaustive) {
        if (grid.dim() == 1) {
            // Distances are (j - i) h; avoid rebuilding points in the O(N^2) loop.
            const double h = grid.spacing();
            std::vector<double> inv_pow(grid.size());
            for (std::size_t k = 1; k < grid.size(); ++k) inv_pow[k] = std::pow(static_cast<double>(k) * h, -alpha);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                for (std::size_t j = i + 1; j < grid.size(); ++j) {
                    best = std::max(best, std::abs(f[i] - f[j]) * inv_pow[j - i]);
                }
            }
            return best;
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            for (std::size_t j = i + 1; j < grid.size(); ++j) consider(i, j);
        }
        return best;
    }

    for (int d = 0; d < grid.dim(); ++d) {
        const std::size_t stride = grid.stride(d);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if ((i / stride) % grid.cells_per_axis() + 1 < grid.cells_per_axis()) consider(i, i + stride);
        }
    }
    const std::size_t samples = opts.samples ? opts.samples : 200 * grid.cells_per_axis();
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t i = pick(rng);
        const std::size_t j = pick(rng);
        consider(i, j);
    }
    return best;
}

double l1_distance(const Grid& grid, std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size() || a.size() != grid.size()) throw std::invalid_argument("l1_distance: size mismatch");
    Field d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a[i] - b[i]);
    return integrate(grid, d);
}

DensityField to_original_frame(const DensityField& rescaled, double tau)
{
    const Grid g = rescaled.grid().stretched(std::exp(tau));
    const double s = std::exp(-rescaled.grid().dim() * tau);
    Field v = rescaled.values();
    for (double& x : v) x *= s;
    return DensityField(g, std::move(v));
}

DensityField to_rescaled_frame(const DensityField& original, double tau)
{
    const Grid g = original.grid().stretched(std::exp(-tau));
    const double s = std::exp(original.grid().dim() * tau);
    Field v = original.values();
    for (double& x : v) x *= s;
    return DensityField(g, std::move(v));
}

double tau_from_t(double t) { return 0.5 * std::log1p(2.0 * t); }

double t_from_tau(double tau) { return 0.5 * std::expm1(2.0 * tau); }

void write_snapshot(const std::filesystem::path& path, const DensityField& rho, double tau, double t)
{
    const Grid& g = rho.grid();
    std::string header(64, '\0');
    std::memcpy(header.data(), kMagic, 8);
    put_le<std::int32_t>(header, 8, g.dim());
    put_le<std::uint64_t>(header, 16, g.cells_per_axis());
    put_le<double>(header, 24, g.half_width());
    put_le<double>(header, 32, tau);
    put_le<double>(header, 40, t);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open snapshot for writing: " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::string body(rho.values().size() * sizeof(double), '\0');
    for (std::size_t i = 0; i < rho.values().size(); ++i) put_le<double>(body, i * sizeof(double), rho.values()[i]);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw std::runtime_error("failed writing snapshot: " + path.string());

    std::ofstream meta(path.string() + ".txt", std::ios::trunc);
    meta << std::setprecision(17);
    meta << "n = " << g.dim() << "\n"
         << "N = " << g.cells_per_axis() << "\n"
         << "L = " << g.half_width() << "\n"
         << "tau = " << tau << "\n"
         << "t = " << t << "\n"
         << "mass = " << rho.mass() << "\n";
}

Snapshot read_snapshot(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open snapshot: " + path.string());
    std::string header(64, '\0');
    in.read(header.data(), 64);
    if (!in || std::memcmp(header.data(), kMagic, 8) != 0) {
        throw std::runtime_error("not a density snapshot: " + path.string());
    }
    const auto n = get_le<std::int32_t>(header.data() + 8);
    const auto N = get_le<std::uint64_t>(header.data() + 16);
    const auto L = get_le<double>(header.data() + 24);
    const auto tau = get_le<double>(header.data() + 32);
    const auto t = get_le<double>(header.data() + 40);
    Grid g(n, L, static_cast<std::size_t>(N));
    std::string body(g.size() * sizeof(double), '\0');
    in.read(body.data(), static_cast<std::streamsize>(body.size()));
    if (!in) throw std::runtime_error("truncated snapshot: " + path.string());
    Field v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = get_le<double>(body.data() + i * sizeof(double));
    return Snapshot{DensityField(g, std::move(v)), tau, t};
}

}  // namespace aggdiff
