#include "aggdiff/potential.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace aggdiff {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate(const PotentialSpec::Kind& kind)
{
    std::visit(overloaded{
                   [](const ZeroPotential&) {},
                   [](const GaussianBump& g) {
                       if (!(g.sigma > 0.0)) throw std::invalid_argument("gaussian_bump: sigma must be positive");
                   },
                   [](const SmoothedPowerTail& p) {
                       if (!(p.eps > 0.0 && p.eps <= 1.0))
                           throw std::invalid_argument("smoothed_power_tail: eps must lie in (0, 1]");
                       if (!(p.delta > 0.0)) throw std::invalid_argument("smoothed_power_tail: delta must be positive");
                   },
                   [](const SmoothedLog& l) {
                       if (!(l.delta > 0.0)) throw std::invalid_argument("smoothed_log: delta must be positive");
                   },
                   [](const Morse& m) {
                       if (!(m.la > 0.0 && m.lr > 0.0))
                           throw std::invalid_argument("morse: length scales must be positive");
                   },
               },
               kind);
}

double norm3(const Point& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }

Point scaled(const Point& x, double s) { return {x[0] * s, x[1] * s, x[2] * s}; }

// Midpoint subsample coordinates of every kernel cell along one axis.
std::vector<double> subsample_coords(const KernelGrid& kg, int m)
{
    std::vector<double> c(kg.cells_per_axis() * static_cast<std::size_t>(m));
    const double h = kg.spacing();
    for (std::size_t k = 0; k < kg.cells_per_axis(); ++k) {
        for (int j = 0; j < m; ++j) {
            c[k * m + j] = kg.offset(k) + ((j + 0.5) / m - 0.5) * h;
        }
    }
    return c;
}

// Cell average of fn(point) over every kernel cell, tensor m^n midpoint rule.
template <class Fn>
Field cell_average(const KernelGrid& kg, int m, Fn&& fn)
{
    const auto coords = subsample_coords(kg, m);
    const int n = kg.dim();
    const std::size_t per_cell = static_cast<std::size_t>(std::pow(m, n));
    Field out(kg.size());
    for (std::size_t idx = 0; idx < kg.size(); ++idx) {
        std::array<std::size_t, 3> k{0, 0, 0};
        for (int d = 0; d < n; ++d) k[d] = (idx / kg.stride(d)) % kg.cells_per_axis();
        double acc = 0.0;
        for (std::size_t s = 0; s < per_cell; ++s) {
            Point p{0.0, 0.0, 0.0};
            std::size_t rem = s;
            for (int d = n - 1; d >= 0; --d) {
                p[d] = coords[k[d] * m + rem % m];
                rem /= m;
            }
            acc += fn(p);
        }
        out[idx] = acc / static_cast<double>(per_cell);
    }
    return out;
}

// 1D cell averages of exp(-x^2/2s^2), x exp(..), x^2 exp(..) for the separable Gaussian path.
struct GaussianAxisAverages {
    std::vector<double> e, x, xx;
};

GaussianAxisAverages gaussian_axis_averages(const KernelGrid& kg, int m, double sigma)
{
    const auto coords = subsample_coords(kg, m);
    GaussianAxisAverages a;
    const std::size_t nk = kg.cells_per_axis();
    a.e.assign(nk, 0.0);
    a.x.assign(nk, 0.0);
    a.xx.assign(nk, 0.0);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t k = 0; k < nk; ++k) {
        for (int j = 0; j < m; ++j) {
            const double c = coords[k * m + j];
            const double g = std::exp(-c * c * inv2s2);
            a.e[k] += g;
            a.x[k] += c * g;
            a.xx[k] += c * c * g;
        }
        a.e[k] /= m;
        a.x[k] /= m;
        a.xx[k] /= m;
    }
    return a;
}

std::array<std::size_t, 3> kernel_index(const KernelGrid& kg, std::size_t idx)
{
    std::array<std::size_t, 3> k{0, 0, 0};
    for (int d = 0; d < kg.dim(); ++d) k[d] = (idx / kg.stride(d)) % kg.cells_per_axis();
    return k;
}

// Product over axes of the per-axis factor, replacing axis `skip` by `special`.
double axis_product(const KernelGrid& kg, const std::array<std::size_t, 3>& k, const std::vector<double>& base,
                    int skip, const std::vector<double>* special)
{
    double prod = 1.0;
    for (int d = 0; d < kg.dim(); ++d) {
        prod *= (d == skip && special) ? (*special)[k[d]] : base[k[d]];
    }
    return prod;
}

}  // namespace

PotentialSpec::PotentialSpec(Kind kind) : kind_(std::move(kind)) { validate(kind_); }

std::string PotentialSpec::name() const
{
    return std::visit(overloaded{
                          [](const ZeroPotential&) { return std::string("zero"); },
                          [](const GaussianBump&) { return std::string("gaussian_bump"); },
                          [](const SmoothedPowerTail&) { return std::string("smoothed_power_tail"); },
                          [](const SmoothedLog&) { return std::string("smoothed_log"); },
                          [](const Morse&) { return std::string("morse"); },
                      },
                      kind_);
}

double PotentialSpec::profile(double r2) const
{
    return std::visit(overloaded{
                          [](const ZeroPotential&) { return 0.0; },
                          [r2](const GaussianBump& g) {
                              return g.amplitude * std::exp(-r2 / (2.0 * g.sigma * g.sigma));
                          },
                          [r2](const SmoothedPowerTail& p) { return -std::pow(p.delta * p.delta + r2, -0.5 * p.eps); },
                          [r2](const SmoothedLog& l) { return 0.5 * l.chi * std::log(l.delta * l.delta + r2); },
                          [r2](const Morse& m) {
                              const double r = std::sqrt(r2);
                              return -m.ca * std::exp(-r / m.la) + m.cr * std::exp(-r / m.lr);
                          },
                      },
                      kind_);
}

double PotentialSpec::slope_over_r(double r2) const
{
    return std::visit(overloaded{
                          [](const ZeroPotential&) { return 0.0; },
                          [r2](const GaussianBump& g) {
                              const double s2 = g.sigma * g.sigma;
                              return -g.amplitude / s2 * std::exp(-r2 / (2.0 * s2));
                          },
                          [r2](const SmoothedPowerTail& p) {
                              return p.eps * std::pow(p.delta * p.delta + r2, -0.5 * p.eps - 1.0);
                          },
                          [r2](const SmoothedLog& l) { return l.chi / (l.delta * l.delta + r2); },
                          [r2](const Morse& m) {
                              if (r2 == 0.0) {
                                  // The cusp at the origin has no gradient by symmetry.
                                  return 0.0;
                              }
                              const double r = std::sqrt(r2);
                              const double dw = m.ca / m.la * std::exp(-r / m.la) - m.cr / m.lr * std::exp(-r / m.lr);
                              return dw / r;
                          },
                      },
                      kind_);
}

double PotentialSpec::curvature(double r2) const
{
    return std::visit(overloaded{
                          [](const ZeroPotential&) { return 0.0; },
                          [r2](const GaussianBump& g) {
                              const double s2 = g.sigma * g.sigma;
                              return g.amplitude * std::exp(-r2 / (2.0 * s2)) * (r2 / (s2 * s2) - 1.0 / s2);
                          },
                          [r2](const SmoothedPowerTail& p) {
                              const double u = p.delta * p.delta + r2;
                              return p.eps * std::pow(u, -0.5 * p.eps - 2.0) * (u - (p.eps + 2.0) * r2);
                          },
                          [r2](const SmoothedLog& l) {
                              const double u = l.delta * l.delta + r2;
                              return l.chi * (u - 2.0 * r2) / (u * u);
                          },
                          [r2](const Morse& m) {
                              const double r = std::sqrt(r2);
                              return -m.ca / (m.la * m.la) * std::exp(-r / m.la) +
                                     m.cr / (m.lr * m.lr) * std::exp(-r / m.lr);
                          },
                      },
                      kind_);
}

PotentialSpec make_potential(const std::string& kind, const std::vector<std::pair<std::string, double>>& params)
{
    auto get = [&](const std::string& key, double fallback) {
        for (const auto& [k, v] : params) {
            if (k == key) return v;
        }
        return fallback;
    };
    auto check_keys = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : params) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
                throw std::invalid_argument("unknown parameter '" + k + "' for potential " + kind);
            }
        }
    };
    if (kind == "zero") {
        check_keys({});
        return PotentialSpec(ZeroPotential{});
    }
    if (kind == "gaussian_bump") {
        check_keys({"A", "sigma"});
        return PotentialSpec(GaussianBump{get("A", -1.0), get("sigma", 1.0)});
    }
    if (kind == "smoothed_power_tail") {
        check_keys({"eps", "delta"});
        return PotentialSpec(SmoothedPowerTail{get("eps", 0.5), get("delta", 1.0)});
    }
    if (kind == "smoothed_log") {
        check_keys({"chi", "delta"});
        return PotentialSpec(SmoothedLog{get("chi", 0.5), get("delta", 1.0)});
    }
    if (kind == "morse") {
        check_keys({"ca", "la", "cr", "lr"});
        return PotentialSpec(Morse{get("ca", 1.0), get("la", 1.0), get("cr", 0.5), get("lr", 0.5)});
    }
    throw std::invalid_argument("unknown potential kind '" + kind + "'");
}

double eval_W(const PotentialSpec& spec, const Point& x) { return spec.profile(norm3(x)); }

Point eval_gradW(const PotentialSpec& spec, const Point& x)
{
    const double s = spec.slope_over_r(norm3(x));
    return {s * x[0], s * x[1], s * x[2]};
}

double eval_lapW(const PotentialSpec& spec, const Point& x, int dim)
{
    const double r2 = norm3(x);
    if (r2 == 0.0 && std::holds_alternative<Morse>(spec.kind()) && dim >= 2) {
        const auto& m = std::get<Morse>(spec.kind());
        const double dw0 = m.ca / m.la - m.cr / m.lr;
        if (dw0 != 0.0) return std::copysign(std::numeric_limits<double>::infinity(), dw0);
    }
    return spec.curvature(r2) + (dim - 1) * spec.slope_over_r(r2);
}

double eval_rescaled_W(const PotentialSpec& spec, double tau, const Point& y)
{
    return eval_W(spec, scaled(y, std::exp(tau)));
}

Point eval_rescaled_gradW(const PotentialSpec& spec, double tau, const Point& y)
{
    const double s = std::exp(tau);
    return scaled(eval_gradW(spec, scaled(y, s)), s);
}

double eval_rescaled_lapW(const PotentialSpec& spec, double tau, const Point& y, int dim)
{
    const double s = std::exp(tau);
    return s * s * eval_lapW(spec, scaled(y, s), dim);
}

KernelGrid::KernelGrid(const Grid& density_grid)
    : dim_(density_grid.dim()), cells_(2 * density_grid.cells_per_axis()), spacing_(density_grid.spacing())
{
    size_ = 1;
    for (int d = 0; d < dim_; ++d) size_ *= cells_;
    std::size_t s = 1;
    for (int d = dim_ - 1; d >= 0; --d) {
        strides_[d] = s;
        s *= cells_;
    }
}

Point KernelGrid::point(std::size_t idx) const
{
    Point p{0.0, 0.0, 0.0};
    for (int d = 0; d < dim_; ++d) p[d] = offset((idx / strides_[d]) % cells_);
    return p;
}

Field rescaled_potential_samples(const PotentialSpec& spec, double tau, const Grid& grid, int subsamples)
{
    if (subsamples < 1) throw std::invalid_argument("kernel subsamples must be >= 1");
    const KernelGrid kg(grid);
    if (spec.is_zero()) return Field(kg.size(), 0.0);
    if (const auto* g = std::get_if<GaussianBump>(&spec.kind())) {
        const auto a = gaussian_axis_averages(kg, subsamples, g->sigma * std::exp(-tau));
        Field out(kg.size());
        for (std::size_t idx = 0; idx < kg.size(); ++idx) {
            out[idx] = g->amplitude * axis_product(kg, kernel_index(kg, idx), a.e, -1, nullptr);
        }
        return out;
    }
    return cell_average(kg, subsamples, [&](const Point& y) { return eval_rescaled_W(spec, tau, y); });
}

VectorField rescaled_grad_samples(const PotentialSpec& spec, double tau, const Grid& grid, int subsamples)
{
    if (subsamples < 1) throw std::invalid_argument("kernel subsamples must be >= 1");
    const KernelGrid kg(grid);
    VectorField out;
    if (spec.is_zero()) {
        out.components.assign(kg.dim(), Field(kg.size(), 0.0));
        return out;
    }
    if (const auto* g = std::get_if<GaussianBump>(&spec.kind())) {
        const double sig = g->sigma * std::exp(-tau);
        const auto a = gaussian_axis_averages(kg, subsamples, sig);
        const double pref = -g->amplitude / (sig * sig);
        for (int d = 0; d < kg.dim(); ++d) {
            Field comp(kg.size());
            for (std::size_t idx = 0; idx < kg.size(); ++idx) {
                comp[idx] = pref * axis_product(kg, kernel_index(kg, idx), a.e, d, &a.x);
            }
            out.components.push_back(std::move(comp));
        }
        return out;
    }
    for (int d = 0; d < kg.dim(); ++d) {
        out.components.push_back(
            cell_average(kg, subsamples, [&](const Point& y) { return eval_rescaled_gradW(spec, tau, y)[d]; }));
    }
    return out;
}

Field rescaled_lap_samples(const PotentialSpec& spec, double tau, const Grid& grid, int subsamples)
{
    if (subsamples < 1) throw std::invalid_argument("kernel subsamples must be >= 1");
    const KernelGrid kg(grid);
    if (spec.is_zero()) return Field(kg.size(), 0.0);
    if (const auto* g = std::get_if<GaussianBump>(&spec.kind())) {
        const double sig = g->sigma * std::exp(-tau);
        const double s2 = sig * sig;
        const auto a = gaussian_axis_averages(kg, subsamples, sig);
        std::vector<double> second(a.e.size());
        for (std::size_t k = 0; k < a.e.size(); ++k) second[k] = a.xx[k] / (s2 * s2) - a.e[k] / s2;
        Field out(kg.size(), 0.0);
        for (std::size_t idx = 0; idx < kg.size(); ++idx) {
            const auto k = kernel_index(kg, idx);
            double acc = 0.0;
            for (int d = 0; d < kg.dim(); ++d) acc += axis_product(kg, k, a.e, d, &second);
            out[idx] = g->amplitude * acc;
        }
        return out;
    }
    return cell_average(kg, subsamples,
                        [&](const Point& y) { return eval_rescaled_lapW(spec, tau, y, grid.dim()); });
}

double sphere_area(int dim)
{
    switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
    }
}

double ball_volume(int dim) { return sphere_area(dim) / dim; }

NormValue PotentialNorms::grad(double p) const
{
    for (const auto& [q, v] : Lp_gradW) {
        if (q == p) return v;
    }
    throw std::out_of_range("gradient norm not computed for requested p");
}

NormValue PotentialNorms::lap(double p) const
{
    for (const auto& [q, v] : Lp_lapW) {
        if (q == p) return v;
    }
    throw std::out_of_range("laplacian norm not computed for requested p");
}

namespace {

// |g(r)| ~ coefficient * r^-exponent as r -> infinity; exponent = inf means faster than any power.
struct Tail {
    double coefficient = 0.0;
    double exponent = std::numeric_limits<double>::infinity();
};

enum class Quantity { value, gradient, laplacian };

double radial_abs(const PotentialSpec& spec, Quantity q, double r, int dim)
{
    const double r2 = r * r;
    switch (q) {
    case Quantity::value: return std::abs(spec.profile(r2));
    case Quantity::gradient: return std::abs(spec.slope_over_r(r2)) * r;
    case Quantity::laplacian: return std::abs(spec.curvature(r2) + (dim - 1) * spec.slope_over_r(r2));
    }
    return 0.0;
}

Tail tail_model(const PotentialSpec& spec, Quantity q, int dim)
{
    if (const auto* p = std::get_if<SmoothedPowerTail>(&spec.kind())) {
        const double e = p->eps;
        switch (q) {
        case Quantity::value: return {1.0, e};
        case Quantity::gradient: return {e, e + 1.0};
        case Quantity::laplacian: {
            const double lead = dim - e - 2.0;
            if (lead != 0.0) return {e * std::abs(lead), e + 2.0};
            return {e * dim * p->delta * p->delta, e + 4.0};
        }
        }
    }
    if (const auto* l = std::get_if<SmoothedLog>(&spec.kind())) {
        switch (q) {
        case Quantity::value: return {0.0, -1.0};  // grows like log r
        case Quantity::gradient: return {l->chi, 1.0};
        case Quantity::laplacian:
            if (dim != 2) return {l->chi * std::abs(dim - 2.0), 2.0};
            return {2.0 * l->chi * l->delta * l->delta, 4.0};
        }
    }
    return {};
}

// Length scale where the profile has decayed substantially; used to place quadrature breakpoints.
double length_scale(const PotentialSpec& spec)
{
    return std::visit(overloaded{
                          [](const ZeroPotential&) { return 1.0; },
                          [](const GaussianBump& g) { return g.sigma; },
                          [](const SmoothedPowerTail& p) { return p.delta; },
                          [](const SmoothedLog& l) { return l.delta; },
                          [](const Morse& m) { return std::max(m.la, m.lr); },
                      },
                      spec.kind());
}

NormValue radial_lp_norm(const PotentialSpec& spec, Quantity q, double p, int dim)
{
    if (spec.is_zero()) return NormValue::finite(0.0);

    // Singularity at the origin: only the Morse Laplacian when w'(0) != 0.
    double origin_power = 0.0;
    if (const auto* m = std::get_if<Morse>(&spec.kind()); m && q == Quantity::laplacian && dim >= 2) {
        if (m->ca / m->la - m->cr / m->lr != 0.0) {
            origin_power = 1.0;
            if (p >= dim) return NormValue::infinite();
        }
    }

    const Tail tail = tail_model(spec, q, dim);
    if (tail.exponent < 0.0) return NormValue::infinite();
    const bool power_tail = std::isfinite(tail.exponent);
    if (power_tail && tail.exponent * p <= dim) return NormValue::infinite();

    const double ell = length_scale(spec);
    auto integrand = [&](double r) { return std::pow(radial_abs(spec, q, r, dim), p) * std::pow(r, dim - 1); };

    double outer;
    if (power_tail) {
        outer = 1e4 * std::max(ell, 1.0);
    } else {
        outer = ell;
        while (integrand(outer) > 1e-12 * std::pow(ell, dim - 1) || outer < 8.0 * ell) outer *= 2.0;
        outer *= 2.0;
    }

    double total = 0.0;
    double a = 0.0;
    double b = std::min(ell, outer) / 16.0;
    if (origin_power > 0.0) {
        boost::math::quadrature::tanh_sinh<double> ts;
        total += ts.integrate(integrand, 0.0, b);
    } else {
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, b, 15, 1e-13);
    }
    a = b;
    while (a < outer) {
        b = std::min(2.0 * a, outer);
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, a, b, 15, 1e-13);
        a = b;
    }
    if (power_tail) {
        const double k = tail.exponent * p - dim;
        total += std::pow(tail.coefficient, p) * std::pow(outer, -k) / k;
    }
    return NormValue::finite(std::pow(sphere_area(dim) * total, 1.0 / p));
}

NormValue sup_norm(const PotentialSpec& spec)
{
    return std::visit(overloaded{
                          [](const ZeroPotential&) { return NormValue::finite(0.0); },
                          [](const GaussianBump& g) { return NormValue::finite(std::abs(g.amplitude)); },
                          [](const SmoothedPowerTail& p) { return NormValue::finite(std::pow(p.delta, -p.eps)); },
                          [](const SmoothedLog&) { return NormValue::infinite(); },
                          [&spec](const Morse& m) {
                              const double rmax = 60.0 * std::max(m.la, m.lr);
                              double best = 0.0;
                              constexpr int samples = 200000;
                              for (int i = 0; i <= samples; ++i) {
                                  const double r = rmax * i / samples;
                                  best = std::max(best, std::abs(spec.profile(r * r)));
                              }
                              return NormValue::finite(best);
                          },
                      },
                      spec.kind());
}

}  // namespace

PotentialNorms potential_norms(const PotentialSpec& spec, int dim, const std::vector<double>& p_list)
{
    if (dim < 1 || dim > 3) throw std::invalid_argument("potential_norms: dimension must be 1, 2 or 3");
    PotentialNorms out;
    out.sup_W = sup_norm(spec);
    out.L1_W = radial_lp_norm(spec, Quantity::value, 1.0, dim);
    for (double p : p_list) {
        if (!(p >= 1.0)) throw std::invalid_argument("potential_norms: p must be >= 1");
        out.Lp_gradW.emplace_back(p, radial_lp_norm(spec, Quantity::gradient, p, dim));
        out.Lp_lapW.emplace_back(p, radial_lp_norm(spec, Quantity::laplacian, p, dim));
    }
    return out;
}

}  // namespace aggdiff
