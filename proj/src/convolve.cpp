#include "aggdiff/convolve.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace aggdiff {

namespace {

// The FFTW planner is not re-entrant; execution on distinct plans is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t count)
{
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(count, 1)));
    if (!p) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

// Real-to-complex / complex-to-real plan pair on an n-dimensional cube of side `side`.
class RealFft {
public:
    RealFft(int dim, std::size_t side) : dim_(dim), side_(side)
    {
        real_size_ = 1;
        for (int d = 0; d < dim; ++d) real_size_ *= side;
        complex_size_ = real_size_ / side * (side / 2 + 1);
        real_ = fftw_buffer<double>(real_size_);
        spec_ = fftw_buffer<fftw_complex>(complex_size_);
        std::array<int, 3> dims{};
        for (int d = 0; d < dim; ++d) dims[d] = static_cast<int>(side);
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_r2c(dim, dims.data(), real_.get(), spec_.get(), FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_c2r(dim, dims.data(), spec_.get(), real_.get(), FFTW_ESTIMATE);
        if (!forward_ || !backward_) throw std::runtime_error("FFTW plan creation failed");
    }
    ~RealFft()
    {
        std::lock_guard lock(planner_mutex());
        if (forward_) fftw_destroy_plan(forward_);
        if (backward_) fftw_destroy_plan(backward_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* real() { return real_.get(); }
    std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(spec_.get()); }
    std::size_t real_size() const { return real_size_; }
    std::size_t complex_size() const { return complex_size_; }
    std::size_t side() const { return side_; }
    int dim() const { return dim_; }

    void forward() { fftw_execute(forward_); }
    // Unnormalized: the caller divides by real_size().
    void backward() { fftw_execute(backward_); }

    // Signed frequency index of each axis for complex-array entry `c`.
    std::array<long, 3> frequency(std::size_t c) const
    {
        std::array<long, 3> k{0, 0, 0};
        const std::size_t last = side_ / 2 + 1;
        std::size_t rem = c;
        for (int d = dim_ - 1; d >= 0; --d) {
            const std::size_t extent = (d == dim_ - 1) ? last : side_;
            const auto j = static_cast<long>(rem % extent);
            rem /= extent;
            k[d] = (j <= static_cast<long>(side_ / 2)) ? j : j - static_cast<long>(side_);
        }
        return k;
    }

private:
    int dim_;
    std::size_t side_;
    std::size_t real_size_;
    std::size_t complex_size_;
    FftwBuffer<double> real_;
    FftwBuffer<fftw_complex> spec_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

// Density-grid field <-> leading [0,N)^n block of a padded cube.
void scatter_block(const Grid& grid, std::span<const double> f, double* padded, std::size_t side)
{
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const auto ijk = grid.unravel(idx);
        std::size_t p = 0;
        for (int d = 0; d < grid.dim(); ++d) p = p * side + ijk[d];
        padded[p] = f[idx];
    }
}

void gather_block(const Grid& grid, const double* padded, std::size_t side, double scale, Field& out)
{
    out.resize(grid.size());
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const auto ijk = grid.unravel(idx);
        std::size_t p = 0;
        for (int d = 0; d < grid.dim(); ++d) p = p * side + ijk[d];
        out[idx] = padded[p] * scale;
    }
}

double boundary_max(const Grid& grid, std::span<const double> f)
{
    double m = 0.0;
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        if (is_boundary_cell(grid, idx)) m = std::max(m, std::abs(f[idx]));
    }
    return m;
}

// Applies a spectral multiplier on the periodic N-point box; symbol(k) receives wavenumbers.
template <class Symbol>
Field periodic_multiply(const Grid& grid, std::span<const double> f, Symbol&& symbol)
{
    if (f.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
    RealFft fft(grid.dim(), grid.cells_per_axis());
    std::copy(f.begin(), f.end(), fft.real());
    fft.forward();
    const double k0 = std::numbers::pi / grid.half_width();
    const long nyquist = static_cast<long>(grid.cells_per_axis() / 2);
    auto* spec = fft.spectrum();
    for (std::size_t c = 0; c < fft.complex_size(); ++c) {
        const auto j = fft.frequency(c);
        std::array<double, 3> k{0.0, 0.0, 0.0};
        std::array<bool, 3> nyq{false, false, false};
        for (int d = 0; d < grid.dim(); ++d) {
            k[d] = k0 * static_cast<double>(j[d]);
            nyq[d] = std::abs(j[d]) == nyquist;
        }
        spec[c] *= symbol(k, nyq);
    }
    fft.backward();
    Field out(fft.real(), fft.real() + fft.real_size());
    const double scale = 1.0 / static_cast<double>(fft.real_size());
    for (double& v : out) v *= scale;
    return out;
}

}  // namespace

struct Convolver::Impl {
    Grid grid;
    RealFft fft;
    std::vector<std::complex<double>> kernel_hat;

    explicit Impl(const Grid& g) : grid(g), fft(g.dim(), 2 * g.cells_per_axis()) {}

    std::vector<std::complex<double>> transform_kernel(std::span<const double> kernel)
    {
        const std::size_t m = fft.side();
        const std::size_t n = grid.cells_per_axis();
        if (kernel.size() != fft.real_size()) {
            throw std::invalid_argument("kernel does not live on the kernel grid of this density grid");
        }
        double* buf = fft.real();
        // Natural order (offset k - N) to FFT order (offset mod 2N).
        for (std::size_t idx = 0; idx < kernel.size(); ++idx) {
            std::size_t rem = idx;
            std::size_t stride = 1;
            std::size_t target = 0;
            for (int d = grid.dim() - 1; d >= 0; --d) {
                const std::size_t k = rem % m;
                rem /= m;
                target += ((k + n) % m) * stride;
                stride *= m;
            }
            buf[target] = kernel[idx];
        }
        fft.forward();
        const auto* spec = fft.spectrum();
        return {spec, spec + fft.complex_size()};
    }

    Field run(std::span<const double> f, const std::vector<std::complex<double>>& khat)
    {
        if (f.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
        const std::size_t m = fft.side();
        double* buf = fft.real();
        std::fill(buf, buf + fft.real_size(), 0.0);
        scatter_block(grid, f, buf, m);
        fft.forward();
        auto* spec = fft.spectrum();
        for (std::size_t c = 0; c < fft.complex_size(); ++c) spec[c] *= khat[c];
        fft.backward();
        Field out;
        gather_block(grid, buf, m, grid.cell_volume() / static_cast<double>(fft.real_size()), out);
        return out;
    }
};

Convolver::Convolver(const Grid& grid) : impl_(std::make_unique<Impl>(grid)) {}
Convolver::~Convolver() = default;
Convolver::Convolver(Convolver&&) noexcept = default;
Convolver& Convolver::operator=(Convolver&&) noexcept = default;

const Grid& Convolver::grid() const { return impl_->grid; }

void Convolver::set_kernel(std::span<const double> kernel) { impl_->kernel_hat = impl_->transform_kernel(kernel); }

bool Convolver::has_kernel() const { return !impl_->kernel_hat.empty(); }

Field Convolver::apply(std::span<const double> f)
{
    if (!has_kernel()) throw std::logic_error("Convolver::apply called before set_kernel");
    return impl_->run(f, impl_->kernel_hat);
}

Field Convolver::convolve(std::span<const double> f, std::span<const double> kernel)
{
    const auto khat = impl_->transform_kernel(kernel);
    return impl_->run(f, khat);
}

Field conv(const Grid& grid, std::span<const double> f, std::span<const double> kernel)
{
    Convolver c(grid);
    return c.convolve(f, kernel);
}

Field half_cell_shift(const Grid& grid, std::span<const double> f, int shift)
{
    const double dx = 0.5 * shift * grid.spacing();
    const int dim = grid.dim();
    return periodic_multiply(grid, f, [&](const std::array<double, 3>& k, const std::array<bool, 3>& nyq) {
        std::complex<double> z = 1.0;
        for (int d = 0; d < dim; ++d) {
            // The Nyquist mode has no well-defined real shift; keep its even part.
            z *= nyq[d] ? std::complex<double>(std::cos(k[d] * dx), 0.0) : std::polar(1.0, k[d] * dx);
        }
        return z;
    });
}

Field kernel_from_field(const Grid& grid, std::span<const double> g)
{
    // Density centres shifted by -h/2 sit at integer offsets (i - N/2) h = kernel index i + N/2.
    const Field shifted = half_cell_shift(grid, g, -1);
    const std::size_t n = grid.cells_per_axis();
    const std::size_t m = 2 * n;
    std::size_t ksize = 1;
    for (int d = 0; d < grid.dim(); ++d) ksize *= m;
    Field kernel(ksize, 0.0);
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const auto ijk = grid.unravel(idx);
        std::size_t k = 0;
        for (int d = 0; d < grid.dim(); ++d) k = k * m + (ijk[d] + n / 2);
        kernel[k] = shifted[idx];
    }
    return kernel;
}

Field conv_fields(const Grid& grid, std::span<const double> f, std::span<const double> g)
{
    return conv(grid, f, kernel_from_field(grid, g));
}

FracLaplacianResult frac_laplacian(const Grid& grid, std::span<const double> f, double s)
{
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("fractional order must lie in [0, 1]");
    FracLaplacianResult r;
    r.boundary_warning = boundary_max(grid, f) > 1e-10;
    const int dim = grid.dim();
    r.values = periodic_multiply(grid, f, [&](const std::array<double, 3>& k, const std::array<bool, 3>&) {
        double k2 = 0.0;
        for (int d = 0; d < dim; ++d) k2 += k[d] * k[d];
        return std::complex<double>(s == 0.0 ? 1.0 : std::pow(k2, s), 0.0);
    });
    return r;
}

namespace {

// Periodic convolution h^n sum_j a_j b(x_i - x_j) on the grid's own box, with b read
// off its trigonometric interpolant (the offsets x_i - x_j fall between centres).
Field periodic_conv(const Grid& grid, std::span<const double> a, std::span<const double> b)
{
    RealFft fa(grid.dim(), grid.cells_per_axis());
    RealFft fb(grid.dim(), grid.cells_per_axis());
    std::copy(a.begin(), a.end(), fa.real());
    std::copy(b.begin(), b.end(), fb.real());
    fa.forward();
    fb.forward();
    const double k0 = std::numbers::pi / grid.half_width();
    const double x0 = grid.center(0);
    const long nyquist = static_cast<long>(grid.cells_per_axis() / 2);
    auto* sa = fa.spectrum();
    const auto* sb = fb.spectrum();
    for (std::size_t c = 0; c < fa.complex_size(); ++c) {
        const auto j = fa.frequency(c);
        std::complex<double> phase = 1.0;
        for (int d = 0; d < grid.dim(); ++d) {
            const double arg = -k0 * static_cast<double>(j[d]) * x0;
            phase *= std::abs(j[d]) == nyquist ? std::complex<double>(std::cos(arg), 0.0) : std::polar(1.0, arg);
        }
        sa[c] *= sb[c] * phase;
    }
    fa.backward();
    Field out(fa.real(), fa.real() + fa.real_size());
    const double scale = grid.cell_volume() / static_cast<double>(fa.real_size());
    for (double& v : out) v *= scale;
    return out;
}

// Copies a field into the centre of the grid with twice the half-width and cell count.
Field embed_doubled(const Grid& grid, const Grid& big, std::span<const double> f)
{
    Field out(big.size(), 0.0);
    const std::size_t off = grid.cells_per_axis() / 2;
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        auto ijk = grid.unravel(idx);
        for (int d = 0; d < grid.dim(); ++d) ijk[d] += off;
        out[big.ravel(ijk)] = f[idx];
    }
    return out;
}

}  // namespace

double laplacian_split_check(const Grid& grid, std::span<const double> f, std::span<const double> g, double s)
{
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("split order must lie in (0, 1)");
    if (grid.cells_per_axis() % 2 != 0) throw std::invalid_argument("split check needs an even cell count");
    // On [-2L, 2L]^n the periodic and linear convolutions of fields supported in [-L, L]^n agree,
    // so the fractional powers (whose tails are long) can be convolved periodically.
    const Grid big(grid.dim(), 2.0 * grid.half_width(), 2 * grid.cells_per_axis());
    const Field F = embed_doubled(grid, big, f);
    const Field G = embed_doubled(grid, big, g);
    const Field lhs = frac_laplacian(big, conv_fields(big, F, G), 1.0).values;
    const Field rhs = periodic_conv(big, frac_laplacian(big, F, 1.0 - s).values, frac_laplacian(big, G, s).values);
    double scale = 0.0;
    double diff = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        scale = std::max(scale, std::abs(lhs[i]));
        diff = std::max(diff, std::abs(lhs[i] - rhs[i]));
    }
    return scale == 0.0 ? 0.0 : diff / scale;
}

}  // namespace aggdiff
