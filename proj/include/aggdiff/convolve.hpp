#pragma once

#include "aggdiff/grid.hpp"

#include <memory>

namespace aggdiff {

/// Zero-padded FFT convolution of density-grid fields with kernel-grid fields.
///
/// The kernel lives on the 2N-per-axis KernelGrid (offsets (k - N) h), so the
/// padded transform length 2N holds every pairwise difference exactly once and
/// the cyclic product equals the linear sum
///     out_i = h^n sum_j K(x_i - x_j) f_j.
/// Not thread-safe: one instance per simulation.
class Convolver {
public:
    explicit Convolver(const Grid& grid);
    ~Convolver();
    Convolver(const Convolver&) = delete;
    Convolver& operator=(const Convolver&) = delete;
    Convolver(Convolver&&) noexcept;
    Convolver& operator=(Convolver&&) noexcept;

    const Grid& grid() const;

    /// Transforms and stores the kernel for subsequent apply() calls.
    void set_kernel(std::span<const double> kernel);
    bool has_kernel() const;

    Field apply(std::span<const double> f);

    /// One-off convolution with an explicit kernel; keeps the stored kernel.
    Field convolve(std::span<const double> f, std::span<const double> kernel);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Linear convolution (conv f)(x_i) = h^n sum_j kernel(x_i - x_j) f_j.
Field conv(const Grid& grid, std::span<const double> f, std::span<const double> kernel);

/// f(x + shift * h/2) on every axis by a spectral phase shift (periodic, so f must decay).
Field half_cell_shift(const Grid& grid, std::span<const double> f, int shift);

/// Kernel-grid samples g(z) at integer offsets z, from a decaying density-grid field g.
/// Offsets beyond the density grid's reach are zero.
Field kernel_from_field(const Grid& grid, std::span<const double> g);

/// (f*g)(x_i) for two decaying density-grid fields, on the density grid.
Field conv_fields(const Grid& grid, std::span<const double> f, std::span<const double> g);

struct FracLaplacianResult {
    Field values;
    /// Set when |f| on the boundary exceeds the decay tolerance 1e-10.
    bool boundary_warning = false;
};

/// (-Laplacian)^s on the periodic box [-L, L]^n: multiplies the DFT by |k|^{2s}.
FracLaplacianResult frac_laplacian(const Grid& grid, std::span<const double> f, double s);

/// || -Lap(f*g) - [(-Lap)^{1-s} f] * [(-Lap)^s g] ||_inf / || -Lap(f*g) ||_inf.
/// The left side differentiates the zero-padded linear convolution; the right side
/// convolves the spectral fractional powers periodically on the doubled box [-2L, 2L]^n,
/// where both convolutions coincide. Returns 0 when the left side vanishes.
double laplacian_split_check(const Grid& grid, std::span<const double> f, std::span<const double> g, double s);

}  // namespace aggdiff
