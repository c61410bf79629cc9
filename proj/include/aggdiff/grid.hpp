#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace aggdiff {

using Field = std::vector<double>;
using Point = std::array<double, 3>;

/// Uniform tensor mesh on [-L, L]^n with N cells per axis.
///
/// Cells are stored row-major with the last axis fastest. Cell centres sit at
/// -L + (i + 1/2) h, so the grid is symmetric about the origin and every
/// pairwise centre difference is an integer multiple of h.
class Grid {
public:
    Grid(int dim, double half_width, std::size_t cells_per_axis);

    int dim() const { return dim_; }
    double half_width() const { return half_width_; }
    std::size_t cells_per_axis() const { return cells_; }
    double spacing() const { return spacing_; }
    double cell_volume() const { return cell_volume_; }
    std::size_t size() const { return size_; }

    double center(std::size_t i) const { return -half_width_ + (static_cast<double>(i) + 0.5) * spacing_; }

    /// Flat index stride of axis d.
    std::size_t stride(int d) const { return strides_[d]; }
    std::array<std::size_t, 3> unravel(std::size_t idx) const;
    std::size_t ravel(const std::array<std::size_t, 3>& ijk) const;

    Point point(std::size_t idx) const;
    double radius_sq(std::size_t idx) const;

    /// Same cell count and dimension, half-width multiplied by `factor`.
    Grid stretched(double factor) const { return Grid(dim_, half_width_ * factor, cells_); }

    bool same_shape(const Grid& other) const { return dim_ == other.dim_ && cells_ == other.cells_; }

private:
    int dim_;
    double half_width_;
    std::size_t cells_;
    double spacing_;
    double cell_volume_;
    std::size_t size_;
    std::array<std::size_t, 3> strides_{};
};

Grid make_grid(int dim, double half_width, std::size_t cells_per_axis);

struct VectorField {
    std::vector<Field> components;
};

/// Midpoint quadrature h^n * sum f.
double integrate(const Grid& grid, std::span<const double> f);

/// Central differences inside, second-order one-sided stencils on the boundary.
VectorField gradient(const Grid& grid, std::span<const double> f);
Field partial(const Grid& grid, std::span<const double> f, int axis);
Field laplacian(const Grid& grid, std::span<const double> f);

/// Field sampled pointwise at cell centres.
template <class Fn>
Field sample(const Grid& grid, Fn&& fn)
{
    Field out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out[i] = fn(grid.point(i));
    }
    return out;
}

/// Whether `idx` touches the domain boundary along any axis.
bool is_boundary_cell(const Grid& grid, std::size_t idx);

}  // namespace aggdiff
