#include "aggdiff/interaction.hpp"

#include <stdexcept>

namespace aggdiff {

std::string to_string(DriftMode mode)
{
    return mode == DriftMode::potential_difference ? "potential_difference" : "gradient_samples";
}

DriftMode drift_mode_from_string(const std::string& s)
{
    if (s == "potential_difference") return DriftMode::potential_difference;
    if (s == "gradient_samples") return DriftMode::gradient_samples;
    throw std::invalid_argument("unknown drift mode '" + s + "'");
}

InteractionOperator::InteractionOperator(const Grid& grid, PotentialSpec spec, int subsamples, DriftMode mode)
    : grid_(grid), spec_(std::move(spec)), subsamples_(subsamples), mode_(mode), conv_(grid)
{
    if (subsamples < 1) throw std::invalid_argument("kernel subsamples must be >= 1");
    if (mode_ == DriftMode::gradient_samples) {
        for (int d = 0; d < grid.dim(); ++d) grad_conv_.emplace_back(grid);
    }
}

void InteractionOperator::refresh(double tau)
{
    tau_ = tau;
    lap_ready_ = false;
    if (is_zero()) return;
    conv_.set_kernel(rescaled_potential_samples(spec_, tau, grid_, subsamples_));
    if (mode_ == DriftMode::gradient_samples) {
        const auto g = rescaled_grad_samples(spec_, tau, grid_, subsamples_);
        for (int d = 0; d < grid_.dim(); ++d) grad_conv_[d].set_kernel(g.components[d]);
    }
}

void InteractionOperator::require_kernel() const
{
    if (!tau_) throw std::logic_error("InteractionOperator used before refresh()");
}

Field InteractionOperator::potential_field(std::span<const double> rho)
{
    require_kernel();
    if (is_zero()) return Field(grid_.size(), 0.0);
    return conv_.apply(rho);
}

VectorField InteractionOperator::face_gradient(std::span<const double> rho)
{
    require_kernel();
    VectorField out;
    const std::size_t n = grid_.cells_per_axis();
    if (is_zero()) {
        out.components.assign(grid_.dim(), Field(grid_.size(), 0.0));
        return out;
    }
    if (mode_ == DriftMode::potential_difference) {
        const Field phi = conv_.apply(rho);
        const double inv_h = 1.0 / grid_.spacing();
        for (int d = 0; d < grid_.dim(); ++d) {
            const std::size_t s = grid_.stride(d);
            Field f(grid_.size(), 0.0);
            for (std::size_t i = 0; i < grid_.size(); ++i) {
                if ((i / s) % n + 1 < n) f[i] = (phi[i + s] - phi[i]) * inv_h;
            }
            out.components.push_back(std::move(f));
        }
        return out;
    }
    for (int d = 0; d < grid_.dim(); ++d) {
        const Field g = grad_conv_[d].apply(rho);
        const std::size_t s = grid_.stride(d);
        Field f(grid_.size(), 0.0);
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            if ((i / s) % n + 1 < n) f[i] = 0.5 * (g[i] + g[i + s]);
        }
        out.components.push_back(std::move(f));
    }
    return out;
}

VectorField InteractionOperator::cell_gradient(std::span<const double> rho)
{
    require_kernel();
    if (is_zero()) {
        VectorField out;
        out.components.assign(grid_.dim(), Field(grid_.size(), 0.0));
        return out;
    }
    if (mode_ == DriftMode::potential_difference) {
        const Field phi = conv_.apply(rho);
        return gradient(grid_, phi);
    }
    VectorField out;
    for (int d = 0; d < grid_.dim(); ++d) out.components.push_back(grad_conv_[d].apply(rho));
    return out;
}

Field InteractionOperator::laplacian_field(std::span<const double> rho)
{
    require_kernel();
    if (is_zero()) return Field(grid_.size(), 0.0);
    if (!lap_ready_) {
        lap_kernel_ = rescaled_lap_samples(spec_, *tau_, grid_, subsamples_);
        lap_ready_ = true;
    }
    return conv_.convolve(rho, lap_kernel_);
}

}  // namespace aggdiff
