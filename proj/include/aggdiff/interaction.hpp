#pragma once

#include "aggdiff/convolve.hpp"
#include "aggdiff/potential.hpp"

#include <optional>

namespace aggdiff {

/// How the interaction drift grad(W~ * rho) reaches the cell faces.
enum class DriftMode {
    /// Phi = (cell-averaged W~) * rho, face drift (Phi_{i+1} - Phi_i) / h.
    potential_difference,
    /// Convolve rho with cell-averaged grad W~ samples, average the two cells of a face.
    gradient_samples,
};

std::string to_string(DriftMode mode);
DriftMode drift_mode_from_string(const std::string& s);

/// W~(tau) * rho and its derivatives on one density grid, with cached kernel transforms.
class InteractionOperator {
public:
    InteractionOperator(const Grid& grid, PotentialSpec spec, int subsamples, DriftMode mode);

    const Grid& grid() const { return grid_; }
    const PotentialSpec& potential() const { return spec_; }
    DriftMode mode() const { return mode_; }
    int subsamples() const { return subsamples_; }
    bool is_zero() const { return spec_.is_zero(); }

    /// Re-samples the kernels at rescaled time tau (tau = 0 gives W itself).
    void refresh(double tau);
    std::optional<double> kernel_tau() const { return tau_; }

    /// W~ * rho at cell centres.
    Field potential_field(std::span<const double> rho);

    /// Face-normal drift d/dy_d (W~ * rho) on the face between cell i and its +d neighbour,
    /// stored at index i; the last cell along each axis holds 0.
    VectorField face_gradient(std::span<const double> rho);

    /// Cell-centred gradient of W~ * rho, consistent with the drift mode.
    VectorField cell_gradient(std::span<const double> rho);

    /// (Laplacian W~) * rho from cell-averaged Laplacian samples.
    Field laplacian_field(std::span<const double> rho);

private:
    void require_kernel() const;

    Grid grid_;
    PotentialSpec spec_;
    int subsamples_;
    DriftMode mode_;
    std::optional<double> tau_;
    Convolver conv_;
    std::vector<Convolver> grad_conv_;
    bool lap_ready_ = false;
    Field lap_kernel_;
};

}  // namespace aggdiff
