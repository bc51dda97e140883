#pragma once

#include "obmimo/channel_model.hpp"
#include "obmimo/linalg.hpp"
#include "obmimo/nnls.hpp"

#include <vector>

namespace obmimo {

enum class GridSpacing { uniform_angle, uniform_sine };

// Angular dictionary for covariance fitting. One block of columns per local
// cluster mask plus a final block for the common (full-array) component;
// within a block, one column per grid angle, each column the vectorized
// masked steering outer product S a(theta) a(theta)^H S.
struct AngularDictionary {
    int num_antennas = 0;
    int grid_size = 0;
    std::vector<double> grid_deg;
    std::vector<std::vector<int>> masks; // local masks; common block is implicit

    int num_blocks() const { return int(masks.size()) + 1; }
    int num_columns() const { return num_blocks() * grid_size; }
    // Masked steering vector backing column (block, g).
    CVec column_vector(int block, int g) const;
};

// Grid over [-90, 90) degrees, either equally spaced in angle or in
// sin(angle); grid_size <= 0 defaults to 2 * num_antennas.
AngularDictionary build_dictionary(int num_antennas,
                                   const std::vector<std::vector<int>>& local_masks,
                                   int grid_size,
                                   GridSpacing spacing = GridSpacing::uniform_angle);
AngularDictionary build_dictionary(const ClusterGeometry& g, int grid_size,
                                   GridSpacing spacing = GridSpacing::uniform_angle);

// Stacked [Re; Im] of the vectorized dictionary columns: 2 M^2 rows. This is
// the expensive object (rebuild once per mask layout, reuse across fits).
RMat realified_design(const AngularDictionary& d);

struct ApsFit {
    RVec coefficients; // per dictionary column, >= 0
    NnlsStatus status = NnlsStatus::converged;
    double objective = 0.0;
    int iterations = 0;
};

// Fits nonnegative per-angle powers so the dictionary combination matches
// c_h in least squares; c_h may be indefinite (quantized estimates usually
// are), the fit is what restores PSD structure.
ApsFit fit_aps(const AngularDictionary& d, const RMat& design, const CMat& c_h,
               double tolerance = 1e-10);
ApsFit fit_aps(const AngularDictionary& d, const CMat& c_h,
               double tolerance = 1e-10);

// C = sum_g gamma_g s_g s_g^H over the dictionary columns. PSD by
// construction. Throws NegativeCoefficient on any negative weight.
CMat reconstruct_covariance(const AngularDictionary& d, const RVec& gamma);

} // namespace obmimo
