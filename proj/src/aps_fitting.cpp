#include "obmimo/aps_fitting.hpp"

#include "obmimo/errors.hpp"

#include <cmath>

namespace obmimo {

namespace {

constexpr double kRadToDeg = 57.295779513082320877;

void validate_masks(int num_antennas, const std::vector<std::vector<int>>& masks) {
    for (const auto& mask : masks) {
        if (mask.empty())
            throw DimensionMismatch("dictionary: empty antenna mask");
        int prev = -1;
        for (int m : mask) {
            if (m < 0 || m >= num_antennas)
                throw DimensionMismatch("dictionary: mask index out of range");
            if (m <= prev)
                throw DimensionMismatch("dictionary: mask must be sorted and unique");
            prev = m;
        }
    }
}

} // namespace

CVec AngularDictionary::column_vector(int block, int g) const {
    if (block < 0 || block >= num_blocks() || g < 0 || g >= grid_size)
        throw DimensionMismatch("dictionary: column index out of range");
    CVec a = steering_vector(grid_deg[std::size_t(g)], num_antennas);
    if (block < int(masks.size())) {
        CVec masked = CVec::Zero(num_antennas);
        for (int m : masks[std::size_t(block)])
            masked(m) = a(m);
        return masked;
    }
    return a;
}

AngularDictionary build_dictionary(int num_antennas,
                                   const std::vector<std::vector<int>>& local_masks,
                                   int grid_size, GridSpacing spacing) {
    if (num_antennas < 1)
        throw DimensionMismatch("dictionary: num_antennas must be >= 1");
    validate_masks(num_antennas, local_masks);
    AngularDictionary d;
    d.num_antennas = num_antennas;
    d.grid_size = grid_size > 0 ? grid_size : 2 * num_antennas;
    d.masks = local_masks;
    d.grid_deg.resize(std::size_t(d.grid_size));
    for (int g = 0; g < d.grid_size; ++g) {
        if (spacing == GridSpacing::uniform_angle) {
            d.grid_deg[std::size_t(g)] = -90.0 + 180.0 * double(g) / double(d.grid_size);
        } else {
            const double s = -1.0 + 2.0 * double(g) / double(d.grid_size);
            d.grid_deg[std::size_t(g)] = std::asin(s) * kRadToDeg;
        }
    }
    return d;
}

AngularDictionary build_dictionary(const ClusterGeometry& g, int grid_size,
                                   GridSpacing spacing) {
    std::vector<std::vector<int>> masks;
    masks.reserve(g.local_clusters.size());
    for (const LocalCluster& c : g.local_clusters)
        masks.push_back(c.antenna_mask);
    return build_dictionary(g.num_antennas, masks, grid_size, spacing);
}

RMat realified_design(const AngularDictionary& d) {
    const int m = d.num_antennas;
    const Eigen::Index m2 = Eigen::Index(m) * m;
    RMat design(2 * m2, d.num_columns());
    int col = 0;
    for (int block = 0; block < d.num_blocks(); ++block) {
        for (int g = 0; g < d.grid_size; ++g, ++col) {
            const CVec s = d.column_vector(block, g);
            // vec(s s^H) column-major: entry (i + j*m) = s_i conj(s_j).
            for (int j = 0; j < m; ++j) {
                const cd sj = std::conj(s(j));
                for (int i = 0; i < m; ++i) {
                    const cd v = s(i) * sj;
                    design(Eigen::Index(i) + Eigen::Index(j) * m, col) = v.real();
                    design(m2 + Eigen::Index(i) + Eigen::Index(j) * m, col) = v.imag();
                }
            }
        }
    }
    return design;
}

ApsFit fit_aps(const AngularDictionary& d, const RMat& design, const CMat& c_h,
               double tolerance) {
    const int m = d.num_antennas;
    const Eigen::Index m2 = Eigen::Index(m) * m;
    if (c_h.rows() != m || c_h.cols() != m)
        throw DimensionMismatch("fit_aps: covariance size does not match dictionary");
    if (design.rows() != 2 * m2 || design.cols() != d.num_columns())
        throw DimensionMismatch("fit_aps: design size does not match dictionary");
    if (!c_h.allFinite())
        throw NonFinite("fit_aps: covariance contains a non-finite value");

    NnlsProblem p;
    p.design = design;
    p.target.resize(2 * m2);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            p.target(Eigen::Index(i) + Eigen::Index(j) * m) = c_h(i, j).real();
            p.target(m2 + Eigen::Index(i) + Eigen::Index(j) * m) = c_h(i, j).imag();
        }
    }
    p.tolerance = tolerance;
    const NnlsSolution sol = nnls_solve(p);

    ApsFit fit;
    fit.coefficients = sol.x;
    fit.status = sol.status;
    fit.objective = sol.objective;
    fit.iterations = sol.iterations;
    return fit;
}

ApsFit fit_aps(const AngularDictionary& d, const CMat& c_h, double tolerance) {
    return fit_aps(d, realified_design(d), c_h, tolerance);
}

CMat reconstruct_covariance(const AngularDictionary& d, const RVec& gamma) {
    if (gamma.size() != d.num_columns())
        throw DimensionMismatch("reconstruct_covariance: coefficient count mismatch");
    const int m = d.num_antennas;
    CMat c = CMat::Zero(m, m);
    int col = 0;
    for (int block = 0; block < d.num_blocks(); ++block) {
        for (int g = 0; g < d.grid_size; ++g, ++col) {
            const double w = gamma(col);
            if (w == 0.0)
                continue;
            if (!(w > 0.0))
                throw NegativeCoefficient(
                    "reconstruct_covariance: coefficients must be >= 0");
            const CVec s = d.column_vector(block, g);
            c.selfadjointView<Eigen::Lower>().rankUpdate(s, w);
        }
    }
    return hermitian_part(CMat(c.selfadjointView<Eigen::Lower>()));
}

} // namespace obmimo
