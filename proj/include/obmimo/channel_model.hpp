#pragma once

#include "obmimo/linalg.hpp"
#include "obmimo/rng.hpp"

#include <vector>

namespace obmimo {

// One local scattering cluster: several paths sharing a visibility mask.
// Antenna indices in the mask are 0-based, sorted, unique.
struct LocalCluster {
    std::vector<double> aoas_deg;
    std::vector<double> powers;
    std::vector<int> antenna_mask;

    double total_power() const;
};

// A sampled propagation geometry for a uniform linear array: common clusters
// seen by the whole array plus local clusters seen by sub-arrays. Holding
// geometry fixed while channel gains redraw models the standard two-timescale
// picture (angles and visibility change much slower than fading).
struct ClusterGeometry {
    int num_antennas = 0;
    std::vector<double> common_aoas_deg;
    std::vector<double> common_powers;
    std::vector<LocalCluster> local_clusters;

    double common_power() const;
    // Per-antenna diagonal of the implied covariance (steering entries have
    // unit modulus, so each path contributes exactly its power).
    RVec cov_diagonal() const;
    double max_cov_diagonal() const;

    // Structural checks: dimensions consistent, powers >= 0, masks valid.
    void validate() const;
    // Additionally requires max_cov_diagonal() == 1 within 1e-12. Geometries
    // produced by random_geometry always satisfy this.
    void validate_normalized() const;
};

// Ranges and counts from which random geometries are drawn.
struct LocalClusterSpec {
    int num_paths = 0;
    double total_power = 0.0;
    double aoa_min_deg = 0.0;
    double aoa_max_deg = 0.0;
    std::vector<int> antenna_mask;

    bool operator==(const LocalClusterSpec&) const = default;
};

struct GeometrySpec {
    int num_antennas = 0;
    int common_paths = 0;
    double common_power = 0.0;
    double common_aoa_min_deg = -60.0;
    double common_aoa_max_deg = 60.0;
    std::vector<LocalClusterSpec> locals;

    bool operator==(const GeometrySpec&) const = default;
    void validate() const;
};

// Steering vector of a half-wavelength ULA: entry m (0-based) is
// exp(j*pi*m*sin(theta)).
CVec steering_vector(double theta_deg, int num_antennas);

// Draws AoAs uniformly from each cluster's range and per-path powers as
// uniform weights scaled to the cluster's total, then rescales all powers so
// the peak covariance diagonal is exactly 1.
ClusterGeometry random_geometry(const GeometrySpec& spec, RngStream& rng);

// C_h = sum_i g_i a_i a_i^H with local-cluster terms masked to their
// sub-array. Exactly Hermitian; rows and columns outside every mask and
// common cluster are exactly zero.
CMat channel_covariance(const ClusterGeometry& g);

// One channel realization: independent CN(0, power) gain per path.
CVec sample_channel(const ClusterGeometry& g, RngStream& rng);

// y = h + n with n ~ CN(0, noise_power * I).
CVec received_signal(const CVec& h, double noise_power, RngStream& rng);

} // namespace obmimo
