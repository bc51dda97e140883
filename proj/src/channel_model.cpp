#include "obmimo/channel_model.hpp"

#include "obmimo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace obmimo {

namespace {

constexpr double kDegToRad = 0.017453292519943295;

void check_paths(const std::vector<double>& aoas, const std::vector<double>& powers,
                 const char* what) {
    if (aoas.size() != powers.size())
        throw DimensionMismatch(std::string(what) + ": AoA and power counts differ");
    for (double p : powers) {
        if (!std::isfinite(p) || p < 0.0)
            throw NonFinite(std::string(what) + ": path power must be finite and >= 0");
    }
    for (double a : aoas) {
        if (!std::isfinite(a))
            throw NonFinite(std::string(what) + ": AoA must be finite");
    }
}

// Draws per-path powers as iid uniform weights scaled to sum to total.
std::vector<double> split_power(int n, double total, RngStream& rng) {
    std::vector<double> w(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        // Keep weights away from an all-zero draw.
        w[i] = rng.uniform() + 1e-12;
        sum += w[i];
    }
    for (int i = 0; i < n; ++i)
        w[i] *= total / sum;
    return w;
}

} // namespace

double LocalCluster::total_power() const {
    return std::accumulate(powers.begin(), powers.end(), 0.0);
}

double ClusterGeometry::common_power() const {
    return std::accumulate(common_powers.begin(), common_powers.end(), 0.0);
}

RVec ClusterGeometry::cov_diagonal() const {
    RVec d = RVec::Constant(num_antennas, common_power());
    for (const LocalCluster& c : local_clusters) {
        const double p = c.total_power();
        for (int m : c.antenna_mask)
            d(m) += p;
    }
    return d;
}

double ClusterGeometry::max_cov_diagonal() const {
    return num_antennas == 0 ? 0.0 : cov_diagonal().maxCoeff();
}

void ClusterGeometry::validate() const {
    if (num_antennas < 1)
        throw DimensionMismatch("geometry: num_antennas must be >= 1");
    check_paths(common_aoas_deg, common_powers, "common cluster");
    for (const LocalCluster& c : local_clusters) {
        check_paths(c.aoas_deg, c.powers, "local cluster");
        if (c.antenna_mask.empty())
            throw DimensionMismatch("local cluster: empty antenna mask");
        int prev = -1;
        for (int m : c.antenna_mask) {
            if (m < 0 || m >= num_antennas)
                throw DimensionMismatch("local cluster: mask index out of range");
            if (m <= prev)
                throw DimensionMismatch("local cluster: mask must be sorted and unique");
            prev = m;
        }
    }
}

void ClusterGeometry::validate_normalized() const {
    validate();
    if (std::abs(max_cov_diagonal() - 1.0) > 1e-12)
        throw NormalizationOverflow("geometry: peak covariance diagonal is not 1");
}

void GeometrySpec::validate() const {
    if (num_antennas < 1)
        throw DimensionMismatch("geometry spec: num_antennas must be >= 1");
    if (common_paths < 0 || (common_paths > 0 && common_power < 0.0))
        throw ConfigError("geometry spec: bad common cluster");
    if (common_paths > 0 && common_aoa_min_deg > common_aoa_max_deg)
        throw ConfigError("geometry spec: common AoA range is empty");
    double total = common_paths > 0 ? common_power : 0.0;
    for (const LocalClusterSpec& c : locals) {
        if (c.num_paths < 1)
            throw ConfigError("geometry spec: local cluster needs >= 1 path");
        if (!(c.total_power >= 0.0))
            throw ConfigError("geometry spec: local cluster power must be >= 0");
        if (c.aoa_min_deg > c.aoa_max_deg)
            throw ConfigError("geometry spec: local AoA range is empty");
        if (c.antenna_mask.empty())
            throw ConfigError("geometry spec: local cluster needs a mask");
        int prev = -1;
        for (int m : c.antenna_mask) {
            if (m < 0 || m >= num_antennas)
                throw ConfigError("geometry spec: mask index out of range");
            if (m <= prev)
                throw ConfigError("geometry spec: mask must be sorted and unique");
            prev = m;
        }
        total += c.total_power;
    }
    if (!(total > 0.0))
        throw ConfigError("geometry spec: total power must be positive");
}

CVec steering_vector(double theta_deg, int num_antennas) {
    if (num_antennas < 1)
        throw DimensionMismatch("steering_vector: num_antennas must be >= 1");
    if (!std::isfinite(theta_deg))
        throw NonFinite("steering_vector: AoA must be finite");
    const double s = std::sin(theta_deg * kDegToRad);
    CVec a(num_antennas);
    for (int m = 0; m < num_antennas; ++m) {
        const double phase = M_PI * double(m) * s;
        a(m) = cd(std::cos(phase), std::sin(phase));
    }
    return a;
}

ClusterGeometry random_geometry(const GeometrySpec& spec, RngStream& rng) {
    spec.validate();
    ClusterGeometry g;
    g.num_antennas = spec.num_antennas;
    if (spec.common_paths > 0) {
        g.common_aoas_deg.resize(spec.common_paths);
        for (int i = 0; i < spec.common_paths; ++i)
            g.common_aoas_deg[i] = rng.uniform(spec.common_aoa_min_deg, spec.common_aoa_max_deg);
        g.common_powers = split_power(spec.common_paths, spec.common_power, rng);
    }
    for (const LocalClusterSpec& cs : spec.locals) {
        LocalCluster c;
        c.aoas_deg.resize(cs.num_paths);
        for (int j = 0; j < cs.num_paths; ++j)
            c.aoas_deg[j] = rng.uniform(cs.aoa_min_deg, cs.aoa_max_deg);
        c.powers = split_power(cs.num_paths, cs.total_power, rng);
        c.antenna_mask = cs.antenna_mask;
        g.local_clusters.push_back(std::move(c));
    }
    // Rescale so the strongest antenna has unit channel power.
    const double peak = g.max_cov_diagonal();
    for (double& p : g.common_powers)
        p /= peak;
    for (LocalCluster& c : g.local_clusters)
        for (double& p : c.powers)
            p /= peak;
    return g;
}

CMat channel_covariance(const ClusterGeometry& g) {
    g.validate();
    const int m = g.num_antennas;
    CMat c = CMat::Zero(m, m);
    for (std::size_t i = 0; i < g.common_aoas_deg.size(); ++i) {
        const CVec a = steering_vector(g.common_aoas_deg[i], m);
        c.selfadjointView<Eigen::Lower>().rankUpdate(a, g.common_powers[i]);
    }
    for (const LocalCluster& cl : g.local_clusters) {
        for (std::size_t j = 0; j < cl.aoas_deg.size(); ++j) {
            const CVec a = steering_vector(cl.aoas_deg[j], m);
            CVec masked = CVec::Zero(m);
            for (int idx : cl.antenna_mask)
                masked(idx) = a(idx);
            c.selfadjointView<Eigen::Lower>().rankUpdate(masked, cl.powers[j]);
        }
    }
    return hermitian_part(CMat(c.selfadjointView<Eigen::Lower>()));
}

CVec sample_channel(const ClusterGeometry& g, RngStream& rng) {
    g.validate();
    const int m = g.num_antennas;
    CVec h = CVec::Zero(m);
    for (std::size_t i = 0; i < g.common_aoas_deg.size(); ++i) {
        const cd gain = rng.cgaussian(g.common_powers[i]);
        h += gain * steering_vector(g.common_aoas_deg[i], m);
    }
    for (const LocalCluster& cl : g.local_clusters) {
        for (std::size_t j = 0; j < cl.aoas_deg.size(); ++j) {
            const cd gain = rng.cgaussian(cl.powers[j]);
            const CVec a = steering_vector(cl.aoas_deg[j], m);
            for (int idx : cl.antenna_mask)
                h(idx) += gain * a(idx);
        }
    }
    return h;
}

CVec received_signal(const CVec& h, double noise_power, RngStream& rng) {
    if (!(noise_power >= 0.0) || !std::isfinite(noise_power))
        throw NonFinite("received_signal: noise power must be finite and >= 0");
    CVec y(h.size());
    for (Eigen::Index i = 0; i < h.size(); ++i)
        y(i) = h(i) + rng.cgaussian(noise_power);
    return y;
}

} // namespace obmimo
