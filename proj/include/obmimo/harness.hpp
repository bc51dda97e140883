#pragma once

#include "obmimo/aps_fitting.hpp"
#include "obmimo/channel_model.hpp"
#include "obmimo/receivers.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace obmimo {

enum class ExperimentKind { covariance, channel, sumrate };
const char* experiment_name(ExperimentKind k);

enum class EstimatorKind { unquantized, nondithered, dithered, true_cov };
const char* estimator_name(EstimatorKind e);

// Full description of one experiment run. Everything that influences the
// output is in here (plus the worker count, which by design must not change
// any byte of it).
struct ExperimentConfig {
    GeometrySpec geometry;
    double noise_power = 0.1;
    std::vector<double> lambdas{1.0};
    std::vector<long long> sample_counts{1000};
    int grid_size = 0; // 0 means 2 * antennas
    GridSpacing grid_spacing = GridSpacing::uniform_angle;
    int num_users = 4;
    int num_geometries = 1;
    int num_groups = 1;
    int num_channel_draws = 100;
    std::vector<EstimatorKind> estimators;
    std::vector<ReceiverMethod> receivers;
    std::uint64_t seed = 1;

    bool operator==(const ExperimentConfig&) const = default;
};

// Small config for laptop-scale runs (M = 32); same cluster layout as the
// full-scale preset, scaled down.
ExperimentConfig desk_preset();
// Full-scale setup: M = 256, quarter-array local clusters, 10 geometries
// of 20 groups each.
ExperimentConfig paper_preset();

// key = value text, one pair per line, # comments. Unknown keys are errors.
// Parsing starts from `base` so a file only needs the keys it changes.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& source_name,
                                   const ExperimentConfig& base = ExperimentConfig{});
ExperimentConfig parse_config_file(const std::string& path,
                                   const ExperimentConfig& base = ExperimentConfig{});
// Canonical text with every key explicit; parse_config_text of the output
// reproduces the config exactly (field-for-field, bit-for-bit doubles).
std::string emit_config(const ExperimentConfig& cfg);

// Kind-specific validation (cov-exp rejects true_cov, rate-exp needs
// receivers, ...). Throws ConfigError.
void validate_config(const ExperimentConfig& cfg, ExperimentKind kind);

// Shortest round-trip decimal formatting, used for config and CSV output.
std::string format_double(double v);

struct ResultRecord {
    ExperimentKind kind = ExperimentKind::covariance;
    std::string method;   // estimator, "oracle", or "perfect_csi"
    std::string receiver; // sum-rate rows only
    double lambda = 0.0;  // NaN when not applicable
    long long sample_count = 0;
    int geometry = 0;
    int group = 0;
    std::uint64_t seed = 0; // derived key of the cell's sample stream
    std::string metric;
    double value = 0.0;
    int ridge_events = 0;
    std::string status = "ok"; // or an error slug; value is empty in CSV then
};

struct ExperimentResult {
    ExperimentKind kind = ExperimentKind::covariance;
    std::vector<ResultRecord> records;

    int failed_records() const;
    // Mean of `value` over ok records matching (method, metric) and, when
    // >= 0, the given sample count; NaN lambda matches any lambda, empty
    // receiver matches any receiver.
    double mean_value(const std::string& method, const std::string& metric,
                      long long sample_count = -1,
                      double lambda = std::numeric_limits<double>::quiet_NaN(),
                      const std::string& receiver = "") const;
};

struct RunOptions {
    int workers = 1;
};

// Test seam: when set, replaces every final channel-covariance estimate
// with the returned matrix (receives the true C_h of the cell's geometry).
struct CovarianceHooks {
    std::function<CMat(const CMat& true_c_h)> refined_override;
};

// Covariance-estimation error sweep: per cell (geometry, group, N) and per
// estimator, records E_NF = ||C_h - C*||_F^2 / ||C_h||_F^2.
ExperimentResult run_covariance_experiment(const ExperimentConfig& cfg,
                                           const RunOptions& opt = {},
                                           const CovarianceHooks& hooks = {});

// Channel-estimation error sweep: plug-in BLMMSE filters from each
// estimator against the oracle filter built from the true covariance,
// E_NMSE = E||h - h_est||^2 / tr(C_h), shared evaluation draws per cell.
ExperimentResult run_channel_experiment(const ExperimentConfig& cfg,
                                        const RunOptions& opt = {},
                                        const CovarianceHooks& hooks = {});

// Ergodic sum rate of MRC/ZF/BLMMSE receivers built from plug-in channel
// estimates, plus a perfect-CSI reference, all scored on the true channels.
ExperimentResult run_sumrate_experiment(const ExperimentConfig& cfg,
                                        const RunOptions& opt = {});

// CSV with a fixed header; row order is the deterministic cell enumeration
// order, independent of the worker count.
std::string to_csv(const ExperimentResult& res);
void write_csv(const ExperimentResult& res, const std::string& path);

} // namespace obmimo
