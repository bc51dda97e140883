#include "obmimo/harness.hpp"

#include "obmimo/bussgang.hpp"
#include "obmimo/cov_estimation.hpp"
#include "obmimo/errors.hpp"
#include "obmimo/quantizer.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

namespace obmimo {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream derivation tags; combined with the experiment kind they keep every
// random stream in a run distinct.
constexpr std::uint64_t kTagGeom = 0x67656F6DULL;
constexpr std::uint64_t kTagSamples = 0x73616D70ULL;
constexpr std::uint64_t kTagDither = 0x64697468ULL;
constexpr std::uint64_t kTagEval = 0x6576616CULL;

std::uint64_t kind_id(ExperimentKind k) {
    return std::uint64_t(k) + 1;
}

std::uint64_t u(long long v) {
    return std::uint64_t(v);
}

// Runs f, mapping the typed failure into a status slug for the CSV.
std::string run_status(const std::function<void()>& f) {
    try {
        f();
        return "ok";
    } catch (const DiagonalUnderflow&) {
        return "diagonal_underflow";
    } catch (const NormalizationOverflow&) {
        return "normalization_overflow";
    } catch (const SingularArcsineMatrix&) {
        return "singular_arcsine";
    } catch (const SingularGram&) {
        return "singular_gram";
    } catch (const EmptyBatch&) {
        return "empty_batch";
    } catch (const DimensionMismatch&) {
        return "dimension_mismatch";
    } catch (const NegativeCoefficient&) {
        return "negative_coefficient";
    } catch (const NonFinite&) {
        return "non_finite";
    } catch (const std::exception&) {
        return "error";
    }
}

// Runs fn(0..count-1) on up to `workers` threads. Cells own disjoint output
// slots and independent random streams, so scheduling cannot change results;
// only domain errors are expected inside fn and those are handled there, so
// anything escaping here is a bug worth propagating.
void for_each_cell(int count, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    const int n_threads = std::min(workers, count);
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&]() {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error)
                        first_error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

std::vector<std::vector<int>> local_masks(const GeometrySpec& spec) {
    std::vector<std::vector<int>> masks;
    masks.reserve(spec.locals.size());
    for (const LocalClusterSpec& l : spec.locals)
        masks.push_back(l.antenna_mask);
    return masks;
}

bool has_estimator(const ExperimentConfig& cfg, EstimatorKind e) {
    for (EstimatorKind k : cfg.estimators)
        if (k == e)
            return true;
    return false;
}

LinearReceiver make_receiver(ReceiverMethod m, const CMat& h_hat, double noise_power) {
    switch (m) {
    case ReceiverMethod::mrc:
        return mrc_receiver(h_hat);
    case ReceiverMethod::zf:
        return zf_receiver(h_hat);
    case ReceiverMethod::blmmse:
        return blmmse_receiver(h_hat, noise_power);
    }
    throw std::logic_error("make_receiver: bad method");
}

// Per-geometry state shared by the covariance and channel experiments.
struct GeometryState {
    ClusterGeometry geo;
    CMat c_h;
    double frob_sq = 0.0;
    double trace = 0.0;
};

std::vector<GeometryState> draw_geometries(const ExperimentConfig& cfg,
                                           ExperimentKind kind) {
    std::vector<GeometryState> out(static_cast<std::size_t>(cfg.num_geometries));
    for (int g = 0; g < cfg.num_geometries; ++g) {
        RngStream rng = RngStream::keyed(cfg.seed, {kind_id(kind), kTagGeom, u(g)});
        GeometryState& st = out[std::size_t(g)];
        st.geo = random_geometry(cfg.geometry, rng);
        st.c_h = channel_covariance(st.geo);
        st.frob_sq = st.c_h.squaredNorm();
        st.trace = st.c_h.diagonal().real().sum();
    }
    return out;
}

// Accumulators for one training pass; only the streams an estimator needs
// are materialized.
struct TrainingAccs {
    std::optional<SampleCovAccumulator> raw;
    std::optional<SignCovAccumulator> sign;
    std::vector<DitheredCovAccumulator> dithered; // one per lambda
};

TrainingAccs make_training_accs(const ExperimentConfig& cfg, bool use_unq,
                                bool use_nd, bool use_d) {
    TrainingAccs a;
    const int m = cfg.geometry.num_antennas;
    if (use_unq)
        a.raw.emplace(m);
    if (use_nd)
        a.sign.emplace(m);
    if (use_d)
        for (double l : cfg.lambdas)
            a.dithered.emplace_back(m, l);
    return a;
}

void accumulate_training(const ExperimentConfig& cfg, const ClusterGeometry& geo,
                         long long n_samples, RngStream& sample_stream,
                         std::vector<RngStream>& dither_streams, TrainingAccs& accs) {
    for (long long n = 0; n < n_samples; ++n) {
        const CVec h = sample_channel(geo, sample_stream);
        const CVec y = received_signal(h, cfg.noise_power, sample_stream);
        if (accs.raw)
            accs.raw->add(y);
        if (accs.sign)
            accs.sign->add(csign(y));
        for (std::size_t li = 0; li < accs.dithered.size(); ++li)
            accs.dithered[li].add(
                dithered_csign(y, cfg.lambdas[li], dither_streams[li]));
    }
}

// Final channel-covariance estimate of one quantized stream: subtract the
// noise floor, then project onto the angular dictionary.
CMat refine_channel_cov(const CMat& c_y_hat, double noise_power,
                        const AngularDictionary& dict, const RMat& design) {
    const CMat c_h_raw = channel_cov_from_signal_cov(c_y_hat, noise_power);
    const ApsFit fit = fit_aps(dict, design, c_h_raw);
    return reconstruct_covariance(dict, fit.coefficients);
}

} // namespace

int ExperimentResult::failed_records() const {
    int n = 0;
    for (const ResultRecord& r : records)
        if (r.status != "ok")
            ++n;
    return n;
}

double ExperimentResult::mean_value(const std::string& method,
                                    const std::string& metric,
                                    long long sample_count, double lambda,
                                    const std::string& receiver) const {
    double sum = 0.0;
    long long n = 0;
    for (const ResultRecord& r : records) {
        if (r.status != "ok" || r.method != method || r.metric != metric)
            continue;
        if (sample_count >= 0 && r.sample_count != sample_count)
            continue;
        if (!std::isnan(lambda) && !(r.lambda == lambda))
            continue;
        if (!receiver.empty() && r.receiver != receiver)
            continue;
        sum += r.value;
        ++n;
    }
    return n > 0 ? sum / double(n) : kNaN;
}

ExperimentResult run_covariance_experiment(const ExperimentConfig& cfg,
                                           const RunOptions& opt,
                                           const CovarianceHooks& hooks) {
    validate_config(cfg, ExperimentKind::covariance);
    const ExperimentKind kind = ExperimentKind::covariance;
    const bool use_unq = has_estimator(cfg, EstimatorKind::unquantized);
    const bool use_nd = has_estimator(cfg, EstimatorKind::nondithered);
    const bool use_d = has_estimator(cfg, EstimatorKind::dithered);

    const std::vector<GeometryState> geos = draw_geometries(cfg, kind);

    AngularDictionary dict;
    RMat design;
    if (use_nd || use_d) {
        dict = build_dictionary(cfg.geometry.num_antennas, local_masks(cfg.geometry),
                                cfg.grid_size, cfg.grid_spacing);
        design = realified_design(dict);
    }

    const int n_n = int(cfg.sample_counts.size());
    const int cells = cfg.num_geometries * cfg.num_groups * n_n;
    std::vector<std::vector<ResultRecord>> slots(static_cast<std::size_t>(cells));

    for_each_cell(cells, opt.workers, [&](int cell) {
        const int g = cell / (cfg.num_groups * n_n);
        const int grp = (cell / n_n) % cfg.num_groups;
        const int ni = cell % n_n;
        const long long n_samp = cfg.sample_counts[std::size_t(ni)];
        const GeometryState& gs = geos[std::size_t(g)];

        const std::uint64_t cell_seed = RngStream::derive_key(
            cfg.seed, {kind_id(kind), kTagSamples, u(g), u(grp), u(ni)});
        RngStream sample_stream(cell_seed);
        std::vector<RngStream> dither_streams;
        if (use_d)
            for (std::size_t li = 0; li < cfg.lambdas.size(); ++li)
                dither_streams.push_back(RngStream::keyed(
                    cfg.seed,
                    {kind_id(kind), kTagDither, u(g), u(grp), u(ni), std::uint64_t(li)}));

        TrainingAccs accs = make_training_accs(cfg, use_unq, use_nd, use_d);
        accumulate_training(cfg, gs.geo, n_samp, sample_stream, dither_streams, accs);

        auto push_row = [&](EstimatorKind est, double lambda, double value,
                            const std::string& status) {
            ResultRecord r;
            r.kind = kind;
            r.method = estimator_name(est);
            r.lambda = lambda;
            r.sample_count = n_samp;
            r.geometry = g;
            r.group = grp;
            r.seed = cell_seed;
            r.metric = "E_NF";
            r.value = value;
            r.status = status;
            slots[std::size_t(cell)].push_back(std::move(r));
        };

        auto score = [&](const CMat& estimate) {
            return (gs.c_h - estimate).squaredNorm() / gs.frob_sq;
        };

        for (EstimatorKind est : cfg.estimators) {
            if (est == EstimatorKind::unquantized) {
                double value = kNaN;
                const std::string st = run_status([&] {
                    CMat c_h_hat = channel_cov_from_signal_cov(
                        accs.raw->finalize().matrix, cfg.noise_power);
                    if (hooks.refined_override)
                        c_h_hat = hooks.refined_override(gs.c_h);
                    value = score(c_h_hat);
                });
                push_row(est, kNaN, value, st);
            } else if (est == EstimatorKind::nondithered) {
                double value = kNaN;
                const std::string st = run_status([&] {
                    CMat c_h_hat =
                        hooks.refined_override
                            ? hooks.refined_override(gs.c_h)
                            : refine_channel_cov(accs.sign->finalize().matrix,
                                                 cfg.noise_power, dict, design);
                    value = score(c_h_hat);
                });
                push_row(est, kNaN, value, st);
            } else { // dithered
                for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
                    double value = kNaN;
                    const std::string st = run_status([&] {
                        CMat c_h_hat =
                            hooks.refined_override
                                ? hooks.refined_override(gs.c_h)
                                : refine_channel_cov(accs.dithered[li].finalize().matrix,
                                                     cfg.noise_power, dict, design);
                        value = score(c_h_hat);
                    });
                    push_row(est, cfg.lambdas[li], value, st);
                }
            }
        }
    });

    ExperimentResult res;
    res.kind = kind;
    for (std::vector<ResultRecord>& s : slots)
        for (ResultRecord& r : s)
            res.records.push_back(std::move(r));
    return res;
}

ExperimentResult run_channel_experiment(const ExperimentConfig& cfg,
                                        const RunOptions& opt,
                                        const CovarianceHooks& hooks) {
    validate_config(cfg, ExperimentKind::channel);
    const ExperimentKind kind = ExperimentKind::channel;
    const bool use_unq = has_estimator(cfg, EstimatorKind::unquantized);
    const bool use_nd = has_estimator(cfg, EstimatorKind::nondithered);
    const bool use_d = has_estimator(cfg, EstimatorKind::dithered);

    const std::vector<GeometryState> geos = draw_geometries(cfg, kind);

    // Oracle filter per geometry, from the true covariance.
    struct OracleEntry {
        BlmmseFilter filter;
        std::string status;
    };
    std::vector<OracleEntry> oracles(geos.size());
    for (std::size_t g = 0; g < geos.size(); ++g) {
        oracles[g].status = run_status([&] {
            CMat c_y = geos[g].c_h;
            c_y.diagonal().array() += cfg.noise_power;
            oracles[g].filter = build_blmmse_filter(c_y, cfg.noise_power,
                                                    FilterProvenance::oracle);
        });
    }

    AngularDictionary dict;
    RMat design;
    if (use_nd || use_d) {
        dict = build_dictionary(cfg.geometry.num_antennas, local_masks(cfg.geometry),
                                cfg.grid_size, cfg.grid_spacing);
        design = realified_design(dict);
    }

    const int n_n = int(cfg.sample_counts.size());
    const int cells = cfg.num_geometries * cfg.num_groups * n_n;
    std::vector<std::vector<ResultRecord>> slots(static_cast<std::size_t>(cells));

    for_each_cell(cells, opt.workers, [&](int cell) {
        const int g = cell / (cfg.num_groups * n_n);
        const int grp = (cell / n_n) % cfg.num_groups;
        const int ni = cell % n_n;
        const long long n_samp = cfg.sample_counts[std::size_t(ni)];
        const GeometryState& gs = geos[std::size_t(g)];

        const std::uint64_t cell_seed = RngStream::derive_key(
            cfg.seed, {kind_id(kind), kTagSamples, u(g), u(grp), u(ni)});
        RngStream sample_stream(cell_seed);
        std::vector<RngStream> dither_streams;
        if (use_d)
            for (std::size_t li = 0; li < cfg.lambdas.size(); ++li)
                dither_streams.push_back(RngStream::keyed(
                    cfg.seed,
                    {kind_id(kind), kTagDither, u(g), u(grp), u(ni), std::uint64_t(li)}));

        TrainingAccs accs = make_training_accs(cfg, use_unq, use_nd, use_d);
        accumulate_training(cfg, gs.geo, n_samp, sample_stream, dither_streams, accs);

        // Shared evaluation draws: every filter in this cell is scored on the
        // same channels and the same quantized pilots.
        RngStream eval_stream =
            RngStream::keyed(cfg.seed, {kind_id(kind), kTagEval, u(g), u(grp), u(ni)});
        const int draws = cfg.num_channel_draws;
        std::vector<CVec> eval_h(static_cast<std::size_t>(draws));
        std::vector<CVec> eval_r(static_cast<std::size_t>(draws));
        for (int d = 0; d < draws; ++d) {
            eval_h[std::size_t(d)] = sample_channel(gs.geo, eval_stream);
            eval_r[std::size_t(d)] =
                csign(received_signal(eval_h[std::size_t(d)], cfg.noise_power, eval_stream));
        }

        auto nmse_of = [&](const BlmmseFilter& f) {
            double acc = 0.0;
            for (int d = 0; d < draws; ++d)
                acc += (eval_h[std::size_t(d)] - estimate_channel(f, eval_r[std::size_t(d)]))
                           .squaredNorm();
            return acc / (double(draws) * gs.trace);
        };

        auto push_row = [&](const std::string& method, double lambda, double value,
                            int ridge_events, const std::string& status) {
            ResultRecord r;
            r.kind = kind;
            r.method = method;
            r.lambda = lambda;
            r.sample_count = n_samp;
            r.geometry = g;
            r.group = grp;
            r.seed = cell_seed;
            r.metric = "E_NMSE";
            r.value = value;
            r.ridge_events = ridge_events;
            r.status = status;
            slots[std::size_t(cell)].push_back(std::move(r));
        };

        // Oracle reference, always first in the cell.
        {
            double value = kNaN;
            std::string st = oracles[std::size_t(g)].status;
            int ridge = 0;
            if (st == "ok") {
                const BlmmseFilter& f = oracles[std::size_t(g)].filter;
                ridge = f.ridge_applied ? 1 : 0;
                st = run_status([&] { value = nmse_of(f); });
            }
            push_row("oracle", kNaN, value, ridge, st);
        }

        auto plug_in_row = [&](EstimatorKind est, double lambda,
                               const std::function<CMat()>& make_c_y_star) {
            double value = kNaN;
            int ridge = 0;
            const std::string st = run_status([&] {
                const CMat c_y_star = make_c_y_star();
                const BlmmseFilter f = build_blmmse_filter(c_y_star, cfg.noise_power,
                                                           FilterProvenance::plug_in);
                ridge = f.ridge_applied ? 1 : 0;
                value = nmse_of(f);
            });
            push_row(estimator_name(est), lambda, value, ridge, st);
        };

        // The hook replaces the channel-covariance estimate before the noise
        // floor is added back, same seam as the covariance experiment.
        auto with_noise = [&](CMat c) {
            c.diagonal().array() += cfg.noise_power;
            return c;
        };
        for (EstimatorKind est : cfg.estimators) {
            if (est == EstimatorKind::unquantized) {
                plug_in_row(est, kNaN, [&]() -> CMat {
                    if (hooks.refined_override)
                        return with_noise(hooks.refined_override(gs.c_h));
                    return accs.raw->finalize().matrix;
                });
            } else if (est == EstimatorKind::nondithered) {
                plug_in_row(est, kNaN, [&] {
                    return with_noise(
                        hooks.refined_override
                            ? hooks.refined_override(gs.c_h)
                            : refine_channel_cov(accs.sign->finalize().matrix,
                                                 cfg.noise_power, dict, design));
                });
            } else { // dithered
                for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
                    plug_in_row(est, cfg.lambdas[li], [&] {
                        return with_noise(
                            hooks.refined_override
                                ? hooks.refined_override(gs.c_h)
                                : refine_channel_cov(accs.dithered[li].finalize().matrix,
                                                     cfg.noise_power, dict, design));
                    });
                }
            }
        }
    });

    ExperimentResult res;
    res.kind = kind;
    for (std::vector<ResultRecord>& s : slots)
        for (ResultRecord& r : s)
            res.records.push_back(std::move(r));
    return res;
}

ExperimentResult run_sumrate_experiment(const ExperimentConfig& cfg,
                                        const RunOptions& opt) {
    validate_config(cfg, ExperimentKind::sumrate);
    const ExperimentKind kind = ExperimentKind::sumrate;
    const int k_users = cfg.num_users;
    const bool use_unq = has_estimator(cfg, EstimatorKind::unquantized);
    const bool use_nd = has_estimator(cfg, EstimatorKind::nondithered);
    const bool use_d = has_estimator(cfg, EstimatorKind::dithered);
    const bool use_true = has_estimator(cfg, EstimatorKind::true_cov);

    // Per (geometry set, user): independent geometries.
    std::vector<std::vector<ClusterGeometry>> geos(std::size_t(cfg.num_geometries));
    for (int g = 0; g < cfg.num_geometries; ++g) {
        geos[std::size_t(g)].resize(std::size_t(k_users));
        for (int k = 0; k < k_users; ++k) {
            RngStream rng =
                RngStream::keyed(cfg.seed, {kind_id(kind), kTagGeom, u(g), u(k)});
            geos[std::size_t(g)][std::size_t(k)] = random_geometry(cfg.geometry, rng);
        }
    }

    // Filters from the true covariance (the true_cov estimator), per user.
    struct OracleEntry {
        BlmmseFilter filter;
        std::string status = "ok";
    };
    std::vector<std::vector<OracleEntry>> true_filters;
    if (use_true) {
        true_filters.resize(std::size_t(cfg.num_geometries));
        for (int g = 0; g < cfg.num_geometries; ++g) {
            true_filters[std::size_t(g)].resize(std::size_t(k_users));
            for (int k = 0; k < k_users; ++k) {
                OracleEntry& e = true_filters[std::size_t(g)][std::size_t(k)];
                e.status = run_status([&] {
                    CMat c_y = channel_covariance(geos[std::size_t(g)][std::size_t(k)]);
                    c_y.diagonal().array() += cfg.noise_power;
                    e.filter = build_blmmse_filter(c_y, cfg.noise_power,
                                                   FilterProvenance::oracle);
                });
            }
        }
    }

    AngularDictionary dict;
    RMat design;
    if (use_nd || use_d) {
        dict = build_dictionary(cfg.geometry.num_antennas, local_masks(cfg.geometry),
                                cfg.grid_size, cfg.grid_spacing);
        design = realified_design(dict);
    }

    // One trained-filter combo per estimator, with dithered fanned out per
    // lambda; rows are combos crossed with receivers, then the perfect-CSI
    // reference per receiver.
    struct Combo {
        EstimatorKind est;
        int lambda_idx; // -1 when not applicable
    };
    std::vector<Combo> combos;
    for (EstimatorKind est : cfg.estimators) {
        if (est == EstimatorKind::dithered) {
            for (std::size_t li = 0; li < cfg.lambdas.size(); ++li)
                combos.push_back({est, int(li)});
        } else {
            combos.push_back({est, -1});
        }
    }
    const int n_combos = int(combos.size());
    const int n_recv = int(cfg.receivers.size());
    const int rows_per_cell = (n_combos + 1) * n_recv;

    const int n_n = int(cfg.sample_counts.size());
    const int cells = cfg.num_geometries * cfg.num_groups * n_n;
    std::vector<std::vector<ResultRecord>> slots(static_cast<std::size_t>(cells));

    for_each_cell(cells, opt.workers, [&](int cell) {
        const int g = cell / (cfg.num_groups * n_n);
        const int grp = (cell / n_n) % cfg.num_groups;
        const int ni = cell % n_n;
        const long long n_samp = cfg.sample_counts[std::size_t(ni)];

        const std::uint64_t cell_seed = RngStream::derive_key(
            cfg.seed, {kind_id(kind), kTagSamples, u(g), u(grp), u(ni)});

        // Train one plug-in filter per (combo, user).
        std::vector<std::vector<BlmmseFilter>> filters(
            static_cast<std::size_t>(n_combos), std::vector<BlmmseFilter>(static_cast<std::size_t>(k_users)));
        std::vector<std::string> combo_status(static_cast<std::size_t>(n_combos), "ok");
        std::vector<int> combo_ridge(static_cast<std::size_t>(n_combos), 0);

        for (int k = 0; k < k_users; ++k) {
            const ClusterGeometry& geo = geos[std::size_t(g)][std::size_t(k)];
            RngStream sample_stream = RngStream::keyed(
                cfg.seed, {kind_id(kind), kTagSamples, u(g), u(grp), u(ni), u(k)});
            std::vector<RngStream> dither_streams;
            if (use_d)
                for (std::size_t li = 0; li < cfg.lambdas.size(); ++li)
                    dither_streams.push_back(
                        RngStream::keyed(cfg.seed, {kind_id(kind), kTagDither, u(g),
                                                    u(grp), u(ni), std::uint64_t(li), u(k)}));
            TrainingAccs accs = make_training_accs(cfg, use_unq, use_nd, use_d);
            accumulate_training(cfg, geo, n_samp, sample_stream, dither_streams, accs);

            for (int c = 0; c < n_combos; ++c) {
                if (combo_status[std::size_t(c)] != "ok")
                    continue;
                const Combo& combo = combos[std::size_t(c)];
                BlmmseFilter& slot = filters[std::size_t(c)][std::size_t(k)];
                std::string st;
                if (combo.est == EstimatorKind::true_cov) {
                    const OracleEntry& e = true_filters[std::size_t(g)][std::size_t(k)];
                    st = e.status;
                    if (st == "ok")
                        slot = e.filter;
                } else {
                    st = run_status([&] {
                        CMat c_y_star;
                        if (combo.est == EstimatorKind::unquantized) {
                            c_y_star = accs.raw->finalize().matrix;
                        } else {
                            const CMat& c_y_hat =
                                combo.est == EstimatorKind::nondithered
                                    ? accs.sign->finalize().matrix
                                    : accs.dithered[std::size_t(combo.lambda_idx)]
                                          .finalize()
                                          .matrix;
                            c_y_star = refine_channel_cov(c_y_hat, cfg.noise_power,
                                                          dict, design);
                            c_y_star.diagonal().array() += cfg.noise_power;
                        }
                        slot = build_blmmse_filter(c_y_star, cfg.noise_power,
                                                   FilterProvenance::plug_in);
                    });
                }
                if (st != "ok")
                    combo_status[std::size_t(c)] = st;
                else if (slot.ridge_applied)
                    ++combo_ridge[std::size_t(c)];
            }
        }

        // Row bookkeeping: combo rows then perfect-CSI rows, receivers inner.
        std::vector<std::string> row_status(static_cast<std::size_t>(rows_per_cell), "ok");
        std::vector<double> row_accum(static_cast<std::size_t>(rows_per_cell), 0.0);
        std::vector<int> row_ridge(static_cast<std::size_t>(rows_per_cell), 0);
        for (int c = 0; c < n_combos; ++c)
            for (int r = 0; r < n_recv; ++r) {
                row_status[std::size_t(c * n_recv + r)] = combo_status[std::size_t(c)];
                row_ridge[std::size_t(c * n_recv + r)] = combo_ridge[std::size_t(c)];
            }

        RngStream eval_stream =
            RngStream::keyed(cfg.seed, {kind_id(kind), kTagEval, u(g), u(grp), u(ni)});
        const int draws = cfg.num_channel_draws;
        CMat h_true(cfg.geometry.num_antennas, k_users);
        for (int d = 0; d < draws; ++d) {
            for (int k = 0; k < k_users; ++k)
                h_true.col(k) = sample_channel(geos[std::size_t(g)][std::size_t(k)],
                                               eval_stream);
            DataPhaseTruth truth;
            const std::string truth_st =
                run_status([&] { truth = data_phase_truth(h_true, cfg.noise_power); });
            if (truth_st != "ok") {
                for (std::string& st : row_status)
                    if (st == "ok")
                        st = truth_st;
                break;
            }
            // Quantized pilots for the plug-in channel estimates.
            CMat h_hat(cfg.geometry.num_antennas, k_users);
            std::vector<CVec> pilots(static_cast<std::size_t>(k_users));
            for (int k = 0; k < k_users; ++k)
                pilots[std::size_t(k)] = csign(
                    received_signal(h_true.col(k), cfg.noise_power, eval_stream));

            for (int c = 0; c < n_combos; ++c) {
                if (combo_status[std::size_t(c)] != "ok")
                    continue;
                for (int k = 0; k < k_users; ++k)
                    h_hat.col(k) = estimate_channel(filters[std::size_t(c)][std::size_t(k)],
                                                    pilots[std::size_t(k)]);
                for (int r = 0; r < n_recv; ++r) {
                    const int row = c * n_recv + r;
                    if (row_status[std::size_t(row)] != "ok")
                        continue;
                    const std::string st = run_status([&] {
                        const LinearReceiver w =
                            make_receiver(cfg.receivers[std::size_t(r)], h_hat,
                                          cfg.noise_power);
                        if (w.ridge_applied)
                            ++row_ridge[std::size_t(row)];
                        row_accum[std::size_t(row)] += sum_rate(w, truth);
                    });
                    if (st != "ok")
                        row_status[std::size_t(row)] = st;
                }
            }
            for (int r = 0; r < n_recv; ++r) {
                const int row = n_combos * n_recv + r;
                if (row_status[std::size_t(row)] != "ok")
                    continue;
                const std::string st = run_status([&] {
                    const LinearReceiver w = make_receiver(
                        cfg.receivers[std::size_t(r)], h_true, cfg.noise_power);
                    if (w.ridge_applied)
                        ++row_ridge[std::size_t(row)];
                    row_accum[std::size_t(row)] += sum_rate(w, truth);
                });
                if (st != "ok")
                    row_status[std::size_t(row)] = st;
            }
        }

        auto push_row = [&](const std::string& method, double lambda, int row,
                            ReceiverMethod recv) {
            ResultRecord rec;
            rec.kind = kind;
            rec.method = method;
            rec.receiver = receiver_name(recv);
            rec.lambda = lambda;
            rec.sample_count = n_samp;
            rec.geometry = g;
            rec.group = grp;
            rec.seed = cell_seed;
            rec.metric = "R_sum";
            rec.value = row_status[std::size_t(row)] == "ok"
                            ? row_accum[std::size_t(row)] / double(draws)
                            : kNaN;
            rec.ridge_events = row_ridge[std::size_t(row)];
            rec.status = row_status[std::size_t(row)];
            slots[std::size_t(cell)].push_back(std::move(rec));
        };

        for (int c = 0; c < n_combos; ++c) {
            const Combo& combo = combos[std::size_t(c)];
            const double lambda =
                combo.lambda_idx >= 0 ? cfg.lambdas[std::size_t(combo.lambda_idx)] : kNaN;
            for (int r = 0; r < n_recv; ++r)
                push_row(estimator_name(combo.est), lambda, c * n_recv + r,
                         cfg.receivers[std::size_t(r)]);
        }
        for (int r = 0; r < n_recv; ++r)
            push_row("perfect_csi", kNaN, n_combos * n_recv + r,
                     cfg.receivers[std::size_t(r)]);
    });

    ExperimentResult res;
    res.kind = kind;
    for (std::vector<ResultRecord>& s : slots)
        for (ResultRecord& r : s)
            res.records.push_back(std::move(r));
    return res;
}

std::string to_csv(const ExperimentResult& res) {
    std::string out =
        "kind,method,receiver,lambda,N,geom,group,seed,metric,value,ridge_events,status\n";
    for (const ResultRecord& r : res.records) {
        out += experiment_name(r.kind);
        out += ',';
        out += r.method;
        out += ',';
        out += r.receiver;
        out += ',';
        if (!std::isnan(r.lambda))
            out += format_double(r.lambda);
        out += ',';
        out += std::to_string(r.sample_count);
        out += ',';
        out += std::to_string(r.geometry);
        out += ',';
        out += std::to_string(r.group);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += r.metric;
        out += ',';
        if (r.status == "ok")
            out += format_double(r.value);
        out += ',';
        out += std::to_string(r.ridge_events);
        out += ',';
        out += r.status;
        out += '\n';
    }
    return out;
}

void write_csv(const ExperimentResult& res, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open output file '" + path + "'");
    const std::string text = to_csv(res);
    out.write(text.data(), std::streamsize(text.size()));
    if (!out)
        throw ConfigError("failed writing output file '" + path + "'");
}

} // namespace obmimo
