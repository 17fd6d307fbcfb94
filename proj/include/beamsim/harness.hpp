#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "beamsim/analysis.hpp"
#include "beamsim/array_model.hpp"
#include "beamsim/ccm.hpp"
#include "beamsim/config.hpp"
#include "beamsim/stepsize.hpp"

namespace beamsim {

/// Weight norm above which a run is declared divergent and dropped from averages.
inline constexpr double kDivergenceNorm = 1e6;

struct RunResult {
    std::vector<double> sinr;  // linear, index i - 1
    std::vector<double> mu;    // step size used at snapshot i
    CVector final_weights;
    OpCount counters_total;
    std::size_t updates = 0;
    double max_constraint_error = 0.0;
    std::size_t mu_out_of_bounds = 0;
    bool diverged = false;
    std::size_t diverged_at = 0;  // 1-based snapshot, 0 if not diverged
};

/**
 * One adaptive trial over a prebuilt batch. Per snapshot: record SINR of the
 * current weights and the step in use, apply the CCM update, then let the
 * mechanism pick the next step from the shared e(i).
 */
inline RunResult run_trial(const ScenarioConfig& config, const MechanismSpec& mechanism, const SnapshotBatch& batch,
                           const ScenarioResponse& response) {
    const std::size_t m = config.geometry.sensors;
    const CVector constraint = steering_vector(config.geometry, config.presumed_soi_doa_deg(), config.allow_endfire);
    const StepSizeBounds box = bounds_of(mechanism.mechanism);

    RunResult result;
    result.sinr.reserve(batch.size());
    result.mu.reserve(batch.size());

    BeamformerState bf = init_weights(constraint);
    StepSizeState step = initial_state(mechanism.mechanism, m);
    for (std::size_t t = 0; t < batch.size(); ++t) {
        const std::size_t i = t + 1;
        result.sinr.push_back(response.output_sinr(bf.weights, i).linear);
        result.mu.push_back(step.mu);
        if (!(step.mu >= box.mu_min && step.mu <= box.mu_max)) ++result.mu_out_of_bounds;

        const auto& x = batch.x[t];
        CcmStep update = ccm_sg_update(bf, x, step.mu);
        const double norm = update.state.weights.norm();
        if (!std::isfinite(norm) || norm > kDivergenceNorm) {
            result.diverged = true;
            result.diverged_at = i;
            break;
        }
        bf = std::move(update.state);
        result.max_constraint_error = std::max(result.max_constraint_error, constraint_error(bf));

        const GradientInfo info{update.error, update.output, &x, &update.blocked};
        step = advance(mechanism.mechanism, std::move(step), info);
        result.counters_total += step.counters;
        ++result.updates;
    }
    result.final_weights = bf.weights;
    return result;
}

/// Deterministic given (config.master_seed, run_index).
inline RunResult run_trial(const ScenarioConfig& config, const MechanismSpec& mechanism, std::uint64_t run_index) {
    const SnapshotBatch batch = synthesize_snapshots(config, run_index);
    return run_trial(config, mechanism, batch, ScenarioResponse(config));
}

/// Monte-Carlo average for one mechanism. Divergent runs are counted and
/// excluded from the means.
struct SinrTrace {
    std::string scenario_id;
    std::string mechanism;
    MechanismKind kind = MechanismKind::fss;
    std::vector<double> sinr_linear;  // mean over surviving runs
    std::vector<double> mu;           // mean over surviving runs
    std::size_t runs = 0;             // surviving runs
    std::size_t diverged = 0;
    OpCount counters_total;
    std::size_t updates = 0;
    double max_constraint_error = 0.0;
    std::size_t mu_out_of_bounds = 0;
    std::optional<std::uint64_t> reference_run;  // lowest surviving run index
    CVector reference_weights;                   // its final weights

    [[nodiscard]] std::vector<double> sinr_db() const {
        std::vector<double> out;
        out.reserve(sinr_linear.size());
        for (double v : sinr_linear) out.push_back(to_db(v));
        return out;
    }

    [[nodiscard]] double adds_per_update() const {
        return updates ? static_cast<double>(counters_total.additions) / static_cast<double>(updates) : 0.0;
    }
    [[nodiscard]] double mults_per_update() const {
        return updates ? static_cast<double>(counters_total.multiplications) / static_cast<double>(updates) : 0.0;
    }
};

struct MonteCarloOptions {
    std::size_t workers = 1;
    std::size_t block_size = 16;  // runs summed sequentially before the pairwise stage
};

namespace detail {

struct Partial {
    std::vector<double> sinr;
    std::vector<double> mu;
    std::size_t runs = 0;
    std::size_t diverged = 0;
    OpCount counters;
    std::size_t updates = 0;
    double max_constraint_error = 0.0;
    std::size_t mu_out_of_bounds = 0;
    std::optional<std::uint64_t> reference_run;
    CVector reference_weights;

    void absorb_counters(const Partial& o) {
        diverged += o.diverged;
        counters += o.counters;
        updates += o.updates;
        max_constraint_error = std::max(max_constraint_error, o.max_constraint_error);
        mu_out_of_bounds += o.mu_out_of_bounds;
        if (!reference_run && o.reference_run) {
            reference_run = o.reference_run;
            reference_weights = o.reference_weights;
        }
    }
};

inline void add_into(std::vector<double>& acc, const std::vector<double>& v) {
    if (acc.empty()) {
        acc = v;
        return;
    }
    for (std::size_t t = 0; t < acc.size(); ++t) acc[t] += v[t];
}

// Pairwise sum of block partials in index order.
inline Partial combine(std::vector<Partial>& parts, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return std::move(parts[lo]);
    const std::size_t mid = lo + (hi - lo) / 2;
    Partial left = combine(parts, lo, mid);
    Partial right = combine(parts, mid, hi);
    if (right.runs > 0) {
        if (left.runs == 0) {
            left.sinr = std::move(right.sinr);
            left.mu = std::move(right.mu);
        } else {
            add_into(left.sinr, right.sinr);
            add_into(left.mu, right.mu);
        }
    }
    left.runs += right.runs;
    left.absorb_counters(right);
    return left;
}

}  // namespace detail

/**
 * Runs spec.scenario.runs trials for every mechanism and reduces them to mean
 * traces. All mechanisms see the same snapshot batch for a given run index.
 * Runs are grouped into fixed-size blocks summed in run order, and blocks are
 * combined pairwise in block order, so the result is independent of the
 * worker count and of completion order.
 */
inline std::vector<SinrTrace> monte_carlo(const ExperimentSpec& spec, const MonteCarloOptions& options = {}) {
    const auto& config = spec.scenario;
    validate(config);
    if (spec.mechanisms.empty()) throw std::invalid_argument("monte_carlo: no mechanisms");
    for (const auto& m : spec.mechanisms) validate(m.mechanism);

    const std::size_t runs = config.runs;
    const std::size_t block = std::max<std::size_t>(1, options.block_size);
    const std::size_t blocks = (runs + block - 1) / block;
    const std::size_t mechs = spec.mechanisms.size();
    const ScenarioResponse response(config);

    std::vector<std::vector<detail::Partial>> partials(mechs, std::vector<detail::Partial>(blocks));
    std::atomic<std::size_t> next_block{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        try {
            for (std::size_t b = next_block++; b < blocks; b = next_block++) {
                const std::size_t first = b * block;
                const std::size_t last = std::min(runs, first + block);
                for (std::size_t r = first; r < last; ++r) {
                    const SnapshotBatch batch = synthesize_snapshots(config, r);
                    for (std::size_t k = 0; k < mechs; ++k) {
                        RunResult res = run_trial(config, spec.mechanisms[k], batch, response);
                        auto& p = partials[k][b];
                        p.counters += res.counters_total;
                        p.updates += res.updates;
                        p.max_constraint_error = std::max(p.max_constraint_error, res.max_constraint_error);
                        p.mu_out_of_bounds += res.mu_out_of_bounds;
                        if (res.diverged) {
                            ++p.diverged;
                            continue;
                        }
                        detail::add_into(p.sinr, res.sinr);
                        detail::add_into(p.mu, res.mu);
                        ++p.runs;
                        if (!p.reference_run) {
                            p.reference_run = r;
                            p.reference_weights = std::move(res.final_weights);
                        }
                    }
                }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next_block = blocks;
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, blocks);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<SinrTrace> traces;
    for (std::size_t k = 0; k < mechs; ++k) {
        detail::Partial total = detail::combine(partials[k], 0, blocks);
        SinrTrace trace;
        trace.scenario_id = config.id;
        trace.mechanism = spec.mechanisms[k].label;
        trace.kind = kind_of(spec.mechanisms[k].mechanism);
        trace.runs = total.runs;
        trace.diverged = total.diverged;
        trace.counters_total = total.counters;
        trace.updates = total.updates;
        trace.max_constraint_error = total.max_constraint_error;
        trace.mu_out_of_bounds = total.mu_out_of_bounds;
        trace.reference_run = total.reference_run;
        trace.reference_weights = std::move(total.reference_weights);
        const double n = static_cast<double>(total.runs);
        if (total.runs > 0) {
            trace.sinr_linear = std::move(total.sinr);
            trace.mu = std::move(total.mu);
            for (auto& v : trace.sinr_linear) v /= n;
            for (auto& v : trace.mu) v /= n;
        } else {
            trace.sinr_linear.assign(config.snapshots, std::numeric_limits<double>::quiet_NaN());
            trace.mu.assign(config.snapshots, std::numeric_limits<double>::quiet_NaN());
        }
        traces.push_back(std::move(trace));
    }
    return traces;
}

// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kBoundStreamTag = 0x424e'4400'0000'0000ULL;

/**
 * Step-size bound diagnostic for a finished trace. R_CCM is estimated from a
 * fresh batch (independent of the training data) with the reference run's
 * final weights frozen, and the bound is compared with the mean step over the
 * last 10% of snapshots.
 */
inline StepBoundReport bound_report(const ScenarioConfig& config, const SinrTrace& trace) {
    StepBoundReport report;
    if (!trace.reference_run) return report;
    const auto stream = run_stream(config.master_seed, *trace.reference_run).derive(kBoundStreamTag);
    ScenarioConfig estimation = config;
    estimation.snapshots = std::max(config.snapshots, config.geometry.sensors);
    const SnapshotBatch batch = synthesize_snapshots(estimation, stream);
    const CovarianceEstimate r_ccm = estimate_r_ccm(trace.reference_weights, batch);
    const CVector constraint = steering_vector(config.geometry, config.presumed_soi_doa_deg(), config.allow_endfire);
    report = step_size_bound(r_ccm.matrix, constraint);

    const std::size_t w = final_window(trace.mu.size());
    double sum = 0.0;
    for (std::size_t t = trace.mu.size() - w; t < trace.mu.size(); ++t) sum += trace.mu[t];
    report.observed_mean_mu = sum / static_cast<double>(w);
    return report;
}

// ---------------------------------------------------------------------------

struct CsvOptions {
    bool counters = false;  // append adds_per_update,mults_per_update
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const std::vector<SinrTrace>& traces, const CsvOptions& options = {}) {
    if (traces.empty()) throw std::invalid_argument("write_csv: no traces");
    out << "scenario_id,mechanism,snapshot,sinr_db_mean,sinr_linear_mean,mu_mean";
    if (options.counters) out << ",adds_per_update,mults_per_update";
    out << '\n';
    for (const auto& trace : traces) {
        const std::string adds = format_number(trace.adds_per_update());
        const std::string mults = format_number(trace.mults_per_update());
        for (std::size_t t = 0; t < trace.sinr_linear.size(); ++t) {
            out << trace.scenario_id << ',' << trace.mechanism << ',' << (t + 1) << ','
                << format_number(to_db(trace.sinr_linear[t])) << ',' << format_number(trace.sinr_linear[t]) << ','
                << format_number(trace.mu[t]);
            if (options.counters) out << ',' << adds << ',' << mults;
            out << '\n';
        }
    }
}

inline void emit_csv(const std::vector<SinrTrace>& traces, const std::string& path, const CsvOptions& options = {}) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_csv(file, traces, options);
    file.flush();
    if (!file) throw std::runtime_error("error while writing '" + path + "'");
}

/// Convergence band used for the summary's convergence times.
inline constexpr double kConvergenceMarginDb = 3.0;

inline nlohmann::ordered_json summarize(const ScenarioConfig& config, const std::vector<SinrTrace>& traces,
                                        bool with_bounds) {
    nlohmann::ordered_json doc;
    doc["scenario_id"] = config.id;
    doc["master_seed"] = config.master_seed;
    doc["runs"] = config.runs;
    doc["snapshots"] = config.snapshots;
    const double sinr_opt_db = mvdr_optimal_sinr(config, config.snapshots).db;
    doc["sinr_opt_db_final"] = sinr_opt_db;
    auto& list = doc["mechanisms"] = nlohmann::ordered_json::array();
    for (const auto& trace : traces) {
        nlohmann::ordered_json m;
        m["mechanism"] = trace.mechanism;
        m["kind"] = std::string(to_string(trace.kind));
        m["runs"] = trace.runs;
        m["diverged_runs"] = trace.diverged;
        if (trace.runs > 0) {
            const auto conv = convergence_time(trace.sinr_linear, kConvergenceMarginDb);
            m["convergence_time_3db"] = conv ? nlohmann::ordered_json(*conv) : nlohmann::ordered_json();
            m["steady_state_sinr_db"] = steady_state_db(trace.sinr_linear);
            m["gap_to_optimum_db"] = sinr_opt_db - steady_state_db(trace.sinr_linear);
        } else {
            m["convergence_time_3db"] = nullptr;
            m["steady_state_sinr_db"] = nullptr;
            m["gap_to_optimum_db"] = nullptr;
        }
        m["counters"] = {{"additions_total", trace.counters_total.additions},
                         {"multiplications_total", trace.counters_total.multiplications},
                         {"updates", trace.updates},
                         {"additions_per_update", trace.adds_per_update()},
                         {"multiplications_per_update", trace.mults_per_update()}};
        m["max_constraint_error"] = trace.max_constraint_error;
        m["mu_out_of_bounds"] = trace.mu_out_of_bounds;
        if (with_bounds) {
            const auto report = bound_report(config, trace);
            nlohmann::ordered_json b;
            b["lambda_max"] = report.lambda_max;
            b["bound"] = report.bounded ? nlohmann::ordered_json(report.bound) : nlohmann::ordered_json();
            b["observed_mean_mu"] = std::isnan(report.observed_mean_mu)
                                        ? nlohmann::ordered_json()
                                        : nlohmann::ordered_json(report.observed_mean_mu);
            b["power_iteration_converged"] = report.converged;
            b["power_iterations"] = report.iterations;
            m["step_bound"] = std::move(b);
        }
        list.push_back(std::move(m));
    }
    return doc;
}

inline void emit_summary(const ScenarioConfig& config, const std::vector<SinrTrace>& traces, bool with_bounds,
                         const std::string& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
    file << summarize(config, traces, with_bounds).dump(2) << '\n';
    if (!file) throw std::runtime_error("error while writing '" + path + "'");
}

}  // namespace beamsim
