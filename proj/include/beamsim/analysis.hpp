#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamsim/array_model.hpp"
#include "beamsim/ccm.hpp"
#include "beamsim/types.hpp"

namespace beamsim {

struct CovarianceEstimate {
    CMatrix matrix;
    std::size_t sample_count = 0;
};

/// R_in(i) = sum over active interferers of sigma_k^2 a_k a_k^H + sigma_n^2 I.
inline CovarianceEstimate interference_noise_covariance(const ScenarioConfig& config, std::size_t snapshot) {
    const auto m = static_cast<Eigen::Index>(config.geometry.sensors);
    CovarianceEstimate cov;
    cov.matrix = config.noise_power * CMatrix::Identity(m, m);
    for (std::size_t k = 1; k < config.sources.size(); ++k) {
        const auto& src = config.sources[k];
        if (!src.active_at(snapshot)) continue;
        const CVector a = steering_vector(config.geometry, src.doa_deg, config.allow_endfire);
        cov.matrix += src.power * (a * a.adjoint());
    }
    return cov;
}

struct Sinr {
    double linear = 0.0;
    double db = -std::numeric_limits<double>::infinity();
};

/**
 * Steering vectors of a scenario, computed once. Lets the harness evaluate
 * SINR per snapshot as a sum of per-source terms instead of forming R_in.
 */
class ScenarioResponse {
public:
    explicit ScenarioResponse(const ScenarioConfig& config) : config_(&config) {
        for (const auto& src : config.sources) {
            steering_.push_back(steering_vector(config.geometry, src.doa_deg, config.allow_endfire));
        }
    }

    /// sigma_0^2 |w^H a_0|^2 / (w^H R_in(i) w), with the true SOI direction.
    [[nodiscard]] Sinr output_sinr(const CVector& w, std::size_t snapshot) const {
        if (w.size() != steering_.front().size()) throw std::invalid_argument("output_sinr: dimension mismatch");
        const auto& sources = config_->sources;
        const double signal = sources[0].power * std::norm(w.dot(steering_[0]));
        double interference = config_->noise_power * w.squaredNorm();
        for (std::size_t k = 1; k < sources.size(); ++k) {
            if (sources[k].active_at(snapshot)) interference += sources[k].power * std::norm(w.dot(steering_[k]));
        }
        Sinr out;
        if (signal == 0.0 || !(interference > 0.0)) {
            out.linear = signal == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
            out.db = signal == 0.0 ? -std::numeric_limits<double>::infinity() : out.linear;
            return out;
        }
        out.linear = signal / interference;
        out.db = to_db(out.linear);
        return out;
    }

    [[nodiscard]] const CVector& steering(std::size_t k) const { return steering_.at(k); }

private:
    const ScenarioConfig* config_;
    std::vector<CVector> steering_;
};

/// Output SINR of weight vector w at snapshot i. dB is -inf when the signal
/// term vanishes.
inline Sinr output_sinr(const CVector& w, const ScenarioConfig& config, std::size_t snapshot) {
    if (w.squaredNorm() == 0.0) throw std::invalid_argument("output_sinr: weight vector must be nonzero");
    return ScenarioResponse(config).output_sinr(w, snapshot);
}

/// sigma_0^2 a_0^H R_in^{-1} a_0 through a dense Cholesky solve.
inline Sinr mvdr_optimal_sinr(const ScenarioConfig& config, std::size_t snapshot) {
    const CMatrix r_in = interference_noise_covariance(config, snapshot).matrix;
    const CVector a0 = steering_vector(config.geometry, config.soi().doa_deg, config.allow_endfire);
    const Eigen::LLT<CMatrix> llt(r_in);
    if (llt.info() != Eigen::Success) {
        throw std::domain_error("mvdr_optimal_sinr: interference-plus-noise covariance is singular");
    }
    const CVector solved = llt.solve(a0);
    Sinr out;
    out.linear = config.soi().power * a0.dot(solved).real();
    out.db = to_db(out.linear);
    return out;
}

/// Sample mean of (|y(i)|^2 - 1) x(i) x^H(i) with y from a frozen weight vector.
inline CovarianceEstimate estimate_r_ccm(const CVector& w, const std::vector<CVector>& snapshots) {
    const auto m = w.size();
    if (snapshots.size() < static_cast<std::size_t>(m)) {
        throw std::invalid_argument("estimate_r_ccm: need at least " + std::to_string(m) + " snapshots, got " +
                                    std::to_string(snapshots.size()));
    }
    CovarianceEstimate cov;
    cov.matrix = CMatrix::Zero(m, m);
    for (const auto& x : snapshots) {
        if (x.size() != m) throw std::invalid_argument("estimate_r_ccm: dimension mismatch");
        const double weight = std::norm(w.dot(x)) - 1.0;
        cov.matrix.selfadjointView<Eigen::Lower>().rankUpdate(x, weight);
    }
    cov.matrix = cov.matrix.selfadjointView<Eigen::Lower>();
    cov.matrix /= static_cast<double>(snapshots.size());
    cov.sample_count = snapshots.size();
    return cov;
}

inline CovarianceEstimate estimate_r_ccm(const CVector& w, const SnapshotBatch& batch) {
    return estimate_r_ccm(w, batch.x);
}

struct PowerIterationResult {
    double magnitude = 0.0;  // |dominant eigenvalue|
    cplx eigenvalue;         // Rayleigh quotient of the final iterate
    CVector eigenvector;
    std::size_t iterations = 0;
    bool converged = false;
};

/**
 * Dominant eigenpair of a square matrix by power iteration.
 *
 * The estimate is the Rayleigh quotient theta = v^H A v of the normalized
 * iterate. Iteration stops once the eigen-residual |A v - theta v| is at most
 * rel_tol * |theta|, which bounds the eigenvalue error for matrices that act
 * Hermitian on the iterate's subspace. A zero image (A v = 0) stops with
 * eigenvalue 0.
 */
inline PowerIterationResult power_iteration(const CMatrix& a, CVector start, double rel_tol = 1e-8,
                                            std::size_t max_iterations = 10000) {
    if (a.rows() != a.cols() || a.rows() != start.size()) throw std::invalid_argument("power_iteration: bad dimensions");
    PowerIterationResult result;
    CVector v = start.normalized();
    CVector image = a * v;
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        result.iterations = it;
        const double norm = image.norm();
        if (norm == 0.0) {
            result.eigenvalue = 0.0;
            result.magnitude = 0.0;
            result.eigenvector = v;
            result.converged = true;
            return result;
        }
        v = image / norm;
        image = a * v;
        result.eigenvalue = v.dot(image);
        result.magnitude = std::abs(result.eigenvalue);
        if ((image - result.eigenvalue * v).norm() <= rel_tol * result.magnitude) {
            result.converged = true;
            break;
        }
    }
    result.eigenvector = v;
    return result;
}

/// Fixed, non-symmetric start vector so results are reproducible and the
/// start is unlikely to be orthogonal to the dominant direction.
inline CVector default_start_vector(Eigen::Index m) {
    CVector v(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        v[k] = std::polar(1.0 + 0.1 * static_cast<double>(k), 0.7 * static_cast<double>(k));
    }
    return v;
}

struct StepBoundReport {
    double lambda_max = 0.0;  // |dominant eigenvalue of R_vx|
    double bound = std::numeric_limits<double>::infinity();  // 2 / lambda_max
    double observed_mean_mu = std::numeric_limits<double>::quiet_NaN();
    bool bounded = false;
    bool converged = false;
    std::size_t iterations = 0;
};

/// R_vx = (I - a a^H / (a^H a)) R_ccm; bound 2 / |lambda_max(R_vx)|.
inline StepBoundReport step_size_bound(const CMatrix& r_ccm, const CVector& constraint, double rel_tol = 1e-8,
                                       std::size_t max_iterations = 10000) {
    const auto m = constraint.size();
    if (r_ccm.rows() != m || r_ccm.cols() != m) throw std::invalid_argument("step_size_bound: dimension mismatch");
    const CMatrix projector =
        CMatrix::Identity(m, m) - constraint * constraint.adjoint() / constraint.squaredNorm();
    const CMatrix r_vx = projector * r_ccm;

    StepBoundReport report;
    const auto power = power_iteration(r_vx, default_start_vector(m), rel_tol, max_iterations);
    report.lambda_max = power.magnitude;
    report.converged = power.converged;
    report.iterations = power.iterations;
    // Relative to the matrix scale; a projector with m = 1 gives an exact zero.
    const double scale = std::max(r_ccm.norm(), std::numeric_limits<double>::min());
    report.bounded = report.lambda_max > 1e-14 * scale;
    report.bound = report.bounded ? 2.0 / report.lambda_max : std::numeric_limits<double>::infinity();
    return report;
}

/// Length of the trailing window used for steady-state figures: last 10%, at least one sample.
inline std::size_t final_window(std::size_t n) { return std::max<std::size_t>(1, n / 10); }

/// Mean of the last 10% of a linear-power trace, in dB.
inline double steady_state_db(const std::vector<double>& linear) {
    if (linear.empty()) throw std::invalid_argument("steady_state_db: empty trace");
    const std::size_t w = final_window(linear.size());
    double sum = 0.0;
    for (std::size_t t = linear.size() - w; t < linear.size(); ++t) sum += linear[t];
    return to_db(sum / static_cast<double>(w));
}

/**
 * First 1-based snapshot from which a linear-power trace stays within
 * within_db of its steady-state level (dB of the last-10% mean). nullopt if
 * the final sample itself is outside the band.
 */
inline std::optional<std::size_t> convergence_time(const std::vector<double>& linear, double within_db) {
    if (linear.empty()) throw std::invalid_argument("convergence_time: empty trace");
    const double reference = steady_state_db(linear);
    std::size_t first_inside = 1;
    for (std::size_t t = 0; t < linear.size(); ++t) {
        if (!(std::abs(to_db(linear[t]) - reference) <= within_db)) first_inside = t + 2;
    }
    if (first_inside > linear.size()) return std::nullopt;
    return first_inside;
}

}  // namespace beamsim
