#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamsim/random.hpp"
#include "beamsim/types.hpp"

namespace beamsim {

struct ArrayGeometry {
    std::size_t sensors = 1;
    double spacing_over_wavelength = 0.5;  // d / lambda_c
};

/// One narrowband BPSK emitter. Snapshot indices are 1-based; the activity
/// window is [active_from, active_until).
struct SourceSpec {
    double doa_deg = 90.0;  // measured from the array axis
    double power = 1.0;     // symbol variance, linear
    std::size_t active_from = 1;
    std::size_t active_until = kUnbounded;

    [[nodiscard]] bool active_at(std::size_t snapshot) const noexcept {
        return active_from <= snapshot && snapshot < active_until;
    }
};

/// Scenario definition. sources[0] is the signal of interest.
struct ScenarioConfig {
    std::string id = "scenario";
    ArrayGeometry geometry;
    std::vector<SourceSpec> sources;
    double noise_power = 0.01;
    double presumed_doa_offset_deg = 0.0;  // look-direction mismatch seen by the beamformer only
    std::size_t snapshots = 1000;
    std::size_t runs = 100;
    std::uint64_t master_seed = 1;
    bool allow_endfire = false;  // admit doa_deg of exactly 0 or 180

    [[nodiscard]] const SourceSpec& soi() const { return sources.front(); }
    [[nodiscard]] double presumed_soi_doa_deg() const { return soi().doa_deg + presumed_doa_offset_deg; }
};

namespace detail {

inline void check_doa(double doa_deg, bool allow_endfire, const char* what) {
    const bool inside = doa_deg > 0.0 && doa_deg < 180.0;
    const bool endfire = allow_endfire && (doa_deg == 0.0 || doa_deg == 180.0);
    if (!(inside || endfire)) {
        throw std::invalid_argument(std::string(what) + ": DOA " + std::to_string(doa_deg) +
                                    " deg is outside (0, 180)");
    }
}

}  // namespace detail

inline void validate(const ArrayGeometry& geometry) {
    if (geometry.sensors < 1) throw std::invalid_argument("array: sensor count must be >= 1");
    if (!(geometry.spacing_over_wavelength > 0.0)) {
        throw std::invalid_argument("array: spacing_over_wavelength must be > 0");
    }
}

inline void validate(const ScenarioConfig& config) {
    validate(config.geometry);
    if (config.sources.empty()) throw std::invalid_argument("scenario: at least one source is required");
    for (std::size_t k = 0; k < config.sources.size(); ++k) {
        const auto& src = config.sources[k];
        const std::string where = "source " + std::to_string(k);
        detail::check_doa(src.doa_deg, config.allow_endfire, where.c_str());
        if (!(src.power > 0.0)) throw std::invalid_argument(where + ": power must be > 0");
        if (src.active_from < 1) throw std::invalid_argument(where + ": active_from must be >= 1");
        if (!(src.active_from < src.active_until)) {
            throw std::invalid_argument(where + ": active_from must be < active_until");
        }
    }
    detail::check_doa(config.presumed_soi_doa_deg(), config.allow_endfire, "presumed SOI direction");
    if (!(config.noise_power >= 0.0)) throw std::invalid_argument("noise: power must be >= 0");
    if (config.snapshots < 1) throw std::invalid_argument("run: snapshots must be >= 1");
    if (config.runs < 1) throw std::invalid_argument("run: runs must be >= 1");
}

/// Array response a(theta): element k is exp(-2*pi*j*k*(d/lambda)*cos(theta)).
inline CVector steering_vector(const ArrayGeometry& geometry, double doa_deg, bool allow_endfire = false) {
    validate(geometry);
    detail::check_doa(doa_deg, allow_endfire, "steering_vector");
    const double phase_step = -2.0 * kPi * geometry.spacing_over_wavelength * std::cos(doa_deg * kPi / 180.0);
    CVector a(static_cast<Eigen::Index>(geometry.sensors));
    a[0] = cplx{1.0, 0.0};
    for (Eigen::Index k = 1; k < a.size(); ++k) {
        a[k] = std::polar(1.0, phase_step * static_cast<double>(k));
    }
    return a;
}

/// Indices of sources whose window covers snapshot i, in config order.
inline std::vector<std::size_t> active_sources(const ScenarioConfig& config, std::size_t snapshot) {
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < config.sources.size(); ++k) {
        if (config.sources[k].active_at(snapshot)) active.push_back(k);
    }
    return active;
}

/// Received data for one run. x[i - 1] is the snapshot with 1-based index i;
/// symbols(k, i - 1) is the BPSK symbol of source k (0 while inactive).
struct SnapshotBatch {
    std::vector<CVector> x;
    Eigen::MatrixXd symbols;

    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
};

inline constexpr std::uint64_t kSymbolStreamTag = 0x5359'4d00'0000'0000ULL;
inline constexpr std::uint64_t kNoiseStreamTag = 0x4e4f'4900'0000'0000ULL;

/// Root stream for one Monte-Carlo run.
inline CounterStream run_stream(std::uint64_t master_seed, std::uint64_t run_index) {
    return CounterStream(master_seed).derive(run_index);
}

/**
 * Draws x(i) = sum_k a(theta_k) s_k(i) + n(i), i = 1..N, from an explicit stream.
 *
 * Symbols of source k come from their own child stream indexed by snapshot,
 * and noise on sensor e from another, so a given draw never depends on which
 * other sources are configured or active.
 */
inline SnapshotBatch synthesize_snapshots(const ScenarioConfig& config, const CounterStream& stream) {
    validate(config);
    const auto m = static_cast<Eigen::Index>(config.geometry.sensors);
    const std::size_t q = config.sources.size();
    const std::size_t n = config.snapshots;

    std::vector<CVector> steering;
    std::vector<CounterStream> symbol_streams;
    std::vector<double> amplitude;
    for (std::size_t k = 0; k < q; ++k) {
        steering.push_back(steering_vector(config.geometry, config.sources[k].doa_deg, config.allow_endfire));
        symbol_streams.push_back(stream.derive(kSymbolStreamTag + k));
        amplitude.push_back(std::sqrt(config.sources[k].power));
    }
    std::vector<CounterStream> noise_streams;
    for (Eigen::Index e = 0; e < m; ++e) {
        noise_streams.push_back(stream.derive(kNoiseStreamTag + static_cast<std::uint64_t>(e)));
    }
    const double noise_scale = std::sqrt(config.noise_power);

    SnapshotBatch batch;
    batch.x.reserve(n);
    batch.symbols = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t i = t + 1;
        CVector x(m);
        for (Eigen::Index e = 0; e < m; ++e) {
            x[e] = noise_scale * noise_streams[static_cast<std::size_t>(e)].complex_normal(i);
        }
        for (std::size_t k = 0; k < q; ++k) {
            if (!config.sources[k].active_at(i)) continue;
            const double s = amplitude[k] * symbol_streams[k].sign(i);
            batch.symbols(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = s;
            x += s * steering[k];
        }
        batch.x.push_back(std::move(x));
    }
    return batch;
}

/// Deterministic in (config.master_seed, run_index).
inline SnapshotBatch synthesize_snapshots(const ScenarioConfig& config, std::uint64_t run_index) {
    return synthesize_snapshots(config, run_stream(config.master_seed, run_index));
}

}  // namespace beamsim
