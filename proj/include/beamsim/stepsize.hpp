#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "beamsim/types.hpp"

namespace beamsim {

/// Scalar real operations consumed by one step-size update.
struct OpCount {
    std::uint64_t additions = 0;
    std::uint64_t multiplications = 0;

    friend bool operator==(const OpCount&, const OpCount&) = default;
    OpCount& operator+=(const OpCount& other) {
        additions += other.additions;
        multiplications += other.multiplications;
        return *this;
    }
};

/**
 * Arithmetic that tallies what it does. Step-size updates are written against
 * this so the reported counts are measured from the code path, not declared.
 * A real multiply or add counts one; a complex multiply counts 4 and 2.
 * Subtractions count as additions.
 */
class CountingArithmetic {
public:
    explicit CountingArithmetic(OpCount& tally) : tally_(tally) {}

    double mul(double a, double b) { ++tally_.multiplications; return a * b; }
    double add(double a, double b) { ++tally_.additions; return a + b; }
    double sub(double a, double b) { ++tally_.additions; return a - b; }

    cplx mul(cplx a, cplx b) {
        tally_.multiplications += 4;
        tally_.additions += 2;
        return a * b;
    }
    cplx mul(double a, cplx b) { tally_.multiplications += 2; return a * b; }
    cplx add(cplx a, cplx b) { tally_.additions += 2; return a + b; }
    cplx sub(cplx a, cplx b) { tally_.additions += 2; return a - b; }
    double real_of_product(cplx a, cplx b) {  // Re{a b}
        tally_.multiplications += 2;
        ++tally_.additions;
        return a.real() * b.real() - a.imag() * b.imag();
    }

private:
    OpCount& tally_;
};

struct StepSizeBounds {
    double mu_min = 1e-6;
    double mu_max = 1e-4;
};

inline void validate(const StepSizeBounds& bounds) {
    if (!(0.0 < bounds.mu_min && bounds.mu_min < bounds.mu_max)) {
        throw std::invalid_argument("step-size bounds must satisfy 0 < mu_min < mu_max (got mu_min=" +
                                    std::to_string(bounds.mu_min) + ", mu_max=" + std::to_string(bounds.mu_max) + ")");
    }
}

/// Upper case, lower case, pass-through; in that order.
inline double clamp(double mu, const StepSizeBounds& bounds) {
    if (mu > bounds.mu_max) return bounds.mu_max;
    if (mu < bounds.mu_min) return bounds.mu_min;
    return mu;
}

struct StepSizeState {
    double mu = 0.0;
    double v = 0.0;           // TAASS error-correlation average
    double prev_error = 0.0;  // TAASS: e(i-1)
    CVector sensitivity;      // ASS: g(i) = dw/dmu
    OpCount counters;         // cost of the most recent update
};

/// What the weight update exposes to the step-size rule for snapshot i.
struct GradientInfo {
    double error = 0.0;  // e(i) = |y(i)|^2 - 1
    cplx output;         // y(i)
    const CVector* x = nullptr;
    const CVector* blocked = nullptr;  // P x(i)
};

// ---------------------------------------------------------------------------

struct FssParams {
    double mu = 1e-4;
};

inline void validate(const FssParams& p) {
    if (!(p.mu >= 0.0)) throw std::invalid_argument("fss: mu must be >= 0");
}

class Fss {
public:
    explicit Fss(FssParams params) : params_(params) {}

    [[nodiscard]] StepSizeState initial_state(std::size_t /*sensors*/ = 0) const {
        StepSizeState s;
        s.mu = params_.mu;
        return s;
    }

    [[nodiscard]] StepSizeState update(StepSizeState state, double /*error*/) const {
        state.counters = {};
        return state;
    }
    [[nodiscard]] StepSizeState update(StepSizeState state, const GradientInfo& info) const {
        return update(std::move(state), info.error);
    }

    [[nodiscard]] const FssParams& params() const { return params_; }

    // The fixed step never leaves its value, so it is its own box.
    [[nodiscard]] StepSizeBounds bounds() const { return {params_.mu, params_.mu}; }

private:
    FssParams params_;
};

// ---------------------------------------------------------------------------

struct MassParams {
    double alpha = 0.98;
    double gamma = 1e-3;
    StepSizeBounds bounds{1e-6, 1e-4};
    double mu0 = 1e-5;
};

inline void validate(const MassParams& p) {
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw std::invalid_argument("mass: alpha must satisfy 0 < alpha < 1");
    if (!(p.gamma > 0.0)) throw std::invalid_argument("mass: gamma must be > 0");
    validate(p.bounds);
    if (!(p.bounds.mu_min <= p.mu0 && p.mu0 <= p.bounds.mu_max)) {
        throw std::invalid_argument("mass: mu0 must lie in [mu_min, mu_max]");
    }
}

/// mu(i+1) = clamp(alpha mu(i) + gamma e(i)^2).
class Mass {
public:
    explicit Mass(MassParams params) : params_(params) {}

    [[nodiscard]] StepSizeState initial_state(std::size_t /*sensors*/ = 0) const {
        StepSizeState s;
        s.mu = params_.mu0;
        return s;
    }

    [[nodiscard]] StepSizeState update(StepSizeState state, double error) const {
        state.counters = {};
        CountingArithmetic ops(state.counters);
        const double raw = ops.add(ops.mul(params_.alpha, state.mu), ops.mul(params_.gamma, ops.mul(error, error)));
        state.mu = clamp(raw, params_.bounds);
        return state;
    }
    [[nodiscard]] StepSizeState update(StepSizeState state, const GradientInfo& info) const {
        return update(std::move(state), info.error);
    }

    [[nodiscard]] const MassParams& params() const { return params_; }
    [[nodiscard]] StepSizeBounds bounds() const { return params_.bounds; }

private:
    MassParams params_;
};

// ---------------------------------------------------------------------------

struct TaassParams {
    double alpha = 0.98;
    double beta = 0.99;
    double gamma = 1e-3;
    StepSizeBounds bounds{1e-6, 3e-4};
    double mu0 = 1e-4;
    double v0 = 0.0;
};

inline void validate(const TaassParams& p) {
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw std::invalid_argument("taass: alpha must satisfy 0 < alpha < 1");
    if (!(p.beta > 0.0 && p.beta < 1.0)) throw std::invalid_argument("taass: beta must satisfy 0 < beta < 1");
    if (!(p.gamma > 0.0)) throw std::invalid_argument("taass: gamma must be > 0");
    validate(p.bounds);
    if (!(p.bounds.mu_min <= p.mu0 && p.mu0 <= p.bounds.mu_max)) {
        throw std::invalid_argument("taass: mu0 must lie in [mu_min, mu_max]");
    }
}

/**
 * Time-averaged error correlation drives the step:
 *
 *   v(i)    = beta v(i-1) + (1 - beta) e(i) e(i-1)
 *   mu(i+1) = clamp(alpha mu(i) + gamma v(i)^2)
 *
 * (1 - beta) is folded in at construction. v and e(i-1) start at v0 and 0.
 */
class Taass {
public:
    explicit Taass(TaassParams params) : params_(params), one_minus_beta_(1.0 - params.beta) {}

    [[nodiscard]] StepSizeState initial_state(std::size_t /*sensors*/ = 0) const {
        StepSizeState s;
        s.mu = params_.mu0;
        s.v = params_.v0;
        s.prev_error = 0.0;
        return s;
    }

    [[nodiscard]] StepSizeState update(StepSizeState state, double error) const {
        state.counters = {};
        CountingArithmetic ops(state.counters);
        state.v = ops.add(ops.mul(params_.beta, state.v), ops.mul(one_minus_beta_, ops.mul(error, state.prev_error)));
        const double raw = ops.add(ops.mul(params_.alpha, state.mu), ops.mul(params_.gamma, ops.mul(state.v, state.v)));
        state.mu = clamp(raw, params_.bounds);
        state.prev_error = error;
        return state;
    }
    [[nodiscard]] StepSizeState update(StepSizeState state, const GradientInfo& info) const {
        return update(std::move(state), info.error);
    }

    [[nodiscard]] const TaassParams& params() const { return params_; }
    [[nodiscard]] StepSizeBounds bounds() const { return params_.bounds; }

private:
    TaassParams params_;
    double one_minus_beta_;
};

// ---------------------------------------------------------------------------

struct AssParams {
    double mu0 = 1e-4;
    double rho = 1e-9;  // adaptation gain of the step itself
    StepSizeBounds bounds{1e-6, 4e-4};
};

inline void validate(const AssParams& p) {
    if (!(p.rho >= 0.0)) throw std::invalid_argument("ass: rho must be >= 0");
    validate(p.bounds);
    if (!(p.bounds.mu_min <= p.mu0 && p.mu0 <= p.bounds.mu_max)) {
        throw std::invalid_argument("ass: mu0 must lie in [mu_min, mu_max]");
    }
}

/**
 * Gradient-adaptive step baseline. Tracks the sensitivity g = dw/dmu of the
 * weight vector and descends the instantaneous CM cost in mu:
 *
 *   mu(i+1) = clamp(mu(i) - rho e(i) Re{y*(i) g^H(i) x(i)})
 *   g(i+1)  = g(i) - (mu(i) e(i) x^H(i) g(i) + e(i) y*(i)) P x(i)
 *
 * The constant factor of the exact derivative is absorbed into rho. Its cost
 * is linear in the number of sensors.
 */
class Ass {
public:
    explicit Ass(AssParams params) : params_(params) {}

    [[nodiscard]] StepSizeState initial_state(std::size_t sensors) const {
        StepSizeState s;
        s.mu = params_.mu0;
        s.sensitivity = CVector::Zero(static_cast<Eigen::Index>(sensors));
        return s;
    }

    [[nodiscard]] StepSizeState update(StepSizeState state, const GradientInfo& info) const {
        if (info.x == nullptr || info.blocked == nullptr) {
            throw std::invalid_argument("ass: update needs the snapshot and its blocked projection");
        }
        const CVector& x = *info.x;
        const CVector& px = *info.blocked;
        CVector& g = state.sensitivity;
        if (g.size() != x.size()) throw std::invalid_argument("ass: sensitivity/snapshot dimension mismatch");

        state.counters = {};
        CountingArithmetic ops(state.counters);
        const double e = info.error;

        // g^H x
        cplx gx{0.0, 0.0};
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const cplx term = ops.mul(std::conj(g[k]), x[k]);
            gx = k == 0 ? term : ops.add(gx, term);
        }

        const double slope = ops.mul(e, ops.real_of_product(std::conj(info.output), gx));
        const double mu_next = clamp(ops.sub(state.mu, ops.mul(params_.rho, slope)), params_.bounds);

        const cplx coeff = ops.add(ops.mul(ops.mul(state.mu, e), std::conj(gx)), ops.mul(e, std::conj(info.output)));
        for (Eigen::Index k = 0; k < g.size(); ++k) {
            g[k] = ops.sub(g[k], ops.mul(coeff, px[k]));
        }

        state.mu = mu_next;
        return state;
    }

    [[nodiscard]] const AssParams& params() const { return params_; }
    [[nodiscard]] StepSizeBounds bounds() const { return params_.bounds; }

private:
    AssParams params_;
};

// ---------------------------------------------------------------------------

enum class MechanismKind { fss, ass, mass, taass };

using StepSizeMechanism = std::variant<Fss, Ass, Mass, Taass>;

inline std::string_view to_string(MechanismKind kind) {
    switch (kind) {
        case MechanismKind::fss: return "fss";
        case MechanismKind::ass: return "ass";
        case MechanismKind::mass: return "mass";
        case MechanismKind::taass: return "taass";
    }
    return "?";
}

inline MechanismKind kind_of(const StepSizeMechanism& mechanism) {
    return static_cast<MechanismKind>(mechanism.index());
}

inline StepSizeState initial_state(const StepSizeMechanism& mechanism, std::size_t sensors) {
    return std::visit([&](const auto& m) { return m.initial_state(sensors); }, mechanism);
}

inline StepSizeState advance(const StepSizeMechanism& mechanism, StepSizeState state, const GradientInfo& info) {
    return std::visit([&](const auto& m) { return m.update(std::move(state), info); }, mechanism);
}

inline StepSizeBounds bounds_of(const StepSizeMechanism& mechanism) {
    return std::visit([](const auto& m) { return m.bounds(); }, mechanism);
}

inline void validate(const StepSizeMechanism& mechanism) {
    std::visit([](const auto& m) { validate(m.params()); }, mechanism);
}

}  // namespace beamsim
