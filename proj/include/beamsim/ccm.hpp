#pragma once

#include <stdexcept>

#include "beamsim/types.hpp"

namespace beamsim {

/// Weight vector w(i) and the look-direction vector a(theta_0) it is
/// constrained against (w^H a = 1).
struct BeamformerState {
    CVector weights;
    CVector constraint;
    std::size_t snapshot_index = 0;
};

namespace detail {

inline void check_dims(const CVector& expected, const CVector& got, const char* what) {
    if (expected.size() != got.size()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(expected.size()) + " vs " + std::to_string(got.size()) + ")");
    }
}

}  // namespace detail

/// w(0) = [a_0, 0, ..., 0]^T. With a steering vector (a_0 = 1) this is e_1.
inline BeamformerState init_weights(const CVector& constraint) {
    if (constraint.size() == 0 || constraint.squaredNorm() == 0.0) {
        throw std::invalid_argument("init_weights: constraint vector must be nonzero");
    }
    if (constraint[0] == cplx{0.0, 0.0}) {
        throw std::invalid_argument("init_weights: first constraint element must be nonzero");
    }
    BeamformerState state;
    state.weights = CVector::Zero(constraint.size());
    // w_0 = a_0 gives w^H a = |a_0|^2; rescale so the constraint holds for any a_0.
    state.weights[0] = constraint[0] / std::norm(constraint[0]);
    state.constraint = constraint;
    return state;
}

/// y = w^H x.
inline cplx beamformer_output(const BeamformerState& state, const CVector& x) {
    detail::check_dims(state.weights, x, "beamformer_output");
    return state.weights.dot(x);  // Eigen's dot conjugates the left operand
}

/// P x with P = I - a a^H / (a^H a).
inline CVector blocking_projection(const CVector& constraint, const CVector& x) {
    detail::check_dims(constraint, x, "blocking_projection");
    const double norm2 = constraint.squaredNorm();
    return x - constraint * (constraint.dot(x) / norm2);
}

/// |w^H a - 1|.
inline double constraint_error(const BeamformerState& state) {
    return std::abs(state.weights.dot(state.constraint) - 1.0);
}

/// Result of one stochastic-gradient step. error and output are reused by the
/// step-size mechanisms; blocked (= P x) by the ASS baseline.
struct CcmStep {
    BeamformerState state;
    cplx output;
    double error = 0.0;  // |y|^2 - 1
    CVector blocked;
};

/**
 * One constrained constant-modulus SG update:
 *
 *   y = w^H x,  e = |y|^2 - 1,
 *   w <- w - mu e y* P x,
 *   w <- w + a (1 - a^H w) / (a^H a).
 *
 * The second line moves only inside the constraint null space; the affine
 * re-projection removes the rounding drift so w^H a = 1 holds to machine
 * precision at every snapshot.
 */
inline CcmStep ccm_sg_update(const BeamformerState& state, const CVector& x, double mu) {
    detail::check_dims(state.weights, x, "ccm_sg_update");
    if (mu < 0.0) throw std::invalid_argument("ccm_sg_update: step size must be >= 0");

    CcmStep step;
    step.output = state.weights.dot(x);
    step.error = std::norm(step.output) - 1.0;
    step.blocked = blocking_projection(state.constraint, x);

    const CVector& a = state.constraint;
    CVector w = state.weights - (mu * step.error * std::conj(step.output)) * step.blocked;
    w += a * ((1.0 - a.dot(w)) / a.squaredNorm());

    step.state.weights = std::move(w);
    step.state.constraint = state.constraint;
    step.state.snapshot_index = state.snapshot_index + 1;
    return step;
}

}  // namespace beamsim
