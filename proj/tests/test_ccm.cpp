#include <gtest/gtest.h>

#include <random>

#include "beamsim/array_model.hpp"
#include "beamsim/ccm.hpp"

using namespace beamsim;

namespace {

CVector random_vector(std::mt19937_64& rng, Eigen::Index m) {
    std::normal_distribution<double> n(0.0, 1.0);
    CVector v(m);
    for (auto& z : v) z = {n(rng), n(rng)};
    return v;
}

// Oracle for y = w^H x written as an explicit elementwise sum.
cplx inner_oracle(const CVector& w, const CVector& x) {
    cplx acc{0.0, 0.0};
    for (Eigen::Index k = 0; k < w.size(); ++k) acc += std::conj(w[k]) * x[k];
    return acc;
}

}  // namespace

TEST(InitWeights, FirstElementOnly) {
    const auto a = steering_vector({4, 0.5}, 63.0);
    const auto st = init_weights(a);
    EXPECT_EQ(st.weights, (CVector(4) << 1.0, 0.0, 0.0, 0.0).finished());
    EXPECT_EQ(st.weights.dot(a), cplx(1.0, 0.0));
    EXPECT_EQ(st.snapshot_index, 0u);
}

TEST(InitWeights, ScalarArrayPassesInputThrough) {
    const auto st = init_weights(steering_vector({1, 0.5}, 90.0));
    const CVector x = (CVector(1) << cplx(0.3, -2.0)).finished();
    EXPECT_EQ(beamformer_output(st, x), cplx(0.3, -2.0));
}

TEST(InitWeights, RejectsZeroConstraint) {
    EXPECT_THROW(init_weights(CVector::Zero(3)), std::invalid_argument);
    EXPECT_THROW(init_weights(CVector()), std::invalid_argument);
}

TEST(BeamformerOutput, ClosedFormCases) {
    const auto a = steering_vector({6, 0.5}, 100.0);
    std::mt19937_64 rng(1);
    const CVector x = random_vector(rng, 6);
    EXPECT_EQ(beamformer_output(init_weights(a), x), x[0]);

    BeamformerState st{a / 6.0, a, 0};
    EXPECT_NEAR(std::abs(beamformer_output(st, a) - 1.0), 0.0, 1e-14);
}

TEST(BeamformerOutput, MatchesElementwiseOracle) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto m = static_cast<Eigen::Index>(1 + trial % 8);
        BeamformerState st{random_vector(rng, m), random_vector(rng, m), 0};
        const CVector x = random_vector(rng, m);
        EXPECT_NEAR(std::abs(beamformer_output(st, x) - inner_oracle(st.weights, x)), 0.0, 1e-12);
    }
    BeamformerState st{CVector::Ones(3), CVector::Ones(3), 0};
    EXPECT_THROW(beamformer_output(st, CVector::Ones(4)), std::invalid_argument);
}

TEST(BlockingProjection, IdempotentAndOrthogonalToConstraint) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = static_cast<Eigen::Index>(2 + trial % 15);
        const auto a = steering_vector({static_cast<std::size_t>(m), 0.5}, 10.0 + trial * 0.8);
        const CVector x = random_vector(rng, m);
        const CVector px = blocking_projection(a, x);
        EXPECT_LE((blocking_projection(a, px) - px).norm(), 1e-12);
        EXPECT_LE(std::abs(a.dot(px)), 1e-10);
    }
}

TEST(CcmUpdate, UnitModulusOutputLeavesWeightsUnchanged) {
    const auto a = steering_vector({4, 0.5}, 80.0);
    const auto st = init_weights(a);
    std::mt19937_64 rng(4);
    CVector x = random_vector(rng, 4);
    x[0] = cplx(1.0, 0.0);  // y = x0 = 1 exactly
    const auto step = ccm_sg_update(st, x, 0.5);
    EXPECT_EQ(step.error, 0.0);
    EXPECT_EQ(step.state.weights, st.weights);
    EXPECT_EQ(step.state.snapshot_index, 1u);
}

TEST(CcmUpdate, ZeroGradientFixedPointForFeasibleWeights) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = steering_vector({6, 0.5}, 30.0 + trial * 0.5);
        CVector w = random_vector(rng, 6);
        w += a * ((1.0 - a.dot(w)) / a.squaredNorm());
        BeamformerState st{w, a, 0};
        CVector x = random_vector(rng, 6);
        x /= std::abs(w.dot(x));
        const auto step = ccm_sg_update(st, x, 1e-2);
        EXPECT_LE((step.state.weights - w).norm(), 1e-12 * (1.0 + w.norm()));
    }
}

TEST(CcmUpdate, ZeroStepLeavesWeightsUnchanged) {
    std::mt19937_64 rng(6);
    const auto a = steering_vector({5, 0.5}, 45.0);
    auto st = init_weights(a);
    for (int i = 0; i < 10; ++i) {
        const auto step = ccm_sg_update(st, random_vector(rng, 5), 0.0);
        EXPECT_EQ(step.state.weights, st.weights);
        st = step.state;
    }
    EXPECT_THROW(ccm_sg_update(st, random_vector(rng, 5), -1.0), std::invalid_argument);
    EXPECT_THROW(ccm_sg_update(st, random_vector(rng, 4), 0.1), std::invalid_argument);
}

TEST(CcmUpdate, ConstraintHoldsAfterEveryUpdate) {
    std::mt19937_64 rng(7);
    const auto a = steering_vector({8, 0.5}, 72.0);
    auto st = init_weights(a);
    for (int i = 0; i < 2000; ++i) {
        const auto step = ccm_sg_update(st, 2.0 * random_vector(rng, 8), 1e-3);
        EXPECT_LT(constraint_error(step.state), 1e-10);
        st = step.state;
    }
}

TEST(CcmUpdate, NoiseFreeSoiDrivesModulusToOne) {
    ScenarioConfig c;
    c.geometry.sensors = 8;
    c.sources = {{90.0, 1.0, 1, kUnbounded}};
    c.noise_power = 0.0;
    c.snapshots = 500;
    const auto batch = synthesize_snapshots(c, 0);
    auto st = init_weights(steering_vector(c.geometry, 90.0));
    double last_modulus = 0.0;
    for (const auto& x : batch.x) {
        const auto step = ccm_sg_update(st, x, 1e-3);
        last_modulus = std::abs(step.output);
        st = step.state;
    }
    EXPECT_LT(std::abs(last_modulus - 1.0), 0.01);
}

TEST(CcmUpdate, ModulusErrorShrinksWithInterferer) {
    ScenarioConfig c;
    c.geometry.sensors = 8;
    c.sources = {{90.0, 1.0, 1, kUnbounded}, {50.0, 2.0, 1, kUnbounded}};
    c.noise_power = 1e-3;
    c.snapshots = 3000;
    const auto batch = synthesize_snapshots(c, 1);
    auto st = init_weights(steering_vector(c.geometry, 90.0));
    std::vector<double> window_cost;
    double acc = 0.0;
    for (std::size_t t = 0; t < batch.size(); ++t) {
        const auto step = ccm_sg_update(st, batch.x[t], 2e-3);
        acc += step.error * step.error;
        if ((t + 1) % 100 == 0) {
            window_cost.push_back(acc / 100.0);
            acc = 0.0;
        }
        st = step.state;
    }
    EXPECT_LT(window_cost.back(), window_cost.front());
    EXPECT_LT(window_cost.back(), 0.05);
}
