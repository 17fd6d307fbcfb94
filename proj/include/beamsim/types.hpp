#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>

#include <Eigen/Dense>

namespace beamsim {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Marks an activity window that never closes.
inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

inline constexpr double kPi = 3.14159265358979323846;

inline double to_db(double linear) {
    return linear > 0.0 ? 10.0 * std::log10(linear) : -std::numeric_limits<double>::infinity();
}

inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace beamsim
