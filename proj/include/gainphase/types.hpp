#pragma once

// =============================================================================
// gainphase - common scalar/matrix types and dq-frame helpers
// =============================================================================

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace gainphase {

using Complex = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;
using Mat2d = Eigen::Matrix2d;
using MatXc = Eigen::MatrixXcd;
using MatXd = Eigen::MatrixXd;
using VecXc = Eigen::VectorXcd;
using VecXd = Eigen::VectorXd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// 90-degree rotation generator: J = [[0,-1],[1,0]], J*J = -I.
inline Mat2d rotation_generator() {
    Mat2d j;
    j << 0.0, -1.0, 1.0, 0.0;
    return j;
}

/// Planar rotation e^{J*theta} = [[cos,-sin],[sin,cos]].
inline Mat2d rotation(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    Mat2d r;
    r << c, -s, s, c;
    return r;
}

/// Impedance factor of a unit-susceptance RL line in the dq frame:
/// [[s/w0 + eps, -1], [1, s/w0 + eps]]. Its inverse is the per-unit
/// admittance of the line (when scaled by the susceptance).
inline Mat2c unit_rl_impedance(Complex s, double eps_ratio, double omega0) {
    const Complex a = s / omega0 + eps_ratio;
    Mat2c z;
    z << a, Complex(-1.0, 0.0), Complex(1.0, 0.0), a;
    return z;
}

/// Admittance of a unit-susceptance RL line; singular only at s = +-j*w0
/// when eps_ratio = 0.
inline Mat2c unit_rl_admittance(Complex s, double eps_ratio, double omega0) {
    const Mat2c z = unit_rl_impedance(s, eps_ratio, omega0);
    const Complex det = z(0, 0) * z(1, 1) - z(0, 1) * z(1, 0);
    if (std::abs(det) == 0.0)
        throw std::runtime_error("unit_rl_admittance: singular at s = +-j*omega0 with zero R/X");
    Mat2c y;
    y << z(1, 1), -z(0, 1), -z(1, 0), z(0, 0);
    return y / det;
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

inline bool all_finite(const MatXc& m) {
    return m.allFinite();
}

}  // namespace gainphase
