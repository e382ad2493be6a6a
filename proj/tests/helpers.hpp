#pragma once

// Shared test utilities: independent oracles and random-matrix generators.
// Everything here is deliberately implementation-independent of the library
// paths it is used to check.

#include "gainphase/types.hpp"

#include <Eigen/Eigenvalues>
#include <optional>
#include <random>
#include <utility>

namespace testutil {

using gainphase::Complex;
using gainphase::kPi;
using gainphase::MatXc;
using gainphase::VecXd;

inline double min_eig_hermitian_part(const MatXc& a, double theta) {
    const MatXc b = std::polar(1.0, -theta) * a;
    const MatXc h = 0.5 * (b + b.adjoint());
    Eigen::SelfAdjointEigenSolver<MatXc> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

/// Support angles of the numerical range W(A), found by sampling
/// f(theta) = min-eig of the Hermitian part of e^{-j theta} A over a fine
/// grid and bisecting the sign crossings. Returns {phi_min, phi_max} with the
/// interval midpoint wrapped into (-pi, pi], or nullopt when no direction
/// separates W(A) from the origin (non-sectorial).
inline std::optional<std::pair<double, double>> support_angles_oracle(const MatXc& a,
                                                                      int grid = 2880) {
    std::vector<double> f(static_cast<std::size_t>(grid));
    for (int k = 0; k < grid; ++k)
        f[static_cast<std::size_t>(k)] = min_eig_hermitian_part(a, 2.0 * kPi * k / grid);

    // Locate the (single) circular arc where f > 0.
    int first = -1;
    for (int k = 0; k < grid; ++k) {
        const int prev = (k + grid - 1) % grid;
        if (f[static_cast<std::size_t>(k)] > 0.0 && f[static_cast<std::size_t>(prev)] <= 0.0) {
            first = k;
            break;
        }
    }
    if (first < 0) return std::nullopt;
    int len = 0;
    while (len < grid && f[static_cast<std::size_t>((first + len) % grid)] > 0.0) ++len;
    if (len == grid) return std::nullopt;  // cannot happen for a bounded W(A)

    auto bisect = [&](double lo, double hi) {
        // f(lo), f(hi) straddle zero.
        double flo = min_eig_hermitian_part(a, lo);
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = min_eig_hermitian_part(a, mid);
            if ((flo > 0.0) == (fm > 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    const double step = 2.0 * kPi / grid;
    const double theta_lo = bisect(step * first, step * (first - 1));
    const double theta_hi = bisect(step * (first + len - 1), step * (first + len));

    // Feasible directions are (phi_max - pi/2, phi_min + pi/2).
    double phi_max = theta_lo + kPi / 2.0;
    double phi_min = theta_hi - kPi / 2.0;
    if (phi_min > phi_max) phi_min -= 2.0 * kPi;
    const double mid = 0.5 * (phi_min + phi_max);
    const double shift = gainphase::wrap_angle(mid) - mid;
    return std::make_pair(phi_min + shift, phi_max + shift);
}

/// Random sectorial matrix built as T* D T with D diagonal unitary spanning an
/// arc of the requested width (< pi) centered at `center`.
inline MatXc random_sectorial(std::mt19937& rng, int dim, double arc_width, double center = 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::VectorXcd d(dim);
    for (int i = 0; i < dim; ++i) {
        const double angle = center + arc_width * (unit(rng) - 0.5);
        d(i) = std::polar(1.0, angle);
    }
    MatXc t(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) t(i, j) = Complex(gauss(rng), gauss(rng));
    // Keep T safely away from singular so the construction is well conditioned.
    t += 3.0 * std::sqrt(static_cast<double>(dim)) * MatXc::Identity(dim, dim);
    return t.adjoint() * d.asDiagonal() * t;
}

inline MatXc random_complex(std::mt19937& rng, int rows, int cols) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatXc m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
    return m;
}

/// Angular distance of x to the closed interval [lo, hi] modulo 2*pi.
inline double angle_dist_to_interval(double x, double lo, double hi) {
    double best = 1e100;
    for (int k = -2; k <= 2; ++k) {
        const double y = x + 2.0 * kPi * k;
        if (y >= lo && y <= hi) return 0.0;
        best = std::min(best, std::min(std::abs(y - lo), std::abs(y - hi)));
    }
    return best;
}

}  // namespace testutil
