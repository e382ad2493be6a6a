#pragma once

// =============================================================================
// gainphase - gains and phases of complex matrices
// =============================================================================
// Gains of a square complex matrix are its singular values. Phases are defined
// through the numerical range W(A) = {x*Ax : ||x|| = 1}: when 0 lies outside
// W(A) the matrix is sectorial and admits a congruence A = T*DT with D diagonal
// unitary spanning an arc shorter than pi; the phases are the angles of D and
// bound the support angles of W(A). They are computed by rotating A into an
// accretive matrix and halving the eigenvalue arguments of B(B*)^-1.
// =============================================================================

#include "gainphase/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <optional>
#include <vector>

namespace gainphase {

/// Margin below which a strict inequality counts as violated. Sufficient
/// stability conditions must not be satisfied by roundoff alone.
inline constexpr double kStrictMargin = 1e-9;

/// Singular values in descending order.
struct GainSpectrum {
    VecXd sigmas;

    double max() const { return sigmas(0); }
    double min() const { return sigmas(sigmas.size() - 1); }
};

/// Matrix phases. When `sectorial` is false, `phis` is empty and consumers
/// treat the phase interval as unbounded.
struct PhaseSpectrum {
    bool sectorial = false;
    VecXd phis;              ///< descending, radians; interval midpoint in (-pi, pi]
    double rotation_gamma = 0.0;  ///< half-plane rotation used by the computation

    double phi_max() const { return phis(0); }
    double phi_min() const { return phis(phis.size() - 1); }
    double width() const { return phi_max() - phi_min(); }
};

enum class Verdict { GainOk, PhaseOk, Undecided };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::GainOk: return "GAIN_OK";
        case Verdict::PhaseOk: return "PHASE_OK";
        default: return "UNDECIDED";
    }
}

// -----------------------------------------------------------------------------
// Gains
// -----------------------------------------------------------------------------

inline GainSpectrum singular_values(const MatXc& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw std::invalid_argument("singular_values: matrix must be square, p >= 1");
    if (!a.allFinite())
        throw std::invalid_argument("singular_values: non-finite entry");
    if (a.rows() <= 16) {
        Eigen::JacobiSVD<MatXc> svd(a);
        return {svd.singularValues()};
    }
    Eigen::BDCSVD<MatXc> svd(a);
    return {svd.singularValues()};
}

namespace detail {

/// Minimum eigenvalue of the Hermitian part of e^{-j*gamma} A. Positive iff
/// W(A) lies strictly inside the half-plane {Re(e^{-j*gamma} w) > 0}.
inline double half_plane_clearance(const MatXc& a, double gamma) {
    const Complex r = std::polar(1.0, -gamma);
    const MatXc b = r * a;
    const MatXc herm = 0.5 * (b + b.adjoint());
    Eigen::SelfAdjointEigenSolver<MatXc> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

/// Golden-section maximization of f on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi, int iters = 80) {
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters && (b - a) > 1e-12; ++i) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

// -----------------------------------------------------------------------------
// Sectoriality
// -----------------------------------------------------------------------------

/// Search for a rotation gamma in [0, 2*pi) such that the Hermitian part of
/// e^{-j*gamma} A is positive definite (equivalently 0 is outside W(A)).
/// Returns the rotation with the best clearance, or nullopt if none exists
/// within tolerance. Scans 720 directions, then refines the widest feasible
/// arc by golden section on the clearance.
inline std::optional<double> sectoriality(const MatXc& a) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw std::invalid_argument("sectoriality: matrix must be square, p >= 1");
    if (!a.allFinite())
        throw std::invalid_argument("sectoriality: non-finite entry");

    const Eigen::Index p = a.rows();
    if (p == 1) {
        const Complex z = a(0, 0);
        if (std::abs(z) == 0.0) return std::nullopt;
        double g = std::arg(z);
        if (g < 0.0) g += 2.0 * kPi;
        return g;
    }

    const double sigma_max = singular_values(a).max();
    if (sigma_max == 0.0) return std::nullopt;  // zero matrix, W(A) = {0}
    const double eps_sec = 1e-9 * sigma_max;

    constexpr int kScan = 720;
    std::vector<double> clearance(kScan);
    for (int k = 0; k < kScan; ++k)
        clearance[k] = detail::half_plane_clearance(a, 2.0 * kPi * k / kScan);

    auto f = [&a](double g) { return detail::half_plane_clearance(a, g); };
    const double step = 2.0 * kPi / kScan;

    // Feasible directions form a single circular arc; locate the widest run.
    int best_start = -1, best_len = 0;
    {
        int k = 0;
        while (k < kScan) {
            if (clearance[k] <= 0.0) {
                ++k;
                continue;
            }
            int start = k, len = 0;
            while (len < kScan && clearance[(start + len) % kScan] > 0.0) ++len;
            if (len > best_len) {
                best_len = len;
                best_start = start;
            }
            k = start + len;
        }
    }

    double gamma;
    if (best_len == kScan) {
        // Positive everywhere (numerically impossible for a genuine W(A), but
        // guard anyway): take the global scan maximum.
        gamma = step * static_cast<double>(std::max_element(clearance.begin(), clearance.end()) -
                                           clearance.begin());
    } else if (best_len > 0) {
        const double lo = step * best_start;
        const double hi = step * (best_start + best_len - 1);
        gamma = detail::golden_max(f, lo, hi);
    } else {
        // No strictly positive sample; the feasible arc, if any, is narrower
        // than the scan spacing. Refine around the least-infeasible direction.
        const int k_best =
            static_cast<int>(std::max_element(clearance.begin(), clearance.end()) - clearance.begin());
        gamma = detail::golden_max(f, step * (k_best - 1), step * (k_best + 1));
    }

    if (f(gamma) < eps_sec) return std::nullopt;
    gamma = std::fmod(gamma, 2.0 * kPi);
    if (gamma < 0.0) gamma += 2.0 * kPi;
    return gamma;
}

// -----------------------------------------------------------------------------
// Phases
// -----------------------------------------------------------------------------

inline PhaseSpectrum phases(const MatXc& a) {
    const auto gamma = sectoriality(a);
    if (!gamma) return {};

    const Eigen::Index p = a.rows();
    if (p == 1) {
        PhaseSpectrum ps;
        ps.sectorial = true;
        ps.rotation_gamma = *gamma;
        ps.phis.resize(1);
        ps.phis(0) = std::arg(a(0, 0));
        return ps;
    }

    // A sectorial matrix is nonsingular; a failed inversion here means the
    // sectoriality verdict was made at the edge of numerical resolution.
    const GainSpectrum gains = singular_values(a);
    if (gains.min() < 1e-13 * gains.max())
        throw std::runtime_error("phases: matrix is sectorial but numerically singular (conditioning)");

    const Complex r = std::polar(1.0, -*gamma);
    const MatXc b = r * a;  // accretive: all phases of b lie in (-pi/2, pi/2)
    const MatXc m = b * b.adjoint().inverse();

    Eigen::ComplexEigenSolver<MatXc> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("phases: eigenvalue computation failed");

    std::vector<double> phis(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i)
        phis[static_cast<std::size_t>(i)] = 0.5 * std::arg(es.eigenvalues()(i)) + *gamma;
    std::sort(phis.begin(), phis.end(), std::greater<double>());

    // Re-center the whole interval so its midpoint lies in (-pi, pi].
    const double mid = 0.5 * (phis.front() + phis.back());
    const double shift = wrap_angle(mid) - mid;

    PhaseSpectrum ps;
    ps.sectorial = true;
    ps.rotation_gamma = *gamma;
    ps.phis.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) ps.phis(i) = phis[static_cast<std::size_t>(i)] + shift;
    return ps;
}

// -----------------------------------------------------------------------------
// Mixed small gain-phase test at one frequency
// -----------------------------------------------------------------------------

/// Pointwise feedback test for G # H: the loop is certified at this sample if
/// the gain product is below one, or both matrices are sectorial with extreme
/// phase sums inside (-pi, pi). Margins under kStrictMargin do not certify.
inline Verdict check_mixed_lemma(const MatXc& g, const MatXc& h) {
    if (g.rows() != g.cols() || h.rows() != h.cols() || g.rows() != h.rows())
        throw std::invalid_argument("check_mixed_lemma: dimension mismatch");

    const double gain_product = singular_values(g).max() * singular_values(h).max();
    if (1.0 - gain_product > kStrictMargin) return Verdict::GainOk;

    const PhaseSpectrum pg = phases(g);
    const PhaseSpectrum ph = phases(h);
    if (pg.sectorial && ph.sectorial) {
        const double hi_margin = kPi - (pg.phi_max() + ph.phi_max());
        const double lo_margin = (pg.phi_min() + ph.phi_min()) + kPi;
        if (hi_margin > kStrictMargin && lo_margin > kStrictMargin) return Verdict::PhaseOk;
    }
    return Verdict::Undecided;
}

}  // namespace gainphase
