#pragma once

// =============================================================================
// gainphase - power-network frequency responses
// =============================================================================
// Node/branch graph with per-branch dynamic laws. Device nodes are numbered
// 1..N, interior nodes N+1..M, and the common ground is node M+1 (infinite
// buses count as ground in small signal). The grounded Laplacian of 2x2 branch
// admittance blocks is Kron-reduced onto the device nodes; further transforms
// produce the capacity/line-factor rescaled response, the susceptance-only
// reduced Laplacian, the generalized short-circuit ratio, and the equivalent
// network that absorbs a trailing block of devices.
// =============================================================================

#include "gainphase/devmodel.hpp"
#include "gainphase/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <functional>
#include <numeric>
#include <variant>
#include <vector>

namespace gainphase {

// -----------------------------------------------------------------------------
// Branches and the network graph
// -----------------------------------------------------------------------------

struct RlLine {
    double susceptance;  ///< B_ij = 1/X_ij > 0
    double rx_ratio;     ///< epsilon_ij >= 0
};

struct ResistiveLoad {
    double resistance;  ///< R > 0, connects a node to ground
};

struct ShuntCapacitor {
    double capacitance;  ///< C >= 0, connects a node to ground
};

struct Branch {
    int from = 0;  ///< 1-based node id; ground is M+1
    int to = 0;
    std::variant<RlLine, ResistiveLoad, ShuntCapacitor> law;
};

struct NetworkModel {
    int total_nodes = 0;   ///< M
    int device_nodes = 0;  ///< N, nodes 1..N carry devices
    std::vector<Branch> branches;
    double omega0 = 2.0 * kPi * 50.0;

    int ground() const { return total_nodes + 1; }

    void validate() const {
        if (total_nodes < 1 || device_nodes < 1 || device_nodes > total_nodes)
            throw std::invalid_argument("NetworkModel: need 1 <= N <= M");
        if (omega0 <= 0.0) throw std::invalid_argument("NetworkModel: omega0 must be positive");
        for (const auto& b : branches) {
            if (b.from < 1 || b.from > ground() || b.to < 1 || b.to > ground() || b.from == b.to)
                throw std::invalid_argument("NetworkModel: branch endpoints out of range");
            if (const auto* rl = std::get_if<RlLine>(&b.law)) {
                if (rl->susceptance <= 0.0 || rl->rx_ratio < 0.0)
                    throw std::invalid_argument("NetworkModel: RL line needs B > 0, eps >= 0");
            } else if (const auto* ld = std::get_if<ResistiveLoad>(&b.law)) {
                if (ld->resistance <= 0.0)
                    throw std::invalid_argument("NetworkModel: load resistance must be positive");
            } else if (const auto* sh = std::get_if<ShuntCapacitor>(&b.law)) {
                if (sh->capacitance < 0.0)
                    throw std::invalid_argument("NetworkModel: shunt capacitance must be >= 0");
            }
        }
        // Every interior node must reach ground or a device node, else the
        // interior block of the Laplacian is structurally singular.
        std::vector<int> root(static_cast<std::size_t>(ground()) + 1);
        std::iota(root.begin(), root.end(), 0);
        std::function<int(int)> find = [&](int x) {
            while (root[static_cast<std::size_t>(x)] != x) {
                root[static_cast<std::size_t>(x)] =
                    root[static_cast<std::size_t>(root[static_cast<std::size_t>(x)])];
                x = root[static_cast<std::size_t>(x)];
            }
            return x;
        };
        for (const auto& b : branches) root[static_cast<std::size_t>(find(b.from))] = find(b.to);
        for (int k = device_nodes + 1; k <= total_nodes; ++k) {
            const int r = find(k);
            bool anchored = (r == find(ground()));
            for (int d = 1; d <= device_nodes && !anchored; ++d) anchored = (r == find(d));
            if (!anchored)
                throw std::invalid_argument("NetworkModel: interior node " + std::to_string(k) +
                                            " is not connected to ground or any device node");
        }
    }
};

// -----------------------------------------------------------------------------
// Branch and Laplacian evaluation
// -----------------------------------------------------------------------------

/// 2x2 admittance of a branch at complex frequency s. Throws at the exact
/// series-resonance sample (s = +-j*omega0 with eps = 0); sweep grids avoid it.
inline Mat2c branch_admittance(const Branch& b, Complex s, double omega0) {
    if (const auto* rl = std::get_if<RlLine>(&b.law))
        return rl->susceptance * unit_rl_admittance(s, rl->rx_ratio, omega0);
    if (const auto* ld = std::get_if<ResistiveLoad>(&b.law))
        return Mat2c::Identity() / ld->resistance;
    const auto& sh = std::get<ShuntCapacitor>(b.law);
    Mat2c y;
    y << s * sh.capacitance, Complex(-omega0 * sh.capacitance, 0.0),
        Complex(omega0 * sh.capacitance, 0.0), s * sh.capacitance;
    return y;
}

/// 2M x 2M grounded Laplacian of 2x2 blocks: off-diagonal blocks -Y_ij,
/// diagonal blocks include branches to ground.
inline MatXc grounded_laplacian(const NetworkModel& net, Complex s) {
    const int m = net.total_nodes;
    MatXc y = MatXc::Zero(2 * m, 2 * m);
    for (const auto& b : net.branches) {
        const Mat2c yb = branch_admittance(b, s, net.omega0);
        const int i = b.from, j = b.to;
        if (i != net.ground()) y.block<2, 2>(2 * (i - 1), 2 * (i - 1)) += yb;
        if (j != net.ground()) y.block<2, 2>(2 * (j - 1), 2 * (j - 1)) += yb;
        if (i != net.ground() && j != net.ground()) {
            y.block<2, 2>(2 * (i - 1), 2 * (j - 1)) -= yb;
            y.block<2, 2>(2 * (j - 1), 2 * (i - 1)) -= yb;
        }
    }
    return y;
}

// -----------------------------------------------------------------------------
// Schur-complement reductions
// -----------------------------------------------------------------------------

namespace detail {

inline double condition_estimate(const MatXc& m) {
    if (m.rows() == 0) return 1.0;
    Eigen::JacobiSVD<MatXc> svd(m);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return svd.singularValues()(0) / smin;
}

}  // namespace detail

/// Eliminate the trailing block (rows/cols beyond keep2) by Schur complement:
/// Y1 - Y2 Y4^-1 Y3. Sets *reliable to false when the interior block is
/// ill-conditioned (cond > 1e12) instead of aborting.
inline MatXc kron_reduce(const MatXc& y, int keep2, bool* reliable = nullptr) {
    if (y.rows() != y.cols() || keep2 < 0 || keep2 > y.rows() || keep2 % 2 != 0)
        throw std::invalid_argument("kron_reduce: bad dimensions");
    if (reliable) *reliable = true;
    const int el = static_cast<int>(y.rows()) - keep2;
    if (el == 0) return y;
    const MatXc y1 = y.topLeftCorner(keep2, keep2);
    const MatXc y2 = y.topRightCorner(keep2, el);
    const MatXc y3 = y.bottomLeftCorner(el, keep2);
    const MatXc y4 = y.bottomRightCorner(el, el);
    if (reliable && detail::condition_estimate(y4) > 1e12) *reliable = false;
    Eigen::PartialPivLU<MatXc> lu(y4);
    MatXc out = y1 - y2 * lu.solve(y3);
    if (!out.allFinite()) {
        if (reliable) *reliable = false;
        else throw std::runtime_error("kron_reduce: singular interior block");
    }
    return out;
}

/// Eliminate the leading block, keeping the trailing keep2 rows/cols.
inline MatXc eliminate_leading(const MatXc& y, int keep2, bool* reliable = nullptr) {
    if (y.rows() != y.cols() || keep2 < 0 || keep2 > y.rows() || keep2 % 2 != 0)
        throw std::invalid_argument("eliminate_leading: bad dimensions");
    if (reliable) *reliable = true;
    const int el = static_cast<int>(y.rows()) - keep2;
    if (el == 0) return y;
    const MatXc y1 = y.topLeftCorner(el, el);
    const MatXc y2 = y.topRightCorner(el, keep2);
    const MatXc y3 = y.bottomLeftCorner(keep2, el);
    const MatXc y4 = y.bottomRightCorner(keep2, keep2);
    if (reliable && detail::condition_estimate(y1) > 1e12) *reliable = false;
    Eigen::PartialPivLU<MatXc> lu(y1);
    MatXc out = y4 - y3 * lu.solve(y2);
    if (!out.allFinite()) {
        if (reliable) *reliable = false;
        else throw std::runtime_error("eliminate_leading: singular block");
    }
    return out;
}

// -----------------------------------------------------------------------------
// Grid responses
// -----------------------------------------------------------------------------

struct GridSample {
    MatXc value;
    bool reliable = true;
};

/// A boundary frequency response of the network (2N x 2N for N retained device
/// nodes), with a note describing which rescaling was applied.
struct GridResponse {
    int pair_count = 0;       ///< N: value is 2N x 2N
    std::string description;  ///< rescaling metadata, for reports
    std::function<GridSample(Complex)> eval;

    GridSample operator()(Complex s) const { return eval(s); }
};

/// Raw Kron-reduced network response on the device nodes.
inline GridResponse grid_response(const NetworkModel& net) {
    net.validate();
    GridResponse g;
    g.pair_count = net.device_nodes;
    g.description = "raw";
    const int keep2 = 2 * net.device_nodes;
    g.eval = [net, keep2](Complex s) {
        GridSample out;
        out.value = kron_reduce(grounded_laplacian(net, s), keep2, &out.reliable);
        return out;
    };
    return g;
}

/// Capacity and line-factor rescaling:
/// (S^-1/2 (x) I2) Y(s) (S^-1/2 D (x) inverse line factor).
inline GridResponse rescaled_grid(const GridResponse& ygrid, const VecXd& capacity,
                                  const VecXd& weight, double eps_tilde, double omega0) {
    const int n = ygrid.pair_count;
    if (capacity.size() != n || weight.size() != n)
        throw std::invalid_argument("rescaled_grid: S and D must have one entry per device node");
    if ((capacity.array() <= 0).any() || (weight.array() <= 0).any())
        throw std::invalid_argument("rescaled_grid: S and D must be positive");

    GridResponse g;
    g.pair_count = n;
    g.description = ygrid.description + "+rescaled(eps_tilde=" + std::to_string(eps_tilde) + ")";
    g.eval = [ygrid, capacity, weight, eps_tilde, omega0, n](Complex s) {
        GridSample base = ygrid(s);
        const Mat2c f_inv = unit_rl_impedance(s, eps_tilde, omega0);
        MatXc left = MatXc::Zero(2 * n, 2 * n);
        MatXc right = MatXc::Zero(2 * n, 2 * n);
        for (int k = 0; k < n; ++k) {
            const double si = 1.0 / std::sqrt(capacity(k));
            left.block<2, 2>(2 * k, 2 * k) = si * Mat2c::Identity();
            right.block<2, 2>(2 * k, 2 * k) = si * weight(k) * f_inv;
        }
        base.value = left * base.value * right;
        return base;
    };
    return g;
}

/// Equivalent network after absorbing devices that sit on the trailing block
/// of retained nodes (caller orders nodes so the absorbed devices come last).
/// The absorbed devices enter as their global-frame, capacity-scaled blocks.
inline GridResponse equivalent_network(const GridResponse& ygrid,
                                       std::vector<DeviceAdmittance> absorbed) {
    const int n = ygrid.pair_count;
    const int na = static_cast<int>(absorbed.size());
    if (na > n) throw std::invalid_argument("equivalent_network: more devices than nodes");

    GridResponse g;
    g.pair_count = n - na;
    g.description = ygrid.description + "+absorbed(" + std::to_string(na) + ")";
    if (na == 0) {
        g.eval = ygrid.eval;
        g.description = ygrid.description;
        return g;
    }
    const int keep2 = 2 * (n - na);
    g.eval = [ygrid, absorbed, keep2, na](Complex s) {
        GridSample base = ygrid(s);
        for (int k = 0; k < na; ++k)
            base.value.block<2, 2>(keep2 + 2 * k, keep2 + 2 * k) +=
                absorbed[static_cast<std::size_t>(k)].global(s);
        GridSample out;
        bool rel = true;
        out.value = kron_reduce(base.value, keep2, &rel);
        out.reliable = base.reliable && rel;
        return out;
    };
    return g;
}

/// Network response on the trailing block of device nodes after eliminating
/// the leading device nodes (which carry no devices in that subsystem).
inline GridResponse subnetwork_on_trailing(const GridResponse& ygrid, int keep_n) {
    const int n = ygrid.pair_count;
    if (keep_n < 1 || keep_n > n) throw std::invalid_argument("subnetwork_on_trailing: bad size");
    GridResponse g;
    g.pair_count = keep_n;
    g.description = ygrid.description + "+trailing(" + std::to_string(keep_n) + ")";
    g.eval = [ygrid, keep_n](Complex s) {
        GridSample base = ygrid(s);
        GridSample out;
        bool rel = true;
        out.value = eliminate_leading(base.value, 2 * keep_n, &rel);
        out.reliable = base.reliable && rel;
        return out;
    };
    return g;
}

// -----------------------------------------------------------------------------
// Susceptance-only reduction and grid strength
// -----------------------------------------------------------------------------

/// Reduced susceptance Laplacian B_r over the device nodes. Requires a pure
/// RL network with one common R/X ratio; anything else leaves the
/// B_r (x) F_eps structure and is refused.
inline MatXd reduced_b_matrix(const NetworkModel& net) {
    net.validate();
    double eps = -1.0;
    for (const auto& b : net.branches) {
        const auto* rl = std::get_if<RlLine>(&b.law);
        if (!rl)
            throw std::invalid_argument(
                "reduced_b_matrix: network must contain RL lines only (identical R/X path)");
        if (eps < 0.0) eps = rl->rx_ratio;
        else if (std::abs(eps - rl->rx_ratio) > 1e-12)
            throw std::invalid_argument("reduced_b_matrix: heterogeneous R/X ratios");
    }
    const int m = net.total_nodes;
    MatXd bmat = MatXd::Zero(m, m);
    for (const auto& b : net.branches) {
        const double bij = std::get<RlLine>(b.law).susceptance;
        const int i = b.from, j = b.to;
        if (i != net.ground()) bmat(i - 1, i - 1) += bij;
        if (j != net.ground()) bmat(j - 1, j - 1) += bij;
        if (i != net.ground() && j != net.ground()) {
            bmat(i - 1, j - 1) -= bij;
            bmat(j - 1, i - 1) -= bij;
        }
    }
    const int n = net.device_nodes;
    if (n == m) return bmat;
    const MatXd b1 = bmat.topLeftCorner(n, n);
    const MatXd b2 = bmat.topRightCorner(n, m - n);
    const MatXd b3 = bmat.bottomLeftCorner(m - n, n);
    const MatXd b4 = bmat.bottomRightCorner(m - n, m - n);
    Eigen::PartialPivLU<MatXd> lu(b4);
    MatXd br = b1 - b2 * lu.solve(b3);
    if (!br.allFinite())
        throw std::runtime_error("reduced_b_matrix: floating interior subnetwork");
    return br;
}

/// Generalized short-circuit ratio: smallest eigenvalue of S^-1/2 B_r S^-1/2
/// (equal to the smallest eigenvalue of S^-1 B_r by similarity).
inline double gscr(const MatXd& b_r, const VecXd& capacity) {
    if (b_r.rows() != b_r.cols() || capacity.size() != b_r.rows())
        throw std::invalid_argument("gscr: dimension mismatch");
    if ((capacity.array() <= 0).any())
        throw std::invalid_argument("gscr: capacities must be positive");
    const VecXd si = capacity.array().rsqrt();
    const MatXd sym = si.asDiagonal() * b_r * si.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatXd> es(0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly);
    const double lam = es.eigenvalues()(0);
    if (lam <= 0.0)
        throw std::runtime_error("gscr: reduced susceptance matrix is not positive definite");
    return lam;
}

}  // namespace gainphase
