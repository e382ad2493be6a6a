#pragma once

// =============================================================================
// gainphase - closed-loop ground truth
// =============================================================================
// Assembles the interconnected small-signal model of devices and network as a
// linear DAE  E dz/dt = A z  over device states, RL branch currents, and node
// voltages, and reads closed-loop modes from the finite generalized
// eigenvalues of the pencil (A, E). Node equations without shunt capacitance
// are algebraic; the QZ solve handles them without index reduction. Also
// provides a generalized-Nyquist winding count of det(I + L(jw)) and a
// numerical check of the characteristic-polynomial factorization that
// underlies the equivalent-subsystem split.
// =============================================================================

#include "gainphase/devmodel.hpp"
#include "gainphase/network.hpp"

#include <Eigen/Eigenvalues>
#include <map>
#include <vector>

namespace gainphase {

/// A device attached to one of the network's device nodes (1..N).
struct PlacedDevice {
    DeviceAdmittance device;
    int node = 1;
};

/// Assembled closed-loop pencil E dz/dt = A z.
struct ClosedLoopModel {
    MatXd e, a;
    int device_state_count = 0;
    int branch_state_count = 0;
    int node_voltage_count = 0;

    int size() const { return static_cast<int>(a.rows()); }
};

inline ClosedLoopModel assemble_closed_loop(const std::vector<PlacedDevice>& devices,
                                            const NetworkModel& net) {
    net.validate();
    for (const auto& pd : devices) {
        if (!pd.device.realization)
            throw std::invalid_argument(
                "assemble_closed_loop: device '" + pd.device.id +
                "' has no state-space realization (tabulated devices unsupported)");
        if (pd.node < 1 || pd.node > net.device_nodes)
            throw std::invalid_argument("assemble_closed_loop: device node out of range");
    }

    const int m = net.total_nodes;
    int nx = 0;
    for (const auto& pd : devices) nx += pd.device.realization->order();
    int nb = 0;
    for (const auto& b : net.branches)
        if (std::holds_alternative<RlLine>(b.law)) nb += 2;
    const int nv = 2 * m;
    const int total = nx + nb + nv;

    ClosedLoopModel cl;
    cl.device_state_count = nx;
    cl.branch_state_count = nb;
    cl.node_voltage_count = nv;
    cl.e = MatXd::Zero(total, total);
    cl.a = MatXd::Zero(total, total);

    const int vbase = nx + nb;
    auto vcol = [&](int node) { return vbase + 2 * (node - 1); };

    // Device rows: dx = A x + B e^{-J theta} v_node.
    int xoff = 0;
    for (const auto& pd : devices) {
        const StateSpace& ss = *pd.device.realization;
        const int n = ss.order();
        cl.e.block(xoff, xoff, n, n).setIdentity();
        cl.a.block(xoff, xoff, n, n) = ss.a;
        cl.a.block(xoff, vcol(pd.node), n, 2) = ss.b * rotation(-pd.device.steady_angle);
        xoff += n;
    }

    // Branch rows: (X/w0) di = (v_i - v_j) - eps X i - X J i.
    int boff = nx;
    const Mat2d jrot = rotation_generator();
    for (const auto& b : net.branches) {
        const auto* rl = std::get_if<RlLine>(&b.law);
        if (!rl) continue;
        const double x = 1.0 / rl->susceptance;
        cl.e.block<2, 2>(boff, boff) = (x / net.omega0) * Mat2d::Identity();
        cl.a.block<2, 2>(boff, boff) = -rl->rx_ratio * x * Mat2d::Identity() - x * jrot;
        if (b.from != net.ground()) cl.a.block<2, 2>(boff, vcol(b.from)) += Mat2d::Identity();
        if (b.to != net.ground()) cl.a.block<2, 2>(boff, vcol(b.to)) -= Mat2d::Identity();
        boff += 2;
    }

    // Node rows: C dv = I_dev - sum(outgoing branch currents) - G v - w0 C J v.
    boff = nx;
    for (const auto& b : net.branches) {
        if (const auto* rl = std::get_if<RlLine>(&b.law)) {
            (void)rl;
            if (b.from != net.ground())
                cl.a.block<2, 2>(vcol(b.from), boff) -= Mat2d::Identity();
            if (b.to != net.ground()) cl.a.block<2, 2>(vcol(b.to), boff) += Mat2d::Identity();
            boff += 2;
        } else if (const auto* ld = std::get_if<ResistiveLoad>(&b.law)) {
            const int k = (b.from == net.ground()) ? b.to : b.from;
            cl.a.block<2, 2>(vcol(k), vcol(k)) -= Mat2d::Identity() / ld->resistance;
        } else if (const auto* sh = std::get_if<ShuntCapacitor>(&b.law)) {
            const int k = (b.from == net.ground()) ? b.to : b.from;
            cl.e.block<2, 2>(vcol(k), vcol(k)) += sh->capacitance * Mat2d::Identity();
            cl.a.block<2, 2>(vcol(k), vcol(k)) -= net.omega0 * sh->capacitance * jrot;
        }
    }
    // Device injections: I_out = -S e^{J th} (C x + D e^{-J th} v).
    xoff = 0;
    for (const auto& pd : devices) {
        const StateSpace& ss = *pd.device.realization;
        const int n = ss.order();
        const Mat2d rot = rotation(pd.device.steady_angle);
        const double s = pd.device.capacity_ratio;
        cl.a.block(vcol(pd.node), xoff, 2, n) -= s * rot * ss.c;
        cl.a.block<2, 2>(vcol(pd.node), vcol(pd.node)) -= s * rot * ss.d * rot.transpose();
        xoff += n;
    }
    return cl;
}

// -----------------------------------------------------------------------------
// Eigenvalue report
// -----------------------------------------------------------------------------

struct EigenReport {
    std::vector<Complex> eigenvalues;  ///< finite, non-structural modes
    std::vector<Complex> structural;   ///< |lambda| below the rotational-mode tolerance
    double max_real = -std::numeric_limits<double>::infinity();
    bool stable = true;
};

/// Finite generalized eigenvalues of the assembled pencil. Eigenvalues with
/// magnitude below 1e-7 are the structural angle-shift modes of islanded
/// GFM/SG groups and are reported separately from the stability verdict.
inline EigenReport pencil_eigenvalues(const ClosedLoopModel& cl) {
    MatXd e = cl.e, a = cl.a;
    // Row equilibration (does not change the eigenvalues of the pencil).
    for (int r = 0; r < a.rows(); ++r) {
        const double scale = std::max(e.row(r).cwiseAbs().maxCoeff(),
                                      a.row(r).cwiseAbs().maxCoeff());
        if (scale > 0.0) {
            e.row(r) /= scale;
            a.row(r) /= scale;
        }
    }
    Eigen::GeneralizedEigenSolver<MatXd> ges;
    ges.compute(a, e, /*computeEigenvectors=*/false);
    if (ges.info() != Eigen::Success)
        throw std::runtime_error("pencil_eigenvalues: QZ iteration failed");

    EigenReport rep;
    int degenerate = 0;
    for (Eigen::Index i = 0; i < ges.alphas().size(); ++i) {
        const Complex alpha = ges.alphas()(i);
        const double beta = ges.betas()(i);
        const double mag = std::abs(alpha) + std::abs(beta);
        if (mag < 1e-12) {
            ++degenerate;  // singular-pencil pair
            continue;
        }
        if (std::abs(beta) < 1e-10 * mag) continue;  // infinite (algebraic constraint)
        const Complex lam = alpha / beta;
        if (std::abs(lam) < 1e-7) {
            rep.structural.push_back(lam);
            continue;
        }
        rep.eigenvalues.push_back(lam);
        rep.max_real = std::max(rep.max_real, lam.real());
    }
    if (degenerate > 2)
        throw std::runtime_error(
            "pencil_eigenvalues: singular pencil (algebraic loop in the interconnection)");
    rep.stable = rep.max_real < 0.0;
    return rep;
}

inline EigenReport closed_loop_eigs(const std::vector<PlacedDevice>& devices,
                                    const NetworkModel& net) {
    return pencil_eigenvalues(assemble_closed_loop(devices, net));
}

/// Free modes of the equivalent network seen from open-circuited leading
/// device nodes: the absorbed devices stay connected on their (trailing)
/// nodes, nothing is attached to the first `open_nodes` device nodes. No
/// right-half-plane mode here means the inverse equivalent network is stable.
inline EigenReport equivalent_network_modes(const std::vector<PlacedDevice>& absorbed,
                                            const NetworkModel& net) {
    return pencil_eigenvalues(assemble_closed_loop(absorbed, net));
}

// -----------------------------------------------------------------------------
// Generalized Nyquist winding
// -----------------------------------------------------------------------------

/// Loop gain L(s) = (S x I2) e^{J th} Yc^N(s) e^{-J th} Ygrid^-1(s) of the
/// device/network interconnection.
inline std::function<MatXc(Complex)> loop_gain(const std::vector<PlacedDevice>& devices,
                                               const GridResponse& ygrid) {
    const int n = ygrid.pair_count;
    std::vector<PlacedDevice> devs = devices;
    return [devs, ygrid, n](Complex s) -> MatXc {
        MatXc yc = MatXc::Zero(2 * n, 2 * n);
        for (const auto& pd : devs)
            yc.block<2, 2>(2 * (pd.node - 1), 2 * (pd.node - 1)) += pd.device.global(s);
        const GridSample g = ygrid(s);
        return yc * g.value.partialPivLu().solve(MatXc::Identity(2 * n, 2 * n));
    };
}

/// Winding count of det(I + L(jw)) around the origin for w in (-inf, inf),
/// using conjugate symmetry. The argument is accumulated over an adaptive
/// grid; a jump above pi/2 between neighbours is bisected down to a budget.
inline int nyquist_winding(const std::function<MatXc(Complex)>& loop, const VecXd& omega_grid,
                           int densify_budget = 200000) {
    if (omega_grid.size() < 2) throw std::invalid_argument("nyquist_winding: need a grid");
    auto det_at = [&](double w) {
        const MatXc l = loop(Complex(0.0, w));
        const Complex d = (MatXc::Identity(l.rows(), l.cols()) + l).determinant();
        if (std::abs(d) == 0.0)
            throw std::runtime_error("nyquist_winding: det(I+L) vanishes on the grid");
        return d;
    };

    double acc = 0.0;
    Complex prev = det_at(omega_grid(0));
    const double phi0 = std::arg(prev);
    int used = 0;
    for (Eigen::Index k = 1; k < omega_grid.size(); ++k) {
        // local stack of pending segments
        std::vector<std::pair<double, Complex>> stack;
        double w0 = omega_grid(k - 1);
        double w1 = omega_grid(k);
        Complex d1 = det_at(w1);
        stack.push_back({w1, d1});
        while (!stack.empty()) {
            auto [wt, dt] = stack.back();
            const double jump = std::arg(dt / prev);
            if (std::abs(jump) < kPi / 2.0 || used >= densify_budget) {
                if (std::abs(jump) >= kPi / 2.0)
                    throw std::runtime_error(
                        "nyquist_winding: argument jump above pi/2 persists after densification "
                        "near omega = " + std::to_string(wt));
                acc += jump;
                prev = dt;
                w0 = wt;
                stack.pop_back();
            } else {
                const double wm = 0.5 * (w0 + wt);
                if (wm <= w0 || wm >= wt)
                    throw std::runtime_error("nyquist_winding: cannot densify further");
                stack.push_back({wm, det_at(wm)});
                ++used;
            }
        }
    }
    // Continuous phase at the top frequency, measured from the w=0 branch
    // anchor (0 or pi); total winding over the full axis is phi_top / pi.
    const double phi_top = phi0 + acc;
    return static_cast<int>(std::lround(phi_top / kPi));
}

// -----------------------------------------------------------------------------
// Characteristic-polynomial identity for the equivalent-subsystem split
// -----------------------------------------------------------------------------

/// Evaluates both sides of the determinant chain
///   det(Yc Ygrid^-1 + I)
///     = det(Yc{2} + Yg4) det(Yc{1} Ygridc^-1 + I) det(Ygridc) det(Ygrid^-1)
/// at the given complex samples; returns the worst relative residual. The
/// trailing `absorbed_count` devices (by node) form Yc{2}.
inline double charpoly_identity(const std::vector<PlacedDevice>& devices, const NetworkModel& net,
                                int absorbed_count, const std::vector<Complex>& s_samples) {
    net.validate();
    const int n = net.device_nodes;
    if (absorbed_count < 0 || absorbed_count > n)
        throw std::invalid_argument("charpoly_identity: bad absorbed count");

    std::vector<DeviceAdmittance> absorbed;
    for (const auto& pd : devices)
        if (pd.node > n - absorbed_count) absorbed.push_back(pd.device);

    GridResponse ygrid = grid_response(net);
    GridResponse ygridc = equivalent_network(ygrid, absorbed);

    double worst = 0.0;
    for (const Complex s : s_samples) {
        const MatXc yg = ygrid(s).value;
        MatXc yc = MatXc::Zero(2 * n, 2 * n);
        for (const auto& pd : devices)
            yc.block<2, 2>(2 * (pd.node - 1), 2 * (pd.node - 1)) += pd.device.global(s);

        const Complex lhs =
            (yc * yg.inverse() + MatXc::Identity(2 * n, 2 * n)).determinant();

        const int keep2 = 2 * (n - absorbed_count);
        const MatXc yc1 = yc.topLeftCorner(keep2, keep2);
        const MatXc yc2 = yc.bottomRightCorner(2 * absorbed_count, 2 * absorbed_count);
        const MatXc yg4 = yg.bottomRightCorner(2 * absorbed_count, 2 * absorbed_count);
        const MatXc ygc = ygridc(s).value;

        const Complex rhs =
            (yc2 + yg4).determinant() *
            (yc1 * ygc.inverse() + MatXc::Identity(keep2, keep2)).determinant() *
            ygc.determinant() / yg.determinant();

        const double rel =
            std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace gainphase
