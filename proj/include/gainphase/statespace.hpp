#pragma once

// =============================================================================
// gainphase - state-space plumbing for device models
// =============================================================================
// Devices are written as nonlinear ODEs dx/dt = f(x, u, refs) with terminal
// voltage input u = (Ud, Uq) and output y = (-Id, -Iq), both in the device's
// local dq frame. The equilibrium is found by damped Newton; two free
// references per device (power/voltage set-points) are solved alongside the
// states so that the terminal operating point (P0, Q0) is met exactly.
// Linearization uses central differences.
// =============================================================================

#include "gainphase/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <concepts>
#include <functional>
#include <string>
#include <utility>

namespace gainphase {

using Vec2 = Eigen::Vector2d;

/// Steady-state operating point of a device terminal, in per-unit on the
/// device base. theta is the steady-state angle of the device's local dq
/// frame relative to the global frame.
struct OperatingPoint {
    double voltage = 1.0;     ///< V0, terminal voltage magnitude
    double theta = 0.0;       ///< radians vs global dq frame
    double active = 1.0;      ///< P0 delivered at the terminal
    double reactive = 0.0;    ///< Q0 delivered at the terminal
    double omega0 = 2.0 * kPi * 50.0;  ///< nominal frequency, rad/s

    void validate() const {
        if (voltage <= 0.0) throw std::invalid_argument("OperatingPoint: V0 must be positive");
        if (omega0 <= 0.0) throw std::invalid_argument("OperatingPoint: omega0 must be positive");
    }
};

/// Linear time-invariant quadruple. Inputs (Ud, Uq), outputs (-Id, -Iq).
struct StateSpace {
    MatXd a, b, c, d;

    int order() const { return static_cast<int>(a.rows()); }

    /// Transfer matrix C (sI - A)^-1 B + D at a complex frequency.
    MatXc response(Complex s) const {
        const int n = order();
        if (n == 0) return d.cast<Complex>();
        MatXc m = -a.cast<Complex>();
        m.diagonal().array() += s;
        Eigen::PartialPivLU<MatXc> lu(m);
        MatXc y = c.cast<Complex>() * lu.solve(b.cast<Complex>()) + d.cast<Complex>();
        if (!y.allFinite())
            throw std::runtime_error("StateSpace::response: singular (sI - A) at this sample");
        return y;
    }

    VecXc eigenvalues() const {
        Eigen::EigenSolver<MatXd> es(a, /*computeEigenvectors=*/false);
        return es.eigenvalues();
    }

    bool stable(double margin = 0.0) const {
        const VecXc eigs = eigenvalues();
        for (Eigen::Index i = 0; i < eigs.size(); ++i)
            if (eigs(i).real() >= -margin) return false;
        return true;
    }
};

/// Requirements on a nonlinear device description used by the equilibrium
/// solver and the linearizer. `refs` are free set-points (0 or 2 of them).
template <typename M>
concept DeviceOde = requires(const M& m, const VecXd& x, const Vec2& u, const VecXd& r) {
    { m.state_count() } -> std::convertible_to<int>;
    { m.ref_count() } -> std::convertible_to<int>;
    { m.deriv(x, u, r) } -> std::convertible_to<VecXd>;
    { m.output(x, u, r) } -> std::convertible_to<Vec2>;
};

namespace detail {

/// Central-difference Jacobian with per-component step 1e-6 * max(1, |z_k|).
inline MatXd numeric_jacobian(const std::function<VecXd(const VecXd&)>& f, const VecXd& z) {
    const VecXd f0 = f(z);
    MatXd jac(f0.size(), z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(z(k)));
        VecXd zp = z, zm = z;
        zp(k) += h;
        zm(k) -= h;
        jac.col(k) = (f(zp) - f(zm)) / (2.0 * h);
    }
    return jac;
}

}  // namespace detail

/// Damped Newton on F(z) = 0. Throws after `max_iter` iterations without
/// reaching the tolerance.
inline VecXd damped_newton(const std::function<VecXd(const VecXd&)>& f, VecXd z,
                           int max_iter = 50, double tol = 1e-10) {
    double res = f(z).lpNorm<Eigen::Infinity>();
    for (int it = 0; it < max_iter; ++it) {
        if (res < tol) return z;
        const MatXd jac = detail::numeric_jacobian(f, z);
        Eigen::PartialPivLU<MatXd> lu(jac);
        const VecXd step = lu.solve(f(z));
        if (!step.allFinite())
            throw std::runtime_error("damped_newton: singular Jacobian");
        double lambda = 1.0;
        while (lambda > 1e-7) {
            const VecXd cand = z - lambda * step;
            const double cand_res = f(cand).lpNorm<Eigen::Infinity>();
            if (cand_res < res) {
                z = cand;
                res = cand_res;
                break;
            }
            lambda *= 0.5;
        }
        if (lambda <= 1e-7)
            throw std::runtime_error("damped_newton: line search stalled, residual " +
                                     std::to_string(res));
    }
    if (res < tol) return z;
    throw std::runtime_error("damped_newton: no convergence after " + std::to_string(max_iter) +
                             " iterations, residual " + std::to_string(res));
}

/// Active/reactive power delivered at the terminal, from voltage u and device
/// output y = -I (current out of the device is -y).
inline Vec2 terminal_power(const Vec2& u, const Vec2& y) {
    const Vec2 i_out = -y;
    return {u(0) * i_out(0) + u(1) * i_out(1), u(1) * i_out(0) - u(0) * i_out(1)};
}

struct Equilibrium {
    VecXd state;
    VecXd refs;
};

/// Solve for the device equilibrium at terminal voltage [V0, 0] in the local
/// frame. Devices with two references get their set-points adjusted so that
/// the terminal power equals (P0, Q0); devices without references are solved
/// for the states alone.
template <DeviceOde M>
Equilibrium solve_device_equilibrium(const M& model, const OperatingPoint& op, const VecXd& x_guess,
                                     const VecXd& ref_guess) {
    op.validate();
    const int nx = model.state_count();
    const int nr = model.ref_count();
    const Vec2 u0(op.voltage, 0.0);

    VecXd z0(nx + nr);
    z0.head(nx) = x_guess;
    if (nr > 0) z0.tail(nr) = ref_guess;

    auto residual = [&](const VecXd& z) {
        const VecXd x = z.head(nx);
        const VecXd r = nr > 0 ? VecXd(z.tail(nr)) : VecXd();
        VecXd out(nx + nr);
        out.head(nx) = model.deriv(x, u0, r);
        if (nr > 0) {
            const Vec2 pq = terminal_power(u0, model.output(x, u0, r));
            out(nx) = pq(0) - op.active;
            out(nx + 1) = pq(1) - op.reactive;
        }
        return out;
    };

    const VecXd z = damped_newton(residual, z0);
    Equilibrium eq;
    eq.state = z.head(nx);
    eq.refs = nr > 0 ? VecXd(z.tail(nr)) : VecXd();
    return eq;
}

/// Central-difference linearization around an equilibrium. Throws if the
/// point is not an equilibrium (residual above 1e-8).
template <DeviceOde M>
StateSpace linearize(const M& model, const OperatingPoint& op, const Equilibrium& eq) {
    const int nx = model.state_count();
    const Vec2 u0(op.voltage, 0.0);

    const double res = model.deriv(eq.state, u0, eq.refs).template lpNorm<Eigen::Infinity>();
    if (res > 1e-8)
        throw std::invalid_argument("linearize: operating point is not an equilibrium (residual " +
                                    std::to_string(res) + ")");

    auto fx = [&](const VecXd& x) { return model.deriv(x, u0, eq.refs); };
    auto fu = [&](const VecXd& u) { return model.deriv(eq.state, Vec2(u(0), u(1)), eq.refs); };
    auto gx = [&](const VecXd& x) { return VecXd(model.output(x, u0, eq.refs)); };
    auto gu = [&](const VecXd& u) {
        return VecXd(model.output(eq.state, Vec2(u(0), u(1)), eq.refs));
    };

    StateSpace ss;
    ss.a = detail::numeric_jacobian(fx, eq.state);
    ss.b = detail::numeric_jacobian(fu, VecXd(u0));
    ss.c = detail::numeric_jacobian(gx, eq.state);
    ss.d = detail::numeric_jacobian(gu, VecXd(u0));
    (void)nx;
    return ss;
}

}  // namespace gainphase
