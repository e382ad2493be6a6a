#pragma once

// =============================================================================
// gainphase - small-signal device admittance models
// =============================================================================
// Builds 2x2 admittance frequency responses Y(s) for grid-following (GFL)
// converters, grid-forming (GFM) converters, and synchronous generators from
// parametric control-block models via numerical linearization, plus tabulated
// black-box responses. All device models are in local per-unit in the device's
// local dq frame; inputs are terminal voltages (Ud, Uq) and outputs are
// negated terminal currents (-Id, -Iq), so Y maps voltage to current absorbed.
// =============================================================================

#include "gainphase/statespace.hpp"
#include "gainphase/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gainphase {

enum class DeviceClass { Gfl, Gfm, Sg, Tabulated };

inline const char* to_string(DeviceClass c) {
    switch (c) {
        case DeviceClass::Gfl: return "gfl";
        case DeviceClass::Gfm: return "gfm";
        case DeviceClass::Sg: return "sg";
        default: return "tabulated";
    }
}

/// A 2x2 frequency response evaluated at complex s (s = j*omega on the axis).
using Response2x2 = std::function<Mat2c(Complex)>;

// -----------------------------------------------------------------------------
// Parameter sets (per-unit on the device base unless noted)
// -----------------------------------------------------------------------------

enum class PllVariant { Basic, NormalizedFf };

struct GflParams {
    double filter_l = 0.05;       ///< converter-side inductance L_F
    double filter_c = 0.06;       ///< filter capacitance C_F
    double grid_l = 0.15;         ///< grid-side inductance L_g (incl. transformer)
    double current_kp = 0.3;
    double current_ki = 10.0;
    double vff_time = 0.02;       ///< voltage feed-forward time constant, s
    double power_kp = 0.5;
    double power_ki = 40.0;
    double pll_bw = 40.0;         ///< rad/s
    PllVariant pll_variant = PllVariant::Basic;

    void validate() const {
        if (filter_l <= 0 || filter_c <= 0 || grid_l <= 0)
            throw std::invalid_argument("GflParams: filter elements must be positive");
        if (pll_bw <= 0) throw std::invalid_argument("GflParams: pll_bw must be positive");
        if (vff_time <= 0) throw std::invalid_argument("GflParams: vff_time must be positive");
    }
};

struct GfmParams {
    double filter_l = 0.05;
    double filter_c = 0.06;
    double grid_l = 0.15;
    double current_kp = 0.3;
    double current_ki = 10.0;
    double vff_time = 0.02;
    double voltage_kp = 2.0;      ///< AC-voltage loop PI
    double voltage_ki = 10.0;
    double inertia = 2.0;         ///< J_v, swing-equation inertia
    double damping = 50.0;        ///< D_v

    void validate() const {
        if (filter_l <= 0 || filter_c <= 0 || grid_l <= 0)
            throw std::invalid_argument("GfmParams: filter elements must be positive");
        if (inertia <= 0 || damping <= 0)
            throw std::invalid_argument("GfmParams: inertia and damping must be positive");
        if (vff_time <= 0) throw std::invalid_argument("GfmParams: vff_time must be positive");
    }
};

struct SgParams {
    double inertia = 10.39;  ///< J_SG
    double xd = 1.81, xq = 1.76;
    double xd1 = 0.30, xq1 = 0.65;    ///< transient reactances X'_d, X'_q
    double xd2 = 0.23, xq2 = 0.25;    ///< subtransient reactances X''_d, X''_q
    double td1 = 8.0, tq1 = 1.0;      ///< open-circuit transient time constants, s
    double td2 = 0.03, tq2 = 0.07;    ///< open-circuit subtransient time constants, s

    // IEEEG1 governor
    double gov_droop = 8.0;  ///< K_droop: speed-path gain (0 disables the governor)
    double gov_t1 = 0.5, gov_t2 = 1.0, gov_t3 = 0.6, gov_t4 = 0.6;
    double gov_t5 = 0.5, gov_t6 = 0.8, gov_t7 = 1.0;
    double gov_k = 5.0;
    double gov_k1 = 0.3, gov_k3 = 0.25, gov_k5 = 0.3, gov_k7 = 0.15;

    // IEEET1 fast exciter
    double exc_ka = 15.0, exc_ta = 0.05;
    double exc_kf = 0.0057, exc_tf = 0.5, exc_tr = 0.1;

    void validate() const {
        for (double t : {td1, tq1, td2, tq2, gov_t1, gov_t2, gov_t3, gov_t4, gov_t5, gov_t6,
                         gov_t7, exc_ta, exc_tf, exc_tr})
            if (t <= 0) throw std::invalid_argument("SgParams: time constants must be positive");
        if (inertia <= 0) throw std::invalid_argument("SgParams: inertia must be positive");
    }
};

// -----------------------------------------------------------------------------
// Device admittance handle
// -----------------------------------------------------------------------------

/// A device's local per-unit admittance response plus the data needed to place
/// it in the network: capacity ratio S_i and steady-state frame angle theta_i.
struct DeviceAdmittance {
    std::string id;
    DeviceClass klass = DeviceClass::Tabulated;
    double capacity_ratio = 1.0;  ///< S_i > 0
    double steady_angle = 0.0;    ///< theta_i, radians
    Response2x2 response;         ///< local Y_C,i(s)
    std::optional<StateSpace> realization;  ///< local-frame state space, when model-built
    bool open_loop_stable = true;           ///< config-asserted for tabulated devices

    Mat2c local(Complex s) const { return response(s); }

    /// Device block as seen by the network: S_i e^{J theta} Y(s) e^{-J theta}.
    Mat2c global(Complex s) const {
        const Mat2d r = rotation(steady_angle);
        return capacity_ratio * (r * response(s) * r.transpose()).eval();
    }
};

/// Global-frame, capacity-scaled response of a device. Singular values are
/// unchanged by the similarity rotation.
inline Response2x2 rotate_to_global(const DeviceAdmittance& dev) {
    return [dev](Complex s) { return dev.global(s); };
}

/// Re-scaled converter dynamics: weight * Y(s) * inverse line factor with the
/// chosen R/X ratio. The inverse factor is polynomial in s, so the result is
/// finite everywhere (it is singular, not infinite, at s = +-j*omega0 when
/// eps_tilde = 0).
inline Response2x2 rescale_device(const DeviceAdmittance& dev, double weight, double eps_tilde,
                                  double omega0) {
    if (weight <= 0.0) throw std::invalid_argument("rescale_device: weight must be positive");
    return [dev, weight, eps_tilde, omega0](Complex s) {
        return (weight * dev.response(s) * unit_rl_impedance(s, eps_tilde, omega0)).eval();
    };
}

// -----------------------------------------------------------------------------
// Nonlinear device ODEs
// -----------------------------------------------------------------------------
// State layouts are fixed; all controller frames rotate with the device's own
// synchronization angle delta (PLL for GFL, swing for GFM, rotor for SG).

namespace dev {

/// The PLL bandwidth parameter is the closed-loop -3 dB bandwidth of the
/// standard SRF-PLL with damping 1/sqrt(2); with the loop zero included that
/// point sits at sqrt(2 + sqrt(5)) times the natural frequency.
inline constexpr double kPllBwOverWn = 2.0582392214208985;

/// GFL converter: LC filter + grid inductance, SRF-PLL (2nd order, damping
/// 1/sqrt(2)) on the filter-bus voltage, power PI on terminal power cascaded
/// onto current references, current PI in the PLL frame with synchronous
/// decoupling, first-order voltage feed-forward. Refs: (P_ref, Q_ref).
struct GflOde {
    GflParams p;
    OperatingPoint op;
    double kp_pll, ki_pll;

    GflOde(const GflParams& params, const OperatingPoint& o) : p(params), op(o) {
        p.validate();
        o.validate();
        const double zeta = 1.0 / std::sqrt(2.0);
        const double wn = p.pll_bw / kPllBwOverWn;
        kp_pll = 2.0 * zeta * wn / op.voltage;
        ki_pll = wn * wn / op.voltage;
    }

    enum : int { kIc = 0, kVc = 2, kIg = 4, kDelta = 6, kXi = 7, kZi = 8, kZp = 10, kZq = 11,
                 kVff = 12 };
    int state_count() const { return 14; }
    int ref_count() const { return 2; }

    VecXd deriv(const VecXd& x, const Vec2& u, const VecXd& r) const {
        const Mat2d jrot = rotation_generator();
        const Vec2 ic = x.segment<2>(kIc), vc = x.segment<2>(kVc), ig = x.segment<2>(kIg);
        const double delta = x(kDelta), xi = x(kXi);
        const Vec2 zi = x.segment<2>(kZi), vff = x.segment<2>(kVff);
        const double zp = x(kZp), zq = x(kZq);
        const double p_ref = r(0), q_ref = r(1);

        const Mat2d to_pll = rotation(-delta);
        const Vec2 vc_p = to_pll * vc;
        const Vec2 ic_p = to_pll * ic;

        double e_pll = vc_p(1);
        if (p.pll_variant == PllVariant::NormalizedFf) e_pll /= std::max(vc_p.norm(), 0.1);

        // Power measured at the device terminal with the grid-side current.
        const double pe = u.dot(ig);
        const double qe = u(1) * ig(0) - u(0) * ig(1);

        const Vec2 i_ref(p.power_kp * (p_ref - pe) + zp, -(p.power_kp * (q_ref - qe) + zq));
        const Vec2 e_i = i_ref - ic_p;
        const Vec2 vi_p = p.current_kp * e_i + zi + vff + p.filter_l * (jrot * ic_p);
        const Vec2 vi = rotation(delta) * vi_p;

        VecXd dx(14);
        dx.segment<2>(kIc) = (op.omega0 / p.filter_l) * (vi - vc - p.filter_l * (jrot * ic));
        dx.segment<2>(kVc) = (op.omega0 / p.filter_c) * (ic - ig - p.filter_c * (jrot * vc));
        dx.segment<2>(kIg) = (op.omega0 / p.grid_l) * (vc - u - p.grid_l * (jrot * ig));
        dx(kDelta) = kp_pll * e_pll + xi;
        dx(kXi) = ki_pll * e_pll;
        dx.segment<2>(kZi) = p.current_ki * e_i;
        dx(kZp) = p.power_ki * (p_ref - pe);
        dx(kZq) = p.power_ki * (q_ref - qe);
        dx.segment<2>(kVff) = (vc_p - vff) / p.vff_time;
        return dx;
    }

    Vec2 output(const VecXd& x, const Vec2&, const VecXd&) const {
        return {-x(kIg), -x(kIg + 1)};
    }

    Equilibrium guess() const {
        const Mat2d jrot = rotation_generator();
        const Vec2 u0(op.voltage, 0.0);
        const Vec2 ig0(op.active / op.voltage, -op.reactive / op.voltage);
        const Vec2 vc0 = u0 + p.grid_l * (jrot * ig0);
        const Vec2 ic0 = ig0 + p.filter_c * (jrot * vc0);
        const double delta0 = std::atan2(vc0(1), vc0(0));
        const Mat2d to_pll = rotation(-delta0);
        const Vec2 ic_p0 = to_pll * ic0;
        const Vec2 vff0 = to_pll * vc0;
        const Vec2 vi0 = vc0 + p.filter_l * (jrot * ic0);
        const Vec2 zi0 = to_pll * vi0 - vff0 - p.filter_l * (jrot * ic_p0);

        VecXd x0 = VecXd::Zero(14);
        x0.segment<2>(kIc) = ic0;
        x0.segment<2>(kVc) = vc0;
        x0.segment<2>(kIg) = ig0;
        x0(kDelta) = delta0;
        x0.segment<2>(kZi) = zi0;
        x0(kZp) = ic_p0(0);
        x0(kZq) = -ic_p0(1);
        x0.segment<2>(kVff) = vff0;

        VecXd r0(2);
        r0 << u0.dot(ig0), u0(1) * ig0(0) - u0(0) * ig0(1);
        return {x0, r0};
    }
};

/// GFM converter: same filter and current loop as the GFL, synchronized by an
/// emulated swing equation and wrapped by an AC-voltage PI with output-current
/// feed-forward. Refs: (P_ref, V_ref).
struct GfmOde {
    GfmParams p;
    OperatingPoint op;

    GfmOde(const GfmParams& params, const OperatingPoint& o) : p(params), op(o) {
        p.validate();
        o.validate();
    }

    enum : int { kIc = 0, kVc = 2, kIg = 4, kDelta = 6, kDomega = 7, kZv = 8, kZi = 10,
                 kVff = 12 };
    int state_count() const { return 14; }
    int ref_count() const { return 2; }

    VecXd deriv(const VecXd& x, const Vec2& u, const VecXd& r) const {
        const Mat2d jrot = rotation_generator();
        const Vec2 ic = x.segment<2>(kIc), vc = x.segment<2>(kVc), ig = x.segment<2>(kIg);
        const double delta = x(kDelta), domega = x(kDomega);
        const Vec2 zv = x.segment<2>(kZv), zi = x.segment<2>(kZi), vff = x.segment<2>(kVff);
        const double p_ref = r(0), v_ref = r(1);

        const Mat2d to_gfm = rotation(-delta);
        const Vec2 vc_g = to_gfm * vc;
        const Vec2 ic_g = to_gfm * ic;
        const Vec2 ig_g = to_gfm * ig;

        const double pe = u.dot(ig);

        const Vec2 e_v = Vec2(v_ref, 0.0) - vc_g;
        const Vec2 i_ref = p.voltage_kp * e_v + zv + ig_g;
        const Vec2 e_i = i_ref - ic_g;
        const Vec2 vi_g = p.current_kp * e_i + zi + vff + p.filter_l * (jrot * ic_g);
        const Vec2 vi = rotation(delta) * vi_g;

        VecXd dx(14);
        dx.segment<2>(kIc) = (op.omega0 / p.filter_l) * (vi - vc - p.filter_l * (jrot * ic));
        dx.segment<2>(kVc) = (op.omega0 / p.filter_c) * (ic - ig - p.filter_c * (jrot * vc));
        dx.segment<2>(kIg) = (op.omega0 / p.grid_l) * (vc - u - p.grid_l * (jrot * ig));
        dx(kDelta) = op.omega0 * domega;
        dx(kDomega) = (p_ref - pe - p.damping * domega) / p.inertia;
        dx.segment<2>(kZv) = p.voltage_ki * e_v;
        dx.segment<2>(kZi) = p.current_ki * e_i;
        dx.segment<2>(kVff) = (vc_g - vff) / p.vff_time;
        return dx;
    }

    Vec2 output(const VecXd& x, const Vec2&, const VecXd&) const {
        return {-x(kIg), -x(kIg + 1)};
    }

    Equilibrium guess() const {
        const Mat2d jrot = rotation_generator();
        const Vec2 u0(op.voltage, 0.0);
        const Vec2 ig0(op.active / op.voltage, -op.reactive / op.voltage);
        const Vec2 vc0 = u0 + p.grid_l * (jrot * ig0);
        const Vec2 ic0 = ig0 + p.filter_c * (jrot * vc0);
        const double delta0 = std::atan2(vc0(1), vc0(0));
        const Mat2d to_gfm = rotation(-delta0);
        const Vec2 ic_g0 = to_gfm * ic0;
        const Vec2 vff0 = to_gfm * vc0;
        const Vec2 vi0 = vc0 + p.filter_l * (jrot * ic0);

        VecXd x0 = VecXd::Zero(14);
        x0.segment<2>(kIc) = ic0;
        x0.segment<2>(kVc) = vc0;
        x0.segment<2>(kIg) = ig0;
        x0(kDelta) = delta0;
        x0.segment<2>(kZv) = ic_g0 - to_gfm * ig0;
        x0.segment<2>(kZi) = to_gfm * vi0 - vff0 - p.filter_l * (jrot * ic_g0);
        x0.segment<2>(kVff) = vff0;

        VecXd r0(2);
        r0 << u0.dot(ig0), vc0.norm();
        return {x0, r0};
    }
};

/// Synchronous generator: 6th-order machine (algebraic stator, chained
/// transient/subtransient EMFs on both axes) with an IEEEG1 governor/turbine
/// and an IEEET1 fast exciter. Refs: (P_mref, V_ref).
struct SgOde {
    SgParams p;
    OperatingPoint op;

    SgOde(const SgParams& params, const OperatingPoint& o) : p(params), op(o) {
        p.validate();
        o.validate();
    }

    enum : int { kDelta = 0, kDomega = 1, kEq1 = 2, kEq2 = 3, kEd1 = 4, kEd2 = 5,
                 kGovLl = 6, kGovPgv = 7, kGovQ4 = 8, kGovQ5 = 9, kGovQ6 = 10, kGovQ7 = 11,
                 kExcVm = 12, kExcEfd = 13, kExcXf = 14 };
    int state_count() const { return 15; }
    int ref_count() const { return 2; }

    /// Stator currents in the rotor frame from the subtransient EMFs.
    Vec2 rotor_current(const VecXd& x, const Vec2& u) const {
        const Mat2d to_rotor = rotation(-x(kDelta));
        const Vec2 vm = to_rotor * u;
        const double id = (x(kEq2) - vm(1)) / p.xd2;
        const double iq = (vm(0) - x(kEd2)) / p.xq2;
        return {id, iq};
    }

    VecXd deriv(const VecXd& x, const Vec2& u, const VecXd& r) const {
        const double p_ref = r(0), v_ref = r(1);
        const Mat2d to_rotor = rotation(-x(kDelta));
        const Vec2 vm = to_rotor * u;
        const Vec2 im = rotor_current(x, u);
        const double pe = vm.dot(im);

        const double pm = p.gov_k1 * x(kGovQ4) + p.gov_k3 * x(kGovQ5) + p.gov_k5 * x(kGovQ6) +
                          p.gov_k7 * x(kGovQ7);

        // Lead-lag (1 + s T2)/(1 + s T1) on the speed-error path.
        const double gov_in = -p.gov_droop * p.gov_k * x(kDomega);
        const double gov_ll_out = x(kGovLl) + (p.gov_t2 / p.gov_t1) * (gov_in - x(kGovLl));

        // Washout K_f s/(1 + s T_f) stabilizing feedback on E_fd.
        const double vfb = (p.exc_kf / p.exc_tf) * (x(kExcEfd) - x(kExcXf));

        VecXd dx(15);
        dx(kDelta) = op.omega0 * x(kDomega);
        dx(kDomega) = (pm - pe) / p.inertia;
        dx(kEq1) = (x(kExcEfd) - x(kEq1) - (p.xd - p.xd1) * im(0)) / p.td1;
        dx(kEq2) = (x(kEq1) - x(kEq2) - (p.xd1 - p.xd2) * im(0)) / p.td2;
        dx(kEd1) = (-x(kEd1) + (p.xq - p.xq1) * im(1)) / p.tq1;
        dx(kEd2) = (x(kEd1) - x(kEd2) + (p.xq1 - p.xq2) * im(1)) / p.tq2;
        dx(kGovLl) = (gov_in - x(kGovLl)) / p.gov_t1;
        dx(kGovPgv) = (p_ref + gov_ll_out - x(kGovPgv)) / p.gov_t3;
        dx(kGovQ4) = (x(kGovPgv) - x(kGovQ4)) / p.gov_t4;
        dx(kGovQ5) = (x(kGovQ4) - x(kGovQ5)) / p.gov_t5;
        dx(kGovQ6) = (x(kGovQ5) - x(kGovQ6)) / p.gov_t6;
        dx(kGovQ7) = (x(kGovQ6) - x(kGovQ7)) / p.gov_t7;
        dx(kExcVm) = (u.norm() - x(kExcVm)) / p.exc_tr;
        dx(kExcEfd) = (p.exc_ka * (v_ref - x(kExcVm) - vfb) - x(kExcEfd)) / p.exc_ta;
        dx(kExcXf) = (x(kExcEfd) - x(kExcXf)) / p.exc_tf;
        return dx;
    }

    Vec2 output(const VecXd& x, const Vec2& u, const VecXd&) const {
        const Vec2 im = rotor_current(x, u);
        const Vec2 i_local = rotation(x(kDelta)) * im;
        return -i_local;
    }

    Equilibrium guess() const {
        const Complex u0(op.voltage, 0.0);
        const Complex i0 = Complex(op.active, -op.reactive) / op.voltage;
        const Complex eq_locator = u0 + Complex(0.0, p.xq) * i0;
        const double delta0 = std::arg(eq_locator) - kPi / 2.0;

        const Mat2d to_rotor = rotation(-delta0);
        const Vec2 vm = to_rotor * Vec2(u0.real(), u0.imag());
        const Vec2 im = to_rotor * Vec2(i0.real(), i0.imag());

        const double eq2 = vm(1) + p.xd2 * im(0);
        const double ed2 = vm(0) - p.xq2 * im(1);
        const double eq1 = eq2 + (p.xd1 - p.xd2) * im(0);
        const double ed1 = ed2 - (p.xq1 - p.xq2) * im(1);
        const double efd = eq1 + (p.xd - p.xd1) * im(0);
        const double pe = vm.dot(im);

        VecXd x0 = VecXd::Zero(15);
        x0(kDelta) = delta0;
        x0(kEq1) = eq1;
        x0(kEq2) = eq2;
        x0(kEd1) = ed1;
        x0(kEd2) = ed2;
        x0(kGovPgv) = pe;
        x0(kGovQ4) = pe;
        x0(kGovQ5) = pe;
        x0(kGovQ6) = pe;
        x0(kGovQ7) = pe;
        x0(kExcVm) = op.voltage;
        x0(kExcEfd) = efd;
        x0(kExcXf) = efd;

        VecXd r0(2);
        r0 << pe, op.voltage + efd / p.exc_ka;
        return {x0, r0};
    }
};

}  // namespace dev

// -----------------------------------------------------------------------------
// Builders
// -----------------------------------------------------------------------------

namespace detail {

template <DeviceOde M>
DeviceAdmittance build_device(const M& model, const OperatingPoint& op, DeviceClass klass,
                              double capacity_ratio, std::string id) {
    if (capacity_ratio <= 0.0)
        throw std::invalid_argument("device capacity ratio S_i must be positive");
    const Equilibrium guess = model.guess();
    const Equilibrium eq = solve_device_equilibrium(model, op, guess.state, guess.refs);
    const StateSpace ss = linearize(model, op, eq);

    DeviceAdmittance dev;
    dev.id = std::move(id);
    dev.klass = klass;
    dev.capacity_ratio = capacity_ratio;
    dev.steady_angle = op.theta;
    dev.realization = ss;
    dev.open_loop_stable = ss.stable();
    dev.response = [ss](Complex s) { return Mat2c(ss.response(s)); };
    return dev;
}

}  // namespace detail

inline DeviceAdmittance gfl_admittance(const GflParams& p, const OperatingPoint& op,
                                       double capacity_ratio = 1.0, std::string id = "gfl") {
    return detail::build_device(dev::GflOde(p, op), op, DeviceClass::Gfl, capacity_ratio,
                                std::move(id));
}

inline DeviceAdmittance gfm_admittance(const GfmParams& p, const OperatingPoint& op,
                                       double capacity_ratio = 1.0, std::string id = "gfm") {
    return detail::build_device(dev::GfmOde(p, op), op, DeviceClass::Gfm, capacity_ratio,
                                std::move(id));
}

inline DeviceAdmittance sg_admittance(const SgParams& p, const OperatingPoint& op,
                                      double capacity_ratio = 1.0, std::string id = "sg") {
    return detail::build_device(dev::SgOde(p, op), op, DeviceClass::Sg, capacity_ratio,
                                std::move(id));
}

// -----------------------------------------------------------------------------
// Tabulated responses
// -----------------------------------------------------------------------------

/// One measured/imported sample: angular frequency (rad/s, >= 0) and the 2x2
/// local admittance at +j*omega.
struct TabulatedSample {
    double omega;
    Mat2c value;
};

/// Black-box device from samples on the positive imaginary axis. Entries are
/// interpolated linearly in log-frequency; queries outside the tabulated range
/// throw. Negative-frequency queries use the realness symmetry
/// Y(-j w) = conj(Y(j w)).
inline DeviceAdmittance load_tabulated(std::vector<TabulatedSample> samples,
                                       double capacity_ratio = 1.0, double steady_angle = 0.0,
                                       std::string id = "tabulated",
                                       bool open_loop_stable = true) {
    if (samples.size() < 2)
        throw std::invalid_argument("load_tabulated: need at least 2 samples");
    for (std::size_t k = 0; k + 1 < samples.size(); ++k)
        if (!(samples[k].omega < samples[k + 1].omega))
            throw std::invalid_argument("load_tabulated: frequencies must be strictly increasing");
    if (samples.front().omega <= 0.0)
        throw std::invalid_argument("load_tabulated: frequencies must be positive");
    for (const auto& s : samples)
        if (!s.value.allFinite()) throw std::invalid_argument("load_tabulated: non-finite sample");

    auto table = std::make_shared<const std::vector<TabulatedSample>>(std::move(samples));

    DeviceAdmittance dev;
    dev.id = std::move(id);
    dev.klass = DeviceClass::Tabulated;
    dev.capacity_ratio = capacity_ratio;
    dev.steady_angle = steady_angle;
    dev.open_loop_stable = open_loop_stable;
    dev.response = [table](Complex s) -> Mat2c {
        if (std::abs(s.real()) > 1e-9 * std::max(1.0, std::abs(s)))
            throw std::out_of_range("tabulated response: defined on the imaginary axis only");
        const double w = std::abs(s.imag());
        const auto& t = *table;
        if (w < t.front().omega * (1.0 - 1e-12) || w > t.back().omega * (1.0 + 1e-12))
            throw std::out_of_range("tabulated response: query outside tabulated range");
        const double wq = std::clamp(w, t.front().omega, t.back().omega);
        auto hi = std::lower_bound(t.begin(), t.end(), wq, [](const TabulatedSample& a, double b) {
            return a.omega < b;
        });
        Mat2c y;
        if (hi == t.begin()) {
            y = hi->value;
        } else {
            auto lo = hi - 1;
            if (hi == t.end()) {
                y = lo->value;
            } else {
                const double f =
                    (std::log(wq) - std::log(lo->omega)) / (std::log(hi->omega) - std::log(lo->omega));
                y = (1.0 - f) * lo->value + f * hi->value;
            }
        }
        if (s.imag() < 0.0) return y.conjugate();
        return y;
    };
    return dev;
}

}  // namespace gainphase
