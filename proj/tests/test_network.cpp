#include "gainphase/network.hpp"
#include "gainphase/matphase.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <random>

using namespace gainphase;

namespace {

constexpr double kW0 = 2.0 * kPi * 50.0;

Branch rl(int from, int to, double b, double eps = 0.0) { return {from, to, RlLine{b, eps}}; }

/// Direct-elimination oracle: solve the interior node voltages from KCL and
/// read the boundary currents, independent of the Schur-complement path.
MatXc eliminate_by_solving(const MatXc& y, int keep2) {
    const int el = static_cast<int>(y.rows()) - keep2;
    MatXc out(keep2, keep2);
    for (int col = 0; col < keep2; ++col) {
        VecXc u = VecXc::Zero(y.rows());
        u(col) = 1.0;
        // interior KCL: Y3 u_b + Y4 u_i = 0
        const VecXc ui = -y.bottomRightCorner(el, el).partialPivLu().solve(
            y.bottomLeftCorner(el, keep2) * u.head(keep2));
        VecXc full(y.rows());
        full.head(keep2) = u.head(keep2);
        full.tail(el) = ui;
        out.col(col) = (y * full).head(keep2);
    }
    return out;
}

}  // namespace

TEST_CASE("branch admittances at reference points") {
    const Branch line = rl(1, 2, 5.0, 0.0);
    const Mat2c y0 = branch_admittance(line, Complex(0.0, 0.0), kW0);
    Mat2c expect;
    expect << 0.0, 5.0, -5.0, 0.0;  // B * [[0,-1],[1,0]]^-1
    CHECK((y0 - expect).norm() < 1e-14);

    const Branch load{1, 3, ResistiveLoad{2.0}};
    for (double w : {0.0, 100.0, 5000.0}) {
        const Mat2c yl = branch_admittance(load, Complex(0.0, w), kW0);
        CHECK((yl - 0.5 * Mat2c::Identity()).norm() < 1e-14);
    }

    const double c = 0.003;
    const Branch shunt{2, 3, ShuntCapacitor{c}};
    const Mat2c ys = branch_admittance(shunt, Complex(0.0, 0.0), kW0);
    Mat2c es;
    es << 0.0, -kW0 * c, kW0 * c, 0.0;
    CHECK((ys - es).norm() < 1e-14);

    // exact series resonance of a lossless line is singular
    CHECK_THROWS_AS(branch_admittance(line, Complex(0.0, kW0), kW0), std::runtime_error);
}

TEST_CASE("grounded Laplacian assembly") {
    // single node, one RL branch to ground
    NetworkModel single{1, 1, {rl(1, 2, 4.0)}, kW0};
    const Complex s(0.0, 2.0 * kPi * 7.0);
    CHECK((grounded_laplacian(single, s) - branch_admittance(single.branches[0], s, kW0)).norm() <
          1e-14);

    // two nodes, one line, no ground: Laplacian block structure and nullspace
    NetworkModel floating{2, 2, {rl(1, 2, 3.0)}, kW0};
    const MatXc y = grounded_laplacian(floating, s);
    const Mat2c yb = branch_admittance(floating.branches[0], s, kW0);
    CHECK((y.block<2, 2>(0, 0) - yb).norm() < 1e-14);
    CHECK((y.block<2, 2>(0, 2) + yb).norm() < 1e-14);
    CHECK(std::abs(y.determinant()) < 1e-10);

    // block-row sums vanish without ground branches
    MatXc rowsum = y.leftCols(2) + y.rightCols(2);
    CHECK(rowsum.norm() < 1e-14);

    // 3-node chain vs hand assembly
    NetworkModel chain{3, 1, {rl(1, 2, 2.0, 0.1), rl(2, 3, 5.0, 0.1), rl(3, 4, 1.5, 0.1)}, kW0};
    const MatXc yc = grounded_laplacian(chain, s);
    const Mat2c y12 = branch_admittance(chain.branches[0], s, kW0);
    const Mat2c y23 = branch_admittance(chain.branches[1], s, kW0);
    const Mat2c y3g = branch_admittance(chain.branches[2], s, kW0);
    MatXc hand = MatXc::Zero(6, 6);
    hand.block<2, 2>(0, 0) = y12;
    hand.block<2, 2>(0, 2) = -y12;
    hand.block<2, 2>(2, 0) = -y12;
    hand.block<2, 2>(2, 2) = y12 + y23;
    hand.block<2, 2>(2, 4) = -y23;
    hand.block<2, 2>(4, 2) = -y23;
    hand.block<2, 2>(4, 4) = y23 + y3g;
    CHECK((yc - hand).norm() < 1e-14);
}

TEST_CASE("network validation rejects floating interiors and bad branches") {
    NetworkModel bad{3, 1, {rl(1, 2, 1.0)}, kW0};  // node 3 floats
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    NetworkModel neg{1, 1, {rl(1, 2, -1.0)}, kW0};
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);

    NetworkModel self{1, 1, {rl(1, 1, 1.0)}, kW0};
    CHECK_THROWS_AS(self.validate(), std::invalid_argument);
}

TEST_CASE("Kron reduction") {
    const Complex s(0.0, 2.0 * kPi * 3.0);

    // no interior nodes: identity operation
    NetworkModel none{2, 2, {rl(1, 2, 2.0), rl(2, 3, 4.0)}, kW0};
    const MatXc y = grounded_laplacian(none, s);
    CHECK((kron_reduce(y, 4) - y).norm() < 1e-14);

    // star at omega = 0: series combination of the two legs
    NetworkModel star{3, 2, {rl(1, 3, 2.0), rl(2, 3, 6.0), rl(3, 4, 1e-9)}, kW0};
    const MatXc ystar = grounded_laplacian(star, Complex(0.0, 0.0));
    const MatXc red = kron_reduce(ystar, 4);
    // off-diagonal block = -(b1 b2/(b1+b2)) F_0(0)
    const double series = 2.0 * 6.0 / (2.0 + 6.0);
    const Mat2c f0 = unit_rl_admittance(Complex(0.0, 0.0), 0.0, kW0);
    CHECK((red.block<2, 2>(0, 2) + series * f0).norm() < 1e-6);

    // random 6-node network: Schur path equals the direct-solve oracle
    std::mt19937 rng(555);
    std::uniform_real_distribution<double> ub(0.5, 6.0);
    NetworkModel rnd{6, 2, {}, kW0};
    rnd.branches = {rl(1, 3, ub(rng), 0.05), rl(2, 4, ub(rng), 0.08), rl(3, 4, ub(rng), 0.02),
                    rl(3, 5, ub(rng), 0.1),  rl(4, 6, ub(rng), 0.04), rl(5, 6, ub(rng), 0.06),
                    rl(5, 7, ub(rng), 0.03), {6, 7, ResistiveLoad{1.7}}};
    const MatXc yr = grounded_laplacian(rnd, s);
    const MatXc a = kron_reduce(yr, 4);
    const MatXc b = eliminate_by_solving(yr, 4);
    CHECK((a - b).norm() / b.norm() < 1e-10);

    // elimination order does not matter: one node at a time vs all at once
    MatXc step = yr;
    for (int k = 0; k < 4; ++k) step = kron_reduce(step, static_cast<int>(step.rows()) - 2);
    CHECK((step - a).norm() / a.norm() < 1e-10);
}

TEST_CASE("reduced susceptance matrix and the identical-R/X factorization") {
    // single branch to ground: B_r = [5]
    NetworkModel one{1, 1, {rl(1, 2, 5.0)}, kW0};
    const MatXd br1 = reduced_b_matrix(one);
    REQUIRE(br1.rows() == 1);
    CHECK(br1(0, 0) == Catch::Approx(5.0));

    // identical R/X: Y_grid(s) = B_r (x) F_eps(s)
    const double eps = 0.12;
    NetworkModel net{4, 3,
                     {rl(1, 4, 3.0, eps), rl(2, 4, 2.0, eps), rl(3, 4, 4.5, eps),
                      rl(4, 5, 6.0, eps)},
                     kW0};
    const MatXd br = reduced_b_matrix(net);
    GridResponse g = grid_response(net);
    for (double f : {0.0, 2.0, 37.0, 500.0}) {
        const Complex s(0.0, 2.0 * kPi * f);
        const MatXc got = g(s).value;
        const Mat2c fe = unit_rl_admittance(s, eps, kW0);
        MatXc expect = MatXc::Zero(6, 6);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) expect.block<2, 2>(2 * i, 2 * j) = br(i, j) * fe;
        CHECK((got - expect).norm() / expect.norm() < 1e-10);
    }

    // heterogeneous ratios are refused on this path
    NetworkModel het{2, 2, {rl(1, 3, 1.0, 0.0), rl(2, 3, 1.0, 0.2)}, kW0};
    CHECK_THROWS_AS(reduced_b_matrix(het), std::invalid_argument);
    NetworkModel withload{1, 1, {rl(1, 2, 1.0), {1, 2, ResistiveLoad{3.0}}}, kW0};
    CHECK_THROWS_AS(reduced_b_matrix(withload), std::invalid_argument);
}

TEST_CASE("generalized short-circuit ratio") {
    MatXd b1(1, 1);
    b1 << 5.0;
    VecXd s1(1);
    s1 << 1.0;
    CHECK(gscr(b1, s1) == Catch::Approx(5.0));

    // doubling all capacities halves the ratio
    std::mt19937 rng(777);
    MatXc t = testutil::random_complex(rng, 4, 4);
    MatXd br = (t.real().transpose() * t.real()) + 4.0 * MatXd::Identity(4, 4);
    VecXd s = VecXd::Ones(4);
    const double g1 = gscr(br, s);
    CHECK(gscr(br, 2.0 * s) == Catch::Approx(0.5 * g1).epsilon(1e-12));

    // dual formula: smallest eigenvalue of S^-1 B_r
    VecXd s2(4);
    s2 << 0.5, 1.5, 2.0, 0.8;
    const MatXd m = s2.cwiseInverse().asDiagonal() * br;
    Eigen::EigenSolver<MatXd> es(m, false);
    double lam = 1e100;
    for (int i = 0; i < 4; ++i) lam = std::min(lam, es.eigenvalues()(i).real());
    CHECK(gscr(br, s2) == Catch::Approx(lam).epsilon(1e-10));

    // non-PD refusal
    MatXd sing = MatXd::Zero(2, 2);
    CHECK_THROWS_AS(gscr(sing, VecXd::Ones(2)), std::runtime_error);
}

TEST_CASE("rescaled grid is the constant gSCR matrix for identical R/X") {
    const double eps = 0.08;
    NetworkModel net{3, 2, {rl(1, 3, 2.5, eps), rl(2, 3, 1.5, eps), rl(3, 4, 5.0, eps)}, kW0};
    VecXd cap(2);
    cap << 1.0, 2.0;
    const double strength = gscr(reduced_b_matrix(net), cap);

    GridResponse resc =
        rescaled_grid(grid_response(net), cap, VecXd::Ones(2), eps, kW0);
    for (double f : {0.1, 4.0, 50.0, 800.0}) {
        const Complex s(0.0, 2.0 * kPi * f);
        const GridSample sample = resc(s);
        REQUIRE(sample.reliable);
        const GainSpectrum gains = singular_values(sample.value);
        CHECK(gains.min() == Catch::Approx(strength).epsilon(1e-10));
        const PhaseSpectrum ph = phases(sample.value);
        REQUIRE(ph.sectorial);
        CHECK(std::abs(ph.phi_max()) < 1e-8);
        CHECK(std::abs(ph.phi_min()) < 1e-8);
    }
}

TEST_CASE("rescaled grid with heterogeneous ratios varies over frequency") {
    NetworkModel net{2, 2, {rl(1, 3, 2.0, 0.02), rl(2, 3, 3.0, 0.3), rl(1, 2, 1.0, 0.1)}, kW0};
    GridResponse resc = rescaled_grid(grid_response(net), VecXd::Ones(2), VecXd::Ones(2), 0.1, kW0);
    const double s1 = singular_values(resc(Complex(0.0, 2.0 * kPi * 1.0)).value).min();
    const double s2 = singular_values(resc(Complex(0.0, 2.0 * kPi * 30.0)).value).min();
    CHECK(std::abs(s1 - s2) > 1e-6);

    // realness symmetry
    const MatXc yp = resc(Complex(0.0, 2.0 * kPi * 12.0)).value;
    const MatXc ym = resc(Complex(0.0, -2.0 * kPi * 12.0)).value;
    CHECK((ym - yp.conjugate()).norm() < 1e-12 * yp.norm());
}

TEST_CASE("network with small losses is passive") {
    NetworkModel net{3, 2, {rl(1, 3, 2.0, 0.05), rl(2, 3, 3.0, 0.05), rl(3, 4, 4.0, 0.05)}, kW0};
    GridResponse g = grid_response(net);
    for (double f = 0.2; f < 2000.0; f *= 2.7) {
        const MatXc y = g(Complex(0.0, 2.0 * kPi * f)).value;
        const MatXc herm = 0.5 * (y + y.adjoint());
        Eigen::SelfAdjointEigenSolver<MatXc> es(herm, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues()(0) > -1e-12);
    }
}

TEST_CASE("equivalent network: empty absorption is the identity") {
    NetworkModel net{2, 2, {rl(1, 3, 2.0, 0.1), rl(2, 3, 3.0, 0.1)}, kW0};
    GridResponse g = grid_response(net);
    GridResponse e = equivalent_network(g, {});
    const Complex s(0.0, 2.0 * kPi * 5.0);
    CHECK((e(s).value - g(s).value).norm() < 1e-14);
}

TEST_CASE("absorbing a GFM raises the equivalent network gain at low frequency") {
    // three device nodes on a common interior bus to ground
    const double eps = 0.0;
    NetworkModel net{4, 3,
                     {rl(1, 4, 7.9450549450549453, eps), rl(2, 4, 7.9450549450549453, eps),
                      rl(3, 4, 7.9450549450549453, eps), rl(4, 5, 36.76271559694542, eps)},
                     kW0};
    OperatingPoint op;
    DeviceAdmittance gfm = gfm_admittance(GfmParams{}, op, 1.0, "gfm3");

    GridResponse raw = grid_response(net);
    GridResponse equiv = equivalent_network(raw, {gfm});
    GridResponse raw_resc = rescaled_grid(raw, VecXd::Ones(3), VecXd::Ones(3), eps, kW0);
    VecXd cap2 = VecXd::Ones(2);
    GridResponse equiv_resc = rescaled_grid(equiv, cap2, cap2, eps, kW0);

    bool raised_somewhere = false;
    for (double f : {1.0, 2.0, 4.0, 6.0, 8.0, 10.0}) {
        const Complex s(0.0, 2.0 * kPi * f);
        const double raw_gain = singular_values(raw_resc(s).value).min();
        const double eq_gain = singular_values(equiv_resc(s).value).min();
        if (eq_gain > raw_gain + 1e-9) raised_somewhere = true;
    }
    CHECK(raised_somewhere);
}

TEST_CASE("characteristic-polynomial factorization of the absorbed split") {
    // det(Yc{2} + Yg4) det(Yc{1} + YgridC) det(Ygrid^-1)
    //   = det((S x I2) e^{J th} Yc e^{-J th} Ygrid^-1 + I)
    std::mt19937 rng(2468);
    std::uniform_real_distribution<double> ub(0.5, 5.0);
    std::uniform_real_distribution<double> ue(0.0, 0.3);
    std::uniform_real_distribution<double> uth(-0.4, 0.4);

    for (int trial = 0; trial < 6; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 2);  // 2..3 devices
        const int m = n + 1 + static_cast<int>(rng() % 2);
        NetworkModel net{m, n, {}, kW0};
        for (int k = 1; k <= m; ++k)
            net.branches.push_back(rl(k, (k == m) ? m + 1 : k + 1, ub(rng), ue(rng)));
        net.branches.push_back(rl(1, m + 1, ub(rng), ue(rng)));
        net.validate();

        // random stable 2x2 device responses built from simple state spaces
        std::vector<DeviceAdmittance> devs;
        for (int k = 0; k < n; ++k) {
            StateSpace ss;
            ss.a = -MatXd::Identity(2, 2) * (1.0 + ub(rng)) * 15.0;
            ss.a(0, 1) = 40.0 * uth(rng);
            ss.a(1, 0) = -ss.a(0, 1);
            ss.b = MatXd::Identity(2, 2) * ub(rng) * 10.0;
            ss.c = MatXd::Identity(2, 2);
            ss.d = MatXd::Zero(2, 2);
            ss.d(0, 0) = ss.d(1, 1) = 0.05 * ub(rng);
            DeviceAdmittance d;
            d.id = "dev" + std::to_string(k);
            d.capacity_ratio = ub(rng);
            d.steady_angle = uth(rng);
            d.realization = ss;
            d.response = [ss](Complex s) { return Mat2c(ss.response(s)); };
            devs.push_back(d);
        }

        const int na = 1 + static_cast<int>(rng() % (n - 1));
        std::vector<DeviceAdmittance> absorbed(devs.end() - na, devs.end());

        GridResponse ygrid = grid_response(net);
        GridResponse ygridc = equivalent_network(ygrid, absorbed);

        for (int sp = 0; sp < 20; ++sp) {
            const Complex s(3.0 * uth(rng) * 50.0, 2.0 * kPi * ub(rng) * 12.0);
            const MatXc yg = ygrid(s).value;
            MatXc ycfull = MatXc::Zero(2 * n, 2 * n);
            for (int k = 0; k < n; ++k)
                ycfull.block<2, 2>(2 * k, 2 * k) = devs[static_cast<std::size_t>(k)].global(s);

            const Complex lhs = (ycfull * yg.inverse() + MatXc::Identity(2 * n, 2 * n))
                                    .determinant();

            const int keep2 = 2 * (n - na);
            MatXc yc2 = MatXc::Zero(2 * na, 2 * na);
            for (int k = 0; k < na; ++k)
                yc2.block<2, 2>(2 * k, 2 * k) = absorbed[static_cast<std::size_t>(k)].global(s);
            const MatXc yg4 = yg.bottomRightCorner(2 * na, 2 * na);
            MatXc yc1 = MatXc::Zero(keep2, keep2);
            for (int k = 0; k < n - na; ++k)
                yc1.block<2, 2>(2 * k, 2 * k) = devs[static_cast<std::size_t>(k)].global(s);

            const Complex rhs = (yc2 + yg4).determinant() *
                                (yc1 + ygridc(s).value).determinant() / yg.determinant();
            const double rel = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
            CHECK(rel < 1e-8);
        }
    }
}
