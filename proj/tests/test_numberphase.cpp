#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>

#include "sqwit/expm.hpp"
#include "sqwit/fock.hpp"
#include "sqwit/numberphase.hpp"

using namespace sqwit;

namespace {

double fano_of(const Vec& psi) {
    auto nm = number_moments(number_dist(psi));
    return nm.var() / nm.mean;
}

double phase_variance(const Vec& psi, const Mat& phi) {
    double m = expect(psi, phi).real();
    double m2 = expect(psi, Mat(phi * phi)).real();
    return m2 - m * m;
}

}  // namespace

TEST_CASE("phase operator construction", "[numberphase]") {
    const int d = 40;
    PhaseOperator op = pegg_barnett_phi(d);

    SECTION("closed form matches the explicit basis sum") {
        Mat ref = phase_function_op(d, -M_PI, [](double th) { return th; });
        REQUIRE((op.phi - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("Hermitian to 1e-12") {
        REQUIRE((op.phi - op.phi.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("eigenvalues are exactly the window grid theta0 + 2 pi m / d") {
        Eigen::SelfAdjointEigenSolver<Mat> es(op.phi);
        std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + d);
        std::sort(ev.begin(), ev.end());
        for (int m = 0; m < d; ++m) REQUIRE(std::abs(ev[m] - (-M_PI + 2.0 * M_PI * m / d)) < 1e-10);
        REQUIRE(ev.front() >= -M_PI - 1e-10);
        REQUIRE(ev.back() < M_PI);
    }
    SECTION("phase states are orthonormal") {
        const int dd = 64;
        Mat U(dd, dd);
        for (int m = 0; m < dd; ++m) {
            double th = -M_PI + 2.0 * M_PI * m / dd;
            for (int k = 0; k < dd; ++k) U(k, m) = std::polar(1.0 / std::sqrt(double(dd)), k * th);
        }
        REQUIRE((U.adjoint() * U - Mat::Identity(dd, dd)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("dim below 2 rejected") {
        REQUIRE_THROWS_AS(pegg_barnett_phi(1), std::invalid_argument);
    }
}

TEST_CASE("mean phase of a real-amplitude coherent state is zero", "[numberphase]") {
    const int d = 201;
    PhaseOperator op = pegg_barnett_phi(d);
    Vec psi = coherent_state(d, std::sqrt(30.0));
    REQUIRE(std::abs(expect(psi, op.phi)) < 1e-12);  // band in the contract: 0.02
}

TEST_CASE("number-phase commutator on well-occupied states", "[numberphase]") {
    SECTION("coherent <n> = 30, d = 201: equals i to machine precision") {
        PhaseOperator op = pegg_barnett_phi(201);
        Vec psi = coherent_state(201, std::sqrt(30.0));
        cx c = commutator_check(psi, op);
        REQUIRE(std::abs(c / I_UNIT - 1.0) < 1e-12);  // contract asks 5e-3
    }
    SECTION("coherent <n> = 80, d = 401") {
        PhaseOperator op = pegg_barnett_phi(401);
        Vec psi = coherent_state(401, std::sqrt(80.0));
        REQUIRE(std::abs(commutator_check(psi, op) / I_UNIT - 1.0) < 1e-12);  // contract: 1e-3
    }
    SECTION("low occupation degrades the commutator") {
        // frozen oracle: |<[n,Phi]>/i - 1| = 3.312e-4 at <n> = 5, d = 101
        PhaseOperator op = pegg_barnett_phi(101);
        Vec psi = coherent_state(101, std::sqrt(5.0));
        double dev = std::abs(commutator_check(psi, op) / I_UNIT - 1.0);
        REQUIRE(dev == Catch::Approx(3.312e-4).margin(1e-5));
    }
    SECTION("vacuum sits far from i") {
        PhaseOperator op = pegg_barnett_phi(101);
        cx c = commutator_check(fock_state(101, 0), op);
        REQUIRE(std::abs(c) < 0.5);  // the commutator has no diagonal, so this is exactly 0
        REQUIRE(std::abs(c) < 1e-14);
    }
    SECTION("matrix form agrees with the dense product") {
        PhaseOperator op = pegg_barnett_phi(60);
        Mat n = Mat::Zero(60, 60);
        for (int k = 0; k < 60; ++k) n(k, k) = k;
        REQUIRE((nphi_commutator(op.phi) - (n * op.phi - op.phi * n)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("bn mode construction", "[numberphase]") {
    const int d = 201;
    const double g0 = 60.0;
    PhaseOperator op = pegg_barnett_phi(d);
    NumberPhaseMode m = bn_mode(op, g0);

    SECTION("Re<b_n> on a gamma0-matched coherent state is <n>/sqrt(2 gamma0)") {
        Vec psi = coherent_state(d, std::sqrt(30.0));
        cx eb = expect(psi, m.bn);
        REQUIRE(eb.real() == Catch::Approx(30.0 / std::sqrt(120.0)).margin(1e-10));
    }
    SECTION("[b_n, b_n^dag] expectation is 1 on a well-occupied state") {
        Vec psi = coherent_state(d, std::sqrt(30.0));
        Mat c = m.bn * m.bn.adjoint() - m.bn.adjoint() * m.bn;
        REQUIRE(std::abs(expect(psi, c) - 1.0) < 1e-12);  // contract: 5e-3
    }
    SECTION("asymmetry only rescales the imaginary part") {
        NumberPhaseMode m2 = bn_mode(op, g0, 2.0);
        Mat want = I_UNIT * (g0 / std::sqrt(2.0 * g0)) * op.phi;
        REQUIRE((m2.bn - m.bn - want).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("reconstructible from stored n and Phi") {
        Mat rebuilt = I_UNIT * (m.s * g0) * m.phi;
        for (int k = 0; k < d; ++k) rebuilt(k, k) += double(k);
        rebuilt /= std::sqrt(2.0 * g0);
        REQUIRE((rebuilt - m.bn).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("invalid parameters rejected") {
        REQUIRE_THROWS_AS(bn_mode(op, 0.0), std::invalid_argument);
        REQUIRE_THROWS_AS(bn_mode(op, -1.0), std::invalid_argument);
        REQUIRE_THROWS_AS(bn_mode(op, 60.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("analogous displacement generator", "[numberphase]") {
    const int d = 201;
    PhaseOperator op = pegg_barnett_phi(d);
    NumberPhaseMode m = bn_mode(op, 60.0);
    Vec psi = coherent_state(d, std::sqrt(30.0));

    SECTION("zero displacement is the identity flow") {
        Vec out = expm_apply(dn_generator(m, 0.0), psi);
        REQUIRE((out - psi).norm() < 1e-12);
    }
    SECTION("conjugation shifts <b_n> by exactly beta_n") {
        cx beta(0.2, 0.1);
        Vec out = expm_apply(dn_generator(m, beta), psi);
        cx before = expect(psi, m.bn);
        cx after = expect(out, m.bn) / out.squaredNorm();
        REQUIRE(std::abs(after - before - beta) < 1e-8);  // contract: 1e-6
    }
    SECTION("unitary: inner products preserved") {
        SpMat g = dn_generator(m, cx(0.4, -0.2));
        Vec u = coherent_state(d, cx(5.0, 0.5));
        Vec v = coherent_state(d, cx(5.5, -0.3));
        Vec uu = expm_apply(g, u), vv = expm_apply(g, v);
        REQUIRE(std::abs(uu.dot(vv) - u.dot(v)) < 1e-9);
        REQUIRE(std::abs(uu.norm() - 1.0) < 1e-10);
    }
    SECTION("maps eigenstates to displaced eigenstates") {
        cx lam1 = m.operator_eigenvalue(cx(30.0, 0.0));
        cx beta(0.3, 0.0);
        EigenstateResult s1 = bn_eigenstate_at(m, lam1);
        EigenstateResult s2 = bn_eigenstate_at(m, lam1 + beta);
        Vec moved = expm_apply(dn_generator(m, beta), s1.state);
        double fid = std::norm(s2.state.dot(moved));
        REQUIRE(fid >= 0.99);
    }
}

TEST_CASE("analogous squeeze generator", "[numberphase]") {
    const int d = 161;
    const double g0 = 80.0;
    PhaseOperator op = pegg_barnett_phi(d);
    NumberPhaseMode m = bn_mode(op, g0);
    Vec psi0 = coherent_state(d, std::sqrt(40.0));
    const double vphi0 = phase_variance(psi0, m.phi);
    REQUIRE(vphi0 == Catch::Approx(6.330888776878e-3).margin(1e-9));  // frozen oracle

    SECTION("zero squeeze is the identity flow") {
        Vec out = expm_apply(sn_generator(m, 0.0), psi0);
        REQUIRE((out - psi0).norm() < 1e-12);
    }
    SECTION("real xi squeezes photon number below Poissonian") {
        Vec v = expm_apply(sn_generator(m, 0.3), psi0, 1.0, {.renormalize = true});
        auto nm = number_moments(number_dist(v));
        // frozen oracles from the independent dense-exponential route
        REQUIRE(fano_of(v) == Catch::Approx(0.7408182206817).margin(1e-6));
        REQUIRE(nm.mean == Catch::Approx(29.632728827).margin(1e-4));
        REQUIRE(fano_of(v) < 1.0);
    }
    SECTION("imaginary xi pushes the number statistics super-Poissonian") {
        Vec v = expm_apply(sn_generator(m, cx(0.0, 0.3)), psi0, 1.0, {.renormalize = true});
        REQUIRE(fano_of(v) == Catch::Approx(1.1351972404).margin(1e-6));
        REQUIRE(fano_of(v) > 1.0);
    }
    SECTION("opposite axis: number anti-squeezed while the phase variance shrinks") {
        Vec v = expm_apply(sn_generator(m, -0.3), psi0, 1.0, {.renormalize = true});
        REQUIRE(fano_of(v) == Catch::Approx(1.3498588076).margin(1e-6));
        REQUIRE(fano_of(v) > 1.0);
        double vphi = phase_variance(v, m.phi);
        REQUIRE(vphi == Catch::Approx(3.474465e-3).margin(1e-8));
        REQUIRE(vphi < vphi0);
        // e^{-2r} contraction of the phase variance
        REQUIRE(vphi == Catch::Approx(vphi0 * std::exp(-0.6)).margin(1e-6));
    }
    SECTION("conjugation relation with the cosh/sinh coefficients") {
        for (cx xi : {cx(0.2, 0.0), cx(0.2 * std::cos(0.7), 0.2 * std::sin(0.7))}) {
            double r = std::abs(xi), ph = std::arg(xi);
            Vec v = expm_apply(sn_generator(m, xi), psi0);
            cx lhs = expect(v, m.bn) / v.squaredNorm();
            cx eb = expect(psi0, m.bn);
            cx ebd = std::conj(eb);
            cx rhs = std::cosh(r) * eb - std::polar(std::sinh(r), -ph) * ebd;
            REQUIRE(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);  // contract: 1e-3
        }
    }
}

TEST_CASE("bn eigenstate solver", "[numberphase]") {
    SECTION("defining property at a deep point: residual below 1e-8") {
        PhaseOperator op = pegg_barnett_phi(301);
        NumberPhaseMode m = bn_mode(op, 160.0);
        EigenstateResult r = bn_eigenstate(m, cx(80.0, 0.0));
        REQUIRE(r.residual <= 1e-8);
        auto nm = number_moments(number_dist(r.state));
        REQUIRE(nm.mean == Catch::Approx(80.0).margin(0.05));
        double ov = std::abs(coherent_state(301, std::sqrt(80.0)).dot(r.state));
        REQUIRE(ov >= 0.999);  // contract: 0.99
    }
    SECTION("packed point 30: coherent equivalent") {
        PhaseOperator op = pegg_barnett_phi(201);
        NumberPhaseMode m = bn_mode(op, 60.0);
        EigenstateResult r = bn_eigenstate(m, cx(30.0, 0.0));
        // the non-normality floor at this occupation, frozen from the SVD oracle
        REQUIRE(r.residual == Catch::Approx(5.174e-4).margin(2e-5));
        auto nm = number_moments(number_dist(r.state));
        REQUIRE(nm.mean == Catch::Approx(30.0).margin(0.01));  // contract: +-1
        double ov = std::abs(coherent_state(201, std::sqrt(30.0)).dot(r.state));
        REQUIRE(ov >= 0.999);
    }
    SECTION("nonzero phase rotates the coherent equivalent") {
        PhaseOperator op = pegg_barnett_phi(201);
        NumberPhaseMode m = bn_mode(op, 60.0);
        EigenstateResult r = bn_eigenstate(m, cx(30.0, 0.15));
        Vec target = coherent_state(201, std::sqrt(30.0) * std::polar(1.0, 0.15));
        REQUIRE(std::abs(target.dot(r.state)) >= 0.999);
        auto nm = number_moments(number_dist(r.state));
        REQUIRE(nm.mean == Catch::Approx(30.0).margin(0.01));
    }
    SECTION("residual decreases monotonically with the truncation size") {
        std::vector<int> dims{41, 46, 51, 56, 61, 71};
        std::vector<double> res;
        for (int d : dims) {
            PhaseOperator op = pegg_barnett_phi(d);
            NumberPhaseMode m = bn_mode(op, 60.0);
            res.push_back(bn_eigenstate(m, cx(30.0, 0.0)).residual);
        }
        for (size_t i = 1; i < res.size(); ++i) REQUIRE(res[i] < res[i - 1]);
        REQUIRE(res.front() > 0.1);    // truncation-dominated end
        REQUIRE(res.back() < 6e-4);    // non-normality floor
    }
}

TEST_CASE("sin-phase variant", "[numberphase]") {
    const int d = 48;
    Mat sp = sin_phi(d);
    SECTION("Hermitian with eigenvalues sin(theta_m)") {
        REQUIRE((sp - sp.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Mat> es(sp);
        std::vector<double> got(es.eigenvalues().data(), es.eigenvalues().data() + d);
        std::vector<double> want;
        for (int m = 0; m < d; ++m) want.push_back(std::sin(-M_PI + 2.0 * M_PI * m / d));
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        for (int m = 0; m < d; ++m) REQUIRE(std::abs(got[m] - want[m]) < 1e-10);
    }
    SECTION("tracks the phase mean on a narrow phase distribution") {
        const int dd = 101;
        Mat s2 = sin_phi(dd);
        Vec psi = coherent_state(dd, std::sqrt(30.0) * std::polar(1.0, 0.1));
        double got = expect(psi, s2).real();
        REQUIRE(std::abs(got - std::sin(0.1)) < 2e-3);
    }
}
