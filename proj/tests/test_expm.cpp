#include <catch2/catch_amalgamated.hpp>

#include "sqwit/expm.hpp"
#include "sqwit/rng.hpp"

using namespace sqwit;
using Catch::Approx;

namespace {
SpMat random_antihermitian(int d, std::uint64_t seed) {
    PulseRng r(seed, 0);
    Mat M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = cx(r.normal(), r.normal());
    Mat A = M - M.adjoint();  // anti-Hermitian
    return dense_to_sparse(A);
}
}

TEST_CASE("krylov action matches the dense exponential", "[expm]") {
    int d = 60;
    SpMat A = random_antihermitian(d, 31);
    Vec v = coherent_state(d, 1.2);
    Vec got = expm_apply(A, v, cx(0.37, 0.0));
    Mat F = (0.37 * Mat(A)).exp();
    REQUIRE((got - F * v).norm() < 1e-10);
    REQUIRE(std::abs(got.norm() - 1.0) < 1e-10);  // unitary generator
}

TEST_CASE("substepping handles generators with large norm", "[expm]") {
    // displacement by 6 from vacuum needs many substeps at this dimension
    int d = 120;
    SpMat G = raise_op(d);
    G = SpMat(6.0 * G - 6.0 * SpMat(G.adjoint()));  // 6 a^dag - 6 a
    Vec v = fock_state(d, 0);
    Vec got = expm_apply(G, v, 1.0, {.tol = 1e-12, .renormalize = true});
    REQUIRE((got - coherent_state(d, 6.0)).norm() < 1e-9);
}

TEST_CASE("displacement and squeeze generators reproduce the analytic states", "[expm]") {
    // cross-validates the recurrence-based constructors against an
    // independent route through the exponential
    int d = 100;
    cx alpha(0.9, -1.1);
    cx xi(0.35, 0.0);
    SpMat a = lower_op(d), ad = raise_op(d);
    SpMat Gd = SpMat(alpha * ad - std::conj(alpha) * a);
    SpMat a2 = SpMat(a * a);
    SpMat Gs = SpMat(0.5 * (xi * a2 - std::conj(xi) * SpMat(a2.adjoint())));
    Vec v = expm_apply(Gs, fock_state(d, 0));
    v = expm_apply(Gd, v);
    // the recurrence constructor fixes the global phase (c0 > 0), the
    // operator product does not; align before comparing
    Vec w = displaced_squeezed_state(d, alpha, xi);
    cx ov = w.dot(v);
    v *= std::conj(ov) / std::abs(ov);
    REQUIRE((v - w).norm() < 1e-10);
    REQUIRE(std::abs(std::abs(ov) - 1.0) < 1e-10);
}

TEST_CASE("imaginary time direction works", "[expm]") {
    int d = 30;
    SpMat N = number_op(d);
    Vec v = coherent_state(d, 1.0);
    // exp(-i pi N) maps alpha -> -alpha
    Vec got = expm_apply(N, v, cx(0.0, -M_PI));
    REQUIRE((got - coherent_state(d, -1.0)).norm() < 1e-9);
}

TEST_CASE("happy breakdown on an invariant subspace", "[expm]") {
    // generator confined to a 2-level block: Krylov terminates early and is exact
    int d = 40;
    Mat A = Mat::Zero(d, d);
    A(0, 1) = 1.0;
    A(1, 0) = -1.0;
    Vec v = fock_state(d, 0);
    Vec got = expm_apply(dense_to_sparse(A), v, 0.7);
    REQUIRE(got[0].real() == Approx(std::cos(0.7)).epsilon(1e-12));
    REQUIRE(got[1].real() == Approx(-std::sin(0.7)).epsilon(1e-12));
}

TEST_CASE("substep limit raises a diagnostic error", "[expm]") {
    int d = 40;
    SpMat G = raise_op(d);
    G = SpMat(50.0 * G - 50.0 * SpMat(G.adjoint()));
    ExpmOptions o;
    o.max_substeps = 1;
    REQUIRE_THROWS_AS(expm_apply(G, fock_state(d, 0), 1.0, o), ConvergenceError);
}
