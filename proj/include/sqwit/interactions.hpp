#pragma once
// Beam-splitter-like couplings on the two-mode space (mode 1 slowest):
// the standard BS, the number-phase variant B_n that couples an optical
// mode to b_n, and the BS-conjugated quadrature-squeeze generator.
//
// All functions return theta-independent generators G; the unitary at mixing
// angle theta is exp(theta G), applied with bs_apply or expm_apply directly.
// Heisenberg relations at phi = 0, B = exp(theta G):
//   number_phase:  B a B^dag  = cos(theta) a + sin(theta) b_n
//                  B bn B^dag = cos(theta) b_n - sin(theta) a
//   standard:      B a B^dag  = cos(theta) a - sin(theta) b
//                  B b B^dag  = cos(theta) b + sin(theta) a

#include <cmath>
#include <complex>
#include <stdexcept>

#include "sqwit/expm.hpp"
#include "sqwit/fock.hpp"
#include "sqwit/numberphase.hpp"

namespace sqwit {

struct BeamSplitterSpec {
    enum class Variant { standard, number_phase };
    double theta = 0.0;
    double phi = 0.0;
    Variant variant = Variant::standard;

    double t() const { return std::cos(theta); }
    double r() const { return std::sin(theta); }
};

// G = e^{i phi} (a x bn^dag) - e^{-i phi} (a^dag x bn); exp(theta G) = B_n(theta)
inline SpMat bn_bs_generator(const BeamSplitterSpec& spec, int d1, const NumberPhaseMode& m2) {
    if (spec.variant != BeamSplitterSpec::Variant::number_phase)
        throw std::invalid_argument("bn_bs_generator: variant mismatch");
    SpMat bn = dense_to_sparse(m2.bn);
    SpMat bnd = dense_to_sparse(Mat(m2.bn.adjoint()));
    cx ph = std::polar(1.0, spec.phi);
    return SpMat(ph * kron_sp(lower_op(d1), bnd) - std::conj(ph) * kron_sp(raise_op(d1), bn));
}

// G = e^{i phi} a^dag b - e^{-i phi} b^dag a
inline SpMat standard_bs_generator(const BeamSplitterSpec& spec, int d1, int d2) {
    if (spec.variant != BeamSplitterSpec::Variant::standard)
        throw std::invalid_argument("standard_bs_generator: variant mismatch");
    cx ph = std::polar(1.0, spec.phi);
    return SpMat(ph * kron_sp(raise_op(d1), lower_op(d2)) -
                 std::conj(ph) * kron_sp(lower_op(d1), raise_op(d2)));
}

inline Vec bs_apply(const SpMat& g, double theta, const Vec& psi, const ExpmOptions& opts = {}) {
    return expm_apply(g, psi, cx(theta, 0.0), opts);
}

// the quadrature squeeze S(r_in) on mode 1 conjugated by B_n(theta):
//   G = (r_in/2)[t^2 (a^2 - a^dag^2) + r^2 (bn^2 - bn^dag^2)
//                + 2 t r (a bn - a^dag bn^dag)],  t = cos theta, r = sin theta
inline SpMat transformed_squeeze_generator(double r_in, double theta, int d1,
                                           const NumberPhaseMode& m2) {
    double t = std::cos(theta), r = std::sin(theta);
    SpMat a = lower_op(d1);
    SpMat a2 = SpMat(a * a);
    SpMat bn = dense_to_sparse(m2.bn);
    SpMat bn2 = SpMat(bn * bn);
    SpMat A2 = embed_mode1(a2, m2.dim);
    SpMat B2 = embed_mode2(d1, bn2);
    SpMat AB = kron_sp(a, bn);
    return SpMat(0.5 * r_in *
                 (t * t * SpMat(A2 - SpMat(A2.adjoint())) +
                  r * r * SpMat(B2 - SpMat(B2.adjoint())) +
                  2.0 * t * r * SpMat(AB - SpMat(AB.adjoint()))));
}

}  // namespace sqwit
