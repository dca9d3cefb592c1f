#pragma once
// Pegg-Barnett phase operator and the number-phase mode built on it:
// the ladder-like operator b_n = (n_hat + i s gamma0 Phi_hat)/sqrt(2 gamma0),
// its displacement/squeeze generators, and an eigenstate solver.
//
// Eigenvalue bookkeeping: two parameterizations appear below.
//  * "packed" points beta_n = <n> + i*phase describe a point in the
//    number-phase plane (real part = mean photon number, imaginary part =
//    mean phase in radians). bn_eigenstate takes these.
//  * operator-level eigenvalues lambda of the b_n matrix itself; the two are
//    related by lambda = (Re beta_n + i s gamma0 Im beta_n)/sqrt(2 gamma0).
//    dn_generator's beta_n is operator-level (it shifts b_n by exactly that).

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

#include "sqwit/fock.hpp"

namespace sqwit {

struct PhaseOperator {
    int dim = 0;
    double theta0 = -M_PI;  // window start; spectrum lies in [theta0, theta0 + 2pi)
    Mat phi;
};

// f(Phi) = sum_m f(theta_m) |theta_m><theta_m| via the explicit phase-state
// basis |theta_m> = d^{-1/2} sum_k e^{i k theta_m} |k>. O(d^3); reference path.
inline Mat phase_function_op(int dim, double theta0, const std::function<double(double)>& f) {
    Mat out = Mat::Zero(dim, dim);
    Vec st(dim);
    for (int m = 0; m < dim; ++m) {
        double th = theta0 + 2.0 * M_PI * m / dim;
        for (int k = 0; k < dim; ++k) st[k] = std::polar(1.0 / std::sqrt(double(dim)), k * th);
        out += f(th) * (st * st.adjoint());
    }
    return out;
}

// closed form of the basis sum above:
//   Phi_jj = theta0 + pi (d-1)/d
//   Phi_jk = (2 pi / d) e^{i(j-k)theta0} / (e^{2 pi i (j-k)/d} - 1),  j != k
inline PhaseOperator pegg_barnett_phi(int dim, double theta0 = -M_PI) {
    if (dim < 2) throw std::invalid_argument("pegg_barnett_phi: dim must be >= 2");
    PhaseOperator op;
    op.dim = dim;
    op.theta0 = theta0;
    op.phi = Mat::Zero(dim, dim);
    double diag = theta0 + M_PI * double(dim - 1) / dim;
    for (int j = 0; j < dim; ++j) {
        op.phi(j, j) = diag;
        for (int k = 0; k < j; ++k) {
            int q = j - k;
            cx z = std::polar(1.0, 2.0 * M_PI * q / dim);
            cx v = (2.0 * M_PI / dim) * std::polar(1.0, q * theta0) / (z - 1.0);
            op.phi(j, k) = v;
            op.phi(k, j) = std::conj(v);
        }
    }
    return op;
}

// optional small-<n> variant (sin of the phase operator); unused by the protocol
inline Mat sin_phi(int dim, double theta0 = -M_PI) {
    return phase_function_op(dim, theta0, [](double th) { return std::sin(th); });
}

// [n_hat, Phi]_jk = (j - k) Phi_jk since n_hat is diagonal
inline Mat nphi_commutator(const Mat& phi) {
    int d = int(phi.rows());
    Mat out(d, d);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) out(j, k) = double(j - k) * phi(j, k);
    return out;
}

// <psi|[n_hat, Phi_hat]|psi> = 2i Im <n psi | Phi psi>; the validity gate
// compares this against i
inline cx commutator_check(const Vec& psi, const PhaseOperator& phi) {
    Vec u = phi.phi * psi;
    Vec v(psi.size());
    for (int k = 0; k < psi.size(); ++k) v[k] = double(k) * psi[k];
    return v.dot(u) - u.dot(v);
}

struct NumberPhaseMode {
    int dim = 0;
    double gamma0 = 0;  // 2<n_hat> of the reference state, frozen at construction
    double s = 1.0;     // asymmetry of the imaginary part
    double theta0 = -M_PI;
    Mat phi;
    Mat bn;

    // packed number-phase point -> operator-level eigenvalue of bn
    cx operator_eigenvalue(cx packed) const {
        return cx(packed.real(), s * gamma0 * packed.imag()) / std::sqrt(2.0 * gamma0);
    }
    // inverse map; real part is the equivalent mean photon number
    cx packed_point(cx lambda) const {
        double root = std::sqrt(2.0 * gamma0);
        return {root * lambda.real(), root * lambda.imag() / (s * gamma0)};
    }
};

inline NumberPhaseMode bn_mode(const PhaseOperator& phi, double gamma0, double s = 1.0) {
    if (!(gamma0 > 0)) throw std::invalid_argument("bn_mode: gamma0 must be positive");
    if (!(s > 0)) throw std::invalid_argument("bn_mode: s must be positive");
    NumberPhaseMode m;
    m.dim = phi.dim;
    m.gamma0 = gamma0;
    m.s = s;
    m.theta0 = phi.theta0;
    m.phi = phi.phi;
    m.bn = (I_UNIT * (s * gamma0)) * phi.phi;
    for (int k = 0; k < m.dim; ++k) m.bn(k, k) += double(k);
    m.bn /= std::sqrt(2.0 * gamma0);
    return m;
}

// generator of the analogous displacement: G = beta_n bn^dag - beta_n^* bn,
// so that U = exp(G) shifts the mode, U^dag bn U = bn + beta_n (up to the
// commutator defect of the truncated algebra)
inline SpMat dn_generator(const NumberPhaseMode& m, cx beta_n) {
    Mat g = beta_n * m.bn.adjoint() - std::conj(beta_n) * m.bn;
    return dense_to_sparse(g);
}

// generator of the analogous squeeze: G = (xi bn^2 - xi^* bn^dag^2)/2.
// For xi = r > 0 the conjugation contracts n_hat by e^{-r} and stretches
// Phi_hat by e^{+r}; complex xi = r e^{i phi'} rotates the squeezed axis,
// U^dag bn U = cosh(r) bn - e^{-i phi'} sinh(r) bn^dag.
inline SpMat sn_generator(const NumberPhaseMode& m, cx xi) {
    Mat b2 = m.bn * m.bn;
    Mat g = 0.5 * (xi * b2 - std::conj(xi) * b2.adjoint());
    return dense_to_sparse(g);
}

struct EigenstateResult {
    Vec state;
    double residual = 0;  // ||(bn - lambda) state||; the solver's diagnostic
    int iterations = 0;
};

// smallest singular vector of (bn - lambda) by inverse iteration on the
// normal matrix; lambda is operator-level
inline EigenstateResult bn_eigenstate_at(const NumberPhaseMode& m, cx lambda, double tol = 1e-10,
                                         int max_iter = 200) {
    const int d = m.dim;
    Mat A = m.bn;
    for (int k = 0; k < d; ++k) A(k, k) -= lambda;
    Mat M = A.adjoint() * A;
    Eigen::PartialPivLU<Mat> lu(M);

    // coherent-equivalent starting guess when it fits the space
    cx packed = m.packed_point(lambda);
    Vec x;
    if (packed.real() > 0 && packed.real() < 0.5 * d) {
        x = coherent_state(d, std::sqrt(packed.real()) * std::polar(1.0, packed.imag()));
    } else {
        x = Vec::Constant(d, cx(1.0 / std::sqrt(double(d)), 0.0));
    }

    EigenstateResult out;
    double prev = -1.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        Vec y = lu.solve(x);
        double ny = y.norm();
        if (!std::isfinite(ny) || ny == 0.0) break;  // x already in the nullspace
        x = y / ny;
        double res = (A * x).norm();
        if (prev >= 0 && std::abs(prev - res) <= tol * std::max(1.0, res)) {
            prev = res;
            ++it;
            break;
        }
        prev = res;
    }
    out.state = x;
    out.residual = (A * x).norm();
    out.iterations = it;
    return out;
}

// packed-point front end: Re beta_n = target mean photon number,
// Im beta_n = target mean phase
inline EigenstateResult bn_eigenstate(const NumberPhaseMode& m, cx beta_n, double tol = 1e-10,
                                      int max_iter = 200) {
    return bn_eigenstate_at(m, m.operator_eigenvalue(beta_n), tol, max_iter);
}

}  // namespace sqwit
