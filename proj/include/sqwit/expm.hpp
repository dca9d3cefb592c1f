#pragma once
// Action of a matrix exponential on a vector, exp(t A) v, without forming
// exp(t A). Adaptive Arnoldi/Krylov with substepping: two-mode generators
// here reach ~10^4 dimensions where a dense exponential (10^8 entries,
// cubic cost) is not a desk-scale operation.
//
// The small projected exponential uses Eigen's dense Pade implementation.
// Substep control follows the usual residual heuristic: the local error is
// estimated from the last subdiagonal entry of the projected exponential
// and the step is halved until it passes the tolerance.

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "fock.hpp"

namespace sqwit {

struct ExpmOptions {
    double tol = 1e-12;       // per-unit-time local error target
    int krylov_dim = 30;
    int max_substeps = 20000;
    bool renormalize = false; // set for anti-Hermitian generators (unitary evolution)
};

struct ConvergenceError : std::runtime_error {
    double residual;
    explicit ConvergenceError(const std::string& what, double r)
        : std::runtime_error(what), residual(r) {}
};

// Op must provide: Eigen::Index rows() and Vec operator*(const Vec&).
template <typename Op>
Vec expm_apply_op(const Op& A, Vec v, cx t = cx(1.0, 0.0), const ExpmOptions& opts = {}) {
    const Eigen::Index n = v.size();
    if (n == 0 || t == cx(0.0, 0.0)) return v;
    const int m = int(std::min<Eigen::Index>(opts.krylov_dim, n));
    const double tmag = std::abs(t);
    const cx tdir = t / tmag;

    double done = 0.0;
    // initial substep from a one-matvec norm estimate
    double anorm = (A * v).norm() / std::max(v.norm(), 1e-300);
    double tau = (anorm > 0) ? std::min(tmag, 1.0 / anorm) : tmag;
    int steps = 0;

    Mat V(n, m + 1);
    Mat H = Mat::Zero(m + 2, m + 1);

    while (done < tmag * (1.0 - 1e-15)) {
        if (++steps > opts.max_substeps)
            throw ConvergenceError("expm_apply: substep limit exceeded", tau);
        tau = std::min(tau, tmag - done);

        const double beta = v.norm();
        if (beta == 0.0) return v;
        V.col(0) = v / beta;
        H.setZero();
        int mk = m;
        bool happy = false;
        for (int j = 0; j < m; ++j) {
            Vec w = A * Vec(V.col(j));
            // modified Gram-Schmidt, two passes for orthogonality at tight tol
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= j; ++i) {
                    cx h = V.col(i).dot(w);
                    w -= h * V.col(i);
                    H(i, j) += h;
                }
            double hn = w.norm();
            H(j + 1, j) = hn;
            if (hn < 1e-14 * anorm || hn == 0.0) {
                mk = j + 1;
                happy = true;  // invariant subspace: exact in it
                break;
            }
            V.col(j + 1) = w / hn;
        }

        while (true) {
            Mat Hm = H.topLeftCorner(mk, mk);
            Mat F = ((tau * tdir) * Hm).exp();
            double err = happy ? 0.0
                               : std::abs(H(mk, mk - 1)) * std::abs(F(mk - 1, 0)) * tau;
            double budget = opts.tol * std::max(tau / tmag, 1e-16);
            if (err <= budget * beta || tau <= 1e-15 * tmag) {
                v = beta * (V.leftCols(mk) * F.col(0));
                done += tau;
                if (opts.renormalize) v *= 1.0 / v.norm();
                // grow cautiously when comfortably under budget
                if (err < 0.1 * budget * beta) tau *= 1.8;
                break;
            }
            tau *= 0.5;
        }
    }
    return v;
}

struct SparseOpRef {
    const SpMat& M;
    Eigen::Index rows() const { return M.rows(); }
    Vec operator*(const Vec& v) const { return M * v; }
};

inline Vec expm_apply(const SpMat& A, const Vec& v, cx t = cx(1.0, 0.0), const ExpmOptions& opts = {}) {
    return expm_apply_op(SparseOpRef{A}, v, t, opts);
}

inline Vec expm_apply(const Mat& A, const Vec& v, cx t = cx(1.0, 0.0), const ExpmOptions& opts = {}) {
    struct DenseOpRef {
        const Mat& M;
        Eigen::Index rows() const { return M.rows(); }
        Vec operator*(const Vec& v) const { return M * v; }
    };
    return expm_apply_op(DenseOpRef{A}, v, t, opts);
}

// dense exponential of a small matrix (diagnostics, small-space routes)
inline Mat expm_dense(const Mat& A) { return A.exp(); }

}
