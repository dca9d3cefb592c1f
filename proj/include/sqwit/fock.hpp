#pragma once
// Truncated Fock spaces, bosonic operators, common pure states, and
// two-mode index bookkeeping.
//
// Conventions, fixed once for the whole library:
//   - hbar = 1, x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)),
//     vacuum quadrature variance 1/2.
//   - Two-mode product index: mode 1 is the SLOW index. A two-mode vector
//     psi of length d1*d2 reshapes to the d1 x d2 row-major matrix
//     Psi(i, m) = psi[i*d2 + m]; kron(op1, op2) acts on it.
//   - squeeze(xi) = exp[(xi a^2 - conj(xi) a^dag^2)/2]. For real xi > 0
//     this squeezes x: Var x -> exp(-2 xi)/2.
//
// Mode-2 reduced statistics are computed as row-wise quadratic forms on
// Psi, never by forming a density matrix from Psi^dag Psi. The latter is
// the TRANSPOSE of the true mode-2 marginal (rho2 = Psi^T conj(Psi)); it
// gives correct diagonal moments but conjugated off-diagonal expectations,
// which silently flips phases like arg<b>. The row-form is immune and
// cheaper.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace sqwit {

using cx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RMat = Eigen::Matrix<cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SpMat = Eigen::SparseMatrix<cx, Eigen::RowMajor>;

inline constexpr cx I_UNIT{0.0, 1.0};

// ---------- single-mode operators ----------

inline SpMat lower_op(int d) {
    SpMat a(d, d);
    a.reserve(Eigen::VectorXi::Constant(d, 1));
    for (int n = 1; n < d; ++n) a.insert(n - 1, n) = std::sqrt(double(n));
    a.makeCompressed();
    return a;
}

inline SpMat raise_op(int d) {
    SpMat ad(d, d);
    ad.reserve(Eigen::VectorXi::Constant(d, 1));
    for (int n = 1; n < d; ++n) ad.insert(n, n - 1) = std::sqrt(double(n));
    ad.makeCompressed();
    return ad;
}

inline SpMat number_op(int d) {
    SpMat n(d, d);
    n.reserve(Eigen::VectorXi::Constant(d, 1));
    for (int k = 0; k < d; ++k) n.insert(k, k) = double(k);
    n.makeCompressed();
    return n;
}

inline SpMat identity_op(int d) {
    SpMat id(d, d);
    id.setIdentity();
    return id;
}

inline Mat x_op(int d) {
    Mat a = Mat(lower_op(d));
    return (a + a.adjoint()) / std::sqrt(2.0);
}

inline Mat p_op(int d) {
    Mat a = Mat(lower_op(d));
    return (a - a.adjoint()) / (I_UNIT * std::sqrt(2.0));
}

// ---------- single-mode states ----------

// anti-Hermitian generators: exp of these are the displacement / squeeze unitaries
inline SpMat displacement_generator(int d, cx alpha) {
    return SpMat(alpha * raise_op(d) - std::conj(alpha) * lower_op(d));
}

inline SpMat squeeze_generator(int d, cx xi) {
    SpMat a = lower_op(d);
    SpMat a2 = SpMat(a * a);
    return SpMat(0.5 * (xi * a2 - std::conj(xi) * SpMat(a2.adjoint())));
}

inline Vec fock_state(int d, int k) {
    if (k < 0 || k >= d) throw std::invalid_argument("fock_state: level outside space");
    Vec v = Vec::Zero(d);
    v[k] = 1.0;
    return v;
}

inline Vec coherent_state(int d, cx alpha) {
    Vec v(d);
    double a2 = std::norm(alpha);
    // log-domain amplitudes, phase applied separately
    double lg = -0.5 * a2;
    double r = std::abs(alpha);
    double ph = std::arg(alpha);
    double logr = (r > 0) ? std::log(r) : -745.0;
    for (int n = 0; n < d; ++n) {
        if (n > 0) lg += logr - 0.5 * std::log(double(n));
        v[n] = std::exp(lg) * std::exp(I_UNIT * (ph * double(n)));
    }
    v.normalize();
    return v;
}

// D(alpha) S(xi) |0> by the three-term recurrence from the eigenrelation
//   [cosh r a + e^{-i arg xi} sinh r a^dag] |psi> = (mu alpha + nu conj(alpha)) |psi>
// independent of any matrix exponential. Global phase convention: the
// vacuum component is real and positive (the operator product's own global
// phase is not reproduced; nothing downstream observes it).
inline Vec displaced_squeezed_state(int d, cx alpha, cx xi) {
    double r = std::abs(xi);
    cx mu = std::cosh(r);
    cx nu = std::exp(-I_UNIT * std::arg(xi)) * std::sinh(r);
    cx lam = mu * alpha + nu * std::conj(alpha);
    Vec c(d);
    c[0] = 1.0;
    if (d > 1) c[1] = lam / mu;
    for (int n = 1; n + 1 < d; ++n)
        c[n + 1] = (lam * c[n] - nu * std::sqrt(double(n)) * c[n - 1]) / (mu * std::sqrt(double(n + 1)));
    c.normalize();
    return c;
}

inline Vec squeezed_vacuum_state(int d, cx xi) { return displaced_squeezed_state(d, 0.0, xi); }

// ---------- expectation helpers ----------

inline cx expect(const Vec& psi, const Mat& M) { return psi.dot(M * psi); }
inline cx expect(const Vec& psi, const SpMat& M) { return psi.dot(M * psi); }

inline double mean_n(const Vec& psi) {
    double s = 0;
    for (int n = 0; n < psi.size(); ++n) s += double(n) * std::norm(psi[n]);
    return s;
}

struct NumberMoments {
    double mean = 0, second = 0;  // <n>, <n^2>
    double var() const { return second - mean * mean; }
};

inline NumberMoments number_moments(const std::vector<double>& pdist) {
    NumberMoments m;
    for (std::size_t n = 0; n < pdist.size(); ++n) {
        m.mean += double(n) * pdist[n];
        m.second += double(n) * double(n) * pdist[n];
    }
    return m;
}

inline std::vector<double> number_dist(const Vec& psi) {
    std::vector<double> p(psi.size());
    for (int n = 0; n < psi.size(); ++n) p[n] = std::norm(psi[n]);
    return p;
}

// minimum quadrature variance over all phases, from the 2x2 covariance
struct QuadStats {
    double vx, vp, cxp, ex, ep;
    double vmin() const {
        double tr = vx + vp, det = vx * vp - cxp * cxp;
        return 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    }
    double vmax() const {
        double tr = vx + vp, det = vx * vp - cxp * cxp;
        return 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    }
};

// quadrature covariance from <a>, <a^2>, <a^dag a>
inline QuadStats quad_stats(cx ea, cx ea2, double eada) {
    QuadStats q;
    cx da2 = ea2 - ea * ea;                 // <delta a^2>
    double dada = eada - std::norm(ea);     // <delta a^dag delta a>
    q.ex = std::sqrt(2.0) * ea.real();
    q.ep = std::sqrt(2.0) * ea.imag();
    q.vx = 0.5 + dada + da2.real();
    q.vp = 0.5 + dada - da2.real();
    q.cxp = da2.imag();
    return q;
}

inline QuadStats quad_stats(const Vec& psi) {
    int d = int(psi.size());
    cx ea = 0, ea2 = 0;
    double eada = 0;
    for (int n = 1; n < d; ++n) ea += std::conj(psi[n - 1]) * std::sqrt(double(n)) * psi[n];
    for (int n = 2; n < d; ++n) ea2 += std::conj(psi[n - 2]) * std::sqrt(double(n) * double(n - 1)) * psi[n];
    for (int n = 0; n < d; ++n) eada += double(n) * std::norm(psi[n]);
    return quad_stats(ea, ea2, eada);
}

// ---------- density matrices (single mode) ----------

inline Mat pure_density(const Vec& psi) { return psi * psi.adjoint(); }

inline double mean_n(const Mat& rho) {
    double s = 0;
    for (int n = 0; n < rho.rows(); ++n) s += double(n) * rho(n, n).real();
    return s;
}

inline std::vector<double> number_dist(const Mat& rho) {
    std::vector<double> p(rho.rows());
    for (int n = 0; n < rho.rows(); ++n) p[n] = std::max(0.0, rho(n, n).real());
    return p;
}

inline QuadStats quad_stats(const Mat& rho) {
    int d = int(rho.rows());
    cx ea = 0, ea2 = 0;
    double eada = 0;
    for (int n = 1; n < d; ++n) ea += std::sqrt(double(n)) * rho(n, n - 1);
    for (int n = 2; n < d; ++n) ea2 += std::sqrt(double(n) * double(n - 1)) * rho(n, n - 2);
    for (int n = 0; n < d; ++n) eada += double(n) * rho(n, n).real();
    return quad_stats(ea, ea2, eada);
}

// trace distance (1/2)||rho - sigma||_1 via Hermitian eigenvalues
inline double trace_distance(const Mat& rho, const Mat& sigma) {
    Eigen::SelfAdjointEigenSolver<Mat> es(rho - sigma, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ---------- two-mode bookkeeping (mode 1 slow) ----------

inline SpMat kron_sp(const SpMat& A, const SpMat& B) {
    SpMat C(A.rows() * B.rows(), A.cols() * B.cols());
    std::vector<Eigen::Triplet<cx>> trips;
    trips.reserve(std::size_t(A.nonZeros()) * std::size_t(B.nonZeros()));
    for (int i = 0; i < A.outerSize(); ++i)
        for (SpMat::InnerIterator ita(A, i); ita; ++ita)
            for (int j = 0; j < B.outerSize(); ++j)
                for (SpMat::InnerIterator itb(B, j); itb; ++itb)
                    trips.emplace_back(int(ita.row()) * int(B.rows()) + int(itb.row()),
                                       int(ita.col()) * int(B.cols()) + int(itb.col()),
                                       ita.value() * itb.value());
    C.setFromTriplets(trips.begin(), trips.end());
    C.makeCompressed();
    return C;
}

inline SpMat dense_to_sparse(const Mat& M, double drop = 0.0) {
    SpMat S(M.rows(), M.cols());
    std::vector<Eigen::Triplet<cx>> trips;
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j)
            if (std::abs(M(i, j)) > drop) trips.emplace_back(i, j, M(i, j));
    S.setFromTriplets(trips.begin(), trips.end());
    S.makeCompressed();
    return S;
}

// single-mode operator embedded into the two-mode space (mode 1 slowest)
inline SpMat embed_mode1(const SpMat& op, int d2) { return kron_sp(op, identity_op(d2)); }
inline SpMat embed_mode2(int d1, const SpMat& op) { return kron_sp(identity_op(d1), op); }

inline Vec kron_vec(const Vec& v1, const Vec& v2) {
    Vec out(v1.size() * v2.size());
    for (int i = 0; i < v1.size(); ++i) out.segment(i * v2.size(), v2.size()) = v1[i] * v2;
    return out;
}

// view a two-mode vector as the d1 x d2 matrix Psi(i, m) (mode 1 = row)
inline Eigen::Map<const RMat> as_matrix(const Vec& psi, int d1, int d2) {
    if (psi.size() != Eigen::Index(d1) * d2) throw std::invalid_argument("as_matrix: size mismatch");
    return Eigen::Map<const RMat>(psi.data(), d1, d2);
}
inline Eigen::Map<RMat> as_matrix(Vec& psi, int d1, int d2) {
    if (psi.size() != Eigen::Index(d1) * d2) throw std::invalid_argument("as_matrix: size mismatch");
    return Eigen::Map<RMat>(psi.data(), d1, d2);
}

// mode-1 reduced density matrix: rho1 = Psi Psi^dag (this direction is safe)
inline Mat mode1_density(const Vec& psi, int d1, int d2) {
    auto P = as_matrix(psi, d1, d2);
    return Mat(P) * Mat(P).adjoint();
}

// mode-2 expectation <I (x) M> = sum_i row_i^dag M row_i  (rows are mode-2 kets)
inline cx mode2_expect(const Vec& psi, int d1, int d2, const Mat& M) {
    auto P = as_matrix(psi, d1, d2);
    cx s = 0;
    for (int i = 0; i < d1; ++i) s += P.row(i).conjugate().cwiseProduct((M * P.row(i).transpose()).transpose()).sum();
    return s;
}

// mode-2 photon distribution (column weights)
inline std::vector<double> mode2_number_dist(const Vec& psi, int d1, int d2) {
    auto P = as_matrix(psi, d1, d2);
    std::vector<double> p(d2, 0.0);
    for (int m = 0; m < d2; ++m) p[m] = P.col(m).squaredNorm();
    return p;
}

inline std::vector<double> mode1_number_dist(const Vec& psi, int d1, int d2) {
    auto P = as_matrix(psi, d1, d2);
    std::vector<double> p(d1, 0.0);
    for (int i = 0; i < d1; ++i) p[i] = P.row(i).squaredNorm();
    return p;
}

// fast ladder expectations on mode 2, avoiding dense matvecs:
// <b>, <b^2>, <b^dag b>  (b = optical lowering of mode 2)
struct LadderMoments {
    cx eb = 0, eb2 = 0;
    double ebdb = 0;
};

inline LadderMoments mode2_ladder_moments(const Vec& psi, int d1, int d2) {
    auto P = as_matrix(psi, d1, d2);
    LadderMoments lm;
    for (int i = 0; i < d1; ++i) {
        for (int m = 1; m < d2; ++m) lm.eb += std::conj(P(i, m - 1)) * std::sqrt(double(m)) * P(i, m);
        for (int m = 2; m < d2; ++m)
            lm.eb2 += std::conj(P(i, m - 2)) * std::sqrt(double(m) * double(m - 1)) * P(i, m);
        for (int m = 0; m < d2; ++m) lm.ebdb += double(m) * std::norm(P(i, m));
    }
    return lm;
}

inline LadderMoments mode1_ladder_moments(const Vec& psi, int d1, int d2) {
    auto P = as_matrix(psi, d1, d2);
    LadderMoments lm;
    for (int m = 0; m < d2; ++m) {
        for (int i = 1; i < d1; ++i) lm.eb += std::conj(P(i - 1, m)) * std::sqrt(double(i)) * P(i, m);
        for (int i = 2; i < d1; ++i)
            lm.eb2 += std::conj(P(i - 2, m)) * std::sqrt(double(i) * double(i - 1)) * P(i, m);
        for (int i = 0; i < d1; ++i) lm.ebdb += double(i) * std::norm(P(i, m));
    }
    return lm;
}

// population in the top `width` levels of each mode
struct Leakage {
    double mode1 = 0, mode2 = 0;
    double max() const { return std::max(mode1, mode2); }
};

inline Leakage leakage_tail(const Vec& psi, int d1, int d2, int width = 5) {
    auto P = as_matrix(psi, d1, d2);
    Leakage l;
    for (int i = std::max(0, d1 - width); i < d1; ++i) l.mode1 += P.row(i).squaredNorm();
    for (int m = std::max(0, d2 - width); m < d2; ++m) l.mode2 += P.col(m).squaredNorm();
    return l;
}

inline double leakage_tail_single(const Vec& psi, int width = 5) {
    double s = 0;
    for (int n = std::max<int>(0, int(psi.size()) - width); n < psi.size(); ++n) s += std::norm(psi[n]);
    return s;
}

}
