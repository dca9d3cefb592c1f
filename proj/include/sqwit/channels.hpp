#pragma once
// Single-mode channels: the displacement channel, zero-temperature pure loss
// (Kraus form and a small-dimension beam-splitter-ancilla reference form),
// and the seeded random-displacement source that produces the pulse train.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sqwit/expm.hpp"
#include "sqwit/fock.hpp"
#include "sqwit/interactions.hpp"
#include "sqwit/rng.hpp"

namespace sqwit {

struct LeakageError : std::runtime_error {
    double leakage;
    explicit LeakageError(double l)
        : std::runtime_error("truncation leakage above bound: " + std::to_string(l)), leakage(l) {}
};

// exp(alpha a^dag - alpha^* a) |psi>, guarded by the tail-leakage bound
inline Vec displace(const Vec& psi, cx alpha, double leakage_bound = 1e-6, int tail_width = 5) {
    if (alpha == cx(0.0, 0.0)) return psi;
    Vec out = expm_apply(displacement_generator(int(psi.size()), alpha), psi, 1.0,
                         {.renormalize = true});
    double leak = leakage_tail_single(out, tail_width);
    if (leak > leakage_bound) throw LeakageError(leak);
    return out;
}

// K_k = sum_n sqrt(C(n,k) (1-eta)^k eta^(n-k)) |n-k><n|, k = 0..d-1
inline std::vector<SpMat> loss_kraus(int d, double eta) {
    if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("loss_kraus: eta must be in (0,1]");
    std::vector<SpMat> ks;
    if (eta == 1.0) {
        ks.push_back(identity_op(d));
        return ks;
    }
    ks.reserve(d);
    double l1me = std::log1p(-eta);
    for (int k = 0; k < d; ++k) {
        SpMat K(d, d);
        std::vector<Eigen::Triplet<cx>> trip;
        for (int n = k; n < d; ++n) {
            double lg = 0.5 * (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                               std::lgamma(n - k + 1.0) + k * l1me + (n - k) * std::log(eta));
            trip.emplace_back(n - k, n, cx(std::exp(lg), 0.0));
        }
        K.setFromTriplets(trip.begin(), trip.end());
        ks.push_back(std::move(K));
    }
    return ks;
}

inline Mat pure_loss(const Mat& rho, double eta) {
    int d = int(rho.rows());
    if (eta == 1.0) return rho;
    Mat out = Mat::Zero(d, d);
    for (const SpMat& K : loss_kraus(d, eta)) out += K * rho * SpMat(K.adjoint());
    return out;
}

// photon-number distribution through the same channel (binomial thinning);
// cheap enough for per-pulse use
inline std::vector<double> thin_distribution(const std::vector<double>& p, double eta) {
    if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("thin_distribution: bad eta");
    int d = int(p.size());
    std::vector<double> out(d, 0.0);
    if (eta == 1.0) return p;
    // out[m] = sum_n p[n] C(n,m) eta^m (1-eta)^(n-m)
    for (int n = 0; n < d; ++n) {
        if (p[n] == 0.0) continue;
        double w = p[n] * std::pow(1.0 - eta, n);  // m = 0 term
        double ratio = eta / (1.0 - eta);
        for (int m = 0; m <= n; ++m) {
            out[m] += w;
            w *= ratio * double(n - m) / double(m + 1);
        }
    }
    return out;
}

// reference implementation: couple to a vacuum ancilla through a standard BS
// with cos^2(theta) = eta, then trace the ancilla out. Small dims only.
inline Mat bs_ancilla_loss(const Mat& rho, double eta) {
    int d = int(rho.rows());
    if (d > 31) throw std::invalid_argument("bs_ancilla_loss: reference path limited to n_max 30");
    if (!(eta > 0.0) || eta > 1.0) throw std::invalid_argument("bs_ancilla_loss: bad eta");
    double theta = std::acos(std::sqrt(eta));
    SpMat g = standard_bs_generator({theta, 0.0, BeamSplitterSpec::Variant::standard}, d, d);
    Eigen::SelfAdjointEigenSolver<Mat> es(rho);
    Mat out = Mat::Zero(d, d);
    Vec vac = fock_state(d, 0);
    for (int j = 0; j < d; ++j) {
        double w = es.eigenvalues()[j];
        if (w < 1e-14) continue;
        Vec two = bs_apply(g, theta, kron_vec(es.eigenvectors().col(j), vac));
        out += w * mode1_density(two, d, d);
    }
    return out;
}

// one pulse of the dynamical channel
struct ChannelDraw {
    std::int64_t index = 0;
    cx alpha;   // random displacement of the copy
    double r = 0.0;  // squeezing magnitude along the configured axis
};

struct SourceConfig {
    cx alpha_mean{1.0, 0.0};
    double alpha_sigma = 0.5;  // per-quadrature std of the complex Gaussian
    double r_min = 0.3, r_max = 0.5;  // uniform law for the squeezing magnitude
    double squeeze_phase = 0.0;       // common axis arg(xi) of every copy
    // draws with |alpha| beyond this are re-drawn so downstream truncation
    // stays inside the leakage bound; <= 0 picks |alpha_mean| + 8 sigma
    double max_abs_alpha = 0.0;

    double clamp() const {
        return max_abs_alpha > 0.0 ? max_abs_alpha : std::abs(alpha_mean) + 8.0 * alpha_sigma;
    }
    void validate() const {
        if (alpha_sigma < 0) throw std::invalid_argument("source: alpha_sigma must be >= 0");
        if (r_min > r_max) throw std::invalid_argument("source: r_min above r_max");
        if (r_min < 0) throw std::invalid_argument("source: negative squeezing magnitude");
    }
};

// deterministic function of (master_seed, index); draws are independent
// across indices so workers can generate them in any order
inline ChannelDraw draw_pulse(const SourceConfig& cfg, std::uint64_t master_seed,
                              std::int64_t index) {
    cfg.validate();
    PulseRng rng(master_seed, std::uint64_t(index));
    ChannelDraw d;
    d.index = index;
    double cl = cfg.clamp();
    for (int tries = 0; tries < 100; ++tries) {
        d.alpha = cfg.alpha_mean + cfg.alpha_sigma * cx(rng.normal(), rng.normal());
        if (std::abs(d.alpha) <= cl) break;
    }
    if (std::abs(d.alpha) > cl) d.alpha = cfg.alpha_mean;
    d.r = cfg.r_min + (cfg.r_max - cfg.r_min) * rng.uniform();
    return d;
}

inline std::vector<ChannelDraw> draw_pulses(const SourceConfig& cfg, std::int64_t count,
                                            std::uint64_t master_seed, std::int64_t start = 0) {
    if (count < 1) throw std::invalid_argument("draw_pulses: count must be >= 1");
    std::vector<ChannelDraw> out;
    out.reserve(std::size_t(count));
    for (std::int64_t i = 0; i < count; ++i) out.push_back(draw_pulse(cfg, master_seed, start + i));
    return out;
}

}  // namespace sqwit
