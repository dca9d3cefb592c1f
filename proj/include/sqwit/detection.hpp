#pragma once
// Second-order coherence toolbox: operator-level g2(0) and Fano factors,
// Monte Carlo HBT click sampling, pulse-indexed g2(tau) histograms, the
// aggregate and copy-by-copy estimators, post-selection, and the
// attenuate-then-SPD measurement path.
//
// Copy-by-copy normalization: the per-copy estimator divides by the copy's
// recorded expected intensity (known exactly in simulation and carried on
// the ClickRecord), which makes the estimator unbiased shot by shot. When a
// record carries no expected intensity the measured total is used instead,
// which is the small-sample-biased fallback and is flagged in the result.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sqwit/channels.hpp"
#include "sqwit/fock.hpp"
#include "sqwit/rng.hpp"

namespace sqwit {

// ---------------------------------------------------------------- operator level

inline double g2_from_dist(const std::vector<double>& p) {
    double norm = 0.0, en = 0.0, efac = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        norm += p[n];
        en += double(n) * p[n];
        efac += double(n) * (double(n) - 1.0) * p[n];
    }
    if (en <= 0.0) throw std::domain_error("g2: zero mean photon number");
    return efac * norm / (en * en);
}

inline double fano_from_dist(const std::vector<double>& p) {
    NumberMoments m = number_moments(p);
    if (m.mean <= 0.0) throw std::domain_error("fano: zero mean photon number");
    return m.var() / m.mean;
}

inline double g2_operator(const Vec& psi) { return g2_from_dist(number_dist(psi)); }
inline double fano(const Vec& psi) { return fano_from_dist(number_dist(psi)); }

inline double g2_operator(const Mat& rho) { return g2_from_dist(number_dist(rho)); }
inline double fano(const Mat& rho) { return fano_from_dist(number_dist(rho)); }

// two-mode convenience: mode is 1 or 2
inline double g2_mode(const Vec& psi, int d1, int d2, int mode) {
    return g2_from_dist(mode == 1 ? mode1_number_dist(psi, d1, d2)
                                  : mode2_number_dist(psi, d1, d2));
}
inline double fano_mode(const Vec& psi, int d1, int d2, int mode) {
    return fano_from_dist(mode == 1 ? mode1_number_dist(psi, d1, d2)
                                    : mode2_number_dist(psi, d1, d2));
}

// ---------------------------------------------------------------- click sampling

struct DetectorConfig {
    enum class Kind { nrpd, spd };
    Kind kind = Kind::nrpd;
    double efficiency = 1.0;
    int ceiling = 20;        // NRPD resolving ceiling per detector
    double dark_rate = 0.0;  // Poisson dark counts per detector per pulse
};

struct ClickRecord {
    std::int64_t index = 0;
    int n1 = 0, n2 = 0;
    // expected total detected intensity of this copy (efficiency applied);
    // NaN when unknown, in which case estimators fall back to measured totals
    double expected_mean = std::numeric_limits<double>::quiet_NaN();
    bool spd = false;
    int total() const { return n1 + n2; }
};

// n ~ P(n), Bernoulli thinning by efficiency, binomial 50/50 split, dark
// counts, then the detector response (exact counts up to the NRPD ceiling,
// or clipping to {0,1} for SPD)
inline ClickRecord sample_counts(const std::vector<double>& pn, const DetectorConfig& det,
                                 PulseRng& rng, std::int64_t index = 0) {
    std::vector<double> cdf(pn.size());
    double acc = 0.0;
    for (std::size_t n = 0; n < pn.size(); ++n) cdf[n] = (acc += pn[n]);
    long n = rng.pick_cumulative(cdf);
    long kept = rng.binomial(n, det.efficiency);
    long a = rng.binomial(kept, 0.5);
    long b = kept - a;
    if (det.dark_rate > 0.0) {
        a += rng.poisson(det.dark_rate);
        b += rng.poisson(det.dark_rate);
    }
    ClickRecord rec;
    rec.index = index;
    if (det.kind == DetectorConfig::Kind::spd) {
        rec.n1 = a > 0 ? 1 : 0;
        rec.n2 = b > 0 ? 1 : 0;
        rec.spd = true;
    } else {
        rec.n1 = int(std::min<long>(a, det.ceiling));
        rec.n2 = int(std::min<long>(b, det.ceiling));
    }
    double mean = 0.0;
    for (std::size_t m = 0; m < pn.size(); ++m) mean += double(m) * pn[m];
    rec.expected_mean = det.efficiency * mean / acc + 2.0 * det.dark_rate;
    return rec;
}

// ---------------------------------------------------------------- estimators

struct CopyMoments {
    double fac2 = 0.0;  // <n(n-1)> of the copy
    double mean = 0.0;  // <n> of the copy
};

struct CopyG2 {
    double value = 0.0;
    long included = 0;
    long excluded = 0;  // zero-intensity copies dropped (warning condition)
    bool measured_normalization = false;
};

inline CopyG2 copy_by_copy_g2(const std::vector<CopyMoments>& copies) {
    CopyG2 out;
    double acc = 0.0;
    for (const CopyMoments& c : copies) {
        if (c.mean <= 0.0) {
            ++out.excluded;
            continue;
        }
        acc += c.fac2 / (c.mean * c.mean);
        ++out.included;
    }
    if (out.included == 0) throw std::domain_error("copy_by_copy_g2: no copies with intensity");
    out.value = acc / double(out.included);
    return out;
}

inline double aggregate_g2(const std::vector<CopyMoments>& copies) {
    if (copies.empty()) throw std::domain_error("aggregate_g2: empty input");
    double fac = 0.0, mean = 0.0;
    for (const CopyMoments& c : copies) {
        fac += c.fac2;
        mean += c.mean;
    }
    fac /= double(copies.size());
    mean /= double(copies.size());
    if (mean <= 0.0) throw std::domain_error("aggregate_g2: zero mean");
    return fac / (mean * mean);
}

// per-copy coincidence term: NRPD uses t(t-1), SPD uses 4 n1 n2 (dilute regime)
inline double click_fac2(const ClickRecord& r) {
    if (r.spd) return 4.0 * double(r.n1) * double(r.n2);
    double t = double(r.total());
    return t * (t - 1.0);
}

inline CopyG2 copy_by_copy_g2(const std::vector<ClickRecord>& recs) {
    CopyG2 out;
    double acc = 0.0;
    for (const ClickRecord& r : recs) {
        double nbar = r.expected_mean;
        if (!std::isfinite(nbar)) {
            nbar = double(r.total());
            out.measured_normalization = true;
        }
        if (nbar <= 0.0) {
            ++out.excluded;
            continue;
        }
        acc += click_fac2(r) / (nbar * nbar);
        ++out.included;
    }
    if (out.included == 0) throw std::domain_error("copy_by_copy_g2: no copies with intensity");
    out.value = acc / double(out.included);
    return out;
}

inline double aggregate_g2(const std::vector<ClickRecord>& recs) {
    if (recs.empty()) throw std::domain_error("aggregate_g2: empty input");
    double fac = 0.0, mean = 0.0;
    for (const ClickRecord& r : recs) {
        fac += click_fac2(r);
        mean += double(r.total());
    }
    fac /= double(recs.size());
    mean /= double(recs.size());
    if (mean <= 0.0) throw std::domain_error("aggregate_g2: zero mean");
    return fac / (mean * mean);
}

struct EstimateSE {
    double value = 0.0;
    double se = 0.0;
};

// copy-resampling bootstrap of the copy-by-copy estimator
inline EstimateSE bootstrap_copy_g2(const std::vector<ClickRecord>& recs, int replicas = 200,
                                    std::uint64_t seed = 1) {
    EstimateSE out;
    out.value = copy_by_copy_g2(recs).value;
    double acc = 0.0, acc2 = 0.0;
    std::size_t n = recs.size();
    std::vector<ClickRecord> shadow(n);
    for (int rep = 0; rep < replicas; ++rep) {
        PulseRng rng(seed, std::uint64_t(rep) + 0x626f6f74ULL);
        for (std::size_t i = 0; i < n; ++i)
            shadow[i] = recs[std::size_t(rng.uniform() * double(n))];
        double v = copy_by_copy_g2(shadow).value;
        acc += v;
        acc2 += v * v;
    }
    acc /= replicas;
    acc2 /= replicas;
    out.se = std::sqrt(std::max(0.0, acc2 - acc * acc));
    return out;
}

// ---------------------------------------------------------------- histogram

struct Histogram {
    std::vector<long> lag;            // in pulse periods
    std::vector<double> coincidences; // C(tau) summed over the train
    std::vector<long> pairs;          // index pairs contributing per lag
    std::vector<double> g2;           // C/(S1 S2) per pair, pulse units
    std::vector<double> se;           // counting-statistics error bars
    double s1 = 0.0, s2 = 0.0;        // mean singles per pulse per detector
    long pulses = 0;
};

// tau = 0 from same-pulse products across the two detectors, tau = k T_pulse
// from cross-pulse products; normalization C/(S1 S2 dtau T) with dtau and T
// expressed in pulse units, so the accidental rate per pair is just s1*s2
inline Histogram build_histogram(const std::vector<ClickRecord>& recs, int max_lag) {
    long n = long(recs.size());
    if (n < 2) throw std::invalid_argument("build_histogram: need at least 2 pulses");
    if (max_lag < 0 || max_lag >= n)
        throw std::invalid_argument("build_histogram: lag range inconsistent with pulse count");
    Histogram h;
    h.pulses = n;
    for (const ClickRecord& r : recs) {
        h.s1 += r.n1;
        h.s2 += r.n2;
    }
    h.s1 /= double(n);
    h.s2 /= double(n);
    if (h.s1 <= 0.0 || h.s2 <= 0.0)
        throw std::domain_error("build_histogram: a detector saw no counts");
    for (int k = 0; k <= max_lag; ++k) {
        double c = 0.0;
        for (long i = 0; i + k < n; ++i) c += double(recs[i].n1) * double(recs[i + k].n2);
        long pairs = n - k;
        h.lag.push_back(k);
        h.coincidences.push_back(c);
        h.pairs.push_back(pairs);
        double denom = double(pairs) * h.s1 * h.s2;
        h.g2.push_back(c / denom);
        h.se.push_back(std::sqrt(std::max(c, 1.0)) / denom);
    }
    return h;
}

// pulse-resampling bootstrap of the same-pulse histogram bin
inline EstimateSE bootstrap_histogram_zero(const std::vector<ClickRecord>& recs,
                                           int replicas = 200, std::uint64_t seed = 1) {
    long n = long(recs.size());
    if (n < 2) throw std::invalid_argument("bootstrap_histogram_zero: need at least 2 pulses");
    auto zero_bin = [](const std::vector<ClickRecord>& rs) {
        double c = 0.0, s1 = 0.0, s2 = 0.0;
        for (const ClickRecord& r : rs) {
            c += double(r.n1) * double(r.n2);
            s1 += r.n1;
            s2 += r.n2;
        }
        double m = double(rs.size());
        return (c / m) / ((s1 / m) * (s2 / m));
    };
    EstimateSE out;
    out.value = zero_bin(recs);
    double acc = 0.0, acc2 = 0.0;
    std::vector<ClickRecord> shadow(recs.size());
    for (int rep = 0; rep < replicas; ++rep) {
        PulseRng rng(seed, std::uint64_t(rep) + 0x68697374ULL);
        for (long i = 0; i < n; ++i)
            shadow[std::size_t(i)] = recs[std::size_t(rng.uniform() * double(n))];
        double v = zero_bin(shadow);
        acc += v;
        acc2 += v * v;
    }
    acc /= replicas;
    acc2 /= replicas;
    out.se = std::sqrt(std::max(0.0, acc2 - acc * acc));
    return out;
}

// ---------------------------------------------------------------- post-selection

struct PostSelection {
    std::vector<ClickRecord> kept;
    double survival = 0.0;
    double median = 0.0;
};

// keeps copies whose measured total lies in [median (1-w), median (1+w)]
inline PostSelection post_select(const std::vector<ClickRecord>& recs, double w) {
    if (!(w > 0.0) || !(w < 1.0)) throw std::invalid_argument("post_select: window must be in (0,1)");
    if (recs.empty()) throw std::invalid_argument("post_select: empty input");
    std::vector<double> totals(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) totals[i] = double(recs[i].total());
    std::vector<double> sorted = totals;
    std::nth_element(sorted.begin(), sorted.begin() + long(sorted.size() / 2), sorted.end());
    double med = sorted[sorted.size() / 2];
    PostSelection out;
    out.median = med;
    for (std::size_t i = 0; i < recs.size(); ++i)
        if (totals[i] >= med * (1.0 - w) && totals[i] <= med * (1.0 + w))
            out.kept.push_back(recs[i]);
    if (out.kept.empty()) throw std::domain_error("post_select: empty survivor set");
    out.survival = double(out.kept.size()) / double(recs.size());
    return out;
}

// ---------------------------------------------------------------- method 3

struct AttenuationResult {
    std::vector<double> dist;  // photon-number distribution of rho_b''
    double eta = 1.0;
    double g2_before = 0.0, g2_after = 0.0;
};

// attenuate to the SPD-friendly working point; g2 must come out unchanged
inline AttenuationResult method3_attenuate(const std::vector<double>& pn,
                                           double target_mean = 0.1) {
    double mean = number_moments(pn).mean;
    if (target_mean > mean)
        throw std::invalid_argument("method3_attenuate: target above current mean");
    AttenuationResult out;
    out.eta = target_mean / mean;
    out.g2_before = g2_from_dist(pn);
    out.dist = thin_distribution(pn, out.eta);
    out.g2_after = g2_from_dist(out.dist);
    if (std::abs(out.g2_after - out.g2_before) > 1e-8)
        throw std::logic_error("method3_attenuate: attenuation moved g2");
    return out;
}

}  // namespace sqwit
