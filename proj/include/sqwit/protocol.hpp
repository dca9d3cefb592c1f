#pragma once

// Orchestration of the full measurement chain: a source of randomly displaced
// squeezed copies, the common drive displacement, the number-phase
// beam-splitter conversion, the counter-displacement that brings the output
// down to a countable level, optional attenuation, and click detection.
//
// Two evaluation paths produce the same pulse records:
//
//   run_pulse_naive  propagates every copy at the full configured dimensions.
//   run_pulse        propagates in a co-moving frame. All copies differ from
//                    the centre copy D(A)S(r_bar)|0> only by a small relative
//                    displacement and squeeze, so the conversion unitary needs
//                    to be solved once per frame basis vector (kernel_dim1
//                    columns) instead of once per pulse. The output is then
//                    displaced back by the centre-copy mode-1 mean and the
//                    negligible top rows are dropped, which keeps the
//                    per-pulse work at a few dense row-block products.
//
// The fast path is exact up to truncation mass that is measured and recorded
// as leakage on every pulse; a test pins both paths against each other.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "sqwit/channels.hpp"
#include "sqwit/detection.hpp"
#include "sqwit/expm.hpp"
#include "sqwit/fock.hpp"
#include "sqwit/interactions.hpp"
#include "sqwit/numberphase.hpp"
#include "sqwit/rng.hpp"

namespace sqwit {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct GuardThresholds {
    double min_occupation = 20.0;  // mode-2 mean photon number floor
    double commutator_tol = 1e-2;  // allowed |<[n,Phi]> - i|
    double leakage_bound = 1e-6;   // allowed truncation mass per mode
};

// One protocol run. `alpha` is the large drive displacement shared by every
// copy; per-copy randomness comes from `source`. `port_amplitude` is the
// coherent amplitude of the mode-2 reference field, which freezes
// gamma0 = 2<n> for the number-phase mode.
struct ProtocolConfig {
    int n_max1 = 40;
    int n_max2 = 115;
    cx alpha{2.0, 0.0};
    double theta = 1.2;
    double phi = 0.0;
    cx port_amplitude{std::sqrt(40.0), 0.0};
    double n_target = 1.0;                 // mean photons after counter-displacement
    std::string method = "attenuate_spd";  // nrpd | postselect | attenuate_spd
    double target_mean = 0.1;              // working point after attenuation
    double eta_att = 0.0;                  // explicit attenuation; 0 derives it from target_mean
    double window = 0.2;                   // post-selection half-width
    std::int64_t pulses = 1000;
    std::uint64_t master_seed = 1;
    bool per_copy_counter = false;  // recompute alpha' for every copy instead of once
    int kernel_dim1 = 14;           // frame basis size of the fast path
    SourceConfig source{cx{0.1, 0.0}, 0.025, 0.25, 0.45};
    GuardThresholds guard;
    DetectorConfig detector;

    double gamma0() const { return 2.0 * std::norm(port_amplitude); }
    void validate() const;
};

inline void ProtocolConfig::validate() const {
    if (n_max1 < 2 || n_max2 < 2) throw ConfigError("protocol: mode dimensions must be at least 2");
    if (kernel_dim1 < 2 || kernel_dim1 > n_max1)
        throw ConfigError("protocol: kernel_dim1 must lie in [2, n_max1]");
    if (!(theta >= 0)) throw ConfigError("protocol: theta must be non-negative");
    if (!(std::norm(port_amplitude) > 0)) throw ConfigError("protocol: port amplitude must be nonzero");
    if (!(n_target > 0)) throw ConfigError("protocol: n_target must be positive");
    if (!(target_mean > 0)) throw ConfigError("protocol: target mean must be positive");
    if (eta_att < 0 || eta_att > 1) throw ConfigError("protocol: eta_att must lie in [0, 1]");
    if (detector.efficiency < 0 || detector.efficiency > 1)
        throw ConfigError("protocol: detector efficiency must lie in [0, 1]");
    if (detector.ceiling < 1) throw ConfigError("protocol: detector ceiling must be positive");
    if (detector.dark_rate < 0) throw ConfigError("protocol: detector dark rate must be non-negative");
    if (method != "nrpd" && method != "postselect" && method != "attenuate_spd")
        throw ConfigError("protocol: unknown method '" + method + "'");
    if (method == "postselect" && !(window > 0 && window < 1))
        throw ConfigError("protocol: post-selection window must lie in (0, 1)");
    if ((method == "nrpd" || method == "postselect") && detector.kind != DetectorConfig::Kind::nrpd)
        throw ConfigError("protocol: methods nrpd and postselect require a number-resolving detector");
    if (pulses < 1) throw ConfigError("protocol: pulse count must be positive");
    source.validate();
    double copy_power = std::norm(source.alpha_mean) + 2.0 * source.alpha_sigma * source.alpha_sigma;
    if (std::norm(alpha) < 25.0 * copy_power)
        throw ConfigError("protocol: drive must dominate copy fluctuations (|alpha|^2 >= 25 E|alpha_i|^2)");
}

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct StageRecord {
    std::string stage;  // t, a, b, b_prime, b_dprime
    double mean_n = kUnset;
    double fano = kUnset;
    double g2 = kUnset;
    double vmin1 = kUnset;
    double leakage = kUnset;
    double commutator_dev = kUnset;
};

struct PulseRecord {
    std::int64_t index = 0;
    cx alpha_i{};
    double r_i = 0;
    std::vector<StageRecord> stages;
    ClickRecord clicks{};
    bool detected = false;
    bool postselected = false;
    bool guard_failed = false;
    bool leakage_failed = false;
    std::string flag;

    const StageRecord& stage(const std::string& name) const {
        for (const auto& s : stages)
            if (s.stage == name) return s;
        throw std::out_of_range("pulse record has no stage '" + name + "'");
    }
};

struct GuardReport {
    bool pass = true;
    bool occupation_ok = true;
    bool commutator_ok = true;
    bool leakage_ok = true;
    double mean_n2 = 0;
    double commutator_dev = 0;
    double leakage = 0;
    std::string reason;
};

struct GuardError : std::runtime_error {
    GuardReport report;
    GuardError(const std::string& what, GuardReport r) : std::runtime_error(what), report(std::move(r)) {}
};

// Checks that the joint state still supports the number-phase description:
// enough mode-2 occupation, a commutator expectation close to i, and no
// significant truncation mass. `comm` is the precomputed [n, Phi] matrix.
inline GuardReport validity_guard(const Vec& psi, int d1, int d2, const Mat& comm,
                                  const GuardThresholds& thr, double extra_leakage = 0.0) {
    GuardReport g;
    g.mean_n2 = number_moments(mode2_number_dist(psi, d1, d2)).mean;
    g.commutator_dev = std::abs(mode2_expect(psi, d1, d2, comm) - I_UNIT);
    g.leakage = leakage_tail(psi, d1, d2).max() + extra_leakage;
    g.occupation_ok = g.mean_n2 >= thr.min_occupation;
    g.commutator_ok = g.commutator_dev <= thr.commutator_tol;
    g.leakage_ok = g.leakage <= thr.leakage_bound;
    g.pass = g.occupation_ok && g.commutator_ok && g.leakage_ok;
    if (!g.occupation_ok)
        g.reason = "mode-2 occupation below the guard floor";
    else if (!g.commutator_ok)
        g.reason = "number-phase commutator residual above tolerance";
    else if (!g.leakage_ok)
        g.reason = "truncation leakage above bound";
    return g;
}

// alpha' that moves the coherent amplitude onto sqrt(n_target) along its own
// phase, leaving the centred fluctuations untouched.
inline cx counter_displacement_amplitude(cx eb, double n_target, double mean_n) {
    if (!(n_target > 0)) throw std::invalid_argument("counter displacement: target must be positive");
    if (n_target - mean_n > 1e-9 * std::max(1.0, mean_n))
        throw std::invalid_argument("counter displacement: target lies above the achievable mean");
    double mag = std::abs(eb);
    cx dir = mag > 0 ? eb / mag : cx{1.0, 0.0};
    return (std::sqrt(n_target) - mag) * dir;
}

struct CounterDisplacement {
    cx alpha_prime{};
    double achieved_mean = 0;
    Vec state;
};

// Single-mode reference implementation: displace psi so that its mean photon
// number comes down to n_target.
inline CounterDisplacement choose_counter_displacement(const Vec& psi, double n_target) {
    int d = int(psi.size());
    cx eb = 0;
    for (int n = 1; n < d; ++n) eb += std::conj(psi[n - 1]) * std::sqrt(double(n)) * psi[n];
    CounterDisplacement out;
    out.alpha_prime = counter_displacement_amplitude(eb, n_target, mean_n(psi));
    out.state = expm_apply(displacement_generator(d, out.alpha_prime), psi, cx(1.0, 0.0),
                           {.renormalize = true});
    out.achieved_mean = mean_n(out.state);
    return out;
}

struct EnsembleSummary {
    std::int64_t pulses = 0;
    std::int64_t included = 0;
    std::int64_t guard_trips = 0;
    std::int64_t leakage_trips = 0;
    std::int64_t excluded_zero = 0;
    double survival = 1.0;
    cx alpha_prime{};
    double eta = 1.0;
    double rel_fluct_t = kUnset;       // std/mean of per-copy mean photon number
    double rel_fluct_a = kUnset;
    double rel_fluct_bprime = kUnset;
    double mean_detected = kUnset;     // ensemble mean at the detected stage
    double op_copy_g2 = kUnset;        // operator-level estimators at the detected stage
    double op_aggregate_g2 = kUnset;
    double copy_g2 = kUnset;           // click-level estimators
    double copy_se = kUnset;
    double aggregate_g2 = kUnset;
    double hist_g2 = kUnset;           // same-pulse histogram bin
    double hist_se = kUnset;
};

struct EnsembleResult {
    std::vector<PulseRecord> records;
    EnsembleSummary summary;
    Histogram histogram;  // same-train click histogram over the included copies
};

class ProtocolEngine {
public:
    explicit ProtocolEngine(ProtocolConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        gamma0_ = cfg_.gamma0();
        phi2_ = pegg_barnett_phi(cfg_.n_max2);
        mode2_ = bn_mode(phi2_, gamma0_);
        comm2_ = nphi_commutator(phi2_.phi);
        port_ = coherent_state(cfg_.n_max2, cfg_.port_amplitude);
        frame_amp_ = cfg_.alpha + cfg_.source.alpha_mean;
        frame_r_ = 0.5 * (cfg_.source.r_min + cfg_.source.r_max);
        frame_axis_ = std::polar(1.0, cfg_.source.squeeze_phase);
        converter_ = bn_bs_generator({cfg_.theta, cfg_.phi, BeamSplitterSpec::Variant::number_phase},
                                     cfg_.n_max1, mode2_);
        preflight_();
    }

    const ProtocolConfig& config() const { return cfg_; }
    double gamma0() const { return gamma0_; }
    cx alpha_prime() const { return alpha_prime_; }
    double attenuation() const { return eta_; }
    const NumberPhaseMode& port_mode() const { return mode2_; }
    const Mat& commutator_matrix() const { return comm2_; }

    PulseRecord run_pulse(const ChannelDraw& draw) const {
        ensure_kernel_();
        PulseRecord rec = front_stages_(draw);
        Vec jb = ltilde_ * tilde_input_(draw);
        double trunc = std::max(0.0, 1.0 - jb.squaredNorm());
        jb.normalize();
        double vmin1 = frame_quad_(mode1_ladder_moments(jb, dtout_, cfg_.n_max2)).vmin();
        finish_pulse_(rec, std::move(jb), dtout_, vmin1, trunc, draw);
        return rec;
    }

    PulseRecord run_pulse_naive(const ChannelDraw& draw) const {
        PulseRecord rec = front_stages_(draw);
        cx xi = draw.r * frame_axis_;
        Vec joint = kron_vec(displaced_squeezed_state(cfg_.n_max1, cfg_.alpha + draw.alpha, xi), port_);
        Vec jb = bs_apply(converter_, cfg_.theta, joint, {.renormalize = true});
        auto lm = mode1_ladder_moments(jb, cfg_.n_max1, cfg_.n_max2);
        double vmin1 = quad_stats(lm.eb, lm.eb2, lm.ebdb).vmin();
        finish_pulse_(rec, std::move(jb), cfg_.n_max1, vmin1, 0.0, draw);
        return rec;
    }

    EnsembleResult run_ensemble() const {
        EnsembleResult out;
        out.summary.pulses = cfg_.pulses;
        out.summary.alpha_prime = alpha_prime_;
        out.summary.eta = eta_;
        out.records.reserve(std::size_t(cfg_.pulses));
        auto draws = draw_pulses(cfg_.source, cfg_.pulses, cfg_.master_seed);
        std::vector<double> mt, ma, mbp;
        std::vector<ClickRecord> clicks;
        std::vector<CopyMoments> op;
        for (const auto& d : draws) {
            PulseRecord rec = run_pulse(d);
            if (rec.guard_failed) ++out.summary.guard_trips;
            if (rec.leakage_failed) ++out.summary.leakage_trips;
            if (rec.detected) {
                mt.push_back(rec.stage("t").mean_n);
                ma.push_back(rec.stage("a").mean_n);
                mbp.push_back(rec.stage("b_prime").mean_n);
                const StageRecord& det = rec.stages.back();
                op.push_back({det.mean_n * (det.fano - 1.0 + det.mean_n), det.mean_n});
                clicks.push_back(rec.clicks);
            }
            out.records.push_back(std::move(rec));
        }
        out.summary.included = std::int64_t(clicks.size());
        out.summary.rel_fluct_t = rel_fluct_(mt);
        out.summary.rel_fluct_a = rel_fluct_(ma);
        out.summary.rel_fluct_bprime = rel_fluct_(mbp);
        if (clicks.empty()) return out;

        if (cfg_.method == "postselect") {
            auto ps = post_select(clicks, cfg_.window);
            out.summary.survival = ps.survival;
            std::vector<std::int64_t> kept;
            kept.reserve(ps.kept.size());
            for (const auto& c : ps.kept) kept.push_back(c.index);
            std::sort(kept.begin(), kept.end());
            for (auto& rec : out.records)
                if (rec.detected && std::binary_search(kept.begin(), kept.end(), rec.index))
                    rec.postselected = true;
            clicks = ps.kept;
        }
        double mean_sum = 0;
        for (const auto& m : op) mean_sum += m.mean;
        out.summary.mean_detected = mean_sum / double(op.size());
        auto opc = copy_by_copy_g2(op);
        out.summary.op_copy_g2 = opc.value;
        out.summary.op_aggregate_g2 = aggregate_g2(op);
        try {
            auto cg = copy_by_copy_g2(clicks);
            out.summary.copy_g2 = cg.value;
            out.summary.excluded_zero = cg.excluded;
            out.summary.copy_se = bootstrap_copy_g2(clicks, 200, cfg_.master_seed).se;
            out.summary.aggregate_g2 = aggregate_g2(clicks);
        } catch (const std::domain_error&) {
            // all copies registered zero intensity; estimators stay unset
        }
        if (clicks.size() >= 2) {
            out.histogram = build_histogram(clicks, std::min<int>(5, int(clicks.size()) - 1));
            out.summary.hist_g2 = out.histogram.g2[0];
            out.summary.hist_se = bootstrap_histogram_zero(clicks, 200, cfg_.master_seed).se;
        }
        return out;
    }

private:
    static constexpr std::uint64_t kClickSalt = 0x636c69636b730000ull;

    ProtocolConfig cfg_;
    double gamma0_ = 0;
    PhaseOperator phi2_;
    NumberPhaseMode mode2_;
    Mat comm2_;
    Vec port_;
    SpMat converter_;
    cx frame_amp_{};
    double frame_r_ = 0;
    cx frame_axis_{1.0, 0.0};
    cx alpha_prime_{};
    RMat disp2t_;  // transpose of the dense mode-2 counter-displacement
    double eta_ = 1.0;
    double centre_bprime_mean_ = 0;
    mutable bool kernel_ready_ = false;
    mutable int dtout_ = 0;
    mutable cx kernel_amp_{};  // mode-1 mean removed from the stored kernel columns
    mutable Mat ltilde_;

    void preflight_() {
        // centre copy fixes alpha', the attenuation working point, and must
        // itself clear the validity guard
        Vec centre_in = kron_vec(
            displaced_squeezed_state(cfg_.n_max1, frame_amp_, frame_r_ * frame_axis_), port_);
        Vec cb = bs_apply(converter_, cfg_.theta, centre_in, {.renormalize = true});
        GuardReport g = validity_guard(cb, cfg_.n_max1, cfg_.n_max2, comm2_, cfg_.guard);
        if (!g.pass) throw GuardError("protocol: centre copy failed the validity guard: " + g.reason, g);
        auto lm = mode2_ladder_moments(cb, cfg_.n_max1, cfg_.n_max2);
        double mean_b = number_moments(mode2_number_dist(cb, cfg_.n_max1, cfg_.n_max2)).mean;
        alpha_prime_ = counter_displacement_amplitude(lm.eb, cfg_.n_target, mean_b);
        Mat dgen = Mat(displacement_generator(cfg_.n_max2, alpha_prime_));
        disp2t_ = RMat(Mat(dgen.exp()).transpose());
        Vec cbp = apply_mode2_(cb, cfg_.n_max1, disp2t_);
        centre_bprime_mean_ = number_moments(mode2_number_dist(cbp, cfg_.n_max1, cfg_.n_max2)).mean;
        if (cfg_.method == "attenuate_spd") {
            if (cfg_.eta_att > 0) {
                eta_ = cfg_.eta_att;
            } else {
                if (centre_bprime_mean_ <= cfg_.target_mean)
                    throw ConfigError("protocol: attenuation target lies above the delivered mean");
                eta_ = cfg_.target_mean / centre_bprime_mean_;
            }
        }
    }

    // Solves the conversion once per frame basis vector and re-expresses the
    // results in the output frame (mode 1 displaced back by its centre-copy
    // mean, negligible top rows dropped).
    void ensure_kernel_() const {
        if (kernel_ready_) return;
        int d1 = cfg_.n_max1, d2 = cfg_.n_max2, kin = cfg_.kernel_dim1;
        SpMat sq = squeeze_generator(d1, frame_r_ * frame_axis_);
        SpMat dp = displacement_generator(d1, frame_amp_);
        std::vector<Vec> cols(static_cast<std::size_t>(kin));
        for (int j = 0; j < kin; ++j) {
            Vec vj = expm_apply(dp, expm_apply(sq, fock_state(d1, j)));
            cols[std::size_t(j)] = bs_apply(converter_, cfg_.theta, kron_vec(vj, port_));
        }
        cx mu = mode1_ladder_moments(cols[0], d1, d2).eb;
        SpMat undo = embed_mode1(displacement_generator(d1, -mu), d2);
        for (auto& c : cols) c = expm_apply(undo, c);
        int cut = std::min(d1, 8);
        for (int j = 0; j < kin; ++j) {
            auto P = as_matrix(cols[std::size_t(j)], d1, d2);
            double acc = 0;
            for (int r = d1 - 1; r >= cut; --r) {
                acc += P.row(r).squaredNorm();
                if (acc > 1e-13) {
                    cut = std::max(cut, r + 1);
                    break;
                }
            }
        }
        dtout_ = std::min(d1, cut);
        ltilde_.resize(Eigen::Index(dtout_) * d2, kin);
        for (int j = 0; j < kin; ++j)
            ltilde_.col(j) =
                Eigen::Map<const Vec>(cols[std::size_t(j)].data(), Eigen::Index(dtout_) * d2);
        kernel_amp_ = mu;
        kernel_ready_ = true;
    }

    // relative copy in the frame: V^dag D(alpha + alpha_i) S(xi_i) |0> is a
    // displaced squeezed state with small parameters (same squeeze axis)
    Vec tilde_input_(const ChannelDraw& draw) const {
        cx delta = draw.alpha - cfg_.source.alpha_mean;
        double c = std::cosh(frame_r_), s = std::sinh(frame_r_);
        cx dtil = c * delta + std::conj(frame_axis_) * s * std::conj(delta);
        return displaced_squeezed_state(cfg_.kernel_dim1, dtil, (draw.r - frame_r_) * frame_axis_);
    }

    // mode-1 quadrature statistics transported out of the output frame: the
    // kernel columns are physical output states shifted by D(-mu) on mode 1
    // only, so a_phys = a + mu on the stored states
    QuadStats frame_quad_(const LadderMoments& m) const {
        cx mu = kernel_amp_;
        cx ea = m.eb + mu;
        cx ea2 = m.eb2 + 2.0 * mu * m.eb + mu * mu;
        double eada = m.ebdb + 2.0 * (std::conj(mu) * m.eb).real() + std::norm(mu);
        return quad_stats(ea, ea2, eada);
    }

    PulseRecord front_stages_(const ChannelDraw& draw) const {
        PulseRecord rec;
        rec.index = draw.index;
        rec.alpha_i = draw.alpha;
        rec.r_i = draw.r;
        cx xi = draw.r * frame_axis_;
        rec.stages.push_back(stage_single_("t", displaced_squeezed_state(cfg_.n_max1, draw.alpha, xi)));
        rec.stages.push_back(
            stage_single_("a", displaced_squeezed_state(cfg_.n_max1, cfg_.alpha + draw.alpha, xi)));
        return rec;
    }

    void finish_pulse_(PulseRecord& rec, Vec jb, int d1, double vmin1_b, double extra_leak,
                       const ChannelDraw& draw) const {
        int d2 = cfg_.n_max2;
        StageRecord sb = stage_mode2_("b", jb, d1);
        GuardReport g = validity_guard(jb, d1, d2, comm2_, cfg_.guard, extra_leak);
        sb.vmin1 = vmin1_b;
        sb.commutator_dev = g.commutator_dev;
        sb.leakage = g.leakage;
        rec.stages.push_back(sb);
        if (!g.pass) {
            rec.guard_failed = !g.occupation_ok || !g.commutator_ok;
            rec.leakage_failed = !g.leakage_ok;
            rec.flag = g.reason;
            return;
        }
        const RMat* dT = &disp2t_;
        RMat local;
        if (cfg_.per_copy_counter) {
            auto lm2 = mode2_ladder_moments(jb, d1, d2);
            cx ap = counter_displacement_amplitude(lm2.eb, cfg_.n_target, sb.mean_n);
            Mat dgen = Mat(displacement_generator(d2, ap));
            local = RMat(Mat(dgen.exp()).transpose());
            dT = &local;
        }
        Vec jbp = apply_mode2_(jb, d1, *dT);
        StageRecord sp = stage_mode2_("b_prime", jbp, d1);
        sp.vmin1 = vmin1_b;  // a mode-2 displacement leaves the mode-1 marginal alone
        sp.leakage = leakage_tail(jbp, d1, d2).max() + extra_leak;
        rec.stages.push_back(sp);
        if (sp.leakage > cfg_.guard.leakage_bound) {
            rec.leakage_failed = true;
            rec.flag = "truncation leakage above bound after counter-displacement";
            return;
        }
        std::vector<double> pdet = mode2_number_dist(jbp, d1, d2);
        DetectorConfig det = cfg_.detector;
        if (cfg_.method == "attenuate_spd") {
            pdet = thin_distribution(pdet, eta_);
            StageRecord spp = stage_from_dist_("b_dprime", pdet);
            if (std::isfinite(sp.g2) && std::isfinite(spp.g2) && std::abs(spp.g2 - sp.g2) > 1e-8)
                throw std::logic_error("protocol: attenuation moved the correlation beyond tolerance");
            rec.stages.push_back(spp);
            det.kind = DetectorConfig::Kind::spd;
        }
        PulseRng crng(cfg_.master_seed ^ kClickSalt, draw.index);
        rec.clicks = sample_counts(pdet, det, crng, draw.index);
        rec.detected = true;
    }

    Vec apply_mode2_(const Vec& psi, int d1, const RMat& opT) const {
        Vec out(psi.size());
        auto pin = as_matrix(psi, d1, cfg_.n_max2);
        as_matrix(out, d1, cfg_.n_max2).noalias() = pin * opT;
        return out;
    }

    StageRecord stage_from_dist_(const char* name, const std::vector<double>& p) const {
        StageRecord s;
        s.stage = name;
        auto m = number_moments(p);
        s.mean_n = m.mean;
        if (m.mean > 1e-12) {
            s.fano = m.var() / m.mean;
            s.g2 = g2_from_dist(p);
        }
        return s;
    }

    StageRecord stage_mode2_(const char* name, const Vec& psi, int d1) const {
        return stage_from_dist_(name, mode2_number_dist(psi, d1, cfg_.n_max2));
    }

    StageRecord stage_single_(const char* name, const Vec& psi) const {
        StageRecord s = stage_from_dist_(name, number_dist(psi));
        s.vmin1 = quad_stats(psi).vmin();
        s.leakage = leakage_tail_single(psi);
        return s;
    }

    static double rel_fluct_(const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        double mean = 0;
        for (double x : v) mean += x;
        mean /= double(v.size());
        double var = 0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= double(v.size());
        return mean > 0 ? std::sqrt(var) / mean : 0.0;
    }
};

// Shares the source law but removes the squeezing, turning every copy into a
// displaced vacuum: the classical reference against which the witnessed
// statistics are compared.
inline ProtocolConfig null_variant(ProtocolConfig cfg) {
    cfg.source.r_min = 0.0;
    cfg.source.r_max = 0.0;
    return cfg;
}

// ---------- conversion sweep ----------

struct SweepConfig {
    int d1 = 0, d2 = 0;
    cx alpha1{};           // mode-1 coherent amplitude
    cx xi1{};              // mode-1 squeeze parameter
    cx port_amplitude{};   // mode-2 coherent amplitude
    double theta_max = M_PI_2;
    double theta_step = 0.02;
    double phi = 0.0;
    GuardThresholds guard;
};

struct SweepPoint {
    double theta = 0;
    double mean2 = 0, fano2 = kUnset, g2_2 = kUnset;
    double dx1 = 0, vmin1 = 0;
    double commutator_dev = 0, leakage = 0;
    bool guard_pass = true;
};

// Steps the conversion angle on a fixed two-mode input, recording mode-2
// counting statistics and the mode-1 quadrature spread at every grid point.
// The sweep stops after the first point that fails the validity guard.
inline std::vector<SweepPoint> transfer_sweep(const SweepConfig& c) {
    if (c.d1 < 2 || c.d2 < 2) throw ConfigError("sweep: dimensions must be at least 2");
    if (!(c.theta_step > 0)) throw ConfigError("sweep: theta step must be positive");
    if (c.theta_max < 0) throw ConfigError("sweep: theta range must be non-negative");
    if (!(std::norm(c.port_amplitude) > 0)) throw ConfigError("sweep: port amplitude must be nonzero");
    auto phi_op = pegg_barnett_phi(c.d2);
    auto mode = bn_mode(phi_op, 2.0 * std::norm(c.port_amplitude));
    Mat comm = nphi_commutator(phi_op.phi);
    SpMat k = bn_bs_generator({0.0, c.phi, BeamSplitterSpec::Variant::number_phase}, c.d1, mode);
    Vec psi = kron_vec(displaced_squeezed_state(c.d1, c.alpha1, c.xi1),
                       coherent_state(c.d2, c.port_amplitude));
    std::vector<SweepPoint> out;
    int steps = int(std::floor(c.theta_max / c.theta_step + 1e-9));
    for (int kstep = 0; kstep <= steps; ++kstep) {
        if (kstep > 0) psi = bs_apply(k, c.theta_step, psi, {.renormalize = true});
        SweepPoint p;
        p.theta = double(kstep) * c.theta_step;
        auto p2 = mode2_number_dist(psi, c.d1, c.d2);
        auto m2 = number_moments(p2);
        p.mean2 = m2.mean;
        if (m2.mean > 1e-12) {
            p.fano2 = m2.var() / m2.mean;
            p.g2_2 = g2_from_dist(p2);
        }
        auto lm = mode1_ladder_moments(psi, c.d1, c.d2);
        auto q = quad_stats(lm.eb, lm.eb2, lm.ebdb);
        p.dx1 = std::sqrt(q.vx);
        p.vmin1 = q.vmin();
        auto g = validity_guard(psi, c.d1, c.d2, comm, c.guard);
        p.commutator_dev = g.commutator_dev;
        p.leakage = g.leakage;
        p.guard_pass = g.pass;
        out.push_back(p);
        if (!g.pass) break;
    }
    return out;
}

// Counter-displacement ladder on a fixed number-squeezed state. The input is
// a coherent reference squeezed in the number-phase mode built on its own
// gamma0, which is the kind of state the conversion stage delivers: for a
// squeeze xi the mean lands at e^{-xi} gamma0/2 and the Fano factor at
// e^{-xi}, so g2(0) = 1 - (e^{xi} - 1)/(gamma0/2) independent of dimension.
// Each row then re-targets the *input* state to a lower mean photon number
// (displacements are independent, not chained) and records the counting
// statistics there. Targets are geometric from the input mean down to
// final_ratio times it, so the first row is the bare input and the last row
// realizes the full mean reduction.
struct CounterConfig {
    int n_max = 128;
    cx port_amplitude{std::sqrt(40.0), 0.0};
    cx xi{std::log(1.2), 0.0};
    double final_ratio = 0.1;
    int points = 25;
};

struct CounterPoint {
    double alpha_prime_abs = 0;
    double mean_n = 0;
    double fano = kUnset;
    double g2 = kUnset;
};

inline std::vector<CounterPoint> counter_sweep(const CounterConfig& c) {
    if (c.n_max < 2) throw ConfigError("counter: dimension must be at least 2");
    if (c.points < 2) throw ConfigError("counter: need at least two grid points");
    if (!(c.final_ratio > 0) || !(c.final_ratio < 1))
        throw ConfigError("counter: final ratio must lie in (0, 1)");
    if (!(std::norm(c.port_amplitude) > 0))
        throw ConfigError("counter: reference amplitude must be nonzero");
    auto phase = pegg_barnett_phi(c.n_max);
    auto mode = bn_mode(phase, 2.0 * std::norm(c.port_amplitude));
    Mat b2 = mode.bn * mode.bn;
    Mat gen = 0.5 * (c.xi * b2 - std::conj(c.xi) * Mat(b2.adjoint()));
    Vec psi = expm_apply(gen, coherent_state(c.n_max, c.port_amplitude), cx(1.0, 0.0),
                         {.renormalize = true});
    double mean0 = mean_n(psi);
    if (!(mean0 > 0)) throw ConfigError("counter: input state must be bright");
    std::vector<CounterPoint> out;
    out.reserve(std::size_t(c.points));
    for (int k = 0; k < c.points; ++k) {
        CounterPoint p;
        std::vector<double> dist;
        if (k == 0) {
            dist = number_dist(psi);
        } else {
            double target = mean0 * std::pow(c.final_ratio, double(k) / double(c.points - 1));
            auto cd = choose_counter_displacement(psi, target);
            p.alpha_prime_abs = std::abs(cd.alpha_prime);
            dist = number_dist(cd.state);
        }
        auto m = number_moments(dist);
        p.mean_n = m.mean;
        if (m.mean > 1e-12) {
            p.fano = m.var() / m.mean;
            p.g2 = g2_from_dist(dist);
        }
        out.push_back(p);
    }
    return out;
}

}  // namespace sqwit
