// Command line front end: four subcommands (transfer-sweep, counter-displace,
// protocol, validate) that drive the header library and leave every result in
// an output directory as CSV/JSON artifacts plus a manifest that can rerun
// the command bit for bit.
//
// Exit codes: 0 success, 1 unexpected failure, 2 config error,
// 3 invariant failure from validate, 4 validity-guard abort.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "sqwit/channels.hpp"
#include "sqwit/fock.hpp"
#include "sqwit/interactions.hpp"
#include "sqwit/io.hpp"
#include "sqwit/numberphase.hpp"
#include "sqwit/protocol.hpp"
#include "sqwit/rng.hpp"

using namespace sqwit;
namespace fs = std::filesystem;

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int workers = 1;
    bool plot = false;
    CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path,
                    "config file, or a manifest left by an earlier run");
    cmd->add_option("--preset", o.preset, "named config shipped in the configs directory");
    o.seed_opt = cmd->add_option("--seed", o.seed, "override the master seed");
    cmd->add_option("--workers", o.workers,
                    "worker count hint; artifact writing always stays on one thread")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out_dir, "output directory, created when missing");
    cmd->add_flag("--plot", o.plot, "also render svg plots of the tables");
}

fs::path preset_path(const std::string& name) {
    std::vector<fs::path> roots;
    if (const char* env = std::getenv("SQWIT_PRESET_DIR")) roots.emplace_back(env);
#ifdef SQWIT_PRESET_DIR
    roots.emplace_back(SQWIT_PRESET_DIR);
#endif
    roots.emplace_back("configs");
    for (const auto& root : roots) {
        fs::path p = root / (name + ".json");
        if (fs::exists(p)) return p;
    }
    throw ConfigError("preset '" + name + "' not found (set SQWIT_PRESET_DIR or pass --config)");
}

io::ConfigFile load_opts_config(const CommonOpts& o) {
    if (!o.config_path.empty() && !o.preset.empty())
        throw ConfigError("pass either --config or --preset, not both");
    if (!o.config_path.empty()) return io::load_config_file(o.config_path);
    if (!o.preset.empty()) return io::load_config_file(preset_path(o.preset));
    return {};
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed,
                    const io::json& resolved,
                    std::vector<std::pair<std::string, std::string>> artifacts) {
    io::RunManifest m;
    m.command = command;
    m.master_seed = seed;
    m.wall_clock_utc = io::iso8601_utc_now();
    m.config = resolved;
    m.artifacts = std::move(artifacts);
    io::write_atomic(dir / "manifest.json", io::dump_json(io::manifest_to_json(m)));
}

// ------------------------------------------------------------ transfer-sweep

int cmd_transfer_sweep(const CommonOpts& o) {
    io::ConfigFile cf = load_opts_config(o);
    if (!cf.sweep) throw ConfigError("transfer-sweep: the config has no sweep section");
    SweepConfig sc = *cf.sweep;
    auto points = transfer_sweep(sc);
    fs::path dir(o.out_dir);
    io::write_atomic(dir / "sweep.csv", io::sweep_csv(points).to_string());
    std::vector<std::pair<std::string, std::string>> artifacts{{"sweep_csv", "sweep.csv"}};
    if (o.plot) {
        io::PlotSpec spec;
        spec.title = "statistics transfer against conversion angle";
        spec.xlabel = "theta";
        spec.ylabel = "mode-2 counting / mode-1 spread";
        io::Series g2{"g2_mode2", {}, {}}, fano{"fano_mode2", {}, {}}, dx{"dx_mode1", {}, {}};
        for (const auto& p : points) {
            g2.x.push_back(p.theta);
            g2.y.push_back(p.g2_2);
            fano.x.push_back(p.theta);
            fano.y.push_back(p.fano2);
            dx.x.push_back(p.theta);
            dx.y.push_back(p.dx1);
        }
        spec.series = {g2, fano, dx};
        io::write_line_plot(dir / "sweep.svg", spec);
        artifacts.emplace_back("sweep_svg", "sweep.svg");
    }
    io::ConfigFile resolved;
    resolved.sweep = sc;
    write_manifest(dir, "transfer-sweep", 0, io::config_file_to_json(resolved), artifacts);
    const auto& last = points.back();
    std::cout << "transfer-sweep: " << points.size() << " grid points, final theta "
              << fmt6(last.theta) << (last.guard_pass ? "" : " (guard stop)") << "\n";
    if (points.size() > 1 || last.guard_pass)
        std::cout << "transfer-sweep: last valid g2(0) "
                  << fmt6(last.guard_pass ? last.g2_2 : points[points.size() - 2].g2_2) << "\n";
    return 0;
}

// ---------------------------------------------------------- counter-displace

int cmd_counter_displace(const CommonOpts& o) {
    io::ConfigFile cf = load_opts_config(o);
    CounterConfig cc = cf.counter ? *cf.counter : CounterConfig{};
    auto points = counter_sweep(cc);
    fs::path dir(o.out_dir);
    io::write_atomic(dir / "counter.csv", io::counter_csv(points).to_string());
    std::vector<std::pair<std::string, std::string>> artifacts{{"counter_csv", "counter.csv"}};
    if (o.plot) {
        io::PlotSpec spec;
        spec.title = "counting statistics along the counter-displacement ladder";
        spec.xlabel = "|alpha'|";
        spec.ylabel = "g2(0) / Fano";
        io::Series g2{"g2", {}, {}}, fano{"fano", {}, {}};
        for (const auto& p : points) {
            g2.x.push_back(p.alpha_prime_abs);
            g2.y.push_back(p.g2);
            fano.x.push_back(p.alpha_prime_abs);
            fano.y.push_back(p.fano);
        }
        spec.series = {g2, fano};
        io::write_line_plot(dir / "counter.svg", spec);
        artifacts.emplace_back("counter_svg", "counter.svg");
    }
    io::ConfigFile resolved;
    resolved.counter = cc;
    write_manifest(dir, "counter-displace", 0, io::config_file_to_json(resolved), artifacts);
    std::cout << "counter-displace: g2(0) " << fmt6(points.front().g2) << " at mean "
              << fmt6(points.front().mean_n) << " down to " << fmt6(points.back().g2)
              << " at mean " << fmt6(points.back().mean_n) << "\n";
    return 0;
}

// ------------------------------------------------------------------ protocol

io::json protocol_comparison(const EnsembleSummary& main, const EnsembleSummary& null_run) {
    io::json cmp;
    cmp["hist_g2_main"] = io::num_or_null(main.hist_g2);
    cmp["hist_se_main"] = io::num_or_null(main.hist_se);
    cmp["hist_g2_null"] = io::num_or_null(null_run.hist_g2);
    cmp["hist_se_null"] = io::num_or_null(null_run.hist_se);
    cmp["nonclassical_sigma"] = io::num_or_null((1.0 - main.hist_g2) / main.hist_se);
    cmp["null_margin_sigma"] = io::num_or_null((null_run.hist_g2 - 1.0) / null_run.hist_se);
    return cmp;
}

int cmd_protocol(const CommonOpts& o) {
    io::ConfigFile cf = load_opts_config(o);
    ProtocolConfig pc = cf.protocol ? *cf.protocol : ProtocolConfig{};
    if (o.seed_opt && o.seed_opt->count() > 0) pc.master_seed = o.seed;
    pc.validate();
    fs::path dir(o.out_dir);

    ProtocolEngine engine(pc);
    EnsembleResult res = engine.run_ensemble();
    io::write_atomic(dir / "records.csv", io::records_csv(res.records).to_string());
    io::write_atomic(dir / "histogram.json", io::dump_json(io::histogram_to_json(res.histogram)));
    std::vector<std::pair<std::string, std::string>> artifacts{
        {"records_csv", "records.csv"},
        {"histogram_json", "histogram.json"},
        {"summary_json", "summary.json"}};

    io::json summary;
    summary["schema_version"] = io::kSchemaVersion;
    summary["main"] = io::summary_to_json(res.summary);

    std::cout << "protocol: included " << res.summary.included << "/" << res.summary.pulses
              << " copies, detected mean " << fmt6(res.summary.mean_detected) << "\n";
    std::cout << "protocol: histogram g2(0) " << fmt6(res.summary.hist_g2) << " +/- "
              << fmt6(res.summary.hist_se) << " (operator " << fmt6(res.summary.op_aggregate_g2)
              << ")\n";

    if (cf.with_null) {
        ProtocolEngine null_engine(null_variant(pc));
        EnsembleResult nres = null_engine.run_ensemble();
        io::write_atomic(dir / "null_records.csv", io::records_csv(nres.records).to_string());
        io::write_atomic(dir / "null_histogram.json",
                         io::dump_json(io::histogram_to_json(nres.histogram)));
        artifacts.emplace_back("null_records_csv", "null_records.csv");
        artifacts.emplace_back("null_histogram_json", "null_histogram.json");
        summary["null"] = io::summary_to_json(nres.summary);
        summary["comparison"] = protocol_comparison(res.summary, nres.summary);
        std::cout << "protocol (null): histogram g2(0) " << fmt6(nres.summary.hist_g2) << " +/- "
                  << fmt6(nres.summary.hist_se) << "\n";
    }
    io::write_atomic(dir / "summary.json", io::dump_json(summary));

    if (o.plot) {
        io::PlotSpec spec;
        spec.title = "click correlation across pulse lags";
        spec.xlabel = "lag (pulse periods)";
        spec.ylabel = "g2";
        io::Series g2{"g2", {}, {}}, unity{"poissonian", {}, {}};
        for (std::size_t i = 0; i < res.histogram.lag.size(); ++i) {
            g2.x.push_back(double(res.histogram.lag[i]));
            g2.y.push_back(res.histogram.g2[i]);
            unity.x.push_back(double(res.histogram.lag[i]));
            unity.y.push_back(1.0);
        }
        spec.series = {g2, unity};
        io::write_line_plot(dir / "histogram.svg", spec);
        artifacts.emplace_back("histogram_svg", "histogram.svg");
    }

    io::ConfigFile resolved;
    resolved.protocol = pc;
    resolved.with_null = cf.with_null;
    write_manifest(dir, "protocol", pc.master_seed, io::config_file_to_json(resolved), artifacts);
    return 0;
}

// ------------------------------------------------------------------ validate

struct CheckResult {
    std::string name;
    double residual = 0;
    double tolerance = 0;
    bool pass = false;
};

Vec validate_random_state(int d, std::uint64_t seed) {
    PulseRng rng(seed, 1);
    Vec psi(d);
    for (int n = 0; n < d; ++n) psi[n] = cx(rng.normal(), rng.normal());
    psi.normalize();
    return psi;
}

std::vector<CheckResult> run_invariant_checks() {
    std::vector<CheckResult> out;
    auto add = [&out](std::string name, double residual, double tol) {
        out.push_back({std::move(name), residual, tol, residual <= tol});
    };

    {
        // canonical pair expectation on a bright coherent state
        auto phase = pegg_barnett_phi(200);
        Mat comm = nphi_commutator(phase.phi);
        Vec psi = coherent_state(200, cx(std::sqrt(30.0), 0.0));
        cx val = psi.dot(comm * psi);
        add("number_phase_commutator", std::abs(val / cx(0.0, 1.0) - 1.0), 5e-3);
    }
    {
        // attenuation must not move g2
        Vec psi = displaced_squeezed_state(80, cx(2.0, 0.0), cx(0.4, 0.0));
        auto p = number_dist(psi);
        double g0 = g2_from_dist(p);
        double worst = 0;
        for (double eta : {1.0, 0.5, 0.1, 0.01, 0.001})
            worst = std::max(worst, std::abs(g2_from_dist(thin_distribution(p, eta)) - g0));
        add("attenuation_invariance", worst, 1e-8);
    }
    {
        // operator-sum loss against the beam-splitter-ancilla reference
        double worst = 0;
        for (int s = 0; s < 6; ++s) {
            Vec psi = validate_random_state(10, 1234 + std::uint64_t(s));
            Mat rho = psi * psi.adjoint();
            for (double eta : {0.9, 0.5, 0.1})
                worst = std::max(worst,
                                 trace_distance(pure_loss(rho, eta), bs_ancilla_loss(rho, eta)));
        }
        add("loss_model_agreement", worst, 1e-10);
    }
    {
        // Fano factor and g2 describe the same number variance
        double worst = 0;
        for (int s = 0; s < 25; ++s) {
            auto p = number_dist(validate_random_state(12, 777 + std::uint64_t(s)));
            auto m = number_moments(p);
            double fano = m.var() / m.mean;
            double g2 = g2_from_dist(p);
            worst = std::max(worst, std::abs((fano - 1.0) - (g2 - 1.0) * m.mean));
        }
        add("fano_g2_identity", worst, 1e-10);
    }
    {
        // conversion steps compose: two small rotations equal one combined one
        auto phase = pegg_barnett_phi(36);
        auto mode = bn_mode(phase, 18.0);
        SpMat gen = bn_bs_generator({0.0, 0.0, BeamSplitterSpec::Variant::number_phase}, 10, mode);
        Vec psi = kron_vec(coherent_state(10, cx(0.5, 0.0)), coherent_state(36, cx(3.0, 0.0)));
        Vec two = bs_apply(gen, 0.3, bs_apply(gen, 0.2, psi, {}), {});
        Vec one = bs_apply(gen, 0.5, psi, {});
        add("conversion_group_property", (two - one).norm(), 1e-8);
    }
    {
        // counter displacement lands on its target mean
        Vec psi = coherent_state(64, cx(std::sqrt(15.0), 0.0));
        auto cd = choose_counter_displacement(psi, 3.0);
        add("counter_displacement_target", std::abs(cd.achieved_mean - 3.0), 1e-6);
    }
    return out;
}

int cmd_validate(const CommonOpts& o) {
    // a supplied config must decode and pass physical validation; an
    // unphysical entry (say, efficiency above one) surfaces as a named
    // config error and exit code 2
    io::ConfigFile cf = load_opts_config(o);
    if (cf.protocol) cf.protocol->validate();

    auto checks = run_invariant_checks();
    bool all = true;
    io::json arr = io::json::array();
    for (const auto& c : checks) {
        all = all && c.pass;
        io::json jc;
        jc["name"] = c.name;
        jc["residual"] = io::num_or_null(c.residual);
        jc["tolerance"] = c.tolerance;
        jc["pass"] = c.pass;
        arr.push_back(jc);
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " residual "
                  << io::fmt_g17(c.residual) << " (tolerance " << io::fmt_g17(c.tolerance)
                  << ")\n";
    }
    io::json report;
    report["schema_version"] = io::kSchemaVersion;
    report["engine_version"] = io::kEngineVersion;
    report["checks"] = arr;
    report["pass"] = all;
    fs::path dir(o.out_dir);
    io::write_atomic(dir / "validation.json", io::dump_json(report));
    write_manifest(dir, "validate", 0, io::config_file_to_json(cf),
                   {{"validation_json", "validation.json"}});
    std::cout << (all ? "validate: all invariants hold" : "validate: invariant failure") << "\n";
    return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "conversion of quadrature squeezing into sub-Poissonian counting statistics: "
        "sweeps, counter-displacement ladders and the full random-displacement protocol"};
    app.set_version_flag("--version", io::kEngineVersion);
    app.require_subcommand(1);

    CommonOpts so, co, po, vo;
    CLI::App* sweep = app.add_subcommand(
        "transfer-sweep", "step the conversion angle on a fixed two-mode input");
    add_common(sweep, so);
    CLI::App* counter = app.add_subcommand(
        "counter-displace", "walk a displaced squeezed state down in mean photon number");
    add_common(counter, co);
    CLI::App* proto = app.add_subcommand(
        "protocol", "run the full random-displacement certification protocol");
    add_common(proto, po);
    CLI::App* val = app.add_subcommand(
        "validate", "run the analytic invariant battery and report residuals");
    add_common(val, vo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (sweep->parsed()) return cmd_transfer_sweep(so);
        if (counter->parsed()) return cmd_counter_displace(co);
        if (proto->parsed()) return cmd_protocol(po);
        if (val->parsed()) return cmd_validate(vo);
    } catch (const GuardError& e) {
        std::cerr << "guard abort: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
