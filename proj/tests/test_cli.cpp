#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "sqwit/io.hpp"

using namespace sqwit;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "sqwit_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    static int counter = 0;
    fs::path log = work_dir() / ("cli_log_" + std::to_string(counter++) + ".txt");
    std::string cmd = std::string(SQWIT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    if (output) *output = io::read_text_file(log);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    double num(std::size_t row, const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return std::strtod(rows[row][i].c_str(), nullptr);
        FAIL("missing column " + name);
        return 0;
    }
    std::string text(std::size_t row, const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return rows[row][i];
        FAIL("missing column " + name);
        return {};
    }
};

Table load_csv(const fs::path& p) {
    std::string raw = io::read_text_file(p);
    Table t;
    std::size_t start = 0;
    while (start < raw.size()) {
        std::size_t end = raw.find('\n', start);
        if (end == std::string::npos) end = raw.size();
        std::string line = raw.substr(start, end - start);
        if (!line.empty()) {
            auto cells = split_csv_line(line);
            if (t.header.empty())
                t.header = cells;
            else
                t.rows.push_back(cells);
        }
        start = end + 1;
    }
    return t;
}

io::json load_json(const fs::path& p) {
    return io::parse_json_text(io::read_text_file(p), p.string());
}

fs::path write_sweep_config(const std::string& name, double theta_max) {
    SweepConfig sc;
    sc.d1 = 26;
    sc.d2 = 58;
    sc.alpha1 = cx(0.0, 0.0);
    sc.xi1 = cx(0.0, 0.0);
    sc.port_amplitude = cx(std::sqrt(20.0), 0.0);
    sc.theta_max = theta_max;
    sc.theta_step = 0.1;
    sc.guard.min_occupation = 15.0;
    sc.guard.leakage_bound = 1e-4;
    io::ConfigFile cf;
    cf.sweep = sc;
    fs::path p = work_dir() / name;
    io::write_atomic(p, io::dump_json(io::config_file_to_json(cf)));
    return p;
}

ProtocolConfig reduced_protocol_config() {
    ProtocolConfig pc;
    pc.n_max1 = 28;
    pc.n_max2 = 58;
    pc.alpha = cx(1.22, 0.0);
    pc.theta = 1.2;
    pc.port_amplitude = cx(std::sqrt(14.0), 0.0);
    pc.n_target = 0.8;
    pc.method = "attenuate_spd";
    pc.target_mean = 0.1;
    pc.pulses = 600;
    pc.master_seed = 5150;
    pc.kernel_dim1 = 10;
    pc.source = SourceConfig{cx(0.05, 0.0), 0.01, 0.22, 0.34};
    pc.guard.min_occupation = 8.0;
    // the finite phase representation keeps a small intrinsic boundary mass
    // at this reduced reference occupation; see the matching engine tests
    pc.guard.leakage_bound = 2e-4;
    pc.detector.kind = DetectorConfig::Kind::spd;
    return pc;
}

fs::path write_protocol_config(const std::string& name, std::int64_t pulses, bool with_null) {
    ProtocolConfig pc = reduced_protocol_config();
    pc.pulses = pulses;
    io::ConfigFile cf;
    cf.protocol = pc;
    cf.with_null = with_null;
    fs::path p = work_dir() / name;
    io::write_atomic(p, io::dump_json(io::config_file_to_json(cf)));
    return p;
}

}  // namespace

TEST_CASE("help and version exit cleanly", "[cli]") {
    std::string out;
    CHECK(run_cli("--help", &out) == 0);
    CHECK(out.find("transfer-sweep") != std::string::npos);
    CHECK(out.find("counter-displace") != std::string::npos);
    CHECK(out.find("protocol") != std::string::npos);
    CHECK(out.find("validate") != std::string::npos);
    CHECK(run_cli("--version", &out) == 0);
    CHECK(out.find("sqwit") != std::string::npos);
}

TEST_CASE("transfer-sweep writes the documented artifacts and stops at the guard", "[cli]") {
    fs::path cfg = write_sweep_config("sweep.json", 1.2);
    fs::path dir_a = work_dir() / "sweep_a";
    std::string out;
    CHECK(run_cli("transfer-sweep --config " + cfg.string() + " --out " + dir_a.string() +
                      " --plot",
                  &out) == 0);
    CHECK(out.find("guard stop") != std::string::npos);
    REQUIRE(fs::exists(dir_a / "sweep.csv"));
    REQUIRE(fs::exists(dir_a / "sweep.svg"));
    REQUIRE(fs::exists(dir_a / "manifest.json"));

    Table t = load_csv(dir_a / "sweep.csv");
    REQUIRE(t.header.size() >= 5);
    CHECK(t.header[0] == "theta");
    CHECK(t.header[1] == "g2_mode2");
    CHECK(t.header[2] == "fano_mode2");
    CHECK(t.header[3] == "dx_mode1");
    CHECK(t.header[4] == "guard_status");
    REQUIRE(t.rows.size() >= 4);

    // grid starts at zero with the untouched input, ends on the failing point
    CHECK(t.num(0, "theta") == 0.0);
    CHECK(t.num(0, "g2_mode2") == Catch::Approx(1.0).margin(1e-9));
    CHECK(t.num(0, "dx_mode1") == Catch::Approx(std::sqrt(0.5)).margin(1e-9));
    for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
        CAPTURE(i);
        CHECK(t.text(i, "guard_status") == "pass");
        // coherent input stays on the classical side of every witness
        CHECK(t.num(i, "g2_mode2") >= 1.0 - 1e-3);
        CHECK(t.num(i, "fano_mode2") >= 1.0 - 1e-3);
        CHECK(t.num(i, "vmin_mode1") >= 0.5 - 1e-3);
        CHECK(t.num(i, "theta") == Catch::Approx(0.1 * double(i)).margin(1e-12));
    }
    CHECK(t.text(t.rows.size() - 1, "guard_status") == "fail");

    // rerunning from the manifest reproduces the table byte for byte
    fs::path dir_b = work_dir() / "sweep_b";
    CHECK(run_cli("transfer-sweep --config " + (dir_a / "manifest.json").string() + " --out " +
                  dir_b.string()) == 0);
    CHECK(io::read_text_file(dir_b / "sweep.csv") == io::read_text_file(dir_a / "sweep.csv"));

    io::json m = load_json(dir_a / "manifest.json");
    CHECK(io::is_manifest(m));
    CHECK(m["command"] == "transfer-sweep");
    CHECK(m["artifacts"].contains("sweep_csv"));
    CHECK(m["artifacts"].contains("sweep_svg"));
}

TEST_CASE("transfer-sweep single zero-angle point reports the input state", "[cli]") {
    fs::path cfg = write_sweep_config("sweep0.json", 0.0);
    fs::path dir = work_dir() / "sweep_zero";
    CHECK(run_cli("transfer-sweep --config " + cfg.string() + " --out " + dir.string()) == 0);
    Table t = load_csv(dir / "sweep.csv");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.num(0, "theta") == 0.0);
    CHECK(t.num(0, "mean_mode2") == Catch::Approx(20.0).margin(1e-8));
    CHECK(t.num(0, "g2_mode2") == Catch::Approx(1.0).margin(1e-9));
    CHECK(t.text(0, "guard_status") == "pass");
}

TEST_CASE("counter-displace preset reproduces the documented visibility gain", "[cli]") {
    fs::path dir = work_dir() / "counter";
    std::string out;
    CHECK(run_cli("counter-displace --preset fig3 --out " + dir.string(), &out) == 0);
    Table t = load_csv(dir / "counter.csv");
    REQUIRE(t.rows.size() == 25);
    CHECK(t.num(0, "alpha_prime_abs") == 0.0);
    CHECK(t.num(0, "g2") == Catch::Approx(0.995).margin(1e-3));
    std::size_t last = t.rows.size() - 1;
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        CAPTURE(i);
        CHECK(t.num(i, "g2") < t.num(i - 1, "g2"));
        CHECK(t.num(i, "mean_n") < t.num(i - 1, "mean_n"));
        CHECK(t.num(i, "alpha_prime_abs") > t.num(i - 1, "alpha_prime_abs"));
    }
    // tenfold mean reduction amplifies the distance from Poissonian tenfold
    CHECK(t.num(last, "mean_n") == Catch::Approx(0.1 * t.num(0, "mean_n")).epsilon(0.05));
    double growth = (t.num(last, "g2") - 1.0) / (t.num(0, "g2") - 1.0);
    CHECK(growth == Catch::Approx(10.0).epsilon(0.05));
    // the Fano column stays tied to g2 through the shared-variance identity
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        CHECK(t.num(i, "fano") - 1.0 ==
              Catch::Approx((t.num(i, "g2") - 1.0) * t.num(i, "mean_n")).margin(1e-10));
}

TEST_CASE("protocol runs are deterministic and fully recorded", "[cli]") {
    fs::path cfg = write_protocol_config("protocol.json", 600, false);
    fs::path dir_a = work_dir() / "proto_a";
    std::string out;
    CHECK(run_cli("protocol --config " + cfg.string() + " --out " + dir_a.string(), &out) == 0);
    CHECK(out.find("histogram g2(0)") != std::string::npos);
    REQUIRE(fs::exists(dir_a / "records.csv"));
    REQUIRE(fs::exists(dir_a / "histogram.json"));
    REQUIRE(fs::exists(dir_a / "summary.json"));
    CHECK_FALSE(fs::exists(dir_a / "histogram.svg"));

    Table recs = load_csv(dir_a / "records.csv");
    CHECK(recs.rows.size() == 600);
    CHECK(recs.header[0] == "index");
    CHECK(recs.num(0, "index") == 0.0);
    CHECK(recs.num(599, "index") == 599.0);

    io::json s = load_json(dir_a / "summary.json");
    REQUIRE(s.contains("main"));
    CHECK_FALSE(s.contains("null"));
    CHECK(s["main"]["pulses"] == 600);
    CHECK(s["main"]["included"] == 600);
    CHECK(s["main"]["guard_trips"] == 0);
    double eta = s["main"]["eta"].get<double>();
    CHECK(eta > 0.0);
    CHECK(eta <= 1.0);

    io::json h = load_json(dir_a / "histogram.json");
    CHECK(h["pulses"] == 600);
    CHECK(h["g2"].size() >= 1);

    // identical seed, identical bytes
    fs::path dir_b = work_dir() / "proto_b";
    CHECK(run_cli("protocol --config " + cfg.string() + " --out " + dir_b.string()) == 0);
    for (const char* name : {"records.csv", "histogram.json", "summary.json"})
        CHECK(io::read_text_file(dir_b / name) == io::read_text_file(dir_a / name));

    // the manifest reruns to the same bytes as well
    fs::path dir_c = work_dir() / "proto_c";
    CHECK(run_cli("protocol --config " + (dir_a / "manifest.json").string() + " --out " +
                  dir_c.string()) == 0);
    for (const char* name : {"records.csv", "histogram.json", "summary.json"})
        CHECK(io::read_text_file(dir_c / name) == io::read_text_file(dir_a / name));

    // a different seed changes the draw stream
    fs::path dir_d = work_dir() / "proto_d";
    CHECK(run_cli("protocol --config " + cfg.string() + " --seed 999 --out " + dir_d.string()) ==
          0);
    CHECK(io::read_text_file(dir_d / "records.csv") != io::read_text_file(dir_a / "records.csv"));
    io::json md = load_json(dir_d / "manifest.json");
    CHECK(md["master_seed"] == 999);
    CHECK(md["config"]["protocol"]["master_seed"] == 999);
}

TEST_CASE("protocol with the squeezing-free variant reports the comparison", "[cli]") {
    fs::path cfg = write_protocol_config("protocol_null.json", 300, true);
    fs::path dir = work_dir() / "proto_null";
    std::string out;
    CHECK(run_cli("protocol --config " + cfg.string() + " --out " + dir.string() + " --plot",
                  &out) == 0);
    CHECK(out.find("(null)") != std::string::npos);
    REQUIRE(fs::exists(dir / "null_records.csv"));
    REQUIRE(fs::exists(dir / "null_histogram.json"));
    REQUIRE(fs::exists(dir / "histogram.svg"));
    io::json s = load_json(dir / "summary.json");
    REQUIRE(s.contains("null"));
    REQUIRE(s.contains("comparison"));
    CHECK(s["null"]["pulses"] == 300);
    CHECK(s["comparison"].contains("hist_g2_main"));
    CHECK(s["comparison"].contains("null_margin_sigma"));
    Table nulls = load_csv(dir / "null_records.csv");
    REQUIRE(nulls.rows.size() == 300);
    // the variant really pins the squeezing law to zero
    for (std::size_t i = 0; i < nulls.rows.size(); i += 60) CHECK(nulls.num(i, "r") == 0.0);
}

TEST_CASE("validate emits a machine-readable report", "[cli]") {
    fs::path dir = work_dir() / "validate";
    std::string out;
    CHECK(run_cli("validate --out " + dir.string(), &out) == 0);
    CHECK(out.find("PASS") != std::string::npos);
    CHECK(out.find("FAIL") == std::string::npos);
    io::json r = load_json(dir / "validation.json");
    CHECK(r["pass"] == true);
    REQUIRE(r["checks"].is_array());
    bool saw_attenuation = false;
    for (const auto& c : r["checks"]) {
        CHECK(c["pass"] == true);
        if (c["name"] == "attenuation_invariance") {
            saw_attenuation = true;
            CHECK(c["residual"].get<double>() <= 1e-8);
        }
    }
    CHECK(saw_attenuation);
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("exit codes distinguish config errors from guard aborts", "[cli]") {
    std::string out;

    // unknown flags and absent configs are config errors
    CHECK(run_cli("protocol --bogus-flag", &out) == 2);
    CHECK(run_cli("protocol --config " + (work_dir() / "absent.json").string(), &out) == 2);

    // malformed json
    fs::path bad = work_dir() / "bad.json";
    io::write_atomic(bad, "{не json");
    CHECK(run_cli("protocol --config " + bad.string(), &out) == 2);
    CHECK(out.find("config error") != std::string::npos);

    // sweep without its section
    fs::path empty_cfg = work_dir() / "empty.json";
    io::write_atomic(empty_cfg, "{\"schema_version\": 1}\n");
    CHECK(run_cli("transfer-sweep --config " + empty_cfg.string(), &out) == 2);

    // unphysical detector efficiency is rejected by name
    fs::path hot = work_dir() / "hot.json";
    io::write_atomic(hot,
                     "{\"schema_version\": 1, \"protocol\": {\"detector\": "
                     "{\"kind\": \"spd\", \"efficiency\": 1.2}}}\n");
    CHECK(run_cli("validate --config " + hot.string(), &out) == 2);
    CHECK(out.find("efficiency") != std::string::npos);

    // a reference too dim for the occupation floor aborts through the guard
    ProtocolConfig dim;
    dim.n_max1 = 8;
    dim.n_max2 = 24;
    dim.kernel_dim1 = 4;
    dim.port_amplitude = cx(std::sqrt(3.0), 0.0);
    dim.pulses = 5;
    dim.n_target = 0.5;
    dim.target_mean = 0.05;
    dim.detector.kind = DetectorConfig::Kind::spd;
    io::ConfigFile cf;
    cf.protocol = dim;
    fs::path dim_cfg = work_dir() / "dim.json";
    io::write_atomic(dim_cfg, io::dump_json(io::config_file_to_json(cf)));
    CHECK(run_cli("protocol --config " + dim_cfg.string(), &out) == 4);
    CHECK(out.find("guard abort") != std::string::npos);

    // passing both a config and a preset is ambiguous
    CHECK(run_cli("counter-displace --config " + empty_cfg.string() + " --preset fig3", &out) ==
          2);
}
