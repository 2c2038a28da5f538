#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "routhsim/cli.hpp"
#include "routhsim/systems.hpp"

using namespace routhsim;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(const std::vector<std::string> &args)
{
    std::ostringstream o, e;
    int c = run(args, o, e);
    return {c, o.str(), e.str()};
}

fs::path scratch(const std::string &name)
{
    fs::path d = fs::temp_directory_path() / ("routhsim_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path &p)
{
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

void spit(const fs::path &p, const std::string &s) { std::ofstream(p) << s; }

nlohmann::ordered_json load_json(const fs::path &p) { return nlohmann::ordered_json::parse(slurp(p)); }

}  // namespace

TEST_CASE("usage errors exit with 2")
{
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"simulate"}).code == 2);
    CHECK(cli({"simulate", "--system", "cyclic-linear", "--h", "-1"}).code == 2);
    CHECK(cli({"simulate", "--system", "cyclic-linear", "--mode", "sideways"}).code == 2);

    Run r = cli({"simulate", "--system", "no-such-system"});
    CHECK(r.code == 2);
    CHECK(r.err.find("cyclic-linear") != std::string::npos);

    CHECK(cli({"simulate", "--system", "cyclic-linear", "--mu", "1,2"}).code == 2);
    CHECK(cli({"sweep", "--system", "cyclic-linear", "--param", "mu"}).code == 2);
    CHECK(cli({"sweep", "--system", "cyclic-linear", "--param", "colour", "--values", "1"}).code == 2);
}

TEST_CASE("simulate writes a trajectory and a summary")
{
    fs::path d = scratch("simulate");
    Run r = cli({"simulate", "--system", "cyclic-linear", "--mu", "1", "--T", "1", "--out", (d / "t.csv").string(),
                 "--summary", (d / "s.json").string()});
    CHECK(r.code == 0);
    std::string csv = slurp(d / "t.csv");
    CHECK(csv.rfind("t,x,y,v_x,v_y,p_x,p_y\n", 0) == 0);

    CsvTrajectory tr = read_trajectory_csv((d / "t.csv").string());
    REQUIRE(tr.times.size() == 1001);
    const Vec<double> &end = tr.states.back();
    CHECK(end[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(end[1] + 1.0 / 6) < 1e-6);

    nlohmann::ordered_json s = load_json(d / "s.json");
    std::vector<std::string> keys;
    for (auto it = s.begin(); it != s.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"system", "mu", "mode", "h", "T", "max_momentum_drift", "max_energy_drift",
                                           "max_dirac_residual", "newton_stats", "rank_defects"});
    CHECK(s["mode"] == "full");

    // drift recomputed from the file
    LagrangianSystem cl = make_cyclic_linear();
    double drift = 0.0;
    for (const auto &row : tr.states) {
        Vec<double> J = momentum_map<double>(cl, slice(row, 0, 2), slice(row, 2, 2));
        drift = std::max(drift, std::abs(J[0] - 1.0));
    }
    CHECK(std::abs(drift - s["max_momentum_drift"].get<double>()) < 1e-12);
}

TEST_CASE("runs are byte-for-byte deterministic")
{
    fs::path d = scratch("determinism");
    for (const char *tag : {"a", "b"}) {
        Run r = cli({"simulate", "--system", "central-force", "--mode", "both", "--T", "0.5", "--out",
                     (d / (std::string(tag) + ".csv")).string(), "--summary",
                     (d / (std::string(tag) + ".json")).string()});
        CHECK(r.code == 0);
    }
    CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
    CHECK(slurp(d / "a.reduced.csv") == slurp(d / "b.reduced.csv"));
    CHECK(slurp(d / "a.json") == slurp(d / "b.json"));
    CHECK(!slurp(d / "a.csv").empty());
}

TEST_CASE("both mode reports the full/reduced gap")
{
    fs::path d = scratch("both");
    Run r = cli({"simulate", "--system", "cyclic-linear", "--mu", "1", "--mode", "both", "--check-dirac", "--out",
                 (d / "t.csv").string(), "--summary", (d / "s.json").string()});
    CHECK(r.code == 0);
    nlohmann::ordered_json s = load_json(d / "s.json");
    REQUIRE(s.contains("full_reduced_gap"));
    CHECK(s["full_reduced_gap"].get<double>() < 1e-6);
    CHECK(s["reduced"]["mode"] == "reduced");
    CHECK(slurp(d / "t.reduced.csv").rfind("t,x,v_x,vhat_y,p_x\n", 0) == 0);

    Run c = cli({"check-dirac", "--system", "cyclic-linear", "--mu", "1", "--traj", (d / "t.reduced.csv").string()});
    CHECK(c.code == 0);
    CHECK(c.out.find("mode=reduced") != std::string::npos);
    CHECK(c.out.find("PASS") != std::string::npos);

    Run f = cli({"check-dirac", "--system", "cyclic-linear", "--traj", (d / "t.csv").string()});
    CHECK(f.code == 0);
}

TEST_CASE("check-dirac flags a corrupted trajectory")
{
    fs::path d = scratch("corrupt");
    REQUIRE(cli({"simulate", "--system", "cyclic-linear", "--mu", "1", "--T", "0.1", "--out", (d / "t.csv").string()})
                .code == 0);
    CsvTrajectory tr = read_trajectory_csv((d / "t.csv").string());
    std::string csv = slurp(d / "t.csv");
    // nudge p_x on one row
    std::istringstream is(csv);
    std::ostringstream os;
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        if (n == 50) {
            auto pos = line.rfind(',');
            pos = line.rfind(',', pos - 1);
            line = line.substr(0, pos) + ",3" + line.substr(line.rfind(','));
        }
        os << line << '\n';
        ++n;
    }
    spit(d / "bad.csv", os.str());
    Run c = cli({"check-dirac", "--system", "cyclic-linear", "--mu", "1", "--traj", (d / "bad.csv").string()});
    CHECK(c.code == 1);
    CHECK(c.out.find("FAIL") != std::string::npos);

    spit(d / "hdr.csv", "t,x,q\n0,1,2\n");
    CHECK(cli({"check-dirac", "--system", "cyclic-linear", "--traj", (d / "hdr.csv").string()}).code == 2);
}

TEST_CASE("check runs the suites")
{
    Run r = cli({"check", "--system", "rigid-body", "--samples", "30"});
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS rigid-body routh.rder.X_complete") != std::string::npos);
    Run s = cli({"check", "--system", "rigid-body", "--samples", "30", "--serial"});
    CHECK(s.out == r.out);
}

TEST_CASE("sweep with templated outputs")
{
    fs::path d = scratch("sweep");
    Run r = cli({"sweep", "--system", "central-force", "--param", "mu", "--range", "0.8:1.2:3", "--T", "0.2", "--out",
                 (d / "run{i}.csv").string(), "--summary", (d / "run{i}.json").string(), "--table",
                 (d / "table.csv").string()});
    CHECK(r.code == 0);
    for (int i = 0; i < 3; ++i) {
        CHECK(fs::exists(d / ("run" + std::to_string(i) + ".csv")));
        nlohmann::ordered_json s = load_json(d / ("run" + std::to_string(i) + ".json"));
        CHECK(s["mu"][0].get<double>() == doctest::Approx(0.8 + 0.2 * i));
    }
    std::string table = slurp(d / "table.csv");
    CHECK(table == r.out);
    CHECK(std::count(table.begin(), table.end(), '\n') == 4);
    CHECK(table.rfind("index,mu,status,", 0) == 0);

    Run serial = cli({"sweep", "--system", "central-force", "--param", "mu", "--range", "0.8:1.2:3", "--T", "0.2",
                      "--serial"});
    CHECK(serial.out == r.out);
    CHECK(expand_index("a{i}b{i}", 12) == "a12b12");

    Run m = cli({"sweep", "--system", "central-force", "--param", "mass", "--values", "1,-1", "--T", "0.1"});
    CHECK(m.code == 1);
    CHECK(m.out.find("1,-1,error") != std::string::npos);
}

TEST_CASE("system config files")
{
    fs::path d = scratch("config");
    spit(d / "sys.json", R"({
        "family": "scalar-fields",
        "params": {"m2": 1.0, "m3": 2.0, "declare_constraints": false},
        "extra_constraints": ["x1", "y1"],
        "mu_split": {"A": [0, 1], "I": []},
        "initial": {"q": [0, 0, 1, 1, 0, 0], "v": [0, 0, 0.1, -0.1, 0.5, 0.5]}
    })");
    Run r = cli({"simulate", "--system", (d / "sys.json").string(), "--T", "0.5", "--summary",
                 (d / "s.json").string()});
    CHECK(r.code == 0);
    CHECK(load_json(d / "s.json")["max_momentum_drift"].get<double>() < 1e-8);

    spit(d / "pot.json", R"({"family": "central-force", "params": {"mass": 2.0}, "potential": "-1/r"})");
    CHECK(cli({"simulate", "--system", (d / "pot.json").string(), "--T", "0.2"}).code == 0);

    spit(d / "bad.json", R"({"family": "central-force", "potential": "r^"})");
    CHECK(cli({"simulate", "--system", (d / "bad.json").string()}).code == 2);
    spit(d / "split.json", R"({"family": "scalar-fields", "mu_split": {"A": [0, 5]}})");
    CHECK(cli({"simulate", "--system", (d / "split.json").string()}).code == 2);

    spit(d / "init.json", R"({"q": [1.0, 0.0], "v": [0.0, 1.0]})");
    Run i = cli({"simulate", "--system", "central-force", "--init", (d / "init.json").string(), "--T", "1", "--out",
                 (d / "c.csv").string()});
    CHECK(i.code == 0);
    CHECK(std::abs(read_trajectory_csv((d / "c.csv").string()).states.back()[0] - 1.0) < 1e-7);
}

TEST_CASE("solver failures exit with 1 and name the time")
{
    fs::path d = scratch("collision");
    spit(d / "init.json", R"({"q": [1.0, 1.0, 1e-9, 0.0]})");
    Run r = cli({"simulate", "--system", "vortices", "--init", (d / "init.json").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("CollisionSingularity") != std::string::npos);
    CHECK(r.err.find("t=") != std::string::npos);

    spit(d / "ln.json", R"j({"family": "cyclic-linear", "potential": "-ln(1-x)"})j");
    Run l = cli({"simulate", "--system", (d / "ln.json").string(), "--mu", "1", "--T", "2", "--h", "0.01",
                 "--summary", (d / "s.json").string()});
    CHECK(l.code == 1);
    nlohmann::ordered_json s = load_json(d / "s.json");
    REQUIRE(s.contains("failure"));
    // x = t reaches the log singularity at t = 1
    CHECK((s["failure"]["kind"] == "NewtonDiverged" || s["failure"]["kind"] == "DomainError"));
    CHECK(s["failure"]["time"].get<double>() == doctest::Approx(1.01));
    CHECK(l.err.find("t=1.01") != std::string::npos);
}
