#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "heunlab/report.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace heunlab;
using testutil::I;

namespace
{

struct Run {
    int status;
    std::string out, err;
};

Run cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "heunlab");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    int status = run_cli(int(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::vector<std::vector<std::string>> csv_rows(const std::string &text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::string cell;
        bool quoted = false;
        for (char ch : line) {
            if (ch == '"')
                quoted = !quoted;
            else if (ch == ',' && !quoted) {
                row.push_back(cell);
                cell.clear();
            } else
                cell += ch;
        }
        row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

} // namespace

TEST_CASE("verify modular at one tau runs the four derivative checks")
{
    auto r = cli({"verify", "modular", "--tau", "1.2i"});
    REQUIRE(r.status == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["version"] == kToolVersion);
    CHECK(j["summary"]["total"] == 4);
    CHECK(j["summary"]["passed"] == 4);
    CHECK(j["summary"]["pass"] == true);
    std::vector<std::string> names;
    for (const auto &c : j["checks"]) {
        names.push_back(c["name"]);
        CHECK(c["residual"].get<double>() < 1e-6);
        CHECK(c["tolerance"].get<double>() == 1e-6);
        CHECK(c["inputs"]["tau"]["im"].get<double>() == 1.2);
        CHECK(!c["anchor"].get<std::string>().empty());
    }
    CHECK(names == std::vector<std::string>{"modular.de_dtau.00", "modular.deta1_dtau.00", "modular.dpow_dtau.00",
                                            "modular.dt_dtau.00"});
    // top-level layout
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it)
        keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"checks", "config", "summary", "version"});
}

TEST_CASE("the same seed and config give byte-identical reports")
{
    for (const char *suite : {"all", "lame", "monodromy"}) {
        auto a = cli({"verify", suite, "--seed", "42"});
        auto b = cli({"verify", suite, "--seed", "42"});
        CHECK(a.status == 0);
        CHECK(a.out == b.out);
    }
    auto c = cli({"verify", "lame", "--seed", "43"});
    CHECK(c.out != cli({"verify", "lame", "--seed", "42"}).out);
    // a suite's records do not depend on whether it runs inside "all"
    auto all = nlohmann::json::parse(cli({"verify", "all", "--seed", "5"}).out);
    auto red = nlohmann::json::parse(cli({"verify", "reduction", "--seed", "5"}).out);
    nlohmann::json sub = nlohmann::json::array();
    for (const auto &ch : all["checks"])
        if (ch["name"].get<std::string>().rfind("reduction.", 0) == 0)
            sub.push_back(ch);
    CHECK(sub == red["checks"]);
}

TEST_CASE("rerunning the echoed config reproduces the report")
{
    auto r = cli({"verify", "p6", "--family", "explicit_l1000", "--c1", "0.2+0.1i", "--c3", "0.6", "--tau-grid",
                  "1.05i:1.25i:5", "--seed", "9"});
    REQUIRE(r.status == 0);
    auto j = nlohmann::json::parse(r.out);
    const auto &c = j["config"];
    RunConfig cfg;
    cfg.command = c["command"];
    cfg.suite = c["suite"];
    std::vector<complex> taus;
    for (const auto &t : c["taus"])
        taus.emplace_back(t["re"].get<double>(), t["im"].get<double>());
    cfg.taus = taus;
    cfg.family = c["family"];
    cfg.c1 = {c["c1"]["re"].get<double>(), c["c1"]["im"].get<double>()};
    cfg.c3 = {c["c3"]["re"].get<double>(), c["c3"]["im"].get<double>()};
    cfg.branch = c["branch"];
    for (int i = 0; i < 4; ++i)
        cfg.l[i] = c["l"][i];
    cfg.seed = c["seed"];
    CHECK(report_json(run_suite(cfg)) == r.out);
}

TEST_CASE("exit status")
{
    CHECK(cli({"verify", "modular", "--tau", "1.2i", "--tol", "1e-30"}).status == 1);
    CHECK(cli({"--help"}).status == 0);
    CHECK(cli({"verify", "--help"}).status == 0);
    CHECK(cli({}).status == 2);
    CHECK(cli({"verify", "nonsense"}).status == 2);
    CHECK(cli({"verify", "modular", "--tau-grid", "1i:2i:0"}).status == 2);
    CHECK(cli({"verify", "modular", "--tau-grid", ""}).status == 2);
    CHECK(cli({"verify", "modular", "--tau", "1.2x"}).status == 2);
    CHECK(cli({"verify", "modular", "--tau", "-0.3i"}).status == 2);
    CHECK(cli({"verify", "modular", "--tol", "0"}).status == 2);
    CHECK(cli({"verify", "modular", "--precision", "quad"}).status == 2);
    CHECK(cli({"verify", "modular", "--format", "xml"}).status == 2);
    CHECK(cli({"verify", "modular", "--frobnicate"}).status == 2);
    CHECK(cli({"verify", "p6", "--family", "degenerate_mui"}).status == 2);
    CHECK(cli({"verify", "p6", "--family", "hitchin_l0000", "--branch", "2"}).status == 2);
    CHECK(cli({"verify", "p6", "--family", "no_such_family"}).status == 2);
    CHECK(cli({"verify", "modular", "--tau", "1.2i", "--tau-grid", "1i:2i:3"}).status == 2);
    auto r = cli({"verify", "modular", "--tau-grid", "1i:2i:0"});
    CHECK(r.out.empty());
    CHECK(r.err.find("empty") != std::string::npos);
}

TEST_CASE("csv report and output file")
{
    auto r = cli({"verify", "modular", "--tau", "1.2i", "--format", "csv"});
    REQUIRE(r.status == 0);
    auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"name", "anchor", "residual", "tolerance", "pass", "note"});
    for (std::size_t k = 1; k < rows.size(); ++k) {
        REQUIRE(rows[k].size() == 6);
        CHECK(rows[k][4] == "true");
    }
    const std::string path = "test_cli_report.json";
    auto f = cli({"verify", "modular", "--tau", "1.2i", "--out", path});
    CHECK(f.status == 0);
    CHECK(f.out.empty());
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == cli({"verify", "modular", "--tau", "1.2i"}).out);
    std::remove(path.c_str());
    CHECK(cli({"verify", "modular", "--out", "/nonexistent-dir/x.json"}).status == 2);
}

TEST_CASE("report serialisation of unusable residuals")
{
    Report rep;
    CheckRecord c;
    c.name = "x.y.00";
    c.anchor = "a, with a comma";
    c.inputs = nlohmann::ordered_json::object();
    c.residual = std::nan("");
    c.tolerance = 1e-6;
    c.note = "integration failed \"badly\"";
    rep.checks.push_back(c);
    rep.failed = 1;
    CHECK(!rep.pass());
    auto j = nlohmann::json::parse(report_json(rep));
    CHECK(j["checks"][0]["residual"].is_null());
    CHECK(j["summary"]["pass"] == false);
    auto rows = csv_rows(report_csv(rep));
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][1] == "a, with a comma");
    CHECK(rows[1][2] == "nan");
    CHECK(Report{}.pass() == false);
}

TEST_CASE("tolerance override applies to every check")
{
    RunConfig cfg;
    cfg.suite = "modular";
    cfg.taus = std::vector<complex>{{0.1, 1.3}};
    cfg.tol = 0.5;
    for (const auto &c : run_suite(cfg).checks)
        CHECK(c.tolerance == 0.5);
}

TEST_CASE("complex number text round trip")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e3, 1e3), e(-300, 300);
    for (int k = 0; k < 500; ++k) {
        complex z{u(rng) * std::pow(10.0, e(rng) / 10), u(rng) * std::pow(10.0, e(rng) / 10)};
        CHECK(parse_complex(format_complex(z)) == z);
    }
    CHECK(format_complex({1.5, -2.0}) == "1.5-2i");
    CHECK(format_complex({0.0, 1.2}) == "0+1.2i");
    CHECK(parse_complex("1.2i") == complex(0.0, 1.2));
    CHECK(parse_complex("i") == complex(0.0, 1.0));
    CHECK(parse_complex("-i") == complex(0.0, -1.0));
    CHECK(parse_complex("0.3-j") == complex(0.3, -1.0));
    CHECK(parse_complex(" 2 ") == complex(2.0, 0.0));
    CHECK(parse_complex("1e-3+2.5e+2i") == complex(1e-3, 250.0));
    CHECK(parse_complex("-1.5e-2-3i") == complex(-1.5e-2, -3.0));
    for (const char *bad : {"", "abc", "1+", "1.2.3i", "i2", "1+2ii"})
        CHECK_THROWS_AS(parse_complex(bad), UsageError);

    auto g = parse_tau_grid("1i:2i:5");
    REQUIRE(g.size() == 5);
    CHECK(std::abs(g[2] - complex(0.0, 1.5)) < 1e-15);
    CHECK(parse_tau_grid("1.2i:3i:1") == std::vector<complex>{{0.0, 1.2}});
    CHECK(parse_tau_grid("1.2i, 0.1+1i") == std::vector<complex>{{0.0, 1.2}, {0.1, 1.0}});
    CHECK(parse_tau_grid("").empty());
    CHECK_THROWS_AS(parse_tau_grid("1i:2i"), UsageError);
    CHECK_THROWS_AS(parse_tau_grid("1i:2i:x"), UsageError);
    CHECK_THROWS_AS(parse_tau_grid("1i:2i:-1"), UsageError);
}

TEST_CASE("trajectory: one grid point gives one row")
{
    auto r = cli({"trajectory", "--tau", "1.2i", "--format", "csv"});
    REQUIRE(r.status == 0);
    auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"tau", "t", "b1", "delta1", "lambda", "residual_elliptic",
                                              "residual_rational", "flagged", "note"});
    CHECK(parse_complex(rows[1][0]) == complex(0.0, 1.2));
    CHECK(rows[1][7] == "0");
}

TEST_CASE("trajectory: degenerate_mu0 with (D1, D3) = (0, 1) has b1 = -2 eta1")
{
    auto r = cli({"trajectory", "--family", "degenerate_mu0", "--d1", "0", "--d3", "1", "--tau-grid",
                  "0.1+1.0i:0.1+1.6i:7", "--format", "csv"});
    REQUIRE(r.status == 0);
    auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 8);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const complex tau = parse_complex(rows[k][0]);
        const complex b1 = parse_complex(rows[k][2]);
        const complex eta1 = oracle::to_double(oracle::eta1(oracle::from(tau)));
        CHECK(std::abs(b1 + 2.0 * eta1) < 1e-12 * std::max(1.0, std::abs(eta1)));
    }
}

TEST_CASE("trajectory: hitchin family on a 50-point imaginary grid")
{
    auto r = cli({"trajectory", "--tau-grid", "0.9i:1.9i:50", "--c1", "0.31", "--c3", "0.77"});
    REQUIRE(r.status == 0);
    auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["rows"].size() == 50);
    CHECK(j["columns"].size() == 9);
    complex prev;
    for (std::size_t k = 0; k < 50; ++k) {
        const auto &row = j["rows"][k];
        CHECK(row["flagged"] == false);
        CHECK(row["residual_elliptic"].get<double>() < 1e-6);
        CHECK(row["residual_rational"].get<double>() < 1e-6);
        const complex d{row["delta1"]["re"].get<double>(), row["delta1"]["im"].get<double>()};
        if (k > 0)
            CHECK(std::abs(d - prev) < 0.1); // continuous branch of delta_1
        prev = d;
    }
}

TEST_CASE("trajectory: t samples map to tau")
{
    auto r = cli({"trajectory", "--t", "0.4+0.2i", "--format", "csv"});
    REQUIRE(r.status == 0);
    auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(std::abs(parse_complex(rows[1][1]) - complex(0.4, 0.2)) < 1e-10);
}
