#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "heunlab/errors.hpp"
#include "heunlab/report.hpp"

namespace heunlab
{

namespace
{

struct Flags {
    std::vector<std::string> tau;
    std::string tau_grid;
    std::vector<std::string> t;
    std::string family = "hitchin_l0000";
    std::string c1 = "0.31", c3 = "0.77";
    std::optional<std::string> d1, d3;
    int branch = 0;
    std::array<int, 4> l{2, 0, 0, 0};
    std::optional<double> tol;
    std::string precision = "double";
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "json";
};

void add_common(CLI::App *app, Flags &f)
{
    auto *tau = app->add_option("--tau", f.tau, "tau sample(s), e.g. 1.2i or 0.1+1.1i; repeatable or comma-separated")
                    ->delimiter(',');
    auto *grid = app->add_option("--tau-grid", f.tau_grid, "tau samples as start:end:count or a comma list");
    auto *t = app->add_option("--t", f.t, "cross-ratio samples t, mapped to tau in the fundamental domain")
                  ->delimiter(',');
    tau->excludes(grid)->excludes(t);
    grid->excludes(t);
    app->add_option("--family", f.family,
                    "Painleve VI family: hitchin_l0000, explicit_l1000, degenerate_mu0, degenerate_mui, "
                    "degenerate_l1000_cubic, degenerate_l1000_ei")
        ->capture_default_str();
    auto *c1 = app->add_option("--c1", f.c1, "constant C1")->capture_default_str();
    auto *c3 = app->add_option("--c3", f.c3, "constant C3")->capture_default_str();
    app->add_option("--d1", f.d1, "constant D1 (degenerate families)")->excludes(c1);
    app->add_option("--d3", f.d3, "constant D3 (degenerate families)")->excludes(c3);
    app->add_option("--branch", f.branch, "index i in {1,2,3} for degenerate_mui and degenerate_l1000_ei")
        ->capture_default_str();
    app->add_option("--l0", f.l[0], "l_0 of the potential (lame suite)")->capture_default_str();
    app->add_option("--l1", f.l[1], "l_1")->capture_default_str();
    app->add_option("--l2", f.l[2], "l_2")->capture_default_str();
    app->add_option("--l3", f.l[3], "l_3")->capture_default_str();
    app->add_option("--tol", f.tol, "override every tolerance");
    app->add_option("--precision", f.precision, "arithmetic for the elliptic and modular oracles")
        ->check(CLI::IsMember({"double", "extended"}))
        ->capture_default_str();
    app->add_option("--seed", f.seed, "random seed")->capture_default_str();
    app->add_option("--out", f.out, "output file (default: standard output)");
    app->add_option("--format", f.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

RunConfig to_config(const Flags &f)
{
    RunConfig c;
    if (!f.tau.empty()) {
        std::vector<complex> taus;
        for (const auto &s : f.tau)
            taus.push_back(parse_complex(s));
        c.taus = taus;
    } else if (!f.t.empty()) {
        std::vector<complex> taus;
        for (const auto &s : f.t)
            taus.push_back(tau_from_t(parse_complex(s)));
        c.taus = taus;
    }
    c.family = f.family;
    c.c1 = parse_complex(f.d1.value_or(f.c1));
    c.c3 = parse_complex(f.d3.value_or(f.c3));
    c.branch = f.branch;
    c.l = {f.l[0], f.l[1], f.l[2], f.l[3]};
    c.tol = f.tol;
    c.precision = f.precision == "extended" ? Precision::extended : Precision::standard;
    c.seed = f.seed;
    c.format = f.format;
    return c;
}

int emit(const std::string &text, const std::string &path, std::ostream &out, std::ostream &err)
{
    if (path.empty()) {
        out << text;
        return 0;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        err << "heunlab: cannot open " << path << " for writing\n";
        return 2;
    }
    file << text;
    return file ? 0 : 2;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Numerical verification of elliptic Heun and Painleve VI identities", "heunlab"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    Flags vf, tf;
    std::string suite = "all";
    auto *verify = app.add_subcommand("verify", "run a verification suite and write a report");
    verify->add_option("suite", suite, "lame | reduction | p6 | modular | monodromy | all")
        ->check(CLI::IsMember(suite_names()))
        ->capture_default_str();
    add_common(verify, vf);
    auto *traj = app.add_subcommand("trajectory", "tabulate a Painleve VI solution along a tau grid");
    add_common(traj, tf);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const bool is_verify = verify->parsed();
    const Flags &f = is_verify ? vf : tf;
    RunConfig config;
    std::vector<complex> grid;
    try {
        config = to_config(f);
        if ((is_verify ? verify : traj)->count("--tau-grid"))
            config.taus = parse_tau_grid(f.tau_grid);
        config.command = is_verify ? "verify" : "trajectory";
        config.suite = is_verify ? suite : "p6";
        if (!is_verify && !config.taus)
            config.taus = parse_tau_grid("1.0i:1.5i:20");
        validate(config);
    } catch (const UsageError &e) {
        err << "heunlab: " << e.what() << "\n";
        return 2;
    }

    try {
        if (is_verify) {
            Report rep = run_suite(config);
            const int io = emit(config.format == "csv" ? report_csv(rep) : report_json(rep), f.out, out, err);
            if (io)
                return io;
            err << fmt::format("{}: {} passed, {} failed\n", config.suite, rep.passed, rep.failed);
            return rep.pass() ? 0 : 1;
        }
        const auto rows = emit_trajectory(instance_from_config(config), *config.taus);
        const int io = emit(config.format == "csv" ? trajectory_csv(rows) : trajectory_json(rows, config), f.out, out, err);
        if (io)
            return io;
        // status 1 when an unflagged row misses the residual thresholds
        const double te = config.tol.value_or(1e-6), tr = config.tol.value_or(1e-5);
        for (const auto &r : rows)
            if (!r.flagged && !(r.residual_elliptic <= te && r.residual_rational <= tr))
                return 1;
        return 0;
    } catch (const UsageError &e) {
        err << "heunlab: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        err << "heunlab: " << e.what() << "\n";
        return 1;
    }
}

} // namespace heunlab
