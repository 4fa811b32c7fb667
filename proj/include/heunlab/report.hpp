#pragma once

// Verification suites, Painleve VI trajectories and their serialisation.
// Reports are deterministic: the same RunConfig gives byte-identical output.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "heunlab/painleve6.hpp"

namespace heunlab
{

inline constexpr const char *kToolVersion = "1.0.0";

struct RunConfig {
    std::string command = "verify"; // verify | trajectory
    std::string suite = "all";      // lame | reduction | p6 | modular | monodromy | all
    // tau samples; when unset every suite uses its own seeded defaults
    std::optional<std::vector<complex>> taus;
    std::string family = "hitchin_l0000";
    complex c1{0.31, 0.0}, c3{0.77, 0.0};
    int branch = 0;
    MultiIndex l{2, 0, 0, 0};
    std::optional<double> tol; // overrides every check tolerance
    Precision precision = Precision::standard;
    std::uint64_t seed = 1;
    std::string format = "json"; // json | csv
};

const std::vector<std::string> &suite_names();

// Throws UsageError for an unknown suite or family, an empty sample list,
// a non-positive tolerance, tau outside the upper half plane or a bad format.
void validate(const RunConfig &config);

struct CheckRecord {
    std::string name;
    std::string anchor; // the identity or property being checked
    nlohmann::ordered_json inputs;
    double residual = 0.0; // NaN when the check could not be evaluated
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

struct Report {
    std::string version = kToolVersion;
    RunConfig config;
    std::vector<CheckRecord> checks; // sorted by name
    int passed = 0, failed = 0;

    bool pass() const { return failed == 0 && !checks.empty(); }
};

// Runs the selected suite(s). Suites of "all" run concurrently; the
// records are merged and sorted. Numerical failures become failed records.
Report run_suite(const RunConfig &config);

std::string report_json(const Report &report);
// name,anchor,residual,tolerance,pass,note
std::string report_csv(const Report &report);

struct TrajectoryRow {
    complex tau, t, b1, delta1, lambda;
    double residual_elliptic = 0.0, residual_rational = 0.0;
    bool flagged = false;
    std::string note;
};

P6Instance instance_from_config(const RunConfig &config);

// One row per grid point; rows at parameter singularities are flagged.
std::vector<TrajectoryRow> emit_trajectory(const P6Instance &inst, const std::vector<complex> &tau_grid);

std::string trajectory_csv(const std::vector<TrajectoryRow> &rows);
std::string trajectory_json(const std::vector<TrajectoryRow> &rows, const RunConfig &config);

// "re+imi", with shortest round-trip digits
std::string format_complex(complex z);
// Accepts "a", "bi", "a+bi", "a-bi", "i", "-i" (and "j" for "i").
complex parse_complex(const std::string &text);
// "a:b:n" (n points from a to b inclusive) or a comma-separated list.
std::vector<complex> parse_tau_grid(const std::string &text);

nlohmann::ordered_json config_json(const RunConfig &config);

} // namespace heunlab
