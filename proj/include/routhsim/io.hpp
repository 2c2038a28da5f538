#pragma once

// Trajectory CSV, run summaries and system config files.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "routhsim/integrator.hpp"

namespace routhsim {

/// Header `t,` then state names; every float with 17 significant digits.
void write_trajectory_csv(std::ostream &os, const Trajectory &traj);
void write_trajectory_csv(const std::string &path, const Trajectory &traj);

struct CsvTrajectory {
    std::vector<std::string> names;
    std::vector<double> times;
    std::vector<Vec<double>> states;
};

CsvTrajectory read_trajectory_csv(std::istream &is);
CsvTrajectory read_trajectory_csv(const std::string &path);

struct Summary {
    std::string system;
    Vec<double> mu;
    std::string mode;
    double h = 0.0, T = 0.0;
    double max_momentum_drift = 0.0;
    double max_energy_drift = 0.0;
    double max_dirac_residual = 0.0;
    long newton_total = 0;
    int newton_max = 0;
    double newton_mean = 0.0;
    std::size_t rank_defect_max = 0;
    std::size_t steps_with_defect = 0;
    std::optional<double> full_reduced_gap;
    std::optional<Failure> failure;
    nlohmann::ordered_json reduced;  // summary of the reduced run in "both" mode
};

Summary summarize(const std::string &system, const Vec<double> &mu, const Trajectory &traj, double h, double T);
nlohmann::ordered_json to_json(const Summary &s);

/// Builtin family plus parameters, user potential, extra constraints and split.
struct SystemConfig {
    std::string family;
    nlohmann::json params = nlohmann::json::object();
    std::optional<std::string> potential;
    std::vector<std::string> extra_constraints;
    std::optional<AlgebraSplit> mu_split;
    nlohmann::json initial;  // null or {q, v, p}
};

SystemConfig parse_system_config(const nlohmann::json &j);
SystemConfig load_system_config(const std::string &path);

/// Builds the system; `spec` is a builtin name or a path to a config file.
LagrangianSystem make_system(const SystemConfig &cfg);
LagrangianSystem make_builtin(const std::string &name);
SystemConfig resolve_system(const std::string &spec);

/// default_initial(sys) overridden by the q, v, p arrays present in j.
PontryaginPoint parse_initial(const nlohmann::json &j, const LagrangianSystem &sys);

}  // namespace routhsim
