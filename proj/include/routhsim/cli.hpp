#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "routhsim/io.hpp"
#include "routhsim/verify.hpp"

namespace routhsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

inline constexpr double kGapTol = 1e-6;
inline constexpr double kDiracTol = 1e-8;

struct RunConfig {
    std::string system = "cyclic-linear";
    Vec<double> mu;  // empty: momentum level of the initial data
    std::string mode = "full";  // full | m_mu | reduced | classical | both
    double h = 1e-3;
    double T = 1.0;
    std::string out, summary;
    std::uint64_t seed = 7;
    bool check_dirac = false;
    std::string init;  // JSON file with q, v, p
};

struct SimOutcome {
    Summary summary;
    Trajectory primary;                 // full trajectory in "both" mode
    std::optional<Trajectory> reduced;  // "both" mode only
};

/// Builds, initializes and integrates; solver failures land in summary.failure.
/// Usage problems (bad mu length, unknown system) throw InvalidArgument.
SimOutcome simulate(const RunConfig &cfg, const SystemConfig &sc);
SimOutcome simulate(const RunConfig &cfg);

/// Writes cfg.out / cfg.summary when set; the reduced run of "both" goes to <out stem>.reduced<ext>.
void write_outputs(const RunConfig &cfg, const SimOutcome &res);

struct DiracCheck {
    Mode mode = Mode::full;
    double max_residual = 0.0;
    double max_momentum_drift = 0.0;
    std::size_t steps = 0;
};

/// Dirac residual between consecutive rows of a trajectory file.
/// The layout is inferred from the header; mu empty means the level of the first row (full mode only).
DiracCheck check_dirac(const LagrangianSystem &sys, Vec<double> mu, const CsvTrajectory &traj);

struct SweepSpec {
    RunConfig base;
    std::string param;  // mu, h, T, or a numeric system parameter (mass, m2, m3)
    std::size_t component = 0;  // mu component
    std::vector<double> values;
};

struct SweepRow {
    std::size_t index = 0;
    double value = 0.0;
    Summary summary;
    std::string error;  // construction or init failure
};

/// Output paths in base may contain {i}.
std::vector<SweepRow> run_sweep(const SweepSpec &spec, Exec ex = Exec::parallel);

std::string expand_index(const std::string &pattern, std::size_t i);

int run(int argc, const char *const *argv);
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace routhsim
