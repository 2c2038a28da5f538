#pragma once

// Implicit-midpoint DAE stepping for the full, M_mu, reduced and classical
// residual systems. Differential rows are written as rate residuals
// (s1 - s0)/h - f((s0 + s1)/2); algebraic rows are enforced at s1.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "routhsim/dirac.hpp"

namespace routhsim {

enum class Mode { full, m_mu, reduced, classical };

std::string to_string(Mode m);
Mode parse_mode(const std::string &s);

struct StepConfig {
    double h = 1e-3;
    double newton_tol = 1e-10;
    int max_iters = 50;
    double damping_min = 1.0 / 65536.0;
    Mode mode = Mode::full;
};

/// One residual system with a fixed state layout.
class Formulation {
public:
    virtual ~Formulation() = default;

    virtual Mode mode() const = 0;
    const RouthContext &ctx() const { return ctx_; }
    const LagrangianSystem &sys() const { return ctx_.sys(); }

    const std::vector<std::string> &names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    /// State indices that carry a rate equation, in rate order.
    const std::vector<std::size_t> &differential() const { return diff_; }
    /// Configuration indices held fixed by the first init phase.
    const std::vector<std::size_t> &frozen() const { return frozen_; }
    const std::vector<std::string> &algebraic_labels() const { return alg_labels_; }
    /// Indices that are not differential.
    std::vector<std::size_t> algebraic_variables() const;

    virtual Vec<double> rates(const Vec<double> &s) const = 0;
    virtual Vec<D1> rates(const Vec<D1> &s) const = 0;
    virtual Vec<double> algebraic(const Vec<double> &s) const = 0;
    virtual Vec<D1> algebraic(const Vec<D1> &s) const = 0;
    /// Rows used only by consistent_init (momentum level in full mode).
    virtual Vec<double> init_rows(const Vec<double> &s) const { (void)s; return {}; }
    virtual Vec<D1> init_rows(const Vec<D1> &s) const { (void)s; return {}; }

    /// Natural (q, v, p); theta^A supplies the quotiented group coordinates.
    virtual PontryaginPoint natural(const Vec<double> &s, const Vec<double> &thetaA = {}) const = 0;
    virtual Vec<double> pack(const PontryaginPoint &pt) const = 0;
    /// Continuous residual at the discrete jet: rate blocks at the midpoint, algebraic blocks at s1.
    virtual Vec<double> dirac_residual(const Vec<double> &s0, const Vec<double> &s1, double h) const = 0;

    /// max_a |J(q, v)_a - mu_a| at the natural point.
    double momentum_drift(const Vec<double> &s) const;
    double energy(const Vec<double> &s) const;

protected:
    explicit Formulation(RouthContext ctx) : ctx_(std::move(ctx)) {}

    RouthContext ctx_;
    std::vector<std::string> names_;
    std::vector<std::size_t> diff_, frozen_;
    std::vector<std::string> alg_labels_;
};

std::unique_ptr<Formulation> make_formulation(const LagrangianSystem &sys, const Vec<double> &mu, Mode mode);

/// Stacked step residual; differential rows scaled by 1/h.
template <class T>
Vec<T> step_residual(const Formulation &f, const Vec<double> &s0, const Vec<T> &s1, double h)
{
    const std::size_t N = f.size();
    Vec<T> mid(N);
    for (std::size_t i = 0; i < N; ++i) mid[i] = (s1[i] + s0[i]) * 0.5;
    Vec<T> rate = f.rates(mid);
    const auto &d = f.differential();
    Vec<T> r;
    r.reserve(d.size() + f.algebraic_labels().size());
    for (std::size_t j = 0; j < d.size(); ++j) r.push_back((s1[d[j]] - s0[d[j]]) / h - rate[j]);
    append(r, f.algebraic(s1));
    return r;
}

struct StepResult {
    Vec<double> state;
    int newton_iters = 0;
    std::size_t rank_defect = 0;
    double residual = 0.0;
};

/// Damped Newton with minimum-norm steps. prev enables the linear predictor.
StepResult step(const Formulation &f, const Vec<double> &s0, const StepConfig &cfg, const Vec<double> *prev = nullptr);
Vec<double> step(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &s0, const StepConfig &cfg);

struct InitReport {
    bool ok = false;
    Vec<double> state;
    double residual = 0.0;
    double hidden_residual = 0.0;
    std::size_t rank_defect = 0;
    std::vector<Vec<double>> null_basis;         // over null_basis_vars
    std::vector<std::string> null_basis_vars;
    std::vector<std::string> offending_rows;
    std::string message;
};

inline constexpr double kHiddenTol = 1e-8;

/// Gauss-Newton projection onto the algebraic rows, then the hidden rows
/// obtained by differentiating rank-deficient algebraic rows along the flow.
/// pin_momentum = false drops the init-only rows (momentum level in full mode).
InitReport consistent_init_report(const Formulation &f, const Vec<double> &guess, double tol = 1e-10,
                                  bool pin_momentum = true);
/// Throws Inconsistent naming the offending rows.
Vec<double> consistent_init(const Formulation &f, const Vec<double> &guess, double tol = 1e-10);
Vec<double> consistent_init(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &guess, Mode mode);

/// Momentum level of a natural guess after projecting p onto dL/dv.
Vec<double> momentum_level(const LagrangianSystem &sys, const PontryaginPoint &guess);

struct StepDiagnostics {
    double momentum_drift = 0.0;
    double energy_drift = 0.0;
    double dirac_residual = 0.0;
    int newton_iters = 0;
    std::size_t rank_defect = 0;
};

struct Failure {
    ErrorKind kind;
    std::string message;
    double time = 0.0;
};

struct Trajectory {
    Mode mode = Mode::full;
    std::vector<std::string> names;
    std::vector<double> times;
    std::vector<Vec<double>> states;
    std::vector<StepDiagnostics> diagnostics;
    std::optional<Failure> failure;

    std::size_t size() const { return times.size(); }
    /// Rethrows a recorded failure as SolverError with its time.
    void throw_if_failed() const;
};

Trajectory integrate(const Formulation &f, const Vec<double> &s0, const StepConfig &cfg, double T);
Trajectory integrate(const LagrangianSystem &sys, const Vec<double> &mu, const Vec<double> &s0, const StepConfig &cfg,
                     double T);

/// Midpoint integration of theta^A-dot = (L vhat - Lambda v)^A along a reduced
/// trajectory; returns natural (q, v, p) samples in full-mode layout.
Trajectory reconstruct(const Formulation &reduced, const Trajectory &traj, const Vec<double> &thetaA0);
Trajectory reconstruct(const LagrangianSystem &sys, const Vec<double> &mu, const Trajectory &traj,
                       const Vec<double> &thetaA0);

/// Sup-norm over samples of natural q, shape velocities and natural p
/// between two full-layout trajectories with identical times.
double full_reduced_gap(const LagrangianSystem &sys, const Trajectory &full, const Trajectory &recon);

/// theta^A components of a natural configuration.
Vec<double> group_a_coordinates(const LagrangianSystem &sys, const Vec<double> &q);

}  // namespace routhsim
