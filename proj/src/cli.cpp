#include "routhsim/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "routhsim/systems.hpp"

namespace routhsim {

namespace {

bool usage_kind(ErrorKind k) { return k == ErrorKind::InvalidArgument || k == ErrorKind::ParseError; }

Failure failure_at(const Error &e, double t) { return Failure{e.kind(), e.what(), t}; }

std::string reduced_path(const std::string &out)
{
    std::filesystem::path p(out);
    std::filesystem::path r = p.parent_path() / (p.stem().string() + ".reduced" + p.extension().string());
    return r.string();
}

std::string fmt(double x)
{
    std::ostringstream ss;
    ss.precision(3);
    ss << std::scientific << x;
    return ss.str();
}

nlohmann::json load_json_file(const std::string &path)
{
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error &e) {
        throw Error(ErrorKind::InvalidArgument, path + ": " + e.what());
    }
}

}  // namespace

SimOutcome simulate(const RunConfig &cfg, const SystemConfig &sc)
{
    if (!(cfg.h > 0.0) || !(cfg.T > 0.0)) throw Error(ErrorKind::InvalidArgument, "--h and --T must be positive");
    const bool both = cfg.mode == "both";
    const Mode mode = both ? Mode::full : parse_mode(cfg.mode);
    LagrangianSystem sys = make_system(sc);
    PontryaginPoint guess = parse_initial(cfg.init.empty() ? sc.initial : load_json_file(cfg.init), sys);

    SimOutcome res;
    Vec<double> mu = cfg.mu;
    if (!mu.empty() && mu.size() != sys.dims.k)
        throw Error(ErrorKind::InvalidArgument, "mu has " + std::to_string(mu.size()) + " entries, system has k=" +
                                                    std::to_string(sys.dims.k));
    StepConfig sc_step;
    sc_step.h = cfg.h;
    sc_step.mode = mode;

    auto init_failure = [&](const Error &e, Mode m) {
        res.primary.mode = m;
        res.summary = summarize(sys.label, mu, res.primary, cfg.h, cfg.T);
        if (both) res.summary.mode = "both";
        res.summary.failure = failure_at(e, 0.0);
        return res;
    };

    std::unique_ptr<Formulation> f;
    Vec<double> s0;
    try {
        if (mu.empty()) mu = momentum_level(sys, guess);
        f = make_formulation(sys, mu, mode);
        s0 = consistent_init(*f, f->pack(guess));
    } catch (const Error &e) {
        if (usage_kind(e.kind())) throw;
        return init_failure(e, mode);
    }
    res.primary = integrate(*f, s0, sc_step, cfg.T);
    res.summary = summarize(sys.label, mu, res.primary, cfg.h, cfg.T);
    if (!both) return res;

    res.summary.mode = "both";
    if (res.primary.failure) return res;
    try {
        auto fr = make_formulation(sys, mu, Mode::reduced);
        Vec<double> r0 = consistent_init(*fr, fr->pack(f->natural(s0)));
        sc_step.mode = Mode::reduced;
        Trajectory tr = integrate(*fr, r0, sc_step, cfg.T);
        Summary rs = summarize(sys.label, mu, tr, cfg.h, cfg.T);
        if (!tr.failure) {
            Trajectory rc = reconstruct(*fr, tr, group_a_coordinates(sys, slice(s0, 0, sys.dims.n)));
            res.summary.full_reduced_gap = full_reduced_gap(sys, res.primary, rc);
        } else {
            res.summary.failure = tr.failure;
        }
        res.summary.reduced = to_json(rs);
        res.reduced = std::move(tr);
    } catch (const Error &e) {
        if (usage_kind(e.kind())) throw;
        res.summary.failure = failure_at(e, 0.0);
    }
    return res;
}

SimOutcome simulate(const RunConfig &cfg) { return simulate(cfg, resolve_system(cfg.system)); }

void write_outputs(const RunConfig &cfg, const SimOutcome &res)
{
    if (!cfg.out.empty()) {
        write_trajectory_csv(cfg.out, res.primary);
        if (res.reduced) write_trajectory_csv(reduced_path(cfg.out), *res.reduced);
    }
    if (!cfg.summary.empty()) {
        std::ofstream f(cfg.summary);
        if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + cfg.summary);
        f << to_json(res.summary).dump(2) << '\n';
    }
}

DiracCheck check_dirac(const LagrangianSystem &sys, Vec<double> mu, const CsvTrajectory &traj)
{
    const Vec<double> probe = mu.empty() ? sys.sym.mu : mu;
    std::unique_ptr<Formulation> f;
    for (Mode m : {Mode::full, Mode::m_mu, Mode::reduced, Mode::classical}) {
        std::unique_ptr<Formulation> g;
        try {
            g = make_formulation(sys, probe, m);
        } catch (const Error &) {
            continue;
        }
        if (g->names() == traj.names) {
            f = std::move(g);
            break;
        }
    }
    if (!f) throw Error(ErrorKind::InvalidArgument, "trajectory header matches no layout of " + sys.label);
    if (traj.states.empty()) throw Error(ErrorKind::InvalidArgument, "trajectory has no rows");
    if (mu.empty()) {
        if (f->mode() != Mode::full)
            throw Error(ErrorKind::InvalidArgument, "--mu is required for " + to_string(f->mode()) + " trajectories");
        PontryaginPoint pt = f->natural(traj.states.front());
        mu = momentum_map<double>(sys, pt.q, pt.v);
    }
    f = make_formulation(sys, mu, f->mode());
    DiracCheck out;
    out.mode = f->mode();
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        out.max_momentum_drift = std::max(out.max_momentum_drift, f->momentum_drift(traj.states[i]));
        if (i == 0) continue;
        const double dt = traj.times[i] - traj.times[i - 1];
        out.max_residual = std::max(out.max_residual, max_abs(f->dirac_residual(traj.states[i - 1], traj.states[i], dt)));
        ++out.steps;
    }
    return out;
}

std::string expand_index(const std::string &pattern, std::size_t i)
{
    std::string s = pattern;
    const std::string key = "{i}";
    for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos))
        s.replace(pos, key.size(), std::to_string(i));
    return s;
}

std::vector<SweepRow> run_sweep(const SweepSpec &spec, Exec ex)
{
    const SystemConfig base_sc = resolve_system(spec.base.system);
    const bool is_mu = spec.param == "mu", is_h = spec.param == "h", is_T = spec.param == "T";
    if (!is_mu && !is_h && !is_T && spec.param != "mass" && spec.param != "m2" && spec.param != "m3")
        throw Error(ErrorKind::InvalidArgument, "cannot sweep '" + spec.param + "'");
    std::size_t k = 0;
    Vec<double> mu0 = spec.base.mu;
    if (is_mu) {
        LagrangianSystem probe = make_system(base_sc);
        k = probe.dims.k;
        if (spec.component >= k) throw Error(ErrorKind::InvalidArgument, "mu component out of range");
        if (mu0.empty()) mu0 = probe.sym.mu;
    }

    std::vector<SweepRow> rows(spec.values.size());
    auto one = [&](std::size_t i) {
        SweepRow &row = rows[i];
        row.index = i;
        row.value = spec.values[i];
        RunConfig c = spec.base;
        c.out = expand_index(c.out, i);
        c.summary = expand_index(c.summary, i);
        SystemConfig sc = base_sc;
        if (is_mu) {
            c.mu = mu0;
            c.mu[spec.component] = row.value;
        } else if (is_h) {
            c.h = row.value;
        } else if (is_T) {
            c.T = row.value;
        } else {
            sc.params[spec.param] = row.value;
        }
        try {
            SimOutcome res = simulate(c, sc);
            write_outputs(c, res);
            row.summary = std::move(res.summary);
        } catch (const std::exception &e) {
            row.error = e.what();
        }
    };
    const long N = static_cast<long>(rows.size());
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < N; ++i) one(static_cast<std::size_t>(i));
    } else {
        for (long i = 0; i < N; ++i) one(static_cast<std::size_t>(i));
    }
    return rows;
}

namespace {

void add_run_options(CLI::App *sub, RunConfig &c, bool needs_mode)
{
    sub->add_option("--system", c.system, "builtin name or system config file")->required();
    sub->add_option("--mu", c.mu, "momentum level (comma separated); default: level of the initial data")
        ->delimiter(',');
    if (needs_mode)
        sub->add_option("--mode", c.mode, "full | reduced | both | m_mu | classical")
            ->check(CLI::IsMember({"full", "reduced", "both", "m_mu", "classical"}));
    sub->add_option("--h", c.h, "step size")->check(CLI::PositiveNumber);
    sub->add_option("--T", c.T, "horizon")->check(CLI::PositiveNumber);
    sub->add_option("--init", c.init, "JSON file with initial q, v, p");
}

int report_failure(const Summary &s, std::ostream &err)
{
    if (!s.failure) return kExitOk;
    err << "error: " << to_string(s.failure->kind) << " at t=" << s.failure->time << ": " << s.failure->message
        << '\n';
    return kExitFail;
}

int do_simulate(const RunConfig &c, std::ostream &out, std::ostream &err)
{
    SimOutcome res = simulate(c);
    write_outputs(c, res);
    const Summary &s = res.summary;
    out << "system=" << s.system << " mode=" << s.mode << " steps=" << (res.primary.size() ? res.primary.size() - 1 : 0)
        << " max_momentum_drift=" << fmt(s.max_momentum_drift) << " max_energy_drift=" << fmt(s.max_energy_drift)
        << " max_dirac_residual=" << fmt(s.max_dirac_residual);
    if (s.full_reduced_gap) out << " full_reduced_gap=" << fmt(*s.full_reduced_gap);
    out << '\n';
    int code = report_failure(s, err);
    if (code != kExitOk) return code;
    if (s.full_reduced_gap && !(*s.full_reduced_gap < kGapTol)) {
        err << "error: full/reduced gap " << fmt(*s.full_reduced_gap) << " exceeds " << fmt(kGapTol) << '\n';
        code = kExitFail;
    }
    if (c.check_dirac) {
        if (c.out.empty()) throw Error(ErrorKind::InvalidArgument, "--check-dirac needs --out");
        LagrangianSystem sys = make_system(resolve_system(c.system));
        std::vector<std::pair<std::string, const Trajectory *>> files{{c.out, &res.primary}};
        if (res.reduced) files.push_back({reduced_path(c.out), &*res.reduced});
        for (const auto &[path, tr] : files) {
            DiracCheck d = check_dirac(sys, s.mu, read_trajectory_csv(path));
            out << "check-dirac " << path << " mode=" << to_string(d.mode) << " max_residual=" << fmt(d.max_residual)
                << (d.max_residual < kDiracTol ? " PASS" : " FAIL") << '\n';
            if (!(d.max_residual < kDiracTol)) code = kExitFail;
        }
    }
    return code;
}

int do_check(const RunConfig &c, std::size_t samples, bool serial, std::ostream &out)
{
    LagrangianSystem sys = make_system(resolve_system(c.system));
    Vec<double> mu = c.mu.empty() ? sys.sym.mu : c.mu;
    if (mu.size() != sys.dims.k) throw Error(ErrorKind::InvalidArgument, "mu length does not match k");
    SuiteReport rep = run_checks(sys, mu, c.seed, samples, serial ? Exec::serial : Exec::parallel);
    for (const auto &r : rep.results)
        out << (r.pass ? "PASS " : "FAIL ") << rep.system << ' ' << r.name << " max=" << fmt(r.max_violation)
            << " tol=" << fmt(r.tolerance) << " samples=" << r.samples << '\n';
    return rep.ok() ? kExitOk : kExitFail;
}

int do_check_dirac(const RunConfig &c, const std::string &traj, std::ostream &out)
{
    LagrangianSystem sys = make_system(resolve_system(c.system));
    DiracCheck d = check_dirac(sys, c.mu, read_trajectory_csv(traj));
    out << "mode=" << to_string(d.mode) << " steps=" << d.steps << " max_dirac_residual=" << fmt(d.max_residual)
        << " max_momentum_drift=" << fmt(d.max_momentum_drift) << (d.max_residual < kDiracTol ? " PASS" : " FAIL")
        << '\n';
    return d.max_residual < kDiracTol ? kExitOk : kExitFail;
}

std::vector<double> parse_range(const std::string &s)
{
    double a = 0, b = 0;
    long n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(s);
    if (!(ss >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !ss.eof())
        throw Error(ErrorKind::InvalidArgument, "--range expects start:stop:count");
    std::vector<double> v;
    for (long i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return v;
}

int do_sweep(SweepSpec spec, const std::string &range, const std::string &table, bool serial, std::ostream &out,
             std::ostream &err)
{
    if (!range.empty()) spec.values = parse_range(range);
    if (spec.values.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs --values or --range");
    std::vector<SweepRow> rows = run_sweep(spec, serial ? Exec::serial : Exec::parallel);
    std::ostringstream tab;
    tab << "index," << spec.param << ",status,max_momentum_drift,max_energy_drift,max_dirac_residual,newton_mean\n";
    int code = kExitOk;
    for (const auto &r : rows) {
        std::string status = "ok";
        if (!r.error.empty()) status = "error";
        else if (r.summary.failure) status = to_string(r.summary.failure->kind);
        if (status != "ok") code = kExitFail;
        char buf[256];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%s,%.17g,%.17g,%.17g,%.17g\n", r.index, r.value, status.c_str(),
                      r.summary.max_momentum_drift, r.summary.max_energy_drift, r.summary.max_dirac_residual,
                      r.summary.newton_mean);
        tab << buf;
        if (!r.error.empty()) err << "run " << r.index << ": " << r.error << '\n';
    }
    out << tab.str();
    if (!table.empty()) {
        std::ofstream f(table);
        if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + table);
        f << tab.str();
    }
    return code;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Routh reduction simulator for symmetric, possibly degenerate Lagrangian systems", "routhsim"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    RunConfig sim;
    auto *s = app.add_subcommand("simulate", "integrate and write trajectory + summary");
    add_run_options(s, sim, true);
    s->add_option("--out", sim.out, "trajectory CSV");
    s->add_option("--summary", sim.summary, "summary JSON");
    s->add_option("--seed", sim.seed, "sampling seed");
    s->add_flag("--check-dirac", sim.check_dirac, "re-read the CSV and check the Dirac residual");

    RunConfig chk;
    std::size_t samples = 200;
    bool chk_serial = false;
    auto *c = app.add_subcommand("check", "run every module's invariant suite");
    c->add_option("--system", chk.system, "builtin name or system config file")->required();
    c->add_option("--mu", chk.mu, "momentum level")->delimiter(',');
    c->add_option("--seed", chk.seed, "sampling seed");
    c->add_option("--samples", samples, "random points per property")->check(CLI::PositiveNumber);
    c->add_flag("--serial", chk_serial, "use the serial kernels");

    SweepSpec sw;
    std::string range, table;
    bool sw_serial = false;
    auto *w = app.add_subcommand("sweep", "grid over one scalar parameter");
    add_run_options(w, sw.base, true);
    w->add_option("--param", sw.param, "mu | h | T | mass | m2 | m3")->required();
    w->add_option("--component", sw.component, "mu component to vary");
    auto *vals = w->add_option("--values", sw.values, "comma separated values")->delimiter(',');
    w->add_option("--range", range, "start:stop:count")->excludes(vals);
    w->add_option("--out", sw.base.out, "trajectory CSV path, {i} is the run index");
    w->add_option("--summary", sw.base.summary, "summary JSON path, {i} is the run index");
    w->add_option("--table", table, "write the sweep table here as well");
    w->add_flag("--serial", sw_serial, "run sequentially");

    RunConfig cd;
    std::string traj;
    auto *d = app.add_subcommand("check-dirac", "Dirac residual along a trajectory file");
    d->add_option("--system", cd.system, "builtin name or system config file")->required();
    d->add_option("--mu", cd.mu, "momentum level")->delimiter(',');
    d->add_option("--traj", traj, "trajectory CSV")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (s->parsed()) return do_simulate(sim, out, err);
        if (c->parsed()) return do_check(chk, samples, chk_serial, out);
        if (w->parsed()) return do_sweep(sw, range, table, sw_serial, out, err);
        if (d->parsed()) return do_check_dirac(cd, traj, out);
    } catch (const Error &e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
        if (usage_kind(e.kind())) {
            err << app.help();
            return kExitUsage;
        }
        return kExitFail;
    }
    return kExitUsage;
}

int run(int argc, const char *const *argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace routhsim
