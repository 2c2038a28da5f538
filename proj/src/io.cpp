#include "routhsim/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "routhsim/systems.hpp"

namespace routhsim {

using nlohmann::json;

namespace {

std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string &line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

double parse_double(const std::string &s)
{
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &pos);
    } catch (const std::exception &) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw Error(ErrorKind::InvalidArgument, "bad number in CSV: '" + s + "'");
    return x;
}

Vec<double> vec_from(const json &j, const char *what)
{
    if (!j.is_array()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be an array of numbers");
    Vec<double> v;
    for (const auto &x : j) {
        if (!x.is_number()) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be an array of numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

std::vector<std::size_t> indices_from(const json &j)
{
    std::vector<std::size_t> v;
    for (const auto &x : j) {
        if (!x.is_number_unsigned()) throw Error(ErrorKind::InvalidArgument, "mu_split entries must be indices");
        v.push_back(x.get<std::size_t>());
    }
    return v;
}

double param(const json &p, const char *key, double dflt)
{
    if (!p.contains(key)) return dflt;
    if (!p[key].is_number()) throw Error(ErrorKind::InvalidArgument, std::string("param ") + key + " must be a number");
    return p[key].get<double>();
}

}  // namespace

void write_trajectory_csv(std::ostream &os, const Trajectory &traj)
{
    os << 't';
    for (const auto &n : traj.names) os << ',' << n;
    os << '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        os << fmt17(traj.times[i]);
        for (double x : traj.states[i]) os << ',' << fmt17(x);
        os << '\n';
    }
}

void write_trajectory_csv(const std::string &path, const Trajectory &traj)
{
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    write_trajectory_csv(f, traj);
}

CsvTrajectory read_trajectory_csv(std::istream &is)
{
    CsvTrajectory out;
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::InvalidArgument, "empty trajectory file");
    auto head = split_csv_line(line);
    if (head.empty() || head[0] != "t") throw Error(ErrorKind::InvalidArgument, "trajectory header must start with t");
    out.names.assign(head.begin() + 1, head.end());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != head.size())
            throw Error(ErrorKind::InvalidArgument, "trajectory row has " + std::to_string(cells.size()) +
                                                        " cells, header has " + std::to_string(head.size()));
        out.times.push_back(parse_double(cells[0]));
        Vec<double> s;
        for (std::size_t i = 1; i < cells.size(); ++i) s.push_back(parse_double(cells[i]));
        out.states.push_back(std::move(s));
    }
    return out;
}

CsvTrajectory read_trajectory_csv(const std::string &path)
{
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
    return read_trajectory_csv(f);
}

Summary summarize(const std::string &system, const Vec<double> &mu, const Trajectory &traj, double h, double T)
{
    Summary s;
    s.system = system;
    s.mu = mu;
    s.mode = to_string(traj.mode);
    s.h = h;
    s.T = T;
    std::size_t steps = 0;
    for (std::size_t i = 0; i < traj.diagnostics.size(); ++i) {
        const auto &d = traj.diagnostics[i];
        s.max_momentum_drift = std::max(s.max_momentum_drift, d.momentum_drift);
        s.max_energy_drift = std::max(s.max_energy_drift, d.energy_drift);
        s.max_dirac_residual = std::max(s.max_dirac_residual, d.dirac_residual);
        if (i == 0) continue;
        ++steps;
        s.newton_total += d.newton_iters;
        s.newton_max = std::max(s.newton_max, d.newton_iters);
        s.rank_defect_max = std::max(s.rank_defect_max, d.rank_defect);
        if (d.rank_defect > 0) ++s.steps_with_defect;
    }
    s.newton_mean = steps ? static_cast<double>(s.newton_total) / static_cast<double>(steps) : 0.0;
    s.failure = traj.failure;
    return s;
}

nlohmann::ordered_json to_json(const Summary &s)
{
    nlohmann::ordered_json j;
    j["system"] = s.system;
    j["mu"] = s.mu;
    j["mode"] = s.mode;
    j["h"] = s.h;
    j["T"] = s.T;
    j["max_momentum_drift"] = s.max_momentum_drift;
    j["max_energy_drift"] = s.max_energy_drift;
    j["max_dirac_residual"] = s.max_dirac_residual;
    j["newton_stats"] = {{"total", s.newton_total}, {"mean", s.newton_mean}, {"max", s.newton_max}};
    j["rank_defects"] = {{"max", s.rank_defect_max}, {"steps_with_defect", s.steps_with_defect}};
    if (s.full_reduced_gap) j["full_reduced_gap"] = *s.full_reduced_gap;
    if (!s.reduced.is_null()) j["reduced"] = s.reduced;
    if (s.failure)
        j["failure"] = {{"kind", to_string(s.failure->kind)}, {"message", s.failure->message}, {"time", s.failure->time}};
    return j;
}

SystemConfig parse_system_config(const json &j)
{
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "system config must be an object");
    SystemConfig c;
    if (!j.contains("family") || !j["family"].is_string())
        throw Error(ErrorKind::InvalidArgument, "system config needs a string 'family'");
    c.family = j["family"].get<std::string>();
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw Error(ErrorKind::InvalidArgument, "'params' must be an object");
        c.params = j["params"];
    }
    if (j.contains("potential")) c.potential = j["potential"].get<std::string>();
    if (j.contains("extra_constraints"))
        for (const auto &e : j["extra_constraints"]) c.extra_constraints.push_back(e.get<std::string>());
    if (j.contains("mu_split")) {
        const auto &s = j["mu_split"];
        AlgebraSplit sp;
        if (s.contains("A")) sp.A = indices_from(s["A"]);
        if (s.contains("I")) sp.I = indices_from(s["I"]);
        c.mu_split = sp;
    }
    if (j.contains("initial")) c.initial = j["initial"];
    return c;
}

SystemConfig load_system_config(const std::string &path)
{
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot read system config " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::InvalidArgument, path + ": " + e.what());
    }
    return parse_system_config(j);
}

LagrangianSystem make_system(const SystemConfig &c)
{
    const json &p = c.params;
    auto potential = [&](const char *dflt) { return PotentialExpr::parse(c.potential ? *c.potential : dflt); };
    LagrangianSystem sys;
    if (c.family == "cyclic-linear") {
        sys = make_cyclic_linear(potential("x^2/2"));
    } else if (c.family == "central-force") {
        sys = make_central_force(param(p, "mass", 1.0), potential("r^2/2"));
    } else if (c.family == "scalar-fields") {
        bool declared = p.value("declare_constraints", true);
        sys = make_scalar_fields(param(p, "m2", 1.0), param(p, "m3", 1.0), declared);
    } else if (c.family == "vortices") {
        sys = make_point_vortices(p.contains("gamma") ? vec_from(p["gamma"], "gamma") : Vec<double>{1.0, 1.0});
    } else if (c.family == "rigid-body") {
        Vec<double> I = p.contains("inertia") ? vec_from(p["inertia"], "inertia") : Vec<double>{1.0, 2.0, 3.0};
        Vec<double> mu = p.contains("mu") ? vec_from(p["mu"], "mu") : Vec<double>{0.0, 0.0, 1.0};
        sys = make_rigid_body(I, mu);
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown system family '" + c.family + "'");
    }
    if (c.potential && c.family != "cyclic-linear" && c.family != "central-force")
        throw Error(ErrorKind::InvalidArgument, c.family + " takes no potential");
    for (const auto &e : c.extra_constraints) sys.extra_constraints.push_back(constraint_from_expr(sys.coord_names, e));
    if (c.mu_split) {
        for (auto idx : {&c.mu_split->A, &c.mu_split->I})
            for (std::size_t i : *idx)
                if (i >= sys.dims.k) throw Error(ErrorKind::InvalidArgument, "mu_split index out of range");
        sys.sym.split = *c.mu_split;
    }
    return sys;
}

LagrangianSystem make_builtin(const std::string &name)
{
    SystemConfig c;
    c.family = name;
    return make_system(c);
}

SystemConfig resolve_system(const std::string &spec)
{
    for (const auto &n : builtin_names())
        if (n == spec) {
            SystemConfig c;
            c.family = spec;
            return c;
        }
    if (std::filesystem::exists(spec)) return load_system_config(spec);
    std::string names;
    for (const auto &n : builtin_names()) names += (names.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::InvalidArgument, "unknown system '" + spec + "' (builtins: " + names + ")");
}

PontryaginPoint parse_initial(const json &j, const LagrangianSystem &sys)
{
    PontryaginPoint pt = default_initial(sys);
    if (j.is_null()) return pt;
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "initial data must be an object");
    const std::size_t n = sys.dims.n;
    auto take = [&](const char *key, Vec<double> &dst) {
        if (!j.contains(key)) return;
        Vec<double> v = vec_from(j[key], key);
        if (v.size() != n)
            throw Error(ErrorKind::InvalidArgument,
                        std::string("initial ") + key + " needs " + std::to_string(n) + " entries");
        dst = std::move(v);
    };
    take("q", pt.q);
    take("v", pt.v);
    if (j.contains("p")) {
        take("p", pt.p);
    } else {
        try {
            pt.p = lagrangian_partials<double>(sys.L, pt.q, pt.v).second;
        } catch (const Error &) {
            // left to the initialisation, which records the failure
        }
    }
    return pt;
}

}  // namespace routhsim
