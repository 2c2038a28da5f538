// Serial vs OpenMP timings for the random-point suites and the parameter sweep.
// usage: bench_parallel [samples] [reps]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "routhsim/cli.hpp"
#include "routhsim/systems.hpp"

using namespace routhsim;

namespace {

double best_of(int reps, const std::function<void()> &fn)
{
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const char *what, double serial, double parallel, bool same)
{
    std::printf("%-28s serial %8.4f s  parallel %8.4f s  speedup %5.2fx  %s\n", what, serial, parallel,
                serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char **argv)
{
    const std::size_t samples = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 200;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
    std::printf("threads=%d samples=%zu reps=%d\n", omp_get_max_threads(), samples, reps);

    for (const std::string &name : builtin_names()) {
        LagrangianSystem sys = make_builtin(name);
        SuiteReport s, p;
        double ts = best_of(reps, [&] { s = run_checks(sys, sys.sym.mu, 7, samples, Exec::serial); });
        double tp = best_of(reps, [&] { p = run_checks(sys, sys.sym.mu, 7, samples, Exec::parallel); });
        bool same = s.results.size() == p.results.size();
        for (std::size_t i = 0; same && i < s.results.size(); ++i)
            same = s.results[i].max_violation == p.results[i].max_violation;
        row(("check " + name).c_str(), ts, tp, same);
    }

    SweepSpec sw;
    sw.base.system = "central-force";
    sw.base.T = 2.0;
    sw.param = "mu";
    for (int i = 0; i < 8; ++i) sw.values.push_back(0.6 + 0.1 * i);
    std::vector<SweepRow> a, b;
    double ts = best_of(reps, [&] { a = run_sweep(sw, Exec::serial); });
    double tp = best_of(reps, [&] { b = run_sweep(sw, Exec::parallel); });
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i)
        same = to_json(a[i].summary).dump() == to_json(b[i].summary).dump();
    row("sweep central-force x8", ts, tp, same);
    return 0;
}
