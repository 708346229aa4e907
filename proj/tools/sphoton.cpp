// Command-line front end: one subcommand per experiment.
//
// Exit status: 0 ok, 1 usage, 2 numeric failure (including failed verify
// checks), 3 I/O.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "sphoton/errors.hpp"
#include "sphoton/experiments.hpp"
#include "sphoton/verify.hpp"

namespace {

using namespace sphoton;

enum Exit { ok = 0, usage = 1, numeric = 2, io = 3 };

struct Flags {
    CLI::Option *seed = nullptr;
    CLI::Option *threads = nullptr;
    CLI::Option *n_traj = nullptr;
};

Flags add_common(CLI::App *cmd, ExperimentSpec &spec) {
    Flags f;
    cmd->add_option("--pulse", spec.pulse, "square | exponential | file:<path>")->capture_default_str();
    cmd->add_option("--omega", spec.omega, "pulse bandwidth Omega")->capture_default_str();
    cmd->add_option("--gamma", spec.gamma, "decay rate Gamma")->capture_default_str();
    cmd->add_option("--delta0", spec.delta0, "detuning Delta0")->capture_default_str();
    cmd->add_option("--rho0", spec.rho0, "initial state: g | e | plus | file:<path>")->capture_default_str();
    cmd->add_option("--t-end", spec.t_end, "final time (default 10; figure1: 80 / Gamma)");
    cmd->add_option("--grid-points", spec.grid_points, "output grid size")->capture_default_str();
    cmd->add_option("--dt", spec.dt, "SDE step, or collision tau")->capture_default_str();
    f.n_traj = cmd->add_option("--n-traj", spec.n_traj, "number of trajectories (verify: 4000 unless given)")
                   ->capture_default_str();
    f.seed = cmd->add_option("--seed", spec.seed, "base seed (env SPHOTON_SEED)")->capture_default_str();
    f.threads = cmd->add_option("--threads", spec.threads, "worker threads, 0 = all (env SPHOTON_THREADS)");
    cmd->add_option("--out", spec.out, "output file (default stdout)");
    cmd->add_option("--format", spec.format, "csv | json")->capture_default_str();
    return f;
}

void emit(const ExperimentSpec &spec, const Table &table) {
    const TableFormat fmt = parse_format(spec.format);
    if (spec.out)
        write_table(*spec.out, table, fmt);
    else
        std::cout << (fmt == TableFormat::csv ? table.to_csv() : table.to_json());
}

int run(const ExperimentSpec &spec, bool n_traj_given) {
    spec.validate();
    if (spec.command == "apriori")
        emit(spec, cmd_apriori(spec));
    else if (spec.command == "traj") {
        std::vector<std::string> warnings;
        const Table t = cmd_traj(spec, &warnings);
        for (const auto &w : warnings)
            std::cerr << "warning: " << w << '\n';
        emit(spec, t);
    } else if (spec.command == "povm")
        emit(spec, cmd_povm(spec));
    else if (spec.command == "stats")
        emit(spec, cmd_stats(spec));
    else if (spec.command == "collision") {
        double order = 0.0;
        const Table t = cmd_collision(spec, &order);
        if (spec.study)
            std::cerr << "fitted order: " << order << '\n';
        emit(spec, t);
    } else if (spec.command == "figure1")
        emit(spec, cmd_figure1(spec));
    else if (spec.command == "verify") {
        VerifyOptions opt;
        opt.seed = spec.seed;
        opt.threads = spec.threads;
        if (n_traj_given)
            opt.n_traj = spec.n_traj;
        opt.corrupt = spec.corrupt_tolerance;
        const auto results = run_verify(opt);
        bool all = true;
        for (const auto &r : results) {
            std::fprintf(stderr, "%-22s %s  residual %.3e  tolerance %.1e\n", r.name.c_str(),
                         r.passed ? "pass" : "FAIL", r.residual, r.tolerance);
            all = all && r.passed;
        }
        emit(spec, verify_table(results));
        if (!all) {
            std::cerr << "verify failed:";
            for (const auto &r : results)
                if (!r.passed)
                    std::cerr << ' ' << r.name;
            std::cerr << '\n';
            return numeric;
        }
    }
    return ok;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Two-level atom driven by a single-photon wavepacket under photon counting"};
    app.require_subcommand(1);

    ExperimentSpec spec;
    std::vector<std::pair<CLI::App *, Flags>> commands;
    const std::pair<const char *, const char *> names[] = {
        {"apriori", "a-priori state on a time grid"},
        {"traj", "Monte-Carlo ensemble of counting trajectories"},
        {"povm", "POVM elements on a time grid"},
        {"stats", "count probabilities, moments and Mandel Q"},
        {"collision", "repeated-interactions chain: outcome record or convergence study"},
        {"figure1", "mean count curves for both pulses at Omega / Gamma = 0.75, 0.30, 0.15"},
        {"verify", "self-check suite; exit status 0 iff every check passes"},
    };
    for (const auto &[name, help] : names) {
        CLI::App *cmd = app.add_subcommand(name, help);
        commands.emplace_back(cmd, add_common(cmd, spec));
        if (std::string(name) == "traj") {
            cmd->add_option("--dump", spec.dump, "also write individual trajectories here");
            cmd->add_option("--dump-count", spec.dump_count, "trajectories to dump")->capture_default_str();
            cmd->add_flag("--dump-split", spec.dump_split, "one file per trajectory");
        }
        if (std::string(name) == "collision")
            cmd->add_flag("--study", spec.study, "convergence table over tau = 4dt, 2dt, dt");
        if (std::string(name) == "verify")
            cmd->add_option("--corrupt-tolerance", spec.corrupt_tolerance)->group("");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        bool n_traj_given = false;
        for (const auto &[cmd, flags] : commands)
            if (cmd->parsed()) {
                spec.command = cmd->get_name();
                apply_environment(spec, flags.seed->count() > 0, flags.threads->count() > 0);
                n_traj_given = flags.n_traj->count() > 0;
            }
        return run(spec, n_traj_given);
    } catch (const IoError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return io;
    } catch (const InvalidArgument &e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const std::exception &e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return numeric;
    }
}
