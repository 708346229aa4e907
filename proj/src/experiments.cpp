#include "sphoton/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sphoton/apriori.hpp"
#include "sphoton/collision.hpp"
#include "sphoton/errors.hpp"
#include "sphoton/filter.hpp"
#include "sphoton/povm.hpp"

namespace sphoton {

namespace {

constexpr double kDefaultEnd = 10.0;
constexpr double kFigureEnd = 80.0;

std::optional<std::string> file_argument(const std::string &value) {
    if (value.rfind("file:", 0) == 0)
        return value.substr(5);
    return std::nullopt;
}

std::uint64_t parse_u64(const char *text, const char *name) {
    char *end = nullptr;
    const unsigned long long v = std::strtoull(text, &end, 10);
    if (end == text || *end != '\0')
        throw UsageError(std::string(name) + " must be a non-negative integer, got '" + text + "'");
    return v;
}

void add_rho_columns(std::vector<Cell> &row, const Operator2 &r) {
    row.emplace_back(r(0, 0).real());
    row.emplace_back(r(1, 1).real());
    row.emplace_back(r(0, 1).real());
    row.emplace_back(r(0, 1).imag());
}

} // namespace

double ExperimentSpec::end_time() const {
    if (t_end)
        return *t_end;
    return command == "figure1" ? kFigureEnd / gamma : kDefaultEnd;
}

void ExperimentSpec::validate() const {
    static const std::vector<std::string> commands = {"apriori", "traj",    "povm",  "stats",
                                                      "collision", "figure1", "verify"};
    if (std::find(commands.begin(), commands.end(), command) == commands.end())
        throw UsageError("unknown command '" + command + "'");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw UsageError("--gamma must be positive");
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw UsageError("--omega must be positive");
    if (!std::isfinite(delta0))
        throw UsageError("--delta0 must be finite");
    if (!(end_time() > 0.0) || !std::isfinite(end_time()))
        throw UsageError("--t-end must be positive");
    if (grid_points < 2)
        throw UsageError("--grid-points must be at least 2");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw UsageError("--dt must be positive");
    if (n_traj == 0)
        throw UsageError("--n-traj must be positive");
    if (pulse != "square" && pulse != "exponential" && !file_argument(pulse))
        throw UsageError("--pulse must be square, exponential or file:<path>");
    if (rho0 != "g" && rho0 != "e" && rho0 != "plus" && !file_argument(rho0))
        throw UsageError("--rho0 must be g, e, plus or file:<path>");
    if (format != "csv" && format != "json")
        throw UsageError("unknown output format '" + format + "' (csv or json)");
}

void apply_environment(ExperimentSpec &spec, bool seed_given, bool threads_given) {
    if (!seed_given)
        if (const char *s = std::getenv("SPHOTON_SEED"))
            spec.seed = parse_u64(s, "SPHOTON_SEED");
    if (!threads_given)
        if (const char *s = std::getenv("SPHOTON_THREADS"))
            spec.threads = static_cast<unsigned>(parse_u64(s, "SPHOTON_THREADS"));
}

PulseEnvelope make_pulse(const ExperimentSpec &spec) {
    if (spec.pulse == "square")
        return PulseEnvelope::square(spec.omega);
    if (spec.pulse == "exponential")
        return PulseEnvelope::exponential(spec.omega);
    if (const auto path = file_argument(spec.pulse))
        return PulseEnvelope::from_csv(*path, Normalization::require);
    throw UsageError("unknown pulse '" + spec.pulse + "'");
}

Operator2 make_rho0(const ExperimentSpec &spec) {
    if (spec.rho0 == "g")
        return ops::projector_g();
    if (spec.rho0 == "e")
        return ops::projector_e();
    if (spec.rho0 == "plus")
        return outer(Ket2::plus(), Ket2::plus());
    const auto path = file_argument(spec.rho0);
    if (!path)
        throw UsageError("unknown initial state '" + spec.rho0 + "'");
    std::ifstream in(*path);
    if (!in)
        throw IoError("cannot open state file " + *path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> cols;
        double v;
        while (ss >> v)
            cols.push_back(v);
        if (!ss.eof() || (cols.size() != 2 && cols.size() != 4))
            throw UsageError(*path + ": each row needs 2 real or 4 (re, im) entries");
        rows.push_back(cols);
    }
    if (rows.size() != 2 || rows[0].size() != rows[1].size())
        throw UsageError(*path + ": expected a 2 x 2 matrix");
    Operator2 r;
    const bool cplx = rows[0].size() == 4;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            r(i, j) = cplx ? Complex(rows[i][2 * j], rows[i][2 * j + 1]) : Complex(rows[i][j], 0.0);
    if (!is_density_operator(r))
        throw UsageError(*path + ": not a density operator");
    return r;
}

AtomModel make_model(const ExperimentSpec &spec) {
    return {ModelParams(spec.gamma, spec.delta0), make_pulse(spec), make_rho0(spec)};
}

std::vector<double> time_grid(double t_end, int points) {
    if (points < 2)
        throw InvalidArgument("time_grid: needs at least two points");
    std::vector<double> t(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        t[static_cast<std::size_t>(i)] = t_end * static_cast<double>(i) / static_cast<double>(points - 1);
    return t;
}

Table cmd_apriori(const ExperimentSpec &spec) {
    spec.validate();
    const AtomModel model = make_model(spec);
    const bool ground = model.rho_gg() == 1.0;
    std::vector<std::string> cols{"t", "rho_gg", "rho_ee", "re_rho_ge", "im_rho_ge"};
    if (ground)
        cols.emplace_back("excitation");
    Table table("apriori/1", cols);
    for (double t : time_grid(spec.end_time(), spec.grid_points)) {
        std::vector<Cell> row{t};
        add_rho_columns(row, apriori_closed_form(model, t));
        if (ground)
            row.emplace_back(excitation_prob(model, t));
        table.add_row(std::move(row));
    }
    return table;
}

Table cmd_traj(const ExperimentSpec &spec, std::vector<std::string> *warnings) {
    spec.validate();
    const AtomModel model = make_model(spec);
    SdeConfig cfg;
    cfg.dt = spec.dt;
    cfg.t_end = spec.end_time();
    cfg.n_traj = spec.n_traj;
    cfg.seed0 = spec.seed;
    cfg.threads = spec.threads;
    cfg.output_grid = time_grid(cfg.t_end, spec.grid_points);
    const EnsembleResult ens = ensemble_average(model, cfg);
    if (warnings)
        *warnings = ens.warnings;

    Table table("traj-ensemble/1",
                {"t", "rho_gg", "rho_ee", "re_rho_ge", "im_rho_ge", "se_rho_ee", "se_re_rho_ge",
                 "se_im_rho_ge", "p0", "p1", "p2", "mean_jumps", "se_jumps", "mean_integrated_k",
                 "closed_rho_ee", "trace_distance"});
    const double n = static_cast<double>(ens.n_traj);
    for (const auto &s : ens.samples) {
        std::vector<Cell> row{s.t};
        add_rho_columns(row, s.mean);
        row.emplace_back(s.stderr_(1, 1).real());
        row.emplace_back(s.stderr_(0, 1).real());
        row.emplace_back(s.stderr_(0, 1).imag());
        for (auto c : s.counts)
            row.emplace_back(static_cast<double>(c) / n);
        row.emplace_back(s.mean_jumps);
        row.emplace_back(s.mean_jumps_stderr);
        row.emplace_back(s.mean_integrated_intensity);
        const Operator2 exact = apriori_closed_form(model, s.t);
        row.emplace_back(exact(1, 1).real());
        const Operator2 mean = 0.5 * (s.mean + dagger(s.mean));
        row.emplace_back(trace_distance(mean, 0.5 * (exact + dagger(exact))));
        table.add_row(std::move(row));
    }

    if (spec.dump) {
        std::vector<TrajectoryRecord> records;
        const std::size_t count = std::min(spec.dump_count, spec.n_traj);
        for (std::size_t i = 0; i < count; ++i)
            records.push_back(run_trajectory(model, cfg, trajectory_seed(spec.seed, i)));
        if (spec.dump_split) {
            for (std::size_t i = 0; i < records.size(); ++i) {
                std::filesystem::path p = *spec.dump;
                p.replace_filename(p.stem().string() + "_" + std::to_string(i) + p.extension().string());
                write_trajectories_csv(p, {records[i]});
            }
        } else {
            write_trajectories_csv(*spec.dump, records);
        }
    }
    return table;
}

Table cmd_povm(const ExperimentSpec &spec) {
    spec.validate();
    const AtomModel model = make_model(spec);
    Table table("povm/1", {"t", "m0_gg", "m0_ee", "m1_gg", "m1_ee", "m2_gg", "m2_ee"});
    for (double t : time_grid(spec.end_time(), spec.grid_points)) {
        const PovmSet m = povm(model, t);
        table.add_row({t, m.m0(0, 0).real(), m.m0(1, 1).real(), m.m1(0, 0).real(), m.m1(1, 1).real(),
                       m.m2(0, 0).real(), m.m2(1, 1).real()});
    }
    return table;
}

Table cmd_stats(const ExperimentSpec &spec) {
    spec.validate();
    const AtomModel model = make_model(spec);
    Table table("stats/1", {"t", "p0", "p1", "p2", "mean", "second_moment", "mandel_q"});
    for (double t : time_grid(spec.end_time(), spec.grid_points)) {
        const CountStatistics s = count_probs(model, t);
        table.add_row({t, s.p0, s.p1, s.p2, s.mean, s.second_moment,
                       s.mandel_q.value_or(std::nan(""))});
    }
    return table;
}

Table cmd_collision(const ExperimentSpec &spec, double *fitted_order) {
    spec.validate();
    const AtomModel model = make_model(spec);
    if (!model.psi0())
        throw UsageError("collision: needs a pure initial state");
    if (spec.study) {
        const ConvergenceResult r =
            convergence_study(model, {4.0 * spec.dt, 2.0 * spec.dt, spec.dt}, spec.end_time());
        if (fitted_order)
            *fitted_order = r.fitted_order;
        Table table("collision-convergence/1", {"tau", "max_error"});
        for (const auto &row : r.rows)
            table.add_row({row.tau, row.max_error});
        return table;
    }
    CollisionConfig cfg;
    cfg.tau = spec.dt;
    cfg.n_steps = static_cast<std::size_t>(std::llround(spec.end_time() / spec.dt));
    cfg.pulse = model.pulse();
    cfg.params = model.params();
    cfg.psi0 = *model.psi0();
    const ChainResult chain = run_chain(cfg, spec.seed);
    Table table("collision-outcomes/1", {"step", "outcome", "record_weight"});
    for (std::size_t j = 0; j < chain.outcomes.size(); ++j)
        table.add_row({static_cast<long long>(j + 1), static_cast<long long>(chain.outcomes[j]),
                       chain.record_weights[j]});
    return table;
}

Table cmd_figure1(const ExperimentSpec &spec) {
    spec.validate();
    struct Curve {
        const char *label;
        double ratio;
    };
    static constexpr Curve curves[] = {{"0.75", 0.75}, {"0.30", 0.30}, {"0.15", 0.15}};
    const ModelParams params(spec.gamma, spec.delta0);
    const auto grid = time_grid(spec.end_time(), spec.grid_points);
    Table table("figure1/1", {"pulse", "omega_ratio", "t", "mean_counts"});
    for (const char *shape : {"square", "exponential"}) {
        for (const Curve &c : curves) {
            const double omega = c.ratio * spec.gamma;
            PulseEnvelope pulse = std::string(shape) == "square" ? PulseEnvelope::square(omega)
                                                                 : PulseEnvelope::exponential(omega);
            const AtomModel model(params, std::move(pulse), Ket2::ground());
            for (double t : grid)
                table.add_row({std::string(shape), std::string(c.label), t, count_probs(model, t).mean});
        }
    }
    return table;
}

} // namespace sphoton
