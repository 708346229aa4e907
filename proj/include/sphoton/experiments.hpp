#pragma once

// Named batch experiments behind the command-line front end. Each command
// turns an ExperimentSpec into a Table; writing is left to the caller.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sphoton/errors.hpp"
#include "sphoton/table.hpp"
#include "sphoton/trajectories.hpp"

namespace sphoton {

/// Bad command-line input. Maps to exit status 1.
class UsageError : public InvalidArgument {
  public:
    using InvalidArgument::InvalidArgument;
};

struct ExperimentSpec {
    std::string command;
    std::string pulse = "exponential"; ///< square | exponential | file:<path>
    double omega = 0.5;
    double gamma = 1.0;
    double delta0 = 0.0;
    std::string rho0 = "g"; ///< g | e | plus | file:<path>
    /// Unset means 10, except for figure1 which runs to 80 / Gamma so that
    /// every curve has saturated.
    std::optional<double> t_end;
    int grid_points = 200;
    double dt = 1e-3;
    std::size_t n_traj = 10000;
    std::uint64_t seed = 1;
    std::optional<std::filesystem::path> out;
    std::string format = "csv";
    unsigned threads = 0;

    // traj: optional dump of individual trajectories
    std::optional<std::filesystem::path> dump;
    std::size_t dump_count = 10;
    bool dump_split = false;

    // collision: convergence table instead of a sampled outcome record
    bool study = false;

    /// Test hook: the named verify check gets an impossible tolerance.
    std::optional<std::string> corrupt_tolerance;

    double end_time() const;
    /// Throws UsageError.
    void validate() const;
};

/// SPHOTON_SEED and SPHOTON_THREADS fill seed and threads when the flags
/// were not given.
void apply_environment(ExperimentSpec &spec, bool seed_given, bool threads_given);

PulseEnvelope make_pulse(const ExperimentSpec &spec);
/// Density operator from g | e | plus | file:<path> (two rows of
/// "re00,im00,re01,im01" style entries).
Operator2 make_rho0(const ExperimentSpec &spec);
AtomModel make_model(const ExperimentSpec &spec);
std::vector<double> time_grid(double t_end, int points);

Table cmd_apriori(const ExperimentSpec &spec);
Table cmd_traj(const ExperimentSpec &spec, std::vector<std::string> *warnings = nullptr);
Table cmd_povm(const ExperimentSpec &spec);
Table cmd_stats(const ExperimentSpec &spec);
/// Outcome record of one chain, or the convergence table with --study.
Table cmd_collision(const ExperimentSpec &spec, double *fitted_order = nullptr);
Table cmd_figure1(const ExperimentSpec &spec);

} // namespace sphoton
