#pragma once

// Self-check suite run by `sphoton verify`: cross-route agreement, POVM
// completeness, the integral identities, known limits and convergence orders.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sphoton/table.hpp"

namespace sphoton {

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    bool stochastic = false; ///< depends on the seed
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::size_t n_traj = 4000;
    /// Check whose tolerance is replaced by -1 so that it must fail.
    std::optional<std::string> corrupt;
};

std::vector<std::string> verify_check_names();
std::vector<CheckResult> run_verify(const VerifyOptions &opt);
Table verify_table(const std::vector<CheckResult> &results);

} // namespace sphoton
