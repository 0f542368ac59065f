#pragma once

// Load sweeps: every (policy, load, seed) triple of a configuration, run in
// parallel, post-processed against the SRPT-1 run of the same load and seed.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "msj/config.hpp"
#include "msj/engine.hpp"

namespace msj {

struct SweepRow {
    PolicyKind policy = PolicyKind::ServerFillingSRPT;
    int k = 1;
    NeedMode need_mode = NeedMode::PowerOfTwo;
    double load = 0.0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_arrivals = 0;
    bool stable = true;
    std::optional<double> mean_T;
    std::optional<double> ci95_T;
    std::optional<double> mean_N;
    std::optional<double> mean_T_srpt1;
    std::optional<double> ratio_T;
    std::optional<double> gap_T;
    std::optional<double> gap_bound;
    std::optional<double> waste_est;
    std::optional<double> waste_bound;
    std::optional<double> recycle_est;
    std::optional<double> recycle_bound;
    std::uint64_t rwe_violations = 0;
    double wall_seconds = 0.0;
};

struct SweepOptions {
    unsigned jobs = 1;
    std::ostream* progress = nullptr;  ///< one line per finished run when set
    /// Restrict to the first load point and first seed.
    bool first_point_only = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;       ///< listed policies, sorted by (policy order, load, seed)
    std::vector<SimReport> reports;  ///< parallel to rows
};

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options = {});

/// Writes the fixed CSV schema. Wall-clock time is nondeterministic, so the
/// wall_seconds column stays empty unless `with_timing` is set.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_timing = false);

}  // namespace msj
