#pragma once

// Discrete-event simulation of the multiserver-job queue: Poisson arrivals,
// preemptive rescheduling at every arrival and completion, and time-weighted
// accumulation of the relevant-work statistics W_r, B_r, (1 - B_r) W_r plus
// samples of W_r taken at r-recycling moments.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msj/gittins.hpp"
#include "msj/policies.hpp"
#include "msj/workload.hpp"

namespace msj {

/// Thresholds r at which relevant-work statistics are tracked.
struct RGrid {
    std::vector<double> thresholds;  ///< strictly increasing, positive

    static RGrid log_spaced(double lo, double hi, std::size_t n);
    /// [1e-3 E[S], 1e3 E[S]] with n log-spaced points.
    static RGrid standard(double mean_size, std::size_t n = 64);
    /// Copy with extra thresholds merged in.
    RGrid with_points(std::span<const double> extra) const;

    bool empty() const { return thresholds.empty(); }
    std::size_t size() const { return thresholds.size(); }
    /// Index of `r` in the grid, or size() when absent.
    std::size_t index_of(double r) const;
};

struct SimOptions {
    std::size_t n_arrivals = 1'000'000;
    double warmup_fraction = 0.2;
    RGrid r_grid;  ///< empty disables per-threshold statistics and recycling samples
    std::uint64_t seed = 1;
    std::size_t batches = 20;
    bool record_trace = false;
    /// Recompute the schedule and W_r from scratch at every event and compare
    /// against the incremental state. Quadratic; meant for tests.
    bool full_checks = false;
    /// Rank tables for Gittins policies; computed on demand when empty.
    std::vector<RankCurve> rank_curves;
};

enum class Verdict { Stable, Unstable };

struct TraceEvent {
    enum class Kind : std::uint8_t { Arrival, Completion };
    double time = 0.0;
    Kind kind = Kind::Arrival;
    JobId id = 0;
    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Raw accumulators for one batch of post-warmup arrivals.
struct BatchStats {
    double time = 0.0;
    double n_integral = 0.0;
    double w_integral = 0.0;
    double b_integral = 0.0;
    std::vector<double> w_r;      ///< integral of W_r dt
    std::vector<double> b_r;      ///< integral of B_r dt
    std::vector<double> waste_r;  ///< integral of (1 - B_r) W_r dt
    std::vector<double> recycle_sum;
    std::vector<std::uint64_t> recycle_count;
    double t_sum = 0.0;
    std::uint64_t t_count = 0;
};

struct ThresholdStats {
    double r = 0.0;
    double mean_w = 0.0;      ///< E[W_r]
    double mean_b = 0.0;      ///< E[B_r]
    double mean_waste = 0.0;  ///< E[(1 - B_r) W_r]
    double recycle_mean = 0.0;  ///< E_r[W_r] over recycling samples
    std::uint64_t recycle_samples = 0;
};

struct SimReport {
    SystemConfig config;
    PolicyKind policy = PolicyKind::ServerFillingSRPT;
    double arrival_rate = 0.0;
    double load = 0.0;
    std::size_t n_arrivals = 0;
    double warmup_fraction = 0.0;
    std::uint64_t seed = 0;

    Verdict verdict = Verdict::Stable;
    std::string abort_reason;

    double mean_T = 0.0;
    double stderr_T = 0.0;
    double ci95_T = 0.0;
    std::uint64_t completed = 0;
    std::uint64_t censored = 0;
    double mean_N = 0.0;
    double mean_W = 0.0;
    double mean_B = 0.0;
    double observed_time = 0.0;
    double lambda_effective = 0.0;

    std::vector<ThresholdStats> per_threshold;
    std::vector<BatchStats> batches;

    std::uint64_t rwe_violations = 0;
    std::uint64_t check_failures = 0;  ///< full_checks mismatches
    double max_conservation_error = 0.0;
    double max_recycle_ratio = 0.0;  ///< max of sample / ((k - 1) r); 0 when k = 1
    std::uint64_t events = 0;
    std::uint64_t max_jobs = 0;
    std::uint64_t trace_digest = 0;
    std::vector<TraceEvent> trace;
    double wall_seconds = 0.0;

    bool stable() const { return verdict == Verdict::Stable; }
};

/// Runaway-queue cutoff: 100 k max(10, 1 / (1 - rho)).
double instability_threshold(int k, double rho);

/// Simulates exactly opts.n_arrivals arrivals (>= 10^4) and stops at the
/// instant the next arrival would occur; jobs still present are censored.
SimReport run_simulation(const SystemConfig& config, const WorkloadSpec& workload, PolicyKind policy,
                         const SimOptions& opts);

struct RelevantSnapshot {
    double w_r = 0.0;
    double b_r = 0.0;
    std::size_t n = 0;
    std::size_t relevant_jobs = 0;
};

/// W_r, B_r and N from scratch. A job is r-relevant when its relevance value
/// (remaining size, or Gittins rank when `ranks` is given) is <= r.
RelevantSnapshot snapshot_relevant(std::span<const Job> jobs, const ScheduleDecision& decision, double r,
                                   const RankMap* ranks = nullptr);

/// W_r over every job except the recycler, i.e. the value recorded just
/// before `recycler` becomes r-relevant.
double recycling_sample(std::span<const Job> jobs, JobId recycler, double r);

}  // namespace msj
