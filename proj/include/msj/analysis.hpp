#pragma once

// Closed-form bounds, the analytic SRPT-1 baseline, and estimators that turn
// simulation reports into the integral terms of the mean response time
// characterization.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "msj/engine.hpp"
#include "msj/workload.hpp"

namespace msj {

/// (e + 1)(k - 1)/lambda * ln(1/(1 - rho)) + e/lambda.
double theorem_gap_bound(int k, double lambda, double rho);
/// e (k - 1) ceil(ln(1/(1 - rho))).
double waste_bound(int k, double rho);
/// (k - 1) ln(1/(1 - rho)).
double recycle_bound(int k, double rho);

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;  ///< from batch means
    /// One-sided check used everywhere: value - 2 stderr <= bound.
    bool within(double bound) const { return value - 2.0 * stderr_ <= bound; }
};

struct RecycleEstimate : Estimate {
    /// Thresholds with fewer than kMinRecycleSamples samples; their sample
    /// mean is replaced by the nearest well-sampled threshold's.
    std::vector<double> low_confidence;
};

inline constexpr std::uint64_t kMinRecycleSamples = 30;

/// Integral of E[(1 - B_r) W_r] / (r^2 (1 - rho^A_r)) dr over r > 0.
Estimate waste_integral_estimate(const SimReport& report, const WorkloadSpec& workload, const SystemConfig& config);

/// Integral of rho^R_r E_r[W_r] / (r^2 (1 - rho^A_r)) dr over r > 0, where
/// E_r[W_r] is the mean of the recycling samples at r.
RecycleEstimate recycle_integral_estimate(const SimReport& report, const WorkloadSpec& workload,
                                          const SystemConfig& config);

/// Trapezoid integral of W_r / r^2 over `grid` plus the closed-form tail
/// W_max / r_max, compared with N: |integral - N| / max(N, 1).
double wine_check(std::span<const double> grid, std::span<const double> w_values, double n);

/// Builds a log-spaced grid of `points` thresholds spanning the remaining
/// sizes, tabulates W_r and calls wine_check.
double wine_check_jobs(std::span<const double> remaining_sizes, std::size_t points);

/// Mean response time of M/G/1 under preemptive SRPT (Schrage-Miller):
///   E[T] = E[ lambda m2(S) / (2 (1 - rho_<(S)) (1 - rho_<=(S))) ] + int_0^inf P(S > t) / (1 - rho(t)) dt
/// with m2(x) = E[S^2 1{S <= x}] + x^2 P(S > x), evaluated by adaptive
/// Gauss-Kronrod quadrature. Throws std::runtime_error if it does not converge.
double srpt1_analytic_mean_T(const WorkloadSpec& workload, const SystemConfig& config, double lambda);
double srpt1_analytic_mean_T(const SizeDist& sizes, double lambda);

/// |LHS - RHS| / max(LHS, E[S]) with LHS = E[W_r^pi] - E[W_r^SRPT-1] and
/// RHS = (E[(1 - B_r) W_r] + rho^R_r E_r[W_r]) / (1 - rho^A_r). `r` must be a
/// grid point shared by both reports.
double work_decomposition_residual(const SimReport& pi, const SimReport& srpt1, const WorkloadSpec& workload,
                                   const SystemConfig& config, double r);

/// Difference of mean response times with a batch-paired standard error;
/// meaningful when both runs used the same seed.
Estimate paired_gap(const SimReport& pi, const SimReport& baseline);

struct BoundReport {
    double rho = 0.0;
    int k = 1;
    double lambda = 0.0;
    double gap_bound = 0.0;
    double waste_bound = 0.0;
    double recycle_bound = 0.0;
    std::optional<Estimate> measured_gap;
    std::optional<Estimate> waste;
    std::optional<RecycleEstimate> recycle;
};

/// Bounds for the report's (k, lambda, rho); the estimates are filled in when
/// the run is stable, the integrals only when the report carries an r grid.
BoundReport bound_report(const SimReport& report, const SimReport* srpt1, const WorkloadSpec& workload,
                         const SystemConfig& config);

}  // namespace msj
