#pragma once

// Gittins rank for jobs whose size is unknown to the scheduler. A job's
// state is its class and its age, both measured in size units (age grows
// at rate need / k while the job is in service).

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "msj/workload.hpp"

namespace msj {

struct BGridSpec {
    std::size_t points = 256;  ///< log-spaced b values per evaluation
};

/// inf over b > age of E[min(S, b) - age | S > age] / P(S <= b | S > age),
/// evaluated on a log-spaced b grid plus the support atoms and b -> infinity.
/// Throws std::domain_error when P(S > age) = 0.
double gittins_rank(const SizeDist& sizes, double age, const BGridSpec& grid = {});

/// Same quotient minimised over an explicit list of b values (each > age);
/// the b -> infinity limit is always included.
double gittins_rank_on(const SizeDist& sizes, double age, std::span<const double> b_values);

struct AgeGridSpec {
    std::size_t points = 512;      ///< log-spaced ages, in addition to age 0
    double min_age_fraction = 1e-6;  ///< smallest positive age, as a fraction of E[S_i]
    BGridSpec b_grid{};
    /// Intervals are bisected until linear interpolation at the midpoint is
    /// within this relative error of the evaluated rank.
    double refine_tolerance = 2e-5;
};

/// Tabulated rank(age) for one class with piecewise-linear interpolation.
class RankCurve {
public:
    RankCurve() = default;
    RankCurve(std::size_t class_id, std::vector<double> ages, std::vector<double> ranks);

    std::size_t class_id() const { return class_id_; }
    const std::vector<double>& ages() const { return ages_; }
    const std::vector<double>& ranks() const { return ranks_; }

    /// Interpolated rank; ages past the last grid point take the last value.
    double operator()(double age) const;

private:
    std::size_t class_id_ = 0;
    std::vector<double> ages_;
    std::vector<double> ranks_;
};

RankCurve precompute_rank_curve(std::size_t class_id, const JobClass& job_class, const SystemConfig& config,
                                const AgeGridSpec& spec = {});

std::vector<RankCurve> precompute_rank_curves(const WorkloadSpec& workload, const SystemConfig& config,
                                              const AgeGridSpec& spec = {});

/// CSV with columns class_id,age,rank.
void write_rank_csv(std::ostream& out, std::span<const RankCurve> curves);

}  // namespace msj
