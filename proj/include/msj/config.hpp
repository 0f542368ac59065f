#pragma once

// Experiment configuration files. The format is a small TOML subset:
//
//   [system]    k, need_mode
//   [workload]  loads = [..] | load = x | arrival_rate = x
//   [[class]]   need, probability, duration, and the duration's parameters
//   [run]       policies, n_arrivals, warmup_fraction, seeds | seed_base +
//               replications, r_grid_points, batches, output
//
// Values are numbers, booleans, "strings" or single-line [arrays]; '#' starts
// a comment.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "msj/policies.hpp"
#include "msj/workload.hpp"

namespace msj {

struct ConfigIssue {
    int line = 0;  ///< 1-based; 0 when the issue is not tied to a line
    std::string message;
};

class ConfigParseError : public ConfigError {
public:
    explicit ConfigParseError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

struct LoadPoint {
    double load = 0.0;
    double arrival_rate = 0.0;
};

struct ExperimentConfig {
    SystemConfig system;
    WorkloadSpec workload;  ///< arrival_rate is overwritten per load point
    std::vector<LoadPoint> load_points;
    std::vector<PolicyKind> policies;
    std::size_t n_arrivals = 1'000'000;
    double warmup_fraction = 0.2;
    std::vector<std::uint64_t> seeds;
    std::size_t r_grid_points = 64;  ///< 0 disables per-threshold statistics
    std::size_t batches = 20;
    std::string output;

    WorkloadSpec workload_at(const LoadPoint& point) const {
        WorkloadSpec w = workload;
        w.arrival_rate = point.arrival_rate;
        return w;
    }
};

/// Parses and validates; throws ConfigParseError listing every problem found.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Replaces the seeds with base, base + 1, ... keeping their count.
void override_seed_base(ExperimentConfig& config, std::uint64_t base);

}  // namespace msj
