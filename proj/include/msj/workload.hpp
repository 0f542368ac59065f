#pragma once

// Multiserver-job workload model: job classes, duration distributions,
// sampling, and the analytic load quantities derived from the size
// distribution S = K * D / k.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace msj {

using JobId = std::uint64_t;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Seeded random stream. All randomness of a replication flows from one of
/// these; the uniform and exponential transforms are written out so that a
/// seed reproduces the same sequence regardless of the standard library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1).
    double uniform() {
        for (;;) {
            const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    double exponential(double mean) { return -mean * std::log(uniform()); }

    /// Index drawn from a discrete distribution given by `probs`.
    std::size_t categorical(const std::vector<double>& probs) {
        const double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

struct Deterministic {
    double value;
};

struct Exponential {
    double mean;
};

struct Hyperexponential {
    std::vector<double> branch_probs;
    std::vector<double> branch_means;

    /// Two-branch balanced-means construction for a given mean and squared
    /// coefficient of variation (c2 >= 1).
    static Hyperexponential balanced(double mean, double c2);
};

struct DiscreteEmpirical {
    std::vector<double> values;
    std::vector<double> probs;
};

using DurationDist = std::variant<Deterministic, Exponential, Hyperexponential, DiscreteEmpirical>;

/// Throws ConfigError when the distribution violates its invariants.
void validate(const DurationDist& dist);
double mean(const DurationDist& dist);
double sample(const DurationDist& dist, RandomStream& rng);
std::string describe(const DurationDist& dist);

enum class NeedMode { PowerOfTwo, Divisible };

struct SystemConfig {
    int k = 1;
    NeedMode need_mode = NeedMode::PowerOfTwo;
};

struct JobClass {
    int server_need = 1;
    double probability = 1.0;
    DurationDist duration = Exponential{1.0};
};

struct WorkloadSpec {
    std::vector<JobClass> classes;
    double arrival_rate = 1.0;
};

bool is_power_of_two(int n);

/// Throws ConfigError listing the first violated invariant.
void validate(const SystemConfig& config);
void validate(const WorkloadSpec& workload, const SystemConfig& config);

struct Job {
    JobId id = 0;
    std::size_t class_index = 0;
    double arrival_time = 0.0;
    int server_need = 1;
    double duration = 0.0;
    double remaining_duration = 0.0;
    double size = 0.0;
    double remaining_size = 0.0;
    double age = 0.0;

    /// Builds a fresh job; size = need * duration / k.
    static Job fresh(JobId id, std::size_t class_index, double arrival_time, int need, double duration, int k);

    /// Sets the remaining size and keeps duration/age bookkeeping consistent.
    void set_remaining_size(double remaining, int k);
};

/// Draws the next job: class by probability, duration from the class
/// distribution. `next_id` is advanced.
Job sample_job(const WorkloadSpec& workload, const SystemConfig& config, RandomStream& rng, JobId& next_id,
               double arrival_time = 0.0);

/// Size distribution as a finite mixture of exponential components and
/// point masses. Every supported duration family scales into this form.
class SizeDist {
public:
    struct ExpComponent {
        double prob;
        double mean;
    };
    struct Atom {
        double prob;
        double value;
    };

    SizeDist() = default;

    /// Size distribution of a single class: (need / k) * D.
    static SizeDist of_class(const JobClass& job_class, int k);
    /// Mixture over all classes, weighted by class probability.
    static SizeDist of_workload(const WorkloadSpec& workload, const SystemConfig& config);

    const std::vector<ExpComponent>& exp_components() const { return exps_; }
    const std::vector<Atom>& atoms() const { return atoms_; }

    double mean() const;
    double second_moment() const;
    /// P(S > t)
    double survival(double t) const;
    /// E[min(S, r)]
    double expected_min(double r) const;
    /// E[S 1{S <= r}]
    double partial_mean(double r) const;
    /// E[S 1{S < r}]
    double partial_mean_strict(double r) const;
    /// E[S^2 1{S <= r}]
    double partial_second_moment(double r) const;
    /// Largest point of support; infinity when any exponential component exists.
    double max_support() const;
    /// Largest exponential mean, 0 when there are none.
    double max_exp_mean() const;

private:
    std::vector<ExpComponent> exps_;
    std::vector<Atom> atoms_;
};

double mean_size(const WorkloadSpec& workload, const SystemConfig& config);

/// rho = lambda * E[S]. A result >= 1 means no policy can be stable.
double load(const WorkloadSpec& workload, const SystemConfig& config);

/// lambda such that lambda * E[S] = target_load.
double arrival_rate_for_load(const WorkloadSpec& workload, const SystemConfig& config, double target_load);

struct LoadProfile {
    double relevant = 0.0;  ///< lambda E[min(S, r)]
    double arrival = 0.0;   ///< lambda E[S 1{S <= r}]
    double recycled = 0.0;  ///< lambda r P(S > r)
};

LoadProfile load_profile(const SizeDist& sizes, double arrival_rate, double r);
LoadProfile load_profile(const WorkloadSpec& workload, const SystemConfig& config, double r);

}  // namespace msj
