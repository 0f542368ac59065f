#include "msj/workload.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace msj {

namespace {

constexpr double kProbTolerance = 1e-12;

void check_probabilities(const std::vector<double>& probs, const char* what) {
    if (probs.empty()) throw ConfigError(std::string(what) + ": probability list is empty");
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + ": probability outside [0,1]");
    }
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > kProbTolerance) {
        std::ostringstream os;
        os << what << ": probabilities sum to " << total << ", expected 1";
        throw ConfigError(os.str());
    }
}

void check_positive(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + ": values must be finite and positive");
    }
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

Hyperexponential Hyperexponential::balanced(double mean, double c2) {
    if (!(mean > 0.0)) throw ConfigError("hyperexponential: mean must be positive");
    if (!(c2 >= 1.0)) throw ConfigError("hyperexponential: squared coefficient of variation must be >= 1");
    const double p = 0.5 * (1.0 + std::sqrt((c2 - 1.0) / (c2 + 1.0)));
    if (p >= 1.0) throw ConfigError("hyperexponential: degenerate branch probability");
    return Hyperexponential{{p, 1.0 - p}, {mean / (2.0 * p), mean / (2.0 * (1.0 - p))}};
}

void validate(const DurationDist& dist) {
    std::visit(overloaded{
                   [](const Deterministic& d) { check_positive({d.value}, "deterministic"); },
                   [](const Exponential& d) { check_positive({d.mean}, "exponential"); },
                   [](const Hyperexponential& d) {
                       if (d.branch_probs.size() != d.branch_means.size() || d.branch_means.empty())
                           throw ConfigError("hyperexponential: branch lists must have equal nonzero length");
                       check_probabilities(d.branch_probs, "hyperexponential");
                       check_positive(d.branch_means, "hyperexponential");
                   },
                   [](const DiscreteEmpirical& d) {
                       if (d.values.size() != d.probs.size() || d.values.empty())
                           throw ConfigError("discrete: value and probability lists must have equal nonzero length");
                       check_probabilities(d.probs, "discrete");
                       check_positive(d.values, "discrete");
                   },
               },
               dist);
}

double mean(const DurationDist& dist) {
    return std::visit(overloaded{
                          [](const Deterministic& d) { return d.value; },
                          [](const Exponential& d) { return d.mean; },
                          [](const Hyperexponential& d) {
                              return std::inner_product(d.branch_probs.begin(), d.branch_probs.end(),
                                                        d.branch_means.begin(), 0.0);
                          },
                          [](const DiscreteEmpirical& d) {
                              return std::inner_product(d.probs.begin(), d.probs.end(), d.values.begin(), 0.0);
                          },
                      },
                      dist);
}

double sample(const DurationDist& dist, RandomStream& rng) {
    return std::visit(overloaded{
                          [](const Deterministic& d) { return d.value; },
                          [&](const Exponential& d) { return rng.exponential(d.mean); },
                          [&](const Hyperexponential& d) {
                              return rng.exponential(d.branch_means[rng.categorical(d.branch_probs)]);
                          },
                          [&](const DiscreteEmpirical& d) { return d.values[rng.categorical(d.probs)]; },
                      },
                      dist);
}

std::string describe(const DurationDist& dist) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const Deterministic& d) { os << "deterministic(" << d.value << ")"; },
                   [&](const Exponential& d) { os << "exponential(" << d.mean << ")"; },
                   [&](const Hyperexponential& d) { os << "hyperexponential(" << d.branch_probs.size() << " branches)"; },
                   [&](const DiscreteEmpirical& d) { os << "discrete(" << d.values.size() << " points)"; },
               },
               dist);
    return os.str();
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void validate(const SystemConfig& config) {
    if (config.k < 1) throw ConfigError("system: k must be a positive integer");
    if (config.need_mode == NeedMode::PowerOfTwo && !is_power_of_two(config.k))
        throw ConfigError("system: power-of-two mode requires k to be a power of two");
}

void validate(const WorkloadSpec& workload, const SystemConfig& config) {
    validate(config);
    if (workload.classes.empty()) throw ConfigError("workload: at least one job class is required");
    if (!(workload.arrival_rate > 0.0) || !std::isfinite(workload.arrival_rate))
        throw ConfigError("workload: arrival rate must be positive");
    std::vector<double> probs;
    for (const auto& c : workload.classes) {
        if (c.server_need < 1 || c.server_need > config.k)
            throw ConfigError("class: server need must lie in [1, k]");
        if (config.need_mode == NeedMode::PowerOfTwo && !is_power_of_two(c.server_need))
            throw ConfigError("class: server need " + std::to_string(c.server_need) + " is not a power of two");
        if (config.need_mode == NeedMode::Divisible && config.k % c.server_need != 0)
            throw ConfigError("class: server need " + std::to_string(c.server_need) + " does not divide k");
        validate(c.duration);
        probs.push_back(c.probability);
    }
    check_probabilities(probs, "workload classes");
}

Job Job::fresh(JobId id, std::size_t class_index, double arrival_time, int need, double duration, int k) {
    Job job;
    job.id = id;
    job.class_index = class_index;
    job.arrival_time = arrival_time;
    job.server_need = need;
    job.duration = duration;
    job.remaining_duration = duration;
    job.size = static_cast<double>(need) * duration / static_cast<double>(k);
    job.remaining_size = job.size;
    job.age = 0.0;
    return job;
}

void Job::set_remaining_size(double remaining, int k) {
    remaining_size = std::clamp(remaining, 0.0, size);
    remaining_duration = remaining_size * static_cast<double>(k) / static_cast<double>(server_need);
    age = size - remaining_size;
}

Job sample_job(const WorkloadSpec& workload, const SystemConfig& config, RandomStream& rng, JobId& next_id,
               double arrival_time) {
    std::size_t cls = 0;
    if (workload.classes.size() > 1) {
        std::vector<double> probs;
        probs.reserve(workload.classes.size());
        for (const auto& c : workload.classes) probs.push_back(c.probability);
        cls = rng.categorical(probs);
    }
    const auto& job_class = workload.classes[cls];
    const double duration = sample(job_class.duration, rng);
    return Job::fresh(next_id++, cls, arrival_time, job_class.server_need, duration, config.k);
}

SizeDist SizeDist::of_class(const JobClass& job_class, int k) {
    const double scale = static_cast<double>(job_class.server_need) / static_cast<double>(k);
    SizeDist out;
    std::visit(overloaded{
                   [&](const Deterministic& d) { out.atoms_.push_back({1.0, scale * d.value}); },
                   [&](const Exponential& d) { out.exps_.push_back({1.0, scale * d.mean}); },
                   [&](const Hyperexponential& d) {
                       for (std::size_t i = 0; i < d.branch_probs.size(); ++i)
                           out.exps_.push_back({d.branch_probs[i], scale * d.branch_means[i]});
                   },
                   [&](const DiscreteEmpirical& d) {
                       for (std::size_t i = 0; i < d.values.size(); ++i)
                           out.atoms_.push_back({d.probs[i], scale * d.values[i]});
                   },
               },
               job_class.duration);
    return out;
}

SizeDist SizeDist::of_workload(const WorkloadSpec& workload, const SystemConfig& config) {
    SizeDist out;
    for (const auto& c : workload.classes) {
        const SizeDist part = of_class(c, config.k);
        for (auto e : part.exps_) out.exps_.push_back({e.prob * c.probability, e.mean});
        for (auto a : part.atoms_) out.atoms_.push_back({a.prob * c.probability, a.value});
    }
    return out;
}

double SizeDist::mean() const {
    double m = 0.0;
    for (const auto& e : exps_) m += e.prob * e.mean;
    for (const auto& a : atoms_) m += a.prob * a.value;
    return m;
}

double SizeDist::second_moment() const {
    double m = 0.0;
    for (const auto& e : exps_) m += e.prob * 2.0 * e.mean * e.mean;
    for (const auto& a : atoms_) m += a.prob * a.value * a.value;
    return m;
}

double SizeDist::survival(double t) const {
    if (t < 0.0) return 1.0;
    double s = 0.0;
    for (const auto& e : exps_) s += e.prob * std::exp(-t / e.mean);
    for (const auto& a : atoms_)
        if (a.value > t) s += a.prob;
    return s;
}

double SizeDist::expected_min(double r) const {
    if (r <= 0.0) return 0.0;
    if (std::isinf(r)) return mean();
    double m = 0.0;
    for (const auto& e : exps_) m += e.prob * e.mean * -std::expm1(-r / e.mean);
    for (const auto& a : atoms_) m += a.prob * std::min(a.value, r);
    return m;
}

double SizeDist::partial_mean(double r) const {
    if (r <= 0.0) return 0.0;
    if (std::isinf(r)) return mean();
    double m = 0.0;
    for (const auto& e : exps_) {
        const double x = r / e.mean;
        m += e.prob * e.mean * (-std::expm1(-x) - x * std::exp(-x));
    }
    for (const auto& a : atoms_)
        if (a.value <= r) m += a.prob * a.value;
    return m;
}

double SizeDist::partial_mean_strict(double r) const {
    double m = partial_mean(r);
    for (const auto& a : atoms_)
        if (a.value == r) m -= a.prob * a.value;
    return m;
}

double SizeDist::partial_second_moment(double r) const {
    if (r <= 0.0) return 0.0;
    if (std::isinf(r)) return second_moment();
    double m = 0.0;
    for (const auto& e : exps_) {
        const double x = r / e.mean;
        m += e.prob * e.mean * e.mean * (2.0 - std::exp(-x) * (x * x + 2.0 * x + 2.0));
    }
    for (const auto& a : atoms_)
        if (a.value <= r) m += a.prob * a.value * a.value;
    return m;
}

double SizeDist::max_support() const {
    if (!exps_.empty()) return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (const auto& a : atoms_)
        if (a.prob > 0.0) m = std::max(m, a.value);
    return m;
}

double SizeDist::max_exp_mean() const {
    double m = 0.0;
    for (const auto& e : exps_)
        if (e.prob > 0.0) m = std::max(m, e.mean);
    return m;
}

double mean_size(const WorkloadSpec& workload, const SystemConfig& config) {
    double m = 0.0;
    for (const auto& c : workload.classes)
        m += c.probability * static_cast<double>(c.server_need) / static_cast<double>(config.k) * mean(c.duration);
    return m;
}

double load(const WorkloadSpec& workload, const SystemConfig& config) {
    return workload.arrival_rate * mean_size(workload, config);
}

double arrival_rate_for_load(const WorkloadSpec& workload, const SystemConfig& config, double target_load) {
    if (!(target_load > 0.0)) throw ConfigError("target load must be positive");
    return target_load / mean_size(workload, config);
}

LoadProfile load_profile(const SizeDist& sizes, double arrival_rate, double r) {
    if (r <= 0.0) return {};
    if (std::isinf(r)) {
        const double rho = arrival_rate * sizes.mean();
        return {rho, rho, 0.0};
    }
    LoadProfile p;
    p.relevant = arrival_rate * sizes.expected_min(r);
    p.arrival = arrival_rate * sizes.partial_mean(r);
    p.recycled = arrival_rate * r * sizes.survival(r);
    return p;
}

LoadProfile load_profile(const WorkloadSpec& workload, const SystemConfig& config, double r) {
    return load_profile(SizeDist::of_workload(workload, config), workload.arrival_rate, r);
}

}  // namespace msj
