#include "msj/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "msj/analysis.hpp"
#include "msj/engine.hpp"
#include "msj/workload.hpp"

namespace msj {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t pick(RandomStream& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
}

std::vector<double> random_weights(RandomStream& rng, std::size_t n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) total += x = rng.exponential(1.0);
    for (auto& x : w) x /= total;
    return w;
}

int total_need(std::span<const Candidate> c) {
    int t = 0;
    for (const auto& x : c) t += x.need;
    return t;
}

// -1 when the selection is malformed (duplicate or out-of-range position).
int selected_need(std::span<const Candidate> c, const std::vector<std::size_t>& pos) {
    std::vector<bool> seen(c.size(), false);
    int t = 0;
    for (auto p : pos) {
        if (p >= c.size() || seen[p]) return -1;
        seen[p] = true;
        t += c[p].need;
    }
    return t;
}

std::string describe_instance(std::span<const Candidate> c, int k, const std::vector<std::size_t>& pos) {
    std::ostringstream os;
    os << "k=" << k << " jobs(need,key):";
    for (const auto& x : c) os << " (" << x.need << ',' << x.key << ')';
    os << " served needs:";
    for (auto p : pos) os << ' ' << (p < c.size() ? c[p].need : -1);
    return os.str();
}

// Drops jobs one at a time while the instance keeps failing and stays admissible.
template <class Fails, class Admissible>
std::vector<Candidate> minimize(std::vector<Candidate> inst, Fails fails, Admissible admissible) {
    bool shrunk = true;
    while (shrunk) {
        shrunk = false;
        for (std::size_t i = 0; i < inst.size(); ++i) {
            std::vector<Candidate> trial = inst;
            trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
            if (admissible(trial) && fails(trial)) {
                inst = std::move(trial);
                shrunk = true;
                break;
            }
        }
    }
    return inst;
}

std::vector<Candidate> random_instance(RandomStream& rng, const std::vector<int>& needs, std::size_t min_jobs,
                                       int min_total, std::size_t extra_max) {
    const std::vector<double> weights = random_weights(rng, needs.size());
    std::vector<Candidate> c;
    std::size_t extra = pick(rng, extra_max + 1);
    JobId id = 0;
    while (c.size() < min_jobs || total_need(c) < min_total || extra-- > 0) {
        const double key = rng.uniform();
        c.push_back({id++, needs[rng.categorical(weights)], key, key});
    }
    std::sort(c.begin(), c.end(), key_less);
    return c;
}

std::vector<int> powers_of_two_upto(int k) {
    std::vector<int> out;
    for (int n = 1; n <= k; n *= 2) out.push_back(n);
    return out;
}

std::vector<int> divisors_of(int k) {
    std::vector<int> out;
    for (int n = 1; n <= k; ++n)
        if (k % n == 0) out.push_back(n);
    return out;
}

SuiteResult maxweight_suite(std::size_t cases, std::uint64_t seed) {
    const auto start = Clock::now();
    SuiteResult res{"maxweight", true, 0, 0, 0.0, {}, {}};
    RandomStream rng(seed);
    for (std::size_t c = 0; c < cases; ++c) {
        const int k = 1 + static_cast<int>(pick(rng, 8));
        const std::size_t n = pick(rng, 13);
        std::vector<Job> jobs;
        for (std::size_t i = 0; i < n; ++i) {
            const int need = 1 + static_cast<int>(pick(rng, static_cast<std::size_t>(k)));
            jobs.push_back(Job::fresh(i, 0, 0.0, need, rng.exponential(1.0), k));
        }
        std::map<int, std::int64_t> count;
        for (const auto& j : jobs) ++count[j.server_need];

        std::int64_t best = 0;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            int used = 0;
            std::int64_t w = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask >> i & 1u) {
                    used += jobs[i].server_need;
                    w += count[jobs[i].server_need];
                }
            if (used <= k) best = std::max(best, w);
        }

        const std::vector<JobId> ids = select_maxweight(jobs, k);
        int used = 0;
        std::int64_t w = 0;
        for (JobId id : ids) {
            used += jobs[id].server_need;
            w += count[jobs[id].server_need];
        }
        ++res.cases;
        if (used > k || w != best) {
            ++res.failures;
            if (res.counterexample.empty()) {
                std::ostringstream os;
                os << "k=" << k << " needs:";
                for (const auto& j : jobs) os << ' ' << j.server_need;
                os << " dp weight " << w << " (servers " << used << ") vs exhaustive " << best;
                res.counterexample = os.str();
            }
        }
    }
    res.passed = res.failures == 0;
    res.detail = std::to_string(res.cases) + " systems with <= 12 jobs, k <= 8";
    res.seconds = seconds_since(start);
    return res;
}

WorkloadSpec fig6_like(int k, const std::vector<int>& needs, bool hyper) {
    WorkloadSpec w;
    const double p = 1.0 / static_cast<double>(needs.size());
    for (int n : needs) {
        const double dmean = static_cast<double>(k) / static_cast<double>(n);
        if (hyper) w.classes.push_back({n, p, Hyperexponential::balanced(dmean, 10.0)});
        else w.classes.push_back({n, p, Exponential{dmean}});
    }
    return w;
}

SuiteResult rwe_suite(std::size_t seeds, std::uint64_t seed) {
    const auto start = Clock::now();
    SuiteResult res{"rwe", true, 0, 0, 0.0, {}, {}};
    struct Setup {
        SystemConfig config;
        std::vector<int> needs;
        std::vector<PolicyKind> policies;
    };
    const std::vector<Setup> setups{
        {{8, NeedMode::PowerOfTwo}, {1, 2, 4, 8}, {PolicyKind::ServerFillingSRPT, PolicyKind::ServerFillingGittins}},
        {{12, NeedMode::Divisible},
         {1, 2, 3, 4, 6, 12},
         {PolicyKind::DivisorFillingSRPT, PolicyKind::DivisorFillingGittins}},
    };
    std::uint64_t violations = 0;
    std::uint64_t mismatches = 0;
    for (const auto& s : setups) {
        for (bool hyper : {false, true}) {
            WorkloadSpec w = fig6_like(s.config.k, s.needs, hyper);
            w.arrival_rate = arrival_rate_for_load(w, s.config, 0.9);
            for (auto policy : s.policies) {
                for (std::size_t i = 0; i < seeds; ++i) {
                    SimOptions o;
                    o.n_arrivals = 10'000;
                    o.seed = seed + i;
                    o.full_checks = true;
                    o.r_grid = RGrid::standard(mean_size(w, s.config), 16);
                    const SimReport r = run_simulation(s.config, w, policy, o);
                    ++res.cases;
                    violations += r.rwe_violations;
                    mismatches += r.check_failures;
                    if ((r.rwe_violations || r.check_failures) && res.counterexample.empty())
                        res.counterexample = to_string(policy) + " k=" + std::to_string(s.config.k) +
                                             (hyper ? " hyperexponential" : " exponential") +
                                             " seed=" + std::to_string(o.seed);
                    if (r.rwe_violations || r.check_failures) ++res.failures;
                }
            }
        }
    }
    res.passed = res.failures == 0;
    res.detail = "rwe_violations=" + std::to_string(violations) + " check_failures=" + std::to_string(mismatches);
    res.seconds = seconds_since(start);
    return res;
}

SuiteResult wine_suite(std::size_t snapshots, std::uint64_t seed) {
    const auto start = Clock::now();
    const WineStudy w = wine_study(snapshots, seed);
    SuiteResult res{"wine", true, snapshots, 0, 0.0, {}, {}};
    const bool fine = w.max_error_512 < 0.02;
    const bool converges = w.mean_error_1024 <= 0.6 * w.mean_error_512;
    res.passed = fine && converges;
    res.failures = res.passed ? 0 : 1;
    std::ostringstream os;
    os << "max err@512=" << w.max_error_512 << " mean err@512=" << w.mean_error_512
       << " mean err@1024=" << w.mean_error_1024;
    res.detail = os.str();
    res.seconds = seconds_since(start);
    return res;
}

SuiteResult bounds_suite(std::size_t n_arrivals, std::uint64_t seed) {
    const auto start = Clock::now();
    SuiteResult res{"bounds", true, 0, 0, 0.0, {}, {}};
    const SystemConfig config{8, NeedMode::PowerOfTwo};
    WorkloadSpec w = fig6_like(8, {1, 2, 4, 8}, false);
    std::ostringstream os;
    for (double rho : {0.5, 0.8}) {
        w.arrival_rate = arrival_rate_for_load(w, config, rho);
        SimOptions o;
        o.n_arrivals = std::max<std::size_t>(n_arrivals, 10'000);
        o.seed = seed;
        o.r_grid = RGrid::standard(1.0, 64);
        const SimReport sfs = run_simulation(config, w, PolicyKind::ServerFillingSRPT, o);
        const SimReport ref = run_simulation(config, w, PolicyKind::ResourcePooledSRPT1, o);
        const BoundReport b = bound_report(sfs, &ref, w, config);
        const bool ok = b.measured_gap && b.waste && b.recycle && b.measured_gap->within(b.gap_bound) &&
                        b.waste->within(b.waste_bound) && b.recycle->within(b.recycle_bound);
        res.cases += 3;
        if (!ok) {
            ++res.failures;
            if (res.counterexample.empty()) res.counterexample = "rho=" + std::to_string(rho) + " seed=" + std::to_string(seed);
        }
        if (b.measured_gap && b.waste && b.recycle)
            os << "rho=" << rho << " gap " << b.measured_gap->value << "<=" << b.gap_bound << " waste " << b.waste->value
               << "<=" << b.waste_bound << " recycle " << b.recycle->value << "<=" << b.recycle_bound << "; ";
    }
    res.passed = res.failures == 0;
    res.detail = os.str();
    res.seconds = seconds_since(start);
    return res;
}

}  // namespace

std::vector<std::size_t> server_filling_mutant(std::span<const Candidate> sorted, int k) {
    int prefix = 0;
    std::size_t m = 0;
    while (m < sorted.size() && prefix < k) prefix += sorted[m++].need;
    std::vector<std::size_t> out;
    int free = k;
    for (std::size_t i = 0; i < m; ++i) {
        if (sorted[i].need > free) break;
        out.push_back(i);
        free -= sorted[i].need;
    }
    return out;
}

SuiteResult packing_suite(std::span<const int> ks, std::size_t cases, std::uint64_t seed, const FillKernel& kernel) {
    const auto start = Clock::now();
    SuiteResult res{"packing", true, 0, 0, 0.0, {}, {}};
    RandomStream rng(seed);
    for (int k : ks) {
        const std::vector<int> needs = powers_of_two_upto(k);
        auto fails = [&](const std::vector<Candidate>& c) { return selected_need(c, kernel(c, k)) != k; };
        auto admissible = [&](const std::vector<Candidate>& c) { return total_need(c) >= k; };
        for (std::size_t i = 0; i < cases; ++i) {
            const auto inst = random_instance(rng, needs, 1, k, static_cast<std::size_t>(k));
            ++res.cases;
            if (!fails(inst)) continue;
            ++res.failures;
            if (res.counterexample.empty()) {
                const auto small = minimize(inst, fails, admissible);
                res.counterexample = describe_instance(small, k, kernel(small, k));
            }
        }
    }
    res.passed = res.failures == 0;
    res.detail = std::to_string(res.cases - res.failures) + "/" + std::to_string(res.cases) + " selections use all k servers";
    res.seconds = seconds_since(start);
    return res;
}

SuiteResult divisor_suite(std::span<const int> ks, std::size_t cases, std::uint64_t seed) {
    const auto start = Clock::now();
    SuiteResult res{"divisor", true, 0, 0, 0.0, {}, {}};
    RandomStream rng(seed);
    for (int k : ks) {
        const std::vector<int> needs = divisors_of(k);
        auto fails = [&](const std::vector<Candidate>& c) {
            return selected_need(c, kernel::divisor_filling(c, k)) != k;
        };
        auto admissible = [&](const std::vector<Candidate>& c) { return c.size() >= static_cast<std::size_t>(k); };
        for (std::size_t i = 0; i < cases; ++i) {
            const auto inst = random_instance(rng, needs, static_cast<std::size_t>(k), 0, static_cast<std::size_t>(k));
            ++res.cases;
            if (!fails(inst)) continue;
            ++res.failures;
            if (res.counterexample.empty()) {
                const auto small = minimize(inst, fails, admissible);
                res.counterexample = describe_instance(small, k, kernel::divisor_filling(small, k));
            }
        }
    }
    res.passed = res.failures == 0;
    res.detail = std::to_string(res.cases - res.failures) + "/" + std::to_string(res.cases) + " selections use all k servers";
    res.seconds = seconds_since(start);
    return res;
}

WineStudy wine_study(std::size_t snapshots, std::uint64_t seed) {
    RandomStream rng(seed);
    WineStudy w;
    for (std::size_t s = 0; s < snapshots; ++s) {
        const std::size_t n = 1 + pick(rng, 50);
        std::vector<double> rem(n);
        for (auto& r : rem) r = std::exp(4.0 * (rng.uniform() - 0.5)) * rng.exponential(1.0);
        const double e512 = wine_check_jobs(rem, 512);
        const double e1024 = wine_check_jobs(rem, 1024);
        w.mean_error_512 += e512;
        w.mean_error_1024 += e1024;
        w.max_error_512 = std::max(w.max_error_512, e512);
    }
    if (snapshots > 0) {
        w.mean_error_512 /= static_cast<double>(snapshots);
        w.mean_error_1024 /= static_cast<double>(snapshots);
    }
    return w;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"packing", "divisor", "maxweight", "rwe", "wine", "bounds"};
    return names;
}

SuiteResult run_suite(std::string_view name, const VerifyOptions& options) {
    auto n = [&](std::size_t fallback) { return options.cases.value_or(fallback); };
    if (name == "packing") {
        static constexpr int ks[] = {2, 4, 8, 16, 32};
        const FillKernel k = options.mutant ? FillKernel(server_filling_mutant) : FillKernel(kernel::server_filling);
        return packing_suite(ks, n(100'000), options.seed, k);
    }
    if (name == "divisor") {
        static constexpr int ks[] = {6, 12, 24, 30, 60};
        return divisor_suite(ks, n(100'000), options.seed);
    }
    if (name == "maxweight") return maxweight_suite(n(20'000), options.seed);
    if (name == "rwe") return rwe_suite(n(2), options.seed);
    if (name == "wine") return wine_suite(n(1'000), options.seed);
    if (name == "bounds") return bounds_suite(n(200'000), options.seed);
    throw std::invalid_argument("unknown suite '" + std::string(name) + "'");
}

}  // namespace msj
