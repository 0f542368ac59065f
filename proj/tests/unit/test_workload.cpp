#include <doctest.h>

#include <cmath>

#include "msj/workload.hpp"

using namespace msj;

namespace {

SystemConfig pow2(int k) { return {k, NeedMode::PowerOfTwo}; }

WorkloadSpec uniform_needs_exp_duration(double dmean) {
    WorkloadSpec w;
    for (int n : {1, 2, 4, 8}) w.classes.push_back({n, 0.25, Exponential{dmean}});
    return w;
}

}  // namespace

TEST_CASE("sampled job sizes follow need * duration / k") {
    RandomStream rng(1);
    JobId next = 0;
    WorkloadSpec single{{{8, 1.0, Deterministic{2.0}}}, 1.0};
    const Job a = sample_job(single, pow2(8), rng, next);
    CHECK(a.size == doctest::Approx(2.0));
    CHECK(a.id == 0);

    WorkloadSpec two{{{2, 1.0, Deterministic{4.0}}}, 1.0};
    const Job b = sample_job(two, pow2(8), rng, next);
    CHECK(b.size == doctest::Approx(1.0));
    CHECK(b.id == 1);
    CHECK(b.remaining_size == b.size);
    CHECK(b.age == 0.0);
}

TEST_CASE("exponential duration sample mean") {
    RandomStream rng(7);
    JobId next = 0;
    WorkloadSpec w{{{1, 1.0, Exponential{1.0}}}, 1.0};
    double sum = 0.0;
    constexpr int n = 1'000'000;
    for (int i = 0; i < n; ++i) sum += sample_job(w, pow2(1), rng, next).duration;
    CHECK(std::abs(sum / n - 1.0) < 0.01);
}

TEST_CASE("mean size and load inversion") {
    const WorkloadSpec w = uniform_needs_exp_duration(1.0);
    CHECK(mean_size(w, pow2(8)) == doctest::Approx(15.0 / 32.0).epsilon(1e-14));
    CHECK(arrival_rate_for_load(w, pow2(8), 0.9) == doctest::Approx(1.92).epsilon(1e-12));

    WorkloadSpec single{{{8, 1.0, Deterministic{3.0}}}, 1.0};
    CHECK(mean_size(single, pow2(8)) == doctest::Approx(3.0));

    WorkloadSpec mix{{{2, 0.5, Deterministic{1.0}}, {4, 0.5, Deterministic{1.0}}}, 1.0};
    CHECK(mean_size(mix, pow2(4)) == doctest::Approx(0.75));

    WorkloadSpec half{{{1, 1.0, Deterministic{1.0}}}, 0.5};
    CHECK(load(half, pow2(1)) == doctest::Approx(0.5));
}

TEST_CASE("load profile closed forms") {
    WorkloadSpec w{{{1, 1.0, Exponential{1.0}}}, 0.5};
    const auto p = load_profile(w, pow2(1), 1.0);
    CHECK(p.relevant == doctest::Approx(0.5 * (1.0 - std::exp(-1.0))).epsilon(1e-12));
    CHECK(p.recycled == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-12));

    const auto zero = load_profile(w, pow2(1), 0.0);
    CHECK(zero.relevant == 0.0);
    CHECK(zero.arrival == 0.0);
    CHECK(zero.recycled == 0.0);

    const auto inf = load_profile(w, pow2(1), std::numeric_limits<double>::infinity());
    CHECK(inf.relevant == doctest::Approx(0.5));
    CHECK(inf.arrival == doctest::Approx(0.5));
    CHECK(inf.recycled == 0.0);
}

TEST_CASE("relevant load splits into arrival and recycled load") {
    std::vector<WorkloadSpec> specs;
    specs.push_back(uniform_needs_exp_duration(1.0));
    specs.push_back({{{1, 0.3, Deterministic{2.0}}, {4, 0.7, Hyperexponential::balanced(1.5, 10.0)}}, 0.7});
    specs.push_back({{{2, 1.0, DiscreteEmpirical{{0.5, 1.0, 4.0}, {0.2, 0.5, 0.3}}}}, 1.3});
    for (const auto& w : specs) {
        double prev_rel = 0.0;
        double prev_arr = 0.0;
        for (double r : {0.01, 0.1, 0.125, 0.25, 0.5, 1.0, 2.0, 3.0, 10.0, 100.0, 1e4}) {
            const auto p = load_profile(w, pow2(8), r);
            CHECK(p.relevant == doctest::Approx(p.arrival + p.recycled).epsilon(1e-9));
            CHECK(p.relevant >= prev_rel);
            CHECK(p.arrival >= prev_arr);
            prev_rel = p.relevant;
            prev_arr = p.arrival;
        }
        CHECK(load_profile(w, pow2(8), 1e6).recycled < 1e-9);
    }
}

TEST_CASE("Monte Carlo E[min(S, r)] agrees with the closed form") {
    const std::vector<DurationDist> dists{Deterministic{1.5}, Exponential{2.0}, Hyperexponential::balanced(2.0, 10.0),
                                          DiscreteEmpirical{{0.5, 3.0}, {0.4, 0.6}}};
    for (const auto& d : dists) {
        WorkloadSpec w{{{2, 0.5, d}, {4, 0.5, Exponential{1.0}}}, 1.0};
        const SystemConfig cfg = pow2(4);
        const SizeDist sizes = SizeDist::of_workload(w, cfg);
        for (double r : {0.3, 1.0, 2.5}) {
            RandomStream rng(99);
            JobId next = 0;
            constexpr int n = 1'000'000;
            double sum = 0.0;
            double sum2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double m = std::min(sample_job(w, cfg, rng, next).size, r);
                sum += m;
                sum2 += m * m;
            }
            const double mean = sum / n;
            const double se = std::sqrt((sum2 / n - mean * mean) / n);
            CHECK(std::abs(mean - sizes.expected_min(r)) <= 3.0 * se + 1e-12);
        }
    }
}

TEST_CASE("bookkeeping identities on partially served jobs") {
    Job j = Job::fresh(3, 0, 1.0, 4, 5.0, 8);
    CHECK(j.size == doctest::Approx(2.5));
    j.set_remaining_size(1.0, 8);
    CHECK(j.age + j.remaining_size == doctest::Approx(j.size).epsilon(1e-9));
    CHECK(j.remaining_duration == doctest::Approx(2.0));
    CHECK(j.remaining_size == doctest::Approx(j.server_need * j.remaining_duration / 8.0));
    j.set_remaining_size(-1.0, 8);
    CHECK(j.remaining_size == 0.0);
}

TEST_CASE("workload validation") {
    CHECK_THROWS_AS(validate(WorkloadSpec{{{3, 1.0, Exponential{1.0}}}, 1.0}, pow2(8)), ConfigError);
    CHECK_THROWS_AS(validate(WorkloadSpec{{{4, 1.0, Exponential{1.0}}}, 1.0}, SystemConfig{6, NeedMode::Divisible}),
                    ConfigError);
    CHECK_THROWS_AS(validate(WorkloadSpec{{{1, 0.6, Exponential{1.0}}}, 1.0}, pow2(8)), ConfigError);
    CHECK_THROWS_AS(validate(WorkloadSpec{{{1, 1.0, Exponential{-1.0}}}, 1.0}, pow2(8)), ConfigError);
    CHECK_THROWS_AS(validate(WorkloadSpec{{{1, 1.0, Exponential{1.0}}}, 0.0}, pow2(8)), ConfigError);
    CHECK_THROWS_AS(validate(SystemConfig{6, NeedMode::PowerOfTwo}), ConfigError);
    CHECK_NOTHROW(validate(WorkloadSpec{{{3, 1.0, Exponential{1.0}}}, 1.0}, SystemConfig{6, NeedMode::Divisible}));
}

TEST_CASE("balanced hyperexponential matches mean and C^2") {
    const auto h = Hyperexponential::balanced(2.0, 10.0);
    double m = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        m += h.branch_probs[i] * h.branch_means[i];
        m2 += h.branch_probs[i] * 2.0 * h.branch_means[i] * h.branch_means[i];
    }
    CHECK(m == doctest::Approx(2.0));
    CHECK((m2 - m * m) / (m * m) == doctest::Approx(10.0));
    CHECK(h.branch_probs[0] * h.branch_means[0] == doctest::Approx(h.branch_probs[1] * h.branch_means[1]));
}
