#include <doctest.h>

#include <algorithm>
#include <map>

#include "msj/policies.hpp"
#include "msj/verify.hpp"

using namespace msj;

namespace {

Job job(JobId id, int need, double rem, int k) { return Job::fresh(id, 0, 0.0, need, rem * k / need, k); }

std::vector<JobId> ids(std::initializer_list<JobId> l) { return l; }

int need_of(const std::vector<Job>& jobs, const std::vector<JobId>& chosen) {
    int t = 0;
    for (JobId id : chosen)
        for (const auto& j : jobs)
            if (j.id == id) t += j.server_need;
    return t;
}

// Straight transcription of the ServerFilling description, kept independent of
// the library kernel.
std::vector<JobId> server_filling_reference(std::vector<Job> jobs, int k) {
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
        return a.remaining_size < b.remaining_size || (a.remaining_size == b.remaining_size && a.id < b.id);
    });
    std::vector<Job> m;
    int total = 0;
    for (const auto& j : jobs) {
        if (total >= k) break;
        m.push_back(j);
        total += j.server_need;
    }
    std::stable_sort(m.begin(), m.end(), [](const Job& a, const Job& b) { return a.server_need > b.server_need; });
    std::vector<JobId> out;
    int free = k;
    for (const auto& j : m) {
        if (j.server_need > free) break;
        out.push_back(j.id);
        free -= j.server_need;
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("ServerFilling examples") {
    std::vector<Job> a{job(0, 2, 1, 8), job(1, 1, 2, 8), job(2, 4, 3, 8), job(3, 8, 4, 8)};
    CHECK(select_serverfilling(a, OrderingKey::RemainingSize, 8) == ids({3}));

    std::vector<Job> b{job(0, 1, 1, 4), job(1, 2, 2, 4), job(2, 2, 3, 4)};
    CHECK(select_serverfilling(b, OrderingKey::RemainingSize, 4) == ids({1, 2}));

    std::vector<Job> c{job(0, 2, 5, 8), job(1, 1, 7, 8)};
    CHECK(select_serverfilling(c, OrderingKey::RemainingSize, 8) == ids({0, 1}));

    std::vector<Job> bad{job(0, 3, 1, 8)};
    CHECK_THROWS(select_serverfilling(bad, OrderingKey::RemainingSize, 8));
}

TEST_CASE("DivisorFilling examples") {
    std::vector<Job> case1{job(0, 3, 1, 6), job(1, 2, 2, 6), job(2, 1, 3, 6),
                           job(3, 6, 4, 6), job(4, 1, 5, 6), job(5, 2, 6, 6)};
    CHECK(select_divisorfilling(case1, OrderingKey::RemainingSize, 6) == ids({3}));

    std::vector<Job> case2{job(0, 3, 1, 6), job(1, 2, 2, 6), job(2, 3, 3, 6),
                           job(3, 2, 4, 6), job(4, 6, 5, 6), job(5, 2, 6, 6)};
    CHECK(select_divisorfilling(case2, OrderingKey::RemainingSize, 6) == ids({4}));

    std::vector<Job> lone{job(0, 2, 1, 6)};
    CHECK(select_divisorfilling(lone, OrderingKey::RemainingSize, 6) == ids({0}));

    std::vector<Job> bad{job(0, 4, 1, 6)};
    CHECK_THROWS(select_divisorfilling(bad, OrderingKey::RemainingSize, 6));
}

TEST_CASE("MaxWeight examples") {
    std::vector<Job> a{job(0, 1, 1, 4), job(1, 1, 2, 4), job(2, 4, 3, 4), job(3, 2, 4, 4)};
    CHECK(select_maxweight(a, 4) == ids({0, 1, 3}));

    std::vector<Job> single{job(0, 8, 1, 8)};
    CHECK(select_maxweight(single, 8) == ids({0}));

    std::vector<Job> three{job(0, 4, 3, 8), job(1, 4, 1, 8), job(2, 4, 2, 8)};
    const auto chosen = select_maxweight(three, 8);
    CHECK(chosen.size() == 2);
    CHECK(need_of(three, chosen) == 8);
}

TEST_CASE("GreedySRPT and FirstFitSRPT examples") {
    std::vector<Job> a{job(0, 2, 1, 4), job(1, 4, 2, 4), job(2, 1, 3, 4)};
    CHECK(select_greedy_srpt(a, 4) == ids({0}));
    CHECK(select_firstfit_srpt(a, 4) == ids({0, 2}));
    CHECK(select_greedy_srpt({}, 4).empty());

    std::vector<Job> b{job(0, 4, 1, 4), job(1, 1, 2, 4)};
    CHECK(select_greedy_srpt(b, 4) == ids({0}));

    std::vector<Job> full{job(0, 4, 3, 4), job(1, 4, 1, 4), job(2, 4, 2, 4)};
    CHECK(select_firstfit_srpt(full, 4) == ids({1}));

    std::vector<Job> threes{job(0, 3, 3, 8), job(1, 3, 1, 8), job(2, 3, 2, 8)};
    CHECK(select_firstfit_srpt(threes, 8) == ids({1, 2}));
}

TEST_CASE("schedule dispatch") {
    const SystemConfig k4{4, NeedMode::PowerOfTwo};
    std::vector<Job> rems{job(0, 1, 3, 4), job(1, 1, 1, 4), job(2, 1, 2, 4)};
    const auto d = schedule(PolicyKind::ResourcePooledSRPT1, rems, k4);
    REQUIRE(d.served.size() == 1);
    CHECK(d.served[0].id == 1);
    CHECK(d.served[0].rate == 1.0);

    std::vector<Job> fcfs{job(0, 2, 9, 4), job(1, 4, 1, 4), job(2, 1, 1, 4)};
    const auto f = schedule(PolicyKind::FCFS, fcfs, k4);
    REQUIRE(f.served.size() == 1);
    CHECK(f.served[0].id == 0);
    CHECK(f.served[0].rate == 0.5);

    RankMap ranks{{0, 1.0}, {1, 2.0}, {2, 3.0}};
    CHECK_THROWS(schedule(PolicyKind::ServerFillingGittins, rems, k4));
    CHECK_THROWS(schedule(PolicyKind::ServerFillingSRPT, rems, k4, &ranks));
    CHECK_NOTHROW(schedule(PolicyKind::ServerFillingGittins, rems, k4, &ranks));
    CHECK_THROWS(schedule(PolicyKind::DivisorFillingSRPT, rems, k4));
}

TEST_CASE("ServerFilling with every need equal to k is SRPT-1") {
    RandomStream rng(5);
    const SystemConfig cfg{8, NeedMode::PowerOfTwo};
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<Job> jobs;
        const int n = static_cast<int>(rng.uniform() * 10);
        for (int i = 0; i < n; ++i) jobs.push_back(job(static_cast<JobId>(i), 8, rng.exponential(1.0), 8));
        const auto a = schedule(PolicyKind::ServerFillingSRPT, jobs, cfg);
        const auto b = schedule(PolicyKind::ResourcePooledSRPT1, jobs, cfg);
        CHECK(a == b);
    }
}

TEST_CASE("randomized kernel properties") {
    RandomStream rng(11);
    for (int k : {1, 2, 4, 8, 16}) {
        for (int trial = 0; trial < 3000; ++trial) {
            std::vector<Job> jobs;
            const int n = static_cast<int>(rng.uniform() * 3 * k);
            for (int i = 0; i < n; ++i) {
                int need = 1;
                while (need < k && rng.uniform() < 0.5) need *= 2;
                jobs.push_back(job(static_cast<JobId>(i), need, rng.exponential(1.0), k));
            }
            const auto chosen = select_serverfilling(jobs, OrderingKey::RemainingSize, k);
            CHECK(chosen == server_filling_reference(jobs, k));
            CHECK(need_of(jobs, chosen) <= k);

            // Relevant work efficiency: whenever at least k jobs have remaining
            // size <= r, only such jobs are served and all servers are busy.
            std::vector<double> rem;
            for (const auto& j : jobs) rem.push_back(j.remaining_size);
            std::sort(rem.begin(), rem.end());
            if (rem.size() >= static_cast<std::size_t>(k)) {
                const double r = rem[static_cast<std::size_t>(k) - 1];
                CHECK(need_of(jobs, chosen) == k);
                for (JobId id : chosen) CHECK(jobs[id].remaining_size <= r);
            }

            for (auto policy : {PolicyKind::ServerFillingSRPT, PolicyKind::ServerFillingFCFS, PolicyKind::FCFS,
                                PolicyKind::MaxWeight, PolicyKind::GreedySRPT, PolicyKind::FirstFitSRPT}) {
                const auto d = schedule(policy, jobs, SystemConfig{k, NeedMode::PowerOfTwo});
                CHECK(d.total_rate() <= 1.0 + 1e-12);
                CHECK(std::is_sorted(d.served.begin(), d.served.end(),
                                     [](const ServedJob& a, const ServedJob& b) { return a.id < b.id; }));
            }
        }
    }
}

TEST_CASE("DivisorFilling serves from the k least-key jobs and fills k") {
    RandomStream rng(3);
    for (int k : {6, 12, 18, 30}) {
        std::vector<int> divisors;
        for (int d = 1; d <= k; ++d)
            if (k % d == 0) divisors.push_back(d);
        for (int trial = 0; trial < 3000; ++trial) {
            std::vector<Job> jobs;
            const int n = static_cast<int>(rng.uniform() * 2 * k);
            for (int i = 0; i < n; ++i) {
                const int need = divisors[std::min(divisors.size() - 1, static_cast<std::size_t>(rng.uniform() * divisors.size()))];
                jobs.push_back(job(static_cast<JobId>(i), need, rng.exponential(1.0), k));
            }
            const auto chosen = select_divisorfilling(jobs, OrderingKey::RemainingSize, k);
            CHECK(need_of(jobs, chosen) <= k);
            if (n >= k) {
                CHECK(need_of(jobs, chosen) == k);
                std::vector<double> rem;
                for (const auto& j : jobs) rem.push_back(j.remaining_size);
                std::sort(rem.begin(), rem.end());
                for (JobId id : chosen) CHECK(jobs[id].remaining_size <= rem[static_cast<std::size_t>(k) - 1]);
            }
        }
    }
}

TEST_CASE("packing batteries pass and catch the mutant") {
    static constexpr int pow2_ks[] = {2, 4, 8, 16, 32};
    static constexpr int div_ks[] = {6, 12, 24, 30, 60};
    CHECK(packing_suite(pow2_ks, 2000, 1, kernel::server_filling).passed);
    CHECK(divisor_suite(div_ks, 2000, 1).passed);
    const SuiteResult mutant = packing_suite(pow2_ks, 2000, 1, server_filling_mutant);
    CHECK_FALSE(mutant.passed);
    CHECK(mutant.counterexample.find("k=") != std::string::npos);
}

TEST_CASE("MaxWeight matches exhaustive search") {
    const SuiteResult r = run_suite("maxweight", VerifyOptions{5000, 17, false});
    CHECK(r.passed);
    CHECK(r.cases == 5000);
}

TEST_CASE("policy names round-trip") {
    for (auto p : {PolicyKind::ServerFillingSRPT, PolicyKind::DivisorFillingSRPT, PolicyKind::ServerFillingGittins,
                   PolicyKind::DivisorFillingGittins, PolicyKind::ServerFillingFCFS, PolicyKind::FCFS,
                   PolicyKind::MaxWeight, PolicyKind::GreedySRPT, PolicyKind::FirstFitSRPT,
                   PolicyKind::ResourcePooledSRPT1})
        CHECK(parse_policy(to_string(p)) == p);
    CHECK_FALSE(parse_policy("Nope").has_value());
}
