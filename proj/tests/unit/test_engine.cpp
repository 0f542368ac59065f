#include <doctest.h>

#include <cmath>

#include "msj/analysis.hpp"
#include "msj/engine.hpp"

using namespace msj;

namespace {

const SystemConfig kPow8{8, NeedMode::PowerOfTwo};

WorkloadSpec fig6(double rho, bool hyper = false) {
    WorkloadSpec w;
    for (int n : {1, 2, 4, 8}) {
        const double dmean = 8.0 / n;
        if (hyper) w.classes.push_back({n, 0.25, Hyperexponential::balanced(dmean, 10.0)});
        else w.classes.push_back({n, 0.25, Exponential{dmean}});
    }
    w.arrival_rate = arrival_rate_for_load(w, kPow8, rho);
    return w;
}

SimOptions small_run(std::uint64_t seed, std::size_t n = 10'000) {
    SimOptions o;
    o.n_arrivals = n;
    o.seed = seed;
    o.record_trace = true;
    return o;
}

// Event loop written without any incremental state: every event recomputes
// the decision from the full job list.
std::vector<TraceEvent> naive_trace(const SystemConfig& cfg, const WorkloadSpec& w, PolicyKind policy,
                                    std::uint64_t seed, std::size_t n_arrivals) {
    RandomStream rng(seed);
    std::vector<RankCurve> curves;
    if (is_gittins(policy)) curves = precompute_rank_curves(w, cfg);
    std::vector<Job> jobs;
    std::vector<TraceEvent> trace;
    JobId next_id = 0;
    std::size_t arrivals = 0;
    double now = 0.0;
    double next_arrival = rng.exponential(1.0 / w.arrival_rate);
    for (;;) {
        RankMap ranks;
        for (const auto& j : jobs)
            if (is_gittins(policy)) ranks[j.id] = curves[j.class_index](j.age);
        const ScheduleDecision d = schedule(policy, jobs, cfg, is_gittins(policy) ? &ranks : nullptr);
        auto find = [&](JobId id) {
            for (std::size_t i = 0; i < jobs.size(); ++i)
                if (jobs[i].id == id) return i;
            return jobs.size();
        };
        double best = next_arrival - now;
        bool completion = false;
        JobId who = 0;
        for (const auto& s : d.served) {
            const double dt = jobs[find(s.id)].remaining_size / s.rate;
            if (dt < best) {
                best = dt;
                completion = true;
                who = s.id;
            }
        }
        best = std::max(best, 0.0);
        if (best > 0.0)
            for (const auto& s : d.served) {
                Job& j = jobs[find(s.id)];
                j.set_remaining_size(j.remaining_size - s.rate * best, cfg.k);
            }
        now = completion ? now + best : next_arrival;
        if (completion) {
            trace.push_back({now, TraceEvent::Kind::Completion, who});
            jobs.erase(jobs.begin() + static_cast<std::ptrdiff_t>(find(who)));
            continue;
        }
        if (arrivals == n_arrivals) break;
        Job j = sample_job(w, cfg, rng, next_id, now);
        trace.push_back({now, TraceEvent::Kind::Arrival, j.id});
        jobs.push_back(j);
        ++arrivals;
        next_arrival = now + rng.exponential(1.0 / w.arrival_rate);
    }
    return trace;
}

void check_same_order(const std::vector<TraceEvent>& a, const std::vector<TraceEvent>& b) {
    REQUIRE(a.size() == b.size());
    std::size_t bad = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].kind != b[i].kind || a[i].id != b[i].id ||
            std::abs(a[i].time - b[i].time) > 1e-9 * std::max(1.0, a[i].time))
            ++bad;
    }
    CHECK(bad == 0);
}

}  // namespace

TEST_CASE("engine trace matches a from-scratch event loop") {
    const SystemConfig div12{12, NeedMode::Divisible};
    WorkloadSpec dw;
    for (int n : {1, 2, 3, 4, 6, 12}) dw.classes.push_back({n, 1.0 / 6.0, Exponential{12.0 / n}});
    dw.classes.back().probability = 1.0 - 5.0 / 6.0;
    dw.arrival_rate = arrival_rate_for_load(dw, div12, 0.85);

    struct Case {
        SystemConfig cfg;
        WorkloadSpec w;
        PolicyKind policy;
    };
    const std::vector<Case> cases{
        {kPow8, fig6(0.9), PolicyKind::ServerFillingSRPT},
        {kPow8, fig6(0.9, true), PolicyKind::ServerFillingGittins},
        {kPow8, fig6(0.9), PolicyKind::ServerFillingFCFS},
        {kPow8, fig6(0.7), PolicyKind::FCFS},
        {kPow8, fig6(0.9), PolicyKind::MaxWeight},
        {kPow8, fig6(0.8), PolicyKind::GreedySRPT},
        {kPow8, fig6(0.8), PolicyKind::FirstFitSRPT},
        {kPow8, fig6(0.9), PolicyKind::ResourcePooledSRPT1},
        {div12, dw, PolicyKind::DivisorFillingSRPT},
        {div12, dw, PolicyKind::DivisorFillingGittins},
    };
    for (const auto& c : cases) {
        CAPTURE(to_string(c.policy));
        const auto expected = naive_trace(c.cfg, c.w, c.policy, 42, 10'000);
        const SimReport plain = run_simulation(c.cfg, c.w, c.policy, small_run(42));
        CHECK(plain.trace == expected);

        SimOptions gridded = small_run(42);
        gridded.r_grid = RGrid::standard(mean_size(c.w, c.cfg), 24);
        gridded.full_checks = true;
        const SimReport g = run_simulation(c.cfg, c.w, c.policy, gridded);
        check_same_order(g.trace, expected);
        CHECK(g.check_failures == 0);
        if (is_filling(c.policy)) CHECK(g.rwe_violations == 0);
    }
}

TEST_CASE("snapshot and recycling sample definitions") {
    const std::vector<Job> none;
    const auto empty = snapshot_relevant(none, {}, 1.0);
    CHECK(empty.w_r == 0.0);
    CHECK(empty.b_r == 0.0);
    CHECK(empty.n == 0);

    std::vector<Job> two{Job::fresh(0, 0, 0.0, 1, 8.0, 8), Job::fresh(1, 0, 0.0, 1, 24.0, 8)};  // sizes 1 and 3
    CHECK(snapshot_relevant(two, {}, 2.0).w_r == 1.0);

    std::vector<Job> served{Job::fresh(0, 0, 0.0, 4, 1.0, 8), Job::fresh(1, 0, 0.0, 2, 1.0, 8)};
    const ScheduleDecision d = make_decision(PolicyKind::ServerFillingSRPT, served, {0, 1}, 8);
    CHECK(snapshot_relevant(served, d, 1e9).b_r == doctest::Approx(0.75));

    std::vector<Job> alone{Job::fresh(5, 0, 0.0, 1, 4.0, 1)};
    CHECK(recycling_sample(alone, 5, 0.5) == 0.0);
    std::vector<Job> pair{Job::fresh(5, 0, 0.0, 1, 0.5, 1), Job::fresh(6, 0, 0.0, 1, 0.3, 1)};
    CHECK(recycling_sample(pair, 5, 0.5) == doctest::Approx(0.3));
}

TEST_CASE("Little's law and E[B] = rho") {
    for (auto policy : {PolicyKind::ServerFillingSRPT, PolicyKind::MaxWeight, PolicyKind::ResourcePooledSRPT1}) {
        const WorkloadSpec w = fig6(0.8);
        SimOptions o;
        o.n_arrivals = 300'000;
        o.seed = 3;
        const SimReport r = run_simulation(kPow8, w, policy, o);
        REQUIRE(r.stable());
        CHECK(std::abs(r.mean_N - r.lambda_effective * r.mean_T) <= 3.0 * r.ci95_T * r.lambda_effective + 0.02 * r.mean_N);
        std::vector<double> per_batch;
        for (const auto& b : r.batches) per_batch.push_back(b.b_integral / b.time);
        double mu = 0.0;
        for (double v : per_batch) mu += v;
        mu /= per_batch.size();
        double ss = 0.0;
        for (double v : per_batch) ss += (v - mu) * (v - mu);
        const double se = std::sqrt(ss / (per_batch.size() - 1.0) / per_batch.size());
        CHECK(std::abs(r.mean_B - 0.8) <= 3.0 * se + 1e-3);
        CHECK(r.censored < 100);
    }
}

TEST_CASE("identical seeds give identical reports") {
    const WorkloadSpec w = fig6(0.9);
    SimOptions o = small_run(9, 50'000);
    o.r_grid = RGrid::standard(1.0, 32);
    const SimReport a = run_simulation(kPow8, w, PolicyKind::ServerFillingSRPT, o);
    const SimReport b = run_simulation(kPow8, w, PolicyKind::ServerFillingSRPT, o);
    CHECK(a.trace_digest == b.trace_digest);
    CHECK(a.trace == b.trace);
    CHECK(a.mean_T == b.mean_T);
    CHECK(a.ci95_T == b.ci95_T);
    CHECK(a.mean_N == b.mean_N);
    CHECK(a.events == b.events);
    for (std::size_t i = 0; i < a.per_threshold.size(); ++i) {
        CHECK(a.per_threshold[i].mean_w == b.per_threshold[i].mean_w);
        CHECK(a.per_threshold[i].mean_waste == b.per_threshold[i].mean_waste);
        CHECK(a.per_threshold[i].recycle_mean == b.per_threshold[i].recycle_mean);
    }
    o.seed = 10;
    CHECK(run_simulation(kPow8, w, PolicyKind::ServerFillingSRPT, o).trace_digest != a.trace_digest);
}

TEST_CASE("degenerate systems reproduce SRPT-1 exactly") {
    WorkloadSpec all_k{{{8, 1.0, Exponential{1.0}}}, 0.0};
    all_k.arrival_rate = arrival_rate_for_load(all_k, kPow8, 0.8);
    WorkloadSpec det;
    for (int n : {1, 2, 4, 8}) det.classes.push_back({n, 0.25, Deterministic{1.0 + n}});
    det.arrival_rate = arrival_rate_for_load(det, kPow8, 0.8);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SimOptions o = small_run(seed);
        const auto a = run_simulation(kPow8, all_k, PolicyKind::ServerFillingSRPT, o);
        const auto b = run_simulation(kPow8, all_k, PolicyKind::ResourcePooledSRPT1, o);
        CHECK(a.trace_digest == b.trace_digest);
        CHECK(a.mean_T == b.mean_T);
        const auto g = run_simulation(kPow8, det, PolicyKind::ServerFillingGittins, o);
        const auto s = run_simulation(kPow8, det, PolicyKind::ServerFillingSRPT, o);
        CHECK(g.trace_digest == s.trace_digest);
    }
}

TEST_CASE("relevant-work bookkeeping under ServerFilling-SRPT") {
    const WorkloadSpec w = fig6(0.9);
    SimOptions o;
    o.n_arrivals = 100'000;
    o.seed = 4;
    o.r_grid = RGrid::standard(1.0, 32);
    const SimReport r = run_simulation(kPow8, w, PolicyKind::ServerFillingSRPT, o);
    CHECK(r.rwe_violations == 0);
    CHECK(r.max_recycle_ratio <= 1.0 + 1e-9);
    CHECK(r.max_conservation_error < 1e-9);
    double prev_b = 0.0;
    double prev_w = 0.0;
    for (const auto& t : r.per_threshold) {
        CHECK(t.mean_b >= prev_b - 1e-12);
        CHECK(t.mean_w >= prev_w - 1e-12);
        prev_b = t.mean_b;
        prev_w = t.mean_w;
    }
    CHECK(r.per_threshold.back().mean_w == doctest::Approx(r.mean_W).epsilon(1e-6));
    CHECK(r.per_threshold.back().mean_b == doctest::Approx(r.mean_B).epsilon(1e-6));
}

TEST_CASE("SRPT-1 on M/M/1 matches the analytic mean") {
    const SystemConfig k1{1, NeedMode::PowerOfTwo};
    WorkloadSpec w{{{1, 1.0, Exponential{1.0}}}, 0.5};
    SimOptions o;
    o.n_arrivals = 400'000;
    o.seed = 12;
    const SimReport r = run_simulation(k1, w, PolicyKind::ResourcePooledSRPT1, o);
    CHECK(std::abs(r.mean_T - srpt1_analytic_mean_T(w, k1, 0.5)) <= 3.0 * r.stderr_T);
}

TEST_CASE("runaway queues are flagged") {
    SimOptions o;
    o.n_arrivals = 1'000'000;
    o.seed = 1;
    const SimReport greedy = run_simulation(kPow8, fig6(0.9), PolicyKind::GreedySRPT, o);
    CHECK_FALSE(greedy.stable());
    CHECK(greedy.max_jobs > instability_threshold(8, 0.9));
    CHECK(std::isnan(greedy.mean_T));
    CHECK(instability_threshold(8, 0.9) == doctest::Approx(8000.0));
    CHECK(instability_threshold(8, 0.999) == doctest::Approx(800000.0));
}

TEST_CASE("option validation") {
    SimOptions o;
    o.n_arrivals = 5'000;
    CHECK_THROWS(run_simulation(kPow8, fig6(0.5), PolicyKind::ServerFillingSRPT, o));
    o.n_arrivals = 10'000;
    o.warmup_fraction = 0.6;
    CHECK_THROWS(run_simulation(kPow8, fig6(0.5), PolicyKind::ServerFillingSRPT, o));
    o.warmup_fraction = 0.2;
    CHECK_THROWS(run_simulation(kPow8, fig6(0.5), PolicyKind::DivisorFillingSRPT, o));
    CHECK_THROWS(RGrid::log_spaced(0.0, 1.0, 8));
}
