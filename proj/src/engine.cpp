#include "msj/engine.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace msj {

RGrid RGrid::log_spaced(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("RGrid: need 0 < lo < hi and n >= 2");
    RGrid g;
    g.thresholds.reserve(n);
    const double step = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g.thresholds.push_back(lo * std::exp(step * static_cast<double>(i)));
    g.thresholds.front() = lo;
    g.thresholds.back() = hi;
    return g;
}

RGrid RGrid::standard(double mean_size, std::size_t n) { return log_spaced(1e-3 * mean_size, 1e3 * mean_size, n); }

RGrid RGrid::with_points(std::span<const double> extra) const {
    RGrid g = *this;
    for (double r : extra) {
        if (!(r > 0.0)) throw std::invalid_argument("RGrid: thresholds must be positive");
        g.thresholds.push_back(r);
    }
    std::sort(g.thresholds.begin(), g.thresholds.end());
    g.thresholds.erase(std::unique(g.thresholds.begin(), g.thresholds.end()), g.thresholds.end());
    return g;
}

std::size_t RGrid::index_of(double r) const {
    auto it = std::lower_bound(thresholds.begin(), thresholds.end(), r);
    if (it == thresholds.end() || *it != r) return thresholds.size();
    return static_cast<std::size_t>(it - thresholds.begin());
}

double instability_threshold(int k, double rho) {
    const double inv = rho < 1.0 ? 1.0 / (1.0 - rho) : 10.0;
    return 100.0 * static_cast<double>(k) * std::max(10.0, inv);
}

RelevantSnapshot snapshot_relevant(std::span<const Job> jobs, const ScheduleDecision& decision, double r,
                                   const RankMap* ranks) {
    RelevantSnapshot snap;
    snap.n = jobs.size();
    for (const auto& j : jobs) {
        const double relevance = ranks ? ranks->at(j.id) : j.remaining_size;
        if (relevance > r) continue;
        ++snap.relevant_jobs;
        snap.w_r += j.remaining_size;
        for (const auto& s : decision.served)
            if (s.id == j.id) snap.b_r += s.rate;
    }
    return snap;
}

double recycling_sample(std::span<const Job> jobs, JobId recycler, double r) {
    double w = 0.0;
    for (const auto& j : jobs)
        if (j.id != recycler && j.remaining_size <= r) w += j.remaining_size;
    return w;
}

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;
constexpr std::uint64_t kResyncInterval = 1u << 16;

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= kFnvPrime;
    }
}

struct OrderEntry {
    double key;
    JobId id;
    std::uint32_t slot;
};

struct OrderLess {
    bool operator()(const OrderEntry& a, const OrderEntry& b) const {
        return a.key < b.key || (a.key == b.key && a.id < b.id);
    }
};

using OrderSet = std::set<OrderEntry, OrderLess>;

struct Slot {
    Job job;
    double order_key = 0.0;
    double relevance = 0.0;
    std::size_t bucket = 0;
    double rate = 0.0;
    bool active = false;
};

enum class EventKind { Arrival, Completion, Crossing };

class Simulator {
public:
    Simulator(const SystemConfig& config, const WorkloadSpec& workload, PolicyKind policy, const SimOptions& opts)
        : config_(config),
          workload_(workload),
          policy_(policy),
          opts_(opts),
          key_kind_(ordering_key_for(policy)),
          gittins_(is_gittins(policy)),
          rng_(opts.seed),
          thresholds_(opts.r_grid.thresholds),
          nr_(opts.r_grid.size()) {
        validate(workload, config);
        check_mode(policy, config);
        if (opts.n_arrivals < 10'000) throw std::invalid_argument("run_simulation: n_arrivals must be at least 10^4");
        if (!(opts.warmup_fraction >= 0.0 && opts.warmup_fraction <= 0.5))
            throw std::invalid_argument("run_simulation: warmup_fraction must lie in [0, 0.5]");
        if (opts.batches < 2) throw std::invalid_argument("run_simulation: need at least two batches");
        for (std::size_t i = 0; i < nr_; ++i)
            if (!(thresholds_[i] > 0.0) || (i > 0 && !(thresholds_[i] > thresholds_[i - 1])))
                throw std::invalid_argument("run_simulation: r grid must be positive and strictly increasing");

        if (gittins_) {
            curves_ = opts.rank_curves.empty() ? precompute_rank_curves(workload, config) : opts.rank_curves;
            if (curves_.size() != workload.classes.size())
                throw std::invalid_argument("run_simulation: one rank curve per class is required");
        }

        rho_ = load(workload, config);
        cutoff_ = instability_threshold(config.k, rho_);
        warmup_n_ = static_cast<std::size_t>(std::floor(opts.warmup_fraction * static_cast<double>(opts.n_arrivals)));
        bucket_sum_.assign(nr_ + 1, 0.0);
        bucket_rate_.assign(nr_ + 1, 0.0);
        bucket_count_.assign(nr_ + 1, 0);
        batches_.resize(opts.batches);
        for (auto& b : batches_) {
            b.w_r.assign(nr_, 0.0);
            b.b_r.assign(nr_, 0.0);
            b.waste_r.assign(nr_, 0.0);
            b.recycle_sum.assign(nr_, 0.0);
            b.recycle_count.assign(nr_, 0);
        }
        need_count_.assign(static_cast<std::size_t>(config.k) + 1, 0);
        trace_digest_ = kFnvOffset;
    }

    SimReport run();

private:
    // --- job bookkeeping -------------------------------------------------
    double key_of(const Slot& s) const {
        switch (key_kind_) {
            case OrderingKey::RemainingSize:
                return s.job.remaining_size;
            case OrderingKey::ArrivalOrder:
                return static_cast<double>(s.job.id);
            case OrderingKey::GittinsRank:
                return curves_[s.job.class_index](s.job.age);
        }
        return 0.0;
    }

    std::size_t bucket_for(double relevance) const {
        return static_cast<std::size_t>(std::lower_bound(thresholds_.begin(), thresholds_.end(), relevance) -
                                        thresholds_.begin());
    }

    OrderSet& set_for(const Slot& s) {
        return policy_ == PolicyKind::MaxWeight ? groups_[s.job.server_need] : order_;
    }

    void add_to_buckets(const Slot& s) {
        bucket_sum_[s.bucket] += s.job.remaining_size;
        bucket_count_[s.bucket] += 1;
        bucket_rate_[s.bucket] += s.rate;
    }

    void remove_from_buckets(const Slot& s) {
        bucket_sum_[s.bucket] -= s.job.remaining_size;
        bucket_count_[s.bucket] -= 1;
        bucket_rate_[s.bucket] -= s.rate;
    }

    void insert_job(const Job& job) {
        std::uint32_t idx;
        if (!free_.empty()) {
            idx = free_.back();
            free_.pop_back();
        } else {
            idx = static_cast<std::uint32_t>(slots_.size());
            slots_.emplace_back();
        }
        Slot& s = slots_[idx];
        s.job = job;
        s.rate = 0.0;
        s.active = true;
        s.order_key = key_of(s);
        s.relevance = gittins_ ? s.order_key : s.job.remaining_size;
        s.bucket = bucket_for(s.relevance);
        set_for(s).insert({s.order_key, s.job.id, idx});
        ++need_count_[static_cast<std::size_t>(s.job.server_need)];
        add_to_buckets(s);
        total_work_ += s.job.remaining_size;
        ++n_jobs_;
    }

    void remove_job(std::uint32_t idx) {
        Slot& s = slots_[idx];
        set_for(s).erase({s.order_key, s.job.id, idx});
        --need_count_[static_cast<std::size_t>(s.job.server_need)];
        remove_from_buckets(s);
        total_work_ -= s.job.remaining_size;
        total_rate_ -= s.rate;
        s.active = false;
        s.rate = 0.0;
        std::erase(served_, idx);
        free_.push_back(idx);
        --n_jobs_;
    }

    // --- scheduling ------------------------------------------------------
    void reschedule();
    void run_kernel(std::vector<std::uint32_t>& chosen);

    // --- time advance ----------------------------------------------------
    void accumulate(double dt);
    void advance(double dt);
    void check_rwe();
    void resync();
    void full_check();

    BatchStats& batch() { return batches_[current_batch_]; }
    std::size_t batch_of(JobId id) const {
        const auto span = opts_.n_arrivals - warmup_n_;
        const auto b = static_cast<std::size_t>((id - warmup_n_) * opts_.batches / span);
        return std::min(b, opts_.batches - 1);
    }

    void trace(TraceEvent::Kind kind, JobId id) {
        fnv_mix(trace_digest_, static_cast<std::uint64_t>(kind));
        fnv_mix(trace_digest_, id);
        fnv_mix(trace_digest_, std::bit_cast<std::uint64_t>(now_));
        if (opts_.record_trace) report_.trace.push_back({now_, kind, id});
    }

    SimReport finish();

    const SystemConfig config_;
    const WorkloadSpec& workload_;
    const PolicyKind policy_;
    const SimOptions& opts_;
    const OrderingKey key_kind_;
    const bool gittins_;
    std::vector<RankCurve> curves_;
    RandomStream rng_;

    std::vector<Slot> slots_;
    std::vector<std::uint32_t> free_;
    OrderSet order_;
    std::map<int, OrderSet> groups_;
    std::vector<std::uint32_t> served_;
    std::vector<std::int64_t> need_count_;
    std::size_t n_jobs_ = 0;

    const std::vector<double>& thresholds_;
    const std::size_t nr_;
    std::vector<double> bucket_sum_;
    std::vector<double> bucket_rate_;
    std::vector<std::int64_t> bucket_count_;
    double total_work_ = 0.0;
    double total_rate_ = 0.0;

    double now_ = 0.0;
    double next_arrival_ = 0.0;
    JobId next_id_ = 0;
    std::size_t arrivals_ = 0;
    std::size_t warmup_n_ = 0;
    bool observing_ = false;
    std::size_t current_batch_ = 0;
    double rho_ = 0.0;
    double cutoff_ = 0.0;
    std::uint64_t events_since_resync_ = 0;

    std::vector<BatchStats> batches_;
    std::uint64_t trace_digest_ = 0;
    SimReport report_;

    // scratch
    std::vector<Candidate> cands_;
    std::vector<std::uint32_t> cand_slots_;
    std::vector<std::uint32_t> chosen_;
};

void Simulator::run_kernel(std::vector<std::uint32_t>& chosen) {
    chosen.clear();
    const int k = config_.k;
    if (policy_ == PolicyKind::MaxWeight) {
        std::vector<kernel::NeedGroup> groups;
        std::vector<std::pair<JobId, std::uint32_t>> lookup;
        for (const auto& [need, set] : groups_) {
            if (set.empty()) continue;
            kernel::NeedGroup g;
            g.need = need;
            g.count = set.size();
            const auto take = static_cast<std::size_t>(k / need);
            for (auto it = set.begin(); it != set.end() && g.least.size() < take; ++it) {
                const Slot& s = slots_[it->slot];
                g.least.push_back({s.job.id, need, it->key, s.job.remaining_size});
                lookup.emplace_back(s.job.id, it->slot);
            }
            groups.push_back(std::move(g));
        }
        for (JobId id : kernel::max_weight(groups, k))
            for (const auto& [jid, slot] : lookup)
                if (jid == id) chosen.push_back(slot);
        return;
    }

    std::size_t limit = order_.size();
    switch (policy_) {
        case PolicyKind::ServerFillingSRPT:
        case PolicyKind::ServerFillingGittins:
        case PolicyKind::ServerFillingFCFS:
        case PolicyKind::DivisorFillingSRPT:
        case PolicyKind::DivisorFillingGittins:
            limit = static_cast<std::size_t>(k);
            break;
        case PolicyKind::FCFS:
        case PolicyKind::GreedySRPT:
            limit = static_cast<std::size_t>(k) + 1;
            break;
        case PolicyKind::ResourcePooledSRPT1:
            limit = 1;
            break;
        default:
            break;
    }
    cands_.clear();
    cand_slots_.clear();
    if (policy_ == PolicyKind::FirstFitSRPT) {
        // Stop scanning once no unscanned job fits in the free servers.
        std::vector<std::int64_t> unscanned = need_count_;
        int free = k;
        auto can_fit = [&] {
            for (int n = 1; n <= free; ++n)
                if (unscanned[static_cast<std::size_t>(n)] > 0) return true;
            return false;
        };
        for (auto it = order_.begin(); it != order_.end() && free > 0 && can_fit(); ++it) {
            const Slot& s = slots_[it->slot];
            cands_.push_back({s.job.id, s.job.server_need, it->key, s.job.remaining_size});
            cand_slots_.push_back(it->slot);
            --unscanned[static_cast<std::size_t>(s.job.server_need)];
            if (s.job.server_need <= free) free -= s.job.server_need;
        }
    } else {
        for (auto it = order_.begin(); it != order_.end() && cands_.size() < limit; ++it) {
            const Slot& s = slots_[it->slot];
            cands_.push_back({s.job.id, s.job.server_need, it->key, s.job.remaining_size});
            cand_slots_.push_back(it->slot);
        }
    }
    std::vector<std::size_t> positions;
    switch (policy_) {
        case PolicyKind::ServerFillingSRPT:
        case PolicyKind::ServerFillingGittins:
        case PolicyKind::ServerFillingFCFS:
            positions = kernel::server_filling(cands_, k);
            break;
        case PolicyKind::DivisorFillingSRPT:
        case PolicyKind::DivisorFillingGittins:
            positions = kernel::divisor_filling(cands_, k);
            break;
        case PolicyKind::FCFS:
        case PolicyKind::GreedySRPT:
            positions = kernel::greedy_prefix(cands_, k);
            break;
        case PolicyKind::FirstFitSRPT:
            positions = kernel::first_fit(cands_, k);
            break;
        case PolicyKind::ResourcePooledSRPT1:
            if (!cands_.empty()) positions.push_back(0);
            break;
        case PolicyKind::MaxWeight:
            break;
    }
    for (auto pos : positions) chosen.push_back(cand_slots_[pos]);
}

void Simulator::reschedule() {
    for (auto idx : served_) {
        Slot& s = slots_[idx];
        s.rate = 0.0;
        if (key_kind_ == OrderingKey::ArrivalOrder) continue;
        OrderSet& set = set_for(s);
        set.erase({s.order_key, s.job.id, idx});
        s.order_key = key_of(s);
        set.insert({s.order_key, s.job.id, idx});
        if (gittins_) {
            remove_from_buckets(s);
            s.relevance = s.order_key;
            s.bucket = bucket_for(s.relevance);
            add_to_buckets(s);
        }
    }
    run_kernel(chosen_);
    std::sort(chosen_.begin(), chosen_.end(),
              [&](std::uint32_t a, std::uint32_t b) { return slots_[a].job.id < slots_[b].job.id; });
    served_ = chosen_;
    std::fill(bucket_rate_.begin(), bucket_rate_.end(), 0.0);
    total_rate_ = 0.0;
    const double k = static_cast<double>(config_.k);
    for (auto idx : served_) {
        Slot& s = slots_[idx];
        s.rate = policy_ == PolicyKind::ResourcePooledSRPT1 ? 1.0 : static_cast<double>(s.job.server_need) / k;
        bucket_rate_[s.bucket] += s.rate;
        total_rate_ += s.rate;
    }
}

void Simulator::accumulate(double dt) {
    BatchStats& b = batch();
    const double half_dt2 = 0.5 * dt * dt;
    b.time += dt;
    b.n_integral += static_cast<double>(n_jobs_) * dt;
    b.w_integral += total_work_ * dt - total_rate_ * half_dt2;
    b.b_integral += total_rate_ * dt;
    double w = 0.0;
    double rate = 0.0;
    for (std::size_t i = 0; i < nr_; ++i) {
        w += bucket_sum_[i];
        rate += bucket_rate_[i];
        const double w_int = w * dt - rate * half_dt2;
        b.w_r[i] += w_int;
        b.b_r[i] += rate * dt;
        b.waste_r[i] += std::max(0.0, 1.0 - rate) * w_int;
    }
}

void Simulator::advance(double dt) {
    if (!(dt > 0.0)) return;
    if (observing_) accumulate(dt);
    for (auto idx : served_) {
        Slot& s = slots_[idx];
        const double before = s.job.remaining_size;
        s.job.set_remaining_size(before - s.rate * dt, config_.k);
        const double delta = before - s.job.remaining_size;
        bucket_sum_[s.bucket] -= delta;
        total_work_ -= delta;
    }
}

void Simulator::check_rwe() {
    if (nr_ == 0) return;
    std::int64_t count = 0;
    double rate = 0.0;
    for (std::size_t i = 0; i < nr_; ++i) {
        count += bucket_count_[i];
        rate += bucket_rate_[i];
        if (count >= config_.k && rate < 1.0 - 1e-9) {
            ++report_.rwe_violations;
            return;
        }
    }
}

void Simulator::resync() {
    std::vector<double> sums(nr_ + 1, 0.0);
    double total = 0.0;
    for (const auto& s : slots_) {
        if (!s.active) continue;
        sums[s.bucket] += s.job.remaining_size;
        total += s.job.remaining_size;
    }
    if (events_since_resync_ > 0) {
        const double drift = std::abs(total - total_work_) / static_cast<double>(events_since_resync_);
        report_.max_conservation_error = std::max(report_.max_conservation_error, drift);
    }
    bucket_sum_ = std::move(sums);
    total_work_ = total;
    events_since_resync_ = 0;
}

void Simulator::full_check() {
    std::vector<Job> jobs;
    RankMap ranks;
    for (const auto& s : slots_) {
        if (!s.active) continue;
        jobs.push_back(s.job);
        if (gittins_) ranks[s.job.id] = s.order_key;
    }
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.id < b.id; });
    const ScheduleDecision expected = schedule(policy_, jobs, config_, gittins_ ? &ranks : nullptr);
    ScheduleDecision actual;
    for (auto idx : served_) actual.served.push_back({slots_[idx].job.id, slots_[idx].rate});
    if (!(expected == actual)) ++report_.check_failures;

    double exact_total = 0.0;
    for (const auto& j : jobs) exact_total += j.remaining_size;
    if (std::abs(exact_total - total_work_) > 1e-9 * (1.0 + exact_total)) ++report_.check_failures;

    double w = 0.0;
    double rate = 0.0;
    double prev_b = 0.0;
    for (std::size_t i = 0; i < nr_; ++i) {
        w += bucket_sum_[i];
        rate += bucket_rate_[i];
        const auto snap = snapshot_relevant(jobs, actual, thresholds_[i], gittins_ ? &ranks : nullptr);
        if (std::abs(snap.w_r - w) > 1e-9 * (1.0 + snap.w_r) || std::abs(snap.b_r - rate) > 1e-9)
            ++report_.check_failures;
        if (snap.b_r + 1e-12 < prev_b) ++report_.check_failures;
        prev_b = snap.b_r;
    }
}

SimReport Simulator::run() {
    const auto wall_start = std::chrono::steady_clock::now();
    const double lambda = workload_.arrival_rate;
    next_arrival_ = rng_.exponential(1.0 / lambda);

    for (;;) {
        EventKind kind = EventKind::Arrival;
        double best = next_arrival_ - now_;
        std::uint32_t who = 0;
        std::size_t cross_index = 0;
        for (auto idx : served_) {
            const Slot& s = slots_[idx];
            const double rem = s.job.remaining_size;
            const double dt_done = rem / s.rate;
            if (dt_done < best) {
                best = dt_done;
                kind = EventKind::Completion;
                who = idx;
            }
            if (nr_ > 0 && !gittins_) {
                const std::size_t b = bucket_for(rem);
                if (b > 0) {
                    const double dt_cross = (rem - thresholds_[b - 1]) / s.rate;
                    if (dt_cross < best) {
                        best = dt_cross;
                        kind = EventKind::Crossing;
                        who = idx;
                        cross_index = b - 1;
                    }
                }
            }
        }
        best = std::max(best, 0.0);

        advance(best);
        now_ = kind == EventKind::Arrival ? next_arrival_ : now_ + best;
        ++report_.events;
        ++events_since_resync_;

        if (kind == EventKind::Crossing) {
            Slot& s = slots_[who];
            const double r = thresholds_[cross_index];
            remove_from_buckets(s);
            total_work_ -= s.job.remaining_size - r;
            s.job.set_remaining_size(r, config_.k);
            s.relevance = r;
            s.bucket = cross_index;
            if (observing_) {
                double sample = 0.0;
                for (std::size_t i = 0; i <= cross_index; ++i) sample += bucket_sum_[i];
                sample = std::max(sample, 0.0);
                BatchStats& b = batch();
                b.recycle_sum[cross_index] += sample;
                b.recycle_count[cross_index] += 1;
                if (config_.k > 1)
                    report_.max_recycle_ratio =
                        std::max(report_.max_recycle_ratio, sample / (static_cast<double>(config_.k - 1) * r));
            }
            add_to_buckets(s);
            check_rwe();
            continue;
        }

        if (kind == EventKind::Completion) {
            Slot& s = slots_[who];
            const JobId id = s.job.id;
            trace(TraceEvent::Kind::Completion, id);
            if (id >= warmup_n_) {
                BatchStats& b = batches_[batch_of(id)];
                b.t_sum += now_ - s.job.arrival_time;
                b.t_count += 1;
            }
            s.job.set_remaining_size(0.0, config_.k);
            remove_job(who);
        } else {
            if (arrivals_ == opts_.n_arrivals) break;
            const Job job = sample_job(workload_, config_, rng_, next_id_, now_);
            trace(TraceEvent::Kind::Arrival, job.id);
            if (job.id == warmup_n_) observing_ = true;
            if (observing_) current_batch_ = batch_of(job.id);
            insert_job(job);
            ++arrivals_;
            next_arrival_ = now_ + rng_.exponential(1.0 / lambda);
            report_.max_jobs = std::max<std::uint64_t>(report_.max_jobs, n_jobs_);
            if (static_cast<double>(n_jobs_) > cutoff_) {
                report_.verdict = Verdict::Unstable;
                report_.abort_reason = "job count exceeded runaway threshold";
                break;
            }
        }
        reschedule();
        check_rwe();
        if (opts_.full_checks) full_check();
        if (events_since_resync_ >= kResyncInterval) resync();
    }
    resync();
    SimReport report = finish();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return report;
}

SimReport Simulator::finish() {
    SimReport r = std::move(report_);
    r.config = config_;
    r.policy = policy_;
    r.arrival_rate = workload_.arrival_rate;
    r.load = rho_;
    r.n_arrivals = opts_.n_arrivals;
    r.warmup_fraction = opts_.warmup_fraction;
    r.seed = opts_.seed;
    r.trace_digest = trace_digest_;

    double time = 0.0;
    double n_int = 0.0;
    double w_int = 0.0;
    double b_int = 0.0;
    double t_sum = 0.0;
    std::uint64_t t_count = 0;
    for (const auto& b : batches_) {
        time += b.time;
        n_int += b.n_integral;
        w_int += b.w_integral;
        b_int += b.b_integral;
        t_sum += b.t_sum;
        t_count += b.t_count;
    }
    r.observed_time = time;
    r.completed = t_count;
    const std::size_t observed_arrivals = std::min(arrivals_, opts_.n_arrivals) - std::min(arrivals_, warmup_n_);
    r.censored = observed_arrivals >= t_count ? observed_arrivals - t_count : 0;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (time > 0.0) {
        r.mean_N = n_int / time;
        r.mean_W = w_int / time;
        r.mean_B = b_int / time;
        r.lambda_effective = static_cast<double>(observed_arrivals) / time;
    }

    if (r.stable() && t_count > 0) {
        r.mean_T = t_sum / static_cast<double>(t_count);
        std::vector<double> means;
        for (const auto& b : batches_)
            if (b.t_count > 0) means.push_back(b.t_sum / static_cast<double>(b.t_count));
        if (means.size() >= 2) {
            double mu = 0.0;
            for (double m : means) mu += m;
            mu /= static_cast<double>(means.size());
            double ss = 0.0;
            for (double m : means) ss += (m - mu) * (m - mu);
            const double n = static_cast<double>(means.size());
            r.stderr_T = std::sqrt(ss / (n - 1.0) / n);
            const boost::math::students_t dist(n - 1.0);
            r.ci95_T = boost::math::quantile(boost::math::complement(dist, 0.025)) * r.stderr_T;
        }
    } else {
        r.mean_T = nan;
        r.stderr_T = nan;
        r.ci95_T = nan;
    }

    r.per_threshold.resize(nr_);
    for (std::size_t i = 0; i < nr_; ++i) {
        ThresholdStats& ts = r.per_threshold[i];
        ts.r = thresholds_[i];
        double w = 0.0;
        double b = 0.0;
        double waste = 0.0;
        double rs = 0.0;
        std::uint64_t rc = 0;
        for (const auto& bs : batches_) {
            w += bs.w_r[i];
            b += bs.b_r[i];
            waste += bs.waste_r[i];
            rs += bs.recycle_sum[i];
            rc += bs.recycle_count[i];
        }
        if (time > 0.0) {
            ts.mean_w = w / time;
            ts.mean_b = b / time;
            ts.mean_waste = waste / time;
        }
        ts.recycle_samples = rc;
        ts.recycle_mean = rc > 0 ? rs / static_cast<double>(rc) : 0.0;
    }
    r.batches = std::move(batches_);
    return r;
}

}  // namespace

SimReport run_simulation(const SystemConfig& config, const WorkloadSpec& workload, PolicyKind policy,
                         const SimOptions& opts) {
    Simulator sim(config, workload, policy, opts);
    return sim.run();
}

}  // namespace msj
