#include "msj/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "msj/analysis.hpp"
#include "msj/gittins.hpp"

namespace msj {

namespace {

struct Task {
    PolicyKind policy;
    std::size_t load_index;
    std::size_t seed_index;
};

std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string cell(const std::optional<double>& v) { return v ? format(*v) : std::string(); }

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
    const std::size_t n_loads = options.first_point_only ? std::min<std::size_t>(1, config.load_points.size())
                                                         : config.load_points.size();
    const std::size_t n_seeds =
        options.first_point_only ? std::min<std::size_t>(1, config.seeds.size()) : config.seeds.size();

    std::vector<PolicyKind> policies = config.policies;
    const bool implicit_reference =
        std::find(policies.begin(), policies.end(), PolicyKind::ResourcePooledSRPT1) == policies.end();
    if (implicit_reference) policies.push_back(PolicyKind::ResourcePooledSRPT1);

    std::vector<Task> tasks;
    for (auto p : policies)
        for (std::size_t l = 0; l < n_loads; ++l)
            for (std::size_t s = 0; s < n_seeds; ++s) tasks.push_back({p, l, s});

    std::vector<RankCurve> curves;
    if (std::any_of(policies.begin(), policies.end(), is_gittins))
        curves = precompute_rank_curves(config.workload, config.system);

    const double es = mean_size(config.workload, config.system);
    std::vector<SimReport> reports(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex guard;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            {
                std::lock_guard lock(guard);
                if (failure) return;
            }
            try {
                const Task& t = tasks[i];
                SimOptions opts;
                opts.n_arrivals = config.n_arrivals;
                opts.warmup_fraction = config.warmup_fraction;
                opts.seed = config.seeds[t.seed_index];
                opts.batches = config.batches;
                if (config.r_grid_points > 0) opts.r_grid = RGrid::standard(es, config.r_grid_points);
                if (is_gittins(t.policy)) opts.rank_curves = curves;
                reports[i] = run_simulation(config.system, config.workload_at(config.load_points[t.load_index]),
                                            t.policy, opts);
                if (options.progress) {
                    std::lock_guard lock(guard);
                    const auto& r = reports[i];
                    *options.progress << to_string(t.policy) << " load=" << format(r.load) << " seed=" << r.seed
                                      << (r.stable() ? " mean_T=" + format(r.mean_T) : std::string(" unstable"))
                                      << " (" << format(r.wall_seconds) << " s)\n";
                    options.progress->flush();
                }
            } catch (...) {
                std::lock_guard lock(guard);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    const unsigned n_workers = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(tasks.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    auto reference = [&](std::size_t l, std::size_t s) -> const SimReport& {
        const std::size_t p = static_cast<std::size_t>(
            std::find(policies.begin(), policies.end(), PolicyKind::ResourcePooledSRPT1) - policies.begin());
        return reports[(p * n_loads + l) * n_seeds + s];
    };

    SweepResult result;
    const std::size_t listed = config.policies.size() * n_loads * n_seeds;
    for (std::size_t i = 0; i < listed; ++i) {
        const Task& t = tasks[i];
        const SimReport& r = reports[i];
        const SimReport& ref = reference(t.load_index, t.seed_index);
        const WorkloadSpec wl = config.workload_at(config.load_points[t.load_index]);
        SweepRow row;
        row.policy = t.policy;
        row.k = config.system.k;
        row.need_mode = config.system.need_mode;
        row.load = r.load;
        row.lambda = r.arrival_rate;
        row.seed = r.seed;
        row.n_arrivals = r.n_arrivals;
        row.stable = r.stable();
        row.rwe_violations = r.rwe_violations;
        row.wall_seconds = r.wall_seconds;
        if (r.stable()) {
            row.mean_T = r.mean_T;
            row.ci95_T = r.ci95_T;
            row.mean_N = r.mean_N;
        }
        if (ref.stable()) row.mean_T_srpt1 = ref.mean_T;
        if (row.mean_T && row.mean_T_srpt1) {
            row.ratio_T = *row.mean_T / *row.mean_T_srpt1;
            row.gap_T = *row.mean_T - *row.mean_T_srpt1;
        }
        if (r.load < 1.0) {
            const BoundReport b = bound_report(r, &ref, wl, config.system);
            row.gap_bound = b.gap_bound;
            row.waste_bound = b.waste_bound;
            row.recycle_bound = b.recycle_bound;
            if (b.waste) row.waste_est = b.waste->value;
            if (b.recycle) row.recycle_est = b.recycle->value;
        }
        result.rows.push_back(std::move(row));
        result.reports.push_back(std::move(reports[i]));
    }
    return result;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_timing) {
    out << "policy,k,need_mode,load,lambda,seed,n_arrivals,stable,mean_T,ci95_T,mean_N,mean_T_srpt1,ratio_T,gap_T,"
           "gap_bound,waste_est,waste_bound,recycle_est,recycle_bound,rwe_violations,wall_seconds\n";
    for (const auto& r : rows) {
        out << to_string(r.policy) << ',' << r.k << ','
            << (r.need_mode == NeedMode::PowerOfTwo ? "power_of_two" : "divisible") << ',' << format(r.load) << ','
            << format(r.lambda) << ',' << r.seed << ',' << r.n_arrivals << ',' << (r.stable ? "true" : "false") << ','
            << cell(r.mean_T) << ',' << cell(r.ci95_T) << ',' << cell(r.mean_N) << ',' << cell(r.mean_T_srpt1) << ','
            << cell(r.ratio_T) << ',' << cell(r.gap_T) << ',' << cell(r.gap_bound) << ',' << cell(r.waste_est) << ','
            << cell(r.waste_bound) << ',' << cell(r.recycle_est) << ',' << cell(r.recycle_bound) << ','
            << r.rwe_violations << ',' << (with_timing ? format(r.wall_seconds) : std::string()) << '\n';
    }
}

}  // namespace msj
