#include "msj/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace msj {

namespace {

void require_subcritical(double rho, const char* who) {
    if (!(rho >= 0.0 && rho < 1.0)) {
        std::ostringstream msg;
        msg << who << ": load must satisfy 0 <= rho < 1, got " << rho;
        throw std::domain_error(msg.str());
    }
}

double log_inverse_idle(double rho) { return -std::log1p(-rho); }

// Integral over r in (0, inf) of a function tabulated on a log grid: trapezoid
// in ln r on f(r) r, plus f(r_min) r_min for the head and f(r_max) r_max for
// the tail (f decays like 1/r^2 once every job is relevant).
double integrate_over_r(std::span<const double> r, std::span<const double> f) {
    if (r.empty()) return 0.0;
    double sum = f.front() * r.front() + f.back() * r.back();
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
        sum += 0.5 * (f[i] * r[i] + f[i + 1] * r[i + 1]) * std::log(r[i + 1] / r[i]);
    return sum;
}

Estimate from_batches(double pooled, const std::vector<double>& per_batch) {
    Estimate e;
    e.value = pooled;
    if (per_batch.size() < 2) return e;
    double mu = 0.0;
    for (double v : per_batch) mu += v;
    mu /= static_cast<double>(per_batch.size());
    double ss = 0.0;
    for (double v : per_batch) ss += (v - mu) * (v - mu);
    const double n = static_cast<double>(per_batch.size());
    e.stderr_ = std::sqrt(ss / (n - 1.0) / n);
    return e;
}

struct Profile {
    std::vector<double> r;
    std::vector<double> arrival;   // rho^A_r
    std::vector<double> recycled;  // rho^R_r
};

Profile profile_for(const SimReport& report, const WorkloadSpec& workload, const SystemConfig& config) {
    const SizeDist sizes = SizeDist::of_workload(workload, config);
    Profile p;
    for (const auto& t : report.per_threshold) {
        const auto lp = load_profile(sizes, report.arrival_rate, t.r);
        p.r.push_back(t.r);
        p.arrival.push_back(lp.arrival);
        p.recycled.push_back(lp.recycled);
    }
    return p;
}

// Pooled recycling-sample means with thin thresholds replaced by the nearest
// well-sampled one (ties go to the smaller r).
std::vector<double> recycle_means(const SimReport& report, std::vector<double>* low_confidence) {
    const auto& ts = report.per_threshold;
    std::vector<double> out(ts.size(), 0.0);
    std::vector<std::size_t> good;
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (ts[i].recycle_samples >= kMinRecycleSamples) good.push_back(i);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (ts[i].recycle_samples >= kMinRecycleSamples) {
            out[i] = ts[i].recycle_mean;
            continue;
        }
        if (low_confidence) low_confidence->push_back(ts[i].r);
        std::size_t best = ts.size();
        for (auto g : good) {
            const auto dist = [&](std::size_t j) { return j > i ? j - i : i - j; };
            if (best == ts.size() || dist(g) < dist(best)) best = g;
        }
        out[i] = best < ts.size() ? ts[best].recycle_mean : 0.0;
    }
    return out;
}

void require_grid(const SimReport& report, const char* who) {
    if (report.per_threshold.empty()) throw std::invalid_argument(std::string(who) + ": report has no r grid");
    if (!report.stable()) throw std::invalid_argument(std::string(who) + ": report is not stable");
}

}  // namespace

double theorem_gap_bound(int k, double lambda, double rho) {
    require_subcritical(rho, "theorem_gap_bound");
    if (!(lambda > 0.0)) throw std::domain_error("theorem_gap_bound: lambda must be positive");
    if (k < 1) throw std::domain_error("theorem_gap_bound: k must be at least 1");
    constexpr double e = std::numbers::e;
    return (e + 1.0) * static_cast<double>(k - 1) / lambda * log_inverse_idle(rho) + e / lambda;
}

double waste_bound(int k, double rho) {
    require_subcritical(rho, "waste_bound");
    return std::numbers::e * static_cast<double>(k - 1) * std::ceil(log_inverse_idle(rho));
}

double recycle_bound(int k, double rho) {
    require_subcritical(rho, "recycle_bound");
    return static_cast<double>(k - 1) * log_inverse_idle(rho);
}

Estimate waste_integral_estimate(const SimReport& report, const WorkloadSpec& workload, const SystemConfig& config) {
    require_grid(report, "waste_integral_estimate");
    const Profile p = profile_for(report, workload, config);
    const std::size_t n = p.r.size();
    auto integral = [&](auto&& waste_at) {
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = waste_at(i) / (p.r[i] * p.r[i] * (1.0 - p.arrival[i]));
        return integrate_over_r(p.r, f);
    };
    const double pooled = integral([&](std::size_t i) { return report.per_threshold[i].mean_waste; });
    std::vector<double> per_batch;
    for (const auto& b : report.batches) {
        if (!(b.time > 0.0)) continue;
        per_batch.push_back(integral([&](std::size_t i) { return b.waste_r[i] / b.time; }));
    }
    return from_batches(pooled, per_batch);
}

RecycleEstimate recycle_integral_estimate(const SimReport& report, const WorkloadSpec& workload,
                                          const SystemConfig& config) {
    require_grid(report, "recycle_integral_estimate");
    const Profile p = profile_for(report, workload, config);
    const std::size_t n = p.r.size();
    RecycleEstimate out;
    const std::vector<double> pooled_means = recycle_means(report, &out.low_confidence);
    std::vector<bool> thin(n);
    for (std::size_t i = 0; i < n; ++i) thin[i] = report.per_threshold[i].recycle_samples < kMinRecycleSamples;

    auto integral = [&](auto&& mean_at) {
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = p.recycled[i] * mean_at(i) / (p.r[i] * p.r[i] * (1.0 - p.arrival[i]));
        return integrate_over_r(p.r, f);
    };
    const double pooled = integral([&](std::size_t i) { return pooled_means[i]; });
    std::vector<double> per_batch;
    for (const auto& b : report.batches) {
        if (!(b.time > 0.0)) continue;
        per_batch.push_back(integral([&](std::size_t i) {
            if (thin[i] || b.recycle_count[i] == 0) return pooled_means[i];
            return b.recycle_sum[i] / static_cast<double>(b.recycle_count[i]);
        }));
    }
    static_cast<Estimate&>(out) = from_batches(pooled, per_batch);
    return out;
}

double wine_check(std::span<const double> grid, std::span<const double> w_values, double n) {
    if (grid.size() != w_values.size()) throw std::invalid_argument("wine_check: grid and W_r sizes differ");
    double integral = 0.0;
    if (!grid.empty()) {
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double a = w_values[i] / (grid[i] * grid[i]);
            const double b = w_values[i + 1] / (grid[i + 1] * grid[i + 1]);
            integral += 0.5 * (a + b) * (grid[i + 1] - grid[i]);
        }
        integral += w_values.back() / grid.back();
    }
    return std::abs(integral - n) / std::max(n, 1.0);
}

double wine_check_jobs(std::span<const double> remaining_sizes, std::size_t points) {
    if (remaining_sizes.empty()) return wine_check({}, {}, 0.0);
    if (points < 2) throw std::invalid_argument("wine_check_jobs: need at least two grid points");
    const auto [lo_it, hi_it] = std::minmax_element(remaining_sizes.begin(), remaining_sizes.end());
    if (!(*lo_it > 0.0)) throw std::invalid_argument("wine_check_jobs: remaining sizes must be positive");
    const RGrid grid = RGrid::log_spaced(0.5 * *lo_it, 2.0 * *hi_it, points);
    std::vector<double> sorted(remaining_sizes.begin(), remaining_sizes.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> w(points, 0.0);
    std::size_t j = 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        while (j < sorted.size() && sorted[j] <= grid.thresholds[i]) acc += sorted[j++];
        w[i] = acc;
    }
    return wine_check(grid.thresholds, w, static_cast<double>(sorted.size()));
}

double srpt1_analytic_mean_T(const WorkloadSpec& workload, const SystemConfig& config, double lambda) {
    return srpt1_analytic_mean_T(SizeDist::of_workload(workload, config), lambda);
}

double srpt1_analytic_mean_T(const SizeDist& sizes, double lambda) {
    if (!(lambda >= 0.0)) throw std::domain_error("srpt1_analytic_mean_T: lambda must be non-negative");
    require_subcritical(lambda * sizes.mean(), "srpt1_analytic_mean_T");
    using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    constexpr double tol = 1e-11;
    constexpr unsigned depth = 20;
    const double inf = std::numeric_limits<double>::infinity();

    auto waiting = [&](double x) {
        const double m2 = sizes.partial_second_moment(x) + x * x * sizes.survival(x);
        const double lt = 1.0 - lambda * sizes.partial_mean_strict(x);
        const double le = 1.0 - lambda * sizes.partial_mean(x);
        return lambda * m2 / (2.0 * lt * le);
    };
    auto residence_integrand = [&](double t) {
        return sizes.survival(t) / (1.0 - lambda * sizes.partial_mean_strict(t));
    };

    std::vector<double> cuts{0.0};
    for (const auto& a : sizes.atoms()) cuts.push_back(a.value);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const bool unbounded = !sizes.exp_components().empty();
    if (unbounded) cuts.push_back(inf);

    auto integrate = [&](auto&& f, double a, double b, const char* what) {
        double err = 0.0;
        double l1 = 0.0;
        const double v = Quad::integrate(f, a, b, depth, tol, &err, &l1);
        if (!std::isfinite(v) || err > 1e-8 * std::max(l1, 1e-300)) {
            std::ostringstream msg;
            msg << "srpt1_analytic_mean_T: " << what << " quadrature did not converge on [" << a << ", " << b
                << "]: value " << v << ", error estimate " << err << ", L1 " << l1;
            throw std::runtime_error(msg.str());
        }
        return v;
    };

    double total = 0.0;
    for (const auto& e : sizes.exp_components()) {
        auto f = [&](double x) { return e.prob / e.mean * std::exp(-x / e.mean) * waiting(x); };
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate(f, cuts[i], cuts[i + 1], "waiting");
    }
    for (const auto& a : sizes.atoms()) total += a.prob * waiting(a.value);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += integrate(residence_integrand, cuts[i], cuts[i + 1], "residence");
    return total;
}

double work_decomposition_residual(const SimReport& pi, const SimReport& srpt1, const WorkloadSpec& workload,
                                   const SystemConfig& config, double r) {
    require_grid(pi, "work_decomposition_residual");
    require_grid(srpt1, "work_decomposition_residual");
    auto index_in = [&](const SimReport& rep) {
        for (std::size_t i = 0; i < rep.per_threshold.size(); ++i)
            if (rep.per_threshold[i].r == r) return i;
        throw std::invalid_argument("work_decomposition_residual: r is not a grid point of the report");
    };
    const std::size_t i = index_in(pi);
    const std::size_t j = index_in(srpt1);
    const SizeDist sizes = SizeDist::of_workload(workload, config);
    const auto lp = load_profile(sizes, pi.arrival_rate, r);
    const std::vector<double> recycled = recycle_means(pi, nullptr);

    const double lhs = pi.per_threshold[i].mean_w - srpt1.per_threshold[j].mean_w;
    const double rhs = (pi.per_threshold[i].mean_waste + lp.recycled * recycled[i]) / (1.0 - lp.arrival);
    return std::abs(lhs - rhs) / std::max(lhs, sizes.mean());
}

Estimate paired_gap(const SimReport& pi, const SimReport& baseline) {
    if (!pi.stable() || !baseline.stable()) throw std::invalid_argument("paired_gap: both reports must be stable");
    std::vector<double> diffs;
    const std::size_t n = std::min(pi.batches.size(), baseline.batches.size());
    for (std::size_t b = 0; b < n; ++b) {
        const auto& x = pi.batches[b];
        const auto& y = baseline.batches[b];
        if (x.t_count == 0 || y.t_count == 0) continue;
        diffs.push_back(x.t_sum / static_cast<double>(x.t_count) - y.t_sum / static_cast<double>(y.t_count));
    }
    return from_batches(pi.mean_T - baseline.mean_T, diffs);
}

BoundReport bound_report(const SimReport& report, const SimReport* srpt1, const WorkloadSpec& workload,
                         const SystemConfig& config) {
    BoundReport b;
    b.rho = report.load;
    b.k = config.k;
    b.lambda = report.arrival_rate;
    b.gap_bound = theorem_gap_bound(config.k, b.lambda, b.rho);
    b.waste_bound = waste_bound(config.k, b.rho);
    b.recycle_bound = recycle_bound(config.k, b.rho);
    if (!report.stable()) return b;
    if (srpt1 && srpt1->stable()) b.measured_gap = paired_gap(report, *srpt1);
    if (!report.per_threshold.empty()) {
        b.waste = waste_integral_estimate(report, workload, config);
        b.recycle = recycle_integral_estimate(report, workload, config);
    }
    return b;
}

}  // namespace msj
