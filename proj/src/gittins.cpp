#include "msj/gittins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace msj {

namespace {

constexpr double kAtomGap = 1e-9;

// Conditional view of a size distribution given S > age, with component
// weights rescaled so that the largest is 1. Ratios of the Gittins quotient
// are invariant under that common factor, which keeps large ages finite.
struct Conditioned {
    struct Exp {
        double weight;
        double mean;
    };
    struct Atom {
        double weight;
        double excess;  // value - age
    };
    std::vector<Exp> exps;
    std::vector<Atom> atoms;

    Conditioned(const SizeDist& sizes, double age) {
        double top = -std::numeric_limits<double>::infinity();
        std::vector<double> exp_logw;
        std::vector<double> atom_logw;
        for (const auto& e : sizes.exp_components()) {
            if (e.prob <= 0.0) continue;
            const double lw = std::log(e.prob) - age / e.mean;
            exps.push_back({lw, e.mean});
            top = std::max(top, lw);
        }
        for (const auto& a : sizes.atoms()) {
            if (a.prob <= 0.0 || a.value <= age) continue;
            const double lw = std::log(a.prob);
            atoms.push_back({lw, a.value - age});
            top = std::max(top, lw);
        }
        if (!std::isfinite(top)) throw std::domain_error("gittins_rank: age is beyond the support of the size distribution");
        for (auto& e : exps) e.weight = std::exp(e.weight - top);
        for (auto& a : atoms) a.weight = std::exp(a.weight - top);
    }

    // Quotient at b = age + delta; infinity when no mass lies in (age, b].
    double quotient(double delta) const {
        double num = 0.0;
        double den = 0.0;
        for (const auto& e : exps) {
            const double completes = -std::expm1(-delta / e.mean);
            num += e.weight * e.mean * completes;
            den += e.weight * completes;
        }
        for (const auto& a : atoms) {
            num += a.weight * std::min(a.excess, delta);
            if (a.excess <= delta) den += a.weight;
        }
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        return num / den;
    }

    double quotient_at_infinity() const {
        double num = 0.0;
        double den = 0.0;
        for (const auto& e : exps) {
            num += e.weight * e.mean;
            den += e.weight;
        }
        for (const auto& a : atoms) {
            num += a.weight * a.excess;
            den += a.weight;
        }
        return num / den;
    }

    double delta_span() const {
        double span = 0.0;
        for (const auto& e : exps) span = std::max(span, 50.0 * e.mean);
        for (const auto& a : atoms) span = std::max(span, a.excess);
        return span;
    }
};

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
    std::vector<double> out;
    if (n == 0 || !(hi > lo) || !(lo > 0.0)) return out;
    out.reserve(n);
    const double step = n > 1 ? std::log(hi / lo) / static_cast<double>(n - 1) : 0.0;
    for (std::size_t i = 0; i < n; ++i) out.push_back(lo * std::exp(step * static_cast<double>(i)));
    out.back() = hi;
    return out;
}

}  // namespace

double gittins_rank(const SizeDist& sizes, double age, const BGridSpec& grid) {
    const Conditioned cond(sizes, age);
    double best = cond.quotient_at_infinity();
    const double span = cond.delta_span();
    for (double delta : log_spaced(span * 1e-9, span, std::max<std::size_t>(grid.points, 2)))
        best = std::min(best, cond.quotient(delta));
    for (const auto& a : cond.atoms) best = std::min(best, cond.quotient(a.excess));
    return best;
}

double gittins_rank_on(const SizeDist& sizes, double age, std::span<const double> b_values) {
    const Conditioned cond(sizes, age);
    double best = cond.quotient_at_infinity();
    for (double b : b_values)
        if (b > age) best = std::min(best, cond.quotient(b - age));
    return best;
}

RankCurve::RankCurve(std::size_t class_id, std::vector<double> ages, std::vector<double> ranks)
    : class_id_(class_id), ages_(std::move(ages)), ranks_(std::move(ranks)) {
    if (ages_.empty() || ages_.size() != ranks_.size()) throw std::invalid_argument("RankCurve: grid size mismatch");
    if (ages_.front() != 0.0) throw std::invalid_argument("RankCurve: age grid must start at 0");
    for (std::size_t i = 1; i < ages_.size(); ++i)
        if (!(ages_[i] > ages_[i - 1])) throw std::invalid_argument("RankCurve: age grid must be strictly increasing");
}

double RankCurve::operator()(double age) const {
    if (age <= ages_.front()) return ranks_.front();
    if (age >= ages_.back()) return ranks_.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(ages_.begin(), ages_.end(), age) - ages_.begin());
    const std::size_t lo = hi - 1;
    const double t = (age - ages_[lo]) / (ages_[hi] - ages_[lo]);
    return ranks_[lo] + t * (ranks_[hi] - ranks_[lo]);
}

RankCurve precompute_rank_curve(std::size_t class_id, const JobClass& job_class, const SystemConfig& config,
                                const AgeGridSpec& spec) {
    const SizeDist sizes = SizeDist::of_class(job_class, config.k);
    const double support = sizes.max_support();
    const double upper = std::isinf(support) ? 40.0 * sizes.max_exp_mean() + [&] {
        double m = 0.0;
        for (const auto& a : sizes.atoms()) m = std::max(m, a.value);
        return m;
    }()
                                             : support * (1.0 - kAtomGap);

    std::vector<double> ages{0.0};
    for (double a : log_spaced(spec.min_age_fraction * sizes.mean(), upper, spec.points)) ages.push_back(a);
    for (const auto& atom : sizes.atoms()) {
        if (atom.value < upper) {
            ages.push_back(atom.value * (1.0 - kAtomGap));
            ages.push_back(atom.value);
        }
    }
    std::sort(ages.begin(), ages.end());
    ages.erase(std::unique(ages.begin(), ages.end()), ages.end());
    std::erase_if(ages, [&](double a) { return a > upper; });

    std::vector<double> ranks;
    ranks.reserve(ages.size());
    for (double a : ages) ranks.push_back(gittins_rank(sizes, a, spec.b_grid));

    std::vector<double> out_ages{ages.front()};
    std::vector<double> out_ranks{ranks.front()};
    auto refine = [&](auto&& self, double lo, double r_lo, double hi, double r_hi, int depth) -> void {
        const double mid = 0.5 * (lo + hi);
        if (depth > 0 && hi - lo > 1e-12 * std::max(1.0, hi)) {
            const double r_mid = gittins_rank(sizes, mid, spec.b_grid);
            if (std::abs(0.5 * (r_lo + r_hi) - r_mid) > spec.refine_tolerance * std::abs(r_mid)) {
                self(self, lo, r_lo, mid, r_mid, depth - 1);
                self(self, mid, r_mid, hi, r_hi, depth - 1);
                return;
            }
        }
        out_ages.push_back(hi);
        out_ranks.push_back(r_hi);
    };
    for (std::size_t i = 1; i < ages.size(); ++i) refine(refine, ages[i - 1], ranks[i - 1], ages[i], ranks[i], 40);
    return RankCurve(class_id, std::move(out_ages), std::move(out_ranks));
}

std::vector<RankCurve> precompute_rank_curves(const WorkloadSpec& workload, const SystemConfig& config,
                                              const AgeGridSpec& spec) {
    std::vector<RankCurve> curves;
    curves.reserve(workload.classes.size());
    for (std::size_t i = 0; i < workload.classes.size(); ++i)
        curves.push_back(precompute_rank_curve(i, workload.classes[i], config, spec));
    return curves;
}

void write_rank_csv(std::ostream& out, std::span<const RankCurve> curves) {
    const auto old = out.precision(17);
    out << "class_id,age,rank\n";
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.ages().size(); ++i) out << c.class_id() << ',' << c.ages()[i] << ',' << c.ranks()[i] << '\n';
    out.precision(old);
}

}  // namespace msj
