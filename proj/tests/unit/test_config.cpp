#include <doctest.h>

#include <sstream>

#include "msj/config.hpp"
#include "msj/sweep.hpp"

using namespace msj;

namespace {

const char* kSmall = R"(
[system]
k = 4
need_mode = "power_of_two"

[workload]
loads = [0.5, 0.7]

[[class]]
need = 1
probability = 0.5
duration = "exponential"
mean = 4.0

[[class]]
need = 4
probability = 0.5
duration = "deterministic"
value = 1.0

[run]
policies = ["ServerFillingSRPT", "MaxWeight"]
n_arrivals = 10_000
seeds = [3, 4]
r_grid_points = 16
)";

std::size_t count_issues(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigParseError& e) {
        return e.issues().size();
    }
    return 0;
}

}  // namespace

TEST_CASE("shipped configurations parse") {
    const auto fig6 = load_config(MSJ_SOURCE_DIR "/configs/fig6.cfg");
    CHECK(fig6.system.k == 8);
    CHECK(fig6.load_points.size() == 4);
    CHECK(fig6.workload.classes.size() == 4);
    CHECK(fig6.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(fig6.n_arrivals == 1'000'000);
    CHECK(mean_size(fig6.workload, fig6.system) == doctest::Approx(1.0));
    CHECK(fig6.load_points[1].arrival_rate == doctest::Approx(0.8));

    const auto fig7 = load_config(MSJ_SOURCE_DIR "/configs/fig7.cfg");
    CHECK(mean_size(fig7.workload, fig7.system) == doctest::Approx(1.0));
    CHECK(fig7.policies == fig6.policies);

    const auto fig2 = load_config(MSJ_SOURCE_DIR "/configs/fig2.cfg");
    CHECK(fig2.r_grid_points == 0);
}

TEST_CASE("config errors are collected") {
    CHECK(count_issues("") > 0);
    CHECK(count_issues(kSmall) == 0);
    std::string bad(kSmall);
    bad += "\n[run]\n";
    CHECK(count_issues(bad) >= 1);
    std::string two_problems(kSmall);
    two_problems.replace(two_problems.find("k = 4"), 5, "k = 3");
    two_problems.replace(two_problems.find("n_arrivals = 10_000"), 19, "n_arrivals = 10");
    CHECK(count_issues(two_problems) >= 2);
    std::string unknown(kSmall);
    unknown.replace(unknown.find("[run]"), 5, "[run]\ncolour = 1");
    CHECK(count_issues(unknown) == 1);
    CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), ConfigError);
}

TEST_CASE("seed override") {
    auto cfg = parse_config(kSmall);
    override_seed_base(cfg, 100);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{100, 101});
}

TEST_CASE("sweeps are complete and reproducible") {
    const auto cfg = parse_config(kSmall);
    const SweepResult a = run_sweep(cfg);
    // SRPT-1 is run as the reference but only listed policies are reported.
    CHECK(a.rows.size() == 2 * 2 * 2);
    for (const auto& row : a.rows) {
        CHECK(row.stable);
        CHECK(row.ratio_T.has_value());
        CHECK(*row.ratio_T > 1.0);
        CHECK(row.waste_est.has_value());
    }
    CHECK(a.rows.front().policy == PolicyKind::ServerFillingSRPT);
    CHECK(a.rows.back().policy == PolicyKind::MaxWeight);

    SweepOptions threaded;
    threaded.jobs = 3;
    const SweepResult b = run_sweep(cfg, threaded);
    std::ostringstream ca, cb;
    write_sweep_csv(ca, a.rows);
    write_sweep_csv(cb, b.rows);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind("policy,", 0) == 0);

    SweepOptions first;
    first.first_point_only = true;
    CHECK(run_sweep(cfg, first).rows.size() == 2);
}
