// msjsim: command-line front end for the multiserver-job simulator.
//
//   msjsim run <cfg>        every policy at the first load point and seed
//   msjsim sweep <cfg>      full (policy, load, seed) sweep to CSV
//   msjsim verify           property batteries
//   msjsim rank-dump <cfg>  Gittins rank tables
//
// Exit codes: 0 success, 1 verification failure, 2 config error, 3 runtime abort.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "msj/config.hpp"
#include "msj/gittins.hpp"
#include "msj/sweep.hpp"
#include "msj/verify.hpp"

namespace {

constexpr int kExitVerify = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

msj::ExperimentConfig load(const std::string& path) {
    msj::ExperimentConfig cfg = msj::load_config(path);
    if (const char* env = std::getenv("MSJ_SEED")) {
        char* end = nullptr;
        const unsigned long long base = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0') throw msj::ConfigError("MSJ_SEED must be a non-negative integer");
        msj::override_seed_base(cfg, base);
    }
    return cfg;
}

void write_rows(const msj::SweepResult& result, const std::string& path, bool timing) {
    if (path.empty() || path == "-") {
        msj::write_sweep_csv(std::cout, result.rows, timing);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    msj::write_sweep_csv(out, result.rows, timing);
}

void print_table(const msj::SweepResult& result) {
    std::printf("%-24s %8s %12s %10s %10s %8s %6s\n", "policy", "load", "mean_T", "ci95", "ratio", "mean_N", "rwe");
    for (const auto& r : result.rows) {
        if (!r.stable) {
            std::printf("%-24s %8.4g %12s\n", msj::to_string(r.policy).c_str(), r.load, "unstable");
            continue;
        }
        std::printf("%-24s %8.4g %12.5g %10.3g %10.4g %8.4g %6llu\n", msj::to_string(r.policy).c_str(), r.load,
                    *r.mean_T, *r.ci95_T, r.ratio_T.value_or(NAN), *r.mean_N,
                    static_cast<unsigned long long>(r.rwe_violations));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiserver-job scheduling simulator"};
    app.require_subcommand(1);

    unsigned jobs = 1;
    std::string cfg_path;
    std::string output;
    bool timing = false;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run every policy at the first load point and seed");
    run->add_option("config", cfg_path, "Experiment config file")->required();
    run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    run->add_option("-o,--output", output, "Also write the CSV rows here");

    auto* sweep = app.add_subcommand("sweep", "Run the full load sweep and write CSV");
    sweep->add_option("config", cfg_path, "Experiment config file")->required();
    sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("-o,--output", output, "CSV path (default: config 'output', else stdout)");
    sweep->add_flag("--timing", timing, "Fill the wall_seconds column");
    sweep->add_flag("-q,--quiet", quiet, "No progress lines on stderr");

    std::vector<std::string> suites;
    std::size_t cases = 0;
    std::uint64_t seed = msj::VerifyOptions{}.seed;
    bool mutant = false;
    auto* verify = app.add_subcommand("verify", "Run the property batteries");
    verify->add_option("--suite", suites, "Suite name (repeatable)")->check(CLI::IsMember(msj::suite_names()));
    verify->add_option("--cases", cases, "Instances per suite")->check(CLI::PositiveNumber);
    verify->add_option("--seed", seed, "Generator seed");
    verify->add_flag("--mutant", mutant, "Swap in the ServerFilling mutant without descending-need placement");

    auto* dump = app.add_subcommand("rank-dump", "Write Gittins rank tables as CSV");
    dump->add_option("config", cfg_path, "Experiment config file")->required();
    dump->add_option("-o,--output", output, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run || *sweep) {
            const msj::ExperimentConfig cfg = load(cfg_path);
            msj::SweepOptions opts;
            opts.jobs = jobs;
            opts.first_point_only = static_cast<bool>(*run);
            if (*sweep && !quiet) opts.progress = &std::cerr;
            const msj::SweepResult result = msj::run_sweep(cfg, opts);
            if (*run) {
                print_table(result);
                if (!output.empty()) write_rows(result, output, true);
            } else {
                write_rows(result, output.empty() ? cfg.output : output, timing);
            }
            return 0;
        }
        if (*dump) {
            const msj::ExperimentConfig cfg = load(cfg_path);
            const auto curves = msj::precompute_rank_curves(cfg.workload, cfg.system);
            if (output.empty() || output == "-") {
                msj::write_rank_csv(std::cout, curves);
            } else {
                std::ofstream out(output, std::ios::binary);
                if (!out) throw std::runtime_error("cannot write " + output);
                msj::write_rank_csv(out, curves);
            }
            return 0;
        }
        if (*verify) {
            msj::VerifyOptions opts;
            if (cases > 0) opts.cases = cases;
            opts.seed = seed;
            opts.mutant = mutant;
            if (suites.empty()) suites = msj::suite_names();
            bool all = true;
            std::printf("%-10s %-6s %10s %9s %9s  %s\n", "suite", "result", "cases", "failures", "seconds", "detail");
            for (const auto& name : suites) {
                const msj::SuiteResult r = msj::run_suite(name, opts);
                all = all && r.passed;
                std::printf("%-10s %-6s %10zu %9zu %9.2f  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.cases,
                            r.failures, r.seconds, r.detail.c_str());
                if (!r.counterexample.empty()) std::printf("  counterexample: %s\n", r.counterexample.c_str());
                std::fflush(stdout);
            }
            return all ? 0 : kExitVerify;
        }
    } catch (const msj::ConfigParseError& e) {
        std::cerr << "config error:\n";
        for (const auto& i : e.issues()) {
            std::cerr << "  ";
            if (i.line > 0) std::cerr << "line " << i.line << ": ";
            std::cerr << i.message << '\n';
        }
        return kExitConfig;
    } catch (const msj::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
