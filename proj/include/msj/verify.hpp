#pragma once

// Property batteries behind `msjsim verify`: randomized packing checks for
// the filling kernels, MaxWeight against exhaustive search, short engine runs
// with full cross-checks, the WINE discretization study and the bound checks.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msj/policies.hpp"

namespace msj {

struct SuiteResult {
    std::string name;
    bool passed = true;
    std::size_t cases = 0;
    std::size_t failures = 0;
    double seconds = 0.0;
    std::string detail;          ///< summary numbers
    std::string counterexample;  ///< minimized failing instance, when any
};

/// Kernel signature shared by the filling suites so that a mutant can be
/// swapped in.
using FillKernel = std::function<std::vector<std::size_t>(std::span<const Candidate>, int)>;

struct VerifyOptions {
    std::optional<std::size_t> cases;  ///< per-suite instance count override
    std::uint64_t seed = 20230401;
    bool mutant = false;  ///< packing suite uses ServerFilling without the descending-need placement
};

const std::vector<std::string>& suite_names();

/// Throws std::invalid_argument for unknown names.
SuiteResult run_suite(std::string_view name, const VerifyOptions& options = {});

/// ServerFilling with the descending-need placement removed: the prefix is
/// placed in key order. Used to demonstrate that the packing suite bites.
std::vector<std::size_t> server_filling_mutant(std::span<const Candidate> sorted, int k);

/// Packing battery: `cases` random power-of-two multisets with total need
/// >= k for each k in `ks`; passes when every selection has total need k.
SuiteResult packing_suite(std::span<const int> ks, std::size_t cases, std::uint64_t seed, const FillKernel& kernel);

/// DivisorFilling battery: random divisible multisets with at least k jobs.
SuiteResult divisor_suite(std::span<const int> ks, std::size_t cases, std::uint64_t seed);

struct WineStudy {
    double mean_error_512 = 0.0;
    double mean_error_1024 = 0.0;
    double max_error_512 = 0.0;
};

/// WINE counting identity on `snapshots` random job sets.
WineStudy wine_study(std::size_t snapshots, std::uint64_t seed);

}  // namespace msj
