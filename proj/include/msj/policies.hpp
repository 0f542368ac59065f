#pragma once

// Scheduling kernels for the multiserver-job system. Every kernel is a pure
// function of the job list it is given: it decides which jobs occupy
// servers, never mutates jobs, and breaks every tie by ascending job id.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "msj/workload.hpp"

namespace msj {

enum class OrderingKey { RemainingSize, ArrivalOrder, GittinsRank };

enum class PolicyKind {
    ServerFillingSRPT,
    DivisorFillingSRPT,
    ServerFillingGittins,
    DivisorFillingGittins,
    ServerFillingFCFS,
    FCFS,
    MaxWeight,
    GreedySRPT,
    FirstFitSRPT,
    ResourcePooledSRPT1,
};

std::string to_string(PolicyKind policy);
/// Accepts the canonical names plus the aliases "ServerFilling" and "SRPT-1".
std::optional<PolicyKind> parse_policy(std::string_view name);
OrderingKey ordering_key_for(PolicyKind policy);
bool is_gittins(PolicyKind policy);
/// ServerFilling* and DivisorFilling* variants: the relevant-work-efficient family.
bool is_filling(PolicyKind policy);
/// Throws ConfigError when the policy cannot run under the config's need mode.
void check_mode(PolicyKind policy, const SystemConfig& config);

using RankMap = std::unordered_map<JobId, double>;

/// A job as seen by a kernel. `key` is the ordering key value.
struct Candidate {
    JobId id = 0;
    int need = 1;
    double key = 0.0;
    double remaining = 0.0;
};

/// Strict (key, id) order used by every kernel.
inline bool key_less(const Candidate& a, const Candidate& b) {
    return a.key < b.key || (a.key == b.key && a.id < b.id);
}

struct ServedJob {
    JobId id = 0;
    double rate = 0.0;
    friend bool operator==(const ServedJob&, const ServedJob&) = default;
};

struct ScheduleDecision {
    std::vector<ServedJob> served;  ///< ascending id

    bool serves(JobId id) const;
    double total_rate() const;
    friend bool operator==(const ScheduleDecision&, const ScheduleDecision&) = default;
};

namespace kernel {

// Kernels over candidates already sorted by key_less. Returned values are
// positions into the input span.

/// ServerFilling: smallest key-prefix with total need >= k, then placement in
/// descending need until the next job does not fit. Requires power-of-two needs.
std::vector<std::size_t> server_filling(std::span<const Candidate> sorted, int k);

/// DivisorFilling recursion (all needs divide k).
std::vector<std::size_t> divisor_filling(std::span<const Candidate> sorted, int k);

/// Admit in key order, stop at the first job that does not fit.
std::vector<std::size_t> greedy_prefix(std::span<const Candidate> sorted, int k);

/// Admit in key order, skipping jobs that do not fit.
std::vector<std::size_t> first_fit(std::span<const Candidate> sorted, int k);

/// All jobs sharing one server need. `least` holds (up to k / need of) the
/// class's jobs in ascending (remaining, id) order; `count` is the class size.
struct NeedGroup {
    int need = 1;
    std::size_t count = 0;
    std::vector<Candidate> least;
};

/// Exact MaxWeight by dynamic programming over server count. Returns ids.
std::vector<JobId> max_weight(std::span<const NeedGroup> groups, int k);

}  // namespace kernel

std::vector<Candidate> make_candidates(std::span<const Job> jobs, OrderingKey key, const RankMap* ranks = nullptr);

// Set-returning operations; results are ascending job ids.
std::vector<JobId> select_serverfilling(std::span<const Job> jobs, OrderingKey key, int k,
                                        const RankMap* ranks = nullptr);
std::vector<JobId> select_divisorfilling(std::span<const Job> jobs, OrderingKey key, int k,
                                         const RankMap* ranks = nullptr);
std::vector<JobId> select_maxweight(std::span<const Job> jobs, int k);
std::vector<JobId> select_greedy_srpt(std::span<const Job> jobs, int k);
std::vector<JobId> select_firstfit_srpt(std::span<const Job> jobs, int k);

/// Policy dispatch. `ranks` must be supplied exactly for the Gittins variants.
ScheduleDecision schedule(PolicyKind policy, std::span<const Job> jobs, const SystemConfig& config,
                          const RankMap* ranks = nullptr);

/// Decision from selected ids: rate need/k per job, or rate 1 for the
/// resource-pooled baseline.
ScheduleDecision make_decision(PolicyKind policy, std::span<const Job> jobs, std::vector<JobId> ids, int k);

}  // namespace msj
