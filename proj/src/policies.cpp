#include "msj/policies.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>

namespace msj {

namespace {

struct PolicyName {
    PolicyKind kind;
    std::string_view name;
};

constexpr std::array kPolicyNames{
    PolicyName{PolicyKind::ServerFillingSRPT, "ServerFillingSRPT"},
    PolicyName{PolicyKind::DivisorFillingSRPT, "DivisorFillingSRPT"},
    PolicyName{PolicyKind::ServerFillingGittins, "ServerFillingGittins"},
    PolicyName{PolicyKind::DivisorFillingGittins, "DivisorFillingGittins"},
    PolicyName{PolicyKind::ServerFillingFCFS, "ServerFilling"},
    PolicyName{PolicyKind::FCFS, "FCFS"},
    PolicyName{PolicyKind::MaxWeight, "MaxWeight"},
    PolicyName{PolicyKind::GreedySRPT, "GreedySRPT"},
    PolicyName{PolicyKind::FirstFitSRPT, "FirstFitSRPT"},
    PolicyName{PolicyKind::ResourcePooledSRPT1, "SRPT-1"},
};

int largest_prime_factor(int n) {
    int largest = 1;
    for (int f = 2; f * f <= n; ++f) {
        while (n % f == 0) {
            largest = f;
            n /= f;
        }
    }
    return n > 1 ? std::max(largest, n) : largest;
}

// Item of the DivisorFilling recursion: position in the key order plus the
// server need as scaled at the current recursion depth.
struct Item {
    std::size_t pos;
    int need;
};

std::vector<std::size_t> divisor_fill_rec(std::vector<Item> items, int k);

std::vector<std::size_t> recurse_scaled(const std::vector<Item>& subset, int factor, int k) {
    if (subset.empty()) return {};
    std::vector<Item> scaled;
    scaled.reserve(subset.size());
    for (const auto& it : subset) scaled.push_back({it.pos, it.need / factor});
    return divisor_fill_rec(std::move(scaled), k / factor);
}

std::vector<std::size_t> divisor_fill_rec(std::vector<Item> items, int k) {
    if (k <= 0 || items.empty()) return {};
    if (items.size() > static_cast<std::size_t>(k)) items.resize(static_cast<std::size_t>(k));
    const auto& m = items;

    const auto ones = static_cast<int>(std::count_if(m.begin(), m.end(), [](const Item& it) { return it.need == 1; }));

    // Case 1: at least k/6 jobs of need 1.
    if (6 * ones >= k) {
        std::vector<std::size_t> order(m.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m[a].need > m[b].need; });
        std::vector<bool> taken(m.size(), false);
        int free = k;
        for (std::size_t idx : order) {
            if (m[idx].need > free) break;
            taken[idx] = true;
            free -= m[idx].need;
        }
        for (std::size_t idx = 0; idx < m.size() && free > 0; ++idx) {
            if (!taken[idx] && m[idx].need == 1) {
                taken[idx] = true;
                --free;
            }
        }
        std::vector<std::size_t> out;
        for (std::size_t idx = 0; idx < m.size(); ++idx)
            if (taken[idx]) out.push_back(m[idx].pos);
        return out;
    }

    const int p = largest_prime_factor(k);
    if (p <= 3) {
        // Case 2: k = 2^a 3^b.
        std::vector<Item> evens;
        std::vector<Item> odds;
        for (const auto& it : m) {
            if (it.need % 2 == 0)
                evens.push_back(it);
            else if (it.need > 1)
                odds.push_back(it);
        }
        if (2 * evens.size() >= 3 * odds.size()) return recurse_scaled(evens, 2, k);
        return recurse_scaled(odds, 3, k);
    }

    // Case 3: largest prime factor p >= 5.
    std::vector<Item> multiples;
    for (const auto& it : m)
        if (it.need % p == 0) multiples.push_back(it);
    if (static_cast<long>(p) * static_cast<long>(multiples.size()) >= k) return recurse_scaled(multiples, p, k);

    std::vector<Item> rest;
    for (const auto& it : m)
        if (it.need % p != 0 && it.need > 1) rest.push_back(it);
    std::vector<std::size_t> out;
    for (int round = 0; round < p && !rest.empty(); ++round) {
        auto extracted = divisor_fill_rec(rest, k / p);
        if (extracted.empty()) break;
        std::sort(extracted.begin(), extracted.end());
        std::erase_if(rest, [&](const Item& it) { return std::binary_search(extracted.begin(), extracted.end(), it.pos); });
        out.insert(out.end(), extracted.begin(), extracted.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<JobId> ids_at(std::span<const Candidate> sorted, const std::vector<std::size_t>& positions) {
    std::vector<JobId> ids;
    ids.reserve(positions.size());
    for (auto pos : positions) ids.push_back(sorted[pos].id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

const Job& find_job(std::span<const Job> jobs, JobId id) {
    for (const auto& j : jobs)
        if (j.id == id) return j;
    throw std::logic_error("scheduled job id not in job set");
}

}  // namespace

std::string to_string(PolicyKind policy) {
    for (const auto& entry : kPolicyNames)
        if (entry.kind == policy) return std::string(entry.name);
    return "unknown";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
    for (const auto& entry : kPolicyNames)
        if (entry.name == name) return entry.kind;
    if (name == "ServerFillingFCFS") return PolicyKind::ServerFillingFCFS;
    if (name == "ResourcePooledSRPT1" || name == "SRPT1") return PolicyKind::ResourcePooledSRPT1;
    return std::nullopt;
}

OrderingKey ordering_key_for(PolicyKind policy) {
    switch (policy) {
        case PolicyKind::ServerFillingGittins:
        case PolicyKind::DivisorFillingGittins:
            return OrderingKey::GittinsRank;
        case PolicyKind::ServerFillingFCFS:
        case PolicyKind::FCFS:
            return OrderingKey::ArrivalOrder;
        default:
            return OrderingKey::RemainingSize;
    }
}

bool is_gittins(PolicyKind policy) { return ordering_key_for(policy) == OrderingKey::GittinsRank; }

bool is_filling(PolicyKind policy) {
    switch (policy) {
        case PolicyKind::ServerFillingSRPT:
        case PolicyKind::DivisorFillingSRPT:
        case PolicyKind::ServerFillingGittins:
        case PolicyKind::DivisorFillingGittins:
            return true;
        default:
            return false;
    }
}

void check_mode(PolicyKind policy, const SystemConfig& config) {
    switch (policy) {
        case PolicyKind::ServerFillingSRPT:
        case PolicyKind::ServerFillingGittins:
        case PolicyKind::ServerFillingFCFS:
            if (config.need_mode != NeedMode::PowerOfTwo)
                throw ConfigError(to_string(policy) + " requires power-of-two need mode");
            break;
        case PolicyKind::DivisorFillingSRPT:
        case PolicyKind::DivisorFillingGittins:
            if (config.need_mode != NeedMode::Divisible)
                throw ConfigError(to_string(policy) + " requires divisible need mode");
            break;
        default:
            break;
    }
}

bool ScheduleDecision::serves(JobId id) const {
    return std::binary_search(served.begin(), served.end(), ServedJob{id, 0.0},
                              [](const ServedJob& a, const ServedJob& b) { return a.id < b.id; });
}

double ScheduleDecision::total_rate() const {
    double total = 0.0;
    for (const auto& s : served) total += s.rate;
    return total;
}

namespace kernel {

std::vector<std::size_t> server_filling(std::span<const Candidate> sorted, int k) {
    for (const auto& c : sorted)
        if (!is_power_of_two(c.need)) throw ConfigError("ServerFilling: server need is not a power of two");

    std::size_t prefix = 0;
    long total = 0;
    while (prefix < sorted.size() && total < k) total += sorted[prefix++].need;
    if (total < k) {
        std::vector<std::size_t> all(sorted.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        return all;
    }

    // Descending need; ties keep key order (positions are already key-sorted).
    std::vector<std::size_t> order(prefix);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sorted[a].need > sorted[b].need; });
    std::vector<std::size_t> out;
    int free = k;
    for (std::size_t pos : order) {
        if (free == 0 || sorted[pos].need > free) break;
        out.push_back(pos);
        free -= sorted[pos].need;
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> divisor_filling(std::span<const Candidate> sorted, int k) {
    std::vector<Item> items;
    items.reserve(std::min(sorted.size(), static_cast<std::size_t>(k)));
    for (std::size_t pos = 0; pos < sorted.size() && pos < static_cast<std::size_t>(k); ++pos) {
        if (sorted[pos].need < 1 || k % sorted[pos].need != 0)
            throw ConfigError("DivisorFilling: server need does not divide k");
        items.push_back({pos, sorted[pos].need});
    }
    auto out = divisor_fill_rec(std::move(items), k);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> greedy_prefix(std::span<const Candidate> sorted, int k) {
    std::vector<std::size_t> out;
    int free = k;
    for (std::size_t pos = 0; pos < sorted.size(); ++pos) {
        if (sorted[pos].need > free) break;
        out.push_back(pos);
        free -= sorted[pos].need;
    }
    return out;
}

std::vector<std::size_t> first_fit(std::span<const Candidate> sorted, int k) {
    std::vector<std::size_t> out;
    int free = k;
    for (std::size_t pos = 0; pos < sorted.size() && free > 0; ++pos) {
        if (sorted[pos].need > free) continue;
        out.push_back(pos);
        free -= sorted[pos].need;
    }
    return out;
}

std::vector<JobId> max_weight(std::span<const NeedGroup> groups, int k) {
    const std::size_t g_count = groups.size();
    const auto cap = static_cast<std::size_t>(k);
    // best[g][s]: max weight using groups [0, g) within s servers.
    std::vector<std::vector<std::int64_t>> best(g_count + 1, std::vector<std::int64_t>(cap + 1, 0));
    auto max_take = [&](const NeedGroup& g) {
        return std::min<std::size_t>(g.least.size(), g.need > 0 ? cap / static_cast<std::size_t>(g.need) : 0);
    };
    for (std::size_t g = 0; g < g_count; ++g) {
        const auto& grp = groups[g];
        const auto need = static_cast<std::size_t>(grp.need);
        const auto weight = static_cast<std::int64_t>(grp.count);
        const std::size_t limit = max_take(grp);
        for (std::size_t s = 0; s <= cap; ++s) {
            std::int64_t v = best[g][s];
            for (std::size_t c = 1; c <= limit && c * need <= s; ++c)
                v = std::max(v, best[g][s - c * need] + static_cast<std::int64_t>(c) * weight);
            best[g + 1][s] = v;
        }
    }
    const std::int64_t optimum = best[g_count][cap];

    // Walk every optimal take-vector and keep the lexicographically smallest id set.
    std::optional<std::vector<JobId>> chosen;
    std::vector<std::size_t> takes(g_count, 0);
    std::function<void(std::size_t, std::size_t, std::int64_t)> walk = [&](std::size_t g, std::size_t s,
                                                                          std::int64_t target) {
        if (g == 0) {
            if (target != 0) return;
            std::vector<JobId> ids;
            for (std::size_t i = 0; i < g_count; ++i)
                for (std::size_t c = 0; c < takes[i]; ++c) ids.push_back(groups[i].least[c].id);
            std::sort(ids.begin(), ids.end());
            if (!chosen || ids < *chosen) chosen = std::move(ids);
            return;
        }
        const auto& grp = groups[g - 1];
        const auto need = static_cast<std::size_t>(grp.need);
        const auto weight = static_cast<std::int64_t>(grp.count);
        const std::size_t limit = max_take(grp);
        for (std::size_t c = 0; c <= limit && c * need <= s; ++c) {
            const std::int64_t rest = target - static_cast<std::int64_t>(c) * weight;
            if (best[g - 1][s - c * need] != rest) continue;
            takes[g - 1] = c;
            walk(g - 1, s - c * need, rest);
        }
        takes[g - 1] = 0;
    };
    walk(g_count, cap, optimum);
    return chosen.value_or(std::vector<JobId>{});
}

}  // namespace kernel

std::vector<Candidate> make_candidates(std::span<const Job> jobs, OrderingKey key, const RankMap* ranks) {
    std::vector<Candidate> out;
    out.reserve(jobs.size());
    for (const auto& j : jobs) {
        double value = 0.0;
        switch (key) {
            case OrderingKey::RemainingSize:
                value = j.remaining_size;
                break;
            case OrderingKey::ArrivalOrder:
                value = static_cast<double>(j.id);
                break;
            case OrderingKey::GittinsRank: {
                if (ranks == nullptr) throw std::invalid_argument("Gittins ordering requires a rank map");
                auto it = ranks->find(j.id);
                if (it == ranks->end()) throw std::invalid_argument("rank map is missing a job");
                value = it->second;
                break;
            }
        }
        out.push_back({j.id, j.server_need, value, j.remaining_size});
    }
    std::sort(out.begin(), out.end(), key_less);
    return out;
}

std::vector<JobId> select_serverfilling(std::span<const Job> jobs, OrderingKey key, int k, const RankMap* ranks) {
    const auto sorted = make_candidates(jobs, key, ranks);
    return ids_at(sorted, kernel::server_filling(sorted, k));
}

std::vector<JobId> select_divisorfilling(std::span<const Job> jobs, OrderingKey key, int k, const RankMap* ranks) {
    const auto sorted = make_candidates(jobs, key, ranks);
    return ids_at(sorted, kernel::divisor_filling(sorted, k));
}

std::vector<JobId> select_maxweight(std::span<const Job> jobs, int k) {
    std::map<int, kernel::NeedGroup> by_need;
    for (const auto& c : make_candidates(jobs, OrderingKey::RemainingSize)) {
        if (c.need > k) continue;
        auto& grp = by_need[c.need];
        grp.need = c.need;
        ++grp.count;
        if (grp.least.size() < static_cast<std::size_t>(k / c.need)) grp.least.push_back(c);
    }
    std::vector<kernel::NeedGroup> groups;
    for (auto& [need, grp] : by_need) groups.push_back(std::move(grp));
    return kernel::max_weight(groups, k);
}

std::vector<JobId> select_greedy_srpt(std::span<const Job> jobs, int k) {
    const auto sorted = make_candidates(jobs, OrderingKey::RemainingSize);
    return ids_at(sorted, kernel::greedy_prefix(sorted, k));
}

std::vector<JobId> select_firstfit_srpt(std::span<const Job> jobs, int k) {
    const auto sorted = make_candidates(jobs, OrderingKey::RemainingSize);
    return ids_at(sorted, kernel::first_fit(sorted, k));
}

ScheduleDecision make_decision(PolicyKind policy, std::span<const Job> jobs, std::vector<JobId> ids, int k) {
    std::sort(ids.begin(), ids.end());
    ScheduleDecision d;
    d.served.reserve(ids.size());
    for (JobId id : ids) {
        const double rate = policy == PolicyKind::ResourcePooledSRPT1
                                ? 1.0
                                : static_cast<double>(find_job(jobs, id).server_need) / static_cast<double>(k);
        d.served.push_back({id, rate});
    }
    return d;
}

ScheduleDecision schedule(PolicyKind policy, std::span<const Job> jobs, const SystemConfig& config,
                          const RankMap* ranks) {
    check_mode(policy, config);
    if (is_gittins(policy) != (ranks != nullptr))
        throw std::invalid_argument("rank map must be supplied exactly for Gittins policies");
    const int k = config.k;
    const OrderingKey key = ordering_key_for(policy);
    std::vector<JobId> ids;
    switch (policy) {
        case PolicyKind::ServerFillingSRPT:
        case PolicyKind::ServerFillingGittins:
        case PolicyKind::ServerFillingFCFS:
            ids = select_serverfilling(jobs, key, k, ranks);
            break;
        case PolicyKind::DivisorFillingSRPT:
        case PolicyKind::DivisorFillingGittins:
            ids = select_divisorfilling(jobs, key, k, ranks);
            break;
        case PolicyKind::FCFS: {
            const auto sorted = make_candidates(jobs, key);
            ids = ids_at(sorted, kernel::greedy_prefix(sorted, k));
            break;
        }
        case PolicyKind::MaxWeight:
            ids = select_maxweight(jobs, k);
            break;
        case PolicyKind::GreedySRPT:
            ids = select_greedy_srpt(jobs, k);
            break;
        case PolicyKind::FirstFitSRPT:
            ids = select_firstfit_srpt(jobs, k);
            break;
        case PolicyKind::ResourcePooledSRPT1: {
            const auto sorted = make_candidates(jobs, key);
            if (!sorted.empty()) ids.push_back(sorted.front().id);
            break;
        }
    }
    return make_decision(policy, jobs, std::move(ids), k);
}

}  // namespace msj
