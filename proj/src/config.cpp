#include "msj/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace msj {

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
    std::ostringstream os;
    for (std::size_t i = 0; i < issues.size(); ++i) {
        if (i) os << '\n';
        if (issues[i].line > 0) os << "line " << issues[i].line << ": ";
        os << issues[i].message;
    }
    return os.str();
}

struct Value {
    enum class Type { Number, String, Bool, Array };
    Type type = Type::Number;
    double number = 0.0;
    std::string text;
    bool flag = false;
    std::vector<Value> items;
};

struct Entry {
    std::string key;
    Value value;
    int line = 0;
    bool used = false;
};

struct Table {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::optional<double> parse_number(std::string_view s) {
    std::string digits;
    for (char c : s)
        if (c != '_') digits.push_back(c);
    if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
    double v = 0.0;
    const auto* end = digits.data() + digits.size();
    const auto [ptr, ec] = std::from_chars(digits.data(), end, v);
    if (ec != std::errc() || ptr != end || digits.empty()) return std::nullopt;
    return v;
}

std::optional<Value> parse_scalar(std::string_view s, std::string& error) {
    s = trim(s);
    Value v;
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        v.type = Value::Type::String;
        v.text = std::string(s.substr(1, s.size() - 2));
        if (v.text.find('"') != std::string::npos) {
            error = "unexpected quote inside string";
            return std::nullopt;
        }
        return v;
    }
    if (s == "true" || s == "false") {
        v.type = Value::Type::Bool;
        v.flag = s == "true";
        return v;
    }
    if (auto n = parse_number(s)) {
        v.number = *n;
        return v;
    }
    error = "cannot parse value '" + std::string(s) + "'";
    return std::nullopt;
}

std::optional<Value> parse_value(std::string_view s, std::string& error) {
    s = trim(s);
    if (s.empty()) {
        error = "missing value";
        return std::nullopt;
    }
    if (s.front() != '[') return parse_scalar(s, error);
    if (s.back() != ']') {
        error = "array must close on the same line";
        return std::nullopt;
    }
    Value arr;
    arr.type = Value::Type::Array;
    std::string_view body = trim(s.substr(1, s.size() - 2));
    while (!body.empty()) {
        std::size_t cut = 0;
        bool quoted = false;
        while (cut < body.size() && (quoted || body[cut] != ',')) {
            if (body[cut] == '"') quoted = !quoted;
            ++cut;
        }
        const std::string_view item = trim(body.substr(0, cut));
        if (!item.empty()) {
            auto v = parse_scalar(item, error);
            if (!v) return std::nullopt;
            arr.items.push_back(std::move(*v));
        } else if (cut < body.size()) {
            error = "empty array element";
            return std::nullopt;
        }
        body = cut < body.size() ? trim(body.substr(cut + 1)) : std::string_view{};
    }
    return arr;
}

std::string normalized(std::string_view s) {
    std::string out;
    for (char c : s)
        if (c != '_' && c != '-' && c != ' ') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

class Reader {
public:
    explicit Reader(std::vector<ConfigIssue>& issues) : issues_(issues) {}

    void issue(int line, std::string message) { issues_.push_back({line, std::move(message)}); }

    Entry* find(Table& t, std::string_view key) {
        for (auto& e : t.entries)
            if (e.key == key) {
                e.used = true;
                return &e;
            }
        return nullptr;
    }

    std::optional<double> number(Table& t, std::string_view key) {
        Entry* e = find(t, key);
        if (!e) return std::nullopt;
        if (e->value.type != Value::Type::Number) {
            issue(e->line, "'" + e->key + "' must be a number");
            return std::nullopt;
        }
        return e->value.number;
    }

    std::optional<std::int64_t> integer(Table& t, std::string_view key) {
        Entry* e = find(t, key);
        if (!e) return std::nullopt;
        const double v = e->value.number;
        if (e->value.type != Value::Type::Number || v != std::floor(v) || std::abs(v) > 9.0e15) {
            issue(e->line, "'" + e->key + "' must be an integer");
            return std::nullopt;
        }
        return static_cast<std::int64_t>(v);
    }

    std::optional<std::string> string(Table& t, std::string_view key) {
        Entry* e = find(t, key);
        if (!e) return std::nullopt;
        if (e->value.type != Value::Type::String) {
            issue(e->line, "'" + e->key + "' must be a quoted string");
            return std::nullopt;
        }
        return e->value.text;
    }

    std::optional<std::vector<double>> numbers(Table& t, std::string_view key) {
        Entry* e = find(t, key);
        if (!e) return std::nullopt;
        if (e->value.type != Value::Type::Array) {
            issue(e->line, "'" + e->key + "' must be an array of numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        for (const auto& v : e->value.items) {
            if (v.type != Value::Type::Number) {
                issue(e->line, "'" + e->key + "' must be an array of numbers");
                return std::nullopt;
            }
            out.push_back(v.number);
        }
        return out;
    }

    std::optional<std::vector<std::string>> strings(Table& t, std::string_view key) {
        Entry* e = find(t, key);
        if (!e) return std::nullopt;
        std::vector<std::string> out;
        if (e->value.type == Value::Type::String) return std::vector<std::string>{e->value.text};
        if (e->value.type == Value::Type::Array) {
            for (const auto& v : e->value.items) {
                if (v.type != Value::Type::String) break;
                out.push_back(v.text);
            }
            if (out.size() == e->value.items.size()) return out;
        }
        issue(e->line, "'" + e->key + "' must be an array of strings");
        return std::nullopt;
    }

    int line_of(Table& t, std::string_view key) {
        for (auto& e : t.entries)
            if (e.key == key) return e.line;
        return t.line;
    }

    void report_unused(Table& t) {
        for (auto& e : t.entries)
            if (!e.used) issue(e.line, "unknown key '" + e.key + "' in [" + t.name + "]");
    }

private:
    std::vector<ConfigIssue>& issues_;
};

std::vector<Table> tokenize(std::string_view text, std::vector<ConfigIssue>& issues) {
    std::vector<Table> tables;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::string_view line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line.front() == '[') {
            const bool array_table = line.starts_with("[[");
            const std::size_t open = array_table ? 2 : 1;
            if (!line.ends_with(array_table ? "]]" : "]") || line.size() <= 2 * open) {
                issues.push_back({line_no, "malformed section header"});
                continue;
            }
            const std::string name(trim(line.substr(open, line.size() - 2 * open)));
            static const std::set<std::string> singletons{"system", "workload", "run"};
            if (array_table && name != "class") {
                issues.push_back({line_no, "unknown array section [[" + name + "]]"});
            } else if (!array_table && !singletons.count(name)) {
                issues.push_back({line_no, name == "class" ? "job classes use [[class]]" : "unknown section [" + name + "]"});
            } else if (!array_table &&
                       std::any_of(tables.begin(), tables.end(), [&](const Table& t) { return t.name == name; })) {
                issues.push_back({line_no, "duplicate section [" + name + "]"});
            }
            tables.push_back({name, line_no, {}});
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            issues.push_back({line_no, "expected 'key = value'"});
            continue;
        }
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) {
            issues.push_back({line_no, "missing key before '='"});
            continue;
        }
        if (tables.empty()) {
            issues.push_back({line_no, "key '" + key + "' appears before any section"});
            continue;
        }
        std::string error;
        auto value = parse_value(line.substr(eq + 1), error);
        if (!value) {
            issues.push_back({line_no, key + ": " + error});
            continue;
        }
        auto& entries = tables.back().entries;
        if (std::any_of(entries.begin(), entries.end(), [&](const Entry& e) { return e.key == key; })) {
            issues.push_back({line_no, "duplicate key '" + key + "'"});
            continue;
        }
        entries.push_back({key, std::move(*value), line_no, false});
    }
    return tables;
}

std::optional<DurationDist> read_duration(Reader& rd, Table& t) {
    const auto type = rd.string(t, "duration");
    if (!type) {
        rd.issue(t.line, "[[class]] is missing 'duration'");
        return std::nullopt;
    }
    const int line = rd.line_of(t, "duration");
    const std::string kind = normalized(*type);
    auto need = [&](std::optional<double> v, const char* key) {
        if (!v) rd.issue(line, std::string(*type) + " duration requires '" + key + "'");
        return v.has_value();
    };
    if (kind == "exponential") {
        const auto m = rd.number(t, "mean");
        if (!need(m, "mean")) return std::nullopt;
        return Exponential{*m};
    }
    if (kind == "deterministic") {
        const auto v = rd.number(t, "value");
        if (!need(v, "value")) return std::nullopt;
        return Deterministic{*v};
    }
    if (kind == "hyperexponential") {
        auto probs = rd.numbers(t, "branch_probs");
        auto means = rd.numbers(t, "branch_means");
        if (probs || means) {
            if (!probs || !means) {
                rd.issue(line, "hyperexponential branches need both 'branch_probs' and 'branch_means'");
                return std::nullopt;
            }
            return Hyperexponential{*probs, *means};
        }
        const auto m = rd.number(t, "mean");
        const auto c2 = rd.number(t, "c2");
        if (!need(m, "mean") || !need(c2, "c2")) return std::nullopt;
        try {
            return Hyperexponential::balanced(*m, *c2);
        } catch (const ConfigError& e) {
            rd.issue(line, e.what());
            return std::nullopt;
        }
    }
    if (kind == "discrete" || kind == "discreteempirical") {
        auto values = rd.numbers(t, "values");
        auto probs = rd.numbers(t, "probs");
        if (!values || !probs) {
            rd.issue(line, "discrete duration requires 'values' and 'probs'");
            return std::nullopt;
        }
        return DiscreteEmpirical{*values, *probs};
    }
    rd.issue(line, "unknown duration type '" + *type + "'");
    return std::nullopt;
}

}  // namespace

ConfigParseError::ConfigParseError(std::vector<ConfigIssue> issues)
    : ConfigError(join_issues(issues)), issues_(std::move(issues)) {}

ExperimentConfig parse_config(std::string_view text) {
    std::vector<ConfigIssue> issues;
    std::vector<Table> tables = tokenize(text, issues);
    Reader rd(issues);
    ExperimentConfig cfg;

    auto section = [&](const char* name) -> Table* {
        for (auto& t : tables)
            if (t.name == name) return &t;
        issues.push_back({0, std::string("missing section [") + name + "]"});
        return nullptr;
    };

    bool system_ok = false;
    if (Table* sys = section("system")) {
        const auto k = rd.integer(*sys, "k");
        if (!k) {
            if (!rd.find(*sys, "k")) rd.issue(sys->line, "[system] requires 'k'");
        } else if (*k < 1) {
            rd.issue(rd.line_of(*sys, "k"), "k must be a positive integer");
        } else {
            cfg.system.k = static_cast<int>(*k);
            system_ok = true;
        }
        if (const auto mode = rd.string(*sys, "need_mode")) {
            const std::string m = normalized(*mode);
            if (m == "poweroftwo") {
                cfg.system.need_mode = NeedMode::PowerOfTwo;
            } else if (m == "divisible") {
                cfg.system.need_mode = NeedMode::Divisible;
            } else {
                rd.issue(rd.line_of(*sys, "need_mode"), "need_mode must be \"power_of_two\" or \"divisible\"");
                system_ok = false;
            }
        }
        if (system_ok && cfg.system.need_mode == NeedMode::PowerOfTwo && !is_power_of_two(cfg.system.k)) {
            rd.issue(rd.line_of(*sys, "k"), "power_of_two mode requires k to be a power of two");
            system_ok = false;
        }
        rd.report_unused(*sys);
    }

    double prob_total = 0.0;
    bool classes_ok = true;
    for (auto& t : tables) {
        if (t.name != "class") continue;
        JobClass jc;
        const auto need = rd.integer(t, "need");
        const auto prob = rd.number(t, "probability");
        if (!need) {
            classes_ok = false;
            if (!rd.find(t, "need")) rd.issue(t.line, "[[class]] is missing 'need'");
        } else {
            jc.server_need = static_cast<int>(*need);
            const int line = rd.line_of(t, "need");
            if (system_ok) {
                const int k = cfg.system.k;
                if (*need < 1 || *need > k) {
                    rd.issue(line, "need " + std::to_string(*need) + " must lie in [1, k]");
                    classes_ok = false;
                } else if (cfg.system.need_mode == NeedMode::PowerOfTwo && !is_power_of_two(jc.server_need)) {
                    rd.issue(line, "need " + std::to_string(*need) + " is not a power of two");
                    classes_ok = false;
                } else if (cfg.system.need_mode == NeedMode::Divisible && k % jc.server_need != 0) {
                    rd.issue(line, "need " + std::to_string(*need) + " does not divide k = " + std::to_string(k));
                    classes_ok = false;
                }
            }
        }
        if (!prob) {
            classes_ok = false;
            if (!rd.find(t, "probability")) rd.issue(t.line, "[[class]] is missing 'probability'");
        } else if (!(*prob > 0.0 && *prob <= 1.0)) {
            rd.issue(rd.line_of(t, "probability"), "probability must lie in (0, 1]");
            classes_ok = false;
        } else {
            jc.probability = *prob;
            prob_total += *prob;
        }
        if (auto d = read_duration(rd, t)) {
            try {
                validate(*d);
                jc.duration = std::move(*d);
            } catch (const ConfigError& e) {
                rd.issue(rd.line_of(t, "duration"), e.what());
                classes_ok = false;
            }
        } else {
            classes_ok = false;
        }
        rd.report_unused(t);
        cfg.workload.classes.push_back(std::move(jc));
    }
    if (cfg.workload.classes.empty()) {
        issues.push_back({0, "at least one [[class]] is required"});
        classes_ok = false;
    } else if (classes_ok && std::abs(prob_total - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "class probabilities sum to " << prob_total << ", expected 1";
        issues.push_back({0, os.str()});
        classes_ok = false;
    }

    if (Table* wl = section("workload")) {
        const auto loads = rd.numbers(*wl, "loads");
        const auto single = rd.number(*wl, "load");
        const auto rate = rd.number(*wl, "arrival_rate");
        const int given = (loads ? 1 : 0) + (single ? 1 : 0) + (rate ? 1 : 0);
        if (given != 1) {
            rd.issue(wl->line, "[workload] needs exactly one of 'loads', 'load' or 'arrival_rate'");
        } else if (system_ok && classes_ok) {
            const double es = mean_size(cfg.workload, cfg.system);
            if (rate) {
                if (!(*rate > 0.0)) rd.issue(rd.line_of(*wl, "arrival_rate"), "arrival_rate must be positive");
                else cfg.load_points.push_back({*rate * es, *rate});
            } else {
                const std::vector<double> list = loads ? *loads : std::vector<double>{*single};
                const int line = rd.line_of(*wl, loads ? "loads" : "load");
                if (list.empty()) rd.issue(line, "'loads' must not be empty");
                for (double rho : list) {
                    if (!(rho > 0.0 && rho < 1.0)) {
                        std::ostringstream os;
                        os << "load " << rho << " must lie in (0, 1)";
                        rd.issue(line, os.str());
                        continue;
                    }
                    cfg.load_points.push_back({rho, rho / es});
                }
            }
        }
        rd.report_unused(*wl);
    }

    if (Table* run = section("run")) {
        if (const auto names = rd.strings(*run, "policies")) {
            const int line = rd.line_of(*run, "policies");
            for (const auto& n : *names) {
                const auto p = parse_policy(n);
                if (!p) {
                    rd.issue(line, "unknown policy '" + n + "'");
                    continue;
                }
                if (std::find(cfg.policies.begin(), cfg.policies.end(), *p) != cfg.policies.end()) {
                    rd.issue(line, "policy '" + n + "' listed twice");
                    continue;
                }
                if (system_ok) {
                    try {
                        check_mode(*p, cfg.system);
                    } catch (const std::exception& e) {
                        rd.issue(line, e.what());
                        continue;
                    }
                }
                cfg.policies.push_back(*p);
            }
            if (names->empty()) rd.issue(line, "'policies' must not be empty");
        } else if (!rd.find(*run, "policies")) {
            rd.issue(run->line, "[run] requires 'policies'");
        }
        if (const auto n = rd.integer(*run, "n_arrivals")) {
            if (*n < 10'000) rd.issue(rd.line_of(*run, "n_arrivals"), "n_arrivals must be at least 10000");
            else cfg.n_arrivals = static_cast<std::size_t>(*n);
        }
        if (const auto w = rd.number(*run, "warmup_fraction")) {
            if (!(*w >= 0.0 && *w <= 0.5)) rd.issue(rd.line_of(*run, "warmup_fraction"), "warmup_fraction must lie in [0, 0.5]");
            else cfg.warmup_fraction = *w;
        }
        const auto seeds = rd.numbers(*run, "seeds");
        const auto base = rd.integer(*run, "seed_base");
        const auto reps = rd.integer(*run, "replications");
        if (seeds && (base || reps)) {
            rd.issue(rd.line_of(*run, "seeds"), "give either 'seeds' or 'seed_base' with 'replications', not both");
        } else if (seeds) {
            for (double s : *seeds) {
                if (s < 0.0 || s != std::floor(s)) {
                    rd.issue(rd.line_of(*run, "seeds"), "seeds must be non-negative integers");
                    break;
                }
                cfg.seeds.push_back(static_cast<std::uint64_t>(s));
            }
            if (seeds->empty()) rd.issue(rd.line_of(*run, "seeds"), "'seeds' must not be empty");
        } else {
            const std::int64_t b = base.value_or(1);
            const std::int64_t r = reps.value_or(1);
            if (b < 0) rd.issue(rd.line_of(*run, "seed_base"), "seed_base must be non-negative");
            if (r < 1) rd.issue(rd.line_of(*run, "replications"), "replications must be at least 1");
            for (std::int64_t i = 0; b >= 0 && i < r; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(b + i));
        }
        if (const auto g = rd.integer(*run, "r_grid_points")) {
            if (*g != 0 && *g < 2) rd.issue(rd.line_of(*run, "r_grid_points"), "r_grid_points must be 0 or at least 2");
            else cfg.r_grid_points = static_cast<std::size_t>(*g);
        }
        if (const auto b = rd.integer(*run, "batches")) {
            if (*b < 2) rd.issue(rd.line_of(*run, "batches"), "batches must be at least 2");
            else cfg.batches = static_cast<std::size_t>(*b);
        }
        if (const auto out = rd.string(*run, "output")) cfg.output = *out;
        rd.report_unused(*run);
    }

    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(),
                         [](const ConfigIssue& a, const ConfigIssue& b) { return a.line < b.line; });
        throw ConfigParseError(std::move(issues));
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigParseError({{0, "cannot open " + path.string()}});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void override_seed_base(ExperimentConfig& config, std::uint64_t base) {
    const std::size_t n = std::max<std::size_t>(config.seeds.size(), 1);
    config.seeds.clear();
    for (std::size_t i = 0; i < n; ++i) config.seeds.push_back(base + i);
}

}  // namespace msj
