#include "paritail/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "paritail/dynamics.hpp"
#include "paritail/equilibrium.hpp"
#include "paritail/errors.hpp"
#include "paritail/metrics.hpp"
#include "paritail/polya.hpp"
#include "paritail/rewards.hpp"
#include "paritail/rng.hpp"
#include "paritail/version.hpp"

namespace paritail {

namespace {

using json = nlohmann::json;

// Shortest text that round-trips the double exactly; used for every CSV
// cell and rendered config value so outputs are byte-stable.
std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool parse_int(std::string_view text, std::int64_t& out) {
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

bool parse_real(std::string_view text, double& out) {
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size() &&
           std::isfinite(out);
}

enum class KeyType { Int, Real, Str, List };

using Check = std::function<std::optional<std::string>(const ScenarioValue&)>;

struct KeySpec {
    std::string_view key;
    KeyType type;
    std::string_view default_text;  // ignored when required
    bool required = false;
    Check check = nullptr;
};

Check int_at_least(std::int64_t lo) {
    return [lo](const ScenarioValue& v) -> std::optional<std::string> {
        if (std::get<std::int64_t>(v) < lo)
            return "must be >= " + std::to_string(lo);
        return std::nullopt;
    };
}

Check real_in(double lo, double hi, bool lo_open, bool hi_open) {
    return [=](const ScenarioValue& v) -> std::optional<std::string> {
        double x = std::get<double>(v);
        bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
        if (!ok)
            return "out of " + std::string(lo_open ? "(" : "[") + fmt_double(lo) +
                   "," + fmt_double(hi) + (hi_open ? ")" : "]");
        return std::nullopt;
    };
}

Check real_positive() {
    return [](const ScenarioValue& v) -> std::optional<std::string> {
        if (!(std::get<double>(v) > 0.0)) return "must be positive";
        return std::nullopt;
    };
}

Check one_of(std::vector<std::string> options) {
    return [opts = std::move(options)](
               const ScenarioValue& v) -> std::optional<std::string> {
        const auto& s = std::get<std::string>(v);
        if (std::find(opts.begin(), opts.end(), s) != opts.end())
            return std::nullopt;
        std::string msg = "must be one of {";
        for (std::size_t i = 0; i < opts.size(); ++i)
            msg += (i ? ", " : "") + opts[i];
        return msg + "}";
    };
}

Check list_positive() {
    return [](const ScenarioValue& v) -> std::optional<std::string> {
        for (double x : std::get<std::vector<double>>(v))
            if (!(x > 0.0)) return "entries must be positive";
        return std::nullopt;
    };
}

const double kInf = std::numeric_limits<double>::infinity();

std::vector<KeySpec> schema_for(Mode mode) {
    std::vector<KeySpec> keys = {
        {"name", KeyType::Str, ""},
        {"seed", KeyType::Int, "0", false, int_at_least(0)},
    };
    auto solver_keys = [&keys] {
        keys.push_back({"tol", KeyType::Real, "1e-8", false, real_positive()});
        keys.push_back({"max_rounds", KeyType::Int, "500", false, int_at_least(1)});
        keys.push_back({"grid", KeyType::Int, "21", false, int_at_least(2)});
    };
    auto demand_keys = [&keys](std::string_view m, std::string_view n,
                               std::string_view exponent, std::string_view rate) {
        keys.push_back({"m", KeyType::Int, m, false, int_at_least(1)});
        keys.push_back({"n", KeyType::Int, n, false, int_at_least(1)});
        keys.push_back({"zipf_exponent", KeyType::Real, exponent, false,
                        real_in(0.0, kInf, false, true)});
        keys.push_back({"total_rate", KeyType::Real, rate, false, real_positive()});
    };
    auto market_keys = [&keys](std::string_view noise, std::string_view move) {
        keys.push_back({"horizon", KeyType::Real, "50", false, real_positive()});
        keys.push_back(
            {"broadcast_interval", KeyType::Real, "0.1", false, real_positive()});
        keys.push_back({"reallocation_rate", KeyType::Real, "1", false,
                        real_in(0.0, kInf, false, true)});
        keys.push_back({"move_fraction", KeyType::Real, move, false,
                        real_in(0.0, 1.0, true, false)});
        keys.push_back({"delta", KeyType::Real, "1", false, real_positive()});
        keys.push_back({"belief_noise", KeyType::Real, noise, false,
                        real_in(0.0, 1.0, false, true)});
    };

    switch (mode) {
        case Mode::Equilibrium:
            demand_keys("2", "2", "1", "1");
            keys.push_back({"belief_noise", KeyType::Real, "0", false,
                            real_in(0.0, 1.0, false, true)});
            solver_keys();
            break;
        case Mode::Simulate:
            demand_keys("10", "2", "0", "20");
            market_keys("0", "1");
            keys.push_back({"policy", KeyType::Str, "greedy", false,
                            one_of({"greedy", "lazy", "imitator", "mix"})});
            keys.push_back({"greedy_fraction", KeyType::Real, "1", false,
                            real_in(0.0, 1.0, false, false)});
            keys.push_back({"imitator_fraction", KeyType::Real, "0", false,
                            real_in(0.0, 1.0, false, false)});
            keys.push_back({"init", KeyType::Str, "uniform", false,
                            one_of({"uniform", "equilibrium"})});
            solver_keys();
            break;
        case Mode::Bootstrap:
            keys.push_back(
                {"p", KeyType::Real, "", true, real_in(0.0, 1.0, true, false)});
            keys.push_back({"pi0", KeyType::Real, "", true, real_positive()});
            keys.push_back({"dt", KeyType::Real, "0.0001", false, real_positive()});
            break;
        case Mode::Polya:
            keys.push_back(
                {"alpha", KeyType::Real, "", true, real_in(0.0, 1.0, false, false)});
            keys.push_back(
                {"p", KeyType::Real, "", true, real_in(0.0, 1.0, true, true)});
            keys.push_back({"arrivals", KeyType::Int, "10000", false, int_at_least(1)});
            keys.push_back({"runs", KeyType::Int, "100", false, int_at_least(1)});
            keys.push_back({"alphas", KeyType::List, "", false, list_positive()});
            break;
        case Mode::Metrics:
            demand_keys("50", "50", "1", "20");
            market_keys("0.5", "0.3");
            keys.push_back({"bins", KeyType::Int, "10", false, int_at_least(1)});
            solver_keys();
            break;
    }
    return keys;
}

std::optional<ScenarioValue> parse_value(KeyType type, std::string_view text) {
    switch (type) {
        case KeyType::Int: {
            std::int64_t v;
            if (!parse_int(text, v)) return std::nullopt;
            return ScenarioValue{v};
        }
        case KeyType::Real: {
            double v;
            if (!parse_real(text, v)) return std::nullopt;
            return ScenarioValue{v};
        }
        case KeyType::Str:
            return ScenarioValue{std::string(text)};
        case KeyType::List: {
            std::vector<double> vs;
            std::string_view rest = trim(text);
            while (!rest.empty()) {
                auto comma = rest.find(',');
                std::string_view item = trim(rest.substr(0, comma));
                double v;
                if (!parse_real(item, v)) return std::nullopt;
                vs.push_back(v);
                rest = comma == std::string_view::npos
                           ? std::string_view{}
                           : trim(rest.substr(comma + 1));
            }
            return ScenarioValue{std::move(vs)};
        }
    }
    return std::nullopt;
}

std::string_view type_name(KeyType type) {
    switch (type) {
        case KeyType::Int: return "integer";
        case KeyType::Real: return "real";
        case KeyType::Str: return "string";
        case KeyType::List: return "comma-separated reals";
    }
    return "?";
}

void cross_validate(Mode mode, const std::map<std::string, ScenarioValue>& values,
                    std::vector<ScenarioError>& errors) {
    auto real_of = [&](const char* k) { return std::get<double>(values.at(k)); };
    switch (mode) {
        case Mode::Bootstrap:
            if (values.count("p") && values.count("pi0") &&
                real_of("pi0") > real_of("p"))
                errors.push_back({0, "pi0", "must be <= p"});
            break;
        case Mode::Simulate:
            if (values.count("greedy_fraction") && values.count("imitator_fraction") &&
                real_of("greedy_fraction") + real_of("imitator_fraction") >
                    1.0 + 1e-9)
                errors.push_back(
                    {0, "greedy_fraction", "mix fractions must sum to <= 1"});
            break;
        default:
            break;
    }
}

}  // namespace

std::string_view mode_name(Mode mode) {
    switch (mode) {
        case Mode::Equilibrium: return "equilibrium";
        case Mode::Simulate: return "simulate";
        case Mode::Bootstrap: return "bootstrap";
        case Mode::Polya: return "polya";
        case Mode::Metrics: return "metrics";
    }
    return "?";
}

std::int64_t Scenario::get_int(const std::string& key) const {
    return std::get<std::int64_t>(values.at(key));
}
double Scenario::get_real(const std::string& key) const {
    return std::get<double>(values.at(key));
}
const std::string& Scenario::get_string(const std::string& key) const {
    return std::get<std::string>(values.at(key));
}
const std::vector<double>& Scenario::get_list(const std::string& key) const {
    return std::get<std::vector<double>>(values.at(key));
}
std::uint64_t Scenario::seed() const {
    return static_cast<std::uint64_t>(get_int("seed"));
}

std::string Scenario::render() const {
    std::string out = "mode = " + std::string(mode_name(mode)) + "\n";
    for (const auto& [key, value] : values) {
        out += key + " = ";
        if (std::holds_alternative<std::int64_t>(value)) {
            out += std::to_string(std::get<std::int64_t>(value));
        } else if (std::holds_alternative<double>(value)) {
            out += fmt_double(std::get<double>(value));
        } else if (std::holds_alternative<std::string>(value)) {
            out += std::get<std::string>(value);
        } else {
            const auto& list = std::get<std::vector<double>>(value);
            for (std::size_t i = 0; i < list.size(); ++i)
                out += (i ? "," : "") + fmt_double(list[i]);
        }
        out += "\n";
    }
    return out;
}

std::string ScenarioError::to_string() const {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!key.empty()) out += key + ": ";
    return out + reason;
}

ParseResult parse_scenario(std::string_view text) {
    std::vector<ScenarioError> errors;

    struct RawEntry {
        std::size_t line;
        std::string key;
        std::string value;
    };
    std::vector<RawEntry> raw;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            errors.push_back({line_no, "", "expected `key = value`"});
            continue;
        }
        std::string_view key = trim(line.substr(0, eq));
        std::string_view value = trim(line.substr(eq + 1));
        bool key_ok = !key.empty();
        for (char c : key)
            key_ok = key_ok && ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                                c == '_');
        if (!key_ok) {
            errors.push_back({line_no, std::string(key), "invalid key"});
            continue;
        }
        bool duplicate = false;
        for (const auto& entry : raw)
            if (entry.key == key) {
                errors.push_back({line_no, std::string(key), "duplicate key"});
                duplicate = true;
            }
        if (!duplicate)
            raw.push_back({line_no, std::string(key), std::string(value)});
    }

    std::optional<Mode> mode;
    for (const auto& entry : raw) {
        if (entry.key != "mode") continue;
        for (Mode candidate : {Mode::Equilibrium, Mode::Simulate, Mode::Bootstrap,
                               Mode::Polya, Mode::Metrics})
            if (entry.value == mode_name(candidate)) mode = candidate;
        if (!mode)
            errors.push_back({entry.line, "mode",
                              "must be one of {equilibrium, simulate, bootstrap, "
                              "polya, metrics}"});
    }
    bool mode_reported = std::any_of(
        errors.begin(), errors.end(),
        [](const auto& e) { return e.key == "mode"; });
    if (!mode && !mode_reported) errors.push_back({0, "mode", "required"});
    if (!mode) return {std::nullopt, std::move(errors)};

    auto schema = schema_for(*mode);
    std::map<std::string, ScenarioValue> values;
    std::vector<std::string> seen;  // keys present in the input, even invalid
    for (const auto& entry : raw) {
        if (entry.key == "mode") continue;
        auto spec = std::find_if(schema.begin(), schema.end(), [&](const auto& k) {
            return k.key == entry.key;
        });
        if (spec == schema.end()) {
            errors.push_back({entry.line, entry.key,
                              "unknown key for mode " +
                                  std::string(mode_name(*mode))});
            continue;
        }
        seen.push_back(entry.key);
        auto value = parse_value(spec->type, entry.value);
        if (!value) {
            errors.push_back({entry.line, entry.key,
                              "expected " + std::string(type_name(spec->type))});
            continue;
        }
        if (spec->check)
            if (auto reason = spec->check(*value)) {
                errors.push_back({entry.line, entry.key, *reason});
                continue;
            }
        values.emplace(entry.key, std::move(*value));
    }

    for (const auto& spec : schema) {
        std::string key(spec.key);
        if (values.count(key)) continue;
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            continue;  // present but already reported as invalid
        if (spec.required) {
            errors.push_back({0, key, "required"});
            continue;
        }
        auto value = parse_value(spec.type, spec.default_text);
        values.emplace(std::move(key), std::move(*value));
    }

    cross_validate(*mode, values, errors);
    if (!errors.empty()) return {std::nullopt, std::move(errors)};
    return {Scenario{*mode, std::move(values)}, {}};
}

BeliefMatrix noisy_beliefs(const DemandModel& dm, double noise, std::size_t m,
                           std::uint64_t seed) {
    if (!(noise >= 0.0) || noise >= 1.0)
        throw invariant_error("belief noise must be in [0, 1)");
    if (noise == 0.0) return BeliefMatrix::common(m, dm.probs());

    const auto& p = dm.probs();
    const std::size_t n = p.size();
    Rng rng(seed);
    std::vector<double> grid(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double w = p[j] * (1.0 + noise * rng.uniform(-1.0, 1.0));
            grid[i * n + j] = w;
            row_sum += w;
        }
        // Renormalize exactly; the last entry absorbs the rounding so the
        // row passes the strict sum-to-one check.
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            grid[i * n + j] /= row_sum;
            acc += grid[i * n + j];
        }
        grid[i * n + n - 1] = 1.0 - acc;
    }
    return BeliefMatrix(m, n, std::move(grid));
}

namespace {

json config_json(const Scenario& s) {
    json cfg;
    cfg["mode"] = std::string(mode_name(s.mode));
    for (const auto& [key, value] : s.values) {
        if (std::holds_alternative<std::int64_t>(value))
            cfg[key] = std::get<std::int64_t>(value);
        else if (std::holds_alternative<double>(value))
            cfg[key] = std::get<double>(value);
        else if (std::holds_alternative<std::string>(value))
            cfg[key] = std::get<std::string>(value);
        else
            cfg[key] = std::get<std::vector<double>>(value);
    }
    return cfg;
}

// Reproducibility contract: every artifact carries the seed and the full
// effective configuration. CSVs get it as a commented preamble above the
// header row.
std::string csv_preamble(const Scenario& s) {
    std::string out = "# paritail ";
    out += kVersion;
    out += "\n";
    std::istringstream lines(s.render());
    for (std::string line; std::getline(lines, line);)
        out += "# " + line + "\n";
    return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write " + path.string());
    out << text;
    if (!out) throw error("write failed for " + path.string());
}

json tail_json(const TailReport& report) {
    return json{{"coverage", report.coverage},
                {"head_share", report.head_share},
                {"rank_fit",
                 {{"slope", report.rank_fit.slope},
                  {"residual", report.rank_fit.residual}}}};
}

json bias_json(const BiasCurve& curve) {
    json bins = json::array();
    for (const auto& bin : curve.bins)
        bins.push_back({{"midpoint", bin.midpoint},
                        {"mean_share", bin.mean_share},
                        {"count", bin.count}});
    return json{{"bins", std::move(bins)}};
}

struct SimPieces {
    DemandModel demand;
    BeliefMatrix beliefs;
    SimTrace trace;
};

DemandModel demand_from(const Scenario& s) {
    return demand_from_zipf(static_cast<std::size_t>(s.get_int("n")),
                            s.get_real("zipf_exponent"), s.get_real("total_rate"));
}

BeliefMatrix beliefs_from(const Scenario& s, const DemandModel& dm,
                          std::size_t m) {
    return noisy_beliefs(dm, s.get_real("belief_noise"), m,
                         child_seed(s.seed(), "beliefs", 0));
}

EquilibriumResult solve_from(const Scenario& s, const GameSpec& game) {
    return solve_nash(game, s.get_real("tol"),
                      static_cast<std::size_t>(s.get_int("max_rounds")),
                      child_seed(s.seed(), "nash", 0));
}

void write_equilibrium_csv(const std::filesystem::path& path,
                           const Scenario& s, const AllocationMatrix& a) {
    std::string csv = csv_preamble(s) + "server,budget";
    for (std::size_t j = 0; j < a.files(); ++j)
        csv += ",bid_" + std::to_string(j);
    csv += "\n";
    for (std::size_t i = 0; i < a.servers(); ++i) {
        csv += std::to_string(i) + "," + fmt_double(a.budget(i));
        for (std::size_t j = 0; j < a.files(); ++j)
            csv += "," + fmt_double(a.bid(i, j));
        csv += "\n";
    }
    write_text(path, csv);
}

json run_equilibrium(const Scenario& s, const std::filesystem::path& out) {
    const auto m = static_cast<std::size_t>(s.get_int("m"));
    DemandModel demand = demand_from(s);
    GameSpec game(std::vector<double>(m, 1.0 / static_cast<double>(m)),
                  beliefs_from(s, demand, m));
    EquilibriumResult result = solve_from(s, game);

    write_equilibrium_csv(out / "equilibrium.csv", s, result.allocation);

    auto profile = bandwidth_profile(result.allocation);
    double payoff_min = std::numeric_limits<double>::infinity();
    double payoff_max = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double u = payoff(result.allocation, i, game);
        payoff_min = std::min(payoff_min, u);
        payoff_max = std::max(payoff_max, u);
    }

    json summary;
    summary["iterations"] = result.iterations;
    summary["residual"] = result.residual;
    summary["converged"] = result.converged;
    summary["degenerate"] = result.degenerate;
    summary["efficiency_gap"] = efficiency_gap(profile, demand);
    summary["payoff_gap"] = payoff_max - payoff_min;
    try {
        summary["consensus"] = consensus_diagnostic(game, result.allocation);
    } catch (const nonpositive_payoff&) {
        summary["consensus"] = nullptr;
    }
    return summary;
}

SimPieces simulate_pieces(const Scenario& s) {
    const auto m = static_cast<std::size_t>(s.get_int("m"));
    DemandModel demand = demand_from(s);
    BeliefMatrix beliefs = beliefs_from(s, demand, m);

    std::vector<Policy> policies(m);
    const std::string& policy = s.get_string("policy");
    double move_fraction = s.get_real("move_fraction");
    if (policy == "mix") {
        auto greedy_count = static_cast<std::size_t>(
            std::floor(s.get_real("greedy_fraction") * static_cast<double>(m) + 0.5));
        auto imitator_count = static_cast<std::size_t>(std::floor(
            s.get_real("imitator_fraction") * static_cast<double>(m) + 0.5));
        greedy_count = std::min(greedy_count, m);
        imitator_count = std::min(imitator_count, m - greedy_count);
        for (std::size_t i = 0; i < m; ++i) {
            if (i < greedy_count)
                policies[i] = {PolicyKind::RationalGreedy, move_fraction};
            else if (i < greedy_count + imitator_count)
                policies[i] = {PolicyKind::Imitator, 1.0};
            else
                policies[i] = {PolicyKind::Lazy, 1.0};
        }
    } else {
        PolicyKind kind = policy == "greedy"   ? PolicyKind::RationalGreedy
                          : policy == "imitator" ? PolicyKind::Imitator
                                                  : PolicyKind::Lazy;
        for (auto& p : policies) p = {kind, move_fraction};
    }

    std::optional<AllocationMatrix> initial;
    if (s.get_string("init") == "equilibrium") {
        GameSpec game(std::vector<double>(m, 1.0 / static_cast<double>(m)),
                      beliefs);
        initial = solve_from(s, game).allocation;
    }

    SimConfig cfg{std::move(demand),
                  s.get_real("horizon"),
                  s.get_real("broadcast_interval"),
                  std::move(policies),
                  s.get_real("reallocation_rate"),
                  child_seed(s.seed(), "sim", 0),
                  DiscountParams(s.get_real("delta")),
                  beliefs,
                  std::move(initial)};
    SimTrace trace = run_market(cfg);
    return SimPieces{std::move(cfg.demand), std::move(beliefs), std::move(trace)};
}

void write_trace_csv(const std::filesystem::path& path, const Scenario& s,
                     const SimTrace& trace) {
    std::string csv = csv_preamble(s) + "time,event_type,file,server,pi_gap\n";
    std::size_t broadcast_index = 0;
    for (const auto& event : trace.events) {
        csv += fmt_double(event.time);
        switch (event.kind) {
            case EventKind::Broadcast:
                csv += ",broadcast,,," + fmt_double(trace.gap_series[broadcast_index]);
                ++broadcast_index;
                break;
            case EventKind::Request:
                csv += ",request," + std::to_string(event.file) + ",,";
                break;
            case EventKind::Reallocation:
                csv += ",reallocation,," + std::to_string(event.server) + ",";
                break;
        }
        csv += "\n";
    }
    write_text(path, csv);
}

json run_simulate(const Scenario& s, const std::filesystem::path& out) {
    auto pieces = simulate_pieces(s);
    const SimTrace& trace = pieces.trace;
    write_trace_csv(out / "trace.csv", s, trace);

    double collected = 0.0;
    for (double c : trace.ledger.cumulative) collected += c;
    std::size_t covered = 0;
    for (double v : trace.final_pi.pi)
        if (v > 0.0) ++covered;

    json summary;
    summary["arrivals"] = trace.arrivals;
    summary["settled"] = trace.settled;
    summary["dropped"] = trace.dropped;
    summary["fee_conservation_error"] =
        std::abs(collected - static_cast<double>(trace.settled));
    summary["gap_initial"] = trace.gap_series.front();
    summary["gap_final"] = trace.gap_series.back();
    summary["gap_min"] =
        *std::min_element(trace.gap_series.begin(), trace.gap_series.end());
    summary["coverage_final"] = static_cast<double>(covered) /
                                static_cast<double>(trace.final_pi.files());
    summary["broadcasts"] = trace.pi_snapshots.size();
    return summary;
}

json run_bootstrap(const Scenario& s, const std::filesystem::path& out) {
    BootstrapConfig cfg{s.get_real("p"), s.get_real("pi0"), s.get_real("dt")};
    BootstrapResult result = bootstrap_trajectory(cfg);

    std::string csv = csv_preamble(s) + "t,pi\n";
    for (const auto& [t, value] : result.series)
        csv += fmt_double(t) + "," + fmt_double(value) + "\n";
    write_text(out / "trajectory.csv", csv);

    double closed_form = bootstrap_time(cfg.p, cfg.pi0);
    json summary;
    summary["t_hit"] = result.t_hit;
    summary["closed_form"] = closed_form;
    summary["abs_error"] = std::abs(result.t_hit - closed_form);
    summary["steps"] = result.series.size();
    return summary;
}

json run_polya(const Scenario& s, const std::filesystem::path& out) {
    double alpha = s.get_real("alpha");
    double p = s.get_real("p");
    auto arrivals = static_cast<std::uint64_t>(s.get_int("arrivals"));
    auto runs = static_cast<std::size_t>(s.get_int("runs"));

    EnsembleStats stats =
        run_ensemble(alpha, p, arrivals, runs, child_seed(s.seed(), "polya", 0));

    std::string csv = "alpha,run,final_pi,first_passage\n";
    std::size_t reached = 0;
    for (std::size_t run = 0; run < runs; ++run) {
        csv += fmt_double(alpha) + "," + std::to_string(run) + "," +
               fmt_double(stats.final_pi[run]) + ",";
        if (stats.first_passage[run]) {
            csv += std::to_string(*stats.first_passage[run]);
            ++reached;
        }
        csv += "\n";
    }
    write_text(out / "ensemble.csv", csv);

    json summary;
    summary["mean_final_pi"] = stats.mean;
    summary["variance_final_pi"] = stats.variance;
    summary["reached_fraction"] =
        static_cast<double>(reached) / static_cast<double>(runs);

    const auto& alphas = s.get_list("alphas");
    if (!alphas.empty()) {
        auto curve = convergence_time_curve(alphas, p, arrivals, runs,
                                            child_seed(s.seed(), "polya-curve", 0));
        std::string curve_csv = "alpha,median_first_passage\n";
        for (const auto& point : curve)
            curve_csv += fmt_double(point.alpha) + "," +
                         fmt_double(point.median_first_passage) + "\n";
        write_text(out / "curve.csv", curve_csv);

        std::vector<ConvergencePoint> sorted = curve;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
        bool monotone = true;
        for (std::size_t i = 1; i < sorted.size(); ++i)
            monotone = monotone && sorted[i].median_first_passage <=
                                       sorted[i - 1].median_first_passage;
        summary["curve_monotone"] = monotone;

        // Reported slowdown fit: log(median) against 1/alpha. A positive
        // slope is the exponential-divergence signature.
        if (sorted.size() >= 2) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (const auto& point : sorted) {
                double x = 1.0 / point.alpha;
                double y = std::log(std::max(point.median_first_passage, 1.0));
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            auto k = static_cast<double>(sorted.size());
            summary["slowdown_fit_slope"] =
                (k * sxy - sx * sy) / (k * sxx - sx * sx);
        }
    }
    return summary;
}

json run_metrics(const Scenario& s, const std::filesystem::path& out) {
    const auto m = static_cast<std::size_t>(s.get_int("m"));
    DemandModel demand = demand_from(s);
    BeliefMatrix beliefs = beliefs_from(s, demand, m);

    GameSpec game(std::vector<double>(m, 1.0 / static_cast<double>(m)), beliefs);
    EquilibriumResult equilibrium = solve_from(s, game);
    auto equilibrium_pi = bandwidth_profile(equilibrium.allocation);

    std::vector<Policy> policies(
        m, Policy{PolicyKind::RationalGreedy, s.get_real("move_fraction")});
    SimConfig cfg{demand,
                  s.get_real("horizon"),
                  s.get_real("broadcast_interval"),
                  std::move(policies),
                  s.get_real("reallocation_rate"),
                  child_seed(s.seed(), "sim", 0),
                  DiscountParams(s.get_real("delta")),
                  beliefs,
                  equilibrium.allocation};
    SimTrace trace = run_market(cfg);

    auto bins = static_cast<std::size_t>(s.get_int("bins"));
    BiasCurve curve =
        bias_curve(trace.pi_snapshots, trace.ledger.requests_served, bins);

    json metrics;
    metrics["equilibrium_tail"] = tail_json(tail_report(equilibrium_pi));
    metrics["final_tail"] = tail_json(tail_report(trace.final_pi));
    metrics["bias"] = bias_json(curve);
    write_text(out / "metrics.json", metrics.dump(2) + "\n");

    json summary;
    summary["equilibrium_gap"] = efficiency_gap(equilibrium_pi, demand);
    summary["final_gap"] = trace.gap_series.back();
    summary["equilibrium_converged"] = equilibrium.converged;
    summary["settled"] = trace.settled;
    summary["dropped"] = trace.dropped;
    return summary;
}

int emit_error(const std::filesystem::path& out, std::string_view type,
               std::string_view message, int code) {
    json doc;
    doc["error"] = {{"type", std::string(type)},
                    {"message", std::string(message)},
                    {"exit_code", code}};
    std::cerr << "error: " << message << "\n";
    std::error_code ec;
    if (std::filesystem::exists(out, ec)) {
        std::ofstream file(out / "error.json", std::ios::binary);
        if (file) file << doc.dump(2) << "\n";
    }
    return code;
}

}  // namespace

int run_scenario(const Scenario& s, const std::string& out_dir) {
    std::filesystem::path out(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec)
        return emit_error(out, "io", "cannot create " + out_dir, kExitIo);

    try {
        json result;
        result["version"] = kVersion;
        result["mode"] = std::string(mode_name(s.mode));
        result["name"] = s.get_string("name");
        result["seed"] = s.seed();
        result["config"] = config_json(s);

        switch (s.mode) {
            case Mode::Equilibrium:
                result["summary"] = run_equilibrium(s, out);
                break;
            case Mode::Simulate:
                result["summary"] = run_simulate(s, out);
                break;
            case Mode::Bootstrap:
                result["summary"] = run_bootstrap(s, out);
                break;
            case Mode::Polya:
                result["summary"] = run_polya(s, out);
                break;
            case Mode::Metrics:
                result["summary"] = run_metrics(s, out);
                break;
        }
        write_text(out / "result.json", result.dump(2) + "\n");
        return kExitOk;
    } catch (const zero_bandwidth& e) {
        return emit_error(out, "zero_bandwidth", e.what(), kExitDomain);
    } catch (const degenerate_game& e) {
        return emit_error(out, "degenerate_game", e.what(), kExitDomain);
    } catch (const nonpositive_payoff& e) {
        return emit_error(out, "nonpositive_payoff", e.what(), kExitDomain);
    } catch (const unstable& e) {
        return emit_error(out, "unstable", e.what(), kExitDomain);
    } catch (const censored& e) {
        return emit_error(out, "censored", e.what(), kExitDomain);
    } catch (const domain_error& e) {
        return emit_error(out, "domain_error", e.what(), kExitDomain);
    } catch (const invariant_error& e) {
        return emit_error(out, "invariant_error", e.what(), kExitDomain);
    } catch (const error& e) {
        return emit_error(out, "error", e.what(), kExitIo);
    } catch (const std::exception& e) {
        return emit_error(out, "internal", e.what(), kExitInternal);
    }
}

}  // namespace paritail
