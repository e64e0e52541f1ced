#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "paritail/market.hpp"

namespace paritail {

enum class Mode { Equilibrium, Simulate, Bootstrap, Polya, Metrics };

std::string_view mode_name(Mode mode);

using ScenarioValue =
    std::variant<std::int64_t, double, std::string, std::vector<double>>;

// A fully validated batch scenario: flat `key = value` configuration with
// every default materialized, so the config echo in result.json is the
// complete effective configuration.
struct Scenario {
    Mode mode;
    std::map<std::string, ScenarioValue> values;

    std::int64_t get_int(const std::string& key) const;
    double get_real(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
    const std::vector<double>& get_list(const std::string& key) const;
    std::uint64_t seed() const;

    /// Canonical `key = value` text; parse(render(s)) == s.
    std::string render() const;

    bool operator==(const Scenario&) const = default;
};

struct ScenarioError {
    std::size_t line = 0;  // 0 when not tied to an input line
    std::string key;
    std::string reason;

    std::string to_string() const;
};

struct ParseResult {
    std::optional<Scenario> scenario;
    std::vector<ScenarioError> errors;  // all problems, not just the first

    bool ok() const { return scenario.has_value(); }
};

/// Parses `key = value` lines with `#` comments against the schema of the
/// scenario's mode. Unknown keys and precondition violations are rejected.
ParseResult parse_scenario(std::string_view text);

// Exit codes of run_scenario and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;    // parse/validation failure
inline constexpr int kExitDomain = 3;    // module precondition violated
inline constexpr int kExitIo = 4;        // output not writable
inline constexpr int kExitInternal = 5;

// Executes the scenario pipeline and writes result.json plus mode-specific
// artifacts into out_dir. On failure writes error.json and returns the
// matching nonzero exit code; never throws.
int run_scenario(const Scenario& s, const std::string& out_dir);

// Subjective beliefs around the true request probabilities: row i is
// p_j * (1 + noise * u_ij) renormalized, u uniform in [-1, 1). noise must
// stay below 1 so every belief remains positive.
BeliefMatrix noisy_beliefs(const DemandModel& dm, double noise, std::size_t m,
                           std::uint64_t seed);

}  // namespace paritail
