#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "paritail/scenario.hpp"
#include "paritail/version.hpp"

namespace {

int report_config_errors(const paritail::ParseResult& parsed) {
    nlohmann::json problems = nlohmann::json::array();
    for (const auto& err : parsed.errors) {
        problems.push_back({{"line", err.line},
                            {"key", err.key},
                            {"reason", err.reason}});
        std::cerr << "error: " << err.to_string() << "\n";
    }
    nlohmann::json doc;
    doc["error"] = {{"type", "config"},
                    {"exit_code", paritail::kExitConfig},
                    {"problems", std::move(problems)}};
    std::cout << doc.dump(2) << "\n";
    return paritail::kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"paritail: parimutuel bandwidth market simulator"};
    app.set_version_flag("--version", paritail::kVersion);
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";

    auto* run = app.add_subcommand("run", "execute a scenario, write artifacts");
    run->add_option("scenario", scenario_path, "scenario file")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (default: out)");

    auto* validate =
        app.add_subcommand("validate", "check a scenario file, print the "
                                       "effective configuration");
    validate->add_option("scenario", scenario_path, "scenario file")
        ->required()
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    std::ifstream file(scenario_path, std::ios::binary);
    std::stringstream buffer;
    buffer << file.rdbuf();
    if (!file) {
        std::cerr << "error: cannot read " << scenario_path << "\n";
        return paritail::kExitIo;
    }

    auto parsed = paritail::parse_scenario(buffer.str());
    if (!parsed.ok()) return report_config_errors(parsed);

    if (validate->parsed()) {
        std::cout << parsed.scenario->render();
        return paritail::kExitOk;
    }
    return paritail::run_scenario(*parsed.scenario, out_dir);
}
