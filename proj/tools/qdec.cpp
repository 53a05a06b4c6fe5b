#include "qdec/cli.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct Flags {
    std::string config, forms, preset, p, q, output;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> samples;
    std::vector<int> scales;
    std::vector<std::string> params, inputs;
    bool print = false;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "TOML run config; flags override its values");
    sub->add_option("--forms", f.forms, "forms JSON file");
    sub->add_option("--preset", f.preset, "preset tuple, e.g. parabola(2) or diag(1,1;1,2)");
    sub->add_option("--seed", f.seed, "random seed (required for randomized commands)");
    sub->add_option("--samples", f.samples, "sample count");
    sub->add_option("--scales", f.scales, "dyadic exponents")->delimiter(',');
    sub->add_option("-p", f.p, "Lebesgue exponent p");
    sub->add_option("-q", f.q, "summation exponent q");
    sub->add_option("--out", f.output, "output directory for run folders");
    sub->add_option("--param", f.params, "key=value, value parsed as JSON when possible");
    sub->add_flag("--print", f.print, "print the result JSON");
}

qdec::RunConfig build(const std::string& command, const Flags& f) {
    qdec::RunConfig c;
    std::string base = std::filesystem::current_path().string();
    if (!f.config.empty()) {
        c = qdec::load_config(f.config);
        base = std::filesystem::absolute(f.config).parent_path().string();
        if (!c.command.empty() && c.command != command && command != "run")
            throw qdec::ValidationError("BAD_CONFIG", "config is for '" + c.command + "', not '" + command + "'");
    }
    if (command != "run") c.command = command;
    if (!f.forms.empty()) {
        c.forms = std::filesystem::absolute(f.forms).string();
        c.preset.clear();
    }
    if (!f.preset.empty()) {
        c.preset = f.preset;
        c.forms.clear();
    }
    if (f.seed) c.seed = f.seed;
    if (f.samples) c.samples = *f.samples;
    if (!f.scales.empty()) c.scales = f.scales;
    if (!f.p.empty()) c.p = f.p;
    if (!f.q.empty()) c.q = f.q;
    if (!f.output.empty()) c.output = std::filesystem::absolute(f.output).string();
    for (const auto& s : f.inputs) c.inputs.push_back(std::filesystem::absolute(s).string());
    for (const auto& kv : f.params) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw qdec::ValidationError("BAD_CONFIG", "--param expects key=value");
        std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        auto parsed = nlohmann::json::parse(value, nullptr, false);
        c.params[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
    }
    return qdec::resolve_config(c, base);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quadratic-surface decoupling toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", qdec::TOOL_VERSION);
    Flags flags;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const auto& name : qdec::command_names()) {
        auto* sub = app.add_subcommand(name);
        add_common(sub, flags);
        if (name == "report") sub->add_option("inputs", flags.inputs, "run directories");
        subs.emplace_back(name, sub);
    }
    auto* runsub = app.add_subcommand("run", "run a TOML config");
    add_common(runsub, flags);
    subs.emplace_back("run", runsub);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : qdec::EXIT_VALIDATION;
    }
    std::string command;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) command = name;
    try {
        auto cfg = build(command, flags);
        auto rec = qdec::run(cfg);
        std::cout << rec.run_dir << "\n";
        if (flags.print) {
            std::ifstream in(std::filesystem::path(rec.run_dir) / "result.json");
            std::cout << in.rdbuf();
        }
        auto summary = std::filesystem::path(rec.run_dir) / "summary.txt";
        if (std::filesystem::exists(summary)) std::cout << std::ifstream(summary).rdbuf();
        return 0;
    } catch (const qdec::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return qdec::EXIT_VALIDATION;
    } catch (const qdec::Error& e) {
        std::cerr << "computation error: " << e.what() << "\n";
        return qdec::EXIT_COMPUTATION;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return qdec::EXIT_INTERNAL;
    }
}
