#include "qdec/cli.hpp"

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qdec {

namespace {

nlohmann::json node_to_json(const toml::node& n) {
    if (auto s = n.as_string()) return s->get();
    if (auto i = n.as_integer()) return i->get();
    if (auto f = n.as_floating_point()) return f->get();
    if (auto b = n.as_boolean()) return b->get();
    if (auto a = n.as_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& e : *a) out.push_back(node_to_json(e));
        return out;
    }
    if (auto t = n.as_table()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = node_to_json(v);
        return out;
    }
    throw ValidationError("BAD_CONFIG", "unsupported TOML value (dates and times are not accepted)");
}

toml::array json_to_array(const nlohmann::json& j);
toml::table json_to_table(const nlohmann::json& j);

template <typename Sink>
void insert_json(Sink&& sink, const nlohmann::json& v) {
    if (v.is_string()) sink(v.get<std::string>());
    else if (v.is_boolean()) sink(v.get<bool>());
    else if (v.is_number_integer()) sink(v.get<std::int64_t>());
    else if (v.is_number_unsigned()) sink(static_cast<std::int64_t>(v.get<std::uint64_t>()));
    else if (v.is_number_float()) sink(v.get<double>());
    else if (v.is_array()) sink(json_to_array(v));
    else if (v.is_object()) sink(json_to_table(v));
    else throw ValidationError("BAD_CONFIG", "null values cannot be written to TOML");
}

toml::array json_to_array(const nlohmann::json& j) {
    toml::array a;
    for (const auto& v : j) insert_json([&](auto&& x) { a.push_back(std::forward<decltype(x)>(x)); }, v);
    return a;
}

toml::table json_to_table(const nlohmann::json& j) {
    toml::table t;
    for (const auto& [k, v] : j.items()) insert_json([&](auto&& x) { t.insert_or_assign(k, std::forward<decltype(x)>(x)); }, v);
    return t;
}

const std::vector<std::string> KNOWN_KEYS{"command", "forms", "preset", "seed", "samples", "scales",
                                          "p",       "q",     "output", "inputs", "params"};

std::string exponent_string(const toml::node& n, const char* key) {
    if (auto s = n.as_string()) return s->get();
    if (auto i = n.as_integer()) return std::to_string(i->get());
    if (auto f = n.as_floating_point()) return to_string(rationalize(f->get(), 1000000));
    throw ValidationError("BAD_CONFIG", std::string("'") + key + "' must be a number or a rational string");
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"check-hypotheses", "transversality", "bl-constant", "cap-select",
                                                "variety-cover",    "sublevel",       "dec-estimate", "muldec-lhs",
                                                "sharpness",        "exponent-descent", "report"};
    return names;
}

bool command_needs_seed(const std::string& command) {
    return command == "check-hypotheses" || command == "transversality" || command == "cap-select" || command == "sublevel";
}

bool RunConfig::operator==(const RunConfig& o) const {
    return command == o.command && forms == o.forms && preset == o.preset && seed == o.seed && samples == o.samples &&
           scales == o.scales && p == o.p && q == o.q && output == o.output && inputs == o.inputs && params == o.params;
}

std::string config_to_toml(const RunConfig& c) {
    toml::table t;
    t.insert("command", c.command);
    if (!c.forms.empty()) t.insert("forms", c.forms);
    if (!c.preset.empty()) t.insert("preset", c.preset);
    if (c.seed) t.insert("seed", static_cast<std::int64_t>(*c.seed));
    if (c.samples) t.insert("samples", static_cast<std::int64_t>(c.samples));
    if (!c.scales.empty()) {
        toml::array a;
        for (int s : c.scales) a.push_back(static_cast<std::int64_t>(s));
        t.insert("scales", a);
    }
    t.insert("p", c.p);
    t.insert("q", c.q);
    t.insert("output", c.output);
    if (!c.inputs.empty()) {
        toml::array a;
        for (const auto& s : c.inputs) a.push_back(s);
        t.insert("inputs", a);
    }
    if (!c.params.empty()) t.insert("params", json_to_table(c.params));
    std::ostringstream out;
    out << t << '\n';
    return out.str();
}

RunConfig parse_config(const std::string& text) {
    toml::table t;
    try {
        t = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " at line " << e.source().begin.line;
        throw ValidationError("BAD_CONFIG", msg.str());
    }
    for (const auto& [k, v] : t)
        if (std::find(KNOWN_KEYS.begin(), KNOWN_KEYS.end(), std::string(k.str())) == KNOWN_KEYS.end())
            throw ValidationError("BAD_CONFIG", "unknown key '" + std::string(k.str()) + "'");
    RunConfig c;
    auto str = [&](const char* key, std::string& dst) {
        if (auto n = t.get(key)) {
            if (!n->is_string()) throw ValidationError("BAD_CONFIG", std::string("'") + key + "' must be a string");
            dst = n->as_string()->get();
        }
    };
    str("command", c.command);
    str("forms", c.forms);
    str("preset", c.preset);
    str("output", c.output);
    if (auto n = t.get("seed")) {
        if (!n->is_integer() || n->as_integer()->get() < 0) throw ValidationError("BAD_CONFIG", "'seed' must be a nonnegative integer");
        c.seed = static_cast<std::uint64_t>(n->as_integer()->get());
    }
    if (auto n = t.get("samples")) {
        if (!n->is_integer() || n->as_integer()->get() < 0) throw ValidationError("BAD_CONFIG", "'samples' must be a nonnegative integer");
        c.samples = static_cast<unsigned>(n->as_integer()->get());
    }
    if (auto n = t.get("scales")) {
        if (!n->is_array()) throw ValidationError("BAD_CONFIG", "'scales' must be an array of integers");
        for (const auto& e : *n->as_array()) {
            if (!e.is_integer()) throw ValidationError("BAD_CONFIG", "'scales' must be an array of integers");
            c.scales.push_back(static_cast<int>(e.as_integer()->get()));
        }
    }
    if (auto n = t.get("p")) c.p = exponent_string(*n, "p");
    if (auto n = t.get("q")) c.q = exponent_string(*n, "q");
    if (auto n = t.get("inputs")) {
        if (!n->is_array()) throw ValidationError("BAD_CONFIG", "'inputs' must be an array of paths");
        for (const auto& e : *n->as_array()) {
            if (!e.is_string()) throw ValidationError("BAD_CONFIG", "'inputs' must be an array of paths");
            c.inputs.push_back(e.as_string()->get());
        }
    }
    if (auto n = t.get("params")) {
        if (!n->is_table()) throw ValidationError("BAD_CONFIG", "'params' must be a table");
        c.params = node_to_json(*n);
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("BAD_CONFIG", "cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j{{"command", c.command}, {"p", c.p}, {"q", c.q}, {"output", c.output}, {"params", c.params}};
    if (!c.forms.empty()) j["forms"] = c.forms;
    if (!c.preset.empty()) j["preset"] = c.preset;
    if (c.seed) j["seed"] = *c.seed;
    if (c.samples) j["samples"] = c.samples;
    if (!c.scales.empty()) j["scales"] = c.scales;
    if (!c.inputs.empty()) j["inputs"] = c.inputs;
    return j;
}

RunConfig resolve_config(RunConfig c, const std::string& base_dir) {
    namespace fs = std::filesystem;
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), c.command) == names.end())
        throw ValidationError("BAD_CONFIG", "unknown command '" + c.command + "'");
    if (command_needs_seed(c.command) && !c.seed)
        throw ValidationError("SEED_REQUIRED", "command '" + c.command + "' is randomized and needs a seed");
    auto absolute = [&](std::string& path) {
        if (path.empty()) return;
        fs::path p(path);
        if (p.is_relative()) p = fs::path(base_dir) / p;
        path = p.lexically_normal().string();
    };
    absolute(c.forms);
    absolute(c.output);
    for (auto& s : c.inputs) absolute(s);
    for (const char* key : {"poly_file", "norms_file"})
        if (c.params.contains(key) && c.params[key].is_string()) {
            auto s = c.params[key].get<std::string>();
            absolute(s);
            c.params[key] = s;
        }
    return c;
}

}  // namespace qdec
