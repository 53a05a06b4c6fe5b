#include "qdec/capselect.hpp"
#include "qdec/cli.hpp"
#include "qdec/decnum.hpp"
#include "qdec/hypotheses.hpp"
#include "qdec/parallel.hpp"
#include "qdec/transversality.hpp"
#include "qdec/varieties.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qdec {

const char* const TOOL_VERSION = "qdec 0.1.0";

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::ostringstream out;
    for (unsigned i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return out.str();
}

namespace {

nlohmann::json read_json_file(const std::string& path, const char* code) {
    std::ifstream in(path);
    if (!in) throw ValidationError(code, "cannot read " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(code, path + ": " + e.what());
    }
}

QuadTuple load_tuple(const RunConfig& c) {
    if (!c.forms.empty() && !c.preset.empty()) throw ValidationError("BAD_CONFIG", "give either forms or preset, not both");
    if (!c.preset.empty()) return parse_preset(c.preset);
    if (c.forms.empty()) throw ValidationError("BAD_CONFIG", "this command needs forms or a preset");
    return tuple_from_json(read_json_file(c.forms, "BAD_FORMS"));
}

MultiPoly load_poly(const RunConfig& c) {
    if (c.params.contains("poly")) {
        const auto& v = c.params["poly"];
        return poly_from_json(v.is_string() ? nlohmann::json::parse(v.get<std::string>()) : v);
    }
    if (c.params.contains("poly_file")) return poly_from_json(read_json_file(c.params["poly_file"].get<std::string>(), "BAD_POLY"));
    throw ValidationError("BAD_CONFIG", "this command needs params.poly or params.poly_file");
}

template <typename T>
T param(const RunConfig& c, const char* key, T fallback) {
    if (!c.params.contains(key)) return fallback;
    try {
        return c.params[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("BAD_CONFIG", std::string("params.") + key + " has the wrong type");
    }
}

int scale(const RunConfig& c, std::size_t i, int fallback) {
    if (i < c.scales.size()) return c.scales[i];
    return fallback;
}

std::uint64_t power_of_two(int e) {
    if (e < 0 || e > 40) throw ValidationError("RANGE", "scale exponent out of range");
    return std::uint64_t{1} << e;
}

Rational exponent(const std::string& s, const char* what) {
    try {
        return parse_rational(s);
    } catch (const Error&) {
        throw ValidationError("BAD_CONFIG", std::string(what) + " must be a rational number");
    }
}

std::vector<Cap> caps_from_param(const RunConfig& c, const char* key, std::size_t d, int level) {
    if (!c.params.contains(key)) return caps_partition(d, level);
    std::vector<Cap> caps;
    for (const auto& idx : c.params[key]) {
        if (!idx.is_array() || idx.size() != d) throw ValidationError("BAD_CONFIG", std::string("params.") + key + " needs d integer indices per cap");
        Cap cap{{}, level};
        for (const auto& v : idx) {
            if (!v.is_number_integer()) throw ValidationError("BAD_CONFIG", "cap indices must be integers");
            auto k = v.get<long>();
            if (k < 0 || k >= (1L << level)) throw ValidationError("RANGE", "cap index outside [0, 2^level)");
            cap.anchor.push_back(Rational(k) * dyadic(level));
        }
        caps.push_back(cap);
    }
    return caps;
}

CommandOutput run_check_hypotheses(const RunConfig& c) {
    auto T = load_tuple(c);
    HypothesisConfig cfg;
    cfg.seed = *c.seed;
    if (c.samples) cfg.samples = c.samples;
    auto nd = check_nondegeneracy(T, cfg);
    auto hr = check_hyperplane_rank(T, cfg);
    auto worst = [](Verdict a, Verdict b) {
        if (a == Verdict::FAIL || b == Verdict::FAIL) return Verdict::FAIL;
        if (a == Verdict::LIKELY_PASS || b == Verdict::LIKELY_PASS) return Verdict::LIKELY_PASS;
        return Verdict::PASS;
    };
    CommandOutput out;
    out.result = {{"tuple", tuple_to_json(T)},
                  {"nondegeneracy", report_to_json(nd)},
                  {"hyperplane_rank", report_to_json(hr)},
                  {"codim1_shortcut", codim1_shortcut(T) == Codim1::APPLIES ? "APPLIES" : "NOT_APPLICABLE"},
                  {"verdict", to_string(worst(nd.verdict, hr.verdict))}};
    return out;
}

CommandOutput run_transversality(const RunConfig& c) {
    auto T = load_tuple(c);
    int level = scale(c, 0, 2);
    auto caps = caps_from_param(c, "caps", T.d, level);
    TransversalityConfig cfg;
    cfg.seed = *c.seed;
    if (c.samples) cfg.random_points = c.samples;
    cfg.nu_min = param(c, "nu_min", cfg.nu_min);
    auto rep = nu_transverse(T, caps, cfg);
    CommandOutput out;
    out.result = {{"level", level}, {"caps", caps.size()}, {"report", report_to_json(rep)}};
    return out;
}

CommandOutput run_bl_constant(const RunConfig& c) {
    if (!c.params.contains("bases")) throw ValidationError("BAD_CONFIG", "bl-constant needs params.bases");
    std::vector<std::vector<std::vector<double>>> bases;
    std::size_t ambient = 0;
    try {
        bases = c.params["bases"].get<std::vector<std::vector<std::vector<double>>>>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("BAD_CONFIG", "params.bases is a list of spaces, each a list of basis rows");
    }
    if (bases.empty() || bases[0].empty()) throw ValidationError("BAD_CONFIG", "params.bases is empty");
    ambient = bases[0][0].size();
    auto datum = BLDatum::make(ambient, bases);
    auto r = bl_constant_gaussian(datum);
    CommandOutput out;
    out.result = {{"ambient", ambient}, {"dim", datum.dim}, {"exponent", datum.c}, {"divergent", r.divergent},
                  {"converged", r.converged}, {"iterations", r.iterations}};
    out.result["value"] = r.divergent ? nlohmann::json("DIVERGENT") : nlohmann::json(r.value);
    return out;
}

CommandOutput run_cap_select(const RunConfig& c) {
    auto T = load_tuple(c);
    int k = scale(c, 0, 3);
    auto K = power_of_two(k);
    std::size_t count = caps_partition(T.d, k).size();
    std::vector<double> norms;
    if (c.params.contains("norms")) norms = param(c, "norms", norms);
    else if (c.params.contains("norms_file")) norms = read_json_file(c.params["norms_file"].get<std::string>(), "BAD_NORMS").get<std::vector<double>>();
    else {
        Rng rng(*c.seed);
        for (std::size_t i = 0; i < count; ++i) norms.push_back(uniform01(rng));
    }
    SelectConfig cfg;
    if (c.params.contains("theta")) cfg.theta = exponent(param<std::string>(c, "theta", ""), "params.theta");
    cfg.transversality.seed = *c.seed;
    cfg.variety.seed = *c.seed;
    if (c.samples) cfg.transversality.random_points = c.samples;
    cfg.A = param(c, "A", cfg.A);
    auto o = bg_select(T, norms, K, cfg);
    CommandOutput out;
    out.result = outcome_to_json(o);
    return out;
}

LadderMode ladder_mode(const RunConfig& c, LadderMode fallback) {
    auto m = param<std::string>(c, "mode", fallback == LadderMode::LEMMA ? "lemma" : "corollary");
    if (m == "lemma") return LadderMode::LEMMA;
    if (m == "corollary") return LadderMode::COROLLARY;
    throw ValidationError("BAD_CONFIG", "params.mode must be lemma or corollary");
}

CommandOutput run_variety_cover(const RunConfig& c) {
    auto P = load_poly(c);
    auto K = power_of_two(scale(c, 0, 14));
    CoverOptions opts;
    opts.mode = ladder_mode(c, LadderMode::LEMMA);
    opts.dilation = param(c, "dilation", opts.dilation);
    opts.resolution = param(c, "resolution", opts.resolution);
    auto cover = variety_cube_cover(P, K, param(c, "A", 2L), P.nvars(), opts);
    CommandOutput out;
    out.result = cover_to_json(cover);
    return out;
}

CommandOutput run_sublevel(const RunConfig& c) {
    auto P = load_poly(c);
    if (P.is_zero()) throw ValidationError("ZERO_POLY", "the zero polynomial has no sublevel structure");
    P = P * (1 / poly_norm1(P));
    auto K = power_of_two(scale(c, 0, 20));
    long A = param(c, "A", 2L);
    auto ladder = scale_ladder(K, A, static_cast<long>(P.degree()), ladder_mode(c, LadderMode::LEMMA));
    auto cert = sublevel_decompose(P, ladder);
    auto rep = verify_sublevel_inclusion(P, cert, ladder, c.samples ? c.samples : 10000, *c.seed);
    CommandOutput out;
    out.result = {{"poly", poly_to_json(P)},
                  {"ladder", ladder_to_json(ladder)},
                  {"certificate", certificate_to_json(cert)},
                  {"inclusion", report_to_json(rep)}};
    return out;
}

PacketFamily make_family(const RunConfig& c, const QuadTuple& T, int level) {
    auto kind = param<std::string>(c, "family", "modulated");
    if (kind == "modulated") {
        double radius = param(c, "radius", 0.0);
        if (radius <= 0) {
            auto probe = example_family_modulated(T, 0, 1.0);
            radius = to_double(probe.key_spacing_bound) / std::ceil(to_double(exponent(c.p, "p")) / 2) / 2;
        }
        return example_family_modulated(T, level, radius);
    }
    if (kind == "rescaled")
        return example_family_rescaled(T, level, param(c, "tangent_radius", 2.0), param(c, "normal_radius", 16.0));
    throw ValidationError("BAD_CONFIG", "params.family must be modulated or rescaled");
}

QuadratureConfig quadrature(const RunConfig& c) {
    QuadratureConfig q;
    q.lobes = param(c, "lobes", q.lobes);
    q.weight_truncation = param(c, "weight_truncation", q.weight_truncation);
    q.max_spacing = param(c, "max_spacing", q.max_spacing);
    if (c.params.contains("spacing")) q.spacing = param(c, "spacing", q.spacing);
    return q;
}

CommandOutput run_dec_estimate(const RunConfig& c) {
    auto T = load_tuple(c);
    int level = scale(c, 0, 3);
    auto fam = make_family(c, T, level);
    double p = to_double(exponent(c.p, "p")), q = to_double(exponent(c.q, "q"));
    auto method = param<std::string>(c, "method", "auto");
    std::optional<WeightSpec> W;
    if (c.params.contains("weight_radius")) {
        double delta = std::ldexp(1.0, -level);
        double r = param(c, "weight_radius", 1.0 / (delta * delta));
        W = WeightSpec::make(param(c, "weight_center", std::vector<double>(T.d + T.n, 0.0)), r, T.d, T.n);
        if (c.params.contains("weight_exponent")) W->E = param(c, "weight_exponent", W->E);
    }
    bool even_int = exponent(c.p, "p").get_den() == 1 && exponent(c.p, "p").get_num() % 2 == 0;
    bool energy = method == "energy" || (method == "auto" && !W && fam.kind == "modulated" && even_int);
    if (energy && W) throw ValidationError("BAD_CONFIG", "the energy method computes global norms and takes no weight");
    RatioReport r = energy ? dec_ratio_energy(fam, static_cast<unsigned>(p), q) : dec_ratio(fam, p, q, W ? &*W : nullptr, quadrature(c));
    CommandOutput out;
    out.result = {{"family", fam.kind}, {"level", level}, {"p", c.p}, {"q", c.q}, {"ratio", ratio_to_json(r)}};
    return out;
}

CommandOutput run_muldec(const RunConfig& c) {
    auto T = load_tuple(c);
    int level = scale(c, 0, 2);
    int k = scale(c, 1, 1);
    auto fam = make_family(c, T, level);
    auto caps = caps_from_param(c, "caps", T.d, k);
    double p = to_double(exponent(c.p, "p"));
    auto r = muldec_lhs(fam, caps, power_of_two(k), p, quadrature(c));
    CommandOutput out;
    out.result = {{"family", fam.kind},           {"level", level},         {"K", power_of_two(k)},
                  {"caps", caps.size()},          {"value", r.value},       {"single_norms", r.single_norms},
                  {"hoelder_bound", r.hoelder_bound}, {"lattice_points", r.points}};
    return out;
}

CommandOutput run_sharpness(const RunConfig& c) {
    auto T = load_tuple(c);
    SharpnessConfig cfg;
    cfg.family = param<std::string>(c, "family", "modulated");
    cfg.p = to_double(exponent(c.p, "p"));
    cfg.q = to_double(exponent(c.q, "q"));
    cfg.dmin = scale(c, 0, 3);
    cfg.dmax = scale(c, 1, 7);
    cfg.quad = quadrature(c);
    cfg.modulated_radius = param(c, "radius", 0.0);
    auto s = sharpness(T, cfg);
    CommandOutput out;
    out.result = sharpness_to_json(s);
    out.result["family"] = cfg.family;
    out.result["p"] = c.p;
    out.result["q"] = c.q;
    out.result["tuple"] = tuple_to_json(T);
    out.csv = sharpness_csv(s);
    return out;
}

CommandOutput run_descent(const RunConfig& c) {
    long d = param(c, "d", 0L), n = param(c, "n", 0L);
    if ((!c.forms.empty() || !c.preset.empty()) && (d == 0 || n == 0)) {
        auto T = load_tuple(c);
        d = static_cast<long>(T.d);
        n = static_cast<long>(T.n);
    }
    Rational p = exponent(c.p, "p");
    auto k = kappa_ptilde(d, n, p);
    Rational eta0 = exponent(param<std::string>(c, "eta0", "1"), "params.eta0");
    std::optional<Rational> Lambda;
    if (c.params.contains("Lambda")) Lambda = exponent(param<std::string>(c, "Lambda", "0"), "params.Lambda");
    auto state = descent_state(d, n, p, eta0, Lambda);
    auto seq = descent_iterate(state, param(c, "steps", 10UL));
    nlohmann::json etas = nlohmann::json::array();
    for (const auto& e : seq) etas.push_back(to_string(e));
    CommandOutput out;
    out.result = {{"d", d},
                  {"n", n},
                  {"p", to_string(p)},
                  {"p_tilde", to_string(k.p_tilde)},
                  {"kappa", to_string(k.kappa)},
                  {"kappa_at_most_half", descent_regime(d, n, p)},
                  {"Lambda", to_string(state.Lambda)},
                  {"sequence", etas}};
    std::ostringstream csv;
    csv << "step,eta\n";
    for (std::size_t i = 0; i < seq.size(); ++i) csv << i << ',' << to_string(seq[i]) << '\n';
    out.csv = csv.str();
    return out;
}

CommandOutput run_report(const RunConfig& c) {
    if (c.inputs.empty()) throw ValidationError("BAD_CONFIG", "report needs at least one input run directory");
    std::vector<ReportEntry> entries;
    for (const auto& dir : c.inputs)
        entries.push_back({read_json_file((fs::path(dir) / "run.json").string(), "BAD_RUN"),
                           read_json_file((fs::path(dir) / "result.json").string(), "BAD_RUN")});
    return emit_report(entries);
}

std::string fixed(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
}

}  // namespace

CommandOutput execute(const RunConfig& c) {
    const auto& cmd = c.command;
    if (cmd == "check-hypotheses") return run_check_hypotheses(c);
    if (cmd == "transversality") return run_transversality(c);
    if (cmd == "bl-constant") return run_bl_constant(c);
    if (cmd == "cap-select") return run_cap_select(c);
    if (cmd == "variety-cover") return run_variety_cover(c);
    if (cmd == "sublevel") return run_sublevel(c);
    if (cmd == "dec-estimate") return run_dec_estimate(c);
    if (cmd == "muldec-lhs") return run_muldec(c);
    if (cmd == "sharpness") return run_sharpness(c);
    if (cmd == "exponent-descent") return run_descent(c);
    if (cmd == "report") return run_report(c);
    throw ValidationError("BAD_CONFIG", "unknown command '" + cmd + "'");
}

nlohmann::json record_to_json(const RunRecord& r) {
    return {{"config", r.config},     {"version", r.version}, {"wall_time", r.wall_time}, {"threads", r.threads},
            {"run_dir", r.run_dir},   {"outputs", r.outputs}, {"digests", r.digests}};
}

RunRecord run(const RunConfig& c) {
    auto start = std::chrono::steady_clock::now();
    auto out = execute(c);
    RunRecord rec;
    rec.config = config_to_json(c);
    rec.version = TOOL_VERSION;
    rec.threads = thread_count();
    std::string key = sha256_hex(config_to_toml(c));
    fs::path dir = fs::path(c.output) / key.substr(0, 12);
    fs::create_directories(dir);
    rec.run_dir = dir.string();
    auto emit = [&](const std::string& name, const std::string& body) {
        std::ofstream f(dir / name, std::ios::binary);
        f << body;
        if (!f) throw Error("IO", "cannot write " + (dir / name).string());
        rec.outputs.push_back(name);
        rec.digests[name] = sha256_hex(body);
    };
    emit("result.json", out.result.dump(2) + "\n");
    if (!out.csv.empty()) emit("series.csv", out.csv);
    if (!out.text.empty()) emit("summary.txt", out.text);
    emit("config.toml", config_to_toml(c));
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream f(dir / "run.json", std::ios::binary);
    f << record_to_json(rec).dump(2) << "\n";
    return rec;
}

CommandOutput emit_report(const std::vector<ReportEntry>& entries) {
    if (entries.empty()) throw ValidationError("EMPTY_REPORT", "report needs at least one record");
    std::map<std::string, std::vector<const ReportEntry*>> groups;
    for (const auto& e : entries) groups[e.record.at("config").value("command", std::string("unknown"))].push_back(&e);
    std::ostringstream csv, text, series;
    csv << "command,run_dir,family,p,q,slope,target,gap,status\n";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [cmd, list] : groups) {
        text << "== " << cmd << " ==\n";
        for (const auto* e : list) {
            const auto& res = e->result;
            std::string dir = e->record.value("run_dir", std::string());
            nlohmann::json row{{"command", cmd}, {"run_dir", dir}};
            if (cmd == "sharpness") {
                const auto& table = res.at("fit").at("table");
                Rational target = parse_rational(res.at("lower_bound").get<std::string>());
                std::string family = res.value("family", std::string()), p = res.value("p", std::string()), q = res.value("q", std::string());
                bool incomplete = table.size() < 3;
                double slope = res.at("fit").at("slope").get<double>();
                double gap = slope - to_double(target);
                std::string status = incomplete ? "INCOMPLETE" : "OK";
                csv << cmd << ',' << dir << ',' << family << ',' << p << ',' << q << ','
                    << (incomplete ? "" : fixed(slope)) << ',' << to_string(target) << ',' << (incomplete ? "" : fixed(gap)) << ','
                    << status << '\n';
                text << "  " << family << " p=" << p << " q=" << q << "  slope " << (incomplete ? "-" : fixed(slope))
                     << "  target " << to_string(target) << "  gap " << (incomplete ? "-" : fixed(gap)) << "  " << status << '\n';
                for (const auto& pt : table) series << dir << ',' << pt.at("delta").get<double>() << ',' << pt.at("ratio").get<double>() << '\n';
                row.update({{"family", family}, {"slope", incomplete ? nlohmann::json() : nlohmann::json(slope)},
                            {"target", to_string(target)}, {"status", status}});
            } else {
                std::string status = res.empty() ? "INCOMPLETE" : "OK";
                csv << cmd << ',' << dir << ",,,,,,," << status << '\n';
                text << "  " << dir << "  " << status << '\n';
                row["status"] = status;
            }
            rows.push_back(row);
        }
    }
    CommandOutput out;
    out.result = {{"rows", rows}};
    out.csv = csv.str();
    if (!series.str().empty()) out.csv += "\nrun_dir,delta,ratio\n" + series.str();
    out.text = text.str();
    return out;
}

}  // namespace qdec
