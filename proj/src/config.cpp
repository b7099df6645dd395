#include "thermodamage/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace thermodamage {

namespace {

// ==== key-value file parser =================================================
//
// Flat [section] blocks of `key = value` lines. Values: numbers, booleans,
// "strings", and single-line arrays of numbers or strings. '#' comments.

struct RawValue {
    enum class Type { Number, Bool, String, NumList, StrList } type;
    double num = 0.0;
    bool flag = false;
    std::string str;
    std::vector<double> nums;
    std::vector<std::string> strs;
    int line = 0;
};

using RawSection = std::map<std::string, RawValue>;
using RawFile = std::map<std::string, RawSection>;

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
    throw ConfigError(path + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Strip a '#' comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        else if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

bool parse_number(const std::string& tok, double& out) {
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

RawValue parse_scalar(const std::string& tok, const std::string& path, int line) {
    RawValue v;
    v.line = line;
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
        v.type = RawValue::Type::String;
        v.str = tok.substr(1, tok.size() - 2);
        return v;
    }
    if (tok == "true" || tok == "false") {
        v.type = RawValue::Type::Bool;
        v.flag = (tok == "true");
        return v;
    }
    if (parse_number(tok, v.num)) {
        v.type = RawValue::Type::Number;
        return v;
    }
    fail(path, line, "cannot parse value '" + tok + "'");
}

RawValue parse_value(const std::string& text, const std::string& path, int line) {
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']') fail(path, line, "array must close with ']' on the same line");
        RawValue v;
        v.line = line;
        std::string inner = text.substr(1, text.size() - 2);
        std::vector<std::string> toks;
        std::string cur;
        bool quoted = false;
        for (char c : inner) {
            if (c == '"') quoted = !quoted;
            if (c == ',' && !quoted) {
                toks.push_back(trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!trim(cur).empty()) toks.push_back(trim(cur));
        bool any_str = false, any_num = false;
        for (const auto& t : toks) {
            if (t.empty()) fail(path, line, "empty array element");
            RawValue el = parse_scalar(t, path, line);
            if (el.type == RawValue::Type::String) {
                v.strs.push_back(el.str);
                any_str = true;
            } else if (el.type == RawValue::Type::Number) {
                v.nums.push_back(el.num);
                any_num = true;
            } else {
                fail(path, line, "array elements must be numbers or strings");
            }
        }
        if (any_str && any_num) fail(path, line, "mixed number/string array");
        v.type = any_str ? RawValue::Type::StrList : RawValue::Type::NumList;
        return v;
    }
    return parse_scalar(text, path, line);
}

RawFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    RawFile file;
    std::string section;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(path, line, "malformed section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) fail(path, line, "empty section name");
            file[section];  // sections may be empty
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) fail(path, line, "expected 'key = value', got '" + s + "'");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty()) fail(path, line, "empty key");
        if (val.empty()) fail(path, line, "missing value for key '" + key + "'");
        if (section.empty()) fail(path, line, "key '" + key + "' outside any [section]");
        if (file[section].count(key))
            fail(path, line, "duplicate key '" + section + "." + key + "'");
        file[section][key] = parse_value(val, path, line);
    }
    return file;
}

// ==== typed binder ==========================================================

class Section {
  public:
    Section(const std::string& path, const std::string& name, const RawSection* raw)
        : path_(path), name_(name), raw_(raw) {}

    bool has(const std::string& key) const { return raw_ && raw_->count(key); }

    double number(const std::string& key, double dflt) {
        const RawValue* v = take(key);
        if (!v) return dflt;
        if (v->type != RawValue::Type::Number) wrong(key, *v, "a number");
        return v->num;
    }

    int integer(const std::string& key, int dflt) {
        const RawValue* v = take(key);
        if (!v) return dflt;
        if (v->type != RawValue::Type::Number || v->num != std::floor(v->num))
            wrong(key, *v, "an integer");
        return static_cast<int>(v->num);
    }

    std::uint64_t uinteger(const std::string& key, std::uint64_t dflt) {
        const RawValue* v = take(key);
        if (!v) return dflt;
        if (v->type != RawValue::Type::Number || v->num != std::floor(v->num) || v->num < 0)
            wrong(key, *v, "a nonnegative integer");
        return static_cast<std::uint64_t>(v->num);
    }

    bool boolean(const std::string& key, bool dflt) {
        const RawValue* v = take(key);
        if (!v) return dflt;
        if (v->type != RawValue::Type::Bool) wrong(key, *v, "true/false");
        return v->flag;
    }

    std::string str(const std::string& key, const std::string& dflt) {
        const RawValue* v = take(key);
        if (!v) return dflt;
        if (v->type != RawValue::Type::String) wrong(key, *v, "a quoted string");
        return v->str;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> dflt) {
        const RawValue* v = take(key);
        if (!v) return dflt;
        if (v->type == RawValue::Type::StrList && v->strs.empty()) return {};
        if (v->type != RawValue::Type::NumList) wrong(key, *v, "a number array");
        return v->nums;
    }

    std::vector<std::string> strings(const std::string& key) {
        const RawValue* v = take(key);
        if (!v) return {};
        if (v->type == RawValue::Type::NumList && v->nums.empty()) return {};
        if (v->type != RawValue::Type::StrList) wrong(key, *v, "a string array");
        return v->strs;
    }

    Vec2 vec2(const std::string& key, Vec2 dflt) {
        const RawValue* v = take(key);
        if (!v) return dflt;
        if (v->type != RawValue::Type::NumList || v->nums.size() != 2)
            wrong(key, *v, "an array of two numbers");
        return Vec2(v->nums[0], v->nums[1]);
    }

    // After binding every known key, any leftover is a typo.
    void finish() const {
        if (!raw_) return;
        for (const auto& [key, val] : *raw_) {
            if (!consumed_.count(key))
                fail(path_, val.line, "unknown key '" + name_ + "." + key + "'");
        }
    }

  private:
    const RawValue* take(const std::string& key) {
        if (!raw_) return nullptr;
        auto it = raw_->find(key);
        if (it == raw_->end()) return nullptr;
        consumed_.insert(key);
        return &it->second;
    }

    [[noreturn]] void wrong(const std::string& key, const RawValue& v, const char* want) {
        fail(path_, v.line, "key '" + name_ + "." + key + "' must be " + want);
    }

    std::string path_, name_;
    const RawSection* raw_;
    std::set<std::string> consumed_;
};

TimeSignal bind_signal(Section& sec, const std::string& prefix, const std::string& path) {
    std::string kind = sec.str(prefix + "_signal", "constant");
    double value = sec.number(prefix + "_value", 0.0);
    std::vector<double> times = sec.numbers(prefix + "_times", {});
    std::vector<double> values = sec.numbers(prefix + "_values", {});
    TimeSignal sig;
    if (kind == "constant") {
        sig = TimeSignal::constant(value);
    } else if (kind == "ramp") {
        sig = TimeSignal::ramp(value);
    } else if (kind == "table") {
        sig.kind = TimeSignal::Kind::Table;
        sig.times = times;
        sig.values = values;
    } else {
        throw ConfigError(path + ": key '" + prefix +
                          "_signal' must be one of constant/ramp/table, got '" + kind + "'");
    }
    if (kind != "table" && (!times.empty() || !values.empty()))
        throw ConfigError(path + ": '" + prefix + "_times/_values' require " + prefix +
                          "_signal = \"table\"");
    sig.validate((prefix + "_signal").c_str());
    return sig;
}

std::set<Side> bind_sides(Section& sec, const std::string& key, std::set<Side> dflt,
                          const std::string& path) {
    if (!sec.has(key)) return dflt;
    std::set<Side> out;
    for (const auto& s : sec.strings(key)) {
        try {
            out.insert(side_from_string(s));
        } catch (const std::exception& e) {
            throw ConfigError(path + ": key '" + key + "': " + e.what());
        }
    }
    return out;
}

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
    throw ConfigError("invalid config: " + field + ": " + msg);
}

} // namespace

// ==== top-level parse =======================================================

SimConfig parse_config(const std::string& path) {
    RawFile raw = parse_file(path);
    SimConfig cfg;
    cfg.config_dir = std::filesystem::path(path).parent_path().string();

    const std::set<std::string> known = {"mesh",       "time",   "material", "loads",
                                         "initial",    "tolerances", "solver",
                                         "positivity", "output", "run",      "rescaling"};
    for (const auto& [name, sec] : raw) {
        if (!known.count(name)) {
            int line = sec.empty() ? 0 : sec.begin()->second.line;
            fail(path, line, "unknown section '[" + name + "]'");
        }
    }
    auto section = [&](const char* name) {
        auto it = raw.find(name);
        return Section(path, name, it == raw.end() ? nullptr : &it->second);
    };

    {
        Section s = section("mesh");
        std::string src = s.str("source", "generated");
        if (src == "generated") cfg.mesh.source = MeshConfig::Source::Generated;
        else if (src == "file") cfg.mesh.source = MeshConfig::Source::File;
        else invalid("mesh.source", "must be \"generated\" or \"file\", got '" + src + "'");
        cfg.mesh.n = s.integer("n", cfg.mesh.n);
        cfg.mesh.dirichlet_sides = bind_sides(s, "dirichlet", cfg.mesh.dirichlet_sides, path);
        cfg.mesh.path = s.str("path", "");
        cfg.mesh.repair_orientation = s.boolean("repair_orientation", true);
        s.finish();
    }
    {
        Section s = section("time");
        cfg.time.horizon = s.number("horizon", cfg.time.horizon);
        cfg.time.steps = s.integer("steps", cfg.time.steps);
        s.finish();
    }
    {
        Section s = section("material");
        MaterialLaws& m = cfg.material;
        m.lambda = s.number("lambda", m.lambda);
        m.mu = s.number("mu", m.mu);
        m.delta_at = s.number("delta_at", m.delta_at);
        m.visc_lambda = s.number("visc_lambda", m.visc_lambda);
        m.visc_mu = s.number("visc_mu", m.visc_mu);
        m.visc_damage_modulated = s.boolean("visc_damage_modulated", m.visc_damage_modulated);
        m.b = s.number("coupling_b", m.b);
        m.k0 = s.number("k0", m.k0);
        m.kappa = s.number("kappa", m.kappa);
        m.q = s.number("grad_exponent", m.q);
        m.g1 = s.number("grad_coefficient", m.g1);
        m.w[0] = s.number("w0", m.w[0]);
        m.w[1] = s.number("w1", m.w[1]);
        m.w[2] = s.number("w2", m.w[2]);
        m.rho = s.number("rho", m.rho);
        s.finish();
    }
    {
        Section s = section("loads");
        LoadData& l = cfg.loads;
        l.fvol_dir = s.vec2("volume_dir", l.fvol_dir);
        l.fvol = bind_signal(s, "volume", path);
        l.fsurf_dir = s.vec2("traction_dir", l.fsurf_dir);
        l.fsurf = bind_signal(s, "traction", path);
        for (Side side : bind_sides(s, "traction_sides", {}, path))
            l.fsurf_sides.push_back(static_cast<int>(side));
        l.H = bind_signal(s, "heat", path);
        l.hb = bind_signal(s, "flux", path);
        s.finish();
    }
    {
        Section s = section("initial");
        InitialConfig& i = cfg.initial;
        i.z0 = s.number("z0", i.z0);
        i.theta0 = s.number("theta0", i.theta0);
        i.udot0 = s.vec2("udot0", i.udot0);
        i.u0_file = s.str("u0_file", "");
        i.udot0_file = s.str("udot0_file", "");
        i.z0_file = s.str("z0_file", "");
        i.theta0_file = s.str("theta0_file", "");
        s.finish();
    }
    {
        Section s = section("tolerances");
        ToleranceConfig& t = cfg.tol;
        t.energy_rel = s.number("energy_rel", t.energy_rel);
        t.solver_rel = s.number("solver_rel", t.solver_rel);
        t.solver_abs = s.number("solver_abs", t.solver_abs);
        t.inner_delta = s.number("inner_delta", t.inner_delta);
        t.damage_rel = s.number("damage_rel", t.damage_rel);
        t.damage_max_iter = s.integer("damage_max_iter", t.damage_max_iter);
        t.semistab_rel = s.number("semistab_rel", t.semistab_rel);
        t.semistab_samples = s.integer("semistab_samples", t.semistab_samples);
        t.semistab_cadence = s.integer("semistab_cadence", t.semistab_cadence);
        t.positivity_abs = s.number("positivity_abs", t.positivity_abs);
        t.unidirectional_abs = s.number("unidirectional_abs", t.unidirectional_abs);
        s.finish();
    }
    {
        Section s = section("solver");
        SolverConfig& so = cfg.solver;
        so.gamma = s.number("gamma", so.gamma);
        so.m_start = s.number("m_start", so.m_start);
        so.m_factor = s.number("m_factor", so.m_factor);
        so.m_max_rounds = s.integer("m_max_rounds", so.m_max_rounds);
        so.heat_newton = s.boolean("heat_newton", so.heat_newton);
        std::string lin = s.str("linear", "direct");
        if (lin == "direct") so.linear = SolverConfig::Linear::Direct;
        else if (lin == "iterative") so.linear = SolverConfig::Linear::Iterative;
        else invalid("solver.linear", "must be \"direct\" or \"iterative\", got '" + lin + "'");
        so.max_sweeps = s.integer("max_sweeps", so.max_sweeps);
        so.max_newton = s.integer("max_newton", so.max_newton);
        s.finish();
    }
    {
        Section s = section("positivity");
        cfg.positivity.theta_star = s.number("theta_star", cfg.positivity.theta_star);
        cfg.positivity.H_star = s.number("h_star", cfg.positivity.H_star);
        s.finish();
    }
    {
        Section s = section("output");
        cfg.output.vtk_cadence = s.integer("vtk_cadence", cfg.output.vtk_cadence);
        s.finish();
    }
    {
        Section s = section("run");
        cfg.run.seed = s.uinteger("seed", cfg.run.seed);
        cfg.run.threads = s.integer("threads", cfg.run.threads);
        cfg.run.strict = s.boolean("strict", cfg.run.strict);
        cfg.run.out_dir = s.str("out_dir", cfg.run.out_dir);
        s.finish();
    }
    {
        Section s = section("rescaling");
        RescalingConfig& r = cfg.rescaling;
        r.epsilons = s.numbers("epsilons", r.epsilons);
        r.beta = s.number("beta", r.beta);
        r.htilde = bind_signal(s, "heat", path);
        r.htilde_b = bind_signal(s, "flux", path);
        s.finish();
    }

    cfg.loads.horizon = cfg.time.horizon;
    cfg.validate();
    return cfg;
}

// ==== validation ============================================================

void SimConfig::validate() const {
    if (!(time.horizon > 0.0)) invalid("time.horizon", "must be positive");
    if (time.steps < 1) invalid("time.steps", "must be at least 1");

    try {
        material.validate();
    } catch (const std::exception& e) {
        invalid("material", e.what());
    }
    try {
        loads.validate();
    } catch (const std::exception& e) {
        invalid("loads", e.what());
    }

    if (mesh.source == MeshConfig::Source::Generated) {
        if (mesh.n < 1) invalid("mesh.n", "must be at least 1");
        if (!mesh.path.empty()) invalid("mesh.path", "only valid with mesh.source = \"file\"");
    } else {
        if (mesh.path.empty()) invalid("mesh.path", "required with mesh.source = \"file\"");
        if (!loads.fsurf_sides.empty())
            invalid("loads.traction_sides",
                    "side selectors require a generated mesh (file meshes carry no side tags)");
    }
    if (mesh.dirichlet_sides.empty() && mesh.source == MeshConfig::Source::Generated)
        invalid("mesh.dirichlet", "at least one Dirichlet side is required");

    if (initial.z0_file.empty() && !(initial.z0 >= 0.0 && initial.z0 <= 1.0))
        invalid("initial.z0", "must lie in [0, 1]");
    if (initial.theta0_file.empty() && !(initial.theta0 > 0.0))
        invalid("initial.theta0",
                "must be strictly positive: the certified floor requires theta_* > 0 with "
                "theta_0 >= theta_*");

    if (!(solver.gamma > 4.0)) invalid("solver.gamma", "must exceed 4");
    if (!(solver.m_start > 0.0)) invalid("solver.m_start", "must be positive");
    if (!(solver.m_factor > 1.0)) invalid("solver.m_factor", "must exceed 1");
    if (solver.m_max_rounds < 1) invalid("solver.m_max_rounds", "must be at least 1");
    if (solver.max_sweeps < 1) invalid("solver.max_sweeps", "must be at least 1");
    if (solver.max_newton < 1) invalid("solver.max_newton", "must be at least 1");

    if (!(tol.energy_rel > 0.0)) invalid("tolerances.energy_rel", "must be positive");
    if (!(tol.solver_rel > 0.0)) invalid("tolerances.solver_rel", "must be positive");
    if (!(tol.damage_rel > 0.0)) invalid("tolerances.damage_rel", "must be positive");
    if (tol.damage_max_iter < 1) invalid("tolerances.damage_max_iter", "must be at least 1");
    if (tol.semistab_samples < 1) invalid("tolerances.semistab_samples", "must be at least 1");
    if (tol.semistab_cadence < 1) invalid("tolerances.semistab_cadence", "must be at least 1");

    if (positivity.theta_star < 0.0)
        invalid("positivity.theta_star", "must be nonnegative (0 = derive from theta_0)");
    if (positivity.H_star < 0.0) invalid("positivity.h_star", "must be nonnegative");

    if (output.vtk_cadence < 1) invalid("output.vtk_cadence", "must be at least 1");
    if (run.threads < 0) invalid("run.threads", "must be nonnegative (0 = hardware)");

    for (double e : rescaling.epsilons)
        if (!(e > 0.0) || e > 1.0) invalid("rescaling.epsilons", "entries must lie in (0, 1]");
    if (rescaling.beta < 0.0) invalid("rescaling.beta", "must be nonnegative");
    rescaling.htilde.validate("rescaling.heat");
    rescaling.htilde_b.validate("rescaling.flux");
    if (!rescaling.htilde.nonnegative(time.horizon))
        invalid("rescaling.heat", "limit heat source must be nonnegative");
    if (!rescaling.htilde_b.nonnegative(time.horizon))
        invalid("rescaling.flux", "limit boundary flux must be nonnegative");
}

// ==== mesh + nodal data helpers =============================================

Mesh2D build_mesh(const MeshConfig& mc, const std::string& config_dir, bool strict) {
    if (mc.source == MeshConfig::Source::Generated)
        return generate_unit_square(mc.n, mc.dirichlet_sides);
    std::filesystem::path p(mc.path);
    if (p.is_relative() && !config_dir.empty()) p = std::filesystem::path(config_dir) / p;
    int repairs = 0;
    Mesh2D mesh = load_mesh(p.string(), mc.repair_orientation && !strict, &repairs);
    return mesh;
}

Vec read_nodal_file(const std::string& path, int n_nodes, int components) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open nodal data file '" + path + "'");
    Vec out(static_cast<Eigen::Index>(n_nodes) * components);
    int row = 0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (row >= n_nodes)
            throw IoError(path + ":" + std::to_string(lineno) + ": more rows than mesh nodes (" +
                          std::to_string(n_nodes) + ")");
        std::istringstream ls(s);
        for (int c = 0; c < components; ++c) {
            double v;
            if (!(ls >> v))
                throw IoError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(components) + " values per line");
            out[static_cast<Eigen::Index>(row) * components + c] = v;
        }
        std::string rest;
        if (ls >> rest)
            throw IoError(path + ":" + std::to_string(lineno) + ": trailing content '" + rest + "'");
        ++row;
    }
    if (row != n_nodes)
        throw IoError(path + ": expected " + std::to_string(n_nodes) + " rows, found " +
                      std::to_string(row));
    return out;
}

} // namespace thermodamage
