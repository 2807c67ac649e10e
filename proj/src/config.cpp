#include "fpp/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace fpp {

TomlValue TomlValue::of_string(std::string s) {
    TomlValue v;
    v.kind = Kind::String;
    v.str = std::move(s);
    return v;
}
TomlValue TomlValue::of_bool(bool b) {
    TomlValue v;
    v.kind = Kind::Bool;
    v.boolean = b;
    return v;
}
TomlValue TomlValue::of_int(long long i) {
    TomlValue v;
    v.kind = Kind::Int;
    v.integer = i;
    return v;
}
TomlValue TomlValue::of_float(double d) {
    TomlValue v;
    v.kind = Kind::Float;
    v.real = d;
    return v;
}
TomlValue TomlValue::of_array(std::vector<TomlValue> items) {
    TomlValue v;
    v.kind = Kind::Array;
    v.array = std::move(items);
    return v;
}

double TomlValue::as_number() const {
    if (kind == Kind::Int) return static_cast<double>(integer);
    if (kind == Kind::Float) return real;
    throw ConfigError("expected a number");
}

bool TomlValue::operator==(const TomlValue& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case Kind::String: return str == o.str;
        case Kind::Bool: return boolean == o.boolean;
        case Kind::Int: return integer == o.integer;
        case Kind::Float: return real == o.real;
        case Kind::Array: return array == o.array;
    }
    return false;
}

namespace {

[[noreturn]] void fail_at(int line, const std::string& msg) {
    std::ostringstream os;
    os << "config line " << line << ": " << msg;
    throw ConfigError(os.str());
}

std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_str) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_str = false;
            }
        } else if (c == '"') {
            in_str = true;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool valid_key(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

std::string parse_quoted(const std::string& s, int line) {
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') fail_at(line, "bad string literal");
    std::string out;
    for (size_t i = 1; i + 1 < s.size(); ++i) {
        char c = s[i];
        if (c == '\\') {
            if (i + 2 >= s.size()) fail_at(line, "dangling escape");
            char e = s[++i];
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: fail_at(line, "unsupported escape");
            }
        } else if (c == '"') {
            fail_at(line, "unescaped quote inside string");
        } else {
            out += c;
        }
    }
    return out;
}

bool is_integer_literal(const std::string& s) {
    size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    if (i >= s.size()) return false;
    for (; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

TomlValue parse_value(const std::string& raw, int line);

std::vector<std::string> split_array_items(const std::string& body, int line) {
    std::vector<std::string> items;
    std::string cur;
    int depth = 0;
    bool in_str = false;
    for (size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (in_str) {
            cur += c;
            if (c == '\\' && i + 1 < body.size()) cur += body[++i];
            if (c == '"') in_str = false;
            continue;
        }
        if (c == '"') {
            in_str = true;
            cur += c;
        } else if (c == '[') {
            ++depth;
            cur += c;
        } else if (c == ']') {
            --depth;
            if (depth < 0) fail_at(line, "unbalanced brackets");
            cur += c;
        } else if (c == ',' && depth == 0) {
            items.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (in_str || depth != 0) fail_at(line, "unterminated array");
    std::string last = trim(cur);
    if (!last.empty()) items.push_back(cur);
    return items;
}

TomlValue parse_value(const std::string& raw, int line) {
    std::string s = trim(raw);
    if (s.empty()) fail_at(line, "missing value");
    if (s.front() == '"') return TomlValue::of_string(parse_quoted(s, line));
    if (s == "true") return TomlValue::of_bool(true);
    if (s == "false") return TomlValue::of_bool(false);
    if (s.front() == '[') {
        if (s.back() != ']') fail_at(line, "unterminated array");
        std::vector<TomlValue> items;
        for (const std::string& part : split_array_items(s.substr(1, s.size() - 2), line))
            items.push_back(parse_value(part, line));
        // homogeneous, except ints promote to floats when mixed with floats
        bool any_float = false, all_numeric = true;
        for (const auto& v : items) {
            if (v.kind == TomlValue::Kind::Float) any_float = true;
            if (v.kind != TomlValue::Kind::Float && v.kind != TomlValue::Kind::Int)
                all_numeric = false;
        }
        if (all_numeric && any_float)
            for (auto& v : items)
                if (v.kind == TomlValue::Kind::Int) v = TomlValue::of_float(double(v.integer));
        for (size_t i = 1; i < items.size(); ++i)
            if (items[i].kind != items[0].kind) fail_at(line, "mixed-type array");
        return TomlValue::of_array(std::move(items));
    }
    if (is_integer_literal(s)) {
        errno = 0;
        char* end = nullptr;
        long long v = std::strtoll(s.c_str(), &end, 10);
        if (errno != 0 || end != s.c_str() + s.size()) fail_at(line, "integer out of range");
        return TomlValue::of_int(v);
    }
    errno = 0;
    char* end = nullptr;
    double d = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size()) fail_at(line, "unrecognized value: " + s);
    return TomlValue::of_float(d);
}

std::string fmt_double(double d) {
    if (!std::isfinite(d)) throw ConfigError("non-finite float in config");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    std::string s = buf;
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

std::string fmt_value(const TomlValue& v) {
    switch (v.kind) {
        case TomlValue::Kind::String: {
            std::string out = "\"";
            for (char c : v.str) {
                if (c == '"' || c == '\\') out += '\\';
                if (c == '\n') {
                    out += "\\n";
                    continue;
                }
                out += c;
            }
            return out + "\"";
        }
        case TomlValue::Kind::Bool: return v.boolean ? "true" : "false";
        case TomlValue::Kind::Int: return std::to_string(v.integer);
        case TomlValue::Kind::Float: return fmt_double(v.real);
        case TomlValue::Kind::Array: {
            std::string out = "[";
            for (size_t i = 0; i < v.array.size(); ++i) {
                if (i) out += ", ";
                out += fmt_value(v.array[i]);
            }
            return out + "]";
        }
    }
    return "";
}

}  // namespace

TomlDoc parse_toml(const std::string& text) {
    TomlDoc doc;
    std::string table;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail_at(line_no, "unterminated table header");
            std::string name = trim(line.substr(1, line.size() - 2));
            if (!valid_key(name)) fail_at(line_no, "bad table name");
            if (doc.count(name)) fail_at(line_no, "duplicate table " + name);
            doc[name];
            table = name;
            continue;
        }
        size_t eq = std::string::npos;
        bool in_str = false;
        for (size_t i = 0; i < line.size() && eq == std::string::npos; ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '=' && !in_str) eq = i;
        }
        if (eq == std::string::npos) fail_at(line_no, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail_at(line_no, "bad key: " + key);
        if (table.empty()) fail_at(line_no, "key outside any table");
        if (doc[table].count(key)) fail_at(line_no, "duplicate key " + key);
        doc[table][key] = parse_value(line.substr(eq + 1), line_no);
    }
    return doc;
}

std::string serialize_toml(const TomlDoc& doc) {
    std::string out;
    bool first = true;
    for (const auto& [name, table] : doc) {
        if (!first) out += "\n";
        first = false;
        out += "[" + name + "]\n";
        for (const auto& [key, value] : table) out += key + " = " + fmt_value(value) + "\n";
    }
    return out;
}

const char* experiment_name(Experiment e) {
    switch (e) {
        case Experiment::Mu: return "mu";
        case Experiment::Tails: return "tails";
        case Experiment::Shells: return "shells";
        case Experiment::Regen: return "regen";
        case Experiment::DeviationSets: return "deviation-sets";
        case Experiment::HreSum: return "hre-sum";
        case Experiment::RadialSum: return "radial-sum";
        case Experiment::Lp: return "lp";
        case Experiment::PointToShape: return "point-to-shape";
        case Experiment::TubeSweep: return "tube-sweep";
        case Experiment::YRecords: return "y-records";
    }
    return "?";
}

Experiment experiment_from_name(const std::string& name) {
    for (Experiment e :
         {Experiment::Mu, Experiment::Tails, Experiment::Shells, Experiment::Regen,
          Experiment::DeviationSets, Experiment::HreSum, Experiment::RadialSum, Experiment::Lp,
          Experiment::PointToShape, Experiment::TubeSweep, Experiment::YRecords}) {
        if (name == experiment_name(e)) return e;
    }
    throw ConfigError("unknown experiment: " + name);
}

namespace {

bool needs_mu_ref(Experiment e) {
    switch (e) {
        case Experiment::Tails:
        case Experiment::DeviationSets:
        case Experiment::HreSum:
        case Experiment::RadialSum:
        case Experiment::Lp:
        case Experiment::PointToShape: return true;
        default: return false;
    }
}

const TomlTable& need_table(const TomlDoc& doc, const std::string& name) {
    auto it = doc.find(name);
    if (it == doc.end()) throw ConfigError("missing table [" + name + "]");
    return it->second;
}

void check_keys(const TomlTable& t, const std::string& name, std::set<std::string> allowed) {
    for (const auto& [k, v] : t) {
        (void)v;
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in [" + name + "]");
    }
}

const TomlValue* find(const TomlTable& t, const std::string& key) {
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

long long get_int(const TomlTable& t, const std::string& tab, const std::string& key) {
    const TomlValue* v = find(t, key);
    if (!v) throw ConfigError("missing key '" + key + "' in [" + tab + "]");
    if (v->kind != TomlValue::Kind::Int) throw ConfigError(key + " must be an integer");
    return v->integer;
}

long long get_int_or(const TomlTable& t, const std::string& key, long long dflt) {
    const TomlValue* v = find(t, key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::Int) throw ConfigError(key + " must be an integer");
    return v->integer;
}

double get_num(const TomlTable& t, const std::string& tab, const std::string& key) {
    const TomlValue* v = find(t, key);
    if (!v) throw ConfigError("missing key '" + key + "' in [" + tab + "]");
    return v->as_number();
}

double get_num_or(const TomlTable& t, const std::string& key, double dflt) {
    const TomlValue* v = find(t, key);
    return v ? v->as_number() : dflt;
}

bool get_bool_or(const TomlTable& t, const std::string& key, bool dflt) {
    const TomlValue* v = find(t, key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::Bool) throw ConfigError(key + " must be a boolean");
    return v->boolean;
}

std::string get_str(const TomlTable& t, const std::string& tab, const std::string& key) {
    const TomlValue* v = find(t, key);
    if (!v) throw ConfigError("missing key '" + key + "' in [" + tab + "]");
    if (v->kind != TomlValue::Kind::String) throw ConfigError(key + " must be a string");
    return v->str;
}

std::string get_str_or(const TomlTable& t, const std::string& key, const std::string& dflt) {
    const TomlValue* v = find(t, key);
    if (!v) return dflt;
    if (v->kind != TomlValue::Kind::String) throw ConfigError(key + " must be a string");
    return v->str;
}

std::vector<long long> get_int_array(const TomlTable& t, const std::string& tab,
                                     const std::string& key) {
    const TomlValue* v = find(t, key);
    if (!v) throw ConfigError("missing key '" + key + "' in [" + tab + "]");
    if (v->kind != TomlValue::Kind::Array) throw ConfigError(key + " must be an array");
    std::vector<long long> out;
    for (const auto& e : v->array) {
        if (e.kind != TomlValue::Kind::Int) throw ConfigError(key + " must hold integers");
        out.push_back(e.integer);
    }
    return out;
}

std::vector<double> get_num_array(const TomlTable& t, const std::string& tab,
                                  const std::string& key) {
    const TomlValue* v = find(t, key);
    if (!v) throw ConfigError("missing key '" + key + "' in [" + tab + "]");
    if (v->kind != TomlValue::Kind::Array) throw ConfigError(key + " must be an array");
    std::vector<double> out;
    for (const auto& e : v->array) out.push_back(e.as_number());
    return out;
}

Point get_point(const TomlTable& t, const std::string& tab, const std::string& key, int dim) {
    std::vector<long long> cs = get_int_array(t, tab, key);
    if (static_cast<int>(cs.size()) != dim)
        throw ConfigError(key + " must have exactly " + std::to_string(dim) + " coordinates");
    Point p = zero_point(dim);
    for (int i = 0; i < dim; ++i) {
        if (cs[i] < -1000000 || cs[i] > 1000000) throw ConfigError(key + " coordinate too large");
        p.c[i] = static_cast<int>(cs[i]);
    }
    return p;
}

MuEstimator estimator_from(const std::string& s) {
    if (s == "auto") return MuEstimator::Auto;
    if (s == "mean") return MuEstimator::Mean;
    if (s == "median") return MuEstimator::Median;
    throw ConfigError("estimator must be auto, mean, or median");
}

const char* estimator_name(MuEstimator e) {
    switch (e) {
        case MuEstimator::Auto: return "auto";
        case MuEstimator::Mean: return "mean";
        case MuEstimator::Median: return "median";
    }
    return "?";
}

TomlValue point_value(const Point& p) {
    std::vector<TomlValue> cs;
    for (int i = 0; i < p.dim; ++i) cs.push_back(TomlValue::of_int(p.c[i]));
    return TomlValue::of_array(std::move(cs));
}

TomlValue int_array_value(const std::vector<long long>& xs) {
    std::vector<TomlValue> vs;
    for (long long x : xs) vs.push_back(TomlValue::of_int(x));
    return TomlValue::of_array(std::move(vs));
}

TomlValue num_array_value(const std::vector<double>& xs) {
    std::vector<TomlValue> vs;
    for (double x : xs) vs.push_back(TomlValue::of_float(x));
    return TomlValue::of_array(std::move(vs));
}

}  // namespace

ExperimentConfig ExperimentConfig::from_toml(const TomlDoc& doc) {
    ExperimentConfig cfg;

    const TomlTable& run = need_table(doc, "run");
    check_keys(run, "run", {"experiment", "dimension", "master_seed", "replicas", "window_radius"});
    cfg.experiment = experiment_from_name(get_str(run, "run", "experiment"));
    cfg.dimension = static_cast<int>(get_int(run, "run", "dimension"));
    if (cfg.dimension < 2 || cfg.dimension > kMaxDim)
        throw ConfigError("dimension must be 2, 3 or 4, got " + std::to_string(cfg.dimension));
    long long seed = get_int(run, "run", "master_seed");
    if (seed < 0) throw ConfigError("master_seed must be nonnegative");
    cfg.master_seed = static_cast<uint64_t>(seed);
    cfg.replicas = static_cast<int>(get_int(run, "run", "replicas"));
    cfg.window_radius = get_int_or(run, "window_radius", 30);

    const TomlTable& dist = need_table(doc, "distribution");
    check_keys(dist, "distribution", {"kind", "value", "rate", "p0", "a"});
    std::string kind = get_str(dist, "distribution", "kind");
    if (kind == "deterministic") {
        cfg.dist = DistributionSpec::deterministic(get_num_or(dist, "value", 1.0));
    } else if (kind == "uniform") {
        cfg.dist = DistributionSpec::uniform01();
    } else if (kind == "exponential") {
        cfg.dist = DistributionSpec::exponential(get_num_or(dist, "rate", 1.0));
    } else if (kind == "bernoulli") {
        cfg.dist = DistributionSpec::bernoulli(get_num(dist, "distribution", "p0"));
    } else if (kind == "pareto") {
        cfg.dist = DistributionSpec::pareto(get_num(dist, "distribution", "a"));
    } else {
        throw ConfigError("unknown distribution kind: " + kind);
    }

    std::set<std::string> expected = {"run", "distribution", experiment_name(cfg.experiment)};
    if (needs_mu_ref(cfg.experiment)) expected.insert("mu_ref");
    for (const auto& [name, table] : doc) {
        (void)table;
        if (!expected.count(name)) throw ConfigError("unexpected table [" + name + "]");
    }

    if (needs_mu_ref(cfg.experiment)) {
        TomlTable empty;
        const TomlTable& mt = doc.count("mu_ref") ? doc.at("mu_ref") : empty;
        check_keys(mt, "mu_ref",
                   {"mode", "unit_cost", "fan_n", "n_est", "fan_replicas", "estimator"});
        std::string mode = get_str_or(mt, "mode", "auto");
        if (mode == "auto")
            cfg.mu_ref.mode = MuRefMode::Auto;
        else if (mode == "exact")
            cfg.mu_ref.mode = MuRefMode::Exact;
        else if (mode == "fan")
            cfg.mu_ref.mode = MuRefMode::Fan;
        else
            throw ConfigError("mu_ref mode must be auto, exact, or fan");
        cfg.mu_ref.unit_cost = get_num_or(mt, "unit_cost", 1.0);
        cfg.mu_ref.fan_n = static_cast<int>(get_int_or(mt, "fan_n", 8));
        cfg.mu_ref.n_est = get_int_or(mt, "n_est", 8);
        cfg.mu_ref.fan_replicas = static_cast<int>(get_int_or(mt, "fan_replicas", 200));
        cfg.mu_ref.estimator = estimator_from(get_str_or(mt, "estimator", "auto"));
    }

    const std::string ename = experiment_name(cfg.experiment);
    const TomlTable& et = need_table(doc, ename);
    switch (cfg.experiment) {
        case Experiment::Mu:
            check_keys(et, ename, {"z", "n_grid", "estimator"});
            cfg.mu_z = get_point(et, ename, "z", cfg.dimension);
            cfg.mu_n_grid = get_int_array(et, ename, "n_grid");
            cfg.mu_estimator = estimator_from(get_str_or(et, "estimator", "auto"));
            break;
        case Experiment::Tails: {
            check_keys(et, ename, {"z", "eps", "side", "x_grid"});
            cfg.tails_z = get_point(et, ename, "z", cfg.dimension);
            cfg.tails_eps = get_num(et, ename, "eps");
            std::string side = get_str(et, ename, "side");
            if (side == "below")
                cfg.tails_above = false;
            else if (side == "above")
                cfg.tails_above = true;
            else
                throw ConfigError("side must be below or above");
            cfg.tails_x_grid = get_num_array(et, ename, "x_grid");
            break;
        }
        case Experiment::Shells:
            check_keys(et, ename, {"z", "delta", "pair_count", "pair_a", "pair_b"});
            cfg.shells_z = et.count("z") ? get_point(et, ename, "z", cfg.dimension)
                                         : zero_point(cfg.dimension);
            cfg.shells_delta = get_num(et, ename, "delta");
            cfg.shells_pair_count = static_cast<int>(get_int_or(et, "pair_count", 0));
            if (cfg.shells_pair_count > 0) {
                cfg.shells_pair_a = get_point(et, ename, "pair_a", cfg.dimension);
                cfg.shells_pair_b = get_point(et, ename, "pair_b", cfg.dimension);
            } else {
                cfg.shells_pair_a = zero_point(cfg.dimension);
                cfg.shells_pair_b = zero_point(cfg.dimension);
            }
            break;
        case Experiment::Regen:
            check_keys(et, ename,
                       {"z", "r", "tbar_quantile", "m_max", "segments", "cylinder_time"});
            cfg.regen_z = get_point(et, ename, "z", cfg.dimension);
            cfg.regen_r = Rat64::from_double(get_num(et, ename, "r"), 1000);
            cfg.regen_tbar_quantile = get_num(et, ename, "tbar_quantile");
            cfg.regen_m_max = get_int(et, ename, "m_max");
            cfg.regen_segments = get_bool_or(et, "segments", false);
            cfg.regen_cylinder_time = get_bool_or(et, "cylinder_time", false);
            break;
        case Experiment::DeviationSets:
            check_keys(et, ename, {"eps", "radii"});
            cfg.dev_eps = get_num(et, ename, "eps");
            cfg.dev_radii = et.count("radii") ? get_int_array(et, ename, "radii")
                                              : std::vector<long long>{cfg.window_radius};
            break;
        case Experiment::HreSum:
            check_keys(et, ename, {"alpha", "eps", "radii", "comparison_m", "ratio_threshold"});
            cfg.hre_alpha = get_num(et, ename, "alpha");
            cfg.hre_eps = get_num(et, ename, "eps");
            cfg.hre_radii = et.count("radii") ? get_int_array(et, ename, "radii")
                                              : std::vector<long long>{cfg.window_radius};
            cfg.hre_comparison_m = get_num_or(et, "comparison_m", 1.0);
            cfg.hre_ratio_threshold = get_num_or(et, "ratio_threshold", 0.9);
            break;
        case Experiment::RadialSum:
            check_keys(et, ename, {"z", "alpha", "eps", "n_max", "comparison_m",
                                   "ratio_threshold"});
            cfg.radial_z = get_point(et, ename, "z", cfg.dimension);
            cfg.radial_alpha = get_num(et, ename, "alpha");
            cfg.radial_eps = get_num(et, ename, "eps");
            cfg.radial_n_max = get_int(et, ename, "n_max");
            cfg.radial_comparison_m = get_num_or(et, "comparison_m", 1.0);
            cfg.radial_ratio_threshold = get_num_or(et, "ratio_threshold", 0.9);
            break;
        case Experiment::Lp:
            check_keys(et, ename, {"p", "z", "n_grid"});
            cfg.lp_p = get_num(et, ename, "p");
            cfg.lp_z = get_point(et, ename, "z", cfg.dimension);
            cfg.lp_n_grid = get_int_array(et, ename, "n_grid");
            break;
        case Experiment::PointToShape:
            check_keys(et, ename, {"n_grid"});
            cfg.shape_n_grid = get_int_array(et, ename, "n_grid");
            break;
        case Experiment::TubeSweep: {
            check_keys(et, ename, {"z", "radii", "tbar_quantile", "n_levels"});
            cfg.tube_z = get_point(et, ename, "z", cfg.dimension);
            for (double r : get_num_array(et, ename, "radii"))
                cfg.tube_radii.push_back(Rat64::from_double(r, 1000));
            cfg.tube_tbar_quantile = get_num(et, ename, "tbar_quantile");
            cfg.tube_n_levels = get_int_or(et, "n_levels", 20);
            break;
        }
        case Experiment::YRecords:
            check_keys(et, ename, {"beta"});
            cfg.yrec_beta = get_num(et, ename, "beta");
            break;
    }

    cfg.validate();
    return cfg;
}

TomlDoc ExperimentConfig::to_toml() const {
    TomlDoc doc;
    TomlTable& run = doc["run"];
    run["experiment"] = TomlValue::of_string(experiment_name(experiment));
    run["dimension"] = TomlValue::of_int(dimension);
    run["master_seed"] = TomlValue::of_int(static_cast<long long>(master_seed));
    run["replicas"] = TomlValue::of_int(replicas);
    run["window_radius"] = TomlValue::of_int(window_radius);

    TomlTable& dt = doc["distribution"];
    switch (dist.kind) {
        case DistKind::Deterministic:
            dt["kind"] = TomlValue::of_string("deterministic");
            dt["value"] = TomlValue::of_float(dist.value);
            break;
        case DistKind::Uniform: dt["kind"] = TomlValue::of_string("uniform"); break;
        case DistKind::Exponential:
            dt["kind"] = TomlValue::of_string("exponential");
            dt["rate"] = TomlValue::of_float(dist.rate);
            break;
        case DistKind::Bernoulli:
            dt["kind"] = TomlValue::of_string("bernoulli");
            dt["p0"] = TomlValue::of_float(dist.p0);
            break;
        case DistKind::Pareto:
            dt["kind"] = TomlValue::of_string("pareto");
            dt["a"] = TomlValue::of_float(dist.a);
            break;
    }

    if (needs_mu_ref(experiment)) {
        TomlTable& mt = doc["mu_ref"];
        mt["mode"] = TomlValue::of_string(mu_ref.mode == MuRefMode::Auto    ? "auto"
                                          : mu_ref.mode == MuRefMode::Exact ? "exact"
                                                                            : "fan");
        mt["unit_cost"] = TomlValue::of_float(mu_ref.unit_cost);
        mt["fan_n"] = TomlValue::of_int(mu_ref.fan_n);
        mt["n_est"] = TomlValue::of_int(mu_ref.n_est);
        mt["fan_replicas"] = TomlValue::of_int(mu_ref.fan_replicas);
        mt["estimator"] = TomlValue::of_string(estimator_name(mu_ref.estimator));
    }

    TomlTable& et = doc[experiment_name(experiment)];
    switch (experiment) {
        case Experiment::Mu:
            et["z"] = point_value(mu_z);
            et["n_grid"] = int_array_value(mu_n_grid);
            et["estimator"] = TomlValue::of_string(estimator_name(mu_estimator));
            break;
        case Experiment::Tails:
            et["z"] = point_value(tails_z);
            et["eps"] = TomlValue::of_float(tails_eps);
            et["side"] = TomlValue::of_string(tails_above ? "above" : "below");
            et["x_grid"] = num_array_value(tails_x_grid);
            break;
        case Experiment::Shells:
            et["z"] = point_value(shells_z);
            et["delta"] = TomlValue::of_float(shells_delta);
            et["pair_count"] = TomlValue::of_int(shells_pair_count);
            if (shells_pair_count > 0) {
                et["pair_a"] = point_value(shells_pair_a);
                et["pair_b"] = point_value(shells_pair_b);
            }
            break;
        case Experiment::Regen:
            et["z"] = point_value(regen_z);
            et["r"] = TomlValue::of_float(regen_r.to_double());
            et["tbar_quantile"] = TomlValue::of_float(regen_tbar_quantile);
            et["m_max"] = TomlValue::of_int(regen_m_max);
            et["segments"] = TomlValue::of_bool(regen_segments);
            et["cylinder_time"] = TomlValue::of_bool(regen_cylinder_time);
            break;
        case Experiment::DeviationSets:
            et["eps"] = TomlValue::of_float(dev_eps);
            et["radii"] = int_array_value(dev_radii);
            break;
        case Experiment::HreSum:
            et["alpha"] = TomlValue::of_float(hre_alpha);
            et["eps"] = TomlValue::of_float(hre_eps);
            et["radii"] = int_array_value(hre_radii);
            et["comparison_m"] = TomlValue::of_float(hre_comparison_m);
            et["ratio_threshold"] = TomlValue::of_float(hre_ratio_threshold);
            break;
        case Experiment::RadialSum:
            et["z"] = point_value(radial_z);
            et["alpha"] = TomlValue::of_float(radial_alpha);
            et["eps"] = TomlValue::of_float(radial_eps);
            et["n_max"] = TomlValue::of_int(radial_n_max);
            et["comparison_m"] = TomlValue::of_float(radial_comparison_m);
            et["ratio_threshold"] = TomlValue::of_float(radial_ratio_threshold);
            break;
        case Experiment::Lp:
            et["p"] = TomlValue::of_float(lp_p);
            et["z"] = point_value(lp_z);
            et["n_grid"] = int_array_value(lp_n_grid);
            break;
        case Experiment::PointToShape: et["n_grid"] = int_array_value(shape_n_grid); break;
        case Experiment::TubeSweep: {
            et["z"] = point_value(tube_z);
            std::vector<double> rs;
            for (const Rat64& r : tube_radii) rs.push_back(r.to_double());
            et["radii"] = num_array_value(rs);
            et["tbar_quantile"] = TomlValue::of_float(tube_tbar_quantile);
            et["n_levels"] = TomlValue::of_int(tube_n_levels);
            break;
        }
        case Experiment::YRecords: et["beta"] = TomlValue::of_float(yrec_beta); break;
    }
    return doc;
}

void ExperimentConfig::validate() const {
    require_dim(dimension);
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (window_radius < 2) throw ConfigError("window_radius must be >= 2");
    try {
        dist.validate();
    } catch (const WeightError& e) {
        throw ConfigError(std::string("distribution: ") + e.what());
    }

    auto ascending = [](const std::vector<long long>& g, const char* what) {
        if (g.empty()) throw ConfigError(std::string(what) + " must not be empty");
        for (size_t i = 0; i < g.size(); ++i) {
            if (g[i] < 1) throw ConfigError(std::string(what) + " entries must be >= 1");
            if (i && g[i] <= g[i - 1]) throw ConfigError(std::string(what) + " must increase");
        }
    };
    auto nonzero = [](const Point& z, const char* what) {
        if (l1_norm(z) == 0) throw ConfigError(std::string(what) + ": z must be nonzero");
    };

    if (needs_mu_ref(experiment)) {
        if (mu_ref.fan_n < 1) throw ConfigError("mu_ref.fan_n must be >= 1");
        if (mu_ref.n_est < 1) throw ConfigError("mu_ref.n_est must be >= 1");
        if (mu_ref.fan_replicas < 30 && dist.kind != DistKind::Deterministic &&
            mu_ref.mode != MuRefMode::Exact)
            throw ConfigError("mu_ref.fan_replicas must be >= 30");
        if (mu_ref.mode == MuRefMode::Exact && mu_ref.unit_cost < 0)
            throw ConfigError("mu_ref.unit_cost must be >= 0");
    }

    switch (experiment) {
        case Experiment::Mu:
            nonzero(mu_z, "mu");
            ascending(mu_n_grid, "mu.n_grid");
            if (replicas < 30 && dist.kind != DistKind::Deterministic)
                throw ConfigError("mu needs replicas >= 30");
            break;
        case Experiment::Tails: {
            nonzero(tails_z, "tails");
            if (tails_eps <= 0) throw ConfigError("tails.eps must be positive");
            if (tails_x_grid.empty()) throw ConfigError("tails.x_grid must not be empty");
            double lo = double(l1_norm(tails_z));
            for (size_t i = 0; i < tails_x_grid.size(); ++i) {
                if (tails_x_grid[i] < lo)
                    throw ConfigError("tails.x_grid entries must be >= |z|_1");
                if (i && tails_x_grid[i] <= tails_x_grid[i - 1])
                    throw ConfigError("tails.x_grid must increase");
            }
            break;
        }
        case Experiment::Shells:
            if (shells_delta <= 0 || shells_delta >= 1)
                throw ConfigError("shells.delta must be in (0,1)");
            if (shells_pair_count < 0) throw ConfigError("shells.pair_count must be >= 0");
            if (shells_pair_count > 0 && shells_pair_a == shells_pair_b)
                throw ConfigError("shells.pair endpoints must differ");
            break;
        case Experiment::Regen:
            nonzero(regen_z, "regen");
            if (regen_tbar_quantile <= 0 || regen_tbar_quantile >= 1)
                throw ConfigError("regen.tbar_quantile must be in (0,1)");
            if (regen_m_max < 2) throw ConfigError("regen.m_max must be >= 2");
            if (regen_r.num <= 0) throw ConfigError("regen.r must be positive");
            break;
        case Experiment::DeviationSets:
            if (dev_eps <= 0 || dev_eps >= 1) throw ConfigError("eps must be in (0,1)");
            ascending(dev_radii, "deviation-sets.radii");
            break;
        case Experiment::HreSum:
            if (hre_alpha <= 0) throw ConfigError("hre-sum.alpha must be positive");
            if (hre_eps <= 0) throw ConfigError("hre-sum.eps must be positive");
            ascending(hre_radii, "hre-sum.radii");
            if (hre_ratio_threshold <= 0 || hre_ratio_threshold >= 1)
                throw ConfigError("hre-sum.ratio_threshold must be in (0,1)");
            break;
        case Experiment::RadialSum:
            nonzero(radial_z, "radial-sum");
            if (radial_alpha <= 0) throw ConfigError("radial-sum.alpha must be positive");
            if (radial_eps <= 0) throw ConfigError("radial-sum.eps must be positive");
            if (radial_n_max < 1) throw ConfigError("radial-sum.n_max must be >= 1");
            if (radial_ratio_threshold <= 0 || radial_ratio_threshold >= 1)
                throw ConfigError("radial-sum.ratio_threshold must be in (0,1)");
            break;
        case Experiment::Lp:
            nonzero(lp_z, "lp");
            if (lp_p <= 0) throw ConfigError("lp.p must be positive");
            ascending(lp_n_grid, "lp.n_grid");
            break;
        case Experiment::PointToShape: ascending(shape_n_grid, "point-to-shape.n_grid"); break;
        case Experiment::TubeSweep:
            nonzero(tube_z, "tube-sweep");
            if (tube_radii.empty()) throw ConfigError("tube-sweep.radii must not be empty");
            for (const Rat64& r : tube_radii)
                if (r.num <= 0) throw ConfigError("tube-sweep radii must be positive");
            if (tube_tbar_quantile <= 0 || tube_tbar_quantile >= 1)
                throw ConfigError("tube-sweep.tbar_quantile must be in (0,1)");
            if (tube_n_levels < 2) throw ConfigError("tube-sweep.n_levels must be >= 2");
            break;
        case Experiment::YRecords:
            if (yrec_beta <= 0) throw ConfigError("y-records.beta must be positive");
            break;
    }
}

bool ExperimentConfig::mergeable_with(const ExperimentConfig& o) const {
    TomlDoc a = to_toml(), b = o.to_toml();
    a["run"]["master_seed"] = TomlValue::of_int(0);
    b["run"]["master_seed"] = TomlValue::of_int(0);
    return serialize_toml(a) == serialize_toml(b);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return ExperimentConfig::from_toml(parse_toml(buf.str()));
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << serialize_toml(cfg.to_toml());
}

}  // namespace fpp
