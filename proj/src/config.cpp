#include "mimo/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mimo/errors.hpp"

namespace mimo {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// strips a # comment that is not inside a quoted string
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        else if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

TomlValue parse_scalar(const std::string& raw, int line) {
    TomlValue v;
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
        v.kind = TomlValue::Kind::Str;
        v.str = raw.substr(1, raw.size() - 2);
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = TomlValue::Kind::Bool;
        v.b = raw == "true";
        return v;
    }
    try {
        size_t used = 0;
        // integer candidates have no exponent or decimal point
        if (raw.find_first_of(".eE") == std::string::npos) {
            v.i = std::stoll(raw, &used);
            if (used != raw.size()) fail(line, "trailing characters in number '" + raw + "'");
            v.kind = TomlValue::Kind::Num;
            v.is_int = true;
            v.num = static_cast<double>(v.i);
            return v;
        }
        v.num = std::stod(raw, &used);
        if (used != raw.size()) fail(line, "trailing characters in number '" + raw + "'");
        v.kind = TomlValue::Kind::Num;
        return v;
    } catch (const std::invalid_argument&) {
        fail(line, "cannot parse value '" + raw + "'");
    } catch (const std::out_of_range&) {
        fail(line, "number out of range '" + raw + "'");
    }
}

TomlValue parse_value(const std::string& raw, int line) {
    if (!raw.empty() && raw.front() == '[') {
        if (raw.back() != ']') fail(line, "unterminated array");
        TomlValue v;
        v.kind = TomlValue::Kind::Arr;
        const std::string inner = trim(raw.substr(1, raw.size() - 2));
        if (inner.empty()) return v;
        size_t start = 0;
        bool in_str = false;
        for (size_t i = 0; i <= inner.size(); ++i) {
            if (i < inner.size() && inner[i] == '"') in_str = !in_str;
            if (i == inner.size() || (inner[i] == ',' && !in_str)) {
                const std::string item = trim(inner.substr(start, i - start));
                if (item.empty()) fail(line, "empty array element");
                v.arr.push_back(parse_scalar(item, line));
                start = i + 1;
            }
        }
        return v;
    }
    return parse_scalar(raw, line);
}

} // namespace

TomlDoc parse_toml(const std::string& text) {
    TomlDoc doc;
    TomlTable* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line.size() >= 4 && line.substr(0, 2) == "[[" && line.substr(line.size() - 2) == "]]") {
            const std::string name = trim(line.substr(2, line.size() - 4));
            if (!valid_key(name)) fail(lineno, "bad table name '" + name + "'");
            doc.table_arrays[name].emplace_back();
            current = &doc.table_arrays[name].back();
            continue;
        }
        if (line.front() == '[' && line.back() == ']') {
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (!valid_key(name)) fail(lineno, "bad table name '" + name + "'");
            current = &doc.tables[name];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) fail(lineno, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail(lineno, "bad key '" + key + "'");
        if (!current) fail(lineno, "key outside any [section]");
        (*current)[key] = parse_value(trim(line.substr(eq + 1)), lineno);
    }
    return doc;
}

TomlDoc parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_toml(ss.str());
}

namespace {

const TomlValue* find(const TomlTable& t, const std::string& key) {
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

long long get_int(const TomlTable& t, const std::string& sec, const std::string& key,
                  long long fallback, bool required = false) {
    const TomlValue* v = find(t, key);
    if (!v) {
        if (required) throw ConfigError("[" + sec + "] missing required key '" + key + "'");
        return fallback;
    }
    if (v->kind != TomlValue::Kind::Num || !v->is_int)
        throw ConfigError("[" + sec + "] key '" + key + "' must be an integer");
    return v->i;
}

double get_num(const TomlTable& t, const std::string& sec, const std::string& key,
               double fallback, bool required = false) {
    const TomlValue* v = find(t, key);
    if (!v) {
        if (required) throw ConfigError("[" + sec + "] missing required key '" + key + "'");
        return fallback;
    }
    if (v->kind != TomlValue::Kind::Num)
        throw ConfigError("[" + sec + "] key '" + key + "' must be a number");
    return v->num;
}

std::string get_str(const TomlTable& t, const std::string& sec, const std::string& key,
                    const std::string& fallback, bool required = false) {
    const TomlValue* v = find(t, key);
    if (!v) {
        if (required) throw ConfigError("[" + sec + "] missing required key '" + key + "'");
        return fallback;
    }
    if (v->kind != TomlValue::Kind::Str)
        throw ConfigError("[" + sec + "] key '" + key + "' must be a string");
    return v->str;
}

bool get_bool(const TomlTable& t, const std::string& sec, const std::string& key, bool fallback) {
    const TomlValue* v = find(t, key);
    if (!v) return fallback;
    if (v->kind != TomlValue::Kind::Bool)
        throw ConfigError("[" + sec + "] key '" + key + "' must be a boolean");
    return v->b;
}

const TomlTable& table_or_empty(const TomlDoc& doc, const std::string& name) {
    static const TomlTable empty;
    auto it = doc.tables.find(name);
    return it == doc.tables.end() ? empty : it->second;
}

ScenarioConfig scenario_from(const TomlDoc& doc) {
    const TomlTable& sys = table_or_empty(doc, "system");
    const TomlTable& ch = table_or_empty(doc, "channel");
    const TomlTable& mod = table_or_empty(doc, "modulation");

    ScenarioConfig sc;
    sc.sys.M = static_cast<int>(get_int(sys, "system", "M", 8));
    sc.sys.K = static_cast<int>(get_int(sys, "system", "K", 4));
    sc.sys.L = static_cast<int>(get_int(sys, "system", "L", 10));
    sc.sys.Lp = static_cast<int>(get_int(sys, "system", "L_P", sc.sys.K));
    sc.sys.N = static_cast<int>(get_int(sys, "system", "N", 4));
    sc.snr_db = get_num(sys, "system", "snr_db", 15.0);

    sc.rho_t = get_num(ch, "channel", "rho_t", 0.3);
    sc.rho_r = get_num(ch, "channel", "rho_r", 0.7);
    if (const TomlValue* rt = find(ch, "rho_time")) {
        if (rt->kind == TomlValue::Kind::Num) {
            sc.rho_time = RVec::Constant(sc.sys.K, rt->num);
        } else if (rt->kind == TomlValue::Kind::Arr) {
            sc.rho_time = RVec(static_cast<int>(rt->arr.size()));
            for (size_t i = 0; i < rt->arr.size(); ++i) {
                if (rt->arr[i].kind != TomlValue::Kind::Num)
                    throw ConfigError("[channel] rho_time entries must be numbers");
                sc.rho_time(static_cast<int>(i)) = rt->arr[i].num;
            }
        } else {
            throw ConfigError("[channel] rho_time must be a number or an array");
        }
    } else {
        sc.rho_time = RVec::Constant(sc.sys.K, 0.99);
    }

    sc.mod_order = static_cast<int>(get_int(mod, "modulation", "Q", 1));
    return sc;
}

} // namespace

void ExperimentConfig::validate() const {
    scenario.sys.validate();
    if (scenario.rho_time.size() != scenario.sys.K)
        throw ConfigError("rho_time must carry one entry per user");
    if (csi_method != "lmmse" && csi_method != "rdakf" && csi_method != "perfect")
        throw ConfigError("csi method must be lmmse, rdakf, or perfect");
    if (snr_db.empty()) throw ConfigError("sweep: need at least one SNR point");
    if (blocks.empty()) throw ConfigError("sweep: need at least one block index");
    for (int b : blocks)
        if (b < 1 || b > scenario.sys.N + 1)
            throw ConfigError("sweep: block " + std::to_string(b) + " outside the frame");
    if (min_symbol_errors < 100)
        throw ConfigError("mc: min_symbol_errors must be >= 100");
    if (max_trials < 1) throw ConfigError("mc: max_trials must be >= 1");
    if (threads < 1) throw ConfigError("mc: threads must be >= 1");
    for (const DetectorSpec& d : detectors) {
        if (d.kind != "mismatched_mmse" && d.kind != "robust_mmse" && d.kind != "mismatched_ml" &&
            d.kind != "robust_ml" && d.kind != "radmm" && d.kind != "radmmnet" &&
            d.kind != "lcradmm" && d.kind != "lcradmmnet")
            throw ConfigError("unknown detector kind '" + d.kind + "'");
        if (!d.params_file.empty() && d.kind != "radmmnet" && d.kind != "lcradmmnet")
            throw ConfigError("params files apply only to the unfolded detectors");
        if (d.iters < 0) throw ConfigError("detector iters must be >= 0");
    }
}

ExperimentConfig experiment_from_toml(const TomlDoc& doc) {
    ExperimentConfig cfg;
    cfg.scenario = scenario_from(doc);

    const TomlTable& csi = table_or_empty(doc, "csi");
    cfg.csi_method = get_str(csi, "csi", "method", "lmmse");

    auto det_it = doc.table_arrays.find("detectors");
    if (det_it != doc.table_arrays.end()) {
        for (const TomlTable& t : det_it->second) {
            DetectorSpec d;
            d.kind = get_str(t, "detectors", "kind", "", true);
            d.label = get_str(t, "detectors", "label", d.kind);
            d.iters = static_cast<int>(get_int(t, "detectors", "iters", 0));
            d.params_file = get_str(t, "detectors", "params", "");
            cfg.detectors.push_back(std::move(d));
        }
    }

    const TomlTable& sweep = table_or_empty(doc, "sweep");
    if (const TomlValue* v = find(sweep, "snr_db")) {
        if (v->kind != TomlValue::Kind::Arr) throw ConfigError("[sweep] snr_db must be an array");
        for (const TomlValue& e : v->arr) {
            if (e.kind != TomlValue::Kind::Num) throw ConfigError("[sweep] snr_db entries must be numbers");
            cfg.snr_db.push_back(e.num);
        }
    } else {
        cfg.snr_db.push_back(cfg.scenario.snr_db);
    }
    if (const TomlValue* v = find(sweep, "blocks")) {
        if (v->kind != TomlValue::Kind::Arr) throw ConfigError("[sweep] blocks must be an array");
        for (const TomlValue& e : v->arr) {
            if (e.kind != TomlValue::Kind::Num || !e.is_int)
                throw ConfigError("[sweep] block entries must be integers");
            cfg.blocks.push_back(static_cast<int>(e.i));
        }
    } else {
        cfg.blocks.push_back(cfg.scenario.block);
    }

    const TomlTable& mc = table_or_empty(doc, "mc");
    cfg.min_symbol_errors = get_int(mc, "mc", "min_symbol_errors", 100);
    cfg.max_trials = get_int(mc, "mc", "max_trials", 1000000);
    cfg.master_seed = static_cast<uint64_t>(get_int(mc, "mc", "master_seed", 1));
    cfg.threads = static_cast<int>(get_int(mc, "mc", "threads", 1));
    cfg.timing = get_bool(mc, "mc", "timing", true);
    return cfg;
}

TrainJob train_job_from_toml(const TomlDoc& doc) {
    TrainJob job;
    job.scenario = scenario_from(doc);

    auto it = doc.tables.find("train");
    if (it == doc.tables.end()) throw ConfigError("train: missing [train] section");
    const TomlTable& t = it->second;

    const std::string net = get_str(t, "train", "network", "", true);
    if (net == "radmmnet") job.kind = NetworkKind::Radmm;
    else if (net == "lcradmmnet") job.kind = NetworkKind::Lc;
    else throw ConfigError("train: network must be radmmnet or lcradmmnet");

    job.scenario.snr_db = get_num(t, "train", "snr_db", job.scenario.snr_db);
    job.scenario.block = static_cast<int>(get_int(t, "train", "block", 5));

    TrainConfig& tc = job.train;
    tc.layers = static_cast<int>(get_int(t, "train", "layers", 10));
    tc.train_size = static_cast<int>(get_int(t, "train", "train_size", 2000));
    tc.val_size = static_cast<int>(get_int(t, "train", "val_size", 500));
    tc.batch = static_cast<int>(get_int(t, "train", "batch", 200));
    tc.phase1_step = get_num(t, "train", "phase1_step", 0.01);
    tc.phase2_step = get_num(t, "train", "phase2_step", 0.001);
    tc.phase1_epochs = static_cast<int>(get_int(t, "train", "phase1_epochs", 60));
    tc.phase2_epochs = static_cast<int>(get_int(t, "train", "phase2_epochs", 40));
    tc.patience = static_cast<int>(get_int(t, "train", "patience", 5));
    tc.spsa_c = get_num(t, "train", "spsa_c", 0.1);
    tc.seed = static_cast<uint64_t>(get_int(t, "train", "seed", 1));
    tc.train_w = get_bool(t, "train", "train_w", false);
    tc.cg_first = static_cast<int>(get_int(t, "train", "cg_first", 15));

    if (job.scenario.block < 1 || job.scenario.block > job.scenario.sys.N + 1)
        throw ConfigError("train: block outside the frame");
    return job;
}

} // namespace mimo
