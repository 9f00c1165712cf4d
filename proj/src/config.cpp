#include "dac/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "dac/linalg.hpp"

namespace dac {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::Dac: return "dac";
        case Scheme::SchemeS: return "scheme_s";
        case Scheme::SchemeT: return "scheme_t";
        case Scheme::SelfOnly: return "self_only";
    }
    return "dac";
}

std::string to_string(MmdKind m) {
    switch (m) {
        case MmdKind::Emmd: return "emmd";
        case MmdKind::Lmmd: return "lmmd";
        case MmdKind::None: return "none";
    }
    return "emmd";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "dac") return Scheme::Dac;
    if (s == "scheme_s") return Scheme::SchemeS;
    if (s == "scheme_t") return Scheme::SchemeT;
    if (s == "self_only") return Scheme::SelfOnly;
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

MmdKind mmd_from_string(const std::string& s) {
    if (s == "emmd") return MmdKind::Emmd;
    if (s == "lmmd") return MmdKind::Lmmd;
    if (s == "none") return MmdKind::None;
    throw std::invalid_argument("unknown mmd_kind '" + s + "'");
}

namespace {

struct KeyHandler {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

double parse_double(const std::string& v) {
    const char* b = v.c_str();
    char* e = nullptr;
    double x = std::strtod(b, &e);
    if (e == b || *e != '\0') throw std::invalid_argument("expected a number, got '" + v + "'");
    return x;
}

long parse_int(const std::string& v) {
    const char* b = v.c_str();
    char* e = nullptr;
    long x = std::strtol(b, &e, 10);
    if (e == b || *e != '\0') throw std::invalid_argument("expected an integer, got '" + v + "'");
    return x;
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw std::invalid_argument("expected 0/1/true/false, got '" + v + "'");
}

#define DBL_KEY(name, field)                                                      \
    KeyHandler{name, [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }, \
               [](const RunConfig& c) { return fmt_g17(c.field); }}
#define INT_KEY(name, field)                                                      \
    KeyHandler{name, [](RunConfig& c, const std::string& v) { c.field = static_cast<int>(parse_int(v)); }, \
               [](const RunConfig& c) { return std::to_string(c.field); }}
#define BOOL_KEY(name, field)                                                     \
    KeyHandler{name, [](RunConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
               [](const RunConfig& c) { return c.field ? std::string("1") : std::string("0"); }}

const std::vector<KeyHandler>& handlers() {
    static const std::vector<KeyHandler> h = {
        // adaptation
        DBL_KEY("tau_c", adapt.tau_c),
        DBL_KEY("alpha", adapt.alpha),
        DBL_KEY("beta", adapt.beta),
        INT_KEY("K", adapt.K),
        DBL_KEY("m", adapt.m),
        DBL_KEY("tau", adapt.tau),
        DBL_KEY("omega", adapt.omega),
        DBL_KEY("lr0", adapt.lr0),
        DBL_KEY("momentum_sgd", adapt.momentum_sgd),
        DBL_KEY("weight_decay", adapt.weight_decay),
        INT_KEY("batch_size", adapt.batch_size),
        INT_KEY("epochs", adapt.epochs),
        INT_KEY("warmup_epochs", adapt.warmup_epochs),
        KeyHandler{"seed",
                   [](RunConfig& c, const std::string& v) {
                       c.adapt.seed = static_cast<uint64_t>(parse_int(v));
                   },
                   [](const RunConfig& c) { return std::to_string(c.adapt.seed); }},
        KeyHandler{"scheme",
                   [](RunConfig& c, const std::string& v) { c.adapt.scheme = scheme_from_string(v); },
                   [](const RunConfig& c) { return to_string(c.adapt.scheme); }},
        KeyHandler{"mmd_kind",
                   [](RunConfig& c, const std::string& v) { c.adapt.mmd_kind = mmd_from_string(v); },
                   [](const RunConfig& c) { return to_string(c.adapt.mmd_kind); }},
        DBL_KEY("lr_exponent", adapt.lr_exponent),
        DBL_KEY("lr_factor", adapt.lr_factor),
        INT_KEY("lr_drop_epoch", adapt.lr_drop_epoch),
        BOOL_KEY("renorm_bank", adapt.renorm_bank),
        BOOL_KEY("renorm_centroids", adapt.renorm_centroids),
        // augmentation policy
        DBL_KEY("sigma_weak", adapt.policy.sigma_weak),
        DBL_KEY("sigma_strong", adapt.policy.sigma_strong),
        DBL_KEY("dropout_prob", adapt.policy.dropout_prob),
        DBL_KEY("scale_jitter", adapt.policy.scale_jitter),
        DBL_KEY("radius_r", adapt.policy.radius_r),
        // model sizes
        INT_KEY("hidden", source.hidden),
        INT_KEY("bottleneck", source.bottleneck),
        // source training
        DBL_KEY("source_lr0", source.lr0),
        INT_KEY("source_epochs", source.epochs),
        INT_KEY("source_batch_size", source.batch_size),
        DBL_KEY("source_holdout", source.holdout),
        DBL_KEY("source_acc_floor", source.acc_floor),
        DBL_KEY("source_smoothing", source.smoothing),
        DBL_KEY("source_weight_decay", source.weight_decay),
        // analysis
        INT_KEY("n_aug", n_aug),
        INT_KEY("n_pairs", n_pairs),
        // outputs
        BOOL_KEY("dump_features", dump_features),
    };
    return h;
}

#undef DBL_KEY
#undef INT_KEY
#undef BOOL_KEY

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(lineno, "expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw ConfigError(lineno, "duplicate key '" + key + "'");
        bool found = false;
        for (const auto& h : handlers()) {
            if (key == h.key) {
                try {
                    h.set(cfg, val);
                } catch (const std::exception& e) {
                    throw ConfigError(lineno, std::string(e.what()));
                }
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError(lineno, "unknown key '" + key + "'");
    }
    try {
        validate_policy(cfg.adapt.policy);
    } catch (const std::exception& e) {
        throw ConfigError(lineno, std::string(e.what()));
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    for (const auto& h : handlers()) out << h.key << "=" << h.get(cfg) << "\n";
    return out.str();
}

}  // namespace dac
