#include "stgt/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "stgt/errors.hpp"
#include "stgt/gnn.hpp"
#include "stgt/rng.hpp"

namespace stgt {
namespace {

enum class KeyType { text, real, integer, unsigned_, boolean };

struct KeyInfo {
    KeyType type;
    const char* default_value;
};

const std::map<std::string, KeyInfo>& registry() {
    static const std::map<std::string, KeyInfo> reg = {
        {"synth.n", {KeyType::integer, "4000"}},
        {"synth.fraud_ratio", {KeyType::real, "0.3"}},
        {"synth.relations", {KeyType::text, "ip:900:25,mac:700:18"}},
        {"synth.n_continuous", {KeyType::integer, "6"}},
        {"synth.feature_noise", {KeyType::real, "1"}},
        {"synth.feature_shift", {KeyType::real, "0.4"}},
        {"synth.horizon", {KeyType::real, "2592000"}},
        {"synth.burst_window", {KeyType::real, "900"}},
        {"synth.burst_size", {KeyType::integer, "24"}},
        {"synth.spatial_signal_fraction", {KeyType::real, "0.65"}},
        {"synth.daily_phases", {KeyType::integer, "0"}},
        {"synth.seed", {KeyType::unsigned_, "1"}},
        {"ingest.clique_cap", {KeyType::integer, "100"}},
        {"ingest.seed", {KeyType::unsigned_, "1"}},
        {"ingest.connect_across_split", {KeyType::boolean, "true"}},
        {"ingest.downsample_ratio", {KeyType::real, "1"}},
        {"split.time_fraction", {KeyType::real, "0.7"}},
        {"split.boundary", {KeyType::integer, "0"}},
        {"temporal.enabled", {KeyType::boolean, "true"}},
        {"temporal.standard_sinusoid", {KeyType::boolean, "false"}},
        {"temporal.time_scale", {KeyType::real, "3600"}},
        {"gnn.layers", {KeyType::integer, "2"}},
        {"gnn.dim", {KeyType::integer, "32"}},
        {"gnn.aggr", {KeyType::text, "mean"}},
        {"gnn.relation_attention", {KeyType::boolean, "true"}},
        {"attn.enabled", {KeyType::boolean, "true"}},
        {"attn.heads", {KeyType::integer, "4"}},
        {"attn.ffn_mult", {KeyType::integer, "4"}},
        {"attn.max_nodes", {KeyType::integer, "20000"}},
        {"train.lr", {KeyType::real, "0.001"}},
        {"train.epochs", {KeyType::integer, "100"}},
        {"train.seed", {KeyType::unsigned_, "1"}},
        {"train.threshold", {KeyType::real, "0.5"}},
    };
    return reg;
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

const char* type_name(KeyType t) {
    switch (t) {
    case KeyType::text: return "text";
    case KeyType::real: return "a real number";
    case KeyType::integer: return "an integer";
    case KeyType::unsigned_: return "a nonnegative integer";
    case KeyType::boolean: return "true or false";
    }
    return "?";
}

/// Reparse and reprint so equivalent spellings ("1e3", "1000.0") store
/// identically and the config hash sees one canonical form.
std::string canonicalize(const std::string& key, KeyType type, const std::string& raw) {
    const std::string value = trim(raw);
    auto bad = [&]() -> ConfigError {
        return ConfigError("invalid value '" + value + "' for key '" + key + "' (expects " +
                           type_name(type) + ")");
    };
    switch (type) {
    case KeyType::text: {
        if (value.empty()) throw bad();
        if (key == "gnn.aggr") parse_aggr(value); // reject unknown aggregators here
        return value;
    }
    case KeyType::real: {
        double v = 0.0;
        auto res = std::from_chars(value.data(), value.data() + value.size(), v);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size()) throw bad();
        return format_double(v);
    }
    case KeyType::integer: {
        int64_t v = 0;
        auto res = std::from_chars(value.data(), value.data() + value.size(), v);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size()) throw bad();
        return std::to_string(v);
    }
    case KeyType::unsigned_: {
        uint64_t v = 0;
        auto res = std::from_chars(value.data(), value.data() + value.size(), v);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size()) throw bad();
        return std::to_string(v);
    }
    case KeyType::boolean: {
        if (value == "true" || value == "1") return "true";
        if (value == "false" || value == "0") return "false";
        throw bad();
    }
    }
    throw bad();
}

const KeyInfo& lookup(const std::string& key) {
    auto it = registry().find(key);
    if (it == registry().end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

} // namespace

RunConfig::RunConfig() {
    for (const auto& [key, info] : registry()) values_[key] = info.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const KeyInfo& info = lookup(key);
    values_[key] = canonicalize(key, info.type, value);
}

void RunConfig::set_pair(const std::string& pair) {
    size_t eq = pair.find('=');
    if (eq == std::string::npos)
        throw ConfigError("expected 'key=value', got '" + pair + "'");
    set(trim(pair.substr(0, eq)), pair.substr(eq + 1));
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + text + "'");
        try {
            set(trim(text.substr(0, eq)), text.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string RunConfig::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    if (lookup(key).type != KeyType::real)
        throw ConfigError("config key '" + key + "' is not a real number");
    const std::string v = get_string(key);
    double out = 0.0;
    std::from_chars(v.data(), v.data() + v.size(), out);
    return out;
}

int64_t RunConfig::get_i64(const std::string& key) const {
    if (lookup(key).type != KeyType::integer)
        throw ConfigError("config key '" + key + "' is not an integer");
    const std::string v = get_string(key);
    int64_t out = 0;
    std::from_chars(v.data(), v.data() + v.size(), out);
    return out;
}

int RunConfig::get_int(const std::string& key) const {
    int64_t v = get_i64(key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError("config key '" + key + "' is out of range for an int");
    return static_cast<int>(v);
}

uint64_t RunConfig::get_u64(const std::string& key) const {
    if (lookup(key).type != KeyType::unsigned_)
        throw ConfigError("config key '" + key + "' is not a nonnegative integer");
    const std::string v = get_string(key);
    uint64_t out = 0;
    std::from_chars(v.data(), v.data() + v.size(), out);
    return out;
}

bool RunConfig::get_bool(const std::string& key) const {
    if (lookup(key).type != KeyType::boolean)
        throw ConfigError("config key '" + key + "' is not a boolean");
    return get_string(key) == "true";
}

std::string RunConfig::resolved_text() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
    return out.str();
}

std::string RunConfig::hash() const {
    static const char* prefixes[] = {"temporal.", "gnn.", "attn.", "ingest.", "split."};
    std::string blob;
    for (const auto& [key, value] : values_) {
        bool in_scope = key == "train.seed";
        for (const char* p : prefixes)
            if (key.rfind(p, 0) == 0) in_scope = true;
        if (in_scope) blob += key + "=" + value + "\n";
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(blob));
    return std::string(buf);
}

SynthConfig RunConfig::synth_config() const {
    SynthConfig cfg;
    cfg.n_transactions = get_int("synth.n");
    cfg.fraud_ratio = get_double("synth.fraud_ratio");
    cfg.relations = parse_relation_specs(get_string("synth.relations"));
    cfg.n_continuous = get_int("synth.n_continuous");
    cfg.feature_noise = get_double("synth.feature_noise");
    cfg.feature_shift = get_double("synth.feature_shift");
    cfg.horizon = get_double("synth.horizon");
    cfg.burst_window = get_double("synth.burst_window");
    cfg.burst_size = get_int("synth.burst_size");
    cfg.spatial_signal_fraction = get_double("synth.spatial_signal_fraction");
    cfg.daily_phases = get_int("synth.daily_phases");
    cfg.seed = get_u64("synth.seed");
    return cfg;
}

GraphBuildOptions RunConfig::graph_options() const {
    GraphBuildOptions opts;
    opts.clique_cap = get_int("ingest.clique_cap");
    opts.seed = get_u64("ingest.seed");
    opts.connect_across_split = get_bool("ingest.connect_across_split");
    return opts;
}

double RunConfig::downsample_ratio() const { return get_double("ingest.downsample_ratio"); }

ModelConfig RunConfig::model_config(int feature_dim, int relations) const {
    ModelConfig cfg;
    cfg.feature_dim = feature_dim;
    cfg.relations = relations;
    cfg.layers = get_int("gnn.layers");
    cfg.dim = get_int("gnn.dim");
    cfg.heads = get_int("attn.heads");
    cfg.ffn_mult = get_int("attn.ffn_mult");
    cfg.max_nodes = get_int("attn.max_nodes");
    cfg.temporal_enabled = get_bool("temporal.enabled");
    cfg.standard_sinusoid = get_bool("temporal.standard_sinusoid");
    cfg.transformer_enabled = get_bool("attn.enabled");
    cfg.relation_attention_enabled = get_bool("gnn.relation_attention");
    cfg.time_scale = get_double("temporal.time_scale");
    cfg.aggr = parse_aggr(get_string("gnn.aggr"));
    cfg.validate();
    return cfg;
}

TrainOptions RunConfig::train_options() const {
    TrainOptions opt;
    opt.epochs = get_int("train.epochs");
    opt.lr = get_double("train.lr");
    opt.seed = get_u64("train.seed");
    return opt;
}

double RunConfig::threshold() const { return get_double("train.threshold"); }

int64_t RunConfig::split_boundary(const std::vector<TransactionRecord>& records) const {
    int64_t fixed = get_i64("split.boundary");
    if (fixed != 0) return fixed;
    if (records.empty()) throw DataError("no records to derive a split boundary from");
    double fraction = get_double("split.time_fraction");
    if (!(fraction > 0.0) || !(fraction < 1.0))
        throw ConfigError("split.time_fraction must lie strictly between 0 and 1");
    std::vector<int64_t> ts;
    ts.reserve(records.size());
    for (const auto& r : records) ts.push_back(r.timestamp);
    std::sort(ts.begin(), ts.end());
    size_t k = static_cast<size_t>(fraction * static_cast<double>(ts.size()));
    if (k < 1) k = 1;
    if (k > ts.size() - 1) k = ts.size() - 1;
    return ts[k];
}

std::vector<RelationSpec> parse_relation_specs(const std::string& text) {
    std::vector<RelationSpec> specs;
    std::stringstream in(text);
    std::string chunk;
    while (std::getline(in, chunk, ',')) {
        chunk = trim(chunk);
        if (chunk.empty())
            throw ConfigError("empty relation spec in '" + text + "'");
        auto bad = [&]() -> ConfigError {
            return ConfigError("relation spec '" + chunk + "' must be name:entities:pool");
        };
        size_t c1 = chunk.find(':');
        if (c1 == std::string::npos) throw bad();
        size_t c2 = chunk.find(':', c1 + 1);
        if (c2 == std::string::npos || chunk.find(':', c2 + 1) != std::string::npos) throw bad();
        RelationSpec spec;
        spec.name = trim(chunk.substr(0, c1));
        if (spec.name.empty()) throw bad();
        auto parse_int = [&](const std::string& part) {
            const std::string p = trim(part);
            int v = 0;
            auto res = std::from_chars(p.data(), p.data() + p.size(), v);
            if (res.ec != std::errc() || res.ptr != p.data() + p.size()) throw bad();
            return v;
        };
        spec.n_entities = parse_int(chunk.substr(c1 + 1, c2 - c1 - 1));
        spec.fraud_pool = parse_int(chunk.substr(c2 + 1));
        specs.push_back(std::move(spec));
    }
    if (specs.empty()) throw ConfigError("no relation specs in '" + text + "'");
    return specs;
}

} // namespace stgt
