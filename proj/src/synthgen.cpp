#include "stgt/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "stgt/errors.hpp"
#include "stgt/metrics.hpp"
#include "stgt/rng.hpp"

namespace stgt {

namespace {

const char* const kChannels[] = {"app", "pos", "web"};

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw NumericError("cannot format value");
    return std::string(buf, ptr);
}

void check_cell(const std::string& value, const std::string& txn_id) {
    if (value.find_first_of(",\n\r\"") != std::string::npos) {
        throw DataError("record '" + txn_id + "' has a field containing a delimiter");
    }
}

double feature_shift_sign(int j) { return j % 2 == 0 ? 1.0 : -1.0; }

} // namespace

void SynthConfig::validate() const {
    if (n_transactions < 1) throw ConfigError("synth.n must be >= 1");
    if (!(fraud_ratio > 0.0 && fraud_ratio < 1.0)) {
        throw ConfigError("synth.fraud_ratio must lie strictly between 0 and 1");
    }
    if (relations.empty()) throw ConfigError("synth config needs at least one relation");
    std::set<std::string> names;
    for (const auto& rel : relations) {
        if (rel.name.empty()) throw ConfigError("relation name must not be empty");
        if (!names.insert(rel.name).second) {
            throw ConfigError("duplicate relation name '" + rel.name + "'");
        }
        if (rel.n_entities < 1) {
            throw ConfigError("relation '" + rel.name + "' needs at least one entity");
        }
        if (rel.fraud_pool < 1 || rel.fraud_pool > rel.n_entities) {
            throw ConfigError("relation '" + rel.name +
                              "': fraud pool must lie in [1, n_entities]");
        }
    }
    if (n_continuous < 1) throw ConfigError("synth.n_continuous must be >= 1");
    if (!std::isfinite(feature_noise) || feature_noise <= 0.0) {
        throw ConfigError("synth.feature_noise must be positive");
    }
    if (!std::isfinite(feature_shift) || feature_shift < 0.0) {
        throw ConfigError("synth.feature_shift must be >= 0");
    }
    if (!std::isfinite(horizon) || horizon <= 0.0) {
        throw ConfigError("synth.horizon must be positive");
    }
    if (!std::isfinite(burst_window) || burst_window <= 0.0 || burst_window > horizon) {
        throw ConfigError("synth.burst_window must lie in (0, horizon]");
    }
    if (burst_size < 1) throw ConfigError("synth.burst_size must be >= 1");
    if (!(spatial_signal_fraction >= 0.0 && spatial_signal_fraction <= 1.0)) {
        throw ConfigError("synth.spatial_signal_fraction must lie in [0, 1]");
    }
    if (daily_phases < 0) throw ConfigError("synth.daily_phases must be >= 0");
    if (daily_phases > 0 && horizon < 2.0 * 86400.0) {
        throw ConfigError("synth.daily_phases needs a horizon of at least two days");
    }
}

SynthResult generate(const SynthConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_transactions;
    const int n_fraud = static_cast<int>(std::lround(n * cfg.fraud_ratio));
    const int n_bursts = n_fraud > 0 ? (n_fraud + cfg.burst_size - 1) / cfg.burst_size : 0;
    const int k_spatial = static_cast<int>(std::lround(n_fraud * cfg.spatial_signal_fraction));

    RngState root(cfg.seed);

    // Presentation order of labels, exact class counts.
    std::vector<int> labels(static_cast<size_t>(n), 0);
    for (int i = 0; i < n_fraud; ++i) labels[static_cast<size_t>(i)] = 1;
    auto order_rng = root.fork("order");
    for (size_t i = labels.size(); i > 1; --i) {
        std::swap(labels[i - 1], labels[order_rng.uniform_u64(i)]);
    }

    auto burst_rng = root.fork("bursts");
    std::vector<double> centers(static_cast<size_t>(n_bursts));
    std::vector<double> phases;
    if (cfg.daily_phases > 0 && cfg.burst_window < cfg.horizon) {
        // Attack windows that recur at fixed times of day: each burst lands
        // on some day of the horizon at one of a few shared phases.
        phases.resize(static_cast<size_t>(cfg.daily_phases));
        for (auto& p : phases) p = burst_rng.uniform(0.0, 86400.0);
        for (size_t b = 0; b < centers.size(); ++b) {
            double phase = phases[b % phases.size()];
            double span = std::max(0.0, (cfg.horizon - cfg.burst_window - phase) / 86400.0);
            auto days = static_cast<uint64_t>(span) + 1;
            double c = static_cast<double>(burst_rng.uniform_u64(days)) * 86400.0 + phase;
            centers[b] = std::min(c, cfg.horizon - cfg.burst_window);
        }
    } else {
        for (auto& c : centers) c = burst_rng.uniform(0.0, cfg.horizon - cfg.burst_window);
    }

    auto row_base = root.fork("row");
    std::vector<TransactionRecord> records;
    records.reserve(static_cast<size_t>(n));
    std::vector<std::vector<double>> burst_times(static_cast<size_t>(n_bursts));
    int fraud_seen = 0;
    char idbuf[32];

    for (int i = 0; i < n; ++i) {
        auto rng = row_base.fork(static_cast<uint64_t>(i));
        TransactionRecord rec;
        std::snprintf(idbuf, sizeof idbuf, "txn%08d", i);
        rec.txn_id = idbuf;
        rec.label = labels[static_cast<size_t>(i)];

        double t;
        bool spatial = false;
        if (rec.label == 1) {
            int fidx = fraud_seen++;
            int burst = n_bursts > 0 ? fidx % n_bursts : 0;
            spatial = fidx < k_spatial;
            t = centers[static_cast<size_t>(burst)] + rng.uniform(0.0, cfg.burst_window);
            burst_times[static_cast<size_t>(burst)].push_back(t);
        } else {
            t = rng.uniform(0.0, cfg.horizon);
        }
        rec.timestamp = static_cast<int64_t>(std::llround(t));

        for (const auto& rel : cfg.relations) {
            uint64_t bound = static_cast<uint64_t>(spatial ? rel.fraud_pool : rel.n_entities);
            uint64_t idx = rng.uniform_u64(bound);
            rec.relations[rel.name] = rel.name + "-" + std::to_string(idx);
        }
        for (int j = 0; j < cfg.n_continuous; ++j) {
            double mean = (rec.label == 1 ? 0.5 : -0.5) * cfg.feature_shift *
                          feature_shift_sign(j);
            rec.continuous["f" + std::to_string(j)] = rng.normal(mean, cfg.feature_noise);
        }
        rec.categorical["channel"] = kChannels[rng.uniform_u64(3)];
        records.push_back(std::move(rec));
    }

    // Ground-truth audit.
    nlohmann::ordered_json audit;
    audit["rows"] = n;
    audit["fraud_rows"] = n_fraud;
    audit["legit_rows"] = n - n_fraud;
    audit["spatial_fraud_rows"] = k_spatial;

    nlohmann::ordered_json rel_stats = nlohmann::ordered_json::array();
    for (const auto& rel : cfg.relations) {
        double fraud_reuse = pair_reuse_rate(records, rel.name, 1);
        double legit_reuse = pair_reuse_rate(records, rel.name, 0);
        nlohmann::ordered_json entry;
        entry["name"] = rel.name;
        entry["fraud_reuse"] = fraud_reuse;
        entry["legit_reuse"] = legit_reuse;
        entry["reuse_ratio"] = legit_reuse > 0.0 ? fraud_reuse / legit_reuse : 0.0;
        rel_stats.push_back(std::move(entry));
    }
    audit["relations"] = std::move(rel_stats);

    double dt_total = 0.0;
    int64_t dt_pairs = 0;
    for (const auto& times : burst_times) {
        for (size_t a = 0; a < times.size(); ++a) {
            for (size_t b = a + 1; b < times.size(); ++b) {
                dt_total += std::abs(times[a] - times[b]);
                ++dt_pairs;
            }
        }
    }
    nlohmann::ordered_json bursts;
    bursts["count"] = n_bursts;
    bursts["window"] = cfg.burst_window;
    bursts["mean_intra_burst_abs_dt"] = dt_pairs > 0 ? dt_total / static_cast<double>(dt_pairs) : 0.0;
    bursts["daily_phases"] = phases;
    bursts["centers"] = centers;
    audit["bursts"] = std::move(bursts);

    if (n_fraud > 0 && n_fraud < n) {
        // AUC of the generator's own optimal linear feature score.
        std::vector<double> scores(records.size());
        std::vector<int> row_labels(records.size());
        std::vector<int> mask(records.size());
        for (size_t i = 0; i < records.size(); ++i) {
            double s = 0.0;
            for (int j = 0; j < cfg.n_continuous; ++j) {
                s += feature_shift_sign(j) * records[i].continuous.at("f" + std::to_string(j));
            }
            scores[i] = s;
            row_labels[i] = records[i].label;
            mask[i] = static_cast<int>(i);
        }
        audit["oracle_feature_auc"] = auc_score(scores, row_labels, mask);
    }

    return {std::move(records), std::move(audit)};
}

double pair_reuse_rate(const std::vector<TransactionRecord>& records,
                       const std::string& relation, int label) {
    std::map<std::string, int64_t> counts;
    int64_t n_class = 0;
    for (const auto& rec : records) {
        if (rec.label != label) continue;
        ++n_class;
        auto it = rec.relations.find(relation);
        if (it == rec.relations.end() || it->second.empty()) continue;
        ++counts[it->second];
    }
    if (n_class < 2) return 0.0;
    double shared = 0.0;
    for (const auto& [entity, k] : counts) {
        shared += 0.5 * static_cast<double>(k) * static_cast<double>(k - 1);
    }
    return shared / (0.5 * static_cast<double>(n_class) * static_cast<double>(n_class - 1));
}

double two_sample_ks_p(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DataError("both samples must be nonempty");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        double va = a[i];
        double vb = b[j];
        if (va <= vb) ++i;
        if (vb <= va) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    double ne = std::sqrt(na * nb / (na + nb));
    double lambda = (ne + 0.12 + 0.11 / ne) * d;
    // Asymptotic Kolmogorov tail, alternating series.
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-10 * std::abs(sum)) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

SplitMasks split_temporal(const std::vector<TransactionRecord>& records, int64_t boundary) {
    if (records.empty()) throw DataError("cannot split an empty record list");
    SplitMasks masks;
    masks.train.assign(records.size(), 0);
    masks.test.assign(records.size(), 0);
    size_t n_train = 0;
    for (size_t i = 0; i < records.size(); ++i) {
        if (records[i].timestamp < boundary) {
            masks.train[i] = 1;
            ++n_train;
        } else {
            masks.test[i] = 1;
        }
    }
    if (n_train == 0) {
        throw DataError("degenerate temporal split: no transaction precedes the boundary");
    }
    if (n_train == records.size()) {
        throw DataError("degenerate temporal split: no transaction at or after the boundary");
    }
    return masks;
}

CsvSchema synth_schema(const SynthConfig& cfg) {
    CsvSchema schema;
    schema.id_column = "txn_id";
    schema.timestamp_column = "timestamp";
    schema.label_column = "label";
    for (int j = 0; j < cfg.n_continuous; ++j) {
        schema.continuous_fields.push_back("f" + std::to_string(j));
    }
    schema.categorical_fields.push_back("channel");
    for (const auto& rel : cfg.relations) schema.relation_fields.push_back(rel.name);
    return schema;
}

void write_schema(const std::string& path, const CsvSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write schema '" + path + "'");
    out << "id:" << schema.id_column << '\n';
    out << "timestamp:" << schema.timestamp_column << '\n';
    out << "label:" << schema.label_column << '\n';
    for (const auto& f : schema.continuous_fields) out << "continuous:" << f << '\n';
    for (const auto& f : schema.categorical_fields) out << "categorical:" << f << '\n';
    for (const auto& f : schema.relation_fields) out << "relation:" << f << '\n';
    out.flush();
    if (!out.good()) throw DataError("failed while writing schema '" + path + "'");
}

void write_records_csv(const std::string& path, const std::vector<TransactionRecord>& records,
                       const CsvSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write CSV '" + path + "'");
    out << schema.id_column << ',' << schema.timestamp_column << ',' << schema.label_column;
    for (const auto& f : schema.continuous_fields) out << ',' << f;
    for (const auto& f : schema.categorical_fields) out << ',' << f;
    for (const auto& f : schema.relation_fields) out << ',' << f;
    out << '\n';

    auto field_of = [](const auto& fields, const std::string& name,
                       const std::string& txn_id) -> const auto& {
        auto it = fields.find(name);
        if (it == fields.end()) {
            throw DataError("record '" + txn_id + "' lacks field '" + name + "'");
        }
        return it->second;
    };

    for (const auto& rec : records) {
        check_cell(rec.txn_id, rec.txn_id);
        out << rec.txn_id << ',' << rec.timestamp << ',';
        if (rec.label != kUnlabeled) out << rec.label;
        for (const auto& f : schema.continuous_fields) {
            out << ',' << format_double(field_of(rec.continuous, f, rec.txn_id));
        }
        for (const auto& f : schema.categorical_fields) {
            const std::string& v = field_of(rec.categorical, f, rec.txn_id);
            check_cell(v, rec.txn_id);
            out << ',' << v;
        }
        for (const auto& f : schema.relation_fields) {
            const std::string& v = field_of(rec.relations, f, rec.txn_id);
            check_cell(v, rec.txn_id);
            out << ',' << v;
        }
        out << '\n';
    }
    out.flush();
    if (!out.good()) throw DataError("failed while writing CSV '" + path + "'");
}

} // namespace stgt
