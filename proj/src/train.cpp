#include "stgt/train.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "stgt/errors.hpp"

namespace stgt {

namespace {

void zero_range(std::vector<double>& values, std::pair<size_t, size_t> range) {
    for (size_t i = range.first; i < range.second; ++i) values[i] = 0.0;
}

nlohmann::json config_json(const ModelConfig& cfg) {
    return {
        {"feature_dim", cfg.feature_dim},
        {"relations", cfg.relations},
        {"layers", cfg.layers},
        {"dim", cfg.dim},
        {"heads", cfg.heads},
        {"ffn_mult", cfg.ffn_mult},
        {"max_nodes", cfg.max_nodes},
        {"temporal_enabled", cfg.temporal_enabled},
        {"standard_sinusoid", cfg.standard_sinusoid},
        {"transformer_enabled", cfg.transformer_enabled},
        {"relation_attention_enabled", cfg.relation_attention_enabled},
        {"time_scale", cfg.time_scale},
        {"aggr", aggr_name(cfg.aggr)},
    };
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.feature_dim = j.at("feature_dim").get<int>();
    cfg.relations = j.at("relations").get<int>();
    cfg.layers = j.at("layers").get<int>();
    cfg.dim = j.at("dim").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.ffn_mult = j.at("ffn_mult").get<int>();
    cfg.max_nodes = j.at("max_nodes").get<int>();
    cfg.temporal_enabled = j.at("temporal_enabled").get<bool>();
    cfg.standard_sinusoid = j.at("standard_sinusoid").get<bool>();
    cfg.transformer_enabled = j.at("transformer_enabled").get<bool>();
    cfg.relation_attention_enabled = j.at("relation_attention_enabled").get<bool>();
    cfg.time_scale = j.at("time_scale").get<double>();
    cfg.aggr = parse_aggr(j.at("aggr").get<std::string>());
    return cfg;
}

} // namespace

TrainResult train_model(const MultiRelationGraph& graph, ModelParams start,
                        const TrainOptions& opt) {
    if (opt.epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (!std::isfinite(opt.lr) || opt.lr < 0.0) {
        throw ConfigError("train.lr must be finite and >= 0");
    }
    auto mask = graph.mask_indices(true);
    if (mask.empty()) throw DataError("training mask is empty");

    TrainResult result;
    result.params = std::move(start);

    std::vector<double> flat = result.params.flatten();
    std::vector<double> last_finite = flat;
    std::vector<double> m(flat.size(), 0.0);
    std::vector<double> v(flat.size(), 0.0);
    auto t_linear = result.params.flat_range("temporal.T_linear");
    auto t_bias = result.params.flat_range("temporal.T_bias");

    auto started = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        GradientResult step;
        try {
            step = compute_gradients(graph, result.params, mask, SumMode::fast);
        } catch (const NumericError&) {
            // Divergence: keep the last parameters whose loss was finite.
            result.params.set_flat(last_finite);
            result.diverged = true;
            break;
        }
        double wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - started)
                             .count();
        result.log.push_back({epoch, step.loss, wall_ms});

        flat = result.params.flatten();
        last_finite = flat;
        if (!result.params.config.temporal_enabled) {
            zero_range(step.grad, t_linear);
            zero_range(step.grad, t_bias);
        }
        double correct1 = 1.0 - std::pow(kAdamBeta1, epoch);
        double correct2 = 1.0 - std::pow(kAdamBeta2, epoch);
        for (size_t i = 0; i < flat.size(); ++i) {
            double g = step.grad[i];
            m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g;
            v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g * g;
            flat[i] -= opt.lr * (m[i] / correct1) / (std::sqrt(v[i] / correct2) + kAdamEps);
        }
        result.params.set_flat(flat);
    }
    return result;
}

TrainResult train_model(const MultiRelationGraph& graph, const ModelConfig& cfg,
                        const TrainOptions& opt) {
    return train_model(graph, init_params(cfg, opt.seed), opt);
}

void write_training_log(const std::string& path, const std::vector<TrainLogEntry>& log) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write training log '" + path + "'");
    out << "epoch,loss,wall_ms\n";
    char buf[64];
    for (const auto& entry : log) {
        std::snprintf(buf, sizeof buf, "%.17g", entry.loss);
        out << entry.epoch << ',' << buf << ',';
        std::snprintf(buf, sizeof buf, "%.3f", entry.wall_ms);
        out << buf << '\n';
    }
    out.flush();
    if (!out.good()) throw DataError("failed while writing training log '" + path + "'");
}

std::vector<TrainLogEntry> read_training_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open training log '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "epoch,loss,wall_ms") {
        throw DataError("training log '" + path + "' has an unexpected header");
    }
    std::vector<TrainLogEntry> log;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        size_t c1 = line.find(',');
        size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw DataError("training log '" + path + "' line " + std::to_string(line_no) +
                            ": expected 3 fields");
        }
        TrainLogEntry entry{};
        auto parse_field = [&](const char* first, const char* last, auto& outval) {
            auto [ptr, ec] = std::from_chars(first, last, outval);
            if (ec != std::errc() || ptr != last) {
                throw DataError("training log '" + path + "' line " + std::to_string(line_no) +
                                ": bad numeric field");
            }
        };
        parse_field(line.data(), line.data() + c1, entry.epoch);
        parse_field(line.data() + c1 + 1, line.data() + c2, entry.loss);
        parse_field(line.data() + c2 + 1, line.data() + line.size(), entry.wall_ms);
        log.push_back(entry);
    }
    return log;
}

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& config_hash) {
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["config_hash"] = config_hash;
    doc["model"] = config_json(params.config);
    nlohmann::json entries = nlohmann::json::object();
    params.visit([&](const std::string& name, const Matrix& mat, ParamKind) {
        entries[name] = {{"rows", mat.rows}, {"cols", mat.cols}, {"data", mat.data}};
    });
    doc["params"] = std::move(entries);

    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out.good()) throw DataError("failed while writing checkpoint '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw DataError("checkpoint '" + path + "' is not valid JSON: " + std::string(e.what()));
    }

    LoadedCheckpoint loaded;
    try {
        int version = doc.at("format_version").get<int>();
        if (version != 1) {
            throw DataError("checkpoint '" + path + "' has unsupported format_version " +
                            std::to_string(version));
        }
        loaded.config_hash = doc.at("config_hash").get<std::string>();
        ModelConfig cfg = config_from_json(doc.at("model"));
        cfg.validate();

        const auto& entries = doc.at("params");
        ModelParams params(cfg);
        size_t matched = 0;
        params.visit([&](const std::string& name, Matrix& mat, ParamKind) {
            if (!entries.contains(name)) {
                throw ConfigError("checkpoint is missing parameter '" + name + "'");
            }
            const auto& entry = entries.at(name);
            int rows = entry.at("rows").get<int>();
            int cols = entry.at("cols").get<int>();
            if (rows != mat.rows || cols != mat.cols) {
                throw ConfigError("checkpoint shape mismatch for '" + name + "': expected " +
                                  std::to_string(mat.rows) + "x" + std::to_string(mat.cols) +
                                  ", found " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
            }
            const auto& data = entry.at("data");
            if (data.size() != mat.data.size()) {
                throw ConfigError("checkpoint data length mismatch for '" + name + "'");
            }
            for (size_t i = 0; i < mat.data.size(); ++i) {
                mat.data[i] = data[i].get<double>();
            }
            ++matched;
        });
        if (entries.size() != matched) {
            throw ConfigError("checkpoint contains unknown parameter entries");
        }
        loaded.params = std::move(params);
    } catch (const ConfigError&) {
        throw;
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError("checkpoint '" + path + "': " + std::string(e.what()));
    }
    return loaded;
}

} // namespace stgt
