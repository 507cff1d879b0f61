#include "stgt/commands.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "stgt/errors.hpp"
#include "stgt/model.hpp"
#include "stgt/rng.hpp"
#include "stgt/synthgen.hpp"
#include "stgt/train.hpp"

namespace stgt {
namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw DataError("write to '" + path + "' failed");
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir + "': " + ec.message());
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

MetricsReport score_test_rows(const RunConfig& cfg, const PreparedDataset& data,
                              const ModelParams& params) {
    ForwardTrace trace = forward(data.graph, params, SumMode::exact);
    return evaluate(trace.p, data.graph.labels, data.graph.mask_indices(false), cfg.threshold());
}

} // namespace

PreparedDataset prepare_dataset(const RunConfig& cfg, const std::string& data_path) {
    PreparedDataset out;
    out.schema = parse_schema(data_path + ".schema");
    out.records = parse_csv(data_path, out.schema);
    out.boundary = cfg.split_boundary(out.records);

    double ratio = cfg.downsample_ratio();
    if (!(ratio > 0.0) || ratio > 1.0)
        throw ConfigError("ingest.downsample_ratio must lie in (0, 1]");
    if (ratio < 1.0) {
        // Class rebalancing touches only the training side; every test row
        // and every fraud row stays.
        RngState rng = RngState(cfg.graph_options().seed).fork("downsample");
        std::vector<TransactionRecord> kept;
        kept.reserve(out.records.size());
        for (auto& r : out.records) {
            if (r.timestamp < out.boundary && r.label == 0 && !rng.bernoulli(ratio)) continue;
            kept.push_back(std::move(r));
        }
        out.records = std::move(kept);
    }

    SplitMasks masks = split_temporal(out.records, out.boundary);
    std::vector<TransactionRecord> train_rows;
    for (size_t i = 0; i < out.records.size(); ++i)
        if (masks.train[i]) train_rows.push_back(out.records[i]);
    FeatureCodec codec = FeatureCodec::fit(train_rows);

    out.graph = build_graph(out.records, out.schema.relation_fields, codec.encode(out.records),
                            extract_timestamps(out.records), masks.train, masks.test,
                            cfg.graph_options());
    validate_graph(out.graph);
    return out;
}

void cmd_generate(const RunConfig& cfg, const std::string& out_path) {
    SynthResult synth = generate(cfg.synth_config());
    CsvSchema schema = synth_schema(cfg.synth_config());
    if (std::filesystem::path(out_path).has_parent_path())
        ensure_dir(std::filesystem::path(out_path).parent_path().string());
    write_records_csv(out_path, synth.records, schema);
    write_schema(out_path + ".schema", schema);
    write_text(out_path + ".audit.json", synth.audit.dump(2) + "\n");
    write_text(out_path + ".config.txt", cfg.resolved_text());
    std::cout << "wrote " << synth.records.size() << " rows to " << out_path << "\n";
}

void cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& out_dir) {
    PreparedDataset data = prepare_dataset(cfg, data_path);
    ModelConfig model_cfg = cfg.model_config(data.graph.features.cols,
                                             static_cast<int>(data.graph.relation_names.size()));
    TrainResult result = train_model(data.graph, model_cfg, cfg.train_options());

    ensure_dir(out_dir);
    const std::filesystem::path dir(out_dir);
    save_checkpoint((dir / "checkpoint.json").string(), result.params, cfg.hash());
    write_training_log((dir / "training_log.csv").string(), result.log);
    write_text((dir / "graph_summary.json").string(), graph_summary_json(data.graph) + "\n");
    write_text((dir / "config_resolved.txt").string(), cfg.resolved_text());

    if (result.diverged)
        std::cerr << "training diverged after " << result.log.size()
                  << " epochs; checkpoint holds the last finite parameters\n";
    std::cout << "trained " << result.log.size() << " epochs; artifacts in " << out_dir << "\n";
}

void cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path,
                  const std::string& data_path, const std::string& out_path) {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    if (loaded.config_hash != cfg.hash())
        throw ConfigError("checkpoint was trained under config hash " + loaded.config_hash +
                          " but the current configuration hashes to " + cfg.hash());

    PreparedDataset data = prepare_dataset(cfg, data_path);
    if (loaded.params.config.feature_dim != data.graph.features.cols)
        throw ConfigError("checkpoint expects feature_dim=" +
                          std::to_string(loaded.params.config.feature_dim) +
                          " but the data encodes to " + std::to_string(data.graph.features.cols));
    if (loaded.params.config.relations != static_cast<int>(data.graph.relation_names.size()))
        throw ConfigError("checkpoint expects " + std::to_string(loaded.params.config.relations) +
                          " relations but the data has " +
                          std::to_string(data.graph.relation_names.size()));

    MetricsReport report = score_test_rows(cfg, data, loaded.params);
    const std::string text = metrics_json(report).dump(2) + "\n";
    if (std::filesystem::path(out_path).has_parent_path())
        ensure_dir(std::filesystem::path(out_path).parent_path().string());
    write_text(out_path, text);
    write_text(out_path + ".config.txt", cfg.resolved_text());
    std::cout << text;
}

std::vector<AblationRow> ablation_rows(const RunConfig& cfg, const PreparedDataset& data) {
    // Variant order is fixed; each one flips a single switch off. Sequential
    // runs share nothing but the dataset, so a variant's row is bitwise what
    // a standalone train+evaluate under the same flags would produce.
    const std::vector<std::pair<std::string, std::string>> variants = {
        {"full", ""},
        {"no_temporal", "temporal.enabled"},
        {"no_transformer", "attn.enabled"},
        {"no_relation_attention", "gnn.relation_attention"},
    };
    std::vector<AblationRow> rows;
    for (const auto& [name, off_key] : variants) {
        RunConfig variant = cfg;
        if (!off_key.empty()) variant.set(off_key, "false");
        ModelConfig model_cfg = variant.model_config(
            data.graph.features.cols, static_cast<int>(data.graph.relation_names.size()));
        TrainResult result = train_model(data.graph, model_cfg, variant.train_options());
        if (result.diverged)
            std::cerr << "variant " << name << " diverged; scoring last finite parameters\n";
        MetricsReport report = score_test_rows(variant, data, result.params);
        rows.push_back({name, report.recall, report.f1, report.auc});
    }
    return rows;
}

void cmd_ablate(const RunConfig& cfg, const std::string& data_path, const std::string& out_dir) {
    PreparedDataset data = prepare_dataset(cfg, data_path);
    std::vector<AblationRow> rows = ablation_rows(cfg, data);

    std::string csv = "variant,recall,f1,auc\n";
    for (const AblationRow& row : rows)
        csv += row.variant + "," + format_double(row.recall) + "," + format_double(row.f1) + "," +
               format_double(row.auc) + "\n";

    ensure_dir(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text((dir / "ablation.csv").string(), csv);
    write_text((dir / "config_resolved.txt").string(), cfg.resolved_text());
    std::cout << csv;
}

} // namespace stgt
