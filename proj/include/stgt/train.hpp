#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stgt/ingest.hpp"
#include "stgt/model.hpp"

namespace stgt {

// Adaptive-moment optimizer constants; fixed rather than configurable so two
// runs differ only through lr/epochs/seed.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct TrainOptions {
    int epochs = 100;
    double lr = 1e-3;
    uint64_t seed = 1;
};

struct TrainLogEntry {
    int epoch;      // 1-based
    double loss;    // summed masked cross-entropy before this epoch's update
    double wall_ms; // elapsed since the loop started
};

struct TrainResult {
    ModelParams params;
    std::vector<TrainLogEntry> log;
    bool diverged = false;
};

/// Full-batch training on the graph's train mask, starting from `start`.
/// Each epoch evaluates loss and gradients at the current parameters, logs
/// the loss, then applies one adaptive-moment update. A non-finite loss or
/// intermediate aborts the loop and restores the last parameters whose loss
/// was verified finite. When the temporal path is disabled the temporal
/// parameters are frozen (their gradients are zeroed before the update).
TrainResult train_model(const MultiRelationGraph& graph, ModelParams start,
                        const TrainOptions& opt);

/// Convenience: initialize from opt.seed, then train.
TrainResult train_model(const MultiRelationGraph& graph, const ModelConfig& cfg,
                        const TrainOptions& opt);

/// CSV with header "epoch,loss,wall_ms"; loss is written with full precision
/// so identical runs produce identical loss columns.
void write_training_log(const std::string& path, const std::vector<TrainLogEntry>& log);
std::vector<TrainLogEntry> read_training_log(const std::string& path);

/// Versioned JSON dump of the model configuration plus every parameter
/// matrix keyed by name. Doubles survive the round trip exactly.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& config_hash);

struct LoadedCheckpoint {
    ModelParams params;
    std::string config_hash;
};

/// Rejects unknown format versions, missing or extra parameter entries, and
/// any shape that disagrees with the stored configuration.
LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace stgt
