#pragma once

// Three-layer regression network 72 -> 64 (tanh) -> 32 (tanh) -> 1 (linear),
// trained with mean squared error and Adam.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "squareval/dataset.hpp"
#include "squareval/error.hpp"

namespace squareval {

inline constexpr std::size_t kHidden1 = 64;
inline constexpr std::size_t kHidden2 = 32;

// Row-major dense matrix; bias vectors are n×1.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::size_t size() const noexcept { return values.size(); }

    bool operator==(const Tensor&) const = default;
};

struct ModelParams {
    Tensor W1{kHidden1, kInputSize};
    Tensor b1{kHidden1, 1};
    Tensor W2{kHidden2, kHidden1};
    Tensor b2{kHidden2, 1};
    Tensor W3{1, kHidden2};
    Tensor b3{1, 1};

    static constexpr std::array<std::string_view, 6> kNames{"W1", "b1", "W2", "b2", "W3", "b3"};

    // In kNames order.
    std::array<Tensor*, 6> tensors() { return {&W1, &b1, &W2, &b2, &W3, &b3}; }
    std::array<const Tensor*, 6> tensors() const { return {&W1, &b1, &W2, &b2, &W3, &b3}; }

    std::size_t parameter_count() const noexcept;
    bool all_finite() const noexcept;

    bool operator==(const ModelParams&) const = default;
};

// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero biases.
ModelParams init_params(std::uint64_t seed);

// Throws std::invalid_argument unless x has kInputSize entries.
double forward(const ModelParams& p, std::span<const double> x);

// ‖W3‖₁ + |b3|: no input can push the output past this.
double output_bound(const ModelParams& p) noexcept;

double mean_squared_error(const ModelParams& p, std::span<const EncodedExample> batch);

struct LossAndGradients {
    double mse = 0.0;
    ModelParams gradients;  // d(mse)/d(parameter), shaped like the model
};

// Exact backpropagation. Throws UsageError for an empty batch.
LossAndGradients loss_and_gradients(const ModelParams& p, std::span<const EncodedExample> batch);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 64;
    int epochs = 100;
    std::uint64_t seed = 1;
    bool shuffle = true;

    // Throws UsageError on out-of-range values.
    void validate() const;
};

struct AdamState {
    ModelParams m = zeroed();
    ModelParams v = zeroed();
    std::int64_t t = 0;

    static ModelParams zeroed() { return ModelParams{}; }
};

// Pure Adam update with bias correction. Throws NumericError on a non-finite
// gradient without touching anything.
std::pair<ModelParams, AdamState> adam_step(const ModelParams& params, const ModelParams& grads,
                                             const AdamState& state, const TrainConfig& cfg);

// In-place form used by the training loop.
void adam_update(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& cfg);

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_mse = 0.0;
    std::optional<double> val_mse;  // absent when there is no validation set

    bool operator==(const EpochStats&) const = default;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Mini-batch Adam from init_params(cfg.seed). The batch order is drawn from a
// separate SplitMix64 stream seeded with ~cfg.seed. Losses in the history are
// full passes over each set after the epoch's updates. Throws NumericError
// naming the epoch and batch if the loss or a gradient stops being finite.
TrainResult train(std::span<const EncodedExample> train_set, std::span<const EncodedExample> validation_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

inline TrainResult train(const DatasetSplit& split, const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
    return train(split.train, split.validation, cfg, on_epoch);
}

// ---- weights file -------------------------------------------------------------
//
//   squareval-model v1
//   <key> <value>            metadata, any number of lines
//   layer W1 64 72           then one line per row, values at 17 significant digits
//   ...

inline constexpr std::string_view kModelHeader = "squareval-model v1";

class ModelFileError : public InputError {
public:
    using InputError::InputError;
};

using ModelMetadata = std::vector<std::pair<std::string, std::string>>;

ModelMetadata metadata_for(const TrainConfig& cfg);

struct ModelFile {
    ModelParams params;
    ModelMetadata metadata;
};

void save_params(const std::filesystem::path& path, const ModelParams& params, const ModelMetadata& metadata = {});
ModelFile load_model(const std::filesystem::path& path);
inline ModelParams load_params(const std::filesystem::path& path) { return load_model(path).params; }

}  // namespace squareval
