#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dru/losses.hpp"

namespace dru {

enum class Activation { relu, identity, softplus };

struct LayerSpec {
    std::size_t input_width = 1;
    std::size_t output_width = 1;
    Activation activation = Activation::relu;

    bool operator==(const LayerSpec&) const = default;
};

/// Layer stack input -> hidden... -> 1 with relu hidden layers and the given
/// output activation.
std::vector<LayerSpec> make_architecture(std::size_t input_width,
                                         std::span<const std::size_t> hidden_widths,
                                         Activation output_activation);

/// Per-layer values recorded by a forward pass, consumed by backward().
struct Tape {
    std::vector<std::vector<double>> inputs;          // input to layer k
    std::vector<std::vector<double>> preactivations;  // W x + b of layer k
    double output = 0.0;

    /// Smallest |pre-activation| over relu units, +inf without relu layers.
    double min_relu_margin(std::span<const LayerSpec> layers) const;
};

/// Dense feed-forward network with a scalar output. Parameters live in one
/// flat buffer: for each layer the row-major (out x in) weight matrix
/// followed by the bias vector.
class Mlp {
public:
    Mlp() = default;

    /// Glorot-uniform weights, zero biases, drawn from `seed`.
    Mlp(std::vector<LayerSpec> layers, std::uint64_t seed);

    static Mlp zeros(std::vector<LayerSpec> layers);
    static Mlp from_parameters(std::vector<LayerSpec> layers, std::vector<double> parameters,
                               std::uint64_t seed = 0);

    double forward(std::span<const double> x) const;
    double forward(std::span<const double> x, Tape& tape) const;

    /// Accumulates output_grad * d(output)/d(theta) into `grad`
    /// (same layout as parameters()).
    void accumulate_gradient(const Tape& tape, double output_grad, std::span<double> grad) const;

    std::span<const LayerSpec> layers() const { return layers_; }
    std::span<const double> parameters() const { return params_; }
    std::span<double> parameters() { return params_; }
    std::size_t parameter_count() const { return params_.size(); }
    std::size_t input_width() const;
    std::uint64_t seed() const { return seed_; }

    std::span<const double> weights(std::size_t layer) const;
    std::span<double> weights(std::size_t layer);
    std::span<const double> biases(std::size_t layer) const;
    std::span<double> biases(std::size_t layer);

    bool operator==(const Mlp&) const = default;

private:
    void validate_layers() const;
    void build_offsets();

    std::vector<LayerSpec> layers_;
    std::vector<double> params_;
    std::vector<std::size_t> offsets_;  // weight offset per layer
    std::uint64_t seed_ = 0;
};

/// Row-major feature matrix with one target per row.
struct TrainingSet {
    std::size_t width = 0;
    std::vector<double> features;
    std::vector<double> targets;

    std::size_t size() const { return targets.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * width, width};
    }
    void push_back(std::span<const double> x, double y);
};

struct BatchExample {
    std::span<const double> x;
    double y = 0.0;
};

/// Summed gradient of sum_i output_grads[i] * net(x_i) over the batch.
/// Throws Error(numeric) naming the layer when an intermediate is non-finite.
std::vector<double> backward(const Mlp& net, std::span<const BatchExample> batch,
                             std::span<const double> output_grads);

struct TrainConfig {
    std::size_t max_epochs = 20;
    std::size_t patience = 3;
    std::size_t batch_size = 12;
    double learning_rate = 0.01;
    double validation_fraction = 0.1;
    double improvement_tolerance = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainReport {
    std::size_t epochs_run = 0;
    std::vector<double> train_loss_trace;
    std::vector<double> val_loss_trace;
    bool stopped_early = false;
    std::size_t best_epoch = 0;  // 1-based; 0 means the initial weights were kept
};

struct TrainedModel {
    Mlp h;
    std::optional<Mlp> alpha;
    LossSpec loss;

    double predict(std::span<const double> x) const { return h.forward(x); }
};

/// Mean loss of (h, alpha) over the given rows.
double mean_loss(const Mlp& h, const Mlp* alpha, const LossSpec& loss, const TrainingSet& data,
                 std::span<const std::size_t> rows);

struct TrainResult {
    TrainedModel model;
    TrainReport report;
};

/// Adam mini-batch training of h (and alpha for RU/dRU) under one combined
/// loss, with a seeded train/validation split and early stopping. Returns the
/// weights of the best validation epoch.
TrainResult train(Mlp h, std::optional<Mlp> alpha, const TrainingSet& data, const LossSpec& loss,
                  const TrainConfig& cfg);

}  // namespace dru
