#include "dru/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "dru/error.hpp"

namespace dru {

namespace {

double activate(Activation act, double v) {
    switch (act) {
        case Activation::relu: return v > 0.0 ? v : 0.0;
        case Activation::identity: return v;
        case Activation::softplus: return v > 30.0 ? v : std::log1p(std::exp(v));
    }
    return v;
}

// Derivative at the pre-activation; relu takes 0 at the kink.
double activate_grad(Activation act, double v) {
    switch (act) {
        case Activation::relu: return v > 0.0 ? 1.0 : 0.0;
        case Activation::identity: return 1.0;
        case Activation::softplus: return 1.0 / (1.0 + std::exp(-v));
    }
    return 1.0;
}

void check_finite(double v, std::size_t layer, const char* what) {
    if (!std::isfinite(v))
        throw Error(ErrorCode::numeric, std::string("non-finite ") + what + " in layer " + std::to_string(layer));
}

}  // namespace

std::vector<LayerSpec> make_architecture(std::size_t input_width, std::span<const std::size_t> hidden_widths,
                                         Activation output_activation) {
    std::vector<LayerSpec> layers;
    std::size_t in = input_width;
    for (std::size_t w : hidden_widths) {
        layers.push_back({in, w, Activation::relu});
        in = w;
    }
    layers.push_back({in, 1, output_activation});
    return layers;
}

double Tape::min_relu_margin(std::span<const LayerSpec> layers) const {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < layers.size() && k < preactivations.size(); ++k) {
        if (layers[k].activation != Activation::relu) continue;
        for (double v : preactivations[k]) margin = std::min(margin, std::abs(v));
    }
    return margin;
}

Mlp::Mlp(std::vector<LayerSpec> layers, std::uint64_t seed) : layers_(std::move(layers)), seed_(seed) {
    validate_layers();
    build_offsets();
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& spec = layers_[k];
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.input_width + spec.output_width));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : weights(k)) w = dist(rng);
    }
}

Mlp Mlp::zeros(std::vector<LayerSpec> layers) {
    Mlp net;
    net.layers_ = std::move(layers);
    net.validate_layers();
    net.build_offsets();
    return net;
}

Mlp Mlp::from_parameters(std::vector<LayerSpec> layers, std::vector<double> parameters, std::uint64_t seed) {
    Mlp net = zeros(std::move(layers));
    if (parameters.size() != net.params_.size())
        throw Error(ErrorCode::input_shape, "expected " + std::to_string(net.params_.size()) + " parameters, got " +
                                                std::to_string(parameters.size()));
    for (double v : parameters)
        if (!std::isfinite(v)) throw Error(ErrorCode::numeric, "non-finite network parameter");
    net.params_ = std::move(parameters);
    net.seed_ = seed;
    return net;
}

void Mlp::validate_layers() const {
    if (layers_.empty()) throw Error(ErrorCode::configuration, "network needs at least one layer");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        if (layers_[k].input_width == 0 || layers_[k].output_width == 0)
            throw Error(ErrorCode::configuration, "layer " + std::to_string(k) + " has zero width");
        if (k > 0 && layers_[k - 1].output_width != layers_[k].input_width)
            throw Error(ErrorCode::configuration, "layer " + std::to_string(k) + " input width " +
                                                      std::to_string(layers_[k].input_width) +
                                                      " does not match previous output width " +
                                                      std::to_string(layers_[k - 1].output_width));
    }
    if (layers_.back().output_width != 1)
        throw Error(ErrorCode::configuration, "network output must have width 1");
}

void Mlp::build_offsets() {
    offsets_.clear();
    std::size_t total = 0;
    for (const auto& spec : layers_) {
        offsets_.push_back(total);
        total += spec.input_width * spec.output_width + spec.output_width;
    }
    params_.assign(total, 0.0);
}

std::size_t Mlp::input_width() const { return layers_.empty() ? 0 : layers_.front().input_width; }

std::span<const double> Mlp::weights(std::size_t k) const {
    return {params_.data() + offsets_[k], layers_[k].input_width * layers_[k].output_width};
}
std::span<double> Mlp::weights(std::size_t k) {
    return {params_.data() + offsets_[k], layers_[k].input_width * layers_[k].output_width};
}
std::span<const double> Mlp::biases(std::size_t k) const {
    return {params_.data() + offsets_[k] + layers_[k].input_width * layers_[k].output_width, layers_[k].output_width};
}
std::span<double> Mlp::biases(std::size_t k) {
    return {params_.data() + offsets_[k] + layers_[k].input_width * layers_[k].output_width, layers_[k].output_width};
}

double Mlp::forward(std::span<const double> x) const {
    thread_local Tape scratch;
    return forward(x, scratch);
}

double Mlp::forward(std::span<const double> x, Tape& tape) const {
    if (x.size() != input_width())
        throw Error(ErrorCode::input_shape, "input width " + std::to_string(x.size()) + " does not match network input " +
                                                std::to_string(input_width()));
    tape.inputs.resize(layers_.size());
    tape.preactivations.resize(layers_.size());
    tape.inputs[0].assign(x.begin(), x.end());
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& spec = layers_[k];
        const auto w = weights(k);
        const auto b = biases(k);
        const auto& in = tape.inputs[k];
        auto& pre = tape.preactivations[k];
        pre.resize(spec.output_width);
        for (std::size_t o = 0; o < spec.output_width; ++o) {
            const double* row = w.data() + o * spec.input_width;
            double acc = b[o];
            for (std::size_t i = 0; i < spec.input_width; ++i) acc += row[i] * in[i];
            check_finite(acc, k, "activation");
            pre[o] = acc;
        }
        if (k + 1 < layers_.size()) {
            auto& next = tape.inputs[k + 1];
            next.resize(spec.output_width);
            for (std::size_t o = 0; o < spec.output_width; ++o) next[o] = activate(spec.activation, pre[o]);
        } else {
            tape.output = activate(spec.activation, pre[0]);
        }
    }
    return tape.output;
}

void Mlp::accumulate_gradient(const Tape& tape, double output_grad, std::span<double> grad) const {
    if (grad.size() != params_.size()) throw Error(ErrorCode::input_shape, "gradient buffer has the wrong size");
    if (!std::isfinite(output_grad)) throw Error(ErrorCode::numeric, "non-finite loss gradient at output layer " +
                                                                       std::to_string(layers_.size() - 1));
    if (output_grad == 0.0) return;
    thread_local std::vector<double> delta, prev;
    delta.assign(1, output_grad);
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const auto& spec = layers_[k];
        const auto& pre = tape.preactivations[k];
        const auto& in = tape.inputs[k];
        for (std::size_t o = 0; o < spec.output_width; ++o) {
            delta[o] *= activate_grad(spec.activation, pre[o]);
            check_finite(delta[o], k, "gradient");
        }
        double* gw = grad.data() + offsets_[k];
        double* gb = gw + spec.input_width * spec.output_width;
        for (std::size_t o = 0; o < spec.output_width; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            double* row = gw + o * spec.input_width;
            for (std::size_t i = 0; i < spec.input_width; ++i) row[i] += d * in[i];
            gb[o] += d;
        }
        if (k == 0) break;
        const auto w = weights(k);
        prev.assign(spec.input_width, 0.0);
        for (std::size_t o = 0; o < spec.output_width; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* row = w.data() + o * spec.input_width;
            for (std::size_t i = 0; i < spec.input_width; ++i) prev[i] += d * row[i];
        }
        delta.swap(prev);
    }
}

void TrainingSet::push_back(std::span<const double> x, double y) {
    if (width == 0 && features.empty()) width = x.size();
    if (x.size() != width) throw Error(ErrorCode::input_shape, "feature row width mismatch");
    features.insert(features.end(), x.begin(), x.end());
    targets.push_back(y);
}

std::vector<double> backward(const Mlp& net, std::span<const BatchExample> batch, std::span<const double> output_grads) {
    if (batch.size() != output_grads.size())
        throw Error(ErrorCode::input_shape, "batch and loss-gradient sizes differ");
    std::vector<double> grad(net.parameter_count(), 0.0);
    Tape tape;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        net.forward(batch[i].x, tape);
        net.accumulate_gradient(tape, output_grads[i], grad);
    }
    return grad;
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw Error(ErrorCode::configuration, "batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::configuration, "learning_rate must be positive");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw Error(ErrorCode::configuration, "validation_fraction must lie in (0,1)");
    if (!(improvement_tolerance > 0.0)) throw Error(ErrorCode::configuration, "improvement_tolerance must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_epsilon > 0.0))
        throw Error(ErrorCode::configuration, "Adam parameters out of range");
}

double mean_loss(const Mlp& h, const Mlp* alpha, const LossSpec& loss, const TrainingSet& data,
                 std::span<const std::size_t> rows) {
    if (rows.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i : rows) {
        const auto x = data.row(i);
        const double z = h.forward(x);
        const double a = alpha ? alpha->forward(x) : 0.0;
        total += loss_value(loss, z, a, data.targets[i]);
    }
    return total / static_cast<double>(rows.size());
}

namespace {

class Adam {
public:
    Adam(std::size_t n, const TrainConfig& cfg) : m_(n, 0.0), v_(n, 0.0), cfg_(cfg) {}

    void step(std::span<double> params, std::span<const double> grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * grad[i];
            v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * grad[i] * grad[i];
            const double mhat = m_[i] / c1;
            const double vhat = v_[i] / c2;
            params[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_epsilon);
        }
    }

private:
    std::vector<double> m_, v_;
    const TrainConfig& cfg_;
    std::uint64_t t_ = 0;
};

}  // namespace

TrainResult train(Mlp h, std::optional<Mlp> alpha, const TrainingSet& data, const LossSpec& loss,
                  const TrainConfig& cfg) {
    cfg.validate();
    loss.validate();
    if (loss.uses_alpha() && !alpha)
        throw Error(ErrorCode::configuration, std::string(to_string(loss.kind)) + " loss needs an alpha network");
    if (!loss.uses_alpha() && alpha)
        throw Error(ErrorCode::configuration, std::string(to_string(loss.kind)) + " loss takes no alpha network");
    if (data.size() == 0) throw Error(ErrorCode::configuration, "training data is empty");
    if (data.width != h.input_width() || (alpha && data.width != alpha->input_width()))
        throw Error(ErrorCode::input_shape, "feature width does not match the network input");

    // Seeded split: shuffle once, the tail becomes the validation set.
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto n = data.size();
    const std::size_t n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(cfg.validation_fraction * static_cast<double>(n))));
    if (n_val >= n) throw Error(ErrorCode::configuration, "training split is empty");
    std::vector<std::size_t> train_rows(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    const std::vector<std::size_t> val_rows(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    if (cfg.batch_size > train_rows.size())
        throw Error(ErrorCode::configuration, "batch_size " + std::to_string(cfg.batch_size) +
                                                  " exceeds training split of " + std::to_string(train_rows.size()));

    TrainResult result{{h, alpha, loss}, {}};
    auto& report = result.report;
    // `reference` drives patience and only moves on a real improvement;
    // `best` tracks the plain minimum whose weights are returned.
    double reference = std::numeric_limits<double>::infinity();
    double best = reference;
    std::size_t stall = 0;

    Adam adam_h(h.parameter_count(), cfg);
    std::optional<Adam> adam_a;
    if (alpha) adam_a.emplace(alpha->parameter_count(), cfg);
    std::vector<double> grad_h(h.parameter_count());
    std::vector<double> grad_a(alpha ? alpha->parameter_count() : 0);
    Tape tape_h, tape_a;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(train_rows.begin(), train_rows.end(), rng);
        for (std::size_t start = 0; start < train_rows.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, train_rows.size());
            const double scale = 1.0 / static_cast<double>(stop - start);
            std::fill(grad_h.begin(), grad_h.end(), 0.0);
            std::fill(grad_a.begin(), grad_a.end(), 0.0);
            for (std::size_t j = start; j < stop; ++j) {
                const std::size_t i = train_rows[j];
                const auto x = data.row(i);
                const double z = h.forward(x, tape_h);
                const double a = alpha ? alpha->forward(x, tape_a) : 0.0;
                const auto g = loss_gradients(loss, z, a, data.targets[i]);
                h.accumulate_gradient(tape_h, g.dz * scale, grad_h);
                if (alpha) alpha->accumulate_gradient(tape_a, g.da * scale, grad_a);
            }
            adam_h.step(h.parameters(), grad_h);
            if (alpha) adam_a->step(alpha->parameters(), grad_a);
        }

        const Mlp* alpha_ptr = alpha ? &*alpha : nullptr;
        report.train_loss_trace.push_back(mean_loss(h, alpha_ptr, loss, data, train_rows));
        const double val = mean_loss(h, alpha_ptr, loss, data, val_rows);
        report.val_loss_trace.push_back(val);
        report.epochs_run = epoch + 1;

        if (!std::isfinite(val)) throw Error(ErrorCode::numeric, "validation loss is not finite");
        if (val < best) {
            best = val;
            result.model.h = h;
            result.model.alpha = alpha;
            report.best_epoch = epoch + 1;
        }
        if (val < reference - cfg.improvement_tolerance || !std::isfinite(reference)) {
            reference = val;
            stall = 0;
        } else if (++stall >= cfg.patience) {
            report.stopped_early = true;
            break;
        }
    }
    return result;
}

}  // namespace dru
