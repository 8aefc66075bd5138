#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fhn/dataset.hpp"
#include "fhn/errors.hpp"

namespace fhn {

enum class Activation : std::uint8_t { Swish, Identity };

struct DenseSpec {
    int units = 0;
};
struct Conv1dSpec {
    int filters = 0;
    int kernel = 3;
    int stride = 2;  // no padding
};
struct AvgPool1dSpec {
    int size = 2;
    int stride = 2;
};
struct FlattenSpec {};
struct ActivationSpec {
    Activation fn = Activation::Swish;
};

using LayerSpec =
    std::variant<DenseSpec, Conv1dSpec, AvgPool1dSpec, FlattenSpec, ActivationSpec>;

struct NetworkSpec {
    int input_len = 0;
    int input_channels = 1;
    std::vector<LayerSpec> layers;
    int output_len = 0;
};

// L hidden Dense{units}+Swish blocks followed by a linear Dense{output_len}.
NetworkSpec dense_network(int input_len, int hidden_layers, int units, int output_len);

// conv_blocks blocks of Conv1d(base_filters*2^b, k=3, s=2)+Swish+AvgPool(2,2),
// then Flatten and two Dense{32}+Swish, closed by a linear Dense{output_len}.
NetworkSpec cnn_network(int input_len, int conv_blocks, int base_filters, int output_len);

// (length, channels) at each stage; buffers are stored position-major
// (value at position p, channel c sits at index p*channels + c), which makes
// Flatten the identity in (position, channel) order.
struct Shape {
    int len = 0;
    int channels = 1;
    int flat() const { return len * channels; }
};

// Shapes before each layer plus the final output shape; throws ShapeError if
// any stage collapses below length 1 or the final size differs from
// output_len. Conv/pool lengths follow L' = floor((L - k)/s) + 1.
std::vector<Shape> propagate_shapes(const NetworkSpec& spec);

// Dense(in->out): in*out + out. Conv1d(c_in->c_out, k): c_out*k*c_in + c_out.
// Pooling/activation/flatten contribute nothing.
std::int64_t param_count(const NetworkSpec& spec);

double swish(double x);
double swish_derivative(double x);

struct Network {
    NetworkSpec spec;
    std::vector<double> params;
};

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out)), kernel included in
// the conv fans), zero biases. Layer l draws from substream l of the seed.
Network init_weights(const NetworkSpec& spec, std::uint64_t seed);

std::vector<double> forward(const Network& net, std::span<const double> input);

// Mean-squared-error loss over output coordinates and its exact gradient
// with respect to all parameters; grad is overwritten.
double backward(const Network& net, std::span<const double> input,
                std::span<const double> target, std::vector<double>& grad);

// Gradient of the batch-mean loss over the given sample indices. The serial
// path is the reference; the parallel path computes per-sample gradients
// concurrently and reduces them in index order, so both are bit-identical.
double batch_gradient(const Network& net, const Dataset& ds,
                      std::span<const std::size_t> indices, std::vector<double>& grad,
                      Exec exec = Exec::Parallel);

// Forward pass over a whole dataset; row i is the prediction for sample i.
std::vector<std::vector<double>> predict(const Network& net, const Dataset& ds,
                                         Exec exec = Exec::Parallel);

// Mean per-sample MSE over a dataset (fixed-order reduction).
double mean_loss(const Network& net, const Dataset& ds, Exec exec = Exec::Parallel);

struct AdamState {
    std::int64_t step = 0;
    std::vector<double> m, v;
    double lr = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
};

AdamState make_adam_state(std::size_t n_params, double lr, double beta1 = 0.9,
                          double beta2 = 0.999, double eps = 1e-7);

// One bias-corrected Adam update: p -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad);

struct TrainConfig {
    int epochs = 200;
    int batch_size = 32;
    double lr = 0.002;
    std::uint64_t shuffle_seed = 42;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
    Exec exec = Exec::Parallel;
};

struct EpochStats {
    int epoch = 0;        // 1-based
    double train_loss = 0.0;
    double valid_loss = 0.0;
};

struct TrainResult {
    Network net;
    std::vector<EpochStats> history;
};

// Per epoch: reshuffle (substream = epoch of shuffle_seed), split into
// batches (final smaller batch kept), one Adam step per batch. No early
// stopping; the validation loss is only recorded. Throws NonFiniteLoss with
// the epoch/batch position if the loss leaves the finite range.
TrainResult train(Network net, const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& cfg);

// Model container: magic FHNNN1, canonical textual spec header, then the
// flat little-endian f64 parameter vector.
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);

} // namespace fhn
