#include "fhn/neuralnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fhn/csv.hpp"
#include "fhn/rng.hpp"

namespace fhn {

double swish(double x) { return x / (1.0 + std::exp(-x)); }

double swish_derivative(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

NetworkSpec dense_network(int input_len, int hidden_layers, int units, int output_len) {
    NetworkSpec spec;
    spec.input_len = input_len;
    spec.input_channels = 1;
    spec.output_len = output_len;
    for (int l = 0; l < hidden_layers; ++l) {
        spec.layers.emplace_back(DenseSpec{units});
        spec.layers.emplace_back(ActivationSpec{Activation::Swish});
    }
    spec.layers.emplace_back(DenseSpec{output_len});
    return spec;
}

NetworkSpec cnn_network(int input_len, int conv_blocks, int base_filters, int output_len) {
    NetworkSpec spec;
    spec.input_len = input_len;
    spec.input_channels = 1;
    spec.output_len = output_len;
    for (int b = 0; b < conv_blocks; ++b) {
        spec.layers.emplace_back(Conv1dSpec{base_filters * (1 << b), 3, 2});
        spec.layers.emplace_back(ActivationSpec{Activation::Swish});
        spec.layers.emplace_back(AvgPool1dSpec{2, 2});
    }
    spec.layers.emplace_back(FlattenSpec{});
    for (int l = 0; l < 2; ++l) {
        spec.layers.emplace_back(DenseSpec{32});
        spec.layers.emplace_back(ActivationSpec{Activation::Swish});
    }
    spec.layers.emplace_back(DenseSpec{output_len});
    return spec;
}

namespace {

struct LayerPlan {
    LayerSpec spec;
    Shape in, out;
    std::size_t offset = 0;  // parameter offset for dense/conv layers
};

struct Plan {
    std::vector<LayerPlan> layers;
    std::vector<Shape> shapes;  // layers.size() + 1 entries
    std::size_t n_params = 0;
    int max_flat = 0;
};

Plan compile(const NetworkSpec& spec) {
    if (spec.input_len < 1 || spec.input_channels < 1 || spec.output_len < 1)
        throw ShapeError("network: input/output sizes must be positive");

    Plan plan;
    Shape cur{spec.input_len, spec.input_channels};
    plan.shapes.push_back(cur);
    plan.max_flat = cur.flat();

    for (const LayerSpec& ls : spec.layers) {
        LayerPlan lp;
        lp.spec = ls;
        lp.in = cur;
        lp.offset = plan.n_params;
        if (const auto* d = std::get_if<DenseSpec>(&ls)) {
            if (d->units < 1) throw ShapeError("dense: units must be positive");
            plan.n_params += static_cast<std::size_t>(cur.flat()) * d->units + d->units;
            cur = Shape{d->units, 1};
        } else if (const auto* cv = std::get_if<Conv1dSpec>(&ls)) {
            if (cv->filters < 1 || cv->kernel < 1 || cv->stride < 1)
                throw ShapeError("conv1d: bad hyperparameters");
            if (cur.len < cv->kernel)
                throw ShapeError("conv1d: input length " + std::to_string(cur.len) +
                                 " below kernel " + std::to_string(cv->kernel));
            plan.n_params += static_cast<std::size_t>(cv->filters) * cv->kernel * cur.channels +
                             cv->filters;
            cur = Shape{(cur.len - cv->kernel) / cv->stride + 1, cv->filters};
        } else if (const auto* pl = std::get_if<AvgPool1dSpec>(&ls)) {
            if (pl->size < 1 || pl->stride < 1) throw ShapeError("avgpool1d: bad hyperparameters");
            if (cur.len < pl->size)
                throw ShapeError("avgpool1d: input length " + std::to_string(cur.len) +
                                 " below pool size " + std::to_string(pl->size));
            cur = Shape{(cur.len - pl->size) / pl->stride + 1, cur.channels};
        } else if (std::get_if<FlattenSpec>(&ls)) {
            cur = Shape{cur.flat(), 1};
        } else {
            // activation: shape unchanged
        }
        lp.out = cur;
        plan.layers.push_back(lp);
        plan.shapes.push_back(cur);
        plan.max_flat = std::max(plan.max_flat, cur.flat());
    }

    if (cur.flat() != spec.output_len)
        throw ShapeError("network: final size " + std::to_string(cur.flat()) +
                         " differs from output_len " + std::to_string(spec.output_len));
    return plan;
}

struct Workspace {
    std::vector<std::vector<double>> acts;  // acts[l] = input of layer l; back() = output
    std::vector<double> ga, gb;             // backward ping-pong buffers

    void fit(const Plan& plan) {
        acts.resize(plan.shapes.size());
        for (std::size_t l = 0; l < plan.shapes.size(); ++l)
            acts[l].resize(static_cast<std::size_t>(plan.shapes[l].flat()));
        ga.resize(static_cast<std::size_t>(plan.max_flat));
        gb.resize(static_cast<std::size_t>(plan.max_flat));
    }
};

void forward_pass(const Plan& plan, const double* params, std::span<const double> input,
                  Workspace& ws) {
    std::copy(input.begin(), input.end(), ws.acts[0].begin());
    for (std::size_t l = 0; l < plan.layers.size(); ++l) {
        const LayerPlan& lp = plan.layers[l];
        const double* x = ws.acts[l].data();
        double* y = ws.acts[l + 1].data();
        if (const auto* d = std::get_if<DenseSpec>(&lp.spec)) {
            const int in = lp.in.flat();
            const double* W = params + lp.offset;
            const double* b = W + static_cast<std::size_t>(in) * d->units;
            for (int o = 0; o < d->units; ++o) {
                const double* row = W + static_cast<std::size_t>(o) * in;
                double acc = b[o];
                for (int i = 0; i < in; ++i) acc += row[i] * x[i];
                y[o] = acc;
            }
        } else if (const auto* cv = std::get_if<Conv1dSpec>(&lp.spec)) {
            const int C = lp.in.channels, F = cv->filters, K = cv->kernel, S = cv->stride;
            const double* W = params + lp.offset;
            const double* b = W + static_cast<std::size_t>(F) * K * C;
            for (int p = 0; p < lp.out.len; ++p) {
                for (int f = 0; f < F; ++f) {
                    const double* wf = W + static_cast<std::size_t>(f) * K * C;
                    double acc = b[f];
                    for (int k = 0; k < K; ++k) {
                        const double* xk = x + static_cast<std::size_t>(p * S + k) * C;
                        const double* wk = wf + static_cast<std::size_t>(k) * C;
                        for (int c = 0; c < C; ++c) acc += wk[c] * xk[c];
                    }
                    y[static_cast<std::size_t>(p) * F + f] = acc;
                }
            }
        } else if (const auto* pl = std::get_if<AvgPool1dSpec>(&lp.spec)) {
            const int C = lp.in.channels;
            const double inv = 1.0 / pl->size;
            for (int p = 0; p < lp.out.len; ++p) {
                for (int c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (int j = 0; j < pl->size; ++j)
                        acc += x[static_cast<std::size_t>(p * pl->stride + j) * C + c];
                    y[static_cast<std::size_t>(p) * C + c] = acc * inv;
                }
            }
        } else if (std::get_if<FlattenSpec>(&lp.spec)) {
            std::memcpy(y, x, static_cast<std::size_t>(lp.in.flat()) * sizeof(double));
        } else {
            const auto& a = std::get<ActivationSpec>(lp.spec);
            const int n = lp.in.flat();
            if (a.fn == Activation::Swish)
                for (int i = 0; i < n; ++i) y[i] = swish(x[i]);
            else
                std::memcpy(y, x, static_cast<std::size_t>(n) * sizeof(double));
        }
    }
}

// Requires a completed forward_pass in ws. Overwrites grad (n_params).
double backward_pass(const Plan& plan, const double* params, std::span<const double> target,
                     Workspace& ws, double* grad) {
    std::memset(grad, 0, plan.n_params * sizeof(double));

    const std::vector<double>& out = ws.acts.back();
    const int C_out = static_cast<int>(out.size());
    double loss = 0.0;
    double* g = ws.ga.data();
    double* gnext = ws.gb.data();
    for (int i = 0; i < C_out; ++i) {
        const double r = out[static_cast<std::size_t>(i)] - target[static_cast<std::size_t>(i)];
        loss += r * r;
        g[i] = 2.0 * r / C_out;
    }
    loss /= C_out;

    for (std::size_t li = plan.layers.size(); li-- > 0;) {
        const LayerPlan& lp = plan.layers[li];
        const double* x = ws.acts[li].data();
        if (const auto* d = std::get_if<DenseSpec>(&lp.spec)) {
            const int in = lp.in.flat();
            const double* W = params + lp.offset;
            double* dW = grad + lp.offset;
            double* db = dW + static_cast<std::size_t>(in) * d->units;
            std::memset(gnext, 0, static_cast<std::size_t>(in) * sizeof(double));
            for (int o = 0; o < d->units; ++o) {
                const double go = g[o];
                const double* row = W + static_cast<std::size_t>(o) * in;
                double* drow = dW + static_cast<std::size_t>(o) * in;
                db[o] += go;
                for (int i = 0; i < in; ++i) {
                    drow[i] += go * x[i];
                    gnext[i] += go * row[i];
                }
            }
        } else if (const auto* cv = std::get_if<Conv1dSpec>(&lp.spec)) {
            const int C = lp.in.channels, F = cv->filters, K = cv->kernel, S = cv->stride;
            const double* W = params + lp.offset;
            double* dW = grad + lp.offset;
            double* db = dW + static_cast<std::size_t>(F) * K * C;
            std::memset(gnext, 0, static_cast<std::size_t>(lp.in.flat()) * sizeof(double));
            for (int p = 0; p < lp.out.len; ++p) {
                for (int f = 0; f < F; ++f) {
                    const double go = g[static_cast<std::size_t>(p) * F + f];
                    const double* wf = W + static_cast<std::size_t>(f) * K * C;
                    double* dwf = dW + static_cast<std::size_t>(f) * K * C;
                    db[f] += go;
                    for (int k = 0; k < K; ++k) {
                        const std::size_t xb = static_cast<std::size_t>(p * S + k) * C;
                        const double* wk = wf + static_cast<std::size_t>(k) * C;
                        double* dwk = dwf + static_cast<std::size_t>(k) * C;
                        for (int c = 0; c < C; ++c) {
                            dwk[c] += go * x[xb + c];
                            gnext[xb + c] += go * wk[c];
                        }
                    }
                }
            }
        } else if (const auto* pl = std::get_if<AvgPool1dSpec>(&lp.spec)) {
            const int C = lp.in.channels;
            const double inv = 1.0 / pl->size;
            std::memset(gnext, 0, static_cast<std::size_t>(lp.in.flat()) * sizeof(double));
            for (int p = 0; p < lp.out.len; ++p) {
                for (int c = 0; c < C; ++c) {
                    const double go = g[static_cast<std::size_t>(p) * C + c] * inv;
                    for (int j = 0; j < pl->size; ++j)
                        gnext[static_cast<std::size_t>(p * pl->stride + j) * C + c] += go;
                }
            }
        } else if (std::get_if<FlattenSpec>(&lp.spec)) {
            std::memcpy(gnext, g, static_cast<std::size_t>(lp.in.flat()) * sizeof(double));
        } else {
            const auto& a = std::get<ActivationSpec>(lp.spec);
            const int n = lp.in.flat();
            if (a.fn == Activation::Swish)
                for (int i = 0; i < n; ++i) gnext[i] = g[i] * swish_derivative(x[i]);
            else
                std::memcpy(gnext, g, static_cast<std::size_t>(n) * sizeof(double));
        }
        std::swap(g, gnext);
    }
    return loss;
}

double sample_loss(const Plan& plan, const double* params, const Sample& s, Workspace& ws) {
    forward_pass(plan, params, s.features, ws);
    const std::vector<double>& out = ws.acts.back();
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = out[i] - s.target[i];
        loss += r * r;
    }
    return loss / static_cast<double>(out.size());
}

int thread_count(Exec exec) {
#ifdef _OPENMP
    return exec == Exec::Parallel ? omp_get_max_threads() : 1;
#else
    (void)exec;
    return 1;
#endif
}

void check_dataset(const Plan& plan, const NetworkSpec& spec, const Dataset& ds) {
    if (ds.samples.empty()) throw EmptyInput("network: empty dataset");
    if (ds.feature_len() != static_cast<std::size_t>(plan.shapes.front().flat()))
        throw ShapeError("network: dataset feature length " + std::to_string(ds.feature_len()) +
                         " does not match input size " +
                         std::to_string(plan.shapes.front().flat()));
    if (ds.target_len() != static_cast<std::size_t>(spec.output_len))
        throw ShapeError("network: dataset target length mismatch");
}

// Persistent buffers for the training loop; per-sample gradients are reduced
// in sample order so the result is independent of the thread count.
struct BatchEngine {
    Plan plan;
    std::vector<Workspace> ws;
    std::vector<double> sample_grads;  // batch_size x n_params
    std::vector<double> losses;

    BatchEngine(const NetworkSpec& spec, int max_batch, Exec exec) : plan(compile(spec)) {
        ws.resize(static_cast<std::size_t>(thread_count(exec)));
        for (auto& w : ws) w.fit(plan);
        sample_grads.resize(static_cast<std::size_t>(max_batch) * plan.n_params);
        losses.resize(static_cast<std::size_t>(max_batch));
    }

    double run(const Network& net, const Dataset& ds, std::span<const std::size_t> indices,
               std::vector<double>& grad, Exec exec) {
        const long long b = static_cast<long long>(indices.size());
        const double* params = net.params.data();
        if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
            for (long long i = 0; i < b; ++i) {
#ifdef _OPENMP
                Workspace& w = ws[static_cast<std::size_t>(omp_get_thread_num())];
#else
                Workspace& w = ws[0];
#endif
                const Sample& s = ds.samples[indices[static_cast<std::size_t>(i)]];
                forward_pass(plan, params, s.features, w);
                losses[static_cast<std::size_t>(i)] = backward_pass(
                    plan, params, s.target, w,
                    sample_grads.data() + static_cast<std::size_t>(i) * plan.n_params);
            }
        } else {
            for (long long i = 0; i < b; ++i) {
                const Sample& s = ds.samples[indices[static_cast<std::size_t>(i)]];
                forward_pass(plan, params, s.features, ws[0]);
                losses[static_cast<std::size_t>(i)] = backward_pass(
                    plan, params, s.target, ws[0],
                    sample_grads.data() + static_cast<std::size_t>(i) * plan.n_params);
            }
        }

        grad.assign(plan.n_params, 0.0);
        double loss = 0.0;
        for (long long i = 0; i < b; ++i) {
            const double* gi = sample_grads.data() + static_cast<std::size_t>(i) * plan.n_params;
            for (std::size_t w = 0; w < plan.n_params; ++w) grad[w] += gi[w];
            loss += losses[static_cast<std::size_t>(i)];
        }
        const double inv = 1.0 / static_cast<double>(b);
        for (std::size_t w = 0; w < plan.n_params; ++w) grad[w] *= inv;
        return loss * inv;
    }
};

} // namespace

std::vector<Shape> propagate_shapes(const NetworkSpec& spec) { return compile(spec).shapes; }

std::int64_t param_count(const NetworkSpec& spec) {
    return static_cast<std::int64_t>(compile(spec).n_params);
}

Network init_weights(const NetworkSpec& spec, std::uint64_t seed) {
    const Plan plan = compile(spec);
    Network net;
    net.spec = spec;
    net.params.assign(plan.n_params, 0.0);
    for (std::size_t l = 0; l < plan.layers.size(); ++l) {
        const LayerPlan& lp = plan.layers[l];
        double bound = 0.0;
        std::size_t n_weights = 0;
        if (const auto* d = std::get_if<DenseSpec>(&lp.spec)) {
            const double fan_in = lp.in.flat(), fan_out = d->units;
            bound = std::sqrt(6.0 / (fan_in + fan_out));
            n_weights = static_cast<std::size_t>(lp.in.flat()) * d->units;
        } else if (const auto* cv = std::get_if<Conv1dSpec>(&lp.spec)) {
            const double fan_in = static_cast<double>(lp.in.channels) * cv->kernel;
            const double fan_out = static_cast<double>(cv->filters) * cv->kernel;
            bound = std::sqrt(6.0 / (fan_in + fan_out));
            n_weights = static_cast<std::size_t>(cv->filters) * cv->kernel * lp.in.channels;
        } else {
            continue;
        }
        RngStream rng(seed, static_cast<std::uint64_t>(l));
        double* w = net.params.data() + lp.offset;
        for (std::size_t i = 0; i < n_weights; ++i)
            w[i] = bound * (2.0 * rng.next_uniform() - 1.0);
        // biases stay zero
    }
    return net;
}

std::vector<double> forward(const Network& net, std::span<const double> input) {
    const Plan plan = compile(net.spec);
    if (input.size() != static_cast<std::size_t>(plan.shapes.front().flat()))
        throw ShapeError("forward: input size mismatch");
    Workspace ws;
    ws.fit(plan);
    forward_pass(plan, net.params.data(), input, ws);
    return ws.acts.back();
}

double backward(const Network& net, std::span<const double> input,
                std::span<const double> target, std::vector<double>& grad) {
    const Plan plan = compile(net.spec);
    if (input.size() != static_cast<std::size_t>(plan.shapes.front().flat()))
        throw ShapeError("backward: input size mismatch");
    if (target.size() != static_cast<std::size_t>(net.spec.output_len))
        throw ShapeError("backward: target size mismatch");
    Workspace ws;
    ws.fit(plan);
    grad.resize(plan.n_params);
    forward_pass(plan, net.params.data(), input, ws);
    return backward_pass(plan, net.params.data(), target, ws, grad.data());
}

double batch_gradient(const Network& net, const Dataset& ds,
                      std::span<const std::size_t> indices, std::vector<double>& grad,
                      Exec exec) {
    if (indices.empty()) throw EmptyInput("batch_gradient: empty batch");
    BatchEngine engine(net.spec, static_cast<int>(indices.size()), exec);
    check_dataset(engine.plan, net.spec, ds);
    return engine.run(net, ds, indices, grad, exec);
}

std::vector<std::vector<double>> predict(const Network& net, const Dataset& ds, Exec exec) {
    const Plan plan = compile(net.spec);
    check_dataset(plan, net.spec, ds);
    const long long n = static_cast<long long>(ds.samples.size());
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n));
    std::vector<Workspace> ws(static_cast<std::size_t>(thread_count(exec)));
    for (auto& w : ws) w.fit(plan);

#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long long i = 0; i < n; ++i) {
#ifdef _OPENMP
        Workspace& w = ws[static_cast<std::size_t>(omp_get_thread_num())];
#else
        Workspace& w = ws[0];
#endif
        forward_pass(plan, net.params.data(), ds.samples[static_cast<std::size_t>(i)].features, w);
        out[static_cast<std::size_t>(i)] = w.acts.back();
    }
    return out;
}

double mean_loss(const Network& net, const Dataset& ds, Exec exec) {
    const Plan plan = compile(net.spec);
    check_dataset(plan, net.spec, ds);
    const long long n = static_cast<long long>(ds.samples.size());
    std::vector<double> losses(static_cast<std::size_t>(n));
    std::vector<Workspace> ws(static_cast<std::size_t>(thread_count(exec)));
    for (auto& w : ws) w.fit(plan);

#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long long i = 0; i < n; ++i) {
#ifdef _OPENMP
        Workspace& w = ws[static_cast<std::size_t>(omp_get_thread_num())];
#else
        Workspace& w = ws[0];
#endif
        losses[static_cast<std::size_t>(i)] =
            sample_loss(plan, net.params.data(), ds.samples[static_cast<std::size_t>(i)], w);
    }
    double total = 0.0;
    for (long long i = 0; i < n; ++i) total += losses[static_cast<std::size_t>(i)];
    return total / static_cast<double>(n);
}

AdamState make_adam_state(std::size_t n_params, double lr, double beta1, double beta2,
                          double eps) {
    AdamState st;
    st.m.assign(n_params, 0.0);
    st.v.assign(n_params, 0.0);
    st.lr = lr;
    st.beta1 = beta1;
    st.beta2 = beta2;
    st.eps = eps;
    return st;
}

void adam_step(AdamState& st, std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != st.m.size() || grad.size() != st.m.size())
        throw ShapeError("adam_step: size mismatch");
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

TrainResult train(Network net, const Dataset& train_set, const Dataset& valid_set,
                  const TrainConfig& cfg) {
    if (cfg.batch_size < 1) throw Error("train: batch_size must be >= 1");
    if (cfg.epochs < 0) throw Error("train: negative epoch count");

    BatchEngine engine(net.spec, cfg.batch_size, cfg.exec);
    check_dataset(engine.plan, net.spec, train_set);
    if (!valid_set.samples.empty()) check_dataset(engine.plan, net.spec, valid_set);

    const std::size_t n = train_set.samples.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    AdamState state = make_adam_state(engine.plan.n_params, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    std::vector<double> grad;

    TrainResult result;
    result.history.reserve(static_cast<std::size_t>(cfg.epochs));

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        RngStream shuffle_rng(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch));
        for (std::size_t i = n; i-- > 1;) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % (i + 1));
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        int batch_index = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch_size), n - start);
            const double loss = engine.run(
                net, train_set, std::span<const std::size_t>(order.data() + start, len), grad,
                cfg.exec);
            if (!std::isfinite(loss))
                throw NonFiniteLoss("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    " batch " + std::to_string(batch_index));
            adam_step(state, net.params, grad);
            epoch_loss += loss * static_cast<double>(len);
            ++batch_index;
        }

        EpochStats es;
        es.epoch = epoch;
        es.train_loss = epoch_loss / static_cast<double>(n);
        es.valid_loss = valid_set.samples.empty()
                            ? std::numeric_limits<double>::quiet_NaN()
                            : mean_loss(net, valid_set, cfg.exec);
        result.history.push_back(es);
    }

    result.net = std::move(net);
    return result;
}

namespace {

std::string layer_line(const LayerSpec& ls) {
    std::ostringstream os;
    if (const auto* d = std::get_if<DenseSpec>(&ls)) {
        os << "dense units=" << d->units;
    } else if (const auto* cv = std::get_if<Conv1dSpec>(&ls)) {
        os << "conv1d filters=" << cv->filters << " kernel=" << cv->kernel
           << " stride=" << cv->stride;
    } else if (const auto* pl = std::get_if<AvgPool1dSpec>(&ls)) {
        os << "avgpool1d size=" << pl->size << " stride=" << pl->stride;
    } else if (std::get_if<FlattenSpec>(&ls)) {
        os << "flatten";
    } else {
        os << (std::get<ActivationSpec>(ls).fn == Activation::Swish ? "swish" : "identity");
    }
    return os.str();
}

int parse_field(const std::string& token, const std::string& key) {
    const std::string prefix = key + "=";
    if (token.rfind(prefix, 0) != 0)
        throw FormatVersionMismatch("model header: expected " + prefix + "..., got " + token);
    return std::stoi(token.substr(prefix.size()));
}

LayerSpec parse_layer_line(const std::string& line) {
    std::istringstream is(line);
    std::string kind;
    is >> kind;
    std::vector<std::string> tokens;
    for (std::string t; is >> t;) tokens.push_back(t);
    if (kind == "dense" && tokens.size() == 1) return DenseSpec{parse_field(tokens[0], "units")};
    if (kind == "conv1d" && tokens.size() == 3)
        return Conv1dSpec{parse_field(tokens[0], "filters"), parse_field(tokens[1], "kernel"),
                          parse_field(tokens[2], "stride")};
    if (kind == "avgpool1d" && tokens.size() == 2)
        return AvgPool1dSpec{parse_field(tokens[0], "size"), parse_field(tokens[1], "stride")};
    if (kind == "flatten" && tokens.empty()) return FlattenSpec{};
    if (kind == "swish" && tokens.empty()) return ActivationSpec{Activation::Swish};
    if (kind == "identity" && tokens.empty()) return ActivationSpec{Activation::Identity};
    throw FormatVersionMismatch("model header: bad layer line: " + line);
}

std::string expect_line(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatVersionMismatch("model file truncated");
    return line;
}

long expect_keyed_int(std::istream& is, const std::string& key) {
    const std::string line = expect_line(is);
    std::istringstream ls(line);
    std::string k;
    long v = 0;
    if (!(ls >> k >> v) || k != key)
        throw FormatVersionMismatch("model header: expected '" + key + " <n>', got '" + line + "'");
    return v;
}

} // namespace

void save_network(const std::string& path, const Network& net) {
    static_assert(std::endian::native == std::endian::little,
                  "model container assumes a little-endian host");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "FHNNN1\n";
    os << "input_len " << net.spec.input_len << '\n';
    os << "input_channels " << net.spec.input_channels << '\n';
    os << "output_len " << net.spec.output_len << '\n';
    os << "layers " << net.spec.layers.size() << '\n';
    for (const LayerSpec& ls : net.spec.layers) os << layer_line(ls) << '\n';
    os << "params " << net.params.size() << '\n';
    os.write(reinterpret_cast<const char*>(net.params.data()),
             static_cast<std::streamsize>(net.params.size() * sizeof(double)));
    if (!os) throw IoError("write failed: " + path);
}

Network load_network(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    if (expect_line(is) != "FHNNN1") throw FormatVersionMismatch("not a FHNNN1 model: " + path);

    Network net;
    net.spec.input_len = static_cast<int>(expect_keyed_int(is, "input_len"));
    net.spec.input_channels = static_cast<int>(expect_keyed_int(is, "input_channels"));
    net.spec.output_len = static_cast<int>(expect_keyed_int(is, "output_len"));
    const long n_layers = expect_keyed_int(is, "layers");
    for (long l = 0; l < n_layers; ++l) net.spec.layers.push_back(parse_layer_line(expect_line(is)));
    const long n_params = expect_keyed_int(is, "params");
    if (n_params != param_count(net.spec))
        throw FormatVersionMismatch("model: parameter count does not match spec");

    net.params.resize(static_cast<std::size_t>(n_params));
    is.read(reinterpret_cast<char*>(net.params.data()),
            static_cast<std::streamsize>(net.params.size() * sizeof(double)));
    if (!is) throw FormatVersionMismatch("model file truncated");
    is.peek();
    if (!is.eof()) throw FormatVersionMismatch("model file has trailing bytes");
    return net;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "epoch,train_loss,valid_loss\n";
    for (const EpochStats& e : history)
        os << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.valid_loss)
           << '\n';
    if (!os) throw IoError("write failed: " + path);
}

} // namespace fhn
