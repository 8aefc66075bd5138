#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fhn/neuralnet.hpp"
#include "fhn/rng.hpp"
#include "support/oracles.hpp"

using namespace fhn;
namespace fs = std::filesystem;

namespace {

std::vector<double> random_vector(std::size_t n, RngStream& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.next_gaussian();
    return v;
}

Dataset toy_dataset(const NetworkSpec& spec, std::size_t n, std::uint64_t seed) {
    Dataset ds;
    ds.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(seed, i);
        ds.samples[i].features = random_vector(static_cast<std::size_t>(spec.input_len), rng);
        ds.samples[i].target = random_vector(static_cast<std::size_t>(spec.output_len), rng);
    }
    return ds;
}

// max relative error between analytic and finite-difference gradients
double gradient_check(const NetworkSpec& spec, std::uint64_t seed) {
    Network net = init_weights(spec, seed);
    RngStream rng(seed, 999);
    // nonzero biases so their gradients are exercised from a generic point
    for (double& p : net.params)
        if (p == 0.0) p = 0.1 * rng.next_gaussian();
    const std::vector<double> input =
        random_vector(static_cast<std::size_t>(spec.input_len), rng);
    const std::vector<double> target =
        random_vector(static_cast<std::size_t>(spec.output_len), rng);

    std::vector<double> analytic;
    backward(net, input, target, analytic);

    auto loss_at = [&](const std::vector<double>& params) {
        Network probe = net;
        probe.params = params;
        const std::vector<double> out = forward(probe, input);
        double loss = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double r = out[i] - target[i];
            loss += r * r;
        }
        return loss / static_cast<double>(out.size());
    };
    const std::vector<double> fd = test::finite_difference_gradient(loss_at, net.params, 1e-5);

    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-3});
        worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
    }
    return worst;
}

} // namespace

TEST_CASE("parameter counting") {
    CHECK(param_count(dense_network(1000, 2, 4, 2)) == 4034);
    NetworkSpec tiny;
    tiny.input_len = 1;
    tiny.layers = {DenseSpec{1}};
    tiny.output_len = 1;
    CHECK(param_count(tiny) == 2);

    // independent per-layer tally for the reference CNN on a length-1000 input
    const auto conv = [](int f, int c) { return f * 3 * c + f; };
    const std::int64_t tally = conv(8, 1) + conv(16, 8) + conv(32, 16)  // conv stack
                               + (15 * 32) * 32 + 32                    // dense on flatten(15x32)
                               + 32 * 32 + 32                           // second dense
                               + 32 * 2 + 2;                            // linear head
    const NetworkSpec cnn = cnn_network(1000, 3, 8, 2);
    CHECK(param_count(cnn) == tally);
    CHECK(static_cast<std::int64_t>(init_weights(cnn, 3).params.size()) == tally);
}

TEST_CASE("cnn shape chain for a length-1000 input") {
    const NetworkSpec spec = cnn_network(1000, 3, 8, 2);
    const std::vector<Shape> shapes = propagate_shapes(spec);
    std::vector<int> lens;
    for (const Shape& s : shapes) lens.push_back(s.len);
    // conv/pool stages: 1000 -> 499 -> 249 -> 124 -> 62 -> 30 -> 15
    CHECK(lens[0] == 1000);
    CHECK(lens[1] == 499);   // conv
    CHECK(lens[3] == 249);   // pool (after activation)
    CHECK(lens[4] == 124);
    CHECK(lens[6] == 62);
    CHECK(lens[7] == 30);
    CHECK(lens[9] == 15);
}

TEST_CASE("shape propagation failures raise ShapeError") {
    NetworkSpec bad = cnn_network(8, 3, 2, 2);  // collapses below the kernel size
    CHECK_THROWS_AS(propagate_shapes(bad), ShapeError);
    NetworkSpec mismatch = dense_network(10, 1, 4, 2);
    mismatch.output_len = 3;
    CHECK_THROWS_AS(param_count(mismatch), ShapeError);
}

TEST_CASE("param_count equals the parameter vector length on random specs") {
    RngStream rng(15, 0);
    int checked = 0;
    for (int trial = 0; checked < 50 && trial < 500; ++trial) {
        const int input = 16 + static_cast<int>(rng.next_u64() % 200);
        NetworkSpec spec;
        if (rng.next_u64() % 2 == 0) {
            spec = dense_network(input, 1 + static_cast<int>(rng.next_u64() % 4),
                                 1 + static_cast<int>(rng.next_u64() % 10), 2);
        } else {
            spec = cnn_network(input, 1 + static_cast<int>(rng.next_u64() % 2),
                               1 + static_cast<int>(rng.next_u64() % 4), 2);
        }
        try {
            propagate_shapes(spec);
        } catch (const ShapeError&) {
            continue;  // only constructible specs are in scope
        }
        CHECK(param_count(spec) ==
              static_cast<std::int64_t>(init_weights(spec, trial).params.size()));
        ++checked;
    }
    CHECK(checked == 50);
}

TEST_CASE("swish") {
    CHECK(swish(0.0) == 0.0);
    CHECK(swish(20.0) == doctest::Approx(20.0).epsilon(1e-7));
    CHECK(swish(-20.0) == doctest::Approx(0.0).epsilon(1e-7));
    for (double x = -5.0; x <= 5.0; x += 0.25) {
        const double fd = (swish(x + 1e-6) - swish(x - 1e-6)) / 2e-6;
        CHECK(swish_derivative(x) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("forward on constructed layers") {
    SUBCASE("all-zero parameters map anything to zero") {
        const NetworkSpec spec = cnn_network(64, 2, 2, 2);
        Network net = init_weights(spec, 1);
        std::fill(net.params.begin(), net.params.end(), 0.0);
        RngStream rng(2, 0);
        const std::vector<double> out = forward(net, random_vector(64, rng));
        for (const double y : out) CHECK(y == 0.0);
    }
    SUBCASE("selector kernel picks strided inputs") {
        NetworkSpec spec;
        spec.input_len = 5;
        spec.layers = {Conv1dSpec{1, 3, 2}};
        spec.output_len = 2;
        Network net{spec, {1.0, 0.0, 0.0, 0.0}};  // kernel [1,0,0], bias 0
        const std::vector<double> out = forward(net, std::vector<double>{5, 6, 7, 8, 9});
        CHECK(out == std::vector<double>{5, 7});
    }
    SUBCASE("average pooling") {
        NetworkSpec spec;
        spec.input_len = 4;
        spec.layers = {AvgPool1dSpec{2, 2}};
        spec.output_len = 2;
        Network net{spec, {}};
        CHECK(forward(net, std::vector<double>{1, 3, 5, 7}) == std::vector<double>{2, 6});
    }
}

TEST_CASE("analytic gradients match finite differences") {
    SUBCASE("dense network") {
        for (std::uint64_t s = 0; s < 10; ++s)
            CHECK(gradient_check(dense_network(8, 2, 4, 2), s) < 1e-5);
    }
    SUBCASE("cnn") {
        for (std::uint64_t s = 0; s < 10; ++s)
            CHECK(gradient_check(cnn_network(32, 2, 2, 2), s) < 1e-5);
    }
    SUBCASE("lone conv layer") {
        NetworkSpec spec;
        spec.input_len = 11;
        spec.layers = {Conv1dSpec{2, 3, 2}, FlattenSpec{}};
        spec.output_len = 10;
        for (std::uint64_t s = 0; s < 10; ++s) CHECK(gradient_check(spec, s) < 1e-5);
    }
    SUBCASE("pooling plus dense") {
        NetworkSpec spec;
        spec.input_len = 12;
        spec.layers = {AvgPool1dSpec{2, 2}, FlattenSpec{}, DenseSpec{3},
                       ActivationSpec{Activation::Swish}, DenseSpec{2}};
        spec.output_len = 2;
        for (std::uint64_t s = 0; s < 10; ++s) CHECK(gradient_check(spec, s) < 1e-5);
    }
    SUBCASE("identity activation") {
        NetworkSpec spec;
        spec.input_len = 6;
        spec.layers = {DenseSpec{4}, ActivationSpec{Activation::Identity}, DenseSpec{2}};
        spec.output_len = 2;
        for (std::uint64_t s = 0; s < 10; ++s) CHECK(gradient_check(spec, s) < 1e-5);
    }
}

TEST_CASE("zero residual gives zero loss and zero head-bias gradient") {
    const NetworkSpec spec = dense_network(8, 2, 4, 2);
    const Network net = init_weights(spec, 11);
    RngStream rng(12, 0);
    const std::vector<double> input = random_vector(8, rng);
    const std::vector<double> target = forward(net, input);
    std::vector<double> grad;
    const double loss = backward(net, input, target, grad);
    CHECK(loss == 0.0);
    // the final linear layer's bias gradient is exactly the output residual
    CHECK(grad[grad.size() - 1] == 0.0);
    CHECK(grad[grad.size() - 2] == 0.0);
}

TEST_CASE("adam") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        std::vector<double> params{1.0, -2.0, 3.0};
        AdamState st = make_adam_state(3, 0.002);
        adam_step(st, params, {0.0, 0.0, 0.0});
        CHECK(params == std::vector<double>{1.0, -2.0, 3.0});
    }
    SUBCASE("first step is approximately -lr * sign(g)") {
        std::vector<double> params{0.0, 0.0};
        AdamState st = make_adam_state(2, 0.002);
        adam_step(st, params, {0.5, -3.0});
        CHECK(params[0] == doctest::Approx(-0.002).epsilon(1e-3));
        CHECK(params[1] == doctest::Approx(0.002).epsilon(1e-3));
    }
    SUBCASE("ten steps on f(p) = p^2/2 match a hand-rolled scalar oracle") {
        std::vector<double> params{1.0};
        AdamState st = make_adam_state(1, 0.1);

        double p = 1.0, m = 0.0, v = 0.0;
        for (int t = 1; t <= 10; ++t) {
            const double g = p;  // d/dp of p^2/2
            adam_step(st, params, {g});
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            const double mh = m / (1.0 - std::pow(0.9, t));
            const double vh = v / (1.0 - std::pow(0.999, t));
            p -= 0.1 * mh / (std::sqrt(vh) + 1e-7);
            CHECK(params[0] == doctest::Approx(p).epsilon(1e-12));
        }
    }
}

TEST_CASE("glorot initialization") {
    const NetworkSpec spec = dense_network(1000, 1, 100, 2);
    const Network a = init_weights(spec, 42);
    const Network b = init_weights(spec, 42);
    CHECK(a.params == b.params);

    const double bound = std::sqrt(6.0 / (1000.0 + 100.0));
    double sum2 = 0.0;
    const std::size_t n_w = 1000 * 100;
    for (std::size_t i = 0; i < n_w; ++i) {
        CHECK(std::abs(a.params[i]) <= bound);
        sum2 += a.params[i] * a.params[i];
    }
    const double want_var = 2.0 / (1000.0 + 100.0);
    CHECK(sum2 / static_cast<double>(n_w) == doctest::Approx(want_var).epsilon(0.05));
    // biases start at zero
    CHECK(a.params[n_w] == 0.0);
}

TEST_CASE("batch gradient: parallel equals serial bit for bit") {
    for (const NetworkSpec& spec : {dense_network(40, 2, 8, 2), cnn_network(64, 2, 2, 2)}) {
        const Network net = init_weights(spec, 5);
        const Dataset ds = toy_dataset(spec, 37, 6);
        std::vector<std::size_t> idx(ds.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<double> gs, gp;
        const double ls = batch_gradient(net, ds, idx, gs, Exec::Serial);
        const double lp = batch_gradient(net, ds, idx, gp, Exec::Parallel);
        CHECK(ls == lp);
        CHECK(gs == gp);
    }
}

TEST_CASE("training") {
    const NetworkSpec spec = dense_network(20, 2, 8, 2);
    const Dataset train_raw = toy_dataset(spec, 48, 21);
    const Dataset valid_raw = toy_dataset(spec, 16, 22);

    SUBCASE("zero epochs returns the initialization") {
        const Network init = init_weights(spec, 3);
        TrainConfig cfg;
        cfg.epochs = 0;
        const TrainResult r = train(init, train_raw, valid_raw, cfg);
        CHECK(r.net.params == init.params);
        CHECK(r.history.empty());
    }
    SUBCASE("identical seeds give identical trajectories") {
        TrainConfig cfg;
        cfg.epochs = 5;
        cfg.batch_size = 16;
        const TrainResult a = train(init_weights(spec, 3), train_raw, valid_raw, cfg);
        const TrainResult b = train(init_weights(spec, 3), train_raw, valid_raw, cfg);
        CHECK(a.net.params == b.net.params);
        REQUIRE(a.history.size() == b.history.size());
        for (std::size_t e = 0; e < a.history.size(); ++e) {
            CHECK(a.history[e].train_loss == b.history[e].train_loss);
            CHECK(a.history[e].valid_loss == b.history[e].valid_loss);
        }
    }
    SUBCASE("serial and parallel training agree bit for bit") {
        TrainConfig cfg;
        cfg.epochs = 3;
        cfg.batch_size = 16;
        cfg.exec = Exec::Serial;
        const TrainResult a = train(init_weights(spec, 3), train_raw, valid_raw, cfg);
        cfg.exec = Exec::Parallel;
        const TrainResult b = train(init_weights(spec, 3), train_raw, valid_raw, cfg);
        CHECK(a.net.params == b.net.params);
        for (std::size_t e = 0; e < a.history.size(); ++e)
            CHECK(a.history[e].train_loss == b.history[e].train_loss);
    }
    SUBCASE("loss decreases on a learnable problem") {
        TrainConfig cfg;
        cfg.epochs = 30;
        cfg.batch_size = 16;
        const TrainResult r = train(init_weights(spec, 3), train_raw, valid_raw, cfg);
        CHECK(r.history.back().train_loss < r.history.front().train_loss);
    }
    SUBCASE("non-finite loss aborts with position information") {
        Network net = init_weights(spec, 3);
        net.params[0] = 1e308;
        net.params[1] = 1e308;
        TrainConfig cfg;
        cfg.epochs = 1;
        CHECK_THROWS_AS(train(net, train_raw, valid_raw, cfg), NonFiniteLoss);
    }
}

TEST_CASE("scaling the linear head scales the outputs") {
    const NetworkSpec spec = dense_network(10, 2, 6, 2);
    Network net = init_weights(spec, 8);
    RngStream rng(9, 0);
    for (double& p : net.params) p += 0.05 * rng.next_gaussian();
    const std::vector<double> input = random_vector(10, rng);
    const std::vector<double> base = forward(net, input);

    const double c = 3.5;
    const std::size_t head = net.params.size() - (6 * 2 + 2);
    Network scaled = net;
    for (std::size_t i = head; i < net.params.size(); ++i) scaled.params[i] *= c;
    const std::vector<double> out = forward(scaled, input);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out[i] == doctest::Approx(c * base[i]).epsilon(1e-12));
}

TEST_CASE("model file round-trip") {
    const NetworkSpec spec = cnn_network(64, 2, 2, 2);
    const Network net = init_weights(spec, 77);
    const auto path = (fs::temp_directory_path() / "fhn_test_model.fhnnn").string();
    save_network(path, net);
    const Network back = load_network(path);
    CHECK(back.params == net.params);
    CHECK(back.spec.input_len == net.spec.input_len);
    CHECK(back.spec.layers.size() == net.spec.layers.size());
    CHECK(param_count(back.spec) == param_count(net.spec));

    // truncation is detected
    std::ifstream is(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    is.close();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
    os.close();
    CHECK_THROWS_AS(load_network(path), FormatVersionMismatch);
    fs::remove(path);
}

TEST_CASE("dataset shape mismatches are rejected") {
    const NetworkSpec spec = dense_network(20, 1, 4, 2);
    const Network net = init_weights(spec, 1);
    const Dataset wrong = toy_dataset(dense_network(21, 1, 4, 2), 4, 1);
    std::vector<std::size_t> idx{0, 1, 2, 3};
    std::vector<double> grad;
    CHECK_THROWS_AS(batch_gradient(net, wrong, idx, grad), ShapeError);
    CHECK_THROWS_AS(mean_loss(net, wrong), ShapeError);
}
