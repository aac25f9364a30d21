#include <doctest.h>

#include <cmath>

#include "eden/diffusion.hpp"
#include "helpers.hpp"

using namespace eden;
using namespace eden::diffusion;
using test::random_frame;
using test::random_tensor;

namespace {

DiTConfig small_dit() {
    DiTConfig c;
    c.hidden_dim = 32;
    c.heads = 2;
    c.n_blocks = 2;
    c.latent_dim = 4;
    c.patch_size = 4;
    c.native_h = 32;
    c.native_w = 32;
    return c;
}

template <typename T>
void randomize(DiffusionTransformer<T>& dit, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < dit.params().size(); ++i) init_normal(dit.params()[i], rng, 0.1);
}

}  // namespace

TEST_CASE("timestep features") {
    const auto f0 = timestep_features<double>(0.0, 8);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(f0[j] == 0.0);
        CHECK(f0[4 + j] == 1.0);
    }
    const auto f = timestep_features<double>(0.3, 8);
    // frequencies 1, 1e4^(1/3), 1e4^(2/3), 1e4
    const double freq = std::exp(std::log(1e4) / 3.0);
    CHECK(f[1] == doctest::Approx(std::sin(0.3 * freq)).epsilon(1e-12));
    CHECK(f[4] == doctest::Approx(std::cos(0.3)).epsilon(1e-12));
    CHECK_THROWS_AS(timestep_features<double>(1.5, 8), Error);
    CHECK_THROWS_AS(timestep_features<double>(-0.1, 8), Error);
}

TEST_CASE("forward process endpoints and velocity target") {
    const auto x0 = random_tensor<double>(6, 4, 1), eps = random_tensor<double>(6, 4, 2);
    CHECK(forward_sample(x0, eps, 0.0).x_t == x0);
    CHECK(forward_sample(x0, eps, 1.0).x_t == eps);
    const auto mid = forward_sample(x0, eps, 0.25).x_t;
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(mid[i] == doctest::Approx(0.75 * x0[i] + 0.25 * eps[i]));
    const auto v = velocity_target(x0, eps);
    CHECK(flow_loss(v, x0, eps) == 0.0);
    Tensor<double> off = v;
    off.fill(0.0);
    double ref = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) ref += v[i] * v[i] / v.size();
    CHECK(flow_loss(off, x0, eps) == doctest::Approx(ref).epsilon(1e-14));
    Graph<double> g(false);
    CHECK(g.scalar(flow_loss(g, g.input(off), x0, eps)) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("euler integration with the true velocity recovers x0") {
    const auto x0 = random_tensor<double>(5, 3, 3), eps = random_tensor<double>(5, 3, 4);
    const VelocityField<double> field = [&](const Tensor<double>& x, double t) {
        // Reconstruct v from the straight path through x at time t, rather than returning it directly.
        Tensor<double> v(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i) v[i] = t > 0.0 ? (x[i] - x0[i]) / t : eps[i] - x0[i];
        return v;
    };
    for (int steps : {1, 2, 7, 50}) {
        const auto out = euler_integrate(eps, steps, field);
        for (std::size_t i = 0; i < x0.size(); ++i) CHECK(std::abs(out[i] - x0[i]) <= 1e-9);
    }
    CHECK(euler_integrate(eps, 0, field) == eps);
    CHECK_THROWS_AS(euler_integrate(eps, -1, field), Error);
}

TEST_CASE("difference context") {
    const Frame a = random_frame(8, 8, 1), b = random_frame(8, 8, 2);
    const DatasetStats stats{0.8, 0.05, 1.0};
    CHECK(difference_context(a, b, stats) == difference_context(b, a, stats));
    CHECK(difference_context(a, a, stats) == doctest::Approx((1.0 - 0.8) / 0.05).epsilon(1e-12));
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_similarity(a, Frame(8, 8)), Error);
    CHECK_THROWS_AS(cosine_similarity(a, Frame(4, 8)), Error);
    DatasetStats bad{0.0, 0.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("a fresh DiT block is the identity and the fresh model predicts zero velocity") {
    DiffusionTransformer<double> dit(small_dit(), 3);
    Graph<double> g(false);
    const Frame i0 = random_frame(32, 32, 1), i1 = random_frame(32, 32, 2);
    const auto ctx = dit.embed_context(g, i0, i1);
    CHECK(ctx.grid_h == 4);
    CHECK(ctx.grid_w == 4);
    const Var x = g.input(random_tensor<double>(16, 32, 4));
    const Var c = dit.condition(g, 0.4, 0.7);
    const Tensor<double> xv = g.value(x);
    for (const auto& b : dit.blocks()) {
        const Tensor<double> y = g.value(dit.dit_block(g, b, x, ctx.ctx0, ctx.ctx1, c));
        CHECK(y == xv);
    }
    const auto v = dit.predict_velocity(random_tensor<double>(16, 4, 5), 0.4, i0, i1, DatasetStats{});
    CHECK(v.rows() == 16);
    CHECK(v.cols() == 4);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == 0.0);
}

TEST_CASE("difference embedding conditions the velocity once trained weights are present") {
    DiffusionTransformer<double> dit(small_dit(), 3);
    randomize(dit, 9);
    const Frame i0 = random_frame(32, 32, 1), i1 = random_frame(32, 32, 2);
    const auto x = random_tensor<double>(16, 4, 5);
    Graph<double> g(false);
    const Tensor<double> va = g.value(dit.predict_velocity(g, g.input(x), 0.5, i0, i1, DatasetStats{}, 0.0));
    const Tensor<double> vb = g.value(dit.predict_velocity(g, g.input(x), 0.5, i0, i1, DatasetStats{}, 2.0));
    CHECK_FALSE(va == vb);

    auto cfg = small_dit();
    cfg.use_difference_embedding = false;
    DiffusionTransformer<double> plain(cfg, 3);
    randomize(plain, 9);
    CHECK(plain.params().find("dit.diff_embed.fc1.weight") == nullptr);
    Graph<double> h(false);
    const Tensor<double> pa = h.value(plain.predict_velocity(h, h.input(x), 0.5, i0, i1, DatasetStats{}, 0.0));
    const Tensor<double> pb = h.value(plain.predict_velocity(h, h.input(x), 0.5, i0, i1, DatasetStats{}, 2.0));
    CHECK(pa == pb);
}

TEST_CASE("predict_velocity gradient with respect to the noised latent") {
    DiffusionTransformer<double> dit(small_dit(), 3);
    randomize(dit, 11);
    const Frame i0 = random_frame(32, 32, 1), i1 = random_frame(32, 32, 2);
    const auto x0 = random_tensor<double>(16, 4, 6), eps = random_tensor<double>(16, 4, 7);
    const double err = test::check_input_grad(random_tensor<double>(16, 4, 8), [&](Graph<double>& g, Var x) {
        return flow_loss(g, dit.predict_velocity(g, x, 0.3, i0, i1, DatasetStats{}), x0, eps);
    });
    CHECK(err < 1e-5);
}

TEST_CASE("euler_sample is seeded") {
    DiffusionTransformer<double> dit(small_dit(), 3);
    randomize(dit, 12);
    const Frame i0 = random_frame(32, 32, 1), i1 = random_frame(32, 32, 2);
    CHECK(dit.euler_sample(i0, i1, 2, 5, DatasetStats{}) == dit.euler_sample(i0, i1, 2, 5, DatasetStats{}));
    CHECK_FALSE(dit.euler_sample(i0, i1, 2, 5, DatasetStats{}) == dit.euler_sample(i0, i1, 2, 6, DatasetStats{}));
    // Zero steps returns the initial noise.
    const auto n0 = dit.euler_sample(i0, i1, 0, 5, DatasetStats{});
    Rng rng(derive_seed(5, "sampling"));
    CHECK(n0 == rng.normal_tensor<double>(16, 4));
}

TEST_CASE("DiT configuration errors") {
    auto c = small_dit();
    c.hidden_dim = 30;  // not divisible by 4 heads
    c.heads = 4;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK_THROWS_AS(small_dit().check_frame(36, 32), Error);
    CHECK_NOTHROW(small_dit().check_frame(32, 48));
    tokenizer::TokenizerConfig tc;
    tc.latent_dim = 8;
    tc.patch_size = 4;
    CHECK_THROWS_AS(check_compatible(tc, small_dit()), Error);
    DiffusionTransformer<double> dit(small_dit(), 3);
    CHECK_THROWS_AS(dit.euler_sample(random_frame(32, 32, 1), random_frame(32, 24, 2), 1, 0, DatasetStats{}), Error);
}
