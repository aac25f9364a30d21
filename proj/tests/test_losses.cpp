#include <doctest.h>

#include "eden/losses.hpp"
#include "helpers.hpp"

using namespace eden;
using namespace eden::losses;

TEST_CASE("kl_penalty unit values") {
    tokenizer::LatentPosterior<double> post{Tensor<double>(3, 4, 0.0), Tensor<double>(3, 4, 0.0), 1, 3};
    CHECK(kl_penalty(post) == 0.0);
    post.mean.fill(1.0);
    CHECK(kl_penalty(post) == 0.5);
    // Graph level matches.
    Graph<double> g(false);
    CHECK(g.scalar(kl_penalty(g, g.input(post.mean), g.input(post.logvar))) == 0.5);
    // logvar = log 2, mean 0: 0.5 (2 - 1 - log 2)
    post.mean.fill(0.0);
    post.logvar.fill(std::log(2.0));
    CHECK(kl_penalty(post) == doctest::Approx(0.5 * (1.0 - std::log(2.0))).epsilon(1e-14));
}

TEST_CASE("l1 loss of a uniform offset") {
    Frame a(4, 4, 0.25f), b(4, 4, 0.75f);
    CHECK(l1_loss(a, b) == 0.5);
    CHECK(l1_loss(a, a) == 0.0);
    CHECK_THROWS_AS(l1_loss(a, Frame(4, 2)), Error);
}

TEST_CASE("edge pyramid perceptual loss of an impulse matches a hand count") {
    Frame pred(4, 4, 0.0f), target(4, 4, 0.0f);
    target.at(1, 1, 0) = 1.0f;
    EdgePyramid<double> pyr;
    // image: 1 / 48; dx, dy at full size: two unit differences over 4*3*3 = 36 entries each;
    // pooled image has 0.25 at cell (0, 0): one 0.25 difference over 2*1*3 = 6 entries per direction.
    const double expected = 1.0 / 48.0 + 2.0 / 36.0 + 2.0 / 36.0 + 2.0 * (0.0625 / 6.0);
    CHECK(perceptual_loss(pred, target, pyr) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(perceptual_loss(target, target, pyr) == 0.0);
    CHECK(perceptual_loss(pred, target, pyr) == perceptual_loss(target, pred, pyr));
}

namespace {

// Brute-force convolution over an (h, w, c) image, zero padding.
std::vector<double> naive_conv(const std::vector<double>& in, std::size_t h, std::size_t w, std::size_t cin,
                               const Discriminator<double>::Conv& conv, std::size_t& oh, std::size_t& ow) {
    const std::size_t k = conv.kernel, s = conv.stride, p = conv.pad;
    const std::size_t cout = conv.proj.weight->value.cols();
    oh = (h + 2 * p - k) / s + 1;
    ow = (w + 2 * p - k) / s + 1;
    std::vector<double> out(oh * ow * cout);
    for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
            for (std::size_t co = 0; co < cout; ++co) {
                double acc = conv.proj.bias->value[co];
                for (std::size_t ky = 0; ky < k; ++ky)
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const long y = static_cast<long>(oy * s + ky) - static_cast<long>(p);
                        const long x = static_cast<long>(ox * s + kx) - static_cast<long>(p);
                        if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) continue;
                        for (std::size_t c = 0; c < cin; ++c)
                            acc += in[(y * w + x) * cin + c] * conv.proj.weight->value((ky * k + kx) * cin + c, co);
                    }
                out[(oy * ow + ox) * cout + co] = acc;
            }
    return out;
}

}  // namespace

TEST_CASE("discriminator matches a brute-force convolution stack") {
    DiscriminatorConfig cfg;
    cfg.widths = {4, 8};
    Discriminator<double> disc(cfg, 3);
    // Non-zero biases so the padding path is exercised.
    Rng rng(4);
    for (auto& layer : disc.layers()) init_normal(*layer.proj.bias, rng, 0.1);
    Frame img(16, 16, 0.0f);
    img.at(7, 9, 1) = 1.0f;
    img.at(0, 0, 2) = 0.5f;

    std::vector<double> x(img.pixels.begin(), img.pixels.end());
    std::size_t h = 16, w = 16, c = 3;
    for (std::size_t i = 0; i < disc.layers().size(); ++i) {
        std::size_t oh, ow;
        x = naive_conv(x, h, w, c, disc.layers()[i], oh, ow);
        if (i + 1 < disc.layers().size())
            for (double& v : x) v = v > 0 ? v : cfg.slope * v;
        h = oh;
        w = ow;
        c = disc.layers()[i].proj.weight->value.cols();
    }
    std::size_t oh = 0, ow = 0;
    const Tensor<double> logits = disc.forward(img, &oh, &ow);
    REQUIRE(oh == h);
    REQUIRE(ow == w);
    CHECK(oh == 4);
    REQUIRE(logits.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(logits[i] == doctest::Approx(x[i]).epsilon(1e-12));
}

TEST_CASE("discriminator is translation equivariant in the interior") {
    DiscriminatorConfig cfg;
    cfg.widths = {8, 8, 8};
    Discriminator<double> disc(cfg, 6);
    for (auto& layer : disc.layers()) layer.proj.bias->value.fill(0.0);
    Frame a(64, 64, 0.0f), b(64, 64, 0.0f);
    a.at(24, 24, 0) = 1.0f;
    b.at(32, 24, 0) = 1.0f;  // 8 pixels down = one logit row
    std::size_t oh = 0, ow = 0;
    const auto la = disc.forward(a, &oh, &ow), lb = disc.forward(b);
    REQUIRE(oh == 8);
    for (std::size_t y = 0; y + 1 < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) CHECK(lb[(y + 1) * ow + x] == la[y * ow + x]);
}

TEST_CASE("discriminator rejects frames below its receptive size") {
    Discriminator<double> disc(DiscriminatorConfig{}, 1);
    CHECK(disc.min_size() == 16);
    CHECK_THROWS_AS(disc.forward(Frame(8, 8)), Error);
}

TEST_CASE("hinge losses") {
    DiscriminatorConfig cfg;
    cfg.widths = {4};
    Discriminator<double> disc(cfg, 2);
    const Frame real = test::random_frame(16, 16, 1), fake = test::random_frame(16, 16, 2);
    const auto dr = disc.forward(real), df = disc.forward(fake);
    double gen = 0.0, d = 0.0;
    for (std::size_t i = 0; i < df.size(); ++i) {
        gen -= df[i] / df.size();
        d += (std::max(0.0, 1.0 - dr[i]) + std::max(0.0, 1.0 + df[i])) / df.size();
    }
    Graph<double> g(false);
    const auto terms = adversarial_losses(g, disc, g.input(real.tensor<double>()), g.input(fake.tensor<double>()), 16, 16);
    CHECK(g.scalar(terms.gen) == doctest::Approx(gen).epsilon(1e-12));
    CHECK(g.scalar(terms.disc) == doctest::Approx(d).epsilon(1e-12));
}

TEST_CASE("total loss applies the configured weights verbatim") {
    const LossWeights w;
    CHECK(w.l1 == 1.0);
    CHECK(w.perceptual == 1.0);
    CHECK(w.adversarial == 0.5);
    CHECK(w.kl == 1e-6);
    DiscriminatorConfig cfg;
    cfg.widths = {4};
    Discriminator<double> disc(cfg, 2);
    EdgePyramid<double> pyr;
    const Frame pred = test::random_frame(16, 16, 1), target = test::random_frame(16, 16, 2);
    Graph<double> g(false);
    const Var mean = g.input(test::random_tensor<double>(4, 3, 5)), logvar = g.input(test::random_tensor<double>(4, 3, 6));
    const auto t = tokenizer_total_loss(g, g.input(pred.tensor<double>()), g.input(target.tensor<double>()), 16, 16, mean,
                                        logvar, w, pyr, &disc);
    const auto& p = t.parts;
    CHECK(p.adversarial != 0.0);
    CHECK(g.scalar(t.total) == doctest::Approx(p.l1 + p.perceptual + 0.5 * p.adversarial + 1e-6 * p.kl).epsilon(1e-14));
    CHECK(p.total == g.scalar(t.total));
    LossWeights bad;
    bad.kl = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}
