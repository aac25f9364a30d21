// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails. Pass criterion numbers (e.g. "1 2 11") to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eden/core/rng.hpp"
#include "eden/data.hpp"
#include "eden/diffusion.hpp"
#include "eden/evaluation.hpp"
#include "eden/frame.hpp"
#include "eden/losses.hpp"
#include "eden/tokenizer.hpp"
#include "eden/training.hpp"

#ifndef EDEN_CLI_PATH
#error "EDEN_CLI_PATH must name the eden executable"
#endif

using namespace eden;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Frame random_frame(std::size_t h, std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    Frame f(h, w);
    for (float& v : f.pixels) v = static_cast<float>(rng.uniform(0.05, 0.95));
    return f;
}

template <typename T>
void randomize(ParamStore<T>& ps, std::uint64_t seed, double scale) {
    Rng rng(seed);
    for (std::size_t i = 0; i < ps.size(); ++i) init_normal(ps[i], rng, scale);
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("eden_acceptance_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// ------------------------------------------------------------------ 1

Outcome rectified_flow_oracle() {
    Rng rng(1);
    const Tensor<double> x0 = rng.normal_tensor<double>(112, 16), eps = rng.normal_tensor<double>(112, 16);
    // The field reconstructs eps - x0 from the current point on the straight path.
    const diffusion::VelocityField<double> field = [&](const Tensor<double>& x, double t) {
        Tensor<double> v(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i) v[i] = (x[i] - x0[i]) / t;
        return v;
    };
    // The constant field eps - x0 itself.
    const Tensor<double> target = diffusion::velocity_target(x0, eps);
    const diffusion::VelocityField<double> constant = [&](const Tensor<double>&, double) { return target; };
    double worst = 0.0;
    for (const auto* f : {&field, &constant})
        for (int steps : {1, 2, 50}) {
            const auto out = diffusion::euler_integrate(eps, steps, *f);
            for (std::size_t i = 0; i < out.size(); ++i) worst = std::max(worst, std::abs(out[i] - x0[i]));
        }
    return {worst <= 1e-6, "max |x - x0| = " + fmt("%.3g", worst) + " over steps {1, 2, 50}"};
}

// ------------------------------------------------------------------ 2

template <typename T>
bool endpoints_exact(std::uint64_t seed) {
    Rng rng(seed);
    const Tensor<T> x0 = rng.normal_tensor<T>(32, 16), eps = rng.normal_tensor<T>(32, 16);
    return diffusion::forward_sample(x0, eps, 0.0).x_t == x0 && diffusion::forward_sample(x0, eps, 1.0).x_t == eps &&
           diffusion::flow_loss(diffusion::velocity_target(x0, eps), x0, eps) == 0.0;
}

Outcome forward_endpoints() {
    const bool f = endpoints_exact<float>(2), d = endpoints_exact<double>(3);
    return {f && d, std::string("float ") + (f ? "exact" : "inexact") + ", double " + (d ? "exact" : "inexact")};
}

// ------------------------------------------------------------------ 3

diffusion::DiTConfig mid_dit() {
    diffusion::DiTConfig c;
    c.hidden_dim = 128;
    c.heads = 2;
    c.n_blocks = 4;
    c.latent_dim = 16;
    c.patch_size = 8;
    c.native_h = 64;
    c.native_w = 64;
    return c;
}

template <typename T>
std::pair<bool, bool> identity_at_init(std::uint64_t seed) {
    diffusion::DiffusionTransformer<T> dit(mid_dit(), seed);
    const Frame i0 = random_frame(64, 64, seed + 1), i1 = random_frame(64, 64, seed + 2);
    Graph<T> g(false);
    const auto ctx = dit.embed_context(g, i0, i1);
    Rng rng(seed + 3);
    const Var x = g.input(rng.normal_tensor<T>(ctx.grid_h * ctx.grid_w, 128));
    const Tensor<T> xv = g.value(x);
    const Var c = dit.condition(g, 0.37, 0.8);
    bool blocks = true;
    for (const auto& b : dit.blocks()) {
        const Tensor<T> y = g.value(dit.dit_block(g, b, x, ctx.ctx0, ctx.ctx1, c));
        blocks = blocks && y == xv;
    }
    const Tensor<T> v =
        dit.predict_velocity(rng.normal_tensor<T>(ctx.grid_h * ctx.grid_w, 16), 0.37, i0, i1, diffusion::DatasetStats{});
    bool zeros = true;
    for (std::size_t i = 0; i < v.size(); ++i) zeros = zeros && v[i] == T(0);
    return {blocks, zeros};
}

Outcome identity_at_init_check() {
    const auto [fb, fz] = identity_at_init<float>(10);
    const auto [db, dz] = identity_at_init<double>(20);
    return {fb && fz && db && dz, std::string("blocks bit-exact: ") + (fb && db ? "yes" : "no") +
                                      ", initial velocity all zero: " + (fz && dz ? "yes" : "no")};
}

// ------------------------------------------------------------------ 4

tokenizer::TokenGrid<double> random_grid(std::size_t gh, std::size_t gw, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    return {rng.normal_tensor<double>(gh * gw, dim), gh, gw};
}

Outcome pffm_geometry() {
    tokenizer::TokenizerConfig tc;
    tc.patch_size = 16;
    tc.hidden_dim = 16;
    tc.heads = 1;
    tc.n_blocks = 2;
    tc.latent_dim = 4;
    tc.native_h = 256;
    tc.native_w = 448;
    tokenizer::Tokenizer<double> tok(tc, 4);
    diffusion::DiTConfig dc;
    dc.hidden_dim = 16;
    dc.heads = 1;
    dc.n_blocks = 1;
    dc.latent_dim = 4;
    dc.patch_size = 16;
    dc.native_h = 256;
    dc.native_w = 448;
    diffusion::DiffusionTransformer<double> dit(dc, 5);

    bool ratio = true, groups = true, roundtrip = true;
    std::size_t blocks_seen = 0;
    tok.set_block_observer([&](const tokenizer::BlockShape& s) {
        ++blocks_seen;
        ratio = ratio && s.large_tokens == 4 * s.small_tokens;
    });
    const std::pair<std::size_t, std::size_t> sizes[] = {{64, 64}, {64, 128}, {256, 448}};
    for (const auto& [h, w] : sizes) {
        const Frame a = random_frame(h, w, h + w), b = random_frame(h, w, h + w + 1), c = random_frame(h, w, h + w + 2);
        const auto post = tok.encode(a, b, c);
        tok.decode(post.mean, a, c);
        Graph<double> g(false);
        const auto ctx = dit.embed_context(g, a, c);
        ratio = ratio && g.rows(ctx.ctx0) == 4 * ctx.grid_h * ctx.grid_w;

        const std::size_t lh = h / 16, lw = w / 16;
        const auto large = random_grid(lh, lw, 3, h * w);
        const Tensor<double> grouped = tokenizer::group_context(large);
        for (std::size_t sy = 0; sy < lh / 2; ++sy)
            for (std::size_t sx = 0; sx < lw / 2; ++sx)
                for (std::size_t k = 0; k < 4; ++k) {
                    const std::size_t src = (2 * sy + k / 2) * lw + 2 * sx + k % 2;
                    const std::size_t dst = 4 * (sy * (lw / 2) + sx) + k;
                    for (std::size_t ch = 0; ch < 3; ++ch)
                        groups = groups && grouped(dst, ch) == large.tokens(src, ch);
                }
        const auto small = random_grid(lh / 2, lw / 2, 3, h * w + 1);
        roundtrip = roundtrip && tokenizer::pool_tokens(tokenizer::upsample_tokens(small)).tokens == small.tokens;
    }
    const bool ok = ratio && groups && roundtrip && blocks_seen == 3 * 2 * tc.n_blocks;
    return {ok, "m = 4n in " + std::to_string(blocks_seen) + " block calls: " + (ratio ? "yes" : "no") +
                    ", grouping oracle: " + (groups ? "match" : "mismatch") +
                    ", pool(upsample(x)) = x: " + (roundtrip ? "yes" : "no")};
}

// ------------------------------------------------------------------ 5

// Hand attention over one 9-token sequence, returning the output at `pos`.
std::vector<double> oracle_temporal(const nn::Norm<double>& norm, const nn::Attention<double>& attn,
                                    const std::vector<std::vector<double>>& seq, std::size_t pos) {
    const std::size_t d = seq[0].size(), heads = attn.heads, hd = d / heads;
    auto ln = [&](const std::vector<double>& x) {
        double mean = 0.0, var = 0.0;
        for (double v : x) mean += v / d;
        for (double v : x) var += (v - mean) * (v - mean) / d;
        std::vector<double> y(d);
        for (std::size_t c = 0; c < d; ++c)
            y[c] = (x[c] - mean) / std::sqrt(var + 1e-6) * norm.gamma->value[c] + norm.beta->value[c];
        return y;
    };
    auto lin = [&](const nn::Linear<double>& l, const std::vector<double>& x) {
        std::vector<double> y(l.out());
        for (std::size_t o = 0; o < y.size(); ++o) {
            y[o] = l.bias->value[o];
            for (std::size_t i = 0; i < x.size(); ++i) y[o] += x[i] * l.weight->value(i, o);
        }
        return y;
    };
    std::vector<std::vector<double>> K, V;
    for (const auto& s : seq) {
        const auto n = ln(s);
        K.push_back(lin(attn.k, n));
        V.push_back(lin(attn.v, n));
    }
    const auto q = lin(attn.q, ln(seq[pos]));
    std::vector<double> mixed(d, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
        std::vector<double> s(seq.size());
        double mx = -1e300;
        for (std::size_t j = 0; j < seq.size(); ++j) {
            s[j] = 0.0;
            for (std::size_t c = h * hd; c < (h + 1) * hd; ++c) s[j] += q[c] * K[j][c];
            s[j] /= std::sqrt(static_cast<double>(hd));
            mx = std::max(mx, s[j]);
        }
        double z = 0.0;
        for (double& v : s) z += v = std::exp(v - mx);
        for (std::size_t j = 0; j < seq.size(); ++j)
            for (std::size_t c = h * hd; c < (h + 1) * hd; ++c) mixed[c] += s[j] / z * V[j][c];
    }
    auto out = lin(attn.out, mixed);
    for (std::size_t c = 0; c < d; ++c) out[c] += seq[pos][c];
    return out;
}

Outcome temporal_locality() {
    const std::size_t n = 6, d = 8;
    ParamStore<double> ps;
    Rng init(6);
    const auto norm = nn::Norm<double>::make(ps, "ta_norm", d);
    const auto attn = nn::Attention<double>::make(ps, "ta", d, 2, init);
    randomize(ps, 7, 0.5);
    Rng rng(8);
    const Tensor<double> stream = rng.normal_tensor<double>(n, d), c0 = rng.normal_tensor<double>(4 * n, d),
                         c1 = rng.normal_tensor<double>(4 * n, d);
    auto run = [&](const Tensor<double>& s, const Tensor<double>& a, const Tensor<double>& b) {
        Graph<double> g(false);
        return Tensor<double>(g.value(tokenizer::temporal_attention(g, norm, attn, g.input(s), g.input(a), g.input(b))));
    };
    const Tensor<double> base = run(stream, c0, c1);

    bool local = true;
    for (std::size_t j = 0; j < n; ++j) {
        for (int which = 0; which < 3; ++which) {
            Tensor<double> s = stream, a = c0, b = c1;
            if (which == 0) s(j, 3) += 0.7;
            if (which == 1) a(4 * j + 2, 1) += 0.7;
            if (which == 2) b(4 * j + 3, 5) -= 0.7;
            const Tensor<double> out = run(s, a, b);
            for (std::size_t r = 0; r < n; ++r) {
                bool same = true;
                for (std::size_t c = 0; c < d; ++c) same = same && out(r, c) == base(r, c);
                local = local && (r == j ? !same : same);
            }
        }
    }

    // Brute force: sequence (ctx0 group, stream token, ctx1 group), output at index 4.
    double worst = 0.0, worst_other = 1e300;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::vector<double>> seq;
        for (std::size_t k = 0; k < 4; ++k) seq.emplace_back(c0.data() + (4 * j + k) * d, c0.data() + (4 * j + k + 1) * d);
        seq.emplace_back(stream.data() + j * d, stream.data() + (j + 1) * d);
        for (std::size_t k = 0; k < 4; ++k) seq.emplace_back(c1.data() + (4 * j + k) * d, c1.data() + (4 * j + k + 1) * d);
        for (std::size_t pos = 0; pos < 9; ++pos) {
            // The residual uses the query token itself, so only pos = 4 can match.
            const auto ref = oracle_temporal(norm, attn, seq, pos);
            double err = 0.0;
            for (std::size_t c = 0; c < d; ++c) err = std::max(err, std::abs(ref[c] - base(j, c)));
            if (pos == 4)
                worst = std::max(worst, err);
            else
                worst_other = std::min(worst_other, err);
        }
    }
    const bool ok = local && worst <= 1e-12 && worst_other > 1e-3;
    return {ok, std::string("perturbing group j changes only token j: ") + (local ? "yes" : "no") +
                    ", index-4 oracle error " + fmt("%.2g", worst) + " (other indices >= " +
                    fmt("%.2g", worst_other) + ")"};
}

// ------------------------------------------------------------------ 6

struct GradCheck {
    std::size_t sampled = 0;
    double worst = 0.0;
};

// Central differences on randomly chosen parameter entries.
GradCheck check_param_grads(ParamStore<double>& ps, const std::function<Var(Graph<double>&)>& loss, std::size_t count,
                            std::uint64_t seed, double h = 1e-5) {
    ps.zero_grad();
    {
        Graph<double> g;
        g.backward(loss(g));
    }
    Rng rng(seed);
    GradCheck out;
    for (std::size_t s = 0; s < count; ++s) {
        Parameter<double>& p = ps[rng.index(ps.size())];
        const std::size_t k = rng.index(p.value.size());
        const double orig = p.value[k];
        auto eval = [&](double v) {
            p.value[k] = v;
            Graph<double> g(false);
            return g.scalar(loss(g));
        };
        const double numeric = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
        p.value[k] = orig;
        const double analytic = p.grad[k];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-7});
        out.worst = std::max(out.worst, std::abs(numeric - analytic) / denom);
        ++out.sampled;
    }
    return out;
}

Outcome gradient_checks() {
    tokenizer::TokenizerConfig tc;
    tc.patch_size = 4;
    tc.hidden_dim = 16;
    tc.heads = 2;
    tc.n_blocks = 2;
    tc.latent_dim = 4;
    tc.native_h = 16;
    tc.native_w = 16;
    tokenizer::Tokenizer<double> tok(tc, 11);
    randomize(tok.params(), 12, 0.2);
    const Frame i0 = random_frame(16, 16, 13), it = random_frame(16, 16, 14), i1 = random_frame(16, 16, 15);
    losses::LossWeights w;
    w.adversarial = 0.0;
    const losses::EdgePyramid<double> pyr;
    Rng nrng(16);
    const auto [gh, gw] = tok.latent_grid(16, 16);
    const Tensor<double> noise = nrng.normal_tensor<double>(gh * gw, tc.latent_dim);
    const auto tok_loss = [&](Graph<double>& g) {
        const auto post = tok.encode(g, i0, it, i1);
        const Var z = tokenizer::reparameterize(g, post.mean, post.logvar, noise);
        const Var out = tok.decode(g, z, i0, i1);
        return losses::tokenizer_total_loss<double>(g, out, g.input(it.tensor<double>()), 16, 16, post.mean, post.logvar, w,
                                                    pyr, nullptr)
            .total;
    };
    const GradCheck a = check_param_grads(tok.params(), tok_loss, 48, 17);

    diffusion::DiTConfig dc;
    dc.hidden_dim = 16;
    dc.heads = 2;
    dc.n_blocks = 1;
    dc.latent_dim = 4;
    dc.patch_size = 4;
    dc.native_h = 16;
    dc.native_w = 16;
    diffusion::DiffusionTransformer<double> dit(dc, 18);
    // Away from the zero initialization every path carries gradient.
    randomize(dit.params(), 19, 0.2);
    Rng drng(20);
    const Tensor<double> x0 = drng.normal_tensor<double>(4, 4), eps = drng.normal_tensor<double>(4, 4);
    const auto noised = diffusion::forward_sample(x0, eps, 0.6);
    const diffusion::DatasetStats stats{0.9, 0.05, 1.0};
    const auto flow = [&](Graph<double>& g) {
        const Var v = dit.predict_velocity(g, g.input(noised.x_t), noised.t, i0, i1, stats);
        return diffusion::flow_loss(g, v, x0, eps);
    };
    const GradCheck b = check_param_grads(dit.params(), flow, 48, 21);

    const bool ok = a.sampled >= 32 && b.sampled >= 32 && a.worst <= 1e-3 && b.worst <= 1e-3;
    return {ok, "tokenizer loss worst rel err " + fmt("%.2g", a.worst) + " over " + std::to_string(a.sampled) +
                    " params, flow loss " + fmt("%.2g", b.worst) + " over " + std::to_string(b.sampled)};
}

// ------------------------------------------------------------------ 7

Outcome loss_unit_values() {
    tokenizer::LatentPosterior<double> post{Tensor<double>(4, 16, 0.0), Tensor<double>(4, 16, 0.0), 2, 2};
    const double zero = losses::kl_penalty(post);
    post.mean.fill(1.0);
    const double half = losses::kl_penalty(post);

    const losses::LossWeights w;
    const bool defaults = w.l1 == 1.0 && w.perceptual == 1.0 && w.adversarial == 0.5 && w.kl == 1e-6;
    losses::DiscriminatorConfig dcfg;
    dcfg.widths = {8};
    const losses::Discriminator<double> disc(dcfg, 3);
    const losses::EdgePyramid<double> pyr;
    const Frame pred = random_frame(16, 16, 4), target = random_frame(16, 16, 5);
    Graph<double> g(false);
    Rng rng(6);
    const Var mean = g.input(rng.normal_tensor<double>(4, 4)), logvar = g.input(rng.normal_tensor<double>(4, 4));
    const auto t = losses::tokenizer_total_loss(g, g.input(pred.tensor<double>()), g.input(target.tensor<double>()), 16,
                                                16, mean, logvar, w, pyr, &disc);
    const auto& p = t.parts;
    const double expected = 1.0 * p.l1 + 1.0 * p.perceptual + 0.5 * p.adversarial + 1e-6 * p.kl;
    const double rel = std::abs(g.scalar(t.total) - expected) / std::abs(expected);
    const bool ok = zero == 0.0 && half == 0.5 && defaults && rel <= 1e-14 && p.adversarial != 0.0;
    return {ok, "kl(0,0) = " + fmt("%.17g", zero) + ", kl(1,0) = " + fmt("%.17g", half) +
                    ", weights (1, 1, 0.5, 1e-6): " + (defaults ? "yes" : "no") + ", total rel err " +
                    fmt("%.2g", rel)};
}

// ------------------------------------------------------------------ 8

tokenizer::TokenizerConfig desk_tokenizer() {
    tokenizer::TokenizerConfig c;
    c.patch_size = 8;
    c.hidden_dim = 128;
    c.heads = 2;
    c.n_blocks = 4;
    c.latent_dim = 16;
    c.native_h = 64;
    c.native_w = 64;
    return c;
}

training::TrainConfig overfit_schedule(std::size_t batch, std::size_t steps, double lr) {
    training::TrainConfig tc = training::TrainConfig::defaults(1);
    tc.batch_size = batch;
    tc.total_steps = steps;
    tc.lr_start = lr;
    tc.lr_min = lr * 0.01;
    tc.weights.adversarial = 0.0;
    tc.checkpoint_every = 0;
    return tc;
}

Outcome tokenizer_overfit() {
    data::SpriteSceneConfig sc;
    sc.seed = 7;
    const auto seq = data::synth_sequence(sc);
    std::vector<data::TripletRecord> trips;
    for (std::size_t i = 0; i < 4; ++i) trips.push_back(data::triplet_sample(seq, 2 * i, 1));
    training::TokenizerTrainer trainer(desk_tokenizer(), losses::DiscriminatorConfig{},
                                       overfit_schedule(4, 1000, 1e-3), 1);
    trainer.run(training::fixed_triplets(trips, 4));
    double l1 = 0.0, psnr = 0.0;
    for (const auto& r : trips) {
        const auto post = trainer.model().encode(r.i0, r.it, r.i1);
        const Frame out = trainer.model().decode(post.mean, r.i0, r.i1);
        l1 += losses::l1_loss(out, r.it) / trips.size();
        psnr += evaluation::psnr(out, r.it) / trips.size();
    }
    return {l1 <= 0.05 && psnr >= 26.0,
            "1000 steps: reconstruction L1 " + fmt("%.4f", l1) + " (<= 0.05), PSNR " + fmt("%.2f", psnr) + " dB (>= 26)"};
}

// ------------------------------------------------------------------ 9, 10

// Shared by criteria 9 and 10: tokenizer and DiT overfit on 8 triplets.
struct OverfitRun {
    std::vector<data::TripletRecord> triplets;
    std::shared_ptr<tokenizer::Tokenizer<float>> tok;
    std::unique_ptr<training::DiTTrainer> dit;
    diffusion::DatasetStats stats;
    double tok_psnr = 0.0;
};

constexpr double kOverfitSpeed = 2.5;          // pixels per frame, fast motion
constexpr std::size_t kOverfitInterval = 2;    // frames between I0 and It
constexpr std::size_t kOverfitTokSteps = 2000;
constexpr std::size_t kOverfitDiTSteps = 1000;

OverfitRun& overfit_run() {
    static std::unique_ptr<OverfitRun> run;
    if (run) return *run;
    run = std::make_unique<OverfitRun>();
    data::SpriteSceneConfig sc;
    sc.min_speed = kOverfitSpeed;
    sc.max_speed = 1.5 * kOverfitSpeed;
    sc.max_interval = kOverfitInterval;
    for (std::uint64_t s = 0; s < 2; ++s) {
        sc.seed = 7 + s;
        const auto seq = data::synth_sequence(sc);
        for (std::size_t i = 0; i < 4; ++i) run->triplets.push_back(data::triplet_sample(seq, i, kOverfitInterval));
    }
    const auto& trips = run->triplets;
    training::TokenizerTrainer tt(desk_tokenizer(), losses::DiscriminatorConfig{},
                                  overfit_schedule(8, kOverfitTokSteps, 1e-3), 1);
    tt.run(training::fixed_triplets(trips, 8));
    run->tok = training::load_tokenizer(tt.checkpoint());
    for (const auto& r : trips)
        run->tok_psnr +=
            evaluation::psnr(run->tok->decode(run->tok->encode(r.i0, r.it, r.i1).mean, r.i0, r.i1), r.it) / trips.size();

    run->stats = data::compute_dataset_stats(trips);
    run->stats.latent_std = training::latent_std(*run->tok, trips);
    run->dit = std::make_unique<training::DiTTrainer>(run->tok, mid_dit(), run->stats,
                                                      overfit_schedule(8, kOverfitDiTSteps, 5e-4), 2);
    run->dit->run(training::fixed_triplets(trips, 8));
    return *run;
}

Outcome step_sweep() {
    OverfitRun& run = overfit_run();
    std::vector<evaluation::EvalSample> samples;
    for (std::size_t i = 0; i < run.triplets.size(); ++i) samples.push_back({"t" + std::to_string(i), run.triplets[i]});
    const evaluation::Models models{run.tok.get(), &run.dit->model(), run.stats};
    const auto rep = evaluation::sweep_denoising_steps(models, samples, {0, 1, 2, 5}, 0);
    auto mean_psnr = [&](int steps) {
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& r : rep.rows)
            if (r.steps == steps) s += r.psnr, ++n;
        return s / n;
    };
    const double p0 = mean_psnr(0), p1 = mean_psnr(1), p2 = mean_psnr(2), p5 = mean_psnr(5);
    const bool ok = p2 - p0 >= 10.0 && std::abs(p2 - p5) <= 1.0;
    return {ok, "PSNR steps 0/1/2/5 = " + fmt("%.2f", p0) + " / " + fmt("%.2f", p1) + " / " + fmt("%.2f", p2) + " / " +
                    fmt("%.2f", p5) + " dB; gain 2 vs 0 = " + fmt("%.2f", p2 - p0) + " dB (>= 10), |2 - 5| = " +
                    fmt("%.2f", std::abs(p2 - p5)) + " dB (<= 1); tokenizer recon " + fmt("%.2f", run.tok_psnr) +
                    " dB"};
}

Outcome difference_contracts() {
    const Frame a = random_frame(64, 64, 30), b = random_frame(64, 64, 31);
    const diffusion::DatasetStats st{0.93, 0.02, 1.0};
    const bool symmetric = diffusion::difference_context(a, b, st) == diffusion::difference_context(b, a, st);
    const double same = diffusion::difference_context(a, a, st);
    const bool identical = std::abs(same - (1.0 - 0.93) / 0.02) <= 1e-9;

    OverfitRun& run = overfit_run();
    const auto& trips = run.triplets;
    double matched = 0.0, shuffled = 0.0;
    std::size_t worse = 0;
    const std::size_t draws = 16;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const auto& other = trips[(i + 1) % trips.size()];
        const double swapped = diffusion::difference_context(other.i0, other.i1, run.stats);
        for (std::uint64_t d = 0; d < draws; ++d) {
            const std::uint64_t seed = derive_seed(99, "shuffle-draw", i, d);
            const double lm = run.dit->sample_loss(trips[i], seed);
            const double ls = run.dit->sample_loss(trips[i], seed, swapped);
            matched += lm;
            shuffled += ls;
            worse += ls > lm;
        }
    }
    matched /= trips.size() * draws;
    shuffled /= trips.size() * draws;
    const bool ok = symmetric && identical && shuffled > matched;
    return {ok, std::string("symmetric: ") + (symmetric ? "yes" : "no") + ", identical frames -> " +
                    fmt("%.6g", same) + ", flow loss matched " + fmt("%.6g", matched) + " vs shuffled " +
                    fmt("%.6g", shuffled) + " (shuffled worse on " + std::to_string(worse) + "/" +
                    std::to_string(trips.size() * draws) + " paired draws)"};
}

// ------------------------------------------------------------------ 11

tokenizer::TokenizerConfig tiny_tokenizer() {
    tokenizer::TokenizerConfig c;
    c.patch_size = 4;
    c.hidden_dim = 16;
    c.heads = 2;
    c.n_blocks = 1;
    c.latent_dim = 4;
    c.native_h = 16;
    c.native_w = 16;
    return c;
}

diffusion::DiTConfig tiny_dit() {
    diffusion::DiTConfig c;
    c.hidden_dim = 16;
    c.heads = 2;
    c.n_blocks = 1;
    c.latent_dim = 4;
    c.patch_size = 4;
    c.native_h = 16;
    c.native_w = 16;
    return c;
}

Outcome persistence() {
    const fs::path dir = scratch_dir("persist");
    data::SpriteSceneConfig sc;
    sc.height = 16;
    sc.width = 16;
    sc.length = 5;
    sc.max_interval = 2;
    sc.min_size = 2.0;
    sc.max_size = 3.0;
    std::vector<data::TripletRecord> trips;
    for (std::uint64_t s = 0; s < 2; ++s) {
        sc.seed = s;
        const auto seq = data::synth_sequence(sc);
        trips.push_back(data::triplet_sample(seq, 0, 2));
        trips.push_back(data::triplet_sample(seq, 1, 1));
    }
    const auto provider = training::fixed_triplets(trips, 2);

    // First 10 losses of two fixed-seed runs, adversarial term active for the last half.
    training::TrainConfig tc = overfit_schedule(2, 10, 1e-3);
    tc.weights.adversarial = 0.5;
    losses::DiscriminatorConfig dcfg;
    dcfg.widths = {4};
    training::TokenizerTrainer ta(tiny_tokenizer(), dcfg, tc, 5), tb(tiny_tokenizer(), dcfg, tc, 5);
    bool same_losses = true;
    for (int i = 0; i < 10; ++i) {
        const auto la = ta.step(provider), lb = tb.step(provider);
        same_losses = same_losses && la.loss.total == lb.loss.total && la.disc_loss == lb.disc_loss;
    }
    auto tok = training::load_tokenizer(ta.checkpoint());
    std::shared_ptr<const tokenizer::Tokenizer<float>> shared(std::move(tok));
    diffusion::DatasetStats stats = data::compute_dataset_stats(trips);
    stats.latent_std = training::latent_std(*shared, trips);
    training::DiTTrainer da(shared, tiny_dit(), stats, overfit_schedule(2, 10, 1e-3), 6),
        db(shared, tiny_dit(), stats, overfit_schedule(2, 10, 1e-3), 6);
    for (int i = 0; i < 10; ++i) same_losses = same_losses && da.step(provider).flow_loss == db.step(provider).flow_loss;

    // Byte-exact checkpoint round trip.
    bool round_trip = true;
    const std::pair<std::string, training::Checkpoint> ckpts[] = {
        {"tokenizer_stage1.ckpt", ta.checkpoint()}, {"discriminator_stage1.ckpt", ta.disc_checkpoint()},
        {"dit_stage1.ckpt", da.checkpoint()}};
    for (const auto& [name, ck] : ckpts) {
        training::save_checkpoint(ck, dir / name);
        const auto back = training::load_checkpoint(dir / name);
        training::save_checkpoint(back, dir / (name + ".again"));
        round_trip = round_trip && back == ck && file_bytes(dir / name) == file_bytes(dir / (name + ".again"));
    }

    // Interpolation in two separate processes.
    write_png(trips[0].i0, dir / "i0.png");
    write_png(trips[0].i1, dir / "i1.png");
    auto interpolate = [&](const std::string& out) {
        const std::string cmd = std::string("\"") + EDEN_CLI_PATH + "\" interpolate --ckpts \"" + dir.string() +
                                "\" --i0 \"" + (dir / "i0.png").string() + "\" --i1 \"" + (dir / "i1.png").string() +
                                "\" --steps 2 --seed 9 --out \"" + (dir / out).string() + "\" > /dev/null";
        return std::system(cmd.c_str()) == 0;
    };
    const bool ran = interpolate("a.png") && interpolate("b.png");
    const std::string pa = file_bytes(dir / "a.png"), pb = file_bytes(dir / "b.png");
    const bool same_png = ran && !pa.empty() && pa == pb;
    fs::remove_all(dir);
    return {same_losses && round_trip && same_png,
            std::string("checkpoint bytes stable: ") + (round_trip ? "yes" : "no") +
                ", first 10 losses identical: " + (same_losses ? "yes" : "no") +
                ", interpolate PNG identical across processes: " + (same_png ? "yes" : "no")};
}

// ------------------------------------------------------------------ 12

Outcome pos_embed_interpolation() {
    Rng rng(40);
    const tokenizer::TokenGrid<double> table{rng.normal_tensor<double>(8 * 14, 6), 8, 14};
    const bool identity = tokenizer::interpolate_pos_embed(table, 8, 14).tokens == table.tokens;

    const tokenizer::TokenGrid<double> two{rng.normal_tensor<double>(2, 3), 2, 1};
    const auto three = tokenizer::interpolate_pos_embed(two, 3, 1);
    double err = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        err = std::max(err, std::abs(three.tokens(0, c) - two.tokens(0, c)));
        err = std::max(err, std::abs(three.tokens(1, c) - 0.5 * (two.tokens(0, c) + two.tokens(1, c))));
        err = std::max(err, std::abs(three.tokens(2, c) - two.tokens(1, c)));
    }
    const bool ok = identity && err <= 1e-12 && three.grid_h == 3 && three.grid_w == 1;
    return {ok, std::string("identity at native size: ") + (identity ? "yes" : "no") + ", 2x1 -> 3x1 max error " +
                    fmt("%.2g", err)};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double max_seconds = 0.0;  // 0: no runtime bound
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "rectified-flow oracle", rectified_flow_oracle, 1.0},
        {2, "forward-process endpoints", forward_endpoints},
        {3, "identity at init", identity_at_init_check},
        {4, "PFFM geometry", pffm_geometry},
        {5, "temporal-attention locality", temporal_locality},
        {6, "gradient checks", gradient_checks, 300.0},
        {7, "loss unit values", loss_unit_values},
        {8, "tokenizer overfit", tokenizer_overfit, 1200.0},
        {9, "end-to-end overfit and step sweep", step_sweep, 2700.0},
        {10, "difference-context contracts", difference_contracts},
        {11, "persistence and determinism", persistence},
        {12, "position-embedding interpolation", pos_embed_interpolation},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.max_seconds > 0.0 && secs > c.max_seconds) {
            o.pass = false;
            o.detail += "; exceeded the " + fmt("%.0f", c.max_seconds) + " s budget";
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
