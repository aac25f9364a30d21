#include "eden/diffusion.hpp"

#include <cmath>

#include "eden/core/rng.hpp"

namespace eden::diffusion {

void DiTConfig::validate() const {
    require(hidden_dim >= 2 && hidden_dim % 2 == 0, "config", "dit.hidden_dim must be a positive even number");
    require(n_blocks >= 1, "config", "dit.n_blocks must be at least 1");
    require(latent_dim >= 1, "config", "dit.latent_dim must be positive");
    require(patch_size >= 1, "config", "dit.patch_size must be positive");
    require(hidden_dim % head_count() == 0, "config", "dit.hidden_dim must be divisible by dit.heads");
    check_frame(native_h, native_w);
}

void DiTConfig::check_frame(std::size_t height, std::size_t width) const {
    const std::size_t block = 2 * patch_size;
    require(height > 0 && width > 0 && height % block == 0 && width % block == 0, "shape",
            "frame " + std::to_string(height) + "x" + std::to_string(width) + " is not divisible by 2*patch_size = " +
                std::to_string(block));
}

void DatasetStats::validate() const {
    require(std::isfinite(sim_mean), "data", "stats.sim_mean must be finite");
    require(std::isfinite(sim_std) && sim_std > 0.0, "data", "stats.sim_std must be positive");
    require(std::isfinite(latent_std) && latent_std > 0.0, "data", "stats.latent_std must be positive");
}

template <typename T>
Tensor<T> timestep_features(double t, std::size_t d) {
    require(std::isfinite(t) && t >= 0.0 && t <= 1.0, "range", "timestep must lie in [0, 1], got " + std::to_string(t));
    require(d >= 2 && d % 2 == 0, "shape", "timestep feature width must be even");
    const std::size_t half = d / 2;
    Tensor<T> out(1, d);
    for (std::size_t j = 0; j < half; ++j) {
        const double freq = half == 1 ? 1.0 : std::exp(std::log(1.0e4) * static_cast<double>(j) / static_cast<double>(half - 1));
        out[j] = static_cast<T>(std::sin(t * freq));
        out[half + j] = static_cast<T>(std::cos(t * freq));
    }
    return out;
}

double cosine_similarity(const Frame& a, const Frame& b) {
    require_same_size(a, b, "cosine_similarity");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        dot += static_cast<double>(a.pixels[i]) * b.pixels[i];
        na += static_cast<double>(a.pixels[i]) * a.pixels[i];
        nb += static_cast<double>(b.pixels[i]) * b.pixels[i];
    }
    require(na > 0.0 && nb > 0.0, "data", "cosine similarity is undefined for an all-zero frame");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double difference_context(const Frame& i0, const Frame& i1, const DatasetStats& stats) {
    stats.validate();
    return (cosine_similarity(i0, i1) - stats.sim_mean) / stats.sim_std;
}

template <typename T>
NoisedLatent<T> forward_sample(const Tensor<T>& x0, const Tensor<T>& eps, double t) {
    require_same_shape(x0, eps, "forward_sample");
    require(t >= 0.0 && t <= 1.0, "range", "t must lie in [0, 1], got " + std::to_string(t));
    NoisedLatent<T> out{Tensor<T>(x0.rows(), x0.cols()), t};
    const T a = static_cast<T>(1.0 - t), b = static_cast<T>(t);
    for (std::size_t i = 0; i < x0.size(); ++i) out.x_t[i] = a * x0[i] + b * eps[i];
    return out;
}

template <typename T>
Tensor<T> velocity_target(const Tensor<T>& x0, const Tensor<T>& eps) {
    require_same_shape(x0, eps, "velocity_target");
    Tensor<T> out(x0.rows(), x0.cols());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = eps[i] - x0[i];
    return out;
}

template <typename T>
Var flow_loss(Graph<T>& g, Var v_pred, const Tensor<T>& x0, const Tensor<T>& eps) {
    const Tensor<T> target = velocity_target(x0, eps);
    require_same_shape(g.value(v_pred), target, "flow_loss");
    return g.mean(g.square(g.sub(v_pred, g.input(target))));
}

template <typename T>
double flow_loss(const Tensor<T>& v_pred, const Tensor<T>& x0, const Tensor<T>& eps) {
    Graph<T> g(false);
    return static_cast<double>(g.scalar(flow_loss(g, g.input(v_pred), x0, eps)));
}

template <typename T>
Tensor<T> euler_integrate(Tensor<T> x, int steps, const VelocityField<T>& velocity) {
    require(steps >= 0, "range", "denoising steps must be non-negative");
    const T dt = steps > 0 ? static_cast<T>(1.0 / steps) : T(0);
    for (int i = 0; i < steps; ++i) {
        const double t = 1.0 - static_cast<double>(i) / steps;
        const Tensor<T> v = velocity(x, t);
        require_same_shape(x, v, "euler step");
        for (std::size_t k = 0; k < x.size(); ++k) x[k] -= dt * v[k];
    }
    return x;
}

// ---------------------------------------------------------------- model

template <typename T>
DiffusionTransformer<T>::DiffusionTransformer(const DiTConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const std::size_t d = cfg_.hidden_dim, p = cfg_.patch_size, heads = cfg_.head_count();
    const std::size_t lh = cfg_.native_h / p, lw = cfg_.native_w / p;

    latent_in_ = nn::Linear<T>::make(params_, "dit.latent_in", cfg_.latent_dim, d, rng);
    pe_latent_ = nn::PositionEmbedding<T>::make(params_, "dit.pe_latent", lh / 2, lw / 2, d, rng);
    ctx_embed_ = nn::Linear<T>::make(params_, "dit.ctx_embed", p * p * 3, d, rng);
    pe_ctx_ = nn::PositionEmbedding<T>::make(params_, "dit.pe_ctx", lh, lw, d, rng);
    t_fc1_ = nn::Linear<T>::make(params_, "dit.t_embed.fc1", d, d, rng, nn::Init::Small);
    t_fc2_ = nn::Linear<T>::make(params_, "dit.t_embed.fc2", d, d, rng, nn::Init::Small);
    if (cfg_.use_difference_embedding) {
        d_fc1_ = nn::Linear<T>::make(params_, "dit.diff_embed.fc1", 1, d, rng, nn::Init::Small);
        d_fc2_ = nn::Linear<T>::make(params_, "dit.diff_embed.fc2", d, d, rng, nn::Init::Zero);
    }
    for (std::size_t i = 0; i < cfg_.n_blocks; ++i) {
        const std::string name = "dit.blocks." + std::to_string(i);
        Block b;
        b.adaln = nn::Linear<T>::make(params_, name + ".adaln", d, 6 * d, rng, nn::Init::Zero);
        b.sa = nn::Attention<T>::make(params_, name + ".sa", d, heads, rng);
        b.ta_norm = nn::Norm<T>::make(params_, name + ".ta_norm", d);
        b.ta = nn::Attention<T>::make(params_, name + ".ta", d, heads, rng, nn::Init::Zero);
        b.ff = nn::FeedForward<T>::make(params_, name + ".ff", d, cfg_.ff_expansion, rng);
        blocks_.push_back(b);
    }
    final_adaln_ = nn::Linear<T>::make(params_, "dit.final.adaln", d, 2 * d, rng, nn::Init::Zero);
    final_out_ = nn::Linear<T>::make(params_, "dit.final.out", d, cfg_.latent_dim, rng, nn::Init::Zero);
}

template <typename T>
Var DiffusionTransformer<T>::timestep_embedding(Graph<T>& g, double t) const {
    const Var f = g.input(timestep_features<T>(t, cfg_.hidden_dim));
    return t_fc2_(g, g.silu(t_fc1_(g, f)));
}

template <typename T>
Var DiffusionTransformer<T>::difference_embedding(Graph<T>& g, double ctx) const {
    require(cfg_.use_difference_embedding, "config", "difference embedding is disabled in this model");
    require(std::isfinite(ctx), "data", "difference context must be finite");
    const Var x = g.input(Tensor<T>(1, 1, static_cast<T>(ctx)));
    return d_fc2_(g, g.silu(d_fc1_(g, x)));
}

template <typename T>
Var DiffusionTransformer<T>::condition(Graph<T>& g, double t, double diff_ctx) const {
    const Var te = timestep_embedding(g, t);
    if (!cfg_.use_difference_embedding) return te;
    return g.add(te, difference_embedding(g, diff_ctx));
}

template <typename T>
ModulationVars DiffusionTransformer<T>::adaln_params(Graph<T>& g, const Block& b, Var c) const {
    const std::size_t d = cfg_.hidden_dim;
    const Var m = b.adaln(g, g.silu(c));
    return ModulationVars{g.slice_cols(m, 0, d),         g.slice_cols(m, d, 2 * d),     g.slice_cols(m, 2 * d, 3 * d),
                          g.slice_cols(m, 3 * d, 4 * d), g.slice_cols(m, 4 * d, 5 * d), g.slice_cols(m, 5 * d, 6 * d)};
}

namespace {
template <typename T>
Var modulate(Graph<T>& g, Var x, Var shift, Var scale) {
    return g.add_row(g.mul_row(g.layer_norm(x), g.add_scalar(scale, T(1))), shift);
}
}  // namespace

template <typename T>
Var DiffusionTransformer<T>::dit_block(Graph<T>& g, const Block& b, Var x, Var ctx0, Var ctx1, Var c) const {
    const ModulationVars m = adaln_params(g, b, c);
    const Var h1 = modulate(g, x, m.beta1, m.gamma1);
    x = g.add(x, g.mul_row(b.sa(g, h1, h1, 1), m.alpha1));
    x = tokenizer::temporal_attention(g, b.ta_norm, b.ta, x, ctx0, ctx1);
    const Var h2 = modulate(g, x, m.beta2, m.gamma2);
    return g.add(x, g.mul_row(b.ff(g, h2), m.alpha2));
}

template <typename T>
typename DiffusionTransformer<T>::Context DiffusionTransformer<T>::embed_context(Graph<T>& g, const Frame& i0,
                                                                                 const Frame& i1) const {
    require_same_size(i0, i1, "dit context");
    cfg_.check_frame(i0.height, i0.width);
    const std::size_t p = cfg_.patch_size;
    Context ctx;
    ctx.ctx0 = tokenizer::group_context(g, tokenizer::patch_embed(g, i0, p, ctx_embed_, pe_ctx_));
    ctx.ctx1 = tokenizer::group_context(g, tokenizer::patch_embed(g, i1, p, ctx_embed_, pe_ctx_));
    ctx.grid_h = i0.height / (2 * p);
    ctx.grid_w = i0.width / (2 * p);
    return ctx;
}

template <typename T>
Var DiffusionTransformer<T>::predict_velocity(Graph<T>& g, Var x_t, double t, const Context& ctx,
                                              double diff_ctx) const {
    const std::size_t n = ctx.grid_h * ctx.grid_w;
    require(g.rows(x_t) == n && g.cols(x_t) == cfg_.latent_dim, "shape",
            "noised latent " + g.value(x_t).shape_str() + " does not match " + std::to_string(n) + " tokens of dimension " +
                std::to_string(cfg_.latent_dim));
    const Var c = condition(g, t, diff_ctx);
    Var x = g.add(latent_in_(g, x_t), pe_latent_.at(g, ctx.grid_h, ctx.grid_w));
    for (const Block& b : blocks_) x = dit_block(g, b, x, ctx.ctx0, ctx.ctx1, c);
    const std::size_t d = cfg_.hidden_dim;
    const Var fm = final_adaln_(g, g.silu(c));
    x = modulate(g, x, g.slice_cols(fm, 0, d), g.slice_cols(fm, d, 2 * d));
    return final_out_(g, x);
}

template <typename T>
Var DiffusionTransformer<T>::predict_velocity(Graph<T>& g, Var x_t, double t, const Frame& i0, const Frame& i1,
                                              const DatasetStats& stats, std::optional<double> diff_override) const {
    const Context ctx = embed_context(g, i0, i1);
    const double diff = diff_override ? *diff_override : difference_context(i0, i1, stats);
    return predict_velocity(g, x_t, t, ctx, diff);
}

template <typename T>
Tensor<T> DiffusionTransformer<T>::predict_velocity(const Tensor<T>& x_t, double t, const Frame& i0, const Frame& i1,
                                                    const DatasetStats& stats) const {
    Graph<T> g(false);
    return g.value(predict_velocity(g, g.input(x_t), t, i0, i1, stats));
}

template <typename T>
Tensor<T> DiffusionTransformer<T>::euler_sample(const Frame& i0, const Frame& i1, int steps, std::uint64_t seed,
                                                const DatasetStats& stats) const {
    require(steps >= 0, "range", "denoising steps must be non-negative");
    // Context tokens do not depend on t; embed them once.
    Graph<T> cg(false);
    const Context c = embed_context(cg, i0, i1);
    const Tensor<T> ctx0 = cg.value(c.ctx0), ctx1 = cg.value(c.ctx1);
    const double diff = difference_context(i0, i1, stats);

    Rng rng(derive_seed(seed, "sampling"));
    Tensor<T> noise = rng.normal_tensor<T>(c.grid_h * c.grid_w, cfg_.latent_dim);
    return euler_integrate<T>(std::move(noise), steps, [&](const Tensor<T>& x, double t) {
        Graph<T> g(false);
        Context ctx{g.input(ctx0), g.input(ctx1), c.grid_h, c.grid_w};
        return g.value(predict_velocity(g, g.input(x), t, ctx, diff));
    });
}

void check_compatible(const tokenizer::TokenizerConfig& tok, const DiTConfig& dit) {
    require(tok.latent_dim == dit.latent_dim, "checkpoint",
            "tokenizer latent_dim " + std::to_string(tok.latent_dim) + " differs from dit latent_dim " +
                std::to_string(dit.latent_dim));
    require(tok.patch_size == dit.patch_size, "checkpoint",
            "tokenizer patch_size " + std::to_string(tok.patch_size) + " differs from dit patch_size " +
                std::to_string(dit.patch_size));
}

template <typename T>
Frame interpolate_frame(const tokenizer::Tokenizer<T>& tok, const DiffusionTransformer<T>& dit, const Frame& i0,
                        const Frame& i1, int steps, std::uint64_t seed, const DatasetStats& stats) {
    check_compatible(tok.config(), dit.config());
    require_same_size(i0, i1, "interpolate");
    tok.config().check_frame(i0.height, i0.width);
    stats.validate();
    Tensor<T> z = dit.euler_sample(i0, i1, steps, seed, stats);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] *= static_cast<T>(stats.latent_std);
    return tok.decode(z, i0, i1);
}

#define EDEN_INSTANTIATE(T)                                                                                       \
    template class DiffusionTransformer<T>;                                                                       \
    template Tensor<T> timestep_features<T>(double, std::size_t);                                                 \
    template NoisedLatent<T> forward_sample<T>(const Tensor<T>&, const Tensor<T>&, double);                       \
    template Tensor<T> velocity_target<T>(const Tensor<T>&, const Tensor<T>&);                                    \
    template double flow_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                           \
    template Var flow_loss<T>(Graph<T>&, Var, const Tensor<T>&, const Tensor<T>&);                                \
    template Tensor<T> euler_integrate<T>(Tensor<T>, int, const VelocityField<T>&);                               \
    template Frame interpolate_frame<T>(const tokenizer::Tokenizer<T>&, const DiffusionTransformer<T>&,           \
                                        const Frame&, const Frame&, int, std::uint64_t, const DatasetStats&);

EDEN_INSTANTIATE(float)
EDEN_INSTANTIATE(double)

#undef EDEN_INSTANTIATE

}  // namespace eden::diffusion
