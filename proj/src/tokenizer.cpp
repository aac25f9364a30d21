#include "eden/tokenizer.hpp"

namespace eden::tokenizer {

void TokenizerConfig::validate() const {
    require(patch_size >= 1, "config", "tokenizer.patch_size must be positive");
    require(hidden_dim >= 1, "config", "tokenizer.hidden_dim must be positive");
    require(n_blocks >= 1, "config", "tokenizer.n_blocks must be at least 1");
    require(latent_dim >= 1, "config", "tokenizer.latent_dim must be positive");
    require(ff_expansion >= 1, "config", "tokenizer.ff_expansion must be positive");
    require(hidden_dim % head_count() == 0, "config", "tokenizer.hidden_dim must be divisible by tokenizer.heads");
    check_frame(native_h, native_w);
}

void TokenizerConfig::check_frame(std::size_t height, std::size_t width) const {
    const std::size_t block = 2 * patch_size;
    require(height > 0 && width > 0 && height % block == 0 && width % block == 0, "shape",
            "frame " + std::to_string(height) + "x" + std::to_string(width) + " is not divisible by 2*patch_size = " +
                std::to_string(block));
}

namespace {

template <typename T>
Var value_input(Graph<T>& g, const TokenGrid<T>& grid) {
    grid.validate();
    return g.input(grid.tokens);
}

std::shared_ptr<const RowMix> temporal_map(std::size_t n) {
    return maps::cached("temporal9:" + std::to_string(n), [n] {
        // Source rows: ctx0 at [0, 4n), stream at [4n, 5n), ctx1 at [5n, 9n).
        std::vector<std::uint32_t> order;
        order.reserve(9 * n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 4; ++j) order.push_back(static_cast<std::uint32_t>(4 * i + j));
            order.push_back(static_cast<std::uint32_t>(4 * n + i));
            for (std::size_t j = 0; j < 4; ++j) order.push_back(static_cast<std::uint32_t>(5 * n + 4 * i + j));
        }
        return maps::select(9 * n, order);
    });
}

}  // namespace

// ---------------------------------------------------------------- graph level

template <typename T>
GridVar patch_embed(Graph<T>& g, const Frame& frame, std::size_t patch, const nn::Linear<T>& proj,
                    const nn::PositionEmbedding<T>& pe) {
    require(frame.height % patch == 0 && frame.width % patch == 0, "shape",
            "frame " + std::to_string(frame.height) + "x" + std::to_string(frame.width) +
                " is not divisible by patch size " + std::to_string(patch));
    const std::size_t h = frame.height, w = frame.width;
    auto map = maps::cached_elems("patchify:" + std::to_string(h) + "x" + std::to_string(w) + "/" + std::to_string(patch),
                                  [=] { return maps::patchify(h, w, 3, patch); });
    const Var patches = g.gather(g.input(frame.tensor<T>()), map);
    GridVar out;
    out.grid_h = h / patch;
    out.grid_w = w / patch;
    out.tokens = g.add(proj(g, patches), pe.at(g, out.grid_h, out.grid_w));
    return out;
}

template <typename T>
GridVar pool_tokens(Graph<T>& g, const GridVar& large) {
    require(large.grid_h % 2 == 0 && large.grid_w % 2 == 0, "shape",
            "pool_tokens needs an even grid, got " + std::to_string(large.grid_h) + "x" + std::to_string(large.grid_w));
    const std::size_t gh = large.grid_h, gw = large.grid_w;
    auto map = maps::cached("pool:" + std::to_string(gh) + "x" + std::to_string(gw), [=] { return maps::pool2x2(gh, gw); });
    return GridVar{g.row_mix(large.tokens, map), gh / 2, gw / 2};
}

template <typename T>
GridVar upsample_tokens(Graph<T>& g, const GridVar& small, Upsample mode) {
    const std::size_t gh = small.grid_h, gw = small.grid_w;
    std::shared_ptr<const RowMix> map;
    if (mode == Upsample::Nearest)
        map = maps::cached("nearest:" + std::to_string(gh) + "x" + std::to_string(gw),
                           [=] { return maps::upsample_nearest(gh, gw); });
    else
        map = maps::cached("bilinear:" + std::to_string(gh) + "x" + std::to_string(gw) + "->" + std::to_string(2 * gh) +
                               "x" + std::to_string(2 * gw),
                           [=] { return maps::resize_bilinear(gh, gw, 2 * gh, 2 * gw); });
    return GridVar{g.row_mix(small.tokens, map), 2 * gh, 2 * gw};
}

template <typename T>
Var group_context(Graph<T>& g, const GridVar& ctx) {
    require(ctx.grid_h % 2 == 0 && ctx.grid_w % 2 == 0, "shape",
            "group_context needs an even grid, got " + std::to_string(ctx.grid_h) + "x" + std::to_string(ctx.grid_w));
    const std::size_t sh = ctx.grid_h / 2, sw = ctx.grid_w / 2;
    auto map = maps::cached("group:" + std::to_string(sh) + "x" + std::to_string(sw),
                            [=] { return maps::group_blocks(sh, sw); });
    return g.row_mix(ctx.tokens, map);
}

template <typename T>
Var pffm_self_attention(Graph<T>& g, const nn::Norm<T>& norm, const nn::Attention<T>& attn, Var stream, Var large) {
    const std::size_t n = g.rows(stream), m = g.rows(large);
    require(m == 4 * n, "shape",
            "pffm: large-scale count " + std::to_string(m) + " must be 4x the stream count " + std::to_string(n));
    const Var normed = norm(g, g.concat_rows({large, stream}));
    const Var queries = g.slice_rows(normed, m, m + n);
    return g.add(stream, attn(g, queries, normed, 1));
}

template <typename T>
Var temporal_attention(Graph<T>& g, const nn::Norm<T>& norm, const nn::Attention<T>& attn, Var stream, Var ctx0,
                       Var ctx1) {
    const std::size_t n = g.rows(stream);
    require(g.rows(ctx0) == 4 * n && g.rows(ctx1) == 4 * n, "shape",
            "temporal attention: context groups (" + std::to_string(g.rows(ctx0) / 4) + ", " +
                std::to_string(g.rows(ctx1) / 4) + ") do not match " + std::to_string(n) + " stream tokens");
    const Var normed = norm(g, g.concat_rows({ctx0, stream, ctx1}));
    const Var sequences = g.row_mix(normed, temporal_map(n));
    const Var queries = g.slice_rows(normed, 4 * n, 5 * n);
    return g.add(stream, attn(g, queries, sequences, n));
}

template <typename T>
Var feed_forward(Graph<T>& g, const nn::Norm<T>& norm, const nn::FeedForward<T>& ff, Var stream) {
    return g.add(stream, ff(g, norm(g, stream)));
}

template <typename T>
Var reparameterize(Graph<T>& g, Var mean, Var logvar, const Tensor<T>& noise) {
    require_same_shape(g.value(mean), noise, "reparameterize");
    require_same_shape(g.value(mean), g.value(logvar), "reparameterize");
    const Var lv = g.clamp(logvar, static_cast<T>(kLogvarMin), static_cast<T>(kLogvarMax));
    const Var stddev = g.exp(g.scale(lv, T(0.5)));
    return g.add(mean, g.mul(stddev, g.input(noise)));
}

// ---------------------------------------------------------------- value level

template <typename T>
TokenGrid<T> pool_tokens(const TokenGrid<T>& large) {
    Graph<T> g(false);
    const GridVar out = pool_tokens(g, GridVar{value_input(g, large), large.grid_h, large.grid_w});
    return TokenGrid<T>{g.value(out.tokens), out.grid_h, out.grid_w};
}

template <typename T>
TokenGrid<T> upsample_tokens(const TokenGrid<T>& small) {
    Graph<T> g(false);
    const GridVar out = upsample_tokens(g, GridVar{value_input(g, small), small.grid_h, small.grid_w});
    return TokenGrid<T>{g.value(out.tokens), out.grid_h, out.grid_w};
}

template <typename T>
Tensor<T> group_context(const TokenGrid<T>& ctx) {
    Graph<T> g(false);
    return g.value(group_context(g, GridVar{value_input(g, ctx), ctx.grid_h, ctx.grid_w}));
}

template <typename T>
TokenGrid<T> interpolate_pos_embed(const TokenGrid<T>& table, std::size_t new_h, std::size_t new_w) {
    table.validate();
    require(new_h >= 1 && new_w >= 1, "range", "position embedding target size must be positive");
    Graph<T> g(false);
    const Var out = g.row_mix(g.input(table.tokens), std::make_shared<const RowMix>(maps::resize_bilinear(
                                                         table.grid_h, table.grid_w, new_h, new_w)));
    return TokenGrid<T>{g.value(out), new_h, new_w};
}

template <typename T>
Tensor<T> reparameterize(const LatentPosterior<T>& post, const Tensor<T>& noise) {
    Graph<T> g(false);
    return g.value(reparameterize(g, g.input(post.mean), g.input(post.logvar), noise));
}

// ---------------------------------------------------------------- model

template <typename T>
typename Tokenizer<T>::Block Tokenizer<T>::make_block(const std::string& name, Rng& rng) {
    const std::size_t d = cfg_.hidden_dim, heads = cfg_.head_count();
    Block b;
    b.sa_norm = nn::Norm<T>::make(params_, name + ".sa_norm", d);
    b.sa = nn::Attention<T>::make(params_, name + ".sa", d, heads, rng);
    b.ta_norm = nn::Norm<T>::make(params_, name + ".ta_norm", d);
    b.ta = nn::Attention<T>::make(params_, name + ".ta", d, heads, rng);
    b.ff_norm = nn::Norm<T>::make(params_, name + ".ff_norm", d);
    b.ff = nn::FeedForward<T>::make(params_, name + ".ff", d, cfg_.ff_expansion, rng);
    return b;
}

template <typename T>
Tokenizer<T>::Tokenizer(const TokenizerConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const std::size_t p = cfg_.patch_size, d = cfg_.hidden_dim, c = cfg_.latent_dim;
    const std::size_t patch_in = p * p * 3;
    const std::size_t lh = cfg_.native_h / p, lw = cfg_.native_w / p;

    enc_.embed = nn::Linear<T>::make(params_, "encoder.embed", patch_in, d, rng);
    enc_.ctx_embed = nn::Linear<T>::make(params_, "encoder.ctx_embed", patch_in, d, rng);
    enc_.pe_large = nn::PositionEmbedding<T>::make(params_, "encoder.pe_large", lh, lw, d, rng);
    enc_.pe_small = nn::PositionEmbedding<T>::make(params_, "encoder.pe_small", lh / 2, lw / 2, d, rng);
    for (std::size_t i = 0; i < cfg_.n_blocks; ++i)
        enc_.blocks.push_back(make_block("encoder.blocks." + std::to_string(i), rng));
    enc_.out_norm = nn::Norm<T>::make(params_, "encoder.out_norm", d);
    enc_.out = nn::Linear<T>::make(params_, "encoder.out", d, 2 * c, rng, nn::Init::Small);

    dec_.latent_in = nn::Linear<T>::make(params_, "decoder.latent_in", c, d, rng);
    dec_.ctx_embed = nn::Linear<T>::make(params_, "decoder.ctx_embed", patch_in, d, rng);
    dec_.pe_large = nn::PositionEmbedding<T>::make(params_, "decoder.pe_large", lh, lw, d, rng);
    dec_.pe_small = nn::PositionEmbedding<T>::make(params_, "decoder.pe_small", lh / 2, lw / 2, d, rng);
    for (std::size_t i = 0; i < cfg_.n_blocks; ++i)
        dec_.blocks.push_back(make_block("decoder.blocks." + std::to_string(i), rng));
    dec_.out_norm = nn::Norm<T>::make(params_, "decoder.out_norm", d);
    dec_.out = nn::Linear<T>::make(params_, "decoder.out", d, 4 * p * p * 3, rng, nn::Init::Small);
    init_constant(*dec_.out.bias, 0.5);
}

template <typename T>
std::pair<std::size_t, std::size_t> Tokenizer<T>::latent_grid(std::size_t height, std::size_t width) const {
    cfg_.check_frame(height, width);
    return {height / (2 * cfg_.patch_size), width / (2 * cfg_.patch_size)};
}

template <typename T>
typename Tokenizer<T>::Posterior Tokenizer<T>::encode(Graph<T>& g, const Frame& i0, const Frame& it,
                                                      const Frame& i1) const {
    require_same_size(i0, it, "encoder");
    require_same_size(i1, it, "encoder");
    cfg_.check_frame(it.height, it.width);
    const std::size_t p = cfg_.patch_size, c = cfg_.latent_dim;

    const GridVar large = patch_embed(g, it, p, enc_.embed, enc_.pe_large);
    const GridVar small = pool_tokens(g, large);
    Var stream = g.add(small.tokens, enc_.pe_small.at(g, small.grid_h, small.grid_w));

    const Var ctx0 = group_context(g, patch_embed(g, i0, p, enc_.ctx_embed, enc_.pe_large));
    const Var ctx1 = group_context(g, patch_embed(g, i1, p, enc_.ctx_embed, enc_.pe_large));

    for (std::size_t i = 0; i < enc_.blocks.size(); ++i) {
        const Block& b = enc_.blocks[i];
        if (observer_) observer_({false, i, g.rows(large.tokens), g.rows(stream)});
        stream = pffm_self_attention(g, b.sa_norm, b.sa, stream, large.tokens);
        stream = temporal_attention(g, b.ta_norm, b.ta, stream, ctx0, ctx1);
        stream = feed_forward(g, b.ff_norm, b.ff, stream);
    }
    const Var out = enc_.out(g, enc_.out_norm(g, stream));
    return Posterior{g.slice_cols(out, 0, c), g.slice_cols(out, c, 2 * c), small.grid_h, small.grid_w};
}

template <typename T>
Var Tokenizer<T>::decode(Graph<T>& g, Var latent, const Frame& i0, const Frame& i1) const {
    require_same_size(i0, i1, "decoder");
    const auto [sh, sw] = latent_grid(i0.height, i0.width);
    require(g.rows(latent) == sh * sw && g.cols(latent) == cfg_.latent_dim, "shape",
            "latent " + g.value(latent).shape_str() + " does not match a " + std::to_string(sh) + "x" +
                std::to_string(sw) + " grid of dimension " + std::to_string(cfg_.latent_dim));
    const std::size_t p = cfg_.patch_size;

    Var stream = g.add(dec_.latent_in(g, latent), dec_.pe_small.at(g, sh, sw));
    const Var ctx0 = group_context(g, patch_embed(g, i0, p, dec_.ctx_embed, dec_.pe_large));
    const Var ctx1 = group_context(g, patch_embed(g, i1, p, dec_.ctx_embed, dec_.pe_large));

    for (std::size_t i = 0; i < dec_.blocks.size(); ++i) {
        const Block& b = dec_.blocks[i];
        const GridVar large = upsample_tokens(g, GridVar{stream, sh, sw}, cfg_.upsample);
        if (observer_) observer_({true, i, g.rows(large.tokens), g.rows(stream)});
        stream = pffm_self_attention(g, b.sa_norm, b.sa, stream, large.tokens);
        stream = temporal_attention(g, b.ta_norm, b.ta, stream, ctx0, ctx1);
        stream = feed_forward(g, b.ff_norm, b.ff, stream);
    }
    const Var blocks = dec_.out(g, dec_.out_norm(g, stream));
    const std::size_t block = 2 * p;
    auto shuffle = maps::cached_elems("shuffle:" + std::to_string(sh) + "x" + std::to_string(sw) + "/" + std::to_string(block),
                                      [=] { return maps::pixel_shuffle(sh, sw, 3, block); });
    return g.gather(blocks, shuffle);
}

template <typename T>
LatentPosterior<T> Tokenizer<T>::encode(const Frame& i0, const Frame& it, const Frame& i1) const {
    Graph<T> g(false);
    const Posterior post = encode(g, i0, it, i1);
    return LatentPosterior<T>{g.value(post.mean), g.value(post.logvar), post.grid_h, post.grid_w};
}

template <typename T>
Frame Tokenizer<T>::decode(const Tensor<T>& latent, const Frame& i0, const Frame& i1) const {
    Graph<T> g(false);
    const Var pixels = decode(g, g.input(latent), i0, i1);
    return Frame::from_tensor(g.value(pixels), i0.height, i0.width, true);
}

#define EDEN_INSTANTIATE(T)                                                                                       \
    template class Tokenizer<T>;                                                                                  \
    template TokenGrid<T> pool_tokens<T>(const TokenGrid<T>&);                                                    \
    template TokenGrid<T> upsample_tokens<T>(const TokenGrid<T>&);                                                \
    template Tensor<T> group_context<T>(const TokenGrid<T>&);                                                     \
    template TokenGrid<T> interpolate_pos_embed<T>(const TokenGrid<T>&, std::size_t, std::size_t);               \
    template Tensor<T> reparameterize<T>(const LatentPosterior<T>&, const Tensor<T>&);                            \
    template GridVar patch_embed<T>(Graph<T>&, const Frame&, std::size_t, const nn::Linear<T>&,                   \
                                    const nn::PositionEmbedding<T>&);                                             \
    template GridVar pool_tokens<T>(Graph<T>&, const GridVar&);                                                   \
    template GridVar upsample_tokens<T>(Graph<T>&, const GridVar&, Upsample);                                     \
    template Var group_context<T>(Graph<T>&, const GridVar&);                                                     \
    template Var pffm_self_attention<T>(Graph<T>&, const nn::Norm<T>&, const nn::Attention<T>&, Var, Var);        \
    template Var temporal_attention<T>(Graph<T>&, const nn::Norm<T>&, const nn::Attention<T>&, Var, Var, Var);    \
    template Var feed_forward<T>(Graph<T>&, const nn::Norm<T>&, const nn::FeedForward<T>&, Var);                  \
    template Var reparameterize<T>(Graph<T>&, Var, Var, const Tensor<T>&);

EDEN_INSTANTIATE(float)
EDEN_INSTANTIATE(double)

#undef EDEN_INSTANTIATE

}  // namespace eden::tokenizer
