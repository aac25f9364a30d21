#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "eden/core/graph.hpp"
#include "eden/frame.hpp"
#include "eden/nn.hpp"

namespace eden::tokenizer {

enum class Upsample { Nearest, Bilinear };

struct TokenizerConfig {
    std::size_t patch_size = 16;
    std::size_t hidden_dim = 768;
    std::size_t n_blocks = 4;
    std::size_t latent_dim = 16;
    std::size_t heads = 0;  // 0 selects hidden_dim / 64
    std::size_t ff_expansion = 4;
    // Frame size the position tables are laid out for; other sizes interpolate.
    std::size_t native_h = 256;
    std::size_t native_w = 448;
    Upsample upsample = Upsample::Nearest;

    std::size_t head_count() const { return heads ? heads : std::max<std::size_t>(1, hidden_dim / 64); }
    void validate() const;
    // Frames must be divisible by 2 * patch_size so that m = 4n.
    void check_frame(std::size_t height, std::size_t width) const;
};

// logvar is clamped to this range before exponentiation.
inline constexpr double kLogvarMin = -30.0;
inline constexpr double kLogvarMax = 20.0;

// Tokens with an explicit 2D layout; tokens row r sits at (r / grid_w, r % grid_w).
template <typename T>
struct TokenGrid {
    Tensor<T> tokens;
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;

    std::size_t count() const { return tokens.rows(); }
    std::size_t dim() const { return tokens.cols(); }
    void validate() const {
        require(grid_h > 0 && grid_w > 0 && grid_h * grid_w == tokens.rows(), "shape",
                "token grid " + std::to_string(grid_h) + "x" + std::to_string(grid_w) + " does not match " +
                    std::to_string(tokens.rows()) + " tokens");
    }
};

template <typename T>
struct LatentPosterior {
    Tensor<T> mean;
    Tensor<T> logvar;
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;
};

// Graph-side token grid.
struct GridVar {
    Var tokens;
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;
    std::size_t count() const { return grid_h * grid_w; }
};

// ---- geometry (value level) ---------------------------------------------

// 2x2 average pooling: m tokens -> n = m / 4.
template <typename T>
TokenGrid<T> pool_tokens(const TokenGrid<T>& large);
// Nearest 2x upsampling: n tokens -> 4n, each token copied to its 2x2 block.
template <typename T>
TokenGrid<T> upsample_tokens(const TokenGrid<T>& small);
// Large grid (4n tokens) -> (4n, dim) rows, group i occupying rows 4i..4i+3
// in reading order (top-left, top-right, bottom-left, bottom-right).
template <typename T>
Tensor<T> group_context(const TokenGrid<T>& ctx);
// Bilinear (aligned-corner) resize of a position table.
template <typename T>
TokenGrid<T> interpolate_pos_embed(const TokenGrid<T>& table, std::size_t new_h, std::size_t new_w);
// mean + exp(0.5 * clamp(logvar)) * noise
template <typename T>
Tensor<T> reparameterize(const LatentPosterior<T>& post, const Tensor<T>& noise);

// ---- graph-level operations ---------------------------------------------

// Linear projection of non-overlapping patches plus (resized) position table.
template <typename T>
GridVar patch_embed(Graph<T>& g, const Frame& frame, std::size_t patch, const nn::Linear<T>& proj,
                    const nn::PositionEmbedding<T>& pe);
template <typename T>
GridVar pool_tokens(Graph<T>& g, const GridVar& large);
template <typename T>
GridVar upsample_tokens(Graph<T>& g, const GridVar& small, Upsample mode = Upsample::Nearest);
template <typename T>
Var group_context(Graph<T>& g, const GridVar& ctx);

// Pyramid feature fusion: attention over Concat(large, stream) (m + n tokens,
// large first), keeping the last n positions; pre-norm residual on stream.
template <typename T>
Var pffm_self_attention(Graph<T>& g, const nn::Norm<T>& norm, const nn::Attention<T>& attn, Var stream, Var large);

// Per small-token group i, attends over the 9-token sequence
// (ctx0[i, 0..3], stream[i], ctx1[i, 0..3]) and keeps index 4; groups are
// independent. ctx0 / ctx1 come from group_context. Pre-norm residual.
template <typename T>
Var temporal_attention(Graph<T>& g, const nn::Norm<T>& norm, const nn::Attention<T>& attn, Var stream, Var ctx0,
                       Var ctx1);

// Pre-norm residual feed-forward.
template <typename T>
Var feed_forward(Graph<T>& g, const nn::Norm<T>& norm, const nn::FeedForward<T>& ff, Var stream);

template <typename T>
Var reparameterize(Graph<T>& g, Var mean, Var logvar, const Tensor<T>& noise);

// ---- model ----------------------------------------------------------------

// Token counts seen by one block: m large-scale tokens, n stream tokens.
struct BlockShape {
    bool decoder = false;
    std::size_t block = 0;
    std::size_t large_tokens = 0;
    std::size_t small_tokens = 0;
};
using BlockObserver = std::function<void(const BlockShape&)>;

template <typename T>
class Tokenizer {
public:
    struct Block {
        nn::Norm<T> sa_norm;
        nn::Attention<T> sa;
        nn::Norm<T> ta_norm;
        nn::Attention<T> ta;
        nn::Norm<T> ff_norm;
        nn::FeedForward<T> ff;
    };
    struct Encoder {
        nn::Linear<T> embed;
        nn::Linear<T> ctx_embed;  // shared by I0 and I1
        nn::PositionEmbedding<T> pe_large, pe_small;
        std::vector<Block> blocks;
        nn::Norm<T> out_norm;
        nn::Linear<T> out;  // d -> 2c (mean, logvar)
    };
    struct Decoder {
        nn::Linear<T> latent_in;
        nn::Linear<T> ctx_embed;
        nn::PositionEmbedding<T> pe_large, pe_small;
        std::vector<Block> blocks;
        nn::Norm<T> out_norm;
        nn::Linear<T> out;  // d -> (2p)^2 * 3, pixel-shuffled
    };
    struct Posterior {
        Var mean;
        Var logvar;
        std::size_t grid_h = 0;
        std::size_t grid_w = 0;
    };

    Tokenizer(const TokenizerConfig& cfg, std::uint64_t seed);
    Tokenizer(const Tokenizer&) = delete;
    Tokenizer& operator=(const Tokenizer&) = delete;

    const TokenizerConfig& config() const { return cfg_; }
    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }
    Encoder& encoder() { return enc_; }
    Decoder& decoder() { return dec_; }
    const Encoder& encoder() const { return enc_; }
    const Decoder& decoder() const { return dec_; }

    // Called once per block during encode/decode (diagnostics).
    void set_block_observer(BlockObserver obs) { observer_ = std::move(obs); }

    // Small-grid size (latent token layout) for a frame size.
    std::pair<std::size_t, std::size_t> latent_grid(std::size_t height, std::size_t width) const;

    Posterior encode(Graph<T>& g, const Frame& i0, const Frame& it, const Frame& i1) const;
    // Unclamped pixels, (height * width, 3).
    Var decode(Graph<T>& g, Var latent, const Frame& i0, const Frame& i1) const;

    LatentPosterior<T> encode(const Frame& i0, const Frame& it, const Frame& i1) const;
    // Output clamped to [0, 1].
    Frame decode(const Tensor<T>& latent, const Frame& i0, const Frame& i1) const;

private:
    Block make_block(const std::string& name, Rng& rng);

    TokenizerConfig cfg_;
    ParamStore<T> params_;
    Encoder enc_;
    Decoder dec_;
    BlockObserver observer_;
};

extern template class Tokenizer<float>;
extern template class Tokenizer<double>;

}  // namespace eden::tokenizer
