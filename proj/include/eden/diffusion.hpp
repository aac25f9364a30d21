#pragma once

#include <functional>
#include <optional>

#include "eden/core/graph.hpp"
#include "eden/frame.hpp"
#include "eden/nn.hpp"
#include "eden/tokenizer.hpp"

namespace eden::diffusion {

struct DiTConfig {
    std::size_t hidden_dim = 768;
    std::size_t n_blocks = 12;
    std::size_t heads = 0;  // 0 selects hidden_dim / 64
    std::size_t latent_dim = 16;
    std::size_t patch_size = 16;
    std::size_t ff_expansion = 4;
    std::size_t native_h = 256;
    std::size_t native_w = 448;
    bool use_difference_embedding = true;

    std::size_t head_count() const { return heads ? heads : std::max<std::size_t>(1, hidden_dim / 64); }
    void validate() const;
    void check_frame(std::size_t height, std::size_t width) const;
};

// Training-set statistics carried into every checkpoint.
struct DatasetStats {
    double sim_mean = 0.0;
    double sim_std = 1.0;     // clamped to >= 1e-6
    double latent_std = 1.0;  // global scale of encoder latents

    void validate() const;
};

inline constexpr double kMinSimStd = 1.0e-6;

template <typename T>
struct NoisedLatent {
    Tensor<T> x_t;
    double t = 0.0;
};

// Per-block adaLN outputs, each (1, d). gamma is the raw offset; the applied
// scale is 1 + gamma.
struct ModulationVars {
    Var alpha1, beta1, gamma1, alpha2, beta2, gamma2;
};

// Sinusoidal features of t before the MLP: (1, d) = [sin(t f_0..f_{h-1}), cos(t f_0..f_{h-1})]
// with h = d / 2 frequencies log-spaced over [1, 1e4].
template <typename T>
Tensor<T> timestep_features(double t, std::size_t d);

double cosine_similarity(const Frame& a, const Frame& b);
// (cos(I0, I1) - sim_mean) / sim_std on flattened pixels.
double difference_context(const Frame& i0, const Frame& i1, const DatasetStats& stats);

// x_t = (1 - t) x0 + t eps
template <typename T>
NoisedLatent<T> forward_sample(const Tensor<T>& x0, const Tensor<T>& eps, double t);
// eps - x0, the constant velocity of the straight path.
template <typename T>
Tensor<T> velocity_target(const Tensor<T>& x0, const Tensor<T>& eps);
template <typename T>
double flow_loss(const Tensor<T>& v_pred, const Tensor<T>& x0, const Tensor<T>& eps);
template <typename T>
Var flow_loss(Graph<T>& g, Var v_pred, const Tensor<T>& x0, const Tensor<T>& eps);

template <typename T>
using VelocityField = std::function<Tensor<T>(const Tensor<T>& x, double t)>;

// Euler integration of dx = v dt from t = 1 to t = 0:
// t_i = 1 - i / steps, x <- x - v(x, t_i) / steps. steps = 0 returns x.
template <typename T>
Tensor<T> euler_integrate(Tensor<T> x, int steps, const VelocityField<T>& velocity);

template <typename T>
class DiffusionTransformer {
public:
    struct Block {
        nn::Linear<T> adaln;  // silu(c) -> 6d, zero-initialized
        nn::Attention<T> sa;
        nn::Norm<T> ta_norm;
        nn::Attention<T> ta;  // zero-initialized output projection
        nn::FeedForward<T> ff;
    };
    // Grouped start/end frame tokens, (4n, d) each.
    struct Context {
        Var ctx0, ctx1;
        std::size_t grid_h = 0, grid_w = 0;  // latent (small) grid
    };

    DiffusionTransformer(const DiTConfig& cfg, std::uint64_t seed);
    DiffusionTransformer(const DiffusionTransformer&) = delete;
    DiffusionTransformer& operator=(const DiffusionTransformer&) = delete;

    const DiTConfig& config() const { return cfg_; }
    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }
    std::vector<Block>& blocks() { return blocks_; }
    const std::vector<Block>& blocks() const { return blocks_; }

    Var timestep_embedding(Graph<T>& g, double t) const;
    Var difference_embedding(Graph<T>& g, double ctx) const;
    // timestep embedding + difference embedding (when enabled).
    Var condition(Graph<T>& g, double t, double diff_ctx) const;
    ModulationVars adaln_params(Graph<T>& g, const Block& b, Var c) const;
    Var dit_block(Graph<T>& g, const Block& b, Var x, Var ctx0, Var ctx1, Var c) const;

    Context embed_context(Graph<T>& g, const Frame& i0, const Frame& i1) const;
    Var predict_velocity(Graph<T>& g, Var x_t, double t, const Context& ctx, double diff_ctx) const;
    // `diff_override` replaces the computed difference context (ablation / shuffling).
    Var predict_velocity(Graph<T>& g, Var x_t, double t, const Frame& i0, const Frame& i1, const DatasetStats& stats,
                         std::optional<double> diff_override = std::nullopt) const;
    Tensor<T> predict_velocity(const Tensor<T>& x_t, double t, const Frame& i0, const Frame& i1,
                               const DatasetStats& stats) const;

    // Standardized latents after `steps` Euler steps from seeded Gaussian noise.
    Tensor<T> euler_sample(const Frame& i0, const Frame& i1, int steps, std::uint64_t seed,
                           const DatasetStats& stats) const;

private:
    DiTConfig cfg_;
    ParamStore<T> params_;
    nn::Linear<T> latent_in_;
    nn::PositionEmbedding<T> pe_latent_;
    nn::Linear<T> ctx_embed_;
    nn::PositionEmbedding<T> pe_ctx_;
    nn::Linear<T> t_fc1_, t_fc2_;
    nn::Linear<T> d_fc1_, d_fc2_;
    std::vector<Block> blocks_;
    nn::Linear<T> final_adaln_;  // silu(c) -> (shift, scale)
    nn::Linear<T> final_out_;
};

// Tokenizer and DiT must agree on latent dimension and patch size.
void check_compatible(const tokenizer::TokenizerConfig& tok, const DiTConfig& dit);

// Euler sampling, rescale by latent_std, decode with the tokenizer.
template <typename T>
Frame interpolate_frame(const tokenizer::Tokenizer<T>& tok, const DiffusionTransformer<T>& dit, const Frame& i0,
                        const Frame& i1, int steps, std::uint64_t seed, const DatasetStats& stats);

extern template class DiffusionTransformer<float>;
extern template class DiffusionTransformer<double>;

}  // namespace eden::diffusion
