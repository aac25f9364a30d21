#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eden/data.hpp"
#include "eden/diffusion.hpp"
#include "eden/losses.hpp"
#include "eden/tokenizer.hpp"

namespace eden::training {

struct TrainConfig {
    int stage = 1;
    std::size_t batch_size = 256;
    double lr_start = 1.0e-4;
    double lr_min = 1.0e-8;
    std::size_t total_steps = 200000;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double weight_decay = 1.0e-4;
    double adam_eps = 1.0e-8;
    double grad_clip = 1.0;  // global norm; 0 disables
    bool ema = false;        // reserved
    std::vector<std::size_t> intervals{1, 2, 3, 4, 5};
    std::vector<data::Resolution> resolutions;  // stage 2 crop sizes
    std::size_t checkpoint_every = 500;
    double adversarial_warmup = 0.5;  // fraction of total_steps before lambda_G switches on
    losses::LossWeights weights;

    // Full-scale schedule for each stage (200k + 50k steps).
    static TrainConfig defaults(int stage);
    void validate() const;
};

// lr_min + 0.5 (lr_start - lr_min)(1 + cos(pi step / total))
double cosine_lr(std::size_t step, std::size_t total, double lr_start, double lr_min);

// Scales all gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
template <typename T>
double clip_grad_norm(ParamStore<T>& params, double max_norm);

template <typename T>
class AdamW {
public:
    AdamW(ParamStore<T>& params, double beta1, double beta2, double weight_decay, double eps);
    static AdamW from_config(ParamStore<T>& params, const TrainConfig& cfg) {
        return AdamW(params, cfg.beta1, cfg.beta2, cfg.weight_decay, cfg.adam_eps);
    }

    void step(double lr);
    std::uint64_t step_count() const { return t_; }
    // First / second moments, indexed like the parameter store.
    std::vector<Tensor<T>>& first_moments() { return m_; }
    std::vector<Tensor<T>>& second_moments() { return v_; }
    const std::vector<Tensor<T>>& first_moments() const { return m_; }
    const std::vector<Tensor<T>>& second_moments() const { return v_; }
    void set_step_count(std::uint64_t t) { t_ = t; }

private:
    ParamStore<T>* params_;
    double beta1_, beta2_, wd_, eps_;
    std::uint64_t t_ = 0;
    std::vector<Tensor<T>> m_, v_;
};

// ------------------------------------------------------------ checkpoints

inline constexpr char kCheckpointMagic[8] = {'E', 'D', 'E', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::string kind;  // "tokenizer", "dit" or "discriminator"
    nlohmann::json config = nlohmann::json::object();
    diffusion::DatasetStats stats;
    std::uint64_t step = 0;
    int stage = 1;
    std::uint64_t optimizer_step = 0;
    // Model parameters, then optimizer moments named "optim.m.<param>" / "optim.v.<param>".
    std::vector<NamedArray> arrays;

    nlohmann::json metadata() const;
    friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
        return a.metadata() == b.metadata() && a.arrays == b.arrays;
    }
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// `expected_kind` set: a different kind is an error.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_kind = {});

template <typename T>
std::vector<NamedArray> export_params(const ParamStore<T>& params);
// Strict: every parameter must be present with its shape, and no unknown names.
template <typename T>
void import_params(ParamStore<T>& params, const Checkpoint& ckpt);
template <typename T>
void export_optimizer(const AdamW<T>& opt, const ParamStore<T>& params, Checkpoint& ckpt);
// Returns false when the checkpoint carries no optimizer state.
template <typename T>
bool import_optimizer(AdamW<T>& opt, const ParamStore<T>& params, const Checkpoint& ckpt);

Checkpoint tokenizer_checkpoint(const tokenizer::Tokenizer<float>& tok, const diffusion::DatasetStats& stats,
                                std::uint64_t step, int stage);
Checkpoint dit_checkpoint(const diffusion::DiffusionTransformer<float>& dit, const diffusion::DatasetStats& stats,
                          std::uint64_t step, int stage);
Checkpoint discriminator_checkpoint(const losses::Discriminator<float>& disc, std::uint64_t step, int stage);
std::unique_ptr<tokenizer::Tokenizer<float>> load_tokenizer(const Checkpoint& ckpt);
std::unique_ptr<diffusion::DiffusionTransformer<float>> load_dit(const Checkpoint& ckpt);
std::unique_ptr<losses::Discriminator<float>> load_discriminator(const Checkpoint& ckpt);

// -------------------------------------------------------------- training

// Triplet for (step, index within batch). Must be a pure function.
using TripletProvider = std::function<data::TripletRecord(std::uint64_t step, std::size_t index)>;

// Cycles through a fixed list; batch entries take consecutive records.
TripletProvider fixed_triplets(std::vector<data::TripletRecord> triplets, std::size_t batch_size);
TripletProvider sampled_triplets(std::shared_ptr<const data::TripletSampler> sampler, std::size_t batch_size);

struct StepLog {
    std::uint64_t step = 0;
    double lr = 0.0;
    losses::LossBreakdown loss;  // batch means
    double disc_loss = 0.0;
    double grad_norm = 0.0;
    double flow_loss = 0.0;  // DiT only
};

struct TrainHooks {
    std::function<void(const StepLog&)> on_step;
    // Called every checkpoint_every steps and after the final step.
    std::function<void(std::uint64_t step)> on_checkpoint;
};

class TokenizerTrainer {
public:
    // Fresh stage-1 run.
    TokenizerTrainer(const tokenizer::TokenizerConfig& tok_cfg, const losses::DiscriminatorConfig& disc_cfg,
                     const TrainConfig& train, std::uint64_t seed);
    // Stage 2 from a stage-1 checkpoint, or resume of a run at the same stage.
    TokenizerTrainer(const Checkpoint& tok_ckpt, const Checkpoint* disc_ckpt, const TrainConfig& train,
                     std::uint64_t seed);

    StepLog step(const TripletProvider& data);
    void run(const TripletProvider& data, const TrainHooks& hooks = {});

    std::uint64_t current_step() const { return step_; }
    const TrainConfig& config() const { return cfg_; }
    tokenizer::Tokenizer<float>& model() { return *tok_; }
    losses::Discriminator<float>& discriminator() { return *disc_; }
    diffusion::DatasetStats& stats() { return stats_; }
    Checkpoint checkpoint() const;
    Checkpoint disc_checkpoint() const;
    bool adversarial_active(std::uint64_t step) const;

private:
    void init_optimizers();

    TrainConfig cfg_;
    std::uint64_t seed_;
    std::uint64_t step_ = 0;
    diffusion::DatasetStats stats_;
    std::unique_ptr<tokenizer::Tokenizer<float>> tok_;
    std::unique_ptr<losses::Discriminator<float>> disc_;
    std::unique_ptr<AdamW<float>> opt_, disc_opt_;
    losses::EdgePyramid<float> extractor_;
};

// Population std of encoder posterior means over the given triplets.
double latent_std(const tokenizer::Tokenizer<float>& tok, const std::vector<data::TripletRecord>& triplets);

class DiTTrainer {
public:
    // Fresh stage-1 run on a frozen tokenizer. `stats` must carry latent_std.
    DiTTrainer(std::shared_ptr<const tokenizer::Tokenizer<float>> tok, const diffusion::DiTConfig& dit_cfg,
               const diffusion::DatasetStats& stats, const TrainConfig& train, std::uint64_t seed);
    DiTTrainer(std::shared_ptr<const tokenizer::Tokenizer<float>> tok, const Checkpoint& dit_ckpt,
               const TrainConfig& train, std::uint64_t seed);

    StepLog step(const TripletProvider& data);
    void run(const TripletProvider& data, const TrainHooks& hooks = {});

    std::uint64_t current_step() const { return step_; }
    diffusion::DiffusionTransformer<float>& model() { return *dit_; }
    const diffusion::DatasetStats& stats() const { return stats_; }
    Checkpoint checkpoint() const;

    // Flow loss of one triplet with the given draws, no parameter update.
    // `diff_override` replaces the difference context.
    double sample_loss(const data::TripletRecord& rec, std::uint64_t draw_seed,
                       std::optional<double> diff_override = std::nullopt) const;

private:
    const tokenizer::LatentPosterior<float>& posterior(const data::TripletRecord& rec) const;

    TrainConfig cfg_;
    std::uint64_t seed_;
    std::uint64_t step_ = 0;
    diffusion::DatasetStats stats_;
    std::shared_ptr<const tokenizer::Tokenizer<float>> tok_;
    std::unique_ptr<diffusion::DiffusionTransformer<float>> dit_;
    std::unique_ptr<AdamW<float>> opt_;
    // Frozen tokenizer: posteriors are cached per record identity.
    mutable std::map<std::string, tokenizer::LatentPosterior<float>> cache_;
};

// Loss log CSV: step,lr,l1,perceptual,adversarial,kl,total,disc,flow,grad_norm
class LossLog {
public:
    explicit LossLog(const std::filesystem::path& path, bool append = false);
    void write(const StepLog& s);

private:
    std::shared_ptr<std::FILE> file_;
};

}  // namespace eden::training
