#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "eden/data.hpp"
#include "eden/diffusion.hpp"
#include "eden/losses.hpp"
#include "eden/tokenizer.hpp"
#include "eden/training.hpp"

namespace eden::config {

using json = nlohmann::json;

// Readers reject unknown keys and wrong types; errors name the offending path
// (e.g. "tokenizer.hidden_dim"). Missing keys keep their defaults.
json to_json(const tokenizer::TokenizerConfig& c);
tokenizer::TokenizerConfig tokenizer_from_json(const json& j, const std::string& path = "tokenizer");
json to_json(const diffusion::DiTConfig& c);
diffusion::DiTConfig dit_from_json(const json& j, const std::string& path = "dit");
json to_json(const losses::DiscriminatorConfig& c);
losses::DiscriminatorConfig discriminator_from_json(const json& j, const std::string& path = "discriminator");
json to_json(const losses::LossWeights& w);
losses::LossWeights weights_from_json(const json& j, const std::string& path);
json to_json(const diffusion::DatasetStats& s);
diffusion::DatasetStats stats_from_json(const json& j, const std::string& path = "stats");
json to_json(const data::SpriteSceneConfig& c);
data::SpriteSceneConfig scene_from_json(const json& j, const std::string& path);
json to_json(const training::TrainConfig& c);
// Starts from TrainConfig::defaults(stage).
training::TrainConfig train_from_json(const json& j, int stage, const std::string& path);

struct DataConfig {
    data::SpriteSceneConfig scene;
    std::size_t n_sequences = 4;
    // Real data: frame directories to ingest instead of the synthetic corpus.
    std::vector<std::string> frame_dirs;
    // Triplet list used by training and eval when set.
    std::string triplets;
    // > 0: train on this many fixed triplets (overfit mode) instead of sampling.
    std::size_t fixed_triplets = 0;
};

struct EvalConfig {
    std::vector<int> steps{0, 1, 2, 5, 20, 50};
    std::vector<std::size_t> intervals{1, 2, 4};
    std::size_t max_samples = 0;  // 0: all
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir;
    DataConfig data;
    tokenizer::TokenizerConfig tokenizer;
    losses::DiscriminatorConfig discriminator;
    diffusion::DiTConfig dit;
    training::TrainConfig tokenizer_stage1 = training::TrainConfig::defaults(1);
    training::TrainConfig tokenizer_stage2 = training::TrainConfig::defaults(2);
    training::TrainConfig dit_stage1 = training::TrainConfig::defaults(1);
    training::TrainConfig dit_stage2 = training::TrainConfig::defaults(2);
    EvalConfig eval;

    training::TrainConfig& train(bool dit_model, int stage);
    void validate() const;
};

RunConfig run_config_from_json(const json& j);
RunConfig load_run_config(const std::filesystem::path& path);
json to_json(const RunConfig& c);

}  // namespace eden::config
