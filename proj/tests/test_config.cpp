#include <doctest.h>

#include <fstream>

#include "eden/config.hpp"
#include "helpers.hpp"

using namespace eden;
using namespace eden::config;

namespace {

std::string error_of(const std::function<void()>& f, std::string* category = nullptr) {
    try {
        f();
    } catch (const Error& e) {
        if (category) *category = e.category();
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("run config defaults and JSON round trip") {
    const RunConfig def = run_config_from_json(json::object());
    CHECK(def.tokenizer.hidden_dim == 768);
    CHECK(def.dit.n_blocks == 12);
    CHECK(def.tokenizer_stage2.batch_size == 64);
    CHECK(def.dit_stage1.total_steps == 200000);
    CHECK(def.eval.steps == std::vector<int>{0, 1, 2, 5, 20, 50});

    const json j = json::parse(R"({
      "seed": 11,
      "output_dir": "out",
      "data": {"n_sequences": 3, "fixed_triplets": 4,
               "scene": {"height": 32, "width": 48, "length": 9, "max_interval": 3, "trajectory": "sinusoidal",
                         "shapes": ["disc", "triangle"], "max_size": 6}},
      "tokenizer": {"hidden_dim": 64, "heads": 2, "patch_size": 8, "native_h": 32, "native_w": 48},
      "dit": {"hidden_dim": 64, "patch_size": 8, "native_h": 32, "native_w": 48, "use_difference_embedding": false},
      "discriminator": {"widths": [8, 16]},
      "train": {"tokenizer": {"stage1": {"batch_size": 4, "loss_weights": {"adversarial": 0.0}},
                              "stage2": {"resolutions": [[16, 16], [32, 48]]}},
                "dit": {"stage2": {"total_steps": 7}}},
      "eval": {"steps": [0, 2], "intervals": [1], "max_samples": 5}
    })");
    const RunConfig c = run_config_from_json(j);
    CHECK(c.seed == 11);
    CHECK(c.data.scene.trajectory == data::Trajectory::Sinusoidal);
    CHECK(c.data.scene.shapes.size() == 2);
    CHECK(c.tokenizer.hidden_dim == 64);
    CHECK_FALSE(c.dit.use_difference_embedding);
    CHECK(c.tokenizer_stage1.batch_size == 4);
    CHECK(c.tokenizer_stage1.weights.adversarial == 0.0);
    CHECK(c.tokenizer_stage1.weights.kl == 1e-6);
    CHECK(c.tokenizer_stage2.resolutions.size() == 2);
    CHECK(c.tokenizer_stage2.lr_start == 1e-5);  // stage-2 defaults underneath
    CHECK(c.dit_stage2.total_steps == 7);
    CHECK(c.dit_stage2.stage == 2);
    CHECK(c.eval.max_samples == 5);

    const json again = to_json(run_config_from_json(to_json(c)));
    CHECK(again == to_json(c));
}

TEST_CASE("unknown keys and wrong types name their path") {
    std::string cat;
    CHECK(error_of([] { run_config_from_json(json::parse(R"({"tokenizer": {"hidden_dims": 4}})")); }, &cat) ==
          "tokenizer.hidden_dims: unknown key");
    CHECK(cat == "config");
    CHECK(error_of([] { run_config_from_json(json::parse(R"({"tokenizer": {"hidden_dim": "big"}})")); })
              .rfind("tokenizer.hidden_dim: expected", 0) == 0);
    CHECK(error_of([] { run_config_from_json(json::parse(R"({"train": {"dit": {"stage3": {}}}})")); }) ==
          "train.dit.stage3: unknown key");
    CHECK(error_of([] {
              run_config_from_json(json::parse(R"({"train": {"tokenizer": {"stage1": {"loss_weights": {"l2": 1}}}}})"));
          }) == "train.tokenizer.stage1.loss_weights.l2: unknown key");
    CHECK(error_of([] { run_config_from_json(json::parse(R"({"data": {"scene": {"shapes": ["blob"]}}})")); }) != "");
    CHECK(error_of([] { run_config_from_json(json::parse(R"({"tokenizer": {"heads": -1}})")); }) != "");
    CHECK(error_of([] { run_config_from_json(json::parse(R"([1, 2])")); }) != "");
}

TEST_CASE("semantic validation") {
    CHECK(error_of([] { run_config_from_json(json::parse(R"({"data": {"scene": {"length": 4, "max_interval": 2}}})")); })
              .find("data.scene") != std::string::npos);
    // Tokenizer and DiT must agree.
    CHECK(error_of([] { run_config_from_json(json::parse(R"({"dit": {"latent_dim": 8}})")); }) != "");
    CHECK(error_of([] {
              run_config_from_json(json::parse(R"({"train": {"tokenizer": {"stage1": {"ema": true}}}})"));
          }) != "");
}

TEST_CASE("config files") {
    test::TempDir tmp("cfg");
    std::ofstream(tmp / "ok.json") << R"({"seed": 4})";
    CHECK(load_run_config(tmp / "ok.json").seed == 4);
    std::ofstream(tmp / "broken.json") << "{ seed: ";
    std::string cat;
    error_of([&] { load_run_config(tmp / "broken.json"); }, &cat);
    CHECK(cat == "config");
    error_of([&] { load_run_config(tmp / "none.json"); }, &cat);
    CHECK(cat == "io");
}

TEST_CASE("stats and train configs in isolation") {
    const auto s = stats_from_json(json::parse(R"({"sim_mean": 0.5, "sim_std": 0.1, "latent_std": 2})"));
    CHECK(s.latent_std == 2.0);
    CHECK(stats_from_json(to_json(s)).sim_std == 0.1);
    CHECK_THROWS_AS(stats_from_json(json::parse(R"({"sim_std": 0})")), Error);
    const auto t = train_from_json(json::parse(R"({"intervals": [1, 3]})"), 2, "t");
    CHECK(t.stage == 2);
    CHECK(t.intervals == std::vector<std::size_t>{1, 3});
    CHECK_THROWS_AS(train_from_json(json::parse(R"({"stage": 1})"), 2, "t"), Error);
}
