#include "eden/config.hpp"

#include <fstream>
#include <set>

namespace eden::config {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void type_error(const std::string& path, const char* expected) {
    fail("config", path + ": expected " + expected);
}

void read(const json& j, std::size_t& out, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 0) type_error(path, "a non-negative integer");
    out = j.get<std::size_t>();
}
void read(const json& j, int& out, const std::string& path) {
    if (!j.is_number_integer()) type_error(path, "an integer");
    out = j.get<int>();
}
void read(const json& j, double& out, const std::string& path) {
    if (!j.is_number()) type_error(path, "a number");
    out = j.get<double>();
}
void read(const json& j, bool& out, const std::string& path) {
    if (!j.is_boolean()) type_error(path, "true or false");
    out = j.get<bool>();
}
void read(const json& j, std::string& out, const std::string& path) {
    if (!j.is_string()) type_error(path, "a string");
    out = j.get<std::string>();
}
void read(const json& j, data::Shape& out, const std::string& path) {
    std::string s;
    read(j, s, path);
    try {
        out = data::parse_shape(s);
    } catch (const Error& e) {
        fail("config", path + ": " + e.what());
    }
}
void read(const json& j, data::Resolution& out, const std::string& path) {
    if (!j.is_array() || j.size() != 2) type_error(path, "[height, width]");
    read(j[0], out.height, path + "[0]");
    read(j[1], out.width, path + "[1]");
}
void read(const json& j, tokenizer::Upsample& out, const std::string& path) {
    std::string s;
    read(j, s, path);
    if (s == "nearest") out = tokenizer::Upsample::Nearest;
    else if (s == "bilinear") out = tokenizer::Upsample::Bilinear;
    else fail("config", path + ": expected \"nearest\" or \"bilinear\"");
}
template <typename V>
void read(const json& j, std::vector<V>& out, const std::string& path) {
    if (!j.is_array()) type_error(path, "an array");
    out.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
        V v{};
        read(j[i], v, path + "[" + std::to_string(i) + "]");
        out.push_back(v);
    }
}

// Walks one JSON object, tracking consumed keys so leftovers can be reported.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) type_error(path_.empty() ? "<root>" : path_, "an object");
    }

    template <typename V>
    void get(const char* key, V& out) {
        seen_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) read(*it, out, join(path_, key));
    }
    const json* sub(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string path(const char* key) const { return join(path_, key); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail("config", join(path_, it.key()) + ": unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Re-raise a validation failure from a config object with its section path.
template <typename F>
void validated(const std::string& path, F&& f) {
    try {
        f();
    } catch (const Error& e) {
        fail("config", path + ": " + e.what());
    }
}

std::string upsample_name(tokenizer::Upsample u) { return u == tokenizer::Upsample::Nearest ? "nearest" : "bilinear"; }

}  // namespace

json to_json(const tokenizer::TokenizerConfig& c) {
    return {{"patch_size", c.patch_size}, {"hidden_dim", c.hidden_dim}, {"n_blocks", c.n_blocks},
            {"latent_dim", c.latent_dim}, {"heads", c.heads},           {"ff_expansion", c.ff_expansion},
            {"native_h", c.native_h},     {"native_w", c.native_w},     {"upsample", upsample_name(c.upsample)}};
}

tokenizer::TokenizerConfig tokenizer_from_json(const json& j, const std::string& path) {
    tokenizer::TokenizerConfig c;
    Reader r(j, path);
    r.get("patch_size", c.patch_size);
    r.get("hidden_dim", c.hidden_dim);
    r.get("n_blocks", c.n_blocks);
    r.get("latent_dim", c.latent_dim);
    r.get("heads", c.heads);
    r.get("ff_expansion", c.ff_expansion);
    r.get("native_h", c.native_h);
    r.get("native_w", c.native_w);
    r.get("upsample", c.upsample);
    r.finish();
    c.validate();
    return c;
}

json to_json(const diffusion::DiTConfig& c) {
    return {{"hidden_dim", c.hidden_dim}, {"n_blocks", c.n_blocks},
            {"heads", c.heads},           {"latent_dim", c.latent_dim},
            {"patch_size", c.patch_size}, {"ff_expansion", c.ff_expansion},
            {"native_h", c.native_h},     {"native_w", c.native_w},
            {"use_difference_embedding", c.use_difference_embedding}};
}

diffusion::DiTConfig dit_from_json(const json& j, const std::string& path) {
    diffusion::DiTConfig c;
    Reader r(j, path);
    r.get("hidden_dim", c.hidden_dim);
    r.get("n_blocks", c.n_blocks);
    r.get("heads", c.heads);
    r.get("latent_dim", c.latent_dim);
    r.get("patch_size", c.patch_size);
    r.get("ff_expansion", c.ff_expansion);
    r.get("native_h", c.native_h);
    r.get("native_w", c.native_w);
    r.get("use_difference_embedding", c.use_difference_embedding);
    r.finish();
    c.validate();
    return c;
}

json to_json(const losses::DiscriminatorConfig& c) { return {{"widths", c.widths}, {"slope", c.slope}}; }

losses::DiscriminatorConfig discriminator_from_json(const json& j, const std::string& path) {
    losses::DiscriminatorConfig c;
    Reader r(j, path);
    r.get("widths", c.widths);
    r.get("slope", c.slope);
    r.finish();
    require(!c.widths.empty(), "config", path + ".widths: must not be empty");
    return c;
}

json to_json(const losses::LossWeights& w) {
    return {{"l1", w.l1}, {"perceptual", w.perceptual}, {"adversarial", w.adversarial}, {"kl", w.kl}};
}

losses::LossWeights weights_from_json(const json& j, const std::string& path) {
    losses::LossWeights w;
    Reader r(j, path);
    r.get("l1", w.l1);
    r.get("perceptual", w.perceptual);
    r.get("adversarial", w.adversarial);
    r.get("kl", w.kl);
    r.finish();
    validated(path, [&] { w.validate(); });
    return w;
}

json to_json(const diffusion::DatasetStats& s) {
    return {{"sim_mean", s.sim_mean}, {"sim_std", s.sim_std}, {"latent_std", s.latent_std}};
}

diffusion::DatasetStats stats_from_json(const json& j, const std::string& path) {
    diffusion::DatasetStats s;
    Reader r(j, path);
    r.get("sim_mean", s.sim_mean);
    r.get("sim_std", s.sim_std);
    r.get("latent_std", s.latent_std);
    r.finish();
    validated(path, [&] { s.validate(); });
    return s;
}

json to_json(const data::SpriteSceneConfig& c) {
    json shapes = json::array();
    for (data::Shape s : c.shapes) shapes.push_back(data::to_string(s));
    json j = {{"height", c.height},
              {"width", c.width},
              {"n_sprites", c.n_sprites},
              {"shapes", shapes},
              {"min_speed", c.min_speed},
              {"max_speed", c.max_speed},
              {"min_size", c.min_size},
              {"max_size", c.max_size},
              {"trajectory", data::to_string(c.trajectory)},
              {"length", c.length},
              {"max_interval", c.max_interval}};
    return j;
}

data::SpriteSceneConfig scene_from_json(const json& j, const std::string& path) {
    data::SpriteSceneConfig c;
    Reader r(j, path);
    r.get("height", c.height);
    r.get("width", c.width);
    r.get("n_sprites", c.n_sprites);
    r.get("shapes", c.shapes);
    r.get("min_speed", c.min_speed);
    r.get("max_speed", c.max_speed);
    r.get("min_size", c.min_size);
    r.get("max_size", c.max_size);
    std::string traj = data::to_string(c.trajectory);
    r.get("trajectory", traj);
    validated(r.path("trajectory"), [&] { c.trajectory = data::parse_trajectory(traj); });
    r.get("length", c.length);
    r.get("max_interval", c.max_interval);
    r.finish();
    validated(path, [&] { c.validate(); });
    return c;
}

json to_json(const training::TrainConfig& c) {
    json res = json::array();
    for (const auto& r : c.resolutions) res.push_back({r.height, r.width});
    return {{"batch_size", c.batch_size},
            {"lr_start", c.lr_start},
            {"lr_min", c.lr_min},
            {"total_steps", c.total_steps},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"weight_decay", c.weight_decay},
            {"adam_eps", c.adam_eps},
            {"grad_clip", c.grad_clip},
            {"ema", c.ema},
            {"intervals", c.intervals},
            {"resolutions", res},
            {"checkpoint_every", c.checkpoint_every},
            {"adversarial_warmup", c.adversarial_warmup},
            {"loss_weights", to_json(c.weights)}};
}

training::TrainConfig train_from_json(const json& j, int stage, const std::string& path) {
    training::TrainConfig c = training::TrainConfig::defaults(stage);
    Reader r(j, path);
    r.get("batch_size", c.batch_size);
    r.get("lr_start", c.lr_start);
    r.get("lr_min", c.lr_min);
    r.get("total_steps", c.total_steps);
    r.get("beta1", c.beta1);
    r.get("beta2", c.beta2);
    r.get("weight_decay", c.weight_decay);
    r.get("adam_eps", c.adam_eps);
    r.get("grad_clip", c.grad_clip);
    r.get("ema", c.ema);
    r.get("intervals", c.intervals);
    r.get("resolutions", c.resolutions);
    r.get("checkpoint_every", c.checkpoint_every);
    r.get("adversarial_warmup", c.adversarial_warmup);
    if (const json* w = r.sub("loss_weights")) c.weights = weights_from_json(*w, r.path("loss_weights"));
    r.finish();
    validated(path, [&] { c.validate(); });
    return c;
}

training::TrainConfig& RunConfig::train(bool dit_model, int stage) {
    require(stage == 1 || stage == 2, "config", "stage must be 1 or 2");
    if (dit_model) return stage == 1 ? dit_stage1 : dit_stage2;
    return stage == 1 ? tokenizer_stage1 : tokenizer_stage2;
}

void RunConfig::validate() const {
    tokenizer.validate();
    dit.validate();
    validated("dit", [&] { diffusion::check_compatible(tokenizer, dit); });
    if (data.frame_dirs.empty() && data.triplets.empty()) {
        validated("data.scene", [&] { data.scene.validate(); });
        require(data.n_sequences >= 1, "config", "data.n_sequences: must be at least 1");
    }
    require(!eval.steps.empty(), "config", "eval.steps: must not be empty");
    for (int s : eval.steps) require(s >= 0, "config", "eval.steps: values must be non-negative");
    require(!eval.intervals.empty(), "config", "eval.intervals: must not be empty");
    for (std::size_t k : eval.intervals) require(k >= 1, "config", "eval.intervals: values must be at least 1");
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    Reader r(j, "");
    r.get("seed", c.seed);
    r.get("output_dir", c.output_dir);
    if (const json* d = r.sub("data")) {
        Reader dr(*d, "data");
        dr.get("n_sequences", c.data.n_sequences);
        dr.get("frame_dirs", c.data.frame_dirs);
        dr.get("triplets", c.data.triplets);
        dr.get("fixed_triplets", c.data.fixed_triplets);
        if (const json* s = dr.sub("scene")) c.data.scene = scene_from_json(*s, "data.scene");
        dr.finish();
    }
    if (const json* t = r.sub("tokenizer")) c.tokenizer = tokenizer_from_json(*t, "tokenizer");
    if (const json* t = r.sub("discriminator")) c.discriminator = discriminator_from_json(*t, "discriminator");
    if (const json* t = r.sub("dit")) c.dit = dit_from_json(*t, "dit");
    if (const json* t = r.sub("train")) {
        Reader tr(*t, "train");
        for (const char* model : {"tokenizer", "dit"}) {
            if (const json* m = tr.sub(model)) {
                const std::string mp = std::string("train.") + model;
                Reader mr(*m, mp);
                const bool is_dit = std::string(model) == "dit";
                if (const json* s = mr.sub("stage1")) c.train(is_dit, 1) = train_from_json(*s, 1, mp + ".stage1");
                if (const json* s = mr.sub("stage2")) c.train(is_dit, 2) = train_from_json(*s, 2, mp + ".stage2");
                mr.finish();
            }
        }
        tr.finish();
    }
    if (const json* e = r.sub("eval")) {
        Reader er(*e, "eval");
        er.get("steps", c.eval.steps);
        er.get("intervals", c.eval.intervals);
        er.get("max_samples", c.eval.max_samples);
        er.finish();
    }
    r.finish();
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "io", "cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail("config", path.string() + ": invalid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

json to_json(const RunConfig& c) {
    return {{"seed", c.seed},
            {"output_dir", c.output_dir},
            {"data",
             {{"n_sequences", c.data.n_sequences},
              {"frame_dirs", c.data.frame_dirs},
              {"triplets", c.data.triplets},
              {"fixed_triplets", c.data.fixed_triplets},
              {"scene", to_json(c.data.scene)}}},
            {"tokenizer", to_json(c.tokenizer)},
            {"discriminator", to_json(c.discriminator)},
            {"dit", to_json(c.dit)},
            {"train",
             {{"tokenizer", {{"stage1", to_json(c.tokenizer_stage1)}, {"stage2", to_json(c.tokenizer_stage2)}}},
              {"dit", {{"stage1", to_json(c.dit_stage1)}, {"stage2", to_json(c.dit_stage2)}}}}},
            {"eval", {{"steps", c.eval.steps}, {"intervals", c.eval.intervals}, {"max_samples", c.eval.max_samples}}}};
}

}  // namespace eden::config
