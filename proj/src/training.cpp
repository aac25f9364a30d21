#include "eden/training.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>

#include "eden/config.hpp"
#include "eden/core/rng.hpp"

namespace eden::training {

namespace fs = std::filesystem;

TrainConfig TrainConfig::defaults(int stage) {
    require(stage == 1 || stage == 2, "config", "stage must be 1 or 2");
    TrainConfig c;
    c.stage = stage;
    if (stage == 2) {
        c.batch_size = 64;
        c.lr_start = 1.0e-5;
        c.lr_min = 1.25e-8;
        c.total_steps = 50000;
        c.intervals = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    }
    return c;
}

void TrainConfig::validate() const {
    require(stage == 1 || stage == 2, "config", "stage must be 1 or 2");
    require(batch_size >= 1, "config", "batch_size must be at least 1");
    require(lr_min > 0.0 && lr_start >= lr_min, "config", "learning rates must satisfy lr_start >= lr_min > 0");
    require(total_steps >= 1, "config", "total_steps must be at least 1");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "config", "betas must lie in [0, 1)");
    require(weight_decay >= 0.0, "config", "weight_decay must be non-negative");
    require(adam_eps > 0.0, "config", "adam_eps must be positive");
    require(grad_clip >= 0.0, "config", "grad_clip must be non-negative");
    require(!ema, "config", "ema is reserved and not implemented; leave it false");
    require(!intervals.empty(), "config", "intervals must not be empty");
    for (std::size_t k : intervals) require(k >= 1, "config", "intervals must be at least 1");
    require(adversarial_warmup >= 0.0 && adversarial_warmup <= 1.0, "config", "adversarial_warmup must lie in [0, 1]");
    weights.validate();
}

double cosine_lr(std::size_t step, std::size_t total, double lr_start, double lr_min) {
    require(step <= total, "range",
            "step " + std::to_string(step) + " exceeds the schedule length " + std::to_string(total));
    if (total == 0) return lr_start;
    const double progress = static_cast<double>(step) / static_cast<double>(total);
    return lr_min + 0.5 * (lr_start - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
double clip_grad_norm(ParamStore<T>& params, double max_norm) {
    double sq = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i)
        for (T g : params[i].grad.storage()) sq += static_cast<double>(g) * g;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const T scale = static_cast<T>(max_norm / norm);
        for (std::size_t i = 0; i < params.size(); ++i)
            for (T& g : params[i].grad.storage()) g *= scale;
    }
    return norm;
}

template <typename T>
AdamW<T>::AdamW(ParamStore<T>& params, double beta1, double beta2, double weight_decay, double eps)
    : params_(&params), beta1_(beta1), beta2_(beta2), wd_(weight_decay), eps_(eps) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_.emplace_back(params[i].value.rows(), params[i].value.cols());
        v_.emplace_back(params[i].value.rows(), params[i].value.cols());
    }
}

template <typename T>
void AdamW<T>::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_->size(); ++i) {
        Parameter<T>& p = (*params_)[i];
        Tensor<T>& m = m_[i];
        Tensor<T>& v = v_[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double g = p.grad[k];
            const double mk = beta1_ * m[k] + (1.0 - beta1_) * g;
            const double vk = beta2_ * v[k] + (1.0 - beta2_) * g * g;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            const double update = (mk / bc1) / (std::sqrt(vk / bc2) + eps_) + wd_ * p.value[k];
            p.value[k] = static_cast<T>(p.value[k] - lr * update);
        }
    }
}

// ------------------------------------------------------------ checkpoints

nlohmann::json Checkpoint::metadata() const {
    return {{"kind", kind},   {"config", config}, {"stats", config::to_json(stats)},
            {"step", step},   {"stage", stage},   {"optimizer_step", optimizer_step}};
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos, const std::string& path) {
    require(pos + 4 <= in.size(), "checkpoint", path + ": truncated checkpoint");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

std::uint32_t float_bits(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    return u;
}

float bits_float(std::uint32_t u) {
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

constexpr const char* kMomentPrefix[2] = {"optim.m.", "optim.v."};

bool is_optimizer_array(const std::string& name) { return name.rfind("optim.", 0) == 0; }

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
    std::string buf(kCheckpointMagic, 8);
    put_u32(buf, ckpt.version);
    const std::string meta = ckpt.metadata().dump();
    put_u32(buf, static_cast<std::uint32_t>(meta.size()));
    buf += meta;
    for (const NamedArray& a : ckpt.arrays) {
        std::size_t count = 1;
        for (std::uint32_t d : a.dims) count *= d;
        require(count == a.data.size(), "checkpoint", "array " + a.name + " has inconsistent dims");
        put_u32(buf, static_cast<std::uint32_t>(a.name.size()));
        buf += a.name;
        put_u32(buf, static_cast<std::uint32_t>(a.dims.size()));
        for (std::uint32_t d : a.dims) put_u32(buf, d);
        for (float f : a.data) put_u32(buf, float_bits(f));
    }

    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        require(!ec, "io", "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), "io", "cannot write " + tmp.string());
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        require(static_cast<bool>(out), "io", "failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, "io", "cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const fs::path& path, const std::string& expected_kind) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "io", "cannot read checkpoint " + path.string());
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string where = path.string();
    require(buf.size() >= 8 && std::memcmp(buf.data(), kCheckpointMagic, 8) == 0, "checkpoint",
            where + ": not a checkpoint file (bad magic)");
    std::size_t pos = 8;
    Checkpoint ckpt;
    ckpt.version = get_u32(buf, pos, where);
    require(ckpt.version == kCheckpointVersion, "checkpoint",
            where + ": unsupported format version " + std::to_string(ckpt.version) + " (expected " +
                std::to_string(kCheckpointVersion) + ")");
    const std::uint32_t meta_len = get_u32(buf, pos, where);
    require(pos + meta_len <= buf.size(), "checkpoint", where + ": truncated checkpoint");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(buf.substr(pos, meta_len));
        pos += meta_len;
        ckpt.kind = meta.at("kind").get<std::string>();
        ckpt.config = meta.at("config");
        ckpt.stats = config::stats_from_json(meta.at("stats"), "stats");
        ckpt.step = meta.at("step").get<std::uint64_t>();
        ckpt.stage = meta.at("stage").get<int>();
        ckpt.optimizer_step = meta.at("optimizer_step").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        fail("checkpoint", where + ": malformed metadata: " + e.what());
    }
    if (!expected_kind.empty())
        require(ckpt.kind == expected_kind, "checkpoint",
                where + ": expected a " + expected_kind + " checkpoint but found kind '" + ckpt.kind + "'");

    std::set<std::string> names;
    while (pos < buf.size()) {
        NamedArray a;
        const std::uint32_t name_len = get_u32(buf, pos, where);
        require(pos + name_len <= buf.size(), "checkpoint", where + ": truncated checkpoint");
        a.name = buf.substr(pos, name_len);
        pos += name_len;
        require(names.insert(a.name).second, "checkpoint", where + ": duplicate array " + a.name);
        const std::uint32_t rank = get_u32(buf, pos, where);
        require(rank <= 8, "checkpoint", where + ": implausible rank for " + a.name);
        std::uint64_t count = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            a.dims.push_back(get_u32(buf, pos, where));
            count *= a.dims.back();
        }
        require(pos + 4 * count <= buf.size(), "checkpoint", where + ": truncated checkpoint in " + a.name);
        a.data.resize(count);
        for (auto& f : a.data) f = bits_float(get_u32(buf, pos, where));
        ckpt.arrays.push_back(std::move(a));
    }
    return ckpt;
}

template <typename T>
std::vector<NamedArray> export_params(const ParamStore<T>& params) {
    std::vector<NamedArray> out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter<T>& p = params[i];
        NamedArray a{p.name,
                     {static_cast<std::uint32_t>(p.value.rows()), static_cast<std::uint32_t>(p.value.cols())},
                     {}};
        a.data.reserve(p.value.size());
        for (T v : p.value.storage()) a.data.push_back(static_cast<float>(v));
        out.push_back(std::move(a));
    }
    return out;
}

namespace {

template <typename T>
void copy_into(Tensor<T>& dst, const NamedArray& a) {
    require(a.dims.size() == 2 && a.dims[0] == dst.rows() && a.dims[1] == dst.cols(), "checkpoint",
            "shape mismatch for " + a.name + ": checkpoint has " +
                (a.dims.size() == 2 ? std::to_string(a.dims[0]) + "x" + std::to_string(a.dims[1]) : "rank " + std::to_string(a.dims.size())) +
                ", model expects " + dst.shape_str());
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(a.data[k]);
}

}  // namespace

template <typename T>
void import_params(ParamStore<T>& params, const Checkpoint& ckpt) {
    std::set<std::string> loaded;
    for (const NamedArray& a : ckpt.arrays) {
        if (is_optimizer_array(a.name)) continue;
        Parameter<T>* p = params.find(a.name);
        require(p != nullptr, "checkpoint", "unknown parameter in checkpoint: " + a.name);
        copy_into(p->value, a);
        loaded.insert(a.name);
    }
    for (std::size_t i = 0; i < params.size(); ++i)
        require(loaded.count(params[i].name) > 0, "checkpoint", "checkpoint is missing parameter " + params[i].name);
}

template <typename T>
void export_optimizer(const AdamW<T>& opt, const ParamStore<T>& params, Checkpoint& ckpt) {
    for (int which = 0; which < 2; ++which) {
        const auto& moments = which == 0 ? opt.first_moments() : opt.second_moments();
        for (std::size_t i = 0; i < params.size(); ++i) {
            NamedArray a{kMomentPrefix[which] + params[i].name,
                         {static_cast<std::uint32_t>(moments[i].rows()), static_cast<std::uint32_t>(moments[i].cols())},
                         {}};
            for (T v : moments[i].storage()) a.data.push_back(static_cast<float>(v));
            ckpt.arrays.push_back(std::move(a));
        }
    }
    ckpt.optimizer_step = opt.step_count();
}

template <typename T>
bool import_optimizer(AdamW<T>& opt, const ParamStore<T>& params, const Checkpoint& ckpt) {
    std::map<std::string, const NamedArray*> found;
    for (const NamedArray& a : ckpt.arrays)
        if (is_optimizer_array(a.name)) found[a.name] = &a;
    if (found.empty()) return false;
    for (int which = 0; which < 2; ++which) {
        auto& moments = which == 0 ? opt.first_moments() : opt.second_moments();
        for (std::size_t i = 0; i < params.size(); ++i) {
            const std::string name = kMomentPrefix[which] + params[i].name;
            auto it = found.find(name);
            require(it != found.end(), "checkpoint", "checkpoint is missing optimizer state " + name);
            copy_into(moments[i], *it->second);
            found.erase(it);
        }
    }
    require(found.empty(), "checkpoint", "unknown optimizer state in checkpoint: " + (found.empty() ? "" : found.begin()->first));
    opt.set_step_count(ckpt.optimizer_step);
    return true;
}

Checkpoint tokenizer_checkpoint(const tokenizer::Tokenizer<float>& tok, const diffusion::DatasetStats& stats,
                                std::uint64_t step, int stage) {
    Checkpoint c;
    c.kind = "tokenizer";
    c.config = config::to_json(tok.config());
    c.stats = stats;
    c.step = step;
    c.stage = stage;
    c.arrays = export_params(tok.params());
    return c;
}

Checkpoint dit_checkpoint(const diffusion::DiffusionTransformer<float>& dit, const diffusion::DatasetStats& stats,
                          std::uint64_t step, int stage) {
    Checkpoint c;
    c.kind = "dit";
    c.config = config::to_json(dit.config());
    c.stats = stats;
    c.step = step;
    c.stage = stage;
    c.arrays = export_params(dit.params());
    return c;
}

Checkpoint discriminator_checkpoint(const losses::Discriminator<float>& disc, std::uint64_t step, int stage) {
    Checkpoint c;
    c.kind = "discriminator";
    c.config = config::to_json(disc.config());
    c.step = step;
    c.stage = stage;
    c.arrays = export_params(disc.params());
    return c;
}

namespace {
void expect_kind(const Checkpoint& c, const char* kind) {
    require(c.kind == kind, "checkpoint",
            std::string("expected a ") + kind + " checkpoint but found kind '" + c.kind + "'");
}
}  // namespace

std::unique_ptr<tokenizer::Tokenizer<float>> load_tokenizer(const Checkpoint& ckpt) {
    expect_kind(ckpt, "tokenizer");
    auto tok = std::make_unique<tokenizer::Tokenizer<float>>(config::tokenizer_from_json(ckpt.config, "config"), 0);
    import_params(tok->params(), ckpt);
    return tok;
}

std::unique_ptr<diffusion::DiffusionTransformer<float>> load_dit(const Checkpoint& ckpt) {
    expect_kind(ckpt, "dit");
    auto dit = std::make_unique<diffusion::DiffusionTransformer<float>>(config::dit_from_json(ckpt.config, "config"), 0);
    import_params(dit->params(), ckpt);
    return dit;
}

std::unique_ptr<losses::Discriminator<float>> load_discriminator(const Checkpoint& ckpt) {
    expect_kind(ckpt, "discriminator");
    auto disc = std::make_unique<losses::Discriminator<float>>(config::discriminator_from_json(ckpt.config, "config"), 0);
    import_params(disc->params(), ckpt);
    return disc;
}

// -------------------------------------------------------------- training

TripletProvider fixed_triplets(std::vector<data::TripletRecord> triplets, std::size_t batch_size) {
    require(!triplets.empty(), "data", "no samples: the fixed triplet set is empty");
    auto shared = std::make_shared<const std::vector<data::TripletRecord>>(std::move(triplets));
    return [shared, batch_size](std::uint64_t step, std::size_t index) {
        return (*shared)[(step * batch_size + index) % shared->size()];
    };
}

TripletProvider sampled_triplets(std::shared_ptr<const data::TripletSampler> sampler, std::size_t /*batch_size*/) {
    return [sampler](std::uint64_t step, std::size_t index) { return sampler->sample(step, index); };
}

namespace {

// Decide between fresh start, stage transition and same-stage resume.
bool resuming(const Checkpoint& ckpt, const TrainConfig& train) {
    require(!(ckpt.stage == 2 && train.stage == 1), "ordering",
            "cannot run stage 1 from a stage-2 " + ckpt.kind + " checkpoint");
    require(ckpt.stage == 1 || ckpt.stage == 2, "checkpoint", "checkpoint has invalid stage");
    return ckpt.stage == train.stage;
}

}  // namespace

TokenizerTrainer::TokenizerTrainer(const tokenizer::TokenizerConfig& tok_cfg,
                                   const losses::DiscriminatorConfig& disc_cfg, const TrainConfig& train,
                                   std::uint64_t seed)
    : cfg_(train), seed_(seed) {
    cfg_.validate();
    require(cfg_.stage == 1, "ordering", "tokenizer stage 2 requires a stage-1 tokenizer checkpoint");
    tok_ = std::make_unique<tokenizer::Tokenizer<float>>(tok_cfg, derive_seed(seed, "init-tokenizer"));
    disc_ = std::make_unique<losses::Discriminator<float>>(disc_cfg, derive_seed(seed, "init-discriminator"));
    init_optimizers();
}

TokenizerTrainer::TokenizerTrainer(const Checkpoint& tok_ckpt, const Checkpoint* disc_ckpt, const TrainConfig& train,
                                   std::uint64_t seed)
    : cfg_(train), seed_(seed) {
    cfg_.validate();
    expect_kind(tok_ckpt, "tokenizer");
    const bool resume = resuming(tok_ckpt, cfg_);
    tok_ = load_tokenizer(tok_ckpt);
    stats_ = tok_ckpt.stats;
    if (disc_ckpt) {
        disc_ = load_discriminator(*disc_ckpt);
    } else {
        disc_ = std::make_unique<losses::Discriminator<float>>(losses::DiscriminatorConfig{},
                                                               derive_seed(seed, "init-discriminator"));
    }
    init_optimizers();
    if (resume) {
        step_ = tok_ckpt.step;
        import_optimizer(*opt_, tok_->params(), tok_ckpt);
        if (disc_ckpt) import_optimizer(*disc_opt_, disc_->params(), *disc_ckpt);
    }
}

void TokenizerTrainer::init_optimizers() {
    opt_ = std::make_unique<AdamW<float>>(AdamW<float>::from_config(tok_->params(), cfg_));
    disc_opt_ = std::make_unique<AdamW<float>>(AdamW<float>::from_config(disc_->params(), cfg_));
}

bool TokenizerTrainer::adversarial_active(std::uint64_t step) const {
    return cfg_.weights.adversarial > 0.0 &&
           static_cast<double>(step) >= cfg_.adversarial_warmup * static_cast<double>(cfg_.total_steps);
}

StepLog TokenizerTrainer::step(const TripletProvider& data) {
    require(step_ < cfg_.total_steps, "range",
            "training already reached total_steps = " + std::to_string(cfg_.total_steps));
    StepLog log;
    log.step = step_;
    log.lr = cosine_lr(step_, cfg_.total_steps, cfg_.lr_start, cfg_.lr_min);
    const bool adv = adversarial_active(step_);
    losses::LossWeights weights = cfg_.weights;
    if (!adv) weights.adversarial = 0.0;

    tok_->params().zero_grad();
    disc_->params().zero_grad();
    const std::size_t batch = cfg_.batch_size;
    const float inv_b = 1.0f / static_cast<float>(batch);
    std::vector<std::pair<Tensor<float>, data::TripletRecord>> fakes;
    for (std::size_t b = 0; b < batch; ++b) {
        data::TripletRecord rec = data(step_, b);
        const std::size_t h = rec.it.height, w = rec.it.width;
        Graph<float> g;
        auto post = tok_->encode(g, rec.i0, rec.it, rec.i1);
        Rng rng(derive_seed(seed_, "tokenizer-noise", step_, b));
        const Tensor<float> noise = rng.normal_tensor<float>(g.rows(post.mean), g.cols(post.mean));
        const Var z = tokenizer::reparameterize(g, post.mean, post.logvar, noise);
        const Var out = tok_->decode(g, z, rec.i0, rec.i1);
        const Var target = g.input(rec.it.tensor<float>());
        const auto loss = losses::tokenizer_total_loss(g, out, target, h, w, post.mean, post.logvar, weights,
                                                       extractor_, adv ? disc_.get() : nullptr);
        g.backward(g.scale(loss.total, inv_b));
        log.loss.l1 += loss.parts.l1 / batch;
        log.loss.perceptual += loss.parts.perceptual / batch;
        log.loss.adversarial += loss.parts.adversarial / batch;
        log.loss.kl += loss.parts.kl / batch;
        log.loss.total += loss.parts.total / batch;
        if (adv) fakes.emplace_back(g.value(out), std::move(rec));
    }
    // The generator pass leaves gradients in the discriminator; drop them.
    disc_->params().zero_grad();
    log.grad_norm = clip_grad_norm(tok_->params(), cfg_.grad_clip);
    opt_->step(log.lr);

    if (adv) {
        for (const auto& [fake, rec] : fakes) {
            Graph<float> g;
            const Var real = g.input(rec.it.tensor<float>());
            const auto terms =
                losses::adversarial_losses(g, *disc_, real, g.input(fake), rec.it.height, rec.it.width);
            g.backward(g.scale(terms.disc, inv_b));
            log.disc_loss += static_cast<double>(g.scalar(terms.disc)) / batch;
        }
        clip_grad_norm(disc_->params(), cfg_.grad_clip);
        disc_opt_->step(log.lr);
    }
    ++step_;
    return log;
}

namespace {
template <typename Trainer>
void run_loop(Trainer& t, std::size_t total, std::size_t every, const TripletProvider& data, const TrainHooks& hooks) {
    while (t.current_step() < total) {
        const StepLog log = t.step(data);
        if (hooks.on_step) hooks.on_step(log);
        const std::uint64_t s = t.current_step();
        if (hooks.on_checkpoint && ((every > 0 && s % every == 0) || s == total)) hooks.on_checkpoint(s);
    }
}
}  // namespace

void TokenizerTrainer::run(const TripletProvider& data, const TrainHooks& hooks) {
    run_loop(*this, cfg_.total_steps, cfg_.checkpoint_every, data, hooks);
}

Checkpoint TokenizerTrainer::checkpoint() const {
    Checkpoint c = tokenizer_checkpoint(*tok_, stats_, step_, cfg_.stage);
    export_optimizer(*opt_, tok_->params(), c);
    return c;
}

Checkpoint TokenizerTrainer::disc_checkpoint() const {
    Checkpoint c = discriminator_checkpoint(*disc_, step_, cfg_.stage);
    export_optimizer(*disc_opt_, disc_->params(), c);
    return c;
}

double latent_std(const tokenizer::Tokenizer<float>& tok, const std::vector<data::TripletRecord>& triplets) {
    require(!triplets.empty(), "data", "no samples: latent statistics need at least one triplet");
    std::vector<double> values;
    for (const auto& rec : triplets) {
        const auto post = tok.encode(rec.i0, rec.it, rec.i1);
        for (float v : post.mean.storage()) values.push_back(v);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    const double sd = std::sqrt(var);
    require(sd > 0.0 && std::isfinite(sd), "data", "encoder latents have zero variance");
    return sd;
}

DiTTrainer::DiTTrainer(std::shared_ptr<const tokenizer::Tokenizer<float>> tok, const diffusion::DiTConfig& dit_cfg,
                       const diffusion::DatasetStats& stats, const TrainConfig& train, std::uint64_t seed)
    : cfg_(train), seed_(seed), stats_(stats), tok_(std::move(tok)) {
    cfg_.validate();
    stats_.validate();
    require(cfg_.stage == 1, "ordering", "dit stage 2 requires a stage-1 dit checkpoint");
    diffusion::check_compatible(tok_->config(), dit_cfg);
    dit_ = std::make_unique<diffusion::DiffusionTransformer<float>>(dit_cfg, derive_seed(seed, "init-dit"));
    opt_ = std::make_unique<AdamW<float>>(AdamW<float>::from_config(dit_->params(), cfg_));
}

DiTTrainer::DiTTrainer(std::shared_ptr<const tokenizer::Tokenizer<float>> tok, const Checkpoint& dit_ckpt,
                       const TrainConfig& train, std::uint64_t seed)
    : cfg_(train), seed_(seed), stats_(dit_ckpt.stats), tok_(std::move(tok)) {
    cfg_.validate();
    expect_kind(dit_ckpt, "dit");
    const bool resume = resuming(dit_ckpt, cfg_);
    dit_ = load_dit(dit_ckpt);
    diffusion::check_compatible(tok_->config(), dit_->config());
    opt_ = std::make_unique<AdamW<float>>(AdamW<float>::from_config(dit_->params(), cfg_));
    if (resume) {
        step_ = dit_ckpt.step;
        import_optimizer(*opt_, dit_->params(), dit_ckpt);
    }
}

const tokenizer::LatentPosterior<float>& DiTTrainer::posterior(const data::TripletRecord& rec) const {
    // Keyed by content: the tokenizer is frozen, so equal frames give equal posteriors.
    std::uint64_t h = 0;
    for (const Frame* f : {&rec.i0, &rec.it, &rec.i1}) {
        const std::string_view bytes(reinterpret_cast<const char*>(f->pixels.data()), f->pixels.size() * sizeof(float));
        h = splitmix64(h ^ fnv1a(bytes));
    }
    const std::string key = std::to_string(h) + ":" + std::to_string(rec.it.height) + "x" + std::to_string(rec.it.width);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        if (cache_.size() > 4096) cache_.clear();
        it = cache_.emplace(key, tok_->encode(rec.i0, rec.it, rec.i1)).first;
    }
    return it->second;
}

namespace {

// One flow-matching sample: x0 from the posterior (standardized), then t and eps.
Var flow_sample_loss(Graph<float>& g, const diffusion::DiffusionTransformer<float>& dit,
                     const tokenizer::LatentPosterior<float>& post, const data::TripletRecord& rec,
                     const diffusion::DatasetStats& stats, Rng& rng, std::optional<double> diff_override) {
    const Tensor<float> n = rng.normal_tensor<float>(post.mean.rows(), post.mean.cols());
    const double t = rng.uniform();
    const Tensor<float> eps = rng.normal_tensor<float>(post.mean.rows(), post.mean.cols());
    Tensor<float> x0 = tokenizer::reparameterize(post, n);
    const float inv_std = static_cast<float>(1.0 / stats.latent_std);
    for (float& v : x0.storage()) v *= inv_std;
    const auto noised = diffusion::forward_sample(x0, eps, t);
    const Var v = dit.predict_velocity(g, g.input(noised.x_t), t, rec.i0, rec.i1, stats, diff_override);
    return diffusion::flow_loss(g, v, x0, eps);
}

}  // namespace

StepLog DiTTrainer::step(const TripletProvider& data) {
    require(step_ < cfg_.total_steps, "range",
            "training already reached total_steps = " + std::to_string(cfg_.total_steps));
    StepLog log;
    log.step = step_;
    log.lr = cosine_lr(step_, cfg_.total_steps, cfg_.lr_start, cfg_.lr_min);
    dit_->params().zero_grad();
    const std::size_t batch = cfg_.batch_size;
    for (std::size_t b = 0; b < batch; ++b) {
        const data::TripletRecord rec = data(step_, b);
        const auto& post = posterior(rec);
        Rng rng(derive_seed(seed_, "dit-draw", step_, b));
        Graph<float> g;
        const Var loss = flow_sample_loss(g, *dit_, post, rec, stats_, rng, std::nullopt);
        g.backward(g.scale(loss, 1.0f / static_cast<float>(batch)));
        log.flow_loss += static_cast<double>(g.scalar(loss)) / batch;
    }
    log.loss.total = log.flow_loss;
    log.grad_norm = clip_grad_norm(dit_->params(), cfg_.grad_clip);
    opt_->step(log.lr);
    ++step_;
    return log;
}

double DiTTrainer::sample_loss(const data::TripletRecord& rec, std::uint64_t draw_seed,
                               std::optional<double> diff_override) const {
    Rng rng(draw_seed);
    Graph<float> g(false);
    return static_cast<double>(g.scalar(flow_sample_loss(g, *dit_, posterior(rec), rec, stats_, rng, diff_override)));
}

void DiTTrainer::run(const TripletProvider& data, const TrainHooks& hooks) {
    run_loop(*this, cfg_.total_steps, cfg_.checkpoint_every, data, hooks);
}

Checkpoint DiTTrainer::checkpoint() const {
    Checkpoint c = dit_checkpoint(*dit_, stats_, step_, cfg_.stage);
    export_optimizer(*opt_, dit_->params(), c);
    return c;
}

LossLog::LossLog(const fs::path& path, bool append) {
    const bool fresh = !append || !fs::exists(path) || fs::file_size(path) == 0;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::FILE* f = std::fopen(path.c_str(), append ? "a" : "w");
    require(f != nullptr, "io", "cannot open loss log " + path.string());
    file_.reset(f, [](std::FILE* p) { std::fclose(p); });
    if (fresh) std::fputs("step,lr,l1,perceptual,adversarial,kl,total,disc,flow,grad_norm\n", f);
}

void LossLog::write(const StepLog& s) {
    std::fprintf(file_.get(), "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                 static_cast<unsigned long long>(s.step), s.lr, s.loss.l1, s.loss.perceptual, s.loss.adversarial,
                 s.loss.kl, s.loss.total, s.disc_loss, s.flow_loss, s.grad_norm);
    std::fflush(file_.get());
}

#define EDEN_INSTANTIATE(T)                                                                  \
    template double clip_grad_norm<T>(ParamStore<T>&, double);                               \
    template class AdamW<T>;                                                                 \
    template std::vector<NamedArray> export_params<T>(const ParamStore<T>&);                 \
    template void import_params<T>(ParamStore<T>&, const Checkpoint&);                       \
    template void export_optimizer<T>(const AdamW<T>&, const ParamStore<T>&, Checkpoint&);   \
    template bool import_optimizer<T>(AdamW<T>&, const ParamStore<T>&, const Checkpoint&);

EDEN_INSTANTIATE(float)
EDEN_INSTANTIATE(double)

#undef EDEN_INSTANTIATE

}  // namespace eden::training
