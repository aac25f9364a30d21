#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "eden/config.hpp"
#include "eden/core/rng.hpp"
#include "eden/data.hpp"
#include "eden/evaluation.hpp"
#include "eden/training.hpp"

namespace eden::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

config::RunConfig load_config(const Options& o) {
    config::RunConfig cfg = o.config.empty() ? config::RunConfig{} : config::load_run_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    return cfg;
}

// --out, then config output_dir, then EDEN_OUTPUT_DIR.
fs::path output_dir(const Options& o, const config::RunConfig& cfg) {
    if (!o.out.empty()) return o.out;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (const char* env = std::getenv("EDEN_OUTPUT_DIR"); env && *env) return env;
    fail("config", "no output directory: pass --out, set output_dir in the config, or set EDEN_OUTPUT_DIR");
}

fs::path output_file(const std::string& flag, const char* default_name) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("EDEN_OUTPUT_DIR"); env && *env) return fs::path(env) / default_name;
    fail("config", "no output path: pass --out or set EDEN_OUTPUT_DIR");
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io", "cannot write " + path.string());
    out << j.dump(2) << '\n';
    require(static_cast<bool>(out), "io", "failed writing " + path.string());
}

// ----------------------------------------------------------------- data

std::vector<std::vector<Frame>> synthetic_sequences(const config::RunConfig& cfg) {
    std::vector<std::vector<Frame>> out;
    for (std::size_t s = 0; s < cfg.data.n_sequences; ++s) {
        data::SpriteSceneConfig scene = cfg.data.scene;
        scene.seed = derive_seed(cfg.seed, "data", s);
        out.push_back(data::synth_sequence(scene));
    }
    return out;
}

std::vector<std::vector<Frame>> load_sequences(const config::RunConfig& cfg) {
    if (cfg.data.frame_dirs.empty()) return synthetic_sequences(cfg);
    std::vector<std::vector<Frame>> out;
    for (const std::string& dir : cfg.data.frame_dirs) out.push_back(data::ingest_frame_dir(dir));
    return out;
}

// Every (sequence, k, start) triplet for the given intervals.
std::vector<data::TripletRecord> enumerate_triplets(const std::vector<std::vector<Frame>>& seqs,
                                                    const std::vector<std::size_t>& intervals) {
    std::vector<data::TripletRecord> out;
    for (std::size_t q = 0; q < seqs.size(); ++q)
        for (std::size_t k : intervals)
            for (std::size_t i = 0; i + 2 * k < seqs[q].size(); ++i)
                out.push_back(data::triplet_sample(seqs[q], i, k, "seq" + std::to_string(q)));
    return out;
}

std::vector<data::TripletRecord> listed_triplets(const std::string& list) {
    const fs::path path(list);
    return data::load_triplets(data::read_triplet_list(path), path.parent_path());
}

struct TrainingData {
    training::TripletProvider provider;
    std::vector<data::TripletRecord> stats_set;  // triplets used for dataset statistics
};

// Fixed-set mode (data.fixed_triplets > 0) takes a seeded selection of
// triplets and cycles through it; otherwise triplets are sampled per step.
TrainingData training_data(const config::RunConfig& cfg, const training::TrainConfig& train, std::size_t patch) {
    constexpr std::size_t kStatsCap = 256;
    std::vector<data::TripletRecord> pool;
    std::vector<std::vector<Frame>> seqs;
    if (!cfg.data.triplets.empty()) {
        pool = listed_triplets(cfg.data.triplets);
    } else {
        seqs = load_sequences(cfg);
        pool = enumerate_triplets(seqs, train.intervals);
    }
    require(!pool.empty(), "data", "no samples: the training set is empty");
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "triplet-order"));
    std::shuffle(pool.begin(), pool.end(), shuffle_rng);

    TrainingData out;
    if (cfg.data.fixed_triplets > 0) {
        require(cfg.data.fixed_triplets <= pool.size(), "config",
                "data.fixed_triplets: only " + std::to_string(pool.size()) + " triplets available");
        pool.resize(cfg.data.fixed_triplets);
        out.stats_set = pool;
        out.provider = training::fixed_triplets(pool, train.batch_size);
        return out;
    }
    out.stats_set.assign(pool.begin(), pool.begin() + std::min(pool.size(), kStatsCap));
    data::SamplerConfig sc;
    sc.intervals = train.intervals;
    sc.resolutions = train.resolutions;
    sc.seed = derive_seed(cfg.seed, "sampler", static_cast<std::uint64_t>(train.stage));
    if (!seqs.empty()) {
        auto sampler = std::make_shared<const data::TripletSampler>(std::move(seqs), sc, patch);
        out.provider = training::sampled_triplets(sampler, train.batch_size);
        return out;
    }
    // Triplet list: uniform record choice, per-batch crop size.
    auto records = std::make_shared<const std::vector<data::TripletRecord>>(std::move(pool));
    out.provider = [records, sc, patch](std::uint64_t step, std::size_t index) {
        Rng rng(derive_seed(sc.seed, "triplet", step, index));
        data::TripletRecord rec = (*records)[rng.index(records->size())];
        if (sc.resolutions.empty()) return rec;
        Rng batch_rng(derive_seed(sc.seed, "batch-shape", step));
        const data::Resolution r = sc.resolutions[batch_rng.index(sc.resolutions.size())];
        require(r.height <= rec.i0.height && r.width <= rec.i0.width, "config", "resolution does not fit the frames");
        const std::size_t oy = rng.index(rec.i0.height - r.height + 1), ox = rng.index(rec.i0.width - r.width + 1);
        return data::multi_res_crop(rec, r.height, r.width, oy, ox, patch);
    };
    return out;
}

// ------------------------------------------------------------- commands

int cmd_gen_data(const Options& o) {
    const config::RunConfig cfg = load_config(o);
    const fs::path out = output_dir(o, cfg);
    require(cfg.data.frame_dirs.empty() && cfg.data.triplets.empty(), "config",
            "gen-data builds the synthetic corpus; data.frame_dirs / data.triplets must be empty");
    const auto seqs = synthetic_sequences(cfg);
    std::vector<data::TripletRef> refs;
    std::vector<std::size_t> intervals;
    for (std::size_t k = 1; k <= cfg.data.scene.max_interval; ++k) intervals.push_back(k);
    for (std::size_t q = 0; q < seqs.size(); ++q) {
        char name[32];
        std::snprintf(name, sizeof name, "seq_%03zu", q);
        data::write_frame_dir(seqs[q], out / name);
        for (std::size_t k : intervals)
            for (std::size_t i = 0; i + 2 * k < seqs[q].size(); ++i) refs.push_back({name, i, i + k, i + 2 * k});
    }
    data::write_triplet_list(refs, out / "triplets.txt");
    const auto stats = data::compute_dataset_stats(enumerate_triplets(seqs, intervals));
    json sidecar = config::to_json(stats);
    sidecar["n_triplets"] = refs.size();
    write_json(sidecar, out / "stats.json");
    write_json(config::to_json(cfg), out / "config.json");
    std::cout << "wrote " << seqs.size() << " sequences and " << refs.size() << " triplets to " << out.string() << '\n';
    return 0;
}

struct TrainOptions {
    int stage = 1;
    bool resume = false;
    std::string init;  // stage-1 checkpoint for stage 2
    std::string tokenizer_ckpt;
    std::optional<std::size_t> steps, batch_size;
};

fs::path stage_ckpt(const fs::path& dir, const char* kind, int stage) {
    return dir / (std::string(kind) + "_stage" + std::to_string(stage) + ".ckpt");
}

training::TrainConfig stage_config(config::RunConfig& cfg, bool dit, const TrainOptions& t) {
    training::TrainConfig tc = cfg.train(dit, t.stage);
    tc.stage = t.stage;
    if (t.steps) tc.total_steps = *t.steps;
    if (t.batch_size) tc.batch_size = *t.batch_size;
    tc.validate();
    return tc;
}

void print_step(const char* what, const training::StepLog& s, std::size_t total) {
    if (s.step % 50 == 0 || s.step + 1 == total)
        std::cout << what << " step " << s.step << "/" << total << " lr " << s.lr << " loss " << s.loss.total << '\n';
}

int cmd_train_tokenizer(const Options& o, const TrainOptions& t) {
    config::RunConfig cfg = load_config(o);
    const fs::path out = output_dir(o, cfg);
    const training::TrainConfig tc = stage_config(cfg, false, t);
    const fs::path ckpt_path = stage_ckpt(out, "tokenizer", t.stage);
    const fs::path disc_path = stage_ckpt(out, "discriminator", t.stage);

    std::unique_ptr<training::TokenizerTrainer> trainer;
    if (t.resume) {
        require(fs::exists(ckpt_path), "ordering", "--resume: no checkpoint at " + ckpt_path.string());
        const auto ckpt = training::load_checkpoint(ckpt_path, "tokenizer");
        std::optional<training::Checkpoint> disc;
        if (fs::exists(disc_path)) disc = training::load_checkpoint(disc_path, "discriminator");
        trainer = std::make_unique<training::TokenizerTrainer>(ckpt, disc ? &*disc : nullptr, tc, cfg.seed);
    } else if (t.stage == 2) {
        const fs::path init = t.init.empty() ? stage_ckpt(out, "tokenizer", 1) : fs::path(t.init);
        require(fs::exists(init), "ordering",
                "stage 2 requires a stage-1 tokenizer checkpoint; none found at " + init.string());
        const auto ckpt = training::load_checkpoint(init, "tokenizer");
        require(ckpt.stage == 1, "ordering", init.string() + " is not a stage-1 checkpoint");
        const fs::path disc1 = stage_ckpt(init.parent_path(), "discriminator", 1);
        std::optional<training::Checkpoint> disc;
        if (fs::exists(disc1)) disc = training::load_checkpoint(disc1, "discriminator");
        trainer = std::make_unique<training::TokenizerTrainer>(ckpt, disc ? &*disc : nullptr, tc, cfg.seed);
    } else {
        trainer = std::make_unique<training::TokenizerTrainer>(cfg.tokenizer, cfg.discriminator, tc, cfg.seed);
    }

    const TrainingData td = training_data(cfg, tc, trainer->model().config().patch_size);
    if (!t.resume && t.stage == 1) trainer->stats() = data::compute_dataset_stats(td.stats_set);

    training::LossLog log(out / ("tokenizer_stage" + std::to_string(t.stage) + "_loss.csv"), t.resume);
    training::TrainHooks hooks;
    hooks.on_step = [&](const training::StepLog& s) {
        log.write(s);
        print_step("tokenizer", s, tc.total_steps);
    };
    hooks.on_checkpoint = [&](std::uint64_t) {
        training::save_checkpoint(trainer->checkpoint(), ckpt_path);
        training::save_checkpoint(trainer->disc_checkpoint(), disc_path);
    };
    trainer->run(td.provider, hooks);
    if (trainer->current_step() == tc.total_steps && !fs::exists(ckpt_path)) hooks.on_checkpoint(trainer->current_step());
    std::cout << "tokenizer checkpoint: " << ckpt_path.string() << '\n';
    return 0;
}

fs::path default_tokenizer_ckpt(const fs::path& dir) {
    const fs::path s2 = stage_ckpt(dir, "tokenizer", 2);
    return fs::exists(s2) ? s2 : stage_ckpt(dir, "tokenizer", 1);
}

int cmd_train_dit(const Options& o, const TrainOptions& t) {
    config::RunConfig cfg = load_config(o);
    const fs::path out = output_dir(o, cfg);
    const training::TrainConfig tc = stage_config(cfg, true, t);
    const fs::path tok_path = t.tokenizer_ckpt.empty() ? default_tokenizer_ckpt(out) : fs::path(t.tokenizer_ckpt);
    require(fs::exists(tok_path), "ordering", "train-dit requires a tokenizer checkpoint; none found at " + tok_path.string());
    const auto tok_ckpt = training::load_checkpoint(tok_path, "tokenizer");
    std::shared_ptr<const tokenizer::Tokenizer<float>> tok = training::load_tokenizer(tok_ckpt);
    const fs::path ckpt_path = stage_ckpt(out, "dit", t.stage);

    const TrainingData td = training_data(cfg, tc, tok->config().patch_size);
    std::unique_ptr<training::DiTTrainer> trainer;
    if (t.resume) {
        require(fs::exists(ckpt_path), "ordering", "--resume: no checkpoint at " + ckpt_path.string());
        trainer = std::make_unique<training::DiTTrainer>(tok, training::load_checkpoint(ckpt_path, "dit"), tc, cfg.seed);
    } else if (t.stage == 2) {
        const fs::path init = t.init.empty() ? stage_ckpt(out, "dit", 1) : fs::path(t.init);
        require(fs::exists(init), "ordering", "stage 2 requires a stage-1 dit checkpoint; none found at " + init.string());
        trainer = std::make_unique<training::DiTTrainer>(tok, training::load_checkpoint(init, "dit"), tc, cfg.seed);
    } else {
        diffusion::DatasetStats stats = tok_ckpt.stats;
        stats.latent_std = training::latent_std(*tok, td.stats_set);
        trainer = std::make_unique<training::DiTTrainer>(tok, cfg.dit, stats, tc, cfg.seed);
    }

    training::LossLog log(out / ("dit_stage" + std::to_string(t.stage) + "_loss.csv"), t.resume);
    training::TrainHooks hooks;
    hooks.on_step = [&](const training::StepLog& s) {
        log.write(s);
        print_step("dit", s, tc.total_steps);
    };
    hooks.on_checkpoint = [&](std::uint64_t) { training::save_checkpoint(trainer->checkpoint(), ckpt_path); };
    trainer->run(td.provider, hooks);
    if (trainer->current_step() == tc.total_steps && !fs::exists(ckpt_path)) hooks.on_checkpoint(trainer->current_step());
    std::cout << "dit checkpoint: " << ckpt_path.string() << '\n';
    return 0;
}

struct ModelPaths {
    std::string tokenizer, dit, dir;
};

struct LoadedModels {
    std::unique_ptr<tokenizer::Tokenizer<float>> tok;
    std::unique_ptr<diffusion::DiffusionTransformer<float>> dit;
    diffusion::DatasetStats stats;

    evaluation::Models view() const { return {tok.get(), dit.get(), stats}; }
};

LoadedModels load_models(const ModelPaths& p) {
    fs::path tok = p.tokenizer, dit = p.dit;
    if (tok.empty() && !p.dir.empty()) tok = default_tokenizer_ckpt(p.dir);
    if (dit.empty() && !p.dir.empty()) {
        dit = stage_ckpt(p.dir, "dit", 2);
        if (!fs::exists(dit)) dit = stage_ckpt(p.dir, "dit", 1);
    }
    require(!tok.empty() && !dit.empty(), "config", "pass --tokenizer-ckpt and --dit-ckpt (or --ckpts DIR)");
    LoadedModels m;
    m.tok = training::load_tokenizer(training::load_checkpoint(tok, "tokenizer"));
    const auto dit_ckpt = training::load_checkpoint(dit, "dit");
    m.dit = training::load_dit(dit_ckpt);
    m.stats = dit_ckpt.stats;
    diffusion::check_compatible(m.tok->config(), m.dit->config());
    return m;
}

int cmd_interpolate(const ModelPaths& paths, const std::string& i0, const std::string& i1, int steps,
                    std::uint64_t seed, const std::string& out_flag) {
    const LoadedModels m = load_models(paths);
    const Frame f0 = read_png(i0), f1 = read_png(i1);
    const Frame out = diffusion::interpolate_frame(*m.tok, *m.dit, f0, f1, steps, seed, m.stats);
    const fs::path out_path = output_file(out_flag, "interpolated.png");
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_png(out, out_path);
    std::cout << "wrote " << out_path.string() << '\n';
    return 0;
}

std::vector<evaluation::EvalSample> eval_samples(const config::RunConfig& cfg, const std::string& triplets_flag) {
    const std::string list = triplets_flag.empty() ? cfg.data.triplets : triplets_flag;
    std::vector<data::TripletRecord> recs;
    if (!list.empty()) {
        recs = listed_triplets(list);
    } else {
        recs = enumerate_triplets(load_sequences(cfg), {1});
    }
    require(!recs.empty(), "data", "no samples: the evaluation triplet list is empty");
    if (cfg.eval.max_samples > 0 && recs.size() > cfg.eval.max_samples) recs.resize(cfg.eval.max_samples);
    std::vector<evaluation::EvalSample> out;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        std::string id = recs[i].source.empty() ? "sample" + std::to_string(i)
                                                : recs[i].source + "@" + std::to_string(recs[i].start);
        std::replace(id.begin(), id.end(), ',', '_');
        out.push_back({id, std::move(recs[i])});
    }
    return out;
}

void report(const evaluation::MetricReport& r, const fs::path& path) {
    r.write_csv(path);
    for (const auto& row : r.aggregates())
        std::cout << "steps " << row.steps << " interval " << row.interval << ": psnr " << row.psnr << " ssim "
                  << row.ssim << " runtime " << row.runtime_s << " s\n";
    std::cout << "wrote " << path.string() << '\n';
}

std::vector<int> parse_int_list(const std::string& s, const char* flag) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(cell, &used));
            require(used == cell.size(), "usage", "");
        } catch (const std::exception&) {
            fail("usage", std::string(flag) + ": expected a comma-separated list of integers, got '" + s + "'");
        }
    }
    require(!out.empty(), "usage", std::string(flag) + ": empty list");
    return out;
}

}  // namespace

int run(const std::vector<std::string>& args_in) {
    CLI::App app{"Latent diffusion video frame interpolation: data, training, inference and evaluation"};
    app.name("eden");
    app.require_subcommand(1);
    Options opt;
    TrainOptions train;
    ModelPaths paths;
    std::string i0, i1, out_file, triplets, steps_list, intervals_list;
    int steps = 2;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> seed_flag;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON run config");
        sub->add_option("--out", opt.out, "Output directory (default: config output_dir or $EDEN_OUTPUT_DIR)");
        sub->add_option("--seed", seed_flag, "Root seed (overrides the config)");
    };
    auto add_ckpts = [&](CLI::App* sub) {
        sub->add_option("--tokenizer-ckpt", paths.tokenizer, "Tokenizer checkpoint");
        sub->add_option("--dit-ckpt", paths.dit, "DiT checkpoint");
        sub->add_option("--ckpts", paths.dir, "Directory holding tokenizer_stage*.ckpt and dit_stage*.ckpt");
    };
    auto add_train = [&](CLI::App* sub) {
        sub->add_option("--stage", train.stage, "Training stage (1 or 2)")->check(CLI::Range(1, 2));
        sub->add_flag("--resume", train.resume, "Continue from this stage's checkpoint in the output directory");
        sub->add_option("--init", train.init, "Stage-1 checkpoint to start stage 2 from");
        sub->add_option("--steps", train.steps, "Total steps (overrides the config)");
        sub->add_option("--batch-size", train.batch_size, "Batch size (overrides the config)");
    };

    auto* gen = app.add_subcommand("gen-data", "Render the synthetic corpus, triplet list and stats sidecar");
    add_common(gen);
    auto* ttok = app.add_subcommand("train-tokenizer", "Train the tokenizer");
    add_common(ttok);
    add_train(ttok);
    auto* tdit = app.add_subcommand("train-dit", "Train the diffusion transformer on a frozen tokenizer");
    add_common(tdit);
    add_train(tdit);
    tdit->add_option("--tokenizer-ckpt", train.tokenizer_ckpt, "Tokenizer checkpoint (default: newest in --out)");

    auto* interp = app.add_subcommand("interpolate", "Interpolate the middle frame between two PNGs");
    add_ckpts(interp);
    interp->add_option("--i0", i0, "Start frame PNG")->required();
    interp->add_option("--i1", i1, "End frame PNG")->required();
    interp->add_option("--steps", steps, "Denoising steps")->capture_default_str();
    interp->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    interp->add_option("--out", out_file, "Output PNG (default: $EDEN_OUTPUT_DIR/interpolated.png)");

    auto* eval = app.add_subcommand("eval", "PSNR/SSIM report for a triplet list");
    auto* sweep_steps = app.add_subcommand("sweep-steps", "Metrics across denoising step counts");
    auto* sweep_int = app.add_subcommand("sweep-intervals", "Metrics across frame intervals");
    for (auto* sub : {eval, sweep_steps, sweep_int}) {
        sub->add_option("--config", opt.config, "JSON run config");
        sub->add_option("--seed", seed_flag, "Sampling seed (overrides the config seed)");
        sub->add_option("--out", out_file, "Output CSV (default: $EDEN_OUTPUT_DIR/<command>.csv)");
        add_ckpts(sub);
    }
    eval->add_option("--triplets", triplets, "Triplet list file (default: data.triplets)");
    eval->add_option("--steps", steps, "Denoising steps")->capture_default_str();
    sweep_steps->add_option("--triplets", triplets, "Triplet list file (default: data.triplets)");
    sweep_steps->add_option("--steps-list", steps_list, "Comma-separated step counts (default: eval.steps)");
    sweep_int->add_option("--intervals", intervals_list, "Comma-separated intervals (default: eval.intervals)");
    sweep_int->add_option("--steps", steps, "Denoising steps")->capture_default_str();

    std::vector<std::string> args(args_in.begin() + (args_in.empty() ? 0 : 1), args_in.end());
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error[usage]: " << e.what() << '\n';
        return 2;
    }

    try {
        opt.seed = seed_flag;
        if (gen->parsed()) return cmd_gen_data(opt);
        if (ttok->parsed()) return cmd_train_tokenizer(opt, train);
        if (tdit->parsed()) return cmd_train_dit(opt, train);
        if (interp->parsed()) return cmd_interpolate(paths, i0, i1, steps, seed, out_file);

        const config::RunConfig cfg = load_config(opt);
        const LoadedModels models = load_models(paths);
        const std::uint64_t eval_seed = cfg.seed;
        if (eval->parsed()) {
            const auto samples = eval_samples(cfg, triplets);
            report(evaluation::sweep_denoising_steps(models.view(), samples, {steps}, eval_seed),
                   output_file(out_file, "eval.csv"));
        } else if (sweep_steps->parsed()) {
            const auto samples = eval_samples(cfg, triplets);
            const std::vector<int> list = steps_list.empty() ? cfg.eval.steps : parse_int_list(steps_list, "--steps-list");
            report(evaluation::sweep_denoising_steps(models.view(), samples, list, eval_seed),
                   output_file(out_file, "sweep_steps.csv"));
        } else if (sweep_int->parsed()) {
            std::vector<std::size_t> list = cfg.eval.intervals;
            if (!intervals_list.empty()) {
                list.clear();
                for (int k : parse_int_list(intervals_list, "--intervals")) {
                    require(k >= 1, "usage", "--intervals: values must be at least 1");
                    list.push_back(static_cast<std::size_t>(k));
                }
            }
            report(evaluation::sweep_intervals(models.view(), load_sequences(cfg), list, steps, eval_seed),
                   output_file(out_file, "sweep_intervals.csv"));
        }
        return 0;
    } catch (const Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "error[" << e.category() << "]: " << msg << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "error[internal]: " << msg << '\n';
        return 1;
    }
}

}  // namespace eden::cli
