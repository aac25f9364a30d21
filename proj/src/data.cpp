#include "eden/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include "eden/core/rng.hpp"

namespace eden::data {

namespace fs = std::filesystem;

Shape parse_shape(const std::string& s) {
    if (s == "disc") return Shape::Disc;
    if (s == "rectangle") return Shape::Rectangle;
    if (s == "triangle") return Shape::Triangle;
    fail("config", "unknown shape '" + s + "' (expected disc, rectangle or triangle)");
}

Trajectory parse_trajectory(const std::string& s) {
    if (s == "linear") return Trajectory::Linear;
    if (s == "sinusoidal") return Trajectory::Sinusoidal;
    fail("config", "unknown trajectory '" + s + "' (expected linear or sinusoidal)");
}

std::string to_string(Shape s) {
    switch (s) {
        case Shape::Disc: return "disc";
        case Shape::Rectangle: return "rectangle";
        case Shape::Triangle: return "triangle";
    }
    return "?";
}

std::string to_string(Trajectory t) { return t == Trajectory::Linear ? "linear" : "sinusoidal"; }

void SpriteSceneConfig::validate() const {
    require(height >= 1 && width >= 1, "config", "height and width must be positive");
    require(max_interval >= 1, "config", "max_interval must be at least 1");
    require(length >= 2 * max_interval + 1, "config",
            "length = " + std::to_string(length) + " is shorter than 2 * max_interval + 1 = " +
                std::to_string(2 * max_interval + 1));
    if (!sprites.empty()) {
        for (const Sprite& s : sprites)
            require(s.size > 0.0 && 2.0 * s.size < std::min(height, width), "config",
                    "sprites: sprite size must be positive and fit the canvas");
        return;
    }
    require(n_sprites >= 1, "config", "n_sprites must be at least 1");
    require(!shapes.empty(), "config", "shapes must not be empty");
    require(min_speed >= 0.0 && max_speed >= min_speed, "config", "min_speed/max_speed must satisfy 0 <= min <= max");
    require(min_size > 0.0 && max_size >= min_size, "config", "min_size/max_size must satisfy 0 < min <= max");
    require(2.0 * max_size < std::min(height, width), "config", "max_size does not fit the canvas");
}

std::vector<Sprite> scene_sprites(const SpriteSceneConfig& cfg) {
    cfg.validate();
    if (!cfg.sprites.empty()) return cfg.sprites;
    Rng rng(derive_seed(cfg.seed, "sprites"));
    std::vector<Sprite> out;
    for (std::size_t i = 0; i < cfg.n_sprites; ++i) {
        Sprite s;
        s.shape = cfg.shapes[rng.index(cfg.shapes.size())];
        s.size = rng.uniform(cfg.min_size, cfg.max_size);
        s.cx = rng.uniform(s.size, cfg.width - s.size);
        s.cy = rng.uniform(s.size, cfg.height - s.size);
        const double speed = rng.uniform(cfg.min_speed, cfg.max_speed);
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        s.vx = speed * std::cos(angle);
        s.vy = speed * std::sin(angle);
        s.amplitude = rng.uniform(1.0, 4.0);
        s.omega = rng.uniform(0.3, 1.0);
        s.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (float& c : s.color) c = static_cast<float>(rng.uniform(0.25, 1.0));
        out.push_back(s);
    }
    return out;
}

namespace {

// Reflect x into [lo, hi] (a triangle wave with period 2 (hi - lo)).
double fold(double x, double lo, double hi) {
    const double len = hi - lo;
    if (len <= 0.0) return lo;
    if (x >= lo && x <= hi) return x;
    double u = std::fmod(x - lo, 2.0 * len);
    if (u < 0.0) u += 2.0 * len;
    if (u > len) u = 2.0 * len - u;
    return lo + u;
}

double sdf(const Sprite& s, double px, double py, double cx, double cy) {
    const double dx = px - cx, dy = py - cy;
    switch (s.shape) {
        case Shape::Disc: return std::hypot(dx, dy) - s.size;
        case Shape::Rectangle: {
            const double qx = std::abs(dx) - s.size, qy = std::abs(dy) - 0.7 * s.size;
            return std::hypot(std::max(qx, 0.0), std::max(qy, 0.0)) + std::min(std::max(qx, qy), 0.0);
        }
        case Shape::Triangle: {
            // Equilateral triangle, half side r (exact distance).
            const double k = std::sqrt(3.0), r = s.size * 0.8;
            double x = std::abs(dx) - r, y = -dy + r / k;
            if (x + k * y > 0.0) {
                const double nx = (x - k * y) / 2.0, ny = (-k * x - y) / 2.0;
                x = nx;
                y = ny;
            }
            x -= std::clamp(x, -2.0 * r, 0.0);
            return -std::hypot(x, y) * (y > 0.0 ? 1.0 : (y < 0.0 ? -1.0 : 0.0));
        }
    }
    return 1e9;
}

}  // namespace

std::array<double, 2> sprite_center(const Sprite& s, const SpriteSceneConfig& cfg, double t) {
    double x = s.cx + s.vx * t, y = s.cy + s.vy * t;
    if (cfg.trajectory == Trajectory::Sinusoidal && s.amplitude != 0.0) {
        const double speed = std::hypot(s.vx, s.vy);
        const double px = speed > 0.0 ? -s.vy / speed : 0.0, py = speed > 0.0 ? s.vx / speed : 1.0;
        const double off = s.amplitude * (std::sin(s.omega * t + s.phase) - std::sin(s.phase));
        x += off * px;
        y += off * py;
    }
    return {fold(x, s.size, cfg.width - s.size), fold(y, s.size, cfg.height - s.size)};
}

Frame render_frame(const SpriteSceneConfig& cfg, const std::vector<Sprite>& sprites, double t) {
    Frame f(cfg.height, cfg.width);
    // Background: a fixed dim gradient, never all-zero.
    for (std::size_t y = 0; y < cfg.height; ++y)
        for (std::size_t x = 0; x < cfg.width; ++x) {
            const float gx = static_cast<float>(x) / static_cast<float>(cfg.width);
            const float gy = static_cast<float>(y) / static_cast<float>(cfg.height);
            f.at(y, x, 0) = 0.10f + 0.15f * gx;
            f.at(y, x, 1) = 0.10f + 0.15f * gy;
            f.at(y, x, 2) = 0.20f;
        }
    for (const Sprite& s : sprites) {
        const auto [cx, cy] = sprite_center(s, cfg, t);
        const double reach = s.size * 1.5 + 1.0;
        const std::size_t y0 = static_cast<std::size_t>(std::max(0.0, std::floor(cy - reach)));
        const std::size_t y1 = static_cast<std::size_t>(std::min<double>(cfg.height, std::ceil(cy + reach)));
        const std::size_t x0 = static_cast<std::size_t>(std::max(0.0, std::floor(cx - reach)));
        const std::size_t x1 = static_cast<std::size_t>(std::min<double>(cfg.width, std::ceil(cx + reach)));
        for (std::size_t y = y0; y < y1; ++y)
            for (std::size_t x = x0; x < x1; ++x) {
                const double cov = std::clamp(0.5 - sdf(s, x + 0.5, y + 0.5, cx, cy), 0.0, 1.0);
                if (cov <= 0.0) continue;
                const float a = static_cast<float>(cov);
                for (std::size_t c = 0; c < 3; ++c) f.at(y, x, c) = f.at(y, x, c) * (1.0f - a) + s.color[c] * a;
            }
    }
    return f;
}

std::vector<Frame> synth_sequence(const SpriteSceneConfig& cfg) {
    const std::vector<Sprite> sprites = scene_sprites(cfg);
    std::vector<Frame> out;
    out.reserve(cfg.length);
    for (std::size_t t = 0; t < cfg.length; ++t) out.push_back(render_frame(cfg, sprites, static_cast<double>(t)));
    return out;
}

TripletRecord triplet_sample(const std::vector<Frame>& sequence, std::size_t i, std::size_t k,
                             const std::string& source) {
    require(k >= 1, "range", "frame interval must be at least 1");
    require(i + 2 * k < sequence.size(), "range",
            "triplet (" + std::to_string(i) + ", " + std::to_string(i + k) + ", " + std::to_string(i + 2 * k) +
                ") is out of range for a sequence of " + std::to_string(sequence.size()) + " frames");
    TripletRecord r{sequence[i], sequence[i + k], sequence[i + 2 * k], k, i, source, 0, 0};
    require_same_size(r.i0, r.it, "triplet");
    require_same_size(r.i0, r.i1, "triplet");
    return r;
}

Frame crop_frame(const Frame& f, std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
    require(h >= 1 && w >= 1 && y + h <= f.height && x + w <= f.width, "range",
            "crop " + std::to_string(h) + "x" + std::to_string(w) + " at (" + std::to_string(y) + ", " +
                std::to_string(x) + ") exceeds the " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                " frame");
    Frame out(h, w);
    for (std::size_t r = 0; r < h; ++r)
        std::copy_n(f.pixels.begin() + ((y + r) * f.width + x) * 3, w * 3, out.pixels.begin() + r * w * 3);
    return out;
}

TripletRecord multi_res_crop(const TripletRecord& rec, std::size_t target_h, std::size_t target_w, std::size_t origin_y,
                             std::size_t origin_x, std::size_t patch_size) {
    const std::size_t block = 2 * patch_size;
    require(block > 0 && target_h % block == 0 && target_w % block == 0, "shape",
            "crop " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                " is not divisible by 2*patch_size = " + std::to_string(block));
    TripletRecord out = rec;
    out.i0 = crop_frame(rec.i0, origin_y, origin_x, target_h, target_w);
    out.it = crop_frame(rec.it, origin_y, origin_x, target_h, target_w);
    out.i1 = crop_frame(rec.i1, origin_y, origin_x, target_h, target_w);
    out.origin_y = rec.origin_y + origin_y;
    out.origin_x = rec.origin_x + origin_x;
    return out;
}

fs::path frame_path(const fs::path& dir, std::size_t index) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06zu.png", index);
    return dir / name;
}

std::vector<Frame> ingest_frame_dir(const fs::path& dir) {
    require(fs::is_directory(dir), "io", "frame directory " + dir.string() + " does not exist");
    static const std::regex pattern(R"(frame_(\d{6})\.png)");
    std::vector<std::size_t> indices;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) indices.push_back(std::stoul(m[1].str()));
    }
    require(!indices.empty(), "data", "no frames found in " + dir.string());
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i)
        require(indices[i] == i, "data",
                "frame sequence in " + dir.string() + " is not contiguous: missing " +
                    frame_path({}, i).filename().string());
    std::vector<Frame> frames;
    frames.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        frames.push_back(read_png(frame_path(dir, i)));
        require(frames.back().same_size(frames.front()), "data",
                "inconsistent resolution in " + frame_path(dir, i).string());
    }
    return frames;
}

void write_frame_dir(const std::vector<Frame>& frames, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, "io", "cannot create directory " + dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < frames.size(); ++i) write_png(frames[i], frame_path(dir, i));
}

std::vector<TripletRef> read_triplet_list(const fs::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "io", "cannot read triplet list " + path.string());
    std::vector<TripletRef> out;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        TripletRef r;
        long long s = -1, m = -1, e = -1;
        std::string extra;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        require(static_cast<bool>(ss >> r.dir >> s >> m >> e) && !(ss >> extra), "data",
                where + ": expected 'dir_path start_idx mid_idx end_idx'");
        require(s >= 0 && m > s && e > m && m - s == e - m, "data",
                where + ": indices must satisfy start < mid < end with mid - start = end - mid");
        r.start = static_cast<std::size_t>(s);
        r.mid = static_cast<std::size_t>(m);
        r.end = static_cast<std::size_t>(e);
        out.push_back(r);
    }
    return out;
}

void write_triplet_list(const std::vector<TripletRef>& refs, const fs::path& path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "io", "cannot write triplet list " + path.string());
    for (const TripletRef& r : refs) out << r.dir << ' ' << r.start << ' ' << r.mid << ' ' << r.end << '\n';
    require(static_cast<bool>(out), "io", "failed writing " + path.string());
}

std::vector<TripletRecord> load_triplets(const std::vector<TripletRef>& refs, const fs::path& base) {
    std::map<std::string, std::vector<Frame>> cache;
    std::vector<TripletRecord> out;
    for (const TripletRef& r : refs) {
        fs::path dir = r.dir;
        if (dir.is_relative() && !base.empty()) dir = base / dir;
        auto it = cache.find(dir.string());
        if (it == cache.end()) it = cache.emplace(dir.string(), ingest_frame_dir(dir)).first;
        out.push_back(triplet_sample(it->second, r.start, r.mid - r.start, r.dir));
    }
    return out;
}

diffusion::DatasetStats compute_dataset_stats(const std::vector<TripletRecord>& triplets) {
    require(!triplets.empty(), "data", "no samples: dataset statistics need at least one triplet");
    std::vector<double> sims;
    sims.reserve(triplets.size());
    for (const TripletRecord& r : triplets) sims.push_back(diffusion::cosine_similarity(r.i0, r.i1));
    double mean = 0.0;
    for (double s : sims) mean += s;
    mean /= static_cast<double>(sims.size());
    double var = 0.0;
    for (double s : sims) var += (s - mean) * (s - mean);
    var /= static_cast<double>(sims.size());
    diffusion::DatasetStats stats;
    stats.sim_mean = mean;
    stats.sim_std = std::max(std::sqrt(var), diffusion::kMinSimStd);
    return stats;
}

TripletSampler::TripletSampler(std::vector<std::vector<Frame>> sequences, SamplerConfig cfg, std::size_t patch_size)
    : sequences_(std::move(sequences)), cfg_(std::move(cfg)), patch_(patch_size) {
    require(!sequences_.empty(), "data", "no samples: the sampler needs at least one sequence");
    require(!cfg_.intervals.empty(), "config", "interval set must not be empty");
    std::size_t shortest = sequences_.front().size();
    for (const auto& seq : sequences_) {
        require(!seq.empty(), "data", "empty frame sequence");
        require(seq.front().same_size(sequences_.front().front()), "data", "sequences differ in resolution");
        shortest = std::min(shortest, seq.size());
    }
    for (std::size_t k : cfg_.intervals) {
        require(k >= 1, "config", "intervals must be at least 1");
        require(2 * k < shortest, "data",
                "sequence too short: interval " + std::to_string(k) + " needs " + std::to_string(2 * k + 1) +
                    " frames, shortest sequence has " + std::to_string(shortest));
    }
    const Frame& f = sequences_.front().front();
    for (const Resolution& r : cfg_.resolutions) {
        require(r.height > 0 && r.width > 0 && r.height % (2 * patch_) == 0 && r.width % (2 * patch_) == 0, "config",
                "resolution " + std::to_string(r.height) + "x" + std::to_string(r.width) +
                    " is not divisible by 2*patch_size");
        require(r.height <= f.height && r.width <= f.width, "config",
                "resolution " + std::to_string(r.height) + "x" + std::to_string(r.width) +
                    " does not fit the " + std::to_string(f.height) + "x" + std::to_string(f.width) + " frames");
    }
}

BatchShape TripletSampler::batch_shape(std::uint64_t epoch) const {
    Rng rng(derive_seed(cfg_.seed, "batch-shape", epoch));
    BatchShape shape;
    shape.interval = cfg_.intervals[rng.index(cfg_.intervals.size())];
    if (!cfg_.resolutions.empty()) shape.resolution = cfg_.resolutions[rng.index(cfg_.resolutions.size())];
    return shape;
}

TripletRecord TripletSampler::sample(std::uint64_t epoch, std::uint64_t index) const {
    const BatchShape shape = batch_shape(epoch);
    Rng rng(derive_seed(cfg_.seed, "triplet", epoch, index));
    const std::size_t seq_id = rng.index(sequences_.size());
    const std::vector<Frame>& seq = sequences_[seq_id];
    const std::size_t k = shape.interval;
    const std::size_t i = rng.index(seq.size() - 2 * k);
    TripletRecord rec = triplet_sample(seq, i, k, "seq" + std::to_string(seq_id));
    if (!shape.resolution) return rec;
    const Resolution res = *shape.resolution;
    const std::size_t oy = rng.index(rec.i0.height - res.height + 1);
    const std::size_t ox = rng.index(rec.i0.width - res.width + 1);
    return multi_res_crop(rec, res.height, res.width, oy, ox, patch_);
}

}  // namespace eden::data
