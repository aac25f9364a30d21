#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eden/diffusion.hpp"
#include "eden/frame.hpp"

namespace eden::data {

enum class Shape { Disc, Rectangle, Triangle };
enum class Trajectory { Linear, Sinusoidal };

Shape parse_shape(const std::string& s);
Trajectory parse_trajectory(const std::string& s);
std::string to_string(Shape s);
std::string to_string(Trajectory t);

// Sprite state at frame 0. Positions are pixel coordinates of the center,
// with pixel (x, y) covering [x, x+1) x [y, y+1).
struct Sprite {
    Shape shape = Shape::Disc;
    double cx = 0.0, cy = 0.0;
    double size = 4.0;  // radius / half extent
    double vx = 0.0, vy = 0.0;
    double amplitude = 0.0;  // sinusoidal displacement, perpendicular to velocity
    double omega = 0.0;      // radians per frame
    double phase = 0.0;
    std::array<float, 3> color{1.0f, 1.0f, 1.0f};
};

struct SpriteSceneConfig {
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t n_sprites = 3;
    std::vector<Shape> shapes{Shape::Disc, Shape::Rectangle, Shape::Triangle};
    double min_speed = 0.5;  // pixels per frame
    double max_speed = 2.0;
    double min_size = 4.0;
    double max_size = 10.0;
    Trajectory trajectory = Trajectory::Linear;
    std::size_t length = 11;  // T
    std::size_t max_interval = 5;
    std::uint64_t seed = 0;
    // When non-empty these sprites are rendered as given and the random
    // sprite fields above are ignored.
    std::vector<Sprite> sprites;

    void validate() const;
};

// Sprites drawn from the config (or the explicit list), before any motion.
std::vector<Sprite> scene_sprites(const SpriteSceneConfig& cfg);
// Center of a sprite at frame `t`, folded back into the canvas so it never
// leaves the renderable area.
std::array<double, 2> sprite_center(const Sprite& s, const SpriteSceneConfig& cfg, double t);
Frame render_frame(const SpriteSceneConfig& cfg, const std::vector<Sprite>& sprites, double t);
std::vector<Frame> synth_sequence(const SpriteSceneConfig& cfg);

struct TripletRecord {
    Frame i0, it, i1;
    std::size_t interval = 1;
    std::size_t start = 0;
    std::string source;
    std::size_t origin_y = 0, origin_x = 0;
};

TripletRecord triplet_sample(const std::vector<Frame>& sequence, std::size_t i, std::size_t k,
                             const std::string& source = {});
Frame crop_frame(const Frame& f, std::size_t y, std::size_t x, std::size_t h, std::size_t w);
TripletRecord multi_res_crop(const TripletRecord& rec, std::size_t target_h, std::size_t target_w, std::size_t origin_y,
                             std::size_t origin_x, std::size_t patch_size);

std::filesystem::path frame_path(const std::filesystem::path& dir, std::size_t index);
std::vector<Frame> ingest_frame_dir(const std::filesystem::path& dir);
void write_frame_dir(const std::vector<Frame>& frames, const std::filesystem::path& dir);

// One line of a triplet list file: "dir_path start_idx mid_idx end_idx".
struct TripletRef {
    std::string dir;
    std::size_t start = 0, mid = 0, end = 0;
};
std::vector<TripletRef> read_triplet_list(const std::filesystem::path& path);
void write_triplet_list(const std::vector<TripletRef>& refs, const std::filesystem::path& path);
// Relative directories resolve against `base`.
std::vector<TripletRecord> load_triplets(const std::vector<TripletRef>& refs, const std::filesystem::path& base = {});

// sim_mean / sim_std over (I0, I1); latent_std left at 1.
diffusion::DatasetStats compute_dataset_stats(const std::vector<TripletRecord>& triplets);

struct Resolution {
    std::size_t height = 0, width = 0;
};

struct SamplerConfig {
    std::vector<std::size_t> intervals{1, 2, 3, 4, 5};
    std::vector<Resolution> resolutions;  // empty: full frames
    std::uint64_t seed = 0;
};

// Interval and crop size shared by every triplet of one batch.
struct BatchShape {
    std::size_t interval = 1;
    std::optional<Resolution> resolution;  // none: full frames
};

// Random triplets. Per batch (epoch) the interval and resolution are drawn
// uniformly from the configured sets; per sample the sequence, start frame and
// crop origin. Both are pure functions of (seed, epoch, index).
class TripletSampler {
public:
    TripletSampler(std::vector<std::vector<Frame>> sequences, SamplerConfig cfg, std::size_t patch_size);

    BatchShape batch_shape(std::uint64_t epoch) const;
    TripletRecord sample(std::uint64_t epoch, std::uint64_t index) const;
    const SamplerConfig& config() const { return cfg_; }

private:
    std::vector<std::vector<Frame>> sequences_;
    SamplerConfig cfg_;
    std::size_t patch_;
};

}  // namespace eden::data
