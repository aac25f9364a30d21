#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eden/data.hpp"
#include "eden/diffusion.hpp"
#include "eden/frame.hpp"
#include "eden/losses.hpp"
#include "eden/tokenizer.hpp"

namespace eden::evaluation {

inline constexpr double kPsnrCap = 99.0;
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// 10 log10(1 / MSE) on [0, 1] pixels; zero error reports kPsnrCap.
double psnr(const Frame& pred, const Frame& target);
// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5) over valid
// positions, C1 = 0.01^2, C2 = 0.03^2, averaged over channels.
double ssim(const Frame& pred, const Frame& target);
// Feature-space distance (same contract as the perceptual loss). No extractor: nullopt.
std::optional<double> perceptual_metric(const Frame& pred, const Frame& target,
                                        const losses::FeatureExtractor<double>* extractor);

struct MetricRow {
    std::string sample_id;
    int steps = 0;
    std::size_t interval = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    std::optional<double> perceptual;
    double runtime_s = 0.0;

    friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

// Per-sample rows plus "MEAN" rows, one per (steps, interval) pair, holding the
// arithmetic means.
struct MetricReport {
    std::vector<MetricRow> rows;

    std::vector<MetricRow> aggregates() const;
    // Rows followed by aggregates; all values printed with 17 significant digits.
    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;
    // Per-sample rows and MEAN rows as they appear in the text.
    static std::vector<MetricRow> parse_csv(const std::string& text);
};

inline constexpr const char* kCsvHeader = "sample_id,steps,interval,psnr,ssim,perceptual,runtime_s";

struct EvalSample {
    std::string id;
    data::TripletRecord triplet;
};

struct Models {
    const tokenizer::Tokenizer<float>* tokenizer = nullptr;
    const diffusion::DiffusionTransformer<float>* dit = nullptr;
    diffusion::DatasetStats stats;
};

// Interpolates every sample at each step count with a fixed seed.
MetricReport sweep_denoising_steps(const Models& models, const std::vector<EvalSample>& samples,
                                   const std::vector<int>& steps, std::uint64_t seed,
                                   const losses::FeatureExtractor<double>* extractor = nullptr);

// For each sequence and interval k, interpolates the triplet centred on the
// middle frame (c - k, c, c + k).
MetricReport sweep_intervals(const Models& models, const std::vector<std::vector<Frame>>& sequences,
                             const std::vector<std::size_t>& intervals, int steps, std::uint64_t seed,
                             const losses::FeatureExtractor<double>* extractor = nullptr);

inline const std::vector<int> kDefaultStepSweep{0, 1, 2, 5, 20, 50};
inline const std::vector<std::size_t> kDefaultIntervalSweep{1, 2, 4};

}  // namespace eden::evaluation
