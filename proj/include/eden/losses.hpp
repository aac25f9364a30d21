#pragma once

#include <vector>

#include "eden/core/graph.hpp"
#include "eden/frame.hpp"
#include "eden/nn.hpp"
#include "eden/tokenizer.hpp"

namespace eden::losses {

struct LossWeights {
    double l1 = 1.0;
    double perceptual = 1.0;
    double adversarial = 0.5;
    double kl = 1.0e-6;

    void validate() const;
};

// Maps an image (height * width, 3) to a list of feature arrays. Implementations
// must be deterministic; the perceptual loss compares the lists level by level.
template <typename T>
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::vector<Var> features(Graph<T>& g, Var image, std::size_t height, std::size_t width) const = 0;
};

// Desk-scale stand-in for a learned perceptual network: the image itself plus
// horizontal and vertical forward differences at full and half resolution.
// Not a substitute for LPIPS.
template <typename T>
class EdgePyramid final : public FeatureExtractor<T> {
public:
    std::vector<Var> features(Graph<T>& g, Var image, std::size_t height, std::size_t width) const override;
};

template <typename T>
Var l1_loss(Graph<T>& g, Var pred, Var target);
template <typename T>
Var perceptual_loss(Graph<T>& g, Var pred, Var target, std::size_t height, std::size_t width,
                    const FeatureExtractor<T>& extractor);
// mean over elements of 0.5 * (mean^2 + exp(logvar) - 1 - logvar), logvar clamped.
template <typename T>
Var kl_penalty(Graph<T>& g, Var mean, Var logvar);

double l1_loss(const Frame& pred, const Frame& target);
double perceptual_loss(const Frame& pred, const Frame& target, const FeatureExtractor<double>& extractor);
template <typename T>
double kl_penalty(const tokenizer::LatentPosterior<T>& post);

struct DiscriminatorConfig {
    std::vector<std::size_t> widths{64, 128, 256};  // one stride-2 stage per entry
    double slope = 0.2;
};

// Patch discriminator: 4x4 stride-2 convolutions with leaky ReLU, then a 3x3
// convolution to one logit per receptive patch. A 64x64 frame gives 8x8 logits.
template <typename T>
class Discriminator {
public:
    struct Conv {
        nn::Linear<T> proj;  // (k * k * c_in, c_out)
        std::size_t kernel, stride, pad;
    };

    Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);
    Discriminator(const Discriminator&) = delete;
    Discriminator& operator=(const Discriminator&) = delete;

    const DiscriminatorConfig& config() const { return cfg_; }
    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }
    std::vector<Conv>& layers() { return layers_; }

    // Smallest frame side accepted.
    std::size_t min_size() const { return std::size_t{2} << cfg_.widths.size(); }

    // Logits as (out_h * out_w, 1).
    Var forward(Graph<T>& g, Var image, std::size_t height, std::size_t width, std::size_t* out_h = nullptr,
                std::size_t* out_w = nullptr) const;
    Tensor<T> forward(const Frame& frame, std::size_t* out_h = nullptr, std::size_t* out_w = nullptr) const;

private:
    DiscriminatorConfig cfg_;
    ParamStore<T> params_;
    std::vector<Conv> layers_;
};

template <typename T>
struct AdversarialTerms {
    Var gen;   // -mean(D(fake))
    Var disc;  // mean(relu(1 - D(real))) + mean(relu(1 + D(fake)))
};

// Hinge formulation. For the discriminator update pass `fake` as a graph input
// (detached); for the generator update use `gen` only.
template <typename T>
AdversarialTerms<T> adversarial_losses(Graph<T>& g, const Discriminator<T>& disc, Var real, Var fake,
                                       std::size_t height, std::size_t width);

struct LossBreakdown {
    double l1 = 0.0;
    double perceptual = 0.0;
    double adversarial = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

template <typename T>
struct TotalLoss {
    Var total;
    LossBreakdown parts;
};

// lambda_1 L1 + lambda_p Lp + lambda_G LG + lambda_kl Lkl. The adversarial term is
// skipped when its weight is 0 or no discriminator is given.
template <typename T>
TotalLoss<T> tokenizer_total_loss(Graph<T>& g, Var pred, Var target, std::size_t height, std::size_t width, Var mean,
                                  Var logvar, const LossWeights& weights, const FeatureExtractor<T>& extractor,
                                  const Discriminator<T>* disc);

}  // namespace eden::losses
