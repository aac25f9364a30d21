#include "eden/losses.hpp"

#include <cmath>

namespace eden::losses {

void LossWeights::validate() const {
    for (double w : {l1, perceptual, adversarial, kl})
        require(std::isfinite(w) && w >= 0.0, "config", "loss weights must be finite and non-negative");
}

template <typename T>
std::vector<Var> EdgePyramid<T>::features(Graph<T>& g, Var image, std::size_t height, std::size_t width) const {
    std::vector<Var> out{image};
    auto edges = [&](Var img, std::size_t h, std::size_t w) {
        if (w >= 2)
            out.push_back(g.row_mix(img, maps::cached("fdx:" + std::to_string(h) + "x" + std::to_string(w),
                                                      [=] { return maps::finite_difference(h, w, 0); })));
        if (h >= 2)
            out.push_back(g.row_mix(img, maps::cached("fdy:" + std::to_string(h) + "x" + std::to_string(w),
                                                      [=] { return maps::finite_difference(h, w, 1); })));
    };
    edges(image, height, width);
    if (height % 2 == 0 && width % 2 == 0 && height >= 4 && width >= 4) {
        const Var half = g.row_mix(image, maps::cached("pool:" + std::to_string(height) + "x" + std::to_string(width),
                                                       [=] { return maps::pool2x2(height, width); }));
        edges(half, height / 2, width / 2);
    }
    return out;
}

template <typename T>
Var l1_loss(Graph<T>& g, Var pred, Var target) {
    require_same_shape(g.value(pred), g.value(target), "l1_loss");
    return g.mean(g.abs(g.sub(pred, target)));
}

template <typename T>
Var perceptual_loss(Graph<T>& g, Var pred, Var target, std::size_t height, std::size_t width,
                    const FeatureExtractor<T>& extractor) {
    require_same_shape(g.value(pred), g.value(target), "perceptual_loss");
    const auto fp = extractor.features(g, pred, height, width);
    const auto ft = extractor.features(g, target, height, width);
    require(fp.size() == ft.size() && !fp.empty(), "shape", "perceptual extractor returned mismatched levels");
    Var total = g.mean(g.square(g.sub(fp[0], ft[0])));
    for (std::size_t i = 1; i < fp.size(); ++i) total = g.add(total, g.mean(g.square(g.sub(fp[i], ft[i]))));
    return total;
}

template <typename T>
Var kl_penalty(Graph<T>& g, Var mean, Var logvar) {
    require_same_shape(g.value(mean), g.value(logvar), "kl_penalty");
    const Var lv = g.clamp(logvar, static_cast<T>(tokenizer::kLogvarMin), static_cast<T>(tokenizer::kLogvarMax));
    const Var inner = g.sub(g.add(g.square(mean), g.exp(lv)), g.add_scalar(lv, T(1)));
    return g.scale(g.mean(inner), T(0.5));
}

double l1_loss(const Frame& pred, const Frame& target) {
    require_same_size(pred, target, "l1_loss");
    Graph<double> g(false);
    return g.scalar(l1_loss(g, g.input(pred.tensor<double>()), g.input(target.tensor<double>())));
}

double perceptual_loss(const Frame& pred, const Frame& target, const FeatureExtractor<double>& extractor) {
    require_same_size(pred, target, "perceptual_loss");
    Graph<double> g(false);
    return g.scalar(perceptual_loss(g, g.input(pred.tensor<double>()), g.input(target.tensor<double>()), pred.height,
                                    pred.width, extractor));
}

template <typename T>
double kl_penalty(const tokenizer::LatentPosterior<T>& post) {
    Graph<T> g(false);
    return static_cast<double>(g.scalar(kl_penalty(g, g.input(post.mean), g.input(post.logvar))));
}

// ---------------------------------------------------------------- discriminator

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    require(!cfg_.widths.empty(), "config", "discriminator needs at least one stage");
    Rng rng(seed);
    std::size_t in = 3;
    for (std::size_t i = 0; i < cfg_.widths.size(); ++i) {
        Conv c{nn::Linear<T>::make(params_, "disc.conv" + std::to_string(i), 16 * in, cfg_.widths[i], rng, nn::Init::Small),
               4, 2, 1};
        layers_.push_back(c);
        in = cfg_.widths[i];
    }
    layers_.push_back(Conv{nn::Linear<T>::make(params_, "disc.head", 9 * in, 1, rng, nn::Init::Small), 3, 1, 1});
}

template <typename T>
Var Discriminator<T>::forward(Graph<T>& g, Var image, std::size_t height, std::size_t width, std::size_t* out_h,
                              std::size_t* out_w) const {
    const std::size_t need = min_size();
    require(height >= need && width >= need, "shape",
            "frame " + std::to_string(height) + "x" + std::to_string(width) +
                " is smaller than the discriminator's minimum of " + std::to_string(need));
    Var x = image;
    std::size_t h = height, w = width, ch = 3;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Conv& c = layers_[i];
        const std::size_t oh = (h + 2 * c.pad - c.kernel) / c.stride + 1;
        const std::size_t ow = (w + 2 * c.pad - c.kernel) / c.stride + 1;
        const std::size_t hh = h, ww = w, cc = ch, k = c.kernel, s = c.stride, p = c.pad;
        auto map = maps::cached_elems("im2col:" + std::to_string(hh) + "x" + std::to_string(ww) + "x" + std::to_string(cc) +
                                          "/" + std::to_string(k) + "/" + std::to_string(s) + "/" + std::to_string(p),
                                      [=] {
                                          std::size_t a, b;
                                          return maps::im2col(hh, ww, cc, k, s, p, a, b);
                                      });
        x = c.proj(g, g.gather(x, map));
        if (i + 1 < layers_.size()) x = g.leaky_relu(x, static_cast<T>(cfg_.slope));
        h = oh;
        w = ow;
        ch = c.proj.out();
    }
    if (out_h) *out_h = h;
    if (out_w) *out_w = w;
    return x;
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Frame& frame, std::size_t* out_h, std::size_t* out_w) const {
    Graph<T> g(false);
    return g.value(forward(g, g.input(frame.tensor<T>()), frame.height, frame.width, out_h, out_w));
}

template <typename T>
AdversarialTerms<T> adversarial_losses(Graph<T>& g, const Discriminator<T>& disc, Var real, Var fake,
                                       std::size_t height, std::size_t width) {
    require_same_shape(g.value(real), g.value(fake), "adversarial_losses");
    const Var d_real = disc.forward(g, real, height, width);
    const Var d_fake = disc.forward(g, fake, height, width);
    AdversarialTerms<T> out;
    out.disc = g.add(g.mean(g.relu(g.add_scalar(g.scale(d_real, T(-1)), T(1)))),
                     g.mean(g.relu(g.add_scalar(d_fake, T(1)))));
    out.gen = g.scale(g.mean(d_fake), T(-1));
    return out;
}

template <typename T>
TotalLoss<T> tokenizer_total_loss(Graph<T>& g, Var pred, Var target, std::size_t height, std::size_t width, Var mean,
                                  Var logvar, const LossWeights& weights, const FeatureExtractor<T>& extractor,
                                  const Discriminator<T>* disc) {
    weights.validate();
    TotalLoss<T> out;
    const Var l1 = l1_loss(g, pred, target);
    const Var lp = perceptual_loss(g, pred, target, height, width, extractor);
    const Var kl = kl_penalty(g, mean, logvar);
    Var total = g.add(g.add(g.scale(l1, static_cast<T>(weights.l1)), g.scale(lp, static_cast<T>(weights.perceptual))),
                      g.scale(kl, static_cast<T>(weights.kl)));
    out.parts.l1 = static_cast<double>(g.scalar(l1));
    out.parts.perceptual = static_cast<double>(g.scalar(lp));
    out.parts.kl = static_cast<double>(g.scalar(kl));
    if (weights.adversarial > 0.0 && disc != nullptr) {
        const Var gen = g.scale(g.mean(disc->forward(g, pred, height, width)), T(-1));
        out.parts.adversarial = static_cast<double>(g.scalar(gen));
        total = g.add(total, g.scale(gen, static_cast<T>(weights.adversarial)));
    }
    out.total = total;
    out.parts.total = static_cast<double>(g.scalar(total));
    return out;
}

#define EDEN_INSTANTIATE(T)                                                                                           \
    template class EdgePyramid<T>;                                                                                    \
    template class Discriminator<T>;                                                                                  \
    template Var l1_loss<T>(Graph<T>&, Var, Var);                                                                     \
    template Var perceptual_loss<T>(Graph<T>&, Var, Var, std::size_t, std::size_t, const FeatureExtractor<T>&);       \
    template Var kl_penalty<T>(Graph<T>&, Var, Var);                                                                  \
    template double kl_penalty<T>(const tokenizer::LatentPosterior<T>&);                                              \
    template AdversarialTerms<T> adversarial_losses<T>(Graph<T>&, const Discriminator<T>&, Var, Var, std::size_t,     \
                                                       std::size_t);                                                  \
    template TotalLoss<T> tokenizer_total_loss<T>(Graph<T>&, Var, Var, std::size_t, std::size_t, Var, Var,            \
                                                  const LossWeights&, const FeatureExtractor<T>&, const Discriminator<T>*);

EDEN_INSTANTIATE(float)
EDEN_INSTANTIATE(double)

#undef EDEN_INSTANTIATE

}  // namespace eden::losses
