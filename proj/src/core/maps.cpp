#include "eden/core/maps.hpp"

#include <map>
#include <mutex>

#include "eden/core/error.hpp"

namespace eden::maps {

RowMix pool2x2(std::size_t gh, std::size_t gw) {
    require(gh % 2 == 0 && gw % 2 == 0, "shape",
            "pooling needs an even grid, got " + std::to_string(gh) + "x" + std::to_string(gw));
    RowMix m;
    m.in_rows = gh * gw;
    for (std::size_t y = 0; y < gh / 2; ++y)
        for (std::size_t x = 0; x < gw / 2; ++x) {
            for (std::size_t dy = 0; dy < 2; ++dy)
                for (std::size_t dx = 0; dx < 2; ++dx)
                    m.add(static_cast<std::uint32_t>((2 * y + dy) * gw + 2 * x + dx), 0.25);
            m.end_row();
        }
    return m;
}

RowMix upsample_nearest(std::size_t gh, std::size_t gw) {
    RowMix m;
    m.in_rows = gh * gw;
    for (std::size_t y = 0; y < 2 * gh; ++y)
        for (std::size_t x = 0; x < 2 * gw; ++x) {
            m.add(static_cast<std::uint32_t>((y / 2) * gw + x / 2), 1.0);
            m.end_row();
        }
    return m;
}

namespace {
// Aligned-corner source coordinate -> (lower index, upper index, upper weight).
void axis_weights(std::size_t in, std::size_t out, std::size_t i, std::size_t& lo, std::size_t& hi, double& t) {
    if (in == 1 || out == 1) {
        lo = hi = 0;
        t = 0.0;
        return;
    }
    const double pos = static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
    lo = static_cast<std::size_t>(pos);
    if (lo >= in - 1) lo = in - 1;
    hi = lo + 1 < in ? lo + 1 : lo;
    t = pos - static_cast<double>(lo);
}
}  // namespace

RowMix resize_bilinear(std::size_t gh, std::size_t gw, std::size_t nh, std::size_t nw) {
    require(gh > 0 && gw > 0 && nh > 0 && nw > 0, "range", "bilinear resize needs positive sizes");
    RowMix m;
    m.in_rows = gh * gw;
    for (std::size_t y = 0; y < nh; ++y) {
        std::size_t y0, y1;
        double ty;
        axis_weights(gh, nh, y, y0, y1, ty);
        for (std::size_t x = 0; x < nw; ++x) {
            std::size_t x0, x1;
            double tx;
            axis_weights(gw, nw, x, x0, x1, tx);
            const double w[4] = {(1 - ty) * (1 - tx), (1 - ty) * tx, ty * (1 - tx), ty * tx};
            const std::size_t s[4] = {y0 * gw + x0, y0 * gw + x1, y1 * gw + x0, y1 * gw + x1};
            for (int k = 0; k < 4; ++k)
                if (w[k] != 0.0) m.add(static_cast<std::uint32_t>(s[k]), w[k]);
            m.end_row();
        }
    }
    return m;
}

RowMix group_blocks(std::size_t small_h, std::size_t small_w) {
    RowMix m;
    const std::size_t gw = 2 * small_w;
    m.in_rows = 4 * small_h * small_w;
    for (std::size_t y = 0; y < small_h; ++y)
        for (std::size_t x = 0; x < small_w; ++x)
            for (std::size_t dy = 0; dy < 2; ++dy)
                for (std::size_t dx = 0; dx < 2; ++dx) {
                    m.add(static_cast<std::uint32_t>((2 * y + dy) * gw + 2 * x + dx), 1.0);
                    m.end_row();
                }
    return m;
}

RowMix select(std::size_t in_rows, const std::vector<std::uint32_t>& rows) {
    RowMix m;
    m.in_rows = in_rows;
    for (auto r : rows) {
        require(r < in_rows, "shape", "row selection out of range");
        m.add(r, 1.0);
        m.end_row();
    }
    return m;
}

RowMix finite_difference(std::size_t h, std::size_t w, int dir) {
    RowMix m;
    m.in_rows = h * w;
    const std::size_t oh = dir == 1 ? h - 1 : h;
    const std::size_t ow = dir == 0 ? w - 1 : w;
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            const std::size_t a = y * w + x;
            const std::size_t b = dir == 0 ? a + 1 : a + w;
            m.add(static_cast<std::uint32_t>(b), 1.0);
            m.add(static_cast<std::uint32_t>(a), -1.0);
            m.end_row();
        }
    return m;
}

ElemMap patchify(std::size_t h, std::size_t w, std::size_t channels, std::size_t patch) {
    require(h % patch == 0 && w % patch == 0, "shape",
            "frame " + std::to_string(h) + "x" + std::to_string(w) + " is not divisible by patch size " +
                std::to_string(patch));
    ElemMap m;
    m.in_rows = h * w;
    m.in_cols = channels;
    const std::size_t gh = h / patch, gw = w / patch;
    m.out_rows = gh * gw;
    m.out_cols = patch * patch * channels;
    m.src.reserve(m.out_rows * m.out_cols);
    for (std::size_t py = 0; py < gh; ++py)
        for (std::size_t px = 0; px < gw; ++px)
            for (std::size_t y = 0; y < patch; ++y)
                for (std::size_t x = 0; x < patch; ++x)
                    for (std::size_t c = 0; c < channels; ++c)
                        m.src.push_back(static_cast<std::int64_t>(((py * patch + y) * w + px * patch + x) * channels + c));
    return m;
}

ElemMap pixel_shuffle(std::size_t gh, std::size_t gw, std::size_t channels, std::size_t patch) {
    const std::size_t h = gh * patch, w = gw * patch;
    ElemMap m;
    m.in_rows = gh * gw;
    m.in_cols = patch * patch * channels;
    m.out_rows = h * w;
    m.out_cols = channels;
    m.src.resize(m.out_rows * m.out_cols);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < channels; ++c) {
                const std::size_t token = (y / patch) * gw + x / patch;
                const std::size_t within = ((y % patch) * patch + x % patch) * channels + c;
                m.src[(y * w + x) * channels + c] = static_cast<std::int64_t>(token * m.in_cols + within);
            }
    return m;
}

ElemMap im2col(std::size_t h, std::size_t w, std::size_t channels, std::size_t kernel, std::size_t stride,
               std::size_t pad, std::size_t& out_h, std::size_t& out_w) {
    require(h + 2 * pad >= kernel && w + 2 * pad >= kernel, "shape", "input smaller than convolution kernel");
    out_h = (h + 2 * pad - kernel) / stride + 1;
    out_w = (w + 2 * pad - kernel) / stride + 1;
    ElemMap m;
    m.in_rows = h * w;
    m.in_cols = channels;
    m.out_rows = out_h * out_w;
    m.out_cols = kernel * kernel * channels;
    m.src.reserve(m.out_rows * m.out_cols);
    for (std::size_t oy = 0; oy < out_h; ++oy)
        for (std::size_t ox = 0; ox < out_w; ++ox)
            for (std::size_t ky = 0; ky < kernel; ++ky)
                for (std::size_t kx = 0; kx < kernel; ++kx) {
                    const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
                    const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
                    const bool inside = y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(h) &&
                                        x < static_cast<std::ptrdiff_t>(w);
                    for (std::size_t c = 0; c < channels; ++c)
                        m.src.push_back(inside ? static_cast<std::int64_t>((y * static_cast<std::ptrdiff_t>(w) + x) *
                                                                               static_cast<std::ptrdiff_t>(channels) +
                                                                           static_cast<std::ptrdiff_t>(c))
                                               : -1);
                }
    return m;
}

}  // namespace eden::maps

namespace eden::maps {

namespace {
std::mutex cache_mutex;
}

std::shared_ptr<const RowMix> cached(const std::string& key, const std::function<RowMix()>& build) {
    static std::map<std::string, std::shared_ptr<const RowMix>> cache;
    std::lock_guard lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto m = std::make_shared<const RowMix>(build());
    cache.emplace(key, m);
    return m;
}

std::shared_ptr<const ElemMap> cached_elems(const std::string& key, const std::function<ElemMap()>& build) {
    static std::map<std::string, std::shared_ptr<const ElemMap>> cache;
    std::lock_guard lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto m = std::make_shared<const ElemMap>(build());
    cache.emplace(key, m);
    return m;
}

}  // namespace eden::maps
