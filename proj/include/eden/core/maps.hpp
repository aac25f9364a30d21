#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace eden {

// Fixed sparse linear map over rows: out.row(i) = sum_j weight_j * in.row(src_j)
// for the entries of output row i. Pooling, nearest/bilinear resampling,
// context grouping and finite differences are all RowMix instances.
struct RowMix {
    std::size_t in_rows = 0;
    std::size_t out_rows = 0;
    std::vector<std::uint32_t> offsets{0};  // size out_rows + 1
    std::vector<std::uint32_t> src;
    std::vector<double> weight;

    void add(std::uint32_t s, double w) {
        src.push_back(s);
        weight.push_back(w);
    }
    void end_row() {
        offsets.push_back(static_cast<std::uint32_t>(src.size()));
        ++out_rows;
    }
};

// Element gather: out[i] = in[src[i]], or 0 when src[i] < 0.
// Used for patchify, pixel shuffle and im2col.
struct ElemMap {
    std::size_t in_rows = 0, in_cols = 0;
    std::size_t out_rows = 0, out_cols = 0;
    std::vector<std::int64_t> src;
};

namespace maps {

// 2x2 average pooling of a (gh, gw) grid.
RowMix pool2x2(std::size_t gh, std::size_t gw);
// 2x nearest-neighbour upsampling of a (gh, gw) grid.
RowMix upsample_nearest(std::size_t gh, std::size_t gw);
// Bilinear resize with aligned corners; identity when sizes match.
RowMix resize_bilinear(std::size_t gh, std::size_t gw, std::size_t nh, std::size_t nw);
// Groups each 2x2 block of a (2*gh, 2*gw) grid under small-grid cell i, in
// reading order: row 4*i + {0: top-left, 1: top-right, 2: bottom-left, 3: bottom-right}.
RowMix group_blocks(std::size_t small_h, std::size_t small_w);
// Picks rows in the given order.
RowMix select(std::size_t in_rows, const std::vector<std::uint32_t>& rows);
// Forward differences along x (dir 0) or y (dir 1) on an (h, w) pixel grid;
// output has (h, w-1) or (h-1, w) rows.
RowMix finite_difference(std::size_t h, std::size_t w, int dir);

// (h*w, 3) image -> (gh*gw, p*p*3) patches, each row the patch in (y, x, c) order.
ElemMap patchify(std::size_t h, std::size_t w, std::size_t channels, std::size_t patch);
// Inverse of patchify: (gh*gw, p*p*c) -> (h*w, c).
ElemMap pixel_shuffle(std::size_t gh, std::size_t gw, std::size_t channels, std::size_t patch);
// (h*w, c) image -> (ho*wo, k*k*c) convolution columns in (ky, kx, c) order.
ElemMap im2col(std::size_t h, std::size_t w, std::size_t channels, std::size_t kernel, std::size_t stride,
               std::size_t pad, std::size_t& out_h, std::size_t& out_w);

}  // namespace maps
}  // namespace eden

namespace eden::maps {

// Process-wide memo of index maps keyed by a descriptive string.
std::shared_ptr<const RowMix> cached(const std::string& key, const std::function<RowMix()>& build);
std::shared_ptr<const ElemMap> cached_elems(const std::string& key, const std::function<ElemMap()>& build);

}  // namespace eden::maps
