#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "eden/core/tensor.hpp"

namespace eden {

// RGB image with values in [0, 1], stored (y, x, channel) row-major.
struct Frame {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> pixels;

    Frame() = default;
    Frame(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), pixels(h * w * 3, fill) {}

    float& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
    float at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }

    bool same_size(const Frame& o) const { return height == o.height && width == o.width; }

    // (height * width, 3) view for the graph.
    template <typename T>
    Tensor<T> tensor() const {
        Tensor<T> t(height * width, 3);
        for (std::size_t i = 0; i < pixels.size(); ++i) t[i] = static_cast<T>(pixels[i]);
        return t;
    }

    template <typename T>
    static Frame from_tensor(const Tensor<T>& t, std::size_t h, std::size_t w, bool clamp = true) {
        require(t.rows() == h * w && t.cols() == 3, "shape", "tensor " + t.shape_str() + " is not an image of the given size");
        Frame f(h, w);
        for (std::size_t i = 0; i < f.pixels.size(); ++i) {
            float v = static_cast<float>(t[i]);
            if (clamp) v = std::min(1.0f, std::max(0.0f, v));
            f.pixels[i] = v;
        }
        return f;
    }

    friend bool operator==(const Frame&, const Frame&) = default;
};

// Throws unless the frame is non-empty, finite and within [0, 1].
void validate_frame(const Frame& f);
void require_same_size(const Frame& a, const Frame& b, const char* what);

Frame read_png(const std::filesystem::path& path);
void write_png(const Frame& frame, const std::filesystem::path& path);

}  // namespace eden
