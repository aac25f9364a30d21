#include "eden/frame.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace eden {

void validate_frame(const Frame& f) {
    require(f.height > 0 && f.width > 0, "shape", "empty frame");
    require(f.pixels.size() == f.height * f.width * 3, "shape", "frame pixel buffer does not match its size");
    for (float v : f.pixels)
        require(std::isfinite(v) && v >= 0.0f && v <= 1.0f, "data", "frame values must be finite and within [0, 1]");
}

void require_same_size(const Frame& a, const Frame& b, const char* what) {
    if (!a.same_size(b))
        fail("shape", std::string(what) + ": frame sizes differ (" + std::to_string(a.height) + "x" +
                          std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
}

namespace {
struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace

Frame read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        fail("io", "cannot read PNG " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        fail("io", "cannot decode PNG " + path.string() + ": " + image.message);
    }
    Frame f(image.height, image.width);
    for (std::size_t i = 0; i < buffer.size(); ++i) f.pixels[i] = static_cast<float>(buffer[i]) / 255.0f;
    return f;
}

void write_png(const Frame& frame, const std::filesystem::path& path) {
    validate_frame(frame);
    std::vector<png_byte> buffer(frame.pixels.size());
    for (std::size_t i = 0; i < buffer.size(); ++i)
        buffer[i] = static_cast<png_byte>(std::lround(std::min(1.0f, std::max(0.0f, frame.pixels[i])) * 255.0f));
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(frame.width);
    image.height = static_cast<png_uint_32>(frame.height);
    image.format = PNG_FORMAT_RGB;
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) fail("io", "cannot open " + path.string() + " for writing");
    if (!png_image_write_to_stdio(&image, file.get(), 0, buffer.data(), 0, nullptr))
        fail("io", "cannot encode PNG " + path.string() + ": " + image.message);
}

}  // namespace eden
