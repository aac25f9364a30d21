#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <functional>
#include <vector>

#include "eden/core/graph.hpp"
#include "eden/core/params.hpp"
#include "eden/core/rng.hpp"
#include "eden/frame.hpp"

#include <unistd.h>

namespace eden::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("eden_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Frame random_frame(std::size_t h, std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    Frame f(h, w);
    for (float& v : f.pixels) v = static_cast<float>(rng.uniform(0.05, 0.95));
    return f;
}

template <typename T>
Tensor<T> random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    return rng.normal_tensor<T>(rows, cols, scale);
}

// Central-difference check of d loss / d input for a scalar function built
// on a fresh graph. Returns the worst relative error over all entries.
inline double check_input_grad(const Tensor<double>& x0, const std::function<Var(Graph<double>&, Var)>& f,
                               double h = 1e-6) {
    // Graph inputs are constants; a parameter leaf collects the gradient.
    Parameter<double> probe{"probe", x0, Tensor<double>(x0.rows(), x0.cols())};
    Graph<double> g;
    g.backward(f(g, g.param(probe)));
    const Tensor<double>& analytic = probe.grad;
    double worst = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        auto eval = [&](double delta) {
            Tensor<double> xp = x0;
            xp[i] += delta;
            Graph<double> ge(false);
            return ge.scalar(f(ge, ge.input(xp)));
        };
        const double numeric = (eval(h) - eval(-h)) / (2.0 * h);
        const double denom = std::max(1e-6, std::abs(numeric) + std::abs(analytic[i]));
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    return worst;
}

}  // namespace eden::test
