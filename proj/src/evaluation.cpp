#include "eden/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace eden::evaluation {

double psnr(const Frame& pred, const Frame& target) {
    require_same_size(pred, target, "psnr");
    double se = 0.0;
    for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
        const double d = static_cast<double>(pred.pixels[i]) - target.pixels[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(pred.pixels.size());
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

std::vector<double> gaussian_window() {
    std::vector<double> w(kSsimWindow);
    const double c = (kSsimWindow - 1) / 2.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < kSsimWindow; ++i) {
        w[i] = std::exp(-((i - c) * (i - c)) / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Valid-region separable filter of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                 const std::vector<double>& k) {
    const std::size_t n = k.size(), ow = w - n + 1, oh = h - n + 1;
    std::vector<double> tmp(h * ow, 0.0), out(oh * ow, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += k[i] * img[y * w + x + i];
            tmp[y * ow + x] = s;
        }
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += k[i] * tmp[(y + i) * ow + x];
            out[y * ow + x] = s;
        }
    return out;
}

}  // namespace

double ssim(const Frame& pred, const Frame& target) {
    require_same_size(pred, target, "ssim");
    require(pred.height >= kSsimWindow && pred.width >= kSsimWindow, "shape",
            "ssim needs frames of at least 11x11, got " + std::to_string(pred.height) + "x" +
                std::to_string(pred.width));
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const auto k = gaussian_window();
    const std::size_t h = pred.height, w = pred.width, n = h * w;
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = pred.pixels[i * 3 + c];
            b[i] = target.pixels[i * 3 + c];
            aa[i] = a[i] * a[i];
            bb[i] = b[i] * b[i];
            ab[i] = a[i] * b[i];
        }
        const auto mu_a = filter_valid(a, h, w, k), mu_b = filter_valid(b, h, w, k);
        const auto e_aa = filter_valid(aa, h, w, k), e_bb = filter_valid(bb, h, w, k), e_ab = filter_valid(ab, h, w, k);
        double sum = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = e_aa[i] - mu_a[i] * mu_a[i];
            const double vb = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            sum += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                   ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
        }
        total += sum / static_cast<double>(mu_a.size());
    }
    return total / 3.0;
}

std::optional<double> perceptual_metric(const Frame& pred, const Frame& target,
                                        const losses::FeatureExtractor<double>* extractor) {
    if (!extractor) return std::nullopt;
    return losses::perceptual_loss(pred, target, *extractor);
}

std::vector<MetricRow> MetricReport::aggregates() const {
    std::map<std::pair<int, std::size_t>, std::vector<const MetricRow*>> groups;
    for (const MetricRow& r : rows) groups[{r.steps, r.interval}].push_back(&r);
    std::vector<MetricRow> out;
    for (const auto& [key, members] : groups) {
        MetricRow m;
        m.sample_id = "MEAN";
        m.steps = key.first;
        m.interval = key.second;
        bool all_perceptual = true;
        double perceptual = 0.0;
        for (const MetricRow* r : members) {
            m.psnr += r->psnr;
            m.ssim += r->ssim;
            m.runtime_s += r->runtime_s;
            if (r->perceptual) perceptual += *r->perceptual;
            else all_perceptual = false;
        }
        const double count = static_cast<double>(members.size());
        m.psnr /= count;
        m.ssim /= count;
        m.runtime_s /= count;
        if (all_perceptual) m.perceptual = perceptual / count;
        out.push_back(m);
    }
    return out;
}

namespace {
std::string format_row(const MetricRow& r) {
    char buf[512];
    char perceptual[64] = "";
    if (r.perceptual) std::snprintf(perceptual, sizeof perceptual, "%.17g", *r.perceptual);
    std::snprintf(buf, sizeof buf, "%s,%d,%zu,%.17g,%.17g,%s,%.17g\n", r.sample_id.c_str(), r.steps, r.interval, r.psnr,
                  r.ssim, perceptual, r.runtime_s);
    return buf;
}
}  // namespace

std::string MetricReport::to_csv() const {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const MetricRow& r : rows) {
        require(r.sample_id.find(',') == std::string::npos, "data", "sample id must not contain commas: " + r.sample_id);
        out += format_row(r);
    }
    for (const MetricRow& r : aggregates()) out += format_row(r);
    return out;
}

void MetricReport::write_csv(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    require(static_cast<bool>(out), "io", "cannot write report " + path.string());
    out << to_csv();
    require(static_cast<bool>(out), "io", "failed writing " + path.string());
}

std::vector<MetricRow> MetricReport::parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line == kCsvHeader, "data", "report is missing the CSV header");
    std::vector<MetricRow> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        require(f.size() == 7, "data", "malformed report row: " + line);
        MetricRow r;
        try {
            r.sample_id = f[0];
            r.steps = std::stoi(f[1]);
            r.interval = std::stoul(f[2]);
            r.psnr = std::stod(f[3]);
            r.ssim = std::stod(f[4]);
            if (!f[5].empty()) r.perceptual = std::stod(f[5]);
            r.runtime_s = std::stod(f[6]);
        } catch (const std::exception&) {
            fail("data", "malformed report row: " + line);
        }
        out.push_back(r);
    }
    return out;
}

namespace {

void check_models(const Models& m) {
    require(m.tokenizer != nullptr && m.dit != nullptr, "checkpoint", "evaluation needs a tokenizer and a dit");
    diffusion::check_compatible(m.tokenizer->config(), m.dit->config());
}

MetricRow evaluate_one(const Models& m, const EvalSample& s, int steps, std::uint64_t seed,
                       const losses::FeatureExtractor<double>* extractor) {
    const auto& t = s.triplet;
    const auto start = std::chrono::steady_clock::now();
    const Frame pred = diffusion::interpolate_frame(*m.tokenizer, *m.dit, t.i0, t.i1, steps, seed, m.stats);
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    MetricRow r;
    r.sample_id = s.id;
    r.steps = steps;
    r.interval = t.interval;
    r.psnr = psnr(pred, t.it);
    r.ssim = ssim(pred, t.it);
    r.perceptual = perceptual_metric(pred, t.it, extractor);
    r.runtime_s = runtime;
    return r;
}

}  // namespace

MetricReport sweep_denoising_steps(const Models& models, const std::vector<EvalSample>& samples,
                                   const std::vector<int>& steps, std::uint64_t seed,
                                   const losses::FeatureExtractor<double>* extractor) {
    check_models(models);
    require(!samples.empty(), "data", "no samples to evaluate");
    require(!steps.empty(), "config", "the step list must not be empty");
    for (int s : steps) require(s >= 0, "range", "denoising steps must be non-negative");
    MetricReport report;
    for (int s : steps)
        for (const EvalSample& sample : samples) report.rows.push_back(evaluate_one(models, sample, s, seed, extractor));
    return report;
}

MetricReport sweep_intervals(const Models& models, const std::vector<std::vector<Frame>>& sequences,
                             const std::vector<std::size_t>& intervals, int steps, std::uint64_t seed,
                             const losses::FeatureExtractor<double>* extractor) {
    check_models(models);
    require(!sequences.empty(), "data", "no samples to evaluate");
    require(!intervals.empty(), "config", "the interval list must not be empty");
    MetricReport report;
    for (std::size_t k : intervals) {
        require(k >= 1, "range", "intervals must be at least 1");
        for (std::size_t q = 0; q < sequences.size(); ++q) {
            const auto& seq = sequences[q];
            const std::size_t centre = seq.size() / 2;
            require(centre >= k && centre + k < seq.size(), "data",
                    "sequence " + std::to_string(q) + " with " + std::to_string(seq.size()) +
                        " frames is too short for interval " + std::to_string(k));
            EvalSample s{"seq" + std::to_string(q), data::triplet_sample(seq, centre - k, k)};
            report.rows.push_back(evaluate_one(models, s, steps, seed, extractor));
        }
    }
    return report;
}

}  // namespace eden::evaluation
