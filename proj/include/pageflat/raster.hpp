#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pageflat {

// Owned 8-bit pixel buffer, 1 channel (gray) or 3 channels (RGB), row-major.
// Treated as immutable once built; every operation below returns a new value.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, int channels, std::uint8_t fill = 0)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {
        if (width < 1 || height < 1) throw std::invalid_argument("raster dimensions must be positive");
        if (channels != 1 && channels != 3) throw std::invalid_argument("raster channels must be 1 or 3");
    }
    Raster(int width, int height, int channels, std::vector<std::uint8_t> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        if (width < 1 || height < 1) throw std::invalid_argument("raster dimensions must be positive");
        if (channels != 1 && channels != 3) throw std::invalid_argument("raster channels must be 1 or 3");
        if (data_.size() != static_cast<std::size_t>(width) * height * channels)
            throw std::invalid_argument("raster data length mismatch");
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int channels() const noexcept { return channels_; }
    [[nodiscard]] const std::vector<std::uint8_t>& data() const noexcept { return data_; }
    [[nodiscard]] std::vector<std::uint8_t>& data() noexcept { return data_; }

    [[nodiscard]] std::uint8_t at(int x, int y, int c = 0) const {
        return data_[idx(x, y, c)];
    }
    void set(int x, int y, int c, std::uint8_t v) { data_[idx(x, y, c)] = v; }

    [[nodiscard]] bool same_shape(const Raster& o) const noexcept {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

private:
    [[nodiscard]] std::size_t idx(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

// One boolean per pixel; true = foreground (the page).
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {
        if (width < 1 || height < 1) throw std::invalid_argument("mask dimensions must be positive");
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

    // In-bounds test plus lookup; out-of-bounds counts as background.
    [[nodiscard]] bool at_or_false(int x, int y) const noexcept {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
        return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }

    [[nodiscard]] std::size_t count_foreground() const noexcept {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

// ---------------------------------------------------------------------------
// Grayscale conversion
// ---------------------------------------------------------------------------

// Rec.601 luminance, rounded. Rejects gray input so a silent no-op cannot
// hide a channel-count bug in the caller.
[[nodiscard]] inline Raster to_grayscale(const Raster& img) {
    if (img.channels() != 3) throw std::invalid_argument("to_grayscale expects a 3-channel raster");
    Raster out(img.width(), img.height(), 1);
    const auto& src = img.data();
    auto& dst = out.data();
    const std::size_t n = dst.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double lum = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(lum), 0L, 255L));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Otsu binarization
// ---------------------------------------------------------------------------

struct BinarizeResult {
    BinaryMask mask;
    int threshold = 0;  // pixels >= threshold are foreground
};

[[nodiscard]] inline BinaryMask threshold_mask(const Raster& img, int threshold) {
    if (img.channels() != 1) throw std::invalid_argument("binarization expects a 1-channel raster");
    BinaryMask mask(img.width(), img.height());
    const auto& src = img.data();
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            mask.set(x, y, src[static_cast<std::size_t>(y) * img.width() + x] >= threshold);
    return mask;
}

// Global threshold maximizing inter-class variance over the 256-bin
// histogram. Ties are broken by averaging all maximizing thresholds.
[[nodiscard]] inline BinarizeResult binarize_otsu(const Raster& img) {
    if (img.channels() != 1) throw std::invalid_argument("binarize_otsu expects a 1-channel raster");
    std::array<std::uint64_t, 256> hist{};
    for (std::uint8_t v : img.data()) ++hist[v];

    const double total = static_cast<double>(img.data().size());
    double total_sum = 0.0;
    for (int v = 0; v < 256; ++v) total_sum += static_cast<double>(hist[v]) * v;

    // Classes at threshold t: background < t, foreground >= t.
    double best = -1.0;
    long best_sum = 0;
    int best_count = 0;
    double w0 = 0.0, sum0 = 0.0;
    for (int t = 1; t < 256; ++t) {
        w0 += static_cast<double>(hist[t - 1]);
        sum0 += static_cast<double>(hist[t - 1]) * (t - 1);
        const double w1 = total - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (total_sum - sum0) / w1;
        const double var_between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var_between > best + 1e-9) {
            best = var_between;
            best_sum = t;
            best_count = 1;
        } else if (std::abs(var_between - best) <= 1e-9) {
            best_sum += t;
            ++best_count;
        }
    }
    if (best <= 0.0) throw std::runtime_error("degenerate histogram");
    const int threshold = static_cast<int>(std::lround(static_cast<double>(best_sum) / best_count));
    return {threshold_mask(img, threshold), threshold};
}

// ---------------------------------------------------------------------------
// Subpixel sampling
// ---------------------------------------------------------------------------

enum class SamplePolicy { clamp, fill };

struct SampleOptions {
    SamplePolicy policy = SamplePolicy::clamp;
    double fill_value = 0.0;  // used per channel when policy == fill
};

// Bilinear blend of the four nearest pixel centers; exact at integer (u,v).
// Out-of-range coordinates follow the selected policy.
[[nodiscard]] inline std::array<double, 3> sample_bilinear(const Raster& img, double u, double v,
                                                           SampleOptions opt = {}) {
    std::array<double, 3> out{opt.fill_value, opt.fill_value, opt.fill_value};
    const double u_max = img.width() - 1.0;
    const double v_max = img.height() - 1.0;
    if (opt.policy == SamplePolicy::fill) {
        if (u < 0.0 || v < 0.0 || u > u_max || v > v_max) return out;
    } else {
        u = std::clamp(u, 0.0, u_max);
        v = std::clamp(v, 0.0, v_max);
    }
    const int x0 = static_cast<int>(std::floor(u));
    const int y0 = static_cast<int>(std::floor(v));
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = u - x0;
    const double fy = v - y0;
    for (int c = 0; c < img.channels(); ++c) {
        const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
        const double bot = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
        out[c] = top * (1.0 - fy) + bot * fy;
    }
    return out;
}

[[nodiscard]] inline std::uint8_t quantize(double v) noexcept {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace pageflat
