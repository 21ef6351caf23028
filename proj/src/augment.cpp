#include "sskd/augment.hpp"

#include <algorithm>
#include <cmath>

namespace sskd {

namespace {

constexpr double kStdFloor = 1e-8;

bool right_angle(int deg) { return deg == 0 || deg == 90 || deg == 180 || deg == 270; }

RasterGrid resize_to_height(const RasterGrid& in, std::size_t target_height) {
    if (target_height == 0 || target_height == in.height) return in;
    const double scale = static_cast<double>(target_height) / static_cast<double>(in.height);
    const auto target_width = static_cast<std::size_t>(std::max<long>(
        1, std::lround(scale * static_cast<double>(in.width))));
    RasterGrid out;
    out.height = target_height;
    out.width = target_width;
    out.values.resize(target_height * target_width);
    // Bilinear sampling with half-pixel centers.
    for (std::size_t r = 0; r < target_height; ++r) {
        const double sy = (static_cast<double>(r) + 0.5) *
                              static_cast<double>(in.height) /
                              static_cast<double>(target_height) -
                          0.5;
        const double cy = std::clamp(sy, 0.0, static_cast<double>(in.height - 1));
        const std::size_t y0 = static_cast<std::size_t>(cy);
        const std::size_t y1 = std::min(y0 + 1, in.height - 1);
        const double fy = cy - static_cast<double>(y0);
        for (std::size_t c = 0; c < target_width; ++c) {
            const double sx = (static_cast<double>(c) + 0.5) *
                                  static_cast<double>(in.width) /
                                  static_cast<double>(target_width) -
                              0.5;
            const double cx = std::clamp(sx, 0.0, static_cast<double>(in.width - 1));
            const std::size_t x0 = static_cast<std::size_t>(cx);
            const std::size_t x1 = std::min(x0 + 1, in.width - 1);
            const double fx = cx - static_cast<double>(x0);
            const double top = in.at(y0, x0) * (1.0 - fx) + in.at(y0, x1) * fx;
            const double bot = in.at(y1, x0) * (1.0 - fx) + in.at(y1, x1) * fx;
            out.at(r, c) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

RasterGrid crop(const RasterGrid& in, std::size_t top, std::size_t left, std::size_t size) {
    RasterGrid out;
    out.height = size;
    out.width = size;
    out.values.resize(size * size);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) out.at(r, c) = in.at(top + r, left + c);
    return out;
}

RasterGrid rotate(const RasterGrid& in, int deg) {
    if (deg == 0) return in;
    RasterGrid out;
    if (deg == 180) {
        out.height = in.height;
        out.width = in.width;
    } else {
        out.height = in.width;
        out.width = in.height;
    }
    out.values.resize(in.values.size());
    for (std::size_t r = 0; r < in.height; ++r)
        for (std::size_t c = 0; c < in.width; ++c) {
            // counter-clockwise rotation of the sample grid
            if (deg == 90) out.at(in.width - 1 - c, r) = in.at(r, c);
            else if (deg == 180) out.at(in.height - 1 - r, in.width - 1 - c) = in.at(r, c);
            else out.at(c, in.height - 1 - r) = in.at(r, c);
        }
    return out;
}

void flip_horizontal(RasterGrid& g) {
    for (std::size_t r = 0; r < g.height; ++r)
        for (std::size_t c = 0; c < g.width / 2; ++c)
            std::swap(g.at(r, c), g.at(r, g.width - 1 - c));
}

void flip_vertical(RasterGrid& g) {
    for (std::size_t r = 0; r < g.height / 2; ++r)
        for (std::size_t c = 0; c < g.width; ++c)
            std::swap(g.at(r, c), g.at(g.height - 1 - r, c));
}

void normalize_payload(Payload& payload, const NormalizationStats& stats) {
    if (stats.empty()) return;
    if (std::holds_alternative<RasterGrid>(payload)) {
        auto& grid = std::get<RasterGrid>(payload);
        const double m = stats.mean[0];
        const double s = stats.stddev[0];
        for (double& v : grid.values) v = (v - m) / s;
    } else {
        auto& x = std::get<std::vector<double>>(payload);
        if (x.size() != stats.mean.size())
            throw InvalidInputError("normalization stats dimension mismatch");
        for (std::size_t j = 0; j < x.size(); ++j)
            x[j] = (x[j] - stats.mean[j]) / stats.stddev[j];
    }
}

struct CropGeometry {
    RasterGrid resized;
    std::size_t max_top = 0;
    std::size_t max_left = 0;
};

CropGeometry prepare_crop(const RasterGrid& grid, const AugmentationPolicy& policy) {
    CropGeometry geo;
    geo.resized = resize_to_height(grid, policy.resize_height);
    if (policy.crop_size == 0) return geo;
    if (geo.resized.height < policy.crop_size || geo.resized.width < policy.crop_size)
        throw ConfigError("payload smaller than crop size after resize");
    geo.max_top = geo.resized.height - policy.crop_size;
    geo.max_left = geo.resized.width - policy.crop_size;
    return geo;
}

Example transform_raster(const Example& example, const AugmentationPolicy& policy,
                         RngStream* rng, bool random_crop) {
    Example out = example;
    const auto& grid = std::get<RasterGrid>(example.payload);
    CropGeometry geo = prepare_crop(grid, policy);

    RasterGrid view = std::move(geo.resized);
    if (policy.crop_size > 0) {
        std::size_t top = geo.max_top / 2;
        std::size_t left = geo.max_left / 2;
        if (random_crop) {
            if (geo.max_top > 0) top = rng->uniform_below(geo.max_top + 1);
            if (geo.max_left > 0) left = rng->uniform_below(geo.max_left + 1);
        }
        view = crop(view, top, left, policy.crop_size);
    }

    if (rng != nullptr) {
        if (policy.rotations_deg.size() > 1) {
            const auto pick = rng->uniform_below(policy.rotations_deg.size());
            view = rotate(view, policy.rotations_deg[pick]);
        } else if (!policy.rotations_deg.empty()) {
            view = rotate(view, policy.rotations_deg.front());
        }
        if (rng->bernoulli(policy.hflip_prob)) flip_horizontal(view);
        if (rng->bernoulli(policy.vflip_prob)) flip_vertical(view);
    }

    out.payload = std::move(view);
    normalize_payload(out.payload, policy.stats);
    return out;
}

Example transform_vector(const Example& example, const AugmentationPolicy& policy,
                         RngStream* rng, bool with_feature_drop) {
    Example out = example;
    auto x = std::get<std::vector<double>>(example.payload);
    if (rng != nullptr && policy.noise_scale > 0.0)
        for (double& v : x) v += policy.noise_scale * rng->normal();
    if (rng != nullptr && with_feature_drop && policy.feature_drop_prob > 0.0)
        for (double& v : x)
            if (rng->bernoulli(policy.feature_drop_prob)) v = 0.0;
    out.payload = std::move(x);
    normalize_payload(out.payload, policy.stats);
    return out;
}

void check_kind(const AugmentationPolicy& policy, AugmentKind expected, const char* op) {
    if (policy.kind != expected)
        throw InvalidParameterError(std::string(op) + ": policy kind mismatch");
}

}  // namespace

void validate_policy(const AugmentationPolicy& policy) {
    for (int deg : policy.rotations_deg)
        if (!right_angle(deg)) throw ConfigError("rotations must be right angles");
    if (policy.hflip_prob < 0.0 || policy.hflip_prob > 1.0 || policy.vflip_prob < 0.0 ||
        policy.vflip_prob > 1.0)
        throw ConfigError("flip probabilities must lie in [0, 1]");
    if (policy.noise_scale < 0.0) throw ConfigError("noise scale must be non-negative");
    if (policy.feature_drop_prob < 0.0 || policy.feature_drop_prob > 1.0)
        throw ConfigError("feature drop probability must lie in [0, 1]");
    if (policy.resize_height > 0 && policy.crop_size > policy.resize_height)
        throw ConfigError("crop size exceeds resize target");
    if (policy.kind == AugmentKind::eval) {
        const bool stochastic = policy.rotations_deg.size() > 1 || policy.hflip_prob > 0.0 ||
                                policy.vflip_prob > 0.0 || policy.noise_scale > 0.0 ||
                                policy.feature_drop_prob > 0.0;
        if (stochastic) throw ConfigError("eval policy must be deterministic");
    }
    if (policy.kind == AugmentKind::weak && policy.feature_drop_prob > 0.0)
        throw ConfigError("feature dropout belongs to the strong policy");
}

void validate_policy_pair(const AugmentationPolicy& weak, const AugmentationPolicy& strong) {
    validate_policy(weak);
    validate_policy(strong);
    if (weak.kind != AugmentKind::weak || strong.kind != AugmentKind::strong)
        throw ConfigError("policy pair must be (weak, strong)");
    if (strong.noise_scale < weak.noise_scale)
        throw ConfigError("strong noise must be at least the weak noise");
    if (strong.crop_size != weak.crop_size || strong.resize_height != weak.resize_height)
        throw ConfigError("weak and strong must share crop geometry");
}

Example weak_augment(const Example& example, const AugmentationPolicy& policy,
                     RngStream& rng) {
    check_kind(policy, AugmentKind::weak, "weak_augment");
    if (is_raster(example.payload))
        return transform_raster(example, policy, &rng, /*random_crop=*/false);
    return transform_vector(example, policy, &rng, /*with_feature_drop=*/false);
}

Example strong_augment(const Example& example, const AugmentationPolicy& policy,
                       RngStream& rng) {
    check_kind(policy, AugmentKind::strong, "strong_augment");
    if (is_raster(example.payload))
        return transform_raster(example, policy, &rng, /*random_crop=*/true);
    return transform_vector(example, policy, &rng, /*with_feature_drop=*/true);
}

Example eval_transform(const Example& example, const AugmentationPolicy& policy) {
    check_kind(policy, AugmentKind::eval, "eval_transform");
    if (is_raster(example.payload))
        return transform_raster(example, policy, nullptr, /*random_crop=*/false);
    return transform_vector(example, policy, nullptr, /*with_feature_drop=*/false);
}

NormalizationStats fit_normalizer(const std::vector<Example>& pool) {
    if (pool.empty()) throw ConfigError("fit_normalizer: empty pool");
    NormalizationStats stats;
    if (is_raster(pool.front().payload)) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (const Example& e : pool) {
            const auto& grid = std::get<RasterGrid>(e.payload);
            for (double v : grid.values) {
                sum += v;
                sq += v * v;
            }
            n += grid.values.size();
        }
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
        stats.mean = {mean};
        stats.stddev = {std::max(std::sqrt(var), kStdFloor)};
        return stats;
    }

    const auto dim = std::get<std::vector<double>>(pool.front().payload).size();
    std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
    for (const Example& e : pool) {
        const auto& x = std::get<std::vector<double>>(e.payload);
        if (x.size() != dim) throw InvalidInputError("fit_normalizer: ragged dimensions");
        for (std::size_t j = 0; j < dim; ++j) {
            sum[j] += x[j];
            sq[j] += x[j] * x[j];
        }
    }
    stats.mean.resize(dim);
    stats.stddev.resize(dim);
    const double n = static_cast<double>(pool.size());
    for (std::size_t j = 0; j < dim; ++j) {
        stats.mean[j] = sum[j] / n;
        const double var = std::max(0.0, sq[j] / n - stats.mean[j] * stats.mean[j]);
        stats.stddev[j] = std::max(std::sqrt(var), kStdFloor);
    }
    return stats;
}

std::size_t augmented_dim(const Example& example, const AugmentationPolicy& policy) {
    if (!is_raster(example.payload))
        return std::get<std::vector<double>>(example.payload).size();
    if (policy.crop_size > 0) return policy.crop_size * policy.crop_size;
    const auto& grid = std::get<RasterGrid>(example.payload);
    if (policy.resize_height == 0) return grid.height * grid.width;
    const auto w = static_cast<std::size_t>(std::max<long>(
        1, std::lround(static_cast<double>(policy.resize_height) *
                       static_cast<double>(grid.width) / static_cast<double>(grid.height))));
    return policy.resize_height * w;
}

}  // namespace sskd
