#pragma once

#include <vector>

#include "sskd/dataset.hpp"
#include "sskd/rng.hpp"

namespace sskd {

/// Per-feature statistics for vector payloads, single global pair for rasters.
/// Standard deviations are floored at 1e-8 so constant features normalize to 0.
struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    bool empty() const { return mean.empty(); }
};

enum class AugmentKind { weak, strong, eval };

/// Parameters of the stochastic transform applied before every forward pass.
///
/// Raster pipeline: aspect-preserving resize to `resize_height`, square crop of
/// `crop_size` (center for weak/eval, uniformly drawn offset for strong), a
/// rotation drawn from `rotations_deg`, horizontal / vertical flips with the
/// given probabilities, then normalization. Eval applies resize + center crop +
/// normalization only.
///
/// Vector pipeline: additive Gaussian noise at `noise_scale`; the strong
/// variant additionally zeroes each feature with `feature_drop_prob` before
/// normalization. Eval normalizes only.
///
/// A transform consumes no randomness when its stochastic knobs are degenerate
/// (single rotation, zero flip probabilities, zero noise, zero drop rate,
/// single valid crop position).
struct AugmentationPolicy {
    AugmentKind kind = AugmentKind::eval;

    // raster geometry
    std::size_t resize_height = 0;  // 0 = keep size
    std::size_t crop_size = 0;      // 0 = no crop
    std::vector<int> rotations_deg = {0};
    double hflip_prob = 0.0;
    double vflip_prob = 0.0;

    // vector analogue
    double noise_scale = 0.0;
    double feature_drop_prob = 0.0;

    NormalizationStats stats;
};

/// Validates internal consistency (eval must be deterministic, crop must fit
/// the resize target, probabilities in [0,1], rotations limited to right
/// angles). Throws ConfigError on violation.
void validate_policy(const AugmentationPolicy& policy);

/// Weak/strong policies are compared pairwise: strong perturbations must
/// dominate weak ones.
void validate_policy_pair(const AugmentationPolicy& weak, const AugmentationPolicy& strong);

Example weak_augment(const Example& example, const AugmentationPolicy& policy,
                     RngStream& rng);
Example strong_augment(const Example& example, const AugmentationPolicy& policy,
                       RngStream& rng);
Example eval_transform(const Example& example, const AugmentationPolicy& policy);

/// Fits normalization statistics on a labeled training pool only.
NormalizationStats fit_normalizer(const std::vector<Example>& pool);

/// Flattened feature width of an example after the policy is applied
/// (crop_size^2 for rasters, payload dimension for vectors).
std::size_t augmented_dim(const Example& example, const AugmentationPolicy& policy);

}  // namespace sskd
