#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sskd/errors.hpp"
#include "sskd/rng.hpp"

namespace sskd {

/// Single-channel raster payload, values in [0, 1].
struct RasterGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;  // row-major

    double at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
};

using Payload = std::variant<std::vector<double>, RasterGrid>;

inline bool is_raster(const Payload& p) { return std::holds_alternative<RasterGrid>(p); }

/// One sample. `label` is what training may see; `audit_label` keeps the
/// ground truth even after masking so pseudo-label precision can be measured.
/// The audit label never feeds a loss.
struct Example {
    std::string id;
    Payload payload;
    std::optional<int> label;
    std::optional<int> audit_label;
};

struct Dataset {
    std::vector<Example> examples;
    int num_classes = 0;
};

/// Origin of a labeled example: 0 = carried its original label,
/// t > 0 = admitted as a pseudo-label in SSL iteration t.
using OriginTag = int;

/// Labeled / unlabeled pools. `labeled_origin` runs parallel to `labeled`.
/// Pools are value types: expansion builds a new value instead of mutating.
struct DatasetPools {
    std::vector<Example> labeled;
    std::vector<Example> unlabeled;
    std::vector<OriginTag> labeled_origin;
    int num_classes = 0;

    std::vector<std::int64_t> labeled_class_counts() const;
};

struct SplitSpec {
    double train_fraction = 0.7;
    double validation_fraction = 0.1;
    double test_fraction = 0.2;
    double labeled_fraction = 1.0;  // p
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitResult {
    Dataset train;
    Dataset validation;
    Dataset test;
};

/// Per-class split with largest-remainder rounding and at least one example
/// per class in every split whose fraction is positive. Deterministic in
/// spec.seed; the three parts partition the input exactly.
SplitResult stratified_split(const Dataset& dataset, const SplitSpec& spec);

/// Keeps round(p * class size) labels per class (never fewer than one); the
/// rest move to the unlabeled pool with the visible label stripped and the
/// truth retained in audit_label.
DatasetPools mask_labels(const Dataset& train, double labeled_fraction,
                         std::uint64_t seed);

/// Gaussian blob generator. Class centers are drawn as separation * N(0, I);
/// points as center + noise * N(0, I). separation / noise is the separability
/// knob: 0 makes every class indistinguishable, large values make them
/// linearly separable.
struct SyntheticSpec {
    int num_classes = 0;
    std::vector<int> class_counts;
    int dim = 0;
    double separation = 1.0;
    double noise = 1.0;
};

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Class frequencies of the ISIC 2018 corpus, usable as an imbalance profile
/// for the synthetic generator.
std::vector<int> isic2018_class_counts();

/// The standardized 4-class benchmark used by the acceptance suite:
/// counts 600/150/150/100, 16 dimensions, fixed separation and noise.
SyntheticSpec blobs4_spec();
std::uint64_t blobs4_dataset_seed();

/// On-disk formats (documented in docs/formats.md):
///  - vector data: one CSV, metadata line `# sskd-dataset v1 kind=vector
///    classes=C dim=D`, header `id,label,f0..f{D-1}`, doubles at full
///    round-trip precision;
///  - raster data: manifest CSV `id,label,path` with the same metadata line
///    (kind=raster) and 16-bit binary PGM (P5) files next to it.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace sskd
