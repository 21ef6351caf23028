#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sskd/matrix.hpp"
#include "sskd/rng.hpp"

namespace sskd {

enum class ModelKind { mlp, conv };

/// Architecture description. The MLP is the default classifier; the conv
/// variant (two conv3x3+relu+maxpool blocks, then the dense head) handles
/// raster payloads. Both expose identical forward/backward contracts.
struct ModelSpec {
    ModelKind kind = ModelKind::mlp;
    std::size_t input_dim = 0;  // mlp: flattened feature width
    std::size_t input_height = 0;  // conv: raster geometry (single channel)
    std::size_t input_width = 0;
    std::vector<std::size_t> hidden_widths = {64};
    std::size_t num_classes = 0;
    double dropout_rate = 0.5;  // applied before the classification layer
    std::array<std::size_t, 2> conv_channels = {8, 16};

    void validate() const;
    std::size_t flat_input_dim() const;
};

enum class RunMode { train, eval };

struct LayerCache {
    Matrix input;
    Matrix mask;                        // dropout: scaled keep mask
    std::vector<std::size_t> argmax;    // maxpool: winning input offsets
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    std::size_t batch = 0;
    std::uint64_t signature = 0;  // structural stamp of the producing model
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Matrix forward(const Matrix& x, RunMode mode, RngStream* rng,
                           LayerCache& cache) const = 0;
    /// Returns dx; appends parameter gradients (same order as parameters()).
    virtual Matrix backward(const Matrix& dy, const LayerCache& cache,
                            std::vector<Matrix>& grads_out) const = 0;
    virtual std::vector<Matrix*> parameters() { return {}; }
    virtual std::vector<const Matrix*> parameters() const { return {}; }
    virtual std::size_t fan_in() const { return 0; }
    virtual std::unique_ptr<Layer> clone() const = 0;
    virtual std::uint64_t shape_stamp() const = 0;
};

class ClassifierModel {
public:
    ClassifierModel() = default;
    ClassifierModel(const ClassifierModel& other);
    ClassifierModel& operator=(const ClassifierModel& other);
    ClassifierModel(ClassifierModel&&) noexcept = default;
    ClassifierModel& operator=(ClassifierModel&&) noexcept = default;

    ModelSpec spec;
    std::vector<std::unique_ptr<Layer>> layers;

    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
    std::size_t parameter_count() const;
    std::uint64_t structure_signature() const;
};

/// Fan-in-scaled normal init (biases zero), deterministic in the seed.
ClassifierModel init_model(const ModelSpec& spec, std::uint64_t seed);

/// Batch forward pass. Eval mode is deterministic and consumes no randomness;
/// train mode draws dropout masks from `rng` (inverted scaling, so eval needs
/// no rescale). Returns logits [N x C] and the cache backward() requires.
std::pair<Matrix, ForwardCache> forward(const ClassifierModel& model, const Matrix& batch,
                                        RunMode mode, RngStream* rng);

/// Exact reverse-mode gradients for every parameter, aligned with
/// model.parameters(). The cache must come from a forward() on this model.
std::vector<Matrix> backward(const ClassifierModel& model, const ForwardCache& cache,
                             const Matrix& dlogits);

std::vector<double> get_parameters_flat(const ClassifierModel& model);
void set_parameters_flat(ClassifierModel& model, std::span<const double> flat);

}  // namespace sskd
