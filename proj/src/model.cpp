#include "sskd/model.hpp"

#include <algorithm>
#include <cmath>

#include "sskd/errors.hpp"

namespace sskd {

namespace {

std::uint64_t stamp_mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

// ---------------------------------------------------------------------------

class DenseLayer final : public Layer {
public:
    DenseLayer(std::size_t in, std::size_t out) : weight_(in, out), bias_(1, out) {}

    Matrix forward(const Matrix& x, RunMode, RngStream*, LayerCache& cache) const override {
        if (x.cols != weight_.rows)
            throw InvalidInputError("dense layer: input width mismatch");
        cache.input = x;
        Matrix y = matmul(x, weight_);
        add_row_to_each(y, bias_);
        return y;
    }

    Matrix backward(const Matrix& dy, const LayerCache& cache,
                    std::vector<Matrix>& grads_out) const override {
        grads_out.push_back(matmul_at_b(cache.input, dy));
        grads_out.push_back(column_sums(dy));
        return matmul_a_bt(dy, weight_);
    }

    std::vector<Matrix*> parameters() override { return {&weight_, &bias_}; }
    std::vector<const Matrix*> parameters() const override { return {&weight_, &bias_}; }
    std::size_t fan_in() const override { return weight_.rows; }

    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<DenseLayer>(*this);
    }

    std::uint64_t shape_stamp() const override {
        return stamp_mix(stamp_mix(1, weight_.rows), weight_.cols);
    }

private:
    Matrix weight_;  // [in x out]
    Matrix bias_;    // [1 x out]
};

class ReluLayer final : public Layer {
public:
    Matrix forward(const Matrix& x, RunMode, RngStream*, LayerCache& cache) const override {
        cache.input = x;
        Matrix y = x;
        for (double& v : y.values) v = v > 0.0 ? v : 0.0;
        return y;
    }

    Matrix backward(const Matrix& dy, const LayerCache& cache,
                    std::vector<Matrix>&) const override {
        Matrix dx = dy;
        for (std::size_t i = 0; i < dx.values.size(); ++i)
            if (cache.input.values[i] <= 0.0) dx.values[i] = 0.0;
        return dx;
    }

    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<ReluLayer>(*this);
    }

    std::uint64_t shape_stamp() const override { return 2; }
};

class DropoutLayer final : public Layer {
public:
    explicit DropoutLayer(double rate) : rate_(rate) {}

    Matrix forward(const Matrix& x, RunMode mode, RngStream* rng,
                   LayerCache& cache) const override {
        if (mode == RunMode::eval || rate_ == 0.0) return x;
        if (rng == nullptr)
            throw InvalidInputError("dropout in train mode needs an rng stream");
        const double keep = 1.0 - rate_;
        cache.mask = Matrix(x.rows, x.cols);
        Matrix y = x;
        for (std::size_t i = 0; i < y.values.size(); ++i) {
            const double m = rng->uniform() < keep ? 1.0 / keep : 0.0;
            cache.mask.values[i] = m;
            y.values[i] *= m;
        }
        return y;
    }

    Matrix backward(const Matrix& dy, const LayerCache& cache,
                    std::vector<Matrix>&) const override {
        if (cache.mask.values.empty()) return dy;  // eval-mode or rate-0 pass
        Matrix dx = dy;
        for (std::size_t i = 0; i < dx.values.size(); ++i)
            dx.values[i] *= cache.mask.values[i];
        return dx;
    }

    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<DropoutLayer>(*this);
    }

    std::uint64_t shape_stamp() const override { return 3; }

private:
    double rate_;
};

// 3x3 convolution, stride 1, zero padding 1; rows are packed [channels, h, w].
class Conv3x3Layer final : public Layer {
public:
    Conv3x3Layer(std::size_t in_c, std::size_t out_c, std::size_t h, std::size_t w)
        : in_c_(in_c), out_c_(out_c), h_(h), w_(w),
          weight_(out_c, in_c * 9), bias_(1, out_c) {}

    Matrix forward(const Matrix& x, RunMode, RngStream*, LayerCache& cache) const override {
        if (x.cols != in_c_ * h_ * w_)
            throw InvalidInputError("conv layer: input width mismatch");
        cache.input = x;
        Matrix y(x.rows, out_c_ * h_ * w_);
        for (std::size_t n = 0; n < x.rows; ++n) {
            const double* in = x.values.data() + n * x.cols;
            double* out = y.values.data() + n * y.cols;
            for (std::size_t oc = 0; oc < out_c_; ++oc) {
                const double* wrow = weight_.values.data() + oc * weight_.cols;
                const double b = bias_.values[oc];
                for (std::size_t yy = 0; yy < h_; ++yy)
                    for (std::size_t xx = 0; xx < w_; ++xx) {
                        double acc = b;
                        for (std::size_t ic = 0; ic < in_c_; ++ic)
                            for (int dy = -1; dy <= 1; ++dy)
                                for (int dx = -1; dx <= 1; ++dx) {
                                    const long sy = static_cast<long>(yy) + dy;
                                    const long sx = static_cast<long>(xx) + dx;
                                    if (sy < 0 || sy >= static_cast<long>(h_) || sx < 0 ||
                                        sx >= static_cast<long>(w_))
                                        continue;
                                    acc += wrow[ic * 9 +
                                                static_cast<std::size_t>((dy + 1) * 3 +
                                                                         (dx + 1))] *
                                           in[ic * h_ * w_ +
                                              static_cast<std::size_t>(sy) * w_ +
                                              static_cast<std::size_t>(sx)];
                                }
                        out[oc * h_ * w_ + yy * w_ + xx] = acc;
                    }
            }
        }
        return y;
    }

    Matrix backward(const Matrix& dy, const LayerCache& cache,
                    std::vector<Matrix>& grads_out) const override {
        const Matrix& x = cache.input;
        Matrix gw(weight_.rows, weight_.cols);
        Matrix gb(1, out_c_);
        Matrix dx(x.rows, x.cols);
        for (std::size_t n = 0; n < x.rows; ++n) {
            const double* in = x.values.data() + n * x.cols;
            const double* dout = dy.values.data() + n * dy.cols;
            double* din = dx.values.data() + n * dx.cols;
            for (std::size_t oc = 0; oc < out_c_; ++oc) {
                const double* wrow = weight_.values.data() + oc * weight_.cols;
                double* gwrow = gw.values.data() + oc * gw.cols;
                for (std::size_t yy = 0; yy < h_; ++yy)
                    for (std::size_t xx = 0; xx < w_; ++xx) {
                        const double g = dout[oc * h_ * w_ + yy * w_ + xx];
                        if (g == 0.0) continue;
                        gb.values[oc] += g;
                        for (std::size_t ic = 0; ic < in_c_; ++ic)
                            for (int ddy = -1; ddy <= 1; ++ddy)
                                for (int ddx = -1; ddx <= 1; ++ddx) {
                                    const long sy = static_cast<long>(yy) + ddy;
                                    const long sx = static_cast<long>(xx) + ddx;
                                    if (sy < 0 || sy >= static_cast<long>(h_) || sx < 0 ||
                                        sx >= static_cast<long>(w_))
                                        continue;
                                    const std::size_t widx =
                                        ic * 9 + static_cast<std::size_t>((ddy + 1) * 3 +
                                                                          (ddx + 1));
                                    const std::size_t iidx =
                                        ic * h_ * w_ + static_cast<std::size_t>(sy) * w_ +
                                        static_cast<std::size_t>(sx);
                                    gwrow[widx] += g * in[iidx];
                                    din[iidx] += g * wrow[widx];
                                }
                    }
            }
        }
        grads_out.push_back(std::move(gw));
        grads_out.push_back(std::move(gb));
        return dx;
    }

    std::vector<Matrix*> parameters() override { return {&weight_, &bias_}; }
    std::vector<const Matrix*> parameters() const override { return {&weight_, &bias_}; }
    std::size_t fan_in() const override { return weight_.cols; }  // in_c * 9

    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<Conv3x3Layer>(*this);
    }

    std::uint64_t shape_stamp() const override {
        return stamp_mix(stamp_mix(stamp_mix(stamp_mix(4, in_c_), out_c_), h_), w_);
    }

private:
    std::size_t in_c_, out_c_, h_, w_;
    Matrix weight_;  // [out_c x in_c*9]
    Matrix bias_;    // [1 x out_c]
};

// 2x2 max pooling, stride 2; ties resolve to the first element in scan order.
class MaxPool2Layer final : public Layer {
public:
    MaxPool2Layer(std::size_t channels, std::size_t h, std::size_t w)
        : c_(channels), h_(h), w_(w) {
        if (h % 2 != 0 || w % 2 != 0)
            throw ConfigError("maxpool input dimensions must be even");
    }

    Matrix forward(const Matrix& x, RunMode, RngStream*, LayerCache& cache) const override {
        if (x.cols != c_ * h_ * w_)
            throw InvalidInputError("maxpool layer: input width mismatch");
        const std::size_t oh = h_ / 2, ow = w_ / 2;
        Matrix y(x.rows, c_ * oh * ow);
        cache.argmax.assign(y.values.size(), 0);
        cache.input = Matrix(x.rows, x.cols);  // shape carrier for backward
        for (std::size_t n = 0; n < x.rows; ++n) {
            const double* in = x.values.data() + n * x.cols;
            double* out = y.values.data() + n * y.cols;
            for (std::size_t ch = 0; ch < c_; ++ch)
                for (std::size_t yy = 0; yy < oh; ++yy)
                    for (std::size_t xx = 0; xx < ow; ++xx) {
                        std::size_t best = ch * h_ * w_ + (2 * yy) * w_ + 2 * xx;
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const std::size_t idx =
                                    ch * h_ * w_ +
                                    (2 * yy + static_cast<std::size_t>(dy)) * w_ + 2 * xx +
                                    static_cast<std::size_t>(dx);
                                if (in[idx] > in[best]) best = idx;
                            }
                        const std::size_t o = ch * oh * ow + yy * ow + xx;
                        out[o] = in[best];
                        cache.argmax[n * y.cols + o] = best;
                    }
        }
        return y;
    }

    Matrix backward(const Matrix& dy, const LayerCache& cache,
                    std::vector<Matrix>&) const override {
        Matrix dx(cache.input.rows, cache.input.cols);
        for (std::size_t n = 0; n < dy.rows; ++n)
            for (std::size_t o = 0; o < dy.cols; ++o)
                dx.values[n * dx.cols + cache.argmax[n * dy.cols + o]] +=
                    dy.values[n * dy.cols + o];
        return dx;
    }

    std::unique_ptr<Layer> clone() const override {
        return std::make_unique<MaxPool2Layer>(*this);
    }

    std::uint64_t shape_stamp() const override {
        return stamp_mix(stamp_mix(stamp_mix(5, c_), h_), w_);
    }

private:
    std::size_t c_, h_, w_;
};

void init_layer_params(Layer& layer, double weight_std, RngStream& rng) {
    auto params = layer.parameters();
    if (params.empty()) return;
    Matrix* w = params[0];
    for (double& v : w->values) v = weight_std * rng.normal();
    // params[1] is the bias; it stays zero.
}

}  // namespace

void ModelSpec::validate() const {
    if (num_classes < 2) throw ConfigError("model spec: need at least two classes");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ConfigError("model spec: dropout rate must lie in [0, 1)");
    for (std::size_t w : hidden_widths)
        if (w == 0) throw ConfigError("model spec: zero-width hidden layer");
    if (kind == ModelKind::mlp) {
        if (input_dim == 0) throw ConfigError("model spec: input dimension must be positive");
    } else {
        if (input_height == 0 || input_width == 0)
            throw ConfigError("model spec: raster input needs height and width");
        if (input_height % 4 != 0 || input_width % 4 != 0)
            throw ConfigError("model spec: conv variant needs dimensions divisible by 4");
        if (conv_channels[0] == 0 || conv_channels[1] == 0)
            throw ConfigError("model spec: conv channel counts must be positive");
        if (hidden_widths.empty())
            throw ConfigError("model spec: conv variant needs a dense hidden layer");
    }
}

std::size_t ModelSpec::flat_input_dim() const {
    return kind == ModelKind::mlp ? input_dim : input_height * input_width;
}

ClassifierModel::ClassifierModel(const ClassifierModel& other) : spec(other.spec) {
    layers.reserve(other.layers.size());
    for (const auto& l : other.layers) layers.push_back(l->clone());
}

ClassifierModel& ClassifierModel::operator=(const ClassifierModel& other) {
    if (this == &other) return *this;
    spec = other.spec;
    layers.clear();
    layers.reserve(other.layers.size());
    for (const auto& l : other.layers) layers.push_back(l->clone());
    return *this;
}

std::vector<Matrix*> ClassifierModel::parameters() {
    std::vector<Matrix*> out;
    for (auto& l : layers)
        for (Matrix* p : l->parameters()) out.push_back(p);
    return out;
}

std::vector<const Matrix*> ClassifierModel::parameters() const {
    std::vector<const Matrix*> out;
    for (const auto& l : layers)
        for (const Matrix* p : l->parameters()) out.push_back(p);
    return out;
}

std::size_t ClassifierModel::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* p : parameters()) n += p->size();
    return n;
}

std::uint64_t ClassifierModel::structure_signature() const {
    std::uint64_t h = 0x811c9dc5u;
    for (const auto& l : layers) h = stamp_mix(h, l->shape_stamp());
    return h;
}

ClassifierModel init_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ClassifierModel model;
    model.spec = spec;

    std::size_t dense_in = spec.flat_input_dim();
    if (spec.kind == ModelKind::conv) {
        const std::size_t h = spec.input_height, w = spec.input_width;
        model.layers.push_back(
            std::make_unique<Conv3x3Layer>(1, spec.conv_channels[0], h, w));
        model.layers.push_back(std::make_unique<ReluLayer>());
        model.layers.push_back(
            std::make_unique<MaxPool2Layer>(spec.conv_channels[0], h, w));
        model.layers.push_back(std::make_unique<Conv3x3Layer>(
            spec.conv_channels[0], spec.conv_channels[1], h / 2, w / 2));
        model.layers.push_back(std::make_unique<ReluLayer>());
        model.layers.push_back(
            std::make_unique<MaxPool2Layer>(spec.conv_channels[1], h / 2, w / 2));
        dense_in = spec.conv_channels[1] * (h / 4) * (w / 4);
    }
    for (std::size_t width : spec.hidden_widths) {
        model.layers.push_back(std::make_unique<DenseLayer>(dense_in, width));
        model.layers.push_back(std::make_unique<ReluLayer>());
        dense_in = width;
    }
    model.layers.push_back(std::make_unique<DropoutLayer>(spec.dropout_rate));
    model.layers.push_back(std::make_unique<DenseLayer>(dense_in, spec.num_classes));

    RngStream root(seed, RngStream::hash_tag("model_init"));
    std::size_t param_layer = 0;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        auto params = model.layers[i]->parameters();
        if (params.empty()) continue;
        const std::size_t fan_in = std::max<std::size_t>(1, model.layers[i]->fan_in());
        const bool is_classifier = i + 1 == model.layers.size();
        // He scaling in front of rectifiers, plain 1/fan_in for the classifier.
        const double std_dev = std::sqrt((is_classifier ? 1.0 : 2.0) /
                                         static_cast<double>(fan_in));
        RngStream layer_rng = root.substream("layer", param_layer);
        init_layer_params(*model.layers[i], std_dev, layer_rng);
        ++param_layer;
    }
    return model;
}

std::pair<Matrix, ForwardCache> forward(const ClassifierModel& model, const Matrix& batch,
                                        RunMode mode, RngStream* rng) {
    if (batch.cols != model.spec.flat_input_dim())
        throw InvalidInputError("forward: batch width does not match model input");
    if (!all_finite(batch)) throw InvalidInputError("forward: non-finite input");
    ForwardCache cache;
    cache.batch = batch.rows;
    cache.signature = model.structure_signature();
    cache.layers.resize(model.layers.size());
    Matrix x = batch;
    for (std::size_t i = 0; i < model.layers.size(); ++i)
        x = model.layers[i]->forward(x, mode, rng, cache.layers[i]);
    return {std::move(x), std::move(cache)};
}

std::vector<Matrix> backward(const ClassifierModel& model, const ForwardCache& cache,
                             const Matrix& dlogits) {
    if (cache.signature != model.structure_signature() ||
        cache.layers.size() != model.layers.size())
        throw InvalidStateError("backward: cache does not match this model");
    if (dlogits.rows != cache.batch || dlogits.cols != model.spec.num_classes)
        throw InvalidStateError("backward: dlogits shape does not match cached batch");

    // Per-layer gradients are collected back-to-front, then reversed to line
    // up with parameters() order.
    std::vector<Matrix> reversed;
    Matrix dy = dlogits;
    for (std::size_t i = model.layers.size(); i-- > 0;) {
        std::vector<Matrix> grads;
        dy = model.layers[i]->backward(dy, cache.layers[i], grads);
        for (std::size_t g = grads.size(); g-- > 0;) reversed.push_back(std::move(grads[g]));
    }
    return {reversed.rbegin(), reversed.rend()};
}

std::vector<double> get_parameters_flat(const ClassifierModel& model) {
    std::vector<double> flat;
    for (const Matrix* p : model.parameters())
        flat.insert(flat.end(), p->values.begin(), p->values.end());
    return flat;
}

void set_parameters_flat(ClassifierModel& model, std::span<const double> flat) {
    std::size_t offset = 0;
    for (Matrix* p : model.parameters()) {
        if (offset + p->size() > flat.size())
            throw InvalidInputError("set_parameters_flat: vector too short");
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                  flat.begin() + static_cast<std::ptrdiff_t>(offset + p->size()),
                  p->values.begin());
        offset += p->size();
    }
    if (offset != flat.size())
        throw InvalidInputError("set_parameters_flat: vector length mismatch");
}

}  // namespace sskd
