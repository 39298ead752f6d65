#include "artdream/artnet/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>

namespace artdream::artnet {

using ndgrid::shape_str;

LayerId LayerId::parse(std::string_view text) {
    std::string_view digits = text;
    if (!digits.empty() && (digits.front() == 'L' || digits.front() == 'l')) digits.remove_prefix(1);
    std::size_t value = 0;
    const auto* end = digits.data() + digits.size();
    const auto [ptr, ec] = std::from_chars(digits.data(), end, value);
    if (digits.empty() || ec != std::errc{} || ptr != end || value == 0) {
        throw ValidationError("unknown layer '" + std::string(text) + "' (expected L1, L2, ...)");
    }
    return LayerId(value);
}

ModelSpec ModelSpec::default_spec(std::size_t num_classes) {
    return chain(3, {16, 32, 64, 128}, num_classes, 3);
}

ModelSpec ModelSpec::chain(std::size_t in_channels, const std::vector<std::size_t>& widths,
                           std::size_t num_classes, std::size_t kernel) {
    ModelSpec spec;
    spec.num_classes = num_classes;
    std::size_t in = in_channels;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        spec.blocks.push_back({in, widths[i], kernel, i + 1 < widths.size()});
        in = widths[i];
    }
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    if (blocks.empty()) throw ValidationError("model spec: at least one block required");
    if (num_classes < 2) throw ValidationError("model spec: need at least 2 classes");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        if (b.in_channels == 0 || b.out_channels == 0) throw ValidationError("model spec: zero channel count");
        if (b.kernel % 2 == 0) throw ValidationError("model spec: kernel extents must be odd");
        if (i > 0 && b.in_channels != blocks[i - 1].out_channels) {
            throw ValidationError("model spec: block " + std::to_string(i + 1) + " expects " +
                                  std::to_string(b.in_channels) + " channels, previous block emits " +
                                  std::to_string(blocks[i - 1].out_channels));
        }
    }
}

void ModelSpec::require_layer(LayerId layer) const {
    if (layer.index() == 0 || layer.index() > blocks.size()) {
        throw ValidationError("unknown layer " + layer.name() + " (model has " + std::to_string(blocks.size()) +
                              " layers)");
    }
}

std::size_t ModelSpec::reduction_at(LayerId layer) const {
    require_layer(layer);
    std::size_t factor = 1;
    for (std::size_t i = 0; i < layer.index(); ++i) {
        if (blocks[i].pool) factor *= 2;
    }
    return factor;
}

Shape ModelSpec::layer_shape(LayerId layer, std::size_t height, std::size_t width) const {
    const std::size_t f = reduction_at(layer);
    if (height % f != 0 || width % f != 0) {
        throw ShapeError("input " + std::to_string(height) + "x" + std::to_string(width) +
                         " is not divisible by " + std::to_string(f) + " as required for " + layer.name());
    }
    return {blocks[layer.index() - 1].out_channels, height / f, width / f};
}

template <typename T>
ModelSpec Weights<T>::infer_spec() const {
    if (convs.empty()) throw FormatError("weights: no convolution blocks");
    if (fc_weights.rank() != 2 || fc_bias.rank() != 1) throw FormatError("weights: classifier tensors malformed");
    ModelSpec spec;
    spec.num_classes = fc_weights.dim(0);
    for (std::size_t i = 0; i < convs.size(); ++i) {
        const auto& w = convs[i].weights;
        if (w.rank() != 4 || convs[i].bias.rank() != 1) throw FormatError("weights: conv tensor rank mismatch");
        if (w.dim(2) != w.dim(3)) throw FormatError("weights: non-square kernel");
        spec.blocks.push_back({w.dim(1), w.dim(0), w.dim(2), i + 1 < convs.size()});
    }
    return spec;
}

template <typename T>
std::vector<const BasicTensor<T>*> Weights<T>::tensors() const {
    std::vector<const BasicTensor<T>*> out;
    for (const auto& c : convs) {
        out.push_back(&c.weights);
        out.push_back(&c.bias);
    }
    out.push_back(&fc_weights);
    out.push_back(&fc_bias);
    return out;
}

template <typename T>
std::vector<BasicTensor<T>*> Weights<T>::tensors() {
    std::vector<BasicTensor<T>*> out;
    for (auto& c : convs) {
        out.push_back(&c.weights);
        out.push_back(&c.bias);
    }
    out.push_back(&fc_weights);
    out.push_back(&fc_bias);
    return out;
}

template <typename T>
Model<T>::Model(ModelSpec spec, Weights<T> weights) : spec_(std::move(spec)), weights_(std::move(weights)) {
    spec_.validate();
    if (weights_.convs.size() != spec_.blocks.size()) {
        throw ShapeError("model: " + std::to_string(weights_.convs.size()) + " conv tensors for " +
                         std::to_string(spec_.blocks.size()) + " blocks");
    }
    for (std::size_t i = 0; i < spec_.blocks.size(); ++i) {
        const auto& b = spec_.blocks[i];
        auto& c = weights_.convs[i];
        c.validate();
        if (c.weights.shape() != Shape{b.out_channels, b.in_channels, b.kernel, b.kernel}) {
            throw ShapeError("model: block " + std::to_string(i + 1) + " weights " + shape_str(c.weights.shape()) +
                             " do not match spec");
        }
        c.stride = 1;
        c.padding = b.kernel / 2;
    }
    const std::size_t features = spec_.blocks.back().out_channels;
    if (weights_.fc_weights.shape() != Shape{spec_.num_classes, features} ||
        weights_.fc_bias.shape() != Shape{spec_.num_classes}) {
        throw ShapeError("model: classifier shape " + shape_str(weights_.fc_weights.shape()) +
                         " does not match spec");
    }
}

template <typename T>
Model<T> Model<T>::random(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Weights<T> w;
    for (const auto& b : spec.blocks) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(b.in_channels * b.kernel * b.kernel));
        std::vector<T> values(b.out_channels * b.in_channels * b.kernel * b.kernel);
        for (auto& v : values) v = static_cast<T>(normal(rng) * stddev);
        w.convs.push_back({BasicTensor<T>({b.out_channels, b.in_channels, b.kernel, b.kernel}, std::move(values)),
                           BasicTensor<T>({b.out_channels}), 1, b.kernel / 2});
    }
    const std::size_t features = spec.blocks.back().out_channels;
    const double fc_std = std::sqrt(1.0 / static_cast<double>(features));
    std::vector<T> fc(spec.num_classes * features);
    for (auto& v : fc) v = static_cast<T>(normal(rng) * fc_std);
    w.fc_weights = BasicTensor<T>({spec.num_classes, features}, std::move(fc));
    w.fc_bias = BasicTensor<T>({spec.num_classes});
    return Model(spec, std::move(w));
}

template <typename T>
Model<T> Model<T>::from_weights(Weights<T> weights) {
    auto spec = weights.infer_spec();
    return Model(std::move(spec), std::move(weights));
}

template <typename T>
void Model<T>::check_input(const BasicTensor<T>& image, LayerId layer) const {
    image.require_rank(3, "model input");
    if (image.dim(0) != spec_.blocks.front().in_channels) {
        throw ShapeError("model input has " + std::to_string(image.dim(0)) + " channels, expected " +
                         std::to_string(spec_.blocks.front().in_channels));
    }
    (void)spec_.layer_shape(layer, image.dim(1), image.dim(2));
}

template <typename T>
auto Model<T>::trace(const BasicTensor<T>& image, std::size_t blocks) const -> std::vector<BlockTrace> {
    std::vector<BlockTrace> out;
    out.reserve(blocks);
    const BasicTensor<T>* current = &image;
    for (std::size_t i = 0; i < blocks; ++i) {
        BlockTrace t;
        t.conv_input = *current;
        t.pre_activation = ndgrid::conv2d(t.conv_input, weights_.convs[i]);
        auto activated = ndgrid::relu(t.pre_activation);
        if (spec_.blocks[i].pool) {
            t.pooled = ndgrid::maxpool2(activated);
            t.output = t.pooled.output;
        } else {
            t.output = std::move(activated);
        }
        out.push_back(std::move(t));
        current = &out.back().output;
    }
    return out;
}

template <typename T>
BasicTensor<T> Model<T>::backward_blocks(const std::vector<BlockTrace>& tr, BasicTensor<T> upstream,
                                         Weights<T>* param_grads) const {
    for (std::size_t i = tr.size(); i-- > 0;) {
        const auto& t = tr[i];
        if (spec_.blocks[i].pool) upstream = ndgrid::maxpool2_backward(t.pooled, upstream);
        upstream = ndgrid::relu_backward(t.pre_activation, upstream);
        auto g = ndgrid::conv2d_backward(t.conv_input, weights_.convs[i], upstream);
        if (param_grads != nullptr) {
            param_grads->convs[i].weights = std::move(g.weights);
            param_grads->convs[i].bias = std::move(g.bias);
        }
        upstream = std::move(g.input);
    }
    return upstream;
}

template <typename T>
BasicTensor<T> Model<T>::forward_to_layer(const BasicTensor<T>& image, LayerId layer) const {
    check_input(image, layer);
    auto tr = trace(image, layer.index());
    return std::move(tr.back().output);
}

template <typename T>
BasicTensor<T> Model<T>::grad_wrt_input(const BasicTensor<T>& image, LayerId layer,
                                        const BasicTensor<T>& upstream) const {
    check_input(image, layer);
    const auto expected = spec_.layer_shape(layer, image.dim(1), image.dim(2));
    if (upstream.shape() != expected) {
        throw ShapeError("grad_wrt_input: upstream " + shape_str(upstream.shape()) + " vs layer output " +
                         shape_str(expected));
    }
    auto tr = trace(image, layer.index());
    return backward_blocks(tr, upstream, nullptr);
}

namespace {

template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
    const T peak = *std::max_element(logits.begin(), logits.end());
    std::vector<T> p(logits.size());
    T total{0};
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - peak);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

}  // namespace

template <typename T>
std::vector<T> Model<T>::classify(const BasicTensor<T>& image) const {
    const LayerId last(spec_.blocks.size());
    check_input(image, last);
    auto tr = trace(image, last.index());
    const auto& a = tr.back().output;
    const std::size_t feats = a.dim(0), plane = a.dim(1) * a.dim(2);
    std::vector<T> pooled(feats);
    for (std::size_t c = 0; c < feats; ++c) {
        T acc{0};
        for (std::size_t i = 0; i < plane; ++i) acc += a[c * plane + i];
        pooled[c] = acc / static_cast<T>(plane);
    }
    std::vector<T> logits(spec_.num_classes);
    for (std::size_t k = 0; k < spec_.num_classes; ++k) {
        T acc = weights_.fc_bias[k];
        for (std::size_t c = 0; c < feats; ++c) acc += weights_.fc_weights[k * feats + c] * pooled[c];
        logits[k] = acc;
    }
    return softmax(logits);
}

template <typename T>
auto Model<T>::loss_and_gradients(const BasicTensor<T>& image, std::size_t label) const -> LossGradient {
    if (label >= spec_.num_classes) {
        throw ValidationError("label index " + std::to_string(label) + " out of range for " +
                              std::to_string(spec_.num_classes) + " classes");
    }
    const LayerId last(spec_.blocks.size());
    check_input(image, last);
    auto tr = trace(image, last.index());
    const auto& a = tr.back().output;
    const std::size_t feats = a.dim(0), plane = a.dim(1) * a.dim(2);

    std::vector<T> pooled(feats);
    for (std::size_t c = 0; c < feats; ++c) {
        T acc{0};
        for (std::size_t i = 0; i < plane; ++i) acc += a[c * plane + i];
        pooled[c] = acc / static_cast<T>(plane);
    }
    std::vector<T> logits(spec_.num_classes);
    for (std::size_t k = 0; k < spec_.num_classes; ++k) {
        T acc = weights_.fc_bias[k];
        for (std::size_t c = 0; c < feats; ++c) acc += weights_.fc_weights[k * feats + c] * pooled[c];
        logits[k] = acc;
    }
    LossGradient out;
    out.probabilities = softmax(logits);
    out.loss = -std::log(std::max(out.probabilities[label], std::numeric_limits<T>::min()));

    std::vector<T> dlogits = out.probabilities;
    dlogits[label] -= T{1};

    out.gradients.convs.resize(weights_.convs.size());
    out.gradients.fc_weights = BasicTensor<T>(weights_.fc_weights.shape());
    out.gradients.fc_bias = BasicTensor<T>(weights_.fc_bias.shape());
    std::vector<T> dpooled(feats, T{0});
    for (std::size_t k = 0; k < spec_.num_classes; ++k) {
        out.gradients.fc_bias[k] = dlogits[k];
        for (std::size_t c = 0; c < feats; ++c) {
            out.gradients.fc_weights[k * feats + c] = dlogits[k] * pooled[c];
            dpooled[c] += dlogits[k] * weights_.fc_weights[k * feats + c];
        }
    }
    BasicTensor<T> upstream(a.shape());
    for (std::size_t c = 0; c < feats; ++c) {
        const T g = dpooled[c] / static_cast<T>(plane);
        for (std::size_t i = 0; i < plane; ++i) upstream[c * plane + i] = g;
    }
    out.input_gradient = backward_blocks(tr, std::move(upstream), &out.gradients);
    return out;
}

template struct Weights<float>;
template struct Weights<double>;
template class Model<float>;
template class Model<double>;

}  // namespace artdream::artnet
