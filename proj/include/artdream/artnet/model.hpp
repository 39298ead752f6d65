#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "artdream/ndgrid/kernels.hpp"
#include "artdream/ndgrid/tensor.hpp"

namespace artdream::artnet {

using ndgrid::BasicTensor;
using ndgrid::KernelParams;
using ndgrid::Shape;

// Dream-target layer: L1..Ln is the output of block n (post-ReLU, post-pool
// when the block pools).
class LayerId {
public:
    constexpr LayerId() = default;
    explicit constexpr LayerId(std::size_t one_based) : index_(one_based) {}

    // Accepts "L3" or "3".
    static LayerId parse(std::string_view text);

    [[nodiscard]] constexpr std::size_t index() const noexcept { return index_; }
    [[nodiscard]] std::string name() const { return "L" + std::to_string(index_); }

    friend constexpr bool operator==(LayerId, LayerId) = default;

private:
    std::size_t index_ = 1;
};

struct BlockSpec {
    std::size_t in_channels = 3;
    std::size_t out_channels = 16;
    std::size_t kernel = 3;
    bool pool = true;

    friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct ModelSpec {
    std::vector<BlockSpec> blocks;
    std::size_t num_classes = 2;

    // B1..B4: conv3x3 3->16->32->64->128, pooling after the first three.
    static ModelSpec default_spec(std::size_t num_classes);
    // Chained conv blocks of the given widths; every block but the last pools.
    static ModelSpec chain(std::size_t in_channels, const std::vector<std::size_t>& widths,
                           std::size_t num_classes, std::size_t kernel = 3);

    void validate() const;
    [[nodiscard]] std::size_t layer_count() const noexcept { return blocks.size(); }
    void require_layer(LayerId layer) const;
    // Factor the input extents must divide by to reach `layer`.
    [[nodiscard]] std::size_t reduction_at(LayerId layer) const;
    [[nodiscard]] std::size_t total_reduction() const { return reduction_at(LayerId(blocks.size())); }
    [[nodiscard]] Shape layer_shape(LayerId layer, std::size_t height, std::size_t width) const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

template <typename T>
struct Weights {
    std::vector<KernelParams<T>> convs;
    BasicTensor<T> fc_weights;  // (classes, features)
    BasicTensor<T> fc_bias;     // (classes)

    // Spec implied by the tensors, using the chain() pooling pattern.
    [[nodiscard]] ModelSpec infer_spec() const;
    [[nodiscard]] std::vector<const BasicTensor<T>*> tensors() const;
    [[nodiscard]] std::vector<BasicTensor<T>*> tensors();

    template <typename U>
    [[nodiscard]] Weights<U> cast() const {
        Weights<U> out;
        for (const auto& c : convs) {
            out.convs.push_back({c.weights.template cast<U>(), c.bias.template cast<U>(), c.stride, c.padding});
        }
        out.fc_weights = fc_weights.template cast<U>();
        out.fc_bias = fc_bias.template cast<U>();
        return out;
    }

    friend bool operator==(const Weights& a, const Weights& b) {
        if (a.convs.size() != b.convs.size()) return false;
        for (std::size_t i = 0; i < a.convs.size(); ++i) {
            if (!(a.convs[i].weights == b.convs[i].weights) || !(a.convs[i].bias == b.convs[i].bias)) return false;
        }
        return a.fc_weights == b.fc_weights && a.fc_bias == b.fc_bias;
    }
};

template <typename T>
class Model {
public:
    Model(ModelSpec spec, Weights<T> weights);

    // He-normal convolutions, zero biases, deterministic per seed.
    static Model random(const ModelSpec& spec, std::uint64_t seed);
    static Model from_weights(Weights<T> weights);

    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const Weights<T>& weights() const noexcept { return weights_; }
    Weights<T>& mutable_weights() noexcept { return weights_; }

    [[nodiscard]] BasicTensor<T> forward_to_layer(const BasicTensor<T>& image, LayerId layer) const;
    [[nodiscard]] BasicTensor<T> grad_wrt_input(const BasicTensor<T>& image, LayerId layer,
                                                const BasicTensor<T>& upstream) const;

    // Softmax over the classifier head; sums to one.
    [[nodiscard]] std::vector<T> classify(const BasicTensor<T>& image) const;

    struct LossGradient {
        T loss{};
        std::vector<T> probabilities;
        Weights<T> gradients;
        BasicTensor<T> input_gradient;
    };
    // Softmax cross-entropy against class `label` with gradients for every
    // parameter and for the input.
    [[nodiscard]] LossGradient loss_and_gradients(const BasicTensor<T>& image, std::size_t label) const;

private:
    struct BlockTrace {
        BasicTensor<T> conv_input;
        BasicTensor<T> pre_activation;
        ndgrid::PoolResult<T> pooled;  // empty when the block does not pool
        BasicTensor<T> output;
    };

    std::vector<BlockTrace> trace(const BasicTensor<T>& image, std::size_t blocks) const;
    BasicTensor<T> backward_blocks(const std::vector<BlockTrace>& trace, BasicTensor<T> upstream,
                                   Weights<T>* param_grads) const;
    void check_input(const BasicTensor<T>& image, LayerId layer) const;

    ModelSpec spec_;
    Weights<T> weights_;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace artdream::artnet
