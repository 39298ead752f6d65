#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "artdream/ndgrid/tensor.hpp"

namespace artdream::ndgrid {

// Convolution parameters. weights: (out_ch, in_ch, kh, kw), bias: (out_ch).
// Kernel extents must be odd so that padding = kh/2 gives "same" output.
template <typename T>
struct KernelParams {
    BasicTensor<T> weights;
    BasicTensor<T> bias;
    std::size_t stride = 1;
    std::size_t padding = 0;

    [[nodiscard]] std::size_t out_channels() const { return weights.dim(0); }
    [[nodiscard]] std::size_t in_channels() const { return weights.dim(1); }
    [[nodiscard]] std::size_t kernel_h() const { return weights.dim(2); }
    [[nodiscard]] std::size_t kernel_w() const { return weights.dim(3); }

    void validate() const;
};

template <typename T>
struct ConvGrads {
    BasicTensor<T> input;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

template <typename T>
struct PoolResult {
    BasicTensor<T> output;
    // Flat index into the input of the winning element of each output window.
    std::vector<std::uint32_t> argmax;
    Shape input_shape;
};

// Cross-correlation (no kernel flip). Output extent (h + 2p - kh) / stride + 1
// must divide exactly.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const KernelParams<T>& params);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const KernelParams<T>& params,
                             const BasicTensor<T>& upstream);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& forward_input, const BasicTensor<T>& upstream);

// 2x2 / stride 2 max pool. Ties go to the smallest row-major index in the window.
template <typename T>
PoolResult<T> maxpool2(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool2_backward(const PoolResult<T>& forward, const BasicTensor<T>& upstream);

// Generic vector-Jacobian dispatch over the fixed layer vocabulary.
enum class OpKind { conv2d, relu, maxpool2 };

template <typename T>
struct SavedState {
    OpKind kind = OpKind::relu;
    BasicTensor<T> input;
    // conv2d only; must outlive the saved state.
    const KernelParams<T>* params = nullptr;
    // maxpool2 only.
    std::vector<std::uint32_t> argmax;
    Shape output_shape;
};

template <typename T>
struct Gradients {
    BasicTensor<T> input;
    BasicTensor<T> weights;  // conv2d only
    BasicTensor<T> bias;     // conv2d only
};

template <typename T>
SavedState<T> save_conv2d(const BasicTensor<T>& input, const KernelParams<T>& params);
template <typename T>
SavedState<T> save_relu(const BasicTensor<T>& input);
template <typename T>
SavedState<T> save_maxpool2(const BasicTensor<T>& input);

template <typename T>
Gradients<T> backward(const SavedState<T>& saved, const BasicTensor<T>& upstream);

}  // namespace artdream::ndgrid
