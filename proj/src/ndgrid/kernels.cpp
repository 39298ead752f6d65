#include "artdream/ndgrid/kernels.hpp"

#include <algorithm>
#include <string>

namespace artdream::ndgrid {

namespace {

struct ConvGeometry {
    std::size_t in_h, in_w, out_h, out_w;
};

template <typename T>
ConvGeometry conv_geometry(const BasicTensor<T>& input, const KernelParams<T>& params) {
    input.require_rank(3, "conv2d input");
    params.validate();
    if (input.dim(0) != params.in_channels()) {
        throw ShapeError("conv2d: input has " + std::to_string(input.dim(0)) + " channels, kernel expects " +
                         std::to_string(params.in_channels()));
    }
    const std::size_t h = input.dim(1), w = input.dim(2);
    const std::size_t kh = params.kernel_h(), kw = params.kernel_w();
    const std::size_t ph = h + 2 * params.padding, pw = w + 2 * params.padding;
    if (ph < kh || pw < kw) {
        throw ShapeError("conv2d: input " + shape_str(input.shape()) + " smaller than kernel after padding");
    }
    if ((ph - kh) % params.stride != 0 || (pw - kw) % params.stride != 0) {
        throw ShapeError("conv2d: output extent is not exact for input " + shape_str(input.shape()) +
                         " with stride " + std::to_string(params.stride));
    }
    return {h, w, (ph - kh) / params.stride + 1, (pw - kw) / params.stride + 1};
}

// Output columns [lo, hi) whose tap at kernel column k lands inside the input row.
struct Span1D {
    std::size_t lo, hi;
};

Span1D valid_outputs(std::size_t k, std::size_t pad, std::size_t stride, std::size_t in_len,
                     std::size_t out_len) {
    // need 0 <= o*stride + k - pad < in_len
    std::size_t lo = 0;
    if (pad > k) lo = (pad - k + stride - 1) / stride;
    if (in_len + pad <= k) return {0, 0};
    std::size_t hi = (in_len + pad - k - 1) / stride + 1;
    hi = std::min(hi, out_len);
    if (lo >= hi) return {0, 0};
    return {lo, hi};
}

}  // namespace

template <typename T>
void KernelParams<T>::validate() const {
    if (weights.empty() || bias.empty()) throw ShapeError("kernel params: missing weights or bias");
    weights.require_rank(4, "kernel weights");
    bias.require_rank(1, "kernel bias");
    if (bias.dim(0) != weights.dim(0)) {
        throw ShapeError("kernel params: bias length " + std::to_string(bias.dim(0)) + " vs " +
                         std::to_string(weights.dim(0)) + " output channels");
    }
    if (weights.dim(2) % 2 == 0 || weights.dim(3) % 2 == 0) {
        throw ShapeError("kernel params: kernel extents must be odd, got " + shape_str(weights.shape()));
    }
    if (stride == 0) throw ShapeError("kernel params: stride must be positive");
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const KernelParams<T>& params) {
    const auto g = conv_geometry(input, params);
    const std::size_t oc_n = params.out_channels(), ic_n = params.in_channels();
    const std::size_t kh = params.kernel_h(), kw = params.kernel_w();
    const std::size_t s = params.stride, p = params.padding;

    BasicTensor<T> out({oc_n, g.out_h, g.out_w});
    const T* in = input.data().data();
    const T* wt = params.weights.data().data();
    T* o = out.data().data();
    const std::size_t plane = g.out_h * g.out_w;

    for (std::size_t oc = 0; oc < oc_n; ++oc) {
        T* op = o + oc * plane;
        std::fill(op, op + plane, params.bias[oc]);
        for (std::size_t ic = 0; ic < ic_n; ++ic) {
            const T* ip = in + ic * g.in_h * g.in_w;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const auto rows = valid_outputs(ky, p, s, g.in_h, g.out_h);
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const auto cols = valid_outputs(kx, p, s, g.in_w, g.out_w);
                    const T wv = wt[((oc * ic_n + ic) * kh + ky) * kw + kx];
                    for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
                        const T* irow = ip + (oy * s + ky - p) * g.in_w;
                        T* orow = op + oy * g.out_w;
                        for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
                            orow[ox] += wv * irow[ox * s + kx - p];
                        }
                    }
                }
            }
        }
    }
    out.check_finite("conv2d output");
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const KernelParams<T>& params,
                             const BasicTensor<T>& upstream) {
    const auto g = conv_geometry(input, params);
    const std::size_t oc_n = params.out_channels(), ic_n = params.in_channels();
    const std::size_t kh = params.kernel_h(), kw = params.kernel_w();
    const std::size_t s = params.stride, p = params.padding;
    if (upstream.shape() != Shape{oc_n, g.out_h, g.out_w}) {
        throw ShapeError("conv2d backward: upstream " + shape_str(upstream.shape()) + " vs forward output " +
                         shape_str({oc_n, g.out_h, g.out_w}));
    }

    ConvGrads<T> grads{BasicTensor<T>::zeros_like(input), BasicTensor<T>::zeros_like(params.weights),
                       BasicTensor<T>::zeros_like(params.bias)};
    const T* in = input.data().data();
    const T* wt = params.weights.data().data();
    const T* up = upstream.data().data();
    T* gi = grads.input.data().data();
    T* gw = grads.weights.data().data();
    const std::size_t plane = g.out_h * g.out_w;

    for (std::size_t oc = 0; oc < oc_n; ++oc) {
        const T* upp = up + oc * plane;
        T bsum{0};
        for (std::size_t i = 0; i < plane; ++i) bsum += upp[i];
        grads.bias[oc] = bsum;
        for (std::size_t ic = 0; ic < ic_n; ++ic) {
            const T* ip = in + ic * g.in_h * g.in_w;
            T* gip = gi + ic * g.in_h * g.in_w;
            for (std::size_t ky = 0; ky < kh; ++ky) {
                const auto rows = valid_outputs(ky, p, s, g.in_h, g.out_h);
                for (std::size_t kx = 0; kx < kw; ++kx) {
                    const auto cols = valid_outputs(kx, p, s, g.in_w, g.out_w);
                    const std::size_t widx = ((oc * ic_n + ic) * kh + ky) * kw + kx;
                    const T wv = wt[widx];
                    T wacc{0};
                    for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
                        const std::size_t row_off = (oy * s + ky - p) * g.in_w;
                        const T* irow = ip + row_off;
                        T* girow = gip + row_off;
                        const T* urow = upp + oy * g.out_w;
                        for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
                            const std::size_t ix = ox * s + kx - p;
                            wacc += urow[ox] * irow[ix];
                            girow[ix] += urow[ox] * wv;
                        }
                    }
                    gw[widx] += wacc;
                }
            }
        }
    }
    grads.input.check_finite("conv2d input gradient");
    grads.weights.check_finite("conv2d weight gradient");
    grads.bias.check_finite("conv2d bias gradient");
    return grads;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
    input.check_finite("relu input");
    std::vector<T> out(input.size());
    const auto in = input.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
    return BasicTensor<T>(input.shape(), std::move(out));
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& forward_input, const BasicTensor<T>& upstream) {
    if (forward_input.empty()) throw ShapeError("relu backward: missing saved forward input");
    forward_input.require_same_shape(upstream, "relu backward");
    std::vector<T> out(upstream.size());
    const auto in = forward_input.data();
    const auto up = upstream.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > T{0} ? up[i] : T{0};
    return BasicTensor<T>(upstream.shape(), std::move(out));
}

template <typename T>
PoolResult<T> maxpool2(const BasicTensor<T>& input) {
    input.require_rank(3, "maxpool2 input");
    const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2: extents must be even, got " + shape_str(input.shape()));
    }
    input.check_finite("maxpool2 input");
    const std::size_t oh = h / 2, ow = w / 2;
    PoolResult<T> res{BasicTensor<T>({c, oh, ow}), std::vector<std::uint32_t>(c * oh * ow), input.shape()};
    const auto in = input.data();
    auto out = res.output.data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t best = (ch * h + 2 * oy) * w + 2 * ox;
                // window visited in row-major order; strict > keeps the first maximum
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = (ch * h + 2 * oy + dy) * w + 2 * ox + dx;
                        if (in[idx] > in[best]) best = idx;
                    }
                }
                const std::size_t o = (ch * oh + oy) * ow + ox;
                out[o] = in[best];
                res.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return res;
}

template <typename T>
BasicTensor<T> maxpool2_backward(const PoolResult<T>& forward, const BasicTensor<T>& upstream) {
    if (forward.argmax.empty() || forward.input_shape.empty()) {
        throw ShapeError("maxpool2 backward: missing saved argmax state");
    }
    if (upstream.size() != forward.argmax.size() || upstream.shape() != forward.output.shape()) {
        throw ShapeError("maxpool2 backward: upstream " + shape_str(upstream.shape()) + " vs forward output " +
                         shape_str(forward.output.shape()));
    }
    BasicTensor<T> grad(forward.input_shape);
    auto g = grad.data();
    const auto up = upstream.data();
    for (std::size_t i = 0; i < up.size(); ++i) g[forward.argmax[i]] += up[i];
    return grad;
}

template <typename T>
SavedState<T> save_conv2d(const BasicTensor<T>& input, const KernelParams<T>& params) {
    const auto g = conv_geometry(input, params);
    SavedState<T> s;
    s.kind = OpKind::conv2d;
    s.input = input;
    s.params = &params;
    s.output_shape = {params.out_channels(), g.out_h, g.out_w};
    return s;
}

template <typename T>
SavedState<T> save_relu(const BasicTensor<T>& input) {
    SavedState<T> s;
    s.kind = OpKind::relu;
    s.input = input;
    s.output_shape = input.shape();
    return s;
}

template <typename T>
SavedState<T> save_maxpool2(const BasicTensor<T>& input) {
    auto pooled = maxpool2(input);
    SavedState<T> s;
    s.kind = OpKind::maxpool2;
    s.input = input;
    s.argmax = std::move(pooled.argmax);
    s.output_shape = pooled.output.shape();
    return s;
}

template <typename T>
Gradients<T> backward(const SavedState<T>& saved, const BasicTensor<T>& upstream) {
    if (saved.input.empty()) throw ShapeError("backward: missing saved forward state");
    if (upstream.shape() != saved.output_shape) {
        throw ShapeError("backward: upstream " + shape_str(upstream.shape()) + " vs forward output " +
                         shape_str(saved.output_shape));
    }
    switch (saved.kind) {
        case OpKind::conv2d: {
            if (saved.params == nullptr) throw ShapeError("backward: conv2d state has no kernel params");
            auto g = conv2d_backward(saved.input, *saved.params, upstream);
            return {std::move(g.input), std::move(g.weights), std::move(g.bias)};
        }
        case OpKind::relu:
            return {relu_backward(saved.input, upstream), {}, {}};
        case OpKind::maxpool2: {
            PoolResult<T> fwd{BasicTensor<T>(saved.output_shape), saved.argmax, saved.input.shape()};
            return {maxpool2_backward(fwd, upstream), {}, {}};
        }
    }
    throw ShapeError("backward: unknown op kind");
}

#define ARTDREAM_INSTANTIATE_KERNELS(T)                                                               \
    template struct KernelParams<T>;                                                                  \
    template BasicTensor<T> conv2d(const BasicTensor<T>&, const KernelParams<T>&);                    \
    template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const KernelParams<T>&,              \
                                          const BasicTensor<T>&);                                     \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                              \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);              \
    template PoolResult<T> maxpool2(const BasicTensor<T>&);                                           \
    template BasicTensor<T> maxpool2_backward(const PoolResult<T>&, const BasicTensor<T>&);           \
    template SavedState<T> save_conv2d(const BasicTensor<T>&, const KernelParams<T>&);                \
    template SavedState<T> save_relu(const BasicTensor<T>&);                                          \
    template SavedState<T> save_maxpool2(const BasicTensor<T>&);                                      \
    template Gradients<T> backward(const SavedState<T>&, const BasicTensor<T>&);

ARTDREAM_INSTANTIATE_KERNELS(float)
ARTDREAM_INSTANTIATE_KERNELS(double)

#undef ARTDREAM_INSTANTIATE_KERNELS

}  // namespace artdream::ndgrid
