#pragma once

// Multi-label CNN: two valid convolutions, a normalization layer over the
// flattened conv output, two hidden dense layers and an output layer split into K class logits and
// three load-count logits, each with its own softmax.
//
// Samples are processed in batches laid out as matrix columns; convolutions
// are lowered to matrix products with im2col.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "plugsense/dataset.hpp"
#include "plugsense/error.hpp"
#include "plugsense/probe.hpp"
#include "plugsense/rng.hpp"

namespace plugsense {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;
using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Layer between the convolutional block and the dense block.
///   softmax        softmax over the flattened conv output
///   scaled_softmax the same, multiplied by the vector length (unit mean)
///   standardize    zero mean, unit variance over the flattened vector
///   none           identity (ablation only)
enum class Normalization { softmax, scaled_softmax, standardize, none };

inline constexpr std::array<std::string_view, 4> kNormalizationNames = {"softmax", "scaled_softmax", "standardize", "none"};

/// Plain fixed-rate SGD, or Adam (fixed base rate, default moment decays).
enum class Optimizer { sgd, adam };

inline constexpr std::array<std::string_view, 2> kOptimizerNames = {"sgd", "adam"};

struct ConvSpec {
    std::size_t channels = 8;
    std::size_t kernel_h = 3;
    std::size_t kernel_w = 3;
    friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct NetConfig {
    ConvSpec conv1{8, 3, 3};
    ConvSpec conv2{16, 3, 3};
    std::size_t fc1_width = 128;
    std::size_t fc2_width = 64;
    std::size_t num_classes = kNumClasses;
    /// 3 for the multi-label network; 0 selects the single-label variant
    /// (plain softmax over K, no count head).
    std::size_t count_outputs = kCountOutputs;
    double leaky_slope = 0.01;
    Normalization normalization = Normalization::standardize;
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 3e-4;
    /// When > 0 the rate decays geometrically per epoch from learning_rate
    /// down to this value at the last epoch; 0 keeps it fixed.
    double final_learning_rate = 0.0;
    std::size_t epochs = 100;
    std::size_t batch_size = 16;
    std::uint64_t init_seed = 1;

    friend bool operator==(const NetConfig&, const NetConfig&) = default;

    void validate() const {
        if (conv1.channels == 0 || conv2.channels == 0) throw ConfigError("net: conv channel count must be > 0");
        if (conv1.kernel_h == 0 || conv1.kernel_w == 0 || conv2.kernel_h == 0 || conv2.kernel_w == 0)
            throw ConfigError("net: kernel dimensions must be > 0");
        if (conv1.kernel_h > kRows || conv1.kernel_w > kCols) throw ConfigError("net: conv1 kernel exceeds the input");
        if (conv2.kernel_h > kRows - conv1.kernel_h + 1 || conv2.kernel_w > kCols - conv1.kernel_w + 1)
            throw ConfigError("net: conv2 kernel exceeds the conv1 output");
        if (fc1_width == 0 || fc2_width == 0) throw ConfigError("net: hidden layer width must be > 0");
        if (num_classes < 2) throw ConfigError("net: need at least 2 classes");
        if (count_outputs != kCountOutputs && count_outputs != 0)
            throw ConfigError("net: count_outputs must be 3 (or 0 for the single-label variant)");
        if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("net: leaky_slope must be in [0, 1)");
        if (!(learning_rate > 0.0)) throw ConfigError("net: learning_rate must be > 0");
        if (!(final_learning_rate >= 0.0 && final_learning_rate <= learning_rate))
            throw ConfigError("net: final_learning_rate must be in [0, learning_rate]");
        if (batch_size == 0) throw ConfigError("net: batch_size must be > 0");
    }

    [[nodiscard]] bool single_label() const { return count_outputs == 0; }
};

/// Tensor sizes derived from a config.
struct NetShape {
    std::size_t in_c = kFeatureChannels, in_h = kRows, in_w = kCols;
    std::size_t c1, h1, w1, c2, h2, w2;
    std::size_t flat, f1, f2, outputs, classes;
    std::size_t k1h, k1w, k2h, k2w;

    explicit NetShape(const NetConfig& cfg)
        : c1(cfg.conv1.channels),
          h1(kRows - cfg.conv1.kernel_h + 1),
          w1(kCols - cfg.conv1.kernel_w + 1),
          c2(cfg.conv2.channels),
          h2(h1 - cfg.conv2.kernel_h + 1),
          w2(w1 - cfg.conv2.kernel_w + 1),
          flat(c2 * h2 * w2),
          f1(cfg.fc1_width),
          f2(cfg.fc2_width),
          outputs(cfg.num_classes + cfg.count_outputs),
          classes(cfg.num_classes),
          k1h(cfg.conv1.kernel_h),
          k1w(cfg.conv1.kernel_w),
          k2h(cfg.conv2.kernel_h),
          k2w(cfg.conv2.kernel_w) {}

    [[nodiscard]] std::size_t input_size() const { return in_c * in_h * in_w; }
    [[nodiscard]] std::size_t col1_rows() const { return in_c * k1h * k1w; }
    [[nodiscard]] std::size_t col2_rows() const { return c1 * k2h * k2w; }
};

/// One parameter tensor inside the flat parameter vector.
struct TensorSlot {
    std::string name;
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;  // 1 for biases
    std::size_t fan_in = 0;

    [[nodiscard]] std::size_t size() const { return rows * cols; }
};

enum class Tensor : std::size_t { conv1_w, conv1_b, conv2_w, conv2_b, fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b };
inline constexpr std::size_t kNumTensors = 10;

inline std::array<TensorSlot, kNumTensors> tensor_layout(const NetConfig& cfg) {
    const NetShape s(cfg);
    std::array<TensorSlot, kNumTensors> t{{
        {"conv1.weight", 0, s.c1, s.col1_rows(), s.col1_rows()},
        {"conv1.bias", 0, s.c1, 1, s.col1_rows()},
        {"conv2.weight", 0, s.c2, s.col2_rows(), s.col2_rows()},
        {"conv2.bias", 0, s.c2, 1, s.col2_rows()},
        {"fc1.weight", 0, s.f1, s.flat, s.flat},
        {"fc1.bias", 0, s.f1, 1, s.flat},
        {"fc2.weight", 0, s.f2, s.f1, s.f1},
        {"fc2.bias", 0, s.f2, 1, s.f1},
        {"out.weight", 0, s.outputs, s.f2, s.f2},
        {"out.bias", 0, s.outputs, 1, s.f2},
    }};
    std::size_t off = 0;
    for (auto& slot : t) {
        slot.offset = off;
        off += slot.size();
    }
    return t;
}

struct NetParams {
    NetConfig config;
    std::vector<double> values;

    [[nodiscard]] std::span<const double> tensor(Tensor t) const {
        const auto slot = tensor_layout(config)[static_cast<std::size_t>(t)];
        return {values.data() + slot.offset, slot.size()};
    }
    [[nodiscard]] std::span<double> tensor(Tensor t) {
        const auto slot = tensor_layout(config)[static_cast<std::size_t>(t)];
        return {values.data() + slot.offset, slot.size()};
    }
    [[nodiscard]] bool all_finite() const {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }
    friend bool operator==(const NetParams&, const NetParams&) = default;
};

inline std::size_t parameter_count(const NetConfig& cfg) {
    const auto t = tensor_layout(cfg);
    return t.back().offset + t.back().size();
}

/// Uniform fan-in initialization: weights U(-sqrt(6/fan_in), sqrt(6/fan_in)),
/// biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)). Nonzero conv biases matter here:
/// every layer up to the normalization is otherwise positively homogeneous, so
/// standardization would erase the overall power level.
inline NetParams init(const NetConfig& cfg) {
    cfg.validate();
    NetParams p{cfg, std::vector<double>(parameter_count(cfg), 0.0)};
    Rng rng(derive_seed(cfg.init_seed, "init", 0));
    for (const auto& slot : tensor_layout(cfg)) {
        const bool is_bias = slot.cols == 1;
        const double a = is_bias ? 1.0 / std::sqrt(static_cast<double>(slot.fan_in)) : std::sqrt(6.0 / static_cast<double>(slot.fan_in));
        for (std::size_t k = 0; k < slot.size(); ++k) p.values[slot.offset + k] = rng.uniform(-a, a);
    }
    return p;
}

struct Prediction {
    std::vector<double> class_probs;
    std::vector<double> count_probs;  // empty for the single-label variant
    std::size_t n_hat = 1;
    std::vector<std::size_t> top_set;  // sorted ascending
};

/// Indices of the n largest probabilities; ties go to the lower index.
inline std::vector<std::size_t> top_n(std::span<const double> probs, std::size_t n) {
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    order.resize(std::min(n, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

namespace detail {

inline void softmax_inplace(std::span<double> x) {
    const double mx = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    for (double& v : x) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : x) v /= sum;
}

inline double log_sum_exp(std::span<const double> x) {
    const double mx = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    for (double v : x) sum += std::exp(v - mx);
    return mx + std::log(sum);
}

}  // namespace detail

/// Turns one column of output logits into split-softmax probabilities.
inline Prediction predict_from_logits(std::span<const double> logits, std::size_t num_classes) {
    Prediction p;
    p.class_probs.assign(logits.begin(), logits.begin() + static_cast<std::ptrdiff_t>(num_classes));
    detail::softmax_inplace(p.class_probs);
    if (logits.size() > num_classes) {
        p.count_probs.assign(logits.begin() + static_cast<std::ptrdiff_t>(num_classes), logits.end());
        detail::softmax_inplace(p.count_probs);
        p.n_hat = top_n(p.count_probs, 1).front() + 1;
    }
    p.top_set = top_n(p.class_probs, p.n_hat);
    return p;
}

/// Cross-entropy of the class softmax against the class target plus, with a
/// count head, cross-entropy of the count softmax against the count one-hot.
inline double loss(std::span<const double> logits, const TargetVector& target, std::size_t num_classes) {
    if (target.class_part.size() != num_classes || logits.size() < num_classes)
        throw ShapeMismatch("loss: logits/target shape mismatch");
    const auto cls = logits.first(num_classes);
    const double lse = detail::log_sum_exp(cls);
    double l = 0.0;
    for (std::size_t k = 0; k < num_classes; ++k)
        if (target.class_part[k] != 0.0) l -= target.class_part[k] * (cls[k] - lse);
    if (logits.size() > num_classes) {
        const auto cnt = logits.subspan(num_classes);
        if (cnt.size() != kCountOutputs) throw ShapeMismatch("loss: count head must have 3 logits");
        const double lse_c = detail::log_sum_exp(cnt);
        for (std::size_t k = 0; k < kCountOutputs; ++k)
            if (target.count_part[k] != 0.0) l -= target.count_part[k] * (cnt[k] - lse_c);
    }
    return l;
}

/// Test-only fault injection for the gradient checker's mutation test.
enum class GradientFault { none, flip_fc2 };

/// Batch activations kept for the backward pass. Column b is sample b.
struct Workspace {
    Matrix cols1, a1_pre, a1;   // conv1: (C0*k*k x P1*B), (C1 x P1*B)
    Matrix cols2, a2_pre, a2;   // conv2
    Matrix z, u;                // flattened conv output and its normalization (flat x B)
    Vector norm_aux;            // per-column std for standardize
    Matrix h1_pre, h1, h2_pre, h2, logits;
};

namespace detail {

inline void leaky(const Matrix& pre, Matrix& out, double slope) {
    out = pre.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

inline void leaky_backward(const Matrix& pre, Matrix& grad, double slope) {
    grad.array() *= pre.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }).array();
}

/// Gathers kernel-sized patches of `in` (C x (H*W) per sample, samples side by
/// side) into columns, one column per output position.
inline void im2col(const Matrix& in, std::size_t c, std::size_t h, std::size_t w, std::size_t kh, std::size_t kw,
                   std::size_t batch, Matrix& cols) {
    const std::size_t oh = h - kh + 1, ow = w - kw + 1, op = oh * ow, ip = h * w;
    cols.resize(static_cast<Eigen::Index>(c * kh * kw), static_cast<Eigen::Index>(op * batch));
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < kh; ++i)
                for (std::size_t j = 0; j < kw; ++j) {
                    const auto row = static_cast<Eigen::Index>((ch * kh + i) * kw + j);
                    for (std::size_t y = 0; y < oh; ++y)
                        for (std::size_t x = 0; x < ow; ++x)
                            cols(row, static_cast<Eigen::Index>(b * op + y * ow + x)) =
                                in(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(b * ip + (y + i) * w + x + j));
                }
}

inline void col2im(const Matrix& cols, std::size_t c, std::size_t h, std::size_t w, std::size_t kh, std::size_t kw,
                   std::size_t batch, Matrix& out) {
    const std::size_t oh = h - kh + 1, ow = w - kw + 1, op = oh * ow, ip = h * w;
    out.setZero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(ip * batch));
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < kh; ++i)
                for (std::size_t j = 0; j < kw; ++j) {
                    const auto row = static_cast<Eigen::Index>((ch * kh + i) * kw + j);
                    for (std::size_t y = 0; y < oh; ++y)
                        for (std::size_t x = 0; x < ow; ++x)
                            out(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(b * ip + (y + i) * w + x + j)) +=
                                cols(row, static_cast<Eigen::Index>(b * op + y * ow + x));
                }
}

/// Reorders a (C x P*B) activation into (C*P x B) columns and back.
inline void flatten(const Matrix& a, std::size_t c, std::size_t p, std::size_t batch, Matrix& out) {
    out.resize(static_cast<Eigen::Index>(c * p), static_cast<Eigen::Index>(batch));
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t k = 0; k < p; ++k)
                out(static_cast<Eigen::Index>(ch * p + k), static_cast<Eigen::Index>(b)) =
                    a(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(b * p + k));
}

inline void unflatten(const Matrix& flat, std::size_t c, std::size_t p, std::size_t batch, Matrix& out) {
    out.resize(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p * batch));
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t k = 0; k < p; ++k)
                out(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(b * p + k)) =
                    flat(static_cast<Eigen::Index>(ch * p + k), static_cast<Eigen::Index>(b));
}

inline RowMajorMap weights(const NetParams& p, const TensorSlot& s) {
    return RowMajorMap(p.values.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}

inline Eigen::Map<const Vector> bias(const NetParams& p, const TensorSlot& s) {
    return Eigen::Map<const Vector>(p.values.data() + s.offset, static_cast<Eigen::Index>(s.rows));
}

}  // namespace detail

/// Forward pass over a batch of inputs (input_size x B). Leaves the output
/// logits in ws.logits.
inline void forward_batch(const NetParams& p, const Matrix& x, Workspace& ws) {
    const NetConfig& cfg = p.config;
    const NetShape s(cfg);
    if (static_cast<std::size_t>(x.rows()) != s.input_size())
        throw ShapeMismatch("forward: input must be 2x14x20 per sample");
    const auto batch = static_cast<std::size_t>(x.cols());
    const auto t = tensor_layout(cfg);
    const double slope = cfg.leaky_slope;
    using detail::bias;
    using detail::weights;

    // The feature tensor is channel-major, so each column reshapes to C0 x (H*W).
    Matrix in(static_cast<Eigen::Index>(s.in_c), static_cast<Eigen::Index>(s.in_h * s.in_w * batch));
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t ch = 0; ch < s.in_c; ++ch)
            for (std::size_t k = 0; k < s.in_h * s.in_w; ++k)
                in(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(b * s.in_h * s.in_w + k)) =
                    x(static_cast<Eigen::Index>(ch * s.in_h * s.in_w + k), static_cast<Eigen::Index>(b));

    detail::im2col(in, s.in_c, s.in_h, s.in_w, s.k1h, s.k1w, batch, ws.cols1);
    ws.a1_pre.noalias() = weights(p, t[0]) * ws.cols1;
    ws.a1_pre.colwise() += bias(p, t[1]);
    detail::leaky(ws.a1_pre, ws.a1, slope);

    detail::im2col(ws.a1, s.c1, s.h1, s.w1, s.k2h, s.k2w, batch, ws.cols2);
    ws.a2_pre.noalias() = weights(p, t[2]) * ws.cols2;
    ws.a2_pre.colwise() += bias(p, t[3]);
    detail::leaky(ws.a2_pre, ws.a2, slope);

    detail::flatten(ws.a2, s.c2, s.h2 * s.w2, batch, ws.z);
    ws.u.resize(ws.z.rows(), ws.z.cols());
    ws.norm_aux.resize(static_cast<Eigen::Index>(batch));
    const auto n = static_cast<double>(s.flat);
    for (Eigen::Index b = 0; b < ws.z.cols(); ++b) {
        switch (cfg.normalization) {
            case Normalization::softmax:
            case Normalization::scaled_softmax: {
                const double mx = ws.z.col(b).maxCoeff();
                ws.u.col(b) = (ws.z.col(b).array() - mx).exp();
                ws.u.col(b) /= ws.u.col(b).sum();
                if (cfg.normalization == Normalization::scaled_softmax) ws.u.col(b) *= n;
                break;
            }
            case Normalization::none:
                ws.u.col(b) = ws.z.col(b);
                break;
            case Normalization::standardize: {
                const double mean = ws.z.col(b).mean();
                const double var = (ws.z.col(b).array() - mean).square().mean();
                const double sd = std::sqrt(var + 1e-8);
                ws.norm_aux(b) = sd;
                ws.u.col(b) = (ws.z.col(b).array() - mean) / sd;
                break;
            }
        }
    }

    ws.h1_pre.noalias() = weights(p, t[4]) * ws.u;
    ws.h1_pre.colwise() += bias(p, t[5]);
    detail::leaky(ws.h1_pre, ws.h1, slope);
    ws.h2_pre.noalias() = weights(p, t[6]) * ws.h1;
    ws.h2_pre.colwise() += bias(p, t[7]);
    detail::leaky(ws.h2_pre, ws.h2, slope);
    ws.logits.noalias() = weights(p, t[8]) * ws.h2;
    ws.logits.colwise() += bias(p, t[9]);
}

/// Backward pass for the batch held in `ws`. `dlogits` is dL/dlogits
/// (outputs x B); the gradient is written (not accumulated) into `grad`.
inline void backward_batch(const NetParams& p, Workspace& ws, const Matrix& dlogits, std::vector<double>& grad,
                           GradientFault fault = GradientFault::none) {
    const NetConfig& cfg = p.config;
    const NetShape s(cfg);
    const auto t = tensor_layout(cfg);
    const auto batch = static_cast<std::size_t>(dlogits.cols());
    const double slope = cfg.leaky_slope;
    grad.assign(p.values.size(), 0.0);
    auto gmat = [&](const TensorSlot& slot) {
        return RowMajorMutMap(grad.data() + slot.offset, static_cast<Eigen::Index>(slot.rows),
                              static_cast<Eigen::Index>(slot.cols));
    };
    auto gvec = [&](const TensorSlot& slot) {
        return Eigen::Map<Vector>(grad.data() + slot.offset, static_cast<Eigen::Index>(slot.rows));
    };
    using detail::weights;

    gmat(t[8]).noalias() = dlogits * ws.h2.transpose();
    gvec(t[9]) = dlogits.rowwise().sum();
    Matrix d2 = weights(p, t[8]).transpose() * dlogits;
    detail::leaky_backward(ws.h2_pre, d2, slope);

    gmat(t[6]).noalias() = d2 * ws.h1.transpose();
    gvec(t[7]) = d2.rowwise().sum();
    if (fault == GradientFault::flip_fc2) {
        gmat(t[6]) *= -1.0;
        gvec(t[7]) *= -1.0;
    }
    Matrix d1 = weights(p, t[6]).transpose() * d2;
    detail::leaky_backward(ws.h1_pre, d1, slope);

    gmat(t[4]).noalias() = d1 * ws.u.transpose();
    gvec(t[5]) = d1.rowwise().sum();
    Matrix du = weights(p, t[4]).transpose() * d1;

    Matrix dz(du.rows(), du.cols());
    const auto n = static_cast<double>(s.flat);
    for (Eigen::Index b = 0; b < du.cols(); ++b) {
        switch (cfg.normalization) {
            case Normalization::softmax:
            case Normalization::scaled_softmax: {
                // u = c * softmax(z): dz = u .* (du - <u/c, du>)
                const double c = cfg.normalization == Normalization::scaled_softmax ? n : 1.0;
                const double inner = ws.u.col(b).dot(du.col(b)) / c;
                dz.col(b) = ws.u.col(b).array() * (du.col(b).array() - inner);
                break;
            }
            case Normalization::none:
                dz.col(b) = du.col(b);
                break;
            case Normalization::standardize: {
                const double sd = ws.norm_aux(b);
                const double mean_du = du.col(b).mean();
                const double mean_du_u = du.col(b).dot(ws.u.col(b)) / n;
                dz.col(b) = (du.col(b).array() - mean_du - ws.u.col(b).array() * mean_du_u) / sd;
                break;
            }
        }
    }

    Matrix da2;
    detail::unflatten(dz, s.c2, s.h2 * s.w2, batch, da2);
    detail::leaky_backward(ws.a2_pre, da2, slope);
    gmat(t[2]).noalias() = da2 * ws.cols2.transpose();
    gvec(t[3]) = da2.rowwise().sum();
    Matrix dcols2 = weights(p, t[2]).transpose() * da2;
    Matrix da1;
    detail::col2im(dcols2, s.c1, s.h1, s.w1, s.k2h, s.k2w, batch, da1);
    detail::leaky_backward(ws.a1_pre, da1, slope);
    gmat(t[0]).noalias() = da1 * ws.cols1.transpose();
    gvec(t[1]) = da1.rowwise().sum();
}

// ---------------------------------------------------------------------------
// Examples, prediction and training
// ---------------------------------------------------------------------------

/// Inputs and targets as matrix columns.
struct ExampleSet {
    Matrix inputs;   // input_size x N
    Matrix targets;  // outputs x N (class part then count part)
    std::vector<LabelSet> labels;

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
};

/// Feature tensors of the selected samples, one column each.
inline Matrix feature_matrix(const Dataset& ds, std::span<const std::size_t> idx, FeatureScale scale) {
    Matrix m(static_cast<Eigen::Index>(kFeatureSize), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const FeatureTensor f = features(ds.samples.at(idx[j]).matrices, scale);
        m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vector>(f.values.data(), static_cast<Eigen::Index>(kFeatureSize));
    }
    return m;
}

/// Training target column for a label set. The single-label variant takes
/// one-load label sets only.
inline Vector target_column(const LabelSet& labels, const NetConfig& cfg) {
    const NetShape s(cfg);
    Vector t = Vector::Zero(static_cast<Eigen::Index>(s.outputs));
    if (cfg.single_label()) {
        if (labels.size() != 1) throw InvalidArgument("single-label targets need one-load samples, got " + labels.combo_id());
        t(static_cast<Eigen::Index>(index_of(labels.classes().front()))) = 1.0;
        return t;
    }
    const TargetVector tv = encode_target(labels, cfg.num_classes);
    for (std::size_t k = 0; k < cfg.num_classes; ++k) t(static_cast<Eigen::Index>(k)) = tv.class_part[k];
    for (std::size_t k = 0; k < kCountOutputs; ++k) t(static_cast<Eigen::Index>(cfg.num_classes + k)) = tv.count_part[k];
    return t;
}

inline ExampleSet make_examples(const Dataset& ds, std::span<const std::size_t> idx, FeatureScale scale,
                                const NetConfig& cfg) {
    ExampleSet ex;
    ex.inputs = feature_matrix(ds, idx, scale);
    ex.targets.resize(static_cast<Eigen::Index>(NetShape(cfg).outputs), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        const LabelSet& labels = ds.samples.at(idx[j]).labels;
        ex.targets.col(static_cast<Eigen::Index>(j)) = target_column(labels, cfg);
        ex.labels.push_back(labels);
    }
    return ex;
}

inline ExampleSet make_examples(const Dataset& ds, FeatureScale scale, const NetConfig& cfg) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return make_examples(ds, idx, scale, cfg);
}

inline std::vector<Prediction> predict(const NetParams& p, const Matrix& inputs, std::size_t chunk = 256) {
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(inputs.cols()));
    Workspace ws;
    for (Eigen::Index start = 0; start < inputs.cols(); start += static_cast<Eigen::Index>(chunk)) {
        const Eigen::Index len = std::min<Eigen::Index>(static_cast<Eigen::Index>(chunk), inputs.cols() - start);
        forward_batch(p, inputs.middleCols(start, len), ws);
        for (Eigen::Index b = 0; b < len; ++b) {
            const Vector col = ws.logits.col(b);
            out.push_back(predict_from_logits(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                              p.config.num_classes));
        }
    }
    return out;
}

inline Prediction forward(const NetParams& p, const FeatureTensor& x) {
    Matrix in(static_cast<Eigen::Index>(kFeatureSize), 1);
    for (std::size_t k = 0; k < kFeatureSize; ++k) in(static_cast<Eigen::Index>(k), 0) = x.values[k];
    return predict(p, in).front();
}

namespace detail {

/// dL/dlogits for the batch, averaged over its columns; returns the summed loss.
inline double output_gradient(const Matrix& logits, const Matrix& targets, std::size_t num_classes, Matrix& dlogits) {
    const auto outputs = static_cast<std::size_t>(logits.rows());
    const double inv = 1.0 / static_cast<double>(logits.cols());
    dlogits.resize(logits.rows(), logits.cols());
    double total = 0.0;
    std::vector<double> buf(outputs);
    TargetVector tv;
    tv.class_part.resize(num_classes);
    for (Eigen::Index b = 0; b < logits.cols(); ++b) {
        for (std::size_t k = 0; k < outputs; ++k) buf[k] = logits(static_cast<Eigen::Index>(k), b);
        for (std::size_t k = 0; k < num_classes; ++k) tv.class_part[k] = targets(static_cast<Eigen::Index>(k), b);
        for (std::size_t k = num_classes; k < outputs; ++k)
            tv.count_part[k - num_classes] = targets(static_cast<Eigen::Index>(k), b);
        total += loss(buf, tv, num_classes);
        std::span<double> all(buf);
        softmax_inplace(all.first(num_classes));
        if (outputs > num_classes) softmax_inplace(all.subspan(num_classes));
        // Targets in each part sum to one, so the gradient is (p - t).
        for (std::size_t k = 0; k < outputs; ++k)
            dlogits(static_cast<Eigen::Index>(k), b) = (buf[k] - targets(static_cast<Eigen::Index>(k), b)) * inv;
    }
    return total;
}

}  // namespace detail

struct TrainResult {
    NetParams params;
    std::vector<double> epoch_loss;  // mean training loss per epoch
    std::size_t steps = 0;
};

/// Learning rate used during `epoch`.
inline double epoch_learning_rate(const NetConfig& cfg, std::size_t epoch) {
    if (cfg.final_learning_rate <= 0.0 || cfg.epochs < 2) return cfg.learning_rate;
    const double t = static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
    return cfg.learning_rate * std::pow(cfg.final_learning_rate / cfg.learning_rate, t);
}

/// Mini-batch SGD or Adam. Sample order is reshuffled every epoch from a seed
/// derived from init_seed; the last batch may be short.
inline TrainResult train(NetParams p, const ExampleSet& train_set, const NetConfig& cfg) {
    cfg.validate();
    if (train_set.size() == 0) throw InvalidArgument("train: empty training set");
    if (!(p.config == cfg) && (parameter_count(p.config) != parameter_count(cfg)))
        throw ShapeMismatch("train: parameters do not match the config");
    p.config = cfg;
    TrainResult result;
    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Workspace ws;
    Matrix xb, tb, dlogits;
    std::vector<double> grad;
    std::vector<double> m1, m2;
    if (cfg.optimizer == Optimizer::adam) {
        m1.assign(p.values.size(), 0.0);
        m2.assign(p.values.size(), 0.0);
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = epoch_learning_rate(cfg, epoch);
        Rng rng(derive_seed(cfg.init_seed, "epoch", epoch));
        shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, n - start);
            xb.resize(train_set.inputs.rows(), static_cast<Eigen::Index>(len));
            tb.resize(train_set.targets.rows(), static_cast<Eigen::Index>(len));
            for (std::size_t j = 0; j < len; ++j) {
                xb.col(static_cast<Eigen::Index>(j)) = train_set.inputs.col(static_cast<Eigen::Index>(order[start + j]));
                tb.col(static_cast<Eigen::Index>(j)) = train_set.targets.col(static_cast<Eigen::Index>(order[start + j]));
            }
            forward_batch(p, xb, ws);
            epoch_loss += detail::output_gradient(ws.logits, tb, cfg.num_classes, dlogits);
            backward_batch(p, ws, dlogits, grad);
            ++result.steps;
            if (cfg.optimizer == Optimizer::sgd) {
                for (std::size_t k = 0; k < grad.size(); ++k) p.values[k] -= lr * grad[k];
            } else {
                const auto t = static_cast<double>(result.steps);
                const double rate = lr * std::sqrt(1.0 - std::pow(beta2, t)) / (1.0 - std::pow(beta1, t));
                for (std::size_t k = 0; k < grad.size(); ++k) {
                    m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
                    m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
                    p.values[k] -= rate * m1[k] / (std::sqrt(m2[k]) + adam_eps);
                }
            }
            if (!p.all_finite())
                throw DivergedToNaN("training diverged at epoch " + std::to_string(epoch) +
                                    "; lower the learning rate");
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
    }
    result.params = std::move(p);
    return result;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
};

/// Loss of a single example (input_size x 1, outputs x 1).
inline double example_loss(const NetParams& p, const Matrix& x, const Matrix& target) {
    Workspace ws;
    forward_batch(p, x, ws);
    Matrix d;
    return detail::output_gradient(ws.logits, target, p.config.num_classes, d);
}

/// Compares the analytic gradient with central differences (step h) on
/// `count` randomly chosen parameters. Relative error is |a - n| / max(|a|,
/// |n|), with pairs whose magnitudes are both below `floor` counted as exact.
inline GradCheckResult grad_check(const NetParams& p, const Matrix& x, const Matrix& target, std::size_t count,
                                  std::uint64_t seed, GradientFault fault = GradientFault::none, double h = 1e-5,
                                  double floor = 1e-10) {
    Workspace ws;
    forward_batch(p, x, ws);
    Matrix dlogits;
    detail::output_gradient(ws.logits, target, p.config.num_classes, dlogits);
    std::vector<double> grad;
    backward_batch(p, ws, dlogits, grad, fault);

    Rng rng(seed);
    NetParams probe = p;
    GradCheckResult r;
    std::vector<std::size_t> picks(p.values.size());
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    shuffle(picks.begin(), picks.end(), rng);
    picks.resize(std::min(count, picks.size()));
    for (std::size_t k : picks) {
        const double saved = probe.values[k];
        probe.values[k] = saved + h;
        const double lp = example_loss(probe, x, target);
        probe.values[k] = saved - h;
        const double lm = example_loss(probe, x, target);
        probe.values[k] = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = grad[k];
        const double scale = std::max(std::abs(numeric), std::abs(analytic));
        const double rel = scale < floor ? 0.0 : std::abs(numeric - analytic) / scale;
        r.max_relative_error = std::max(r.max_relative_error, rel);
        ++r.checked;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json net_config_to_json(const NetConfig& c) {
    auto conv = [](const ConvSpec& s) {
        return nlohmann::json{{"out_channels", s.channels}, {"kernel_h", s.kernel_h}, {"kernel_w", s.kernel_w}};
    };
    return {{"conv1", conv(c.conv1)},
            {"conv2", conv(c.conv2)},
            {"fc1_width", c.fc1_width},
            {"fc2_width", c.fc2_width},
            {"num_classes", c.num_classes},
            {"count_outputs", c.count_outputs},
            {"leaky_slope", c.leaky_slope},
            {"normalization", std::string(kNormalizationNames[static_cast<std::size_t>(c.normalization)])},
            {"optimizer", std::string(kOptimizerNames[static_cast<std::size_t>(c.optimizer)])},
            {"learning_rate", c.learning_rate},
            {"final_learning_rate", c.final_learning_rate},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"init_seed", c.init_seed}};
}

inline void save_checkpoint(const NetParams& p, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format"] = "plugsense-net";
    j["version"] = kCheckpointVersion;
    j["config"] = net_config_to_json(p.config);
    nlohmann::json tensors = nlohmann::json::object();
    for (const auto& slot : tensor_layout(p.config))
        tensors[slot.name] = std::vector<double>(p.values.begin() + static_cast<std::ptrdiff_t>(slot.offset),
                                                 p.values.begin() + static_cast<std::ptrdiff_t>(slot.offset + slot.size()));
    j["params"] = tensors;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump() << '\n';
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

/// Reads a checkpoint written for `cfg`; the echoed config must describe the
/// same tensor shapes.
inline NetParams load_checkpoint(const std::filesystem::path& path, const NetConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptRecord(1, e.what());
    }
    if (j.value("format", "") != "plugsense-net") throw CorruptRecord(1, "not a network checkpoint");
    if (j.value("version", -1) != kCheckpointVersion) throw SchemaVersionMismatch("unsupported checkpoint version");
    NetParams p{cfg, std::vector<double>(parameter_count(cfg), 0.0)};
    const auto& tensors = j.at("params");
    for (const auto& slot : tensor_layout(cfg)) {
        if (!tensors.contains(slot.name)) throw ShapeMismatch("checkpoint lacks tensor " + slot.name);
        const auto values = tensors.at(slot.name).get<std::vector<double>>();
        if (values.size() != slot.size())
            throw ShapeMismatch("tensor " + slot.name + " has " + std::to_string(values.size()) + " values, expected " +
                                std::to_string(slot.size()));
        std::copy(values.begin(), values.end(), p.values.begin() + static_cast<std::ptrdiff_t>(slot.offset));
    }
    if (tensors.size() != kNumTensors) throw ShapeMismatch("checkpoint has unexpected tensors");
    return p;
}

}  // namespace plugsense
