// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <Eigen/Dense>

#include "decalforge/types.hpp"

namespace decalforge {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Frequency encoding with 4 octaves. Each input component p expands to
/// (p, sin(pi p), cos(pi p), sin(2 pi p), cos(2 pi p), ..., sin(8 pi p), cos(8 pi p)).
struct PosEnc {
    static constexpr int kOctaves = 4;
    static constexpr int output_dim(int input_dim) { return input_dim * (1 + 2 * kOctaves); }

    static VectorXd encode(const VectorXd& p);
    /// Column-wise encoding of a (d x N) batch.
    static MatrixXd encode(const MatrixXd& p);
};

/// Three fully-connected layers with ReLU between them. Parameters live in
/// one flat vector ordered [W0, b0, W1, b1, W2, b2], matrices column-major.
class Mlp {
public:
    struct Cache {
        MatrixXd x;
        MatrixXd a0;
        MatrixXd a1;
        bool valid = false;
    };

    Mlp() = default;
    Mlp(int input_dim, int hidden_dim, int output_dim);

    /// Uniform fan-in init: weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
    static Mlp kaiming(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed);

    int input_dim() const { return in_; }
    int hidden_dim() const { return hidden_; }
    int output_dim() const { return out_; }
    Eigen::Index num_params() const { return params_.size(); }

    VectorXd& params() { return params_; }
    const VectorXd& params() const { return params_; }

    Eigen::Map<MatrixXd> weight(int layer);
    Eigen::Map<const MatrixXd> weight(int layer) const;
    Eigen::Map<VectorXd> bias(int layer);
    Eigen::Map<const VectorXd> bias(int layer) const;

    /// Forward pass over a (input_dim x N) batch. Throws on dimension mismatch.
    MatrixXd forward(const MatrixXd& x, Cache* cache = nullptr) const;
    VectorXd forward(const VectorXd& x) const;

    /// Backward pass for output gradients dy (output_dim x N). Parameter
    /// gradients are added to `param_grad`; returns the input gradient.
    MatrixXd backward(const Cache& cache, const MatrixXd& dy, VectorXd& param_grad) const;

private:
    Eigen::Index offset(int layer, bool bias) const;

    int in_ = 0;
    int hidden_ = 0;
    int out_ = 0;
    VectorXd params_;
};

/// Adam with bias correction. Non-finite gradients skip the step.
class Adam {
public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    Adam() = default;
    explicit Adam(Eigen::Index size) : m_(VectorXd::Zero(size)), v_(VectorXd::Zero(size)) {}

    /// Returns false when the step was skipped.
    bool step(Eigen::Ref<VectorXd> params, const Eigen::Ref<const VectorXd>& grad, double lr);

    std::int64_t t() const { return t_; }
    std::int64_t skipped() const { return skipped_; }
    const VectorXd& m() const { return m_; }
    const VectorXd& v() const { return v_; }
    void restore(VectorXd m, VectorXd v, std::int64_t t, std::int64_t skipped);

private:
    VectorXd m_;
    VectorXd v_;
    std::int64_t t_ = 0;
    std::int64_t skipped_ = 0;
};

/// Process-wide count of applied Adam steps (instrumentation).
std::uint64_t adam_step_count();

} // namespace decalforge
