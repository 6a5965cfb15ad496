// Copyright 2026 The decalforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "decalforge/neural.hpp"

#include <random>

#include <fmt/format.h>

namespace decalforge {

namespace {
std::atomic<std::uint64_t> g_adam_steps{0};
} // namespace

VectorXd PosEnc::encode(const VectorXd& p) {
    MatrixXd m = p;
    return encode(m).col(0);
}

MatrixXd PosEnc::encode(const MatrixXd& p) {
    const int d = static_cast<int>(p.rows());
    constexpr int per = 1 + 2 * kOctaves;
    MatrixXd out(d * per, p.cols());
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        for (int c = 0; c < d; ++c) {
            const double x = p(c, j);
            out(c * per, j) = x;
            double freq = kPi;
            for (int k = 0; k < kOctaves; ++k) {
                out(c * per + 1 + 2 * k, j) = std::sin(freq * x);
                out(c * per + 2 + 2 * k, j) = std::cos(freq * x);
                freq *= 2.0;
            }
        }
    }
    return out;
}

Mlp::Mlp(int input_dim, int hidden_dim, int output_dim)
    : in_(input_dim), hidden_(hidden_dim), out_(output_dim) {
    if (in_ <= 0 || hidden_ <= 0 || out_ <= 0) {
        throw Error("MLP dimensions must be positive");
    }
    const Eigen::Index n = Eigen::Index(hidden_) * in_ + hidden_ + Eigen::Index(hidden_) * hidden_ + hidden_ +
                           Eigen::Index(out_) * hidden_ + out_;
    params_ = VectorXd::Zero(n);
}

Mlp Mlp::kaiming(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed) {
    Mlp net(input_dim, hidden_dim, output_dim);
    std::mt19937_64 rng(seed);
    for (int layer = 0; layer < 3; ++layer) {
        auto w = net.weight(layer);
        const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                w(i, j) = dist(rng);
            }
        }
    }
    return net;
}

Eigen::Index Mlp::offset(int layer, bool bias) const {
    const Eigen::Index rows[3] = {hidden_, hidden_, out_};
    const Eigen::Index cols[3] = {in_, hidden_, hidden_};
    Eigen::Index off = 0;
    for (int l = 0; l < layer; ++l) {
        off += rows[l] * cols[l] + rows[l];
    }
    return bias ? off + rows[layer] * cols[layer] : off;
}

Eigen::Map<MatrixXd> Mlp::weight(int layer) {
    const int rows = layer == 2 ? out_ : hidden_;
    const int cols = layer == 0 ? in_ : hidden_;
    return Eigen::Map<MatrixXd>(params_.data() + offset(layer, false), rows, cols);
}

Eigen::Map<const MatrixXd> Mlp::weight(int layer) const {
    const int rows = layer == 2 ? out_ : hidden_;
    const int cols = layer == 0 ? in_ : hidden_;
    return Eigen::Map<const MatrixXd>(params_.data() + offset(layer, false), rows, cols);
}

Eigen::Map<VectorXd> Mlp::bias(int layer) {
    return Eigen::Map<VectorXd>(params_.data() + offset(layer, true), layer == 2 ? out_ : hidden_);
}

Eigen::Map<const VectorXd> Mlp::bias(int layer) const {
    return Eigen::Map<const VectorXd>(params_.data() + offset(layer, true), layer == 2 ? out_ : hidden_);
}

MatrixXd Mlp::forward(const MatrixXd& x, Cache* cache) const {
    if (x.rows() != in_) {
        throw Error(fmt::format("MLP expects input dimension {}, got {}", in_, x.rows()));
    }
    MatrixXd a0 = weight(0) * x;
    a0.colwise() += bias(0);
    a0 = a0.cwiseMax(0.0);
    MatrixXd a1 = weight(1) * a0;
    a1.colwise() += bias(1);
    a1 = a1.cwiseMax(0.0);
    MatrixXd y = weight(2) * a1;
    y.colwise() += bias(2);
    if (cache) {
        cache->x = x;
        cache->a0 = std::move(a0);
        cache->a1 = std::move(a1);
        cache->valid = true;
    }
    return y;
}

VectorXd Mlp::forward(const VectorXd& x) const {
    const MatrixXd m = x;
    return forward(m, nullptr).col(0);
}

MatrixXd Mlp::backward(const Cache& cache, const MatrixXd& dy, VectorXd& param_grad) const {
    if (!cache.valid) {
        throw StateError("MLP backward called without a forward cache");
    }
    if (dy.rows() != out_ || dy.cols() != cache.x.cols()) {
        throw Error(fmt::format("MLP output gradient is {}x{}, expected {}x{}", dy.rows(), dy.cols(), out_,
                                cache.x.cols()));
    }
    if (param_grad.size() != params_.size()) {
        param_grad = VectorXd::Zero(params_.size());
    }
    auto gw = [&](int layer) {
        const int rows = layer == 2 ? out_ : hidden_;
        const int cols = layer == 0 ? in_ : hidden_;
        return Eigen::Map<MatrixXd>(param_grad.data() + offset(layer, false), rows, cols);
    };
    auto gb = [&](int layer) {
        return Eigen::Map<VectorXd>(param_grad.data() + offset(layer, true), layer == 2 ? out_ : hidden_);
    };

    gw(2).noalias() += dy * cache.a1.transpose();
    gb(2) += dy.rowwise().sum();
    MatrixXd dz1 = weight(2).transpose() * dy;
    dz1 = (cache.a1.array() > 0.0).select(dz1, 0.0);
    gw(1).noalias() += dz1 * cache.a0.transpose();
    gb(1) += dz1.rowwise().sum();
    MatrixXd dz0 = weight(1).transpose() * dz1;
    dz0 = (cache.a0.array() > 0.0).select(dz0, 0.0);
    gw(0).noalias() += dz0 * cache.x.transpose();
    gb(0) += dz0.rowwise().sum();
    return weight(0).transpose() * dz0;
}

bool Adam::step(Eigen::Ref<VectorXd> params, const Eigen::Ref<const VectorXd>& grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw Error(fmt::format("Adam state has {} entries, got {} params and {} grads", m_.size(), params.size(),
                                grad.size()));
    }
    if (!grad.allFinite()) {
        ++skipped_;
        return false;
    }
    ++t_;
    m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
    v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
    g_adam_steps.fetch_add(1, std::memory_order_relaxed);
    return true;
}

void Adam::restore(VectorXd m, VectorXd v, std::int64_t t, std::int64_t skipped) {
    if (m.size() != v.size()) {
        throw Error("Adam moments differ in size");
    }
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
    skipped_ = skipped;
}

std::uint64_t adam_step_count() { return g_adam_steps.load(std::memory_order_relaxed); }

} // namespace decalforge
