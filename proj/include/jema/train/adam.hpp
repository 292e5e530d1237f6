#pragma once

#include <cmath>
#include <vector>

#include "jema/nn/layers.hpp"

namespace jema::train {

// Adaptive-moment gradient descent with bias correction.
class Adam {
public:
    Adam(std::vector<nn::Parameter*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (const nn::Parameter* p : params_) {
            m_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
        }
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
            const Eigen::MatrixXd mhat = m_[i] / bc1;
            const Eigen::MatrixXd vhat = v_[i] / bc2;
            p.value.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
        }
    }

    void zero_grad() {
        for (nn::Parameter* p : params_) p->zero_grad();
    }

    double lr() const { return lr_; }

private:
    std::vector<nn::Parameter*> params_;
    std::vector<Eigen::MatrixXd> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

}  // namespace jema::train
