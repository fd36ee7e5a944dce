#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace epifit {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// Adam over an arbitrary list of weight matrices. Moments are kept in the
/// same scalar type as the weights; bias correction uses the running step
/// count, so one optimizer instance serves exactly one weight list.
template <typename S>
class Adam {
public:
    Adam(double beta1, double beta2, double eps)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Mat<S>*>& weights, const std::vector<const Mat<S>*>& grads,
              double lr) {
        if (m_.empty()) {
            m_.reserve(weights.size());
            v_.reserve(weights.size());
            for (const Mat<S>* w : weights) {
                m_.push_back(Mat<S>::Zero(w->rows(), w->cols()));
                v_.push_back(Mat<S>::Zero(w->rows(), w->cols()));
            }
        }
        ++t_;
        const S b1 = static_cast<S>(beta1_);
        const S b2 = static_cast<S>(beta2_);
        const S corr1 = static_cast<S>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
        const S corr2 = static_cast<S>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
        const S alpha = static_cast<S>(lr);
        const S eps = static_cast<S>(eps_);
        for (std::size_t k = 0; k < weights.size(); ++k) {
            auto& m = m_[k];
            auto& v = v_[k];
            const auto& g = grads[k]->array();
            m.array() = b1 * m.array() + (S(1) - b1) * g;
            v.array() = b2 * v.array() + (S(1) - b2) * g * g;
            weights[k]->array() -=
                alpha * (m.array() / corr1) / ((v.array() / corr2).sqrt() + eps);
        }
    }

    long long steps_taken() const { return t_; }

private:
    double beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<Mat<S>> m_, v_;
};

} // namespace epifit
