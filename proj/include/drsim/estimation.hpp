// Online demand-model learning.
//
// Least squares on (price, reduction) pairs for theta = (a, b), maintained
// incrementally: the Gram matrix P_t and moment vector in O(1) per
// observation, P_t^{-1} by the Sherman-Morrison rank-one update once two
// distinct prices have been seen, price mean/variance by Welford updates.
// The working estimate is the truncated LSE (TLSE): the raw LSE clamped
// componentwise into the admissible box. Residuals are recomputed in full
// under the current TLSE on demand, because every residual changes when the
// estimate moves.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "drsim/demand.hpp"
#include "drsim/errors.hpp"

namespace drsim {

/// Residuals under the estimator that produced them: original observation
/// order plus sorted order statistics.
struct ResidualSet {
    std::vector<double> values;  // epsilon-hat_k in observation order
    std::vector<double> sorted;  // order statistics, ascending
};

/// Euclidean projection of a raw estimate onto the box; for a box this is
/// the componentwise clamp, which never increases the distance to any point
/// of the box.
inline DemandParams truncate(const DemandParams& theta_raw, const ParamBox& box) {
    return box.clamp(theta_raw.a, theta_raw.b);
}

/// Running least-squares state. Single-owner mutable value: one instance
/// per simulated episode.
class EstimatorState {
  public:
    explicit EstimatorState(ParamBox box) : box_(box) { box_.validate(); }

    const ParamBox& box() const { return box_; }
    std::size_t count() const { return history_.size(); }
    const std::vector<std::pair<double, double>>& history() const { return history_; }

    /// Mean of posted prices so far.
    double price_mean() const {
        if (history_.empty()) throw StateError("EstimatorState: no observations yet");
        return mean_p_;
    }

    /// Population variance V_t = (1/t) sum (p_k - mean)^2.
    double price_var() const {
        if (history_.empty()) throw StateError("EstimatorState: no observations yet");
        return m2_p_ / static_cast<double>(count());
    }

    /// True once the Gram matrix is invertible, i.e. at least two
    /// observations with distinct prices.
    bool invertible() const { return have_inv_; }

    /// Row-major 2x2 Gram matrix P_t = sum (p_k,1)(p_k,1)^T.
    std::array<double, 4> gram() const {
        return {sum_p2_, sum_p_, sum_p_, static_cast<double>(count())};
    }

    /// Row-major P_t^{-1}.
    std::array<double, 4> gram_inv() const {
        require_invertible();
        return inv_;
    }

    /// Raw LSE theta_t = P_t^{-1} sum (p_k,1)^T D_k.
    DemandParams theta_raw() const {
        require_invertible();
        DemandParams t;
        t.a = inv_[0] * sum_pd_ + inv_[1] * sum_d_;
        t.b = inv_[2] * sum_pd_ + inv_[3] * sum_d_;
        return t;
    }

    /// TLSE: raw LSE clamped into the box.
    DemandParams theta_hat() const { return truncate(theta_raw(), box_); }

    /// Fold in one (price, reduction) observation.
    void observe(double price, double reduction) {
        if (have_inv_) {
            if (++since_refresh_ >= kRefreshInterval) {
                // Recompute the inverse directly once in a while to cap
                // rank-one rounding drift. Done before the new rank-one
                // update so the update applies to a fresh inverse.
                direct_inverse();
                since_refresh_ = 0;
            }
            sherman_morrison(price);
        }
        sum_p_ += price;
        sum_p2_ += price * price;
        sum_d_ += reduction;
        sum_pd_ += price * reduction;
        history_.emplace_back(price, reduction);
        const double n = static_cast<double>(count());
        const double delta = price - mean_p_;
        mean_p_ += delta / n;
        m2_p_ += delta * (price - mean_p_);
        if (!have_inv_ && count() >= 2 && m2_p_ > 0.0) {
            direct_inverse();
            have_inv_ = true;
            since_refresh_ = 0;
        }
    }

    /// All residuals under the current TLSE, recomputed from scratch and
    /// sorted (stable, so ties keep observation order).
    ResidualSet residuals() const {
        require_invertible();
        const DemandParams t = theta_hat();
        ResidualSet res;
        res.values.reserve(count());
        for (const auto& [p, d] : history_) res.values.push_back(d - (t.a * p + t.b));
        res.sorted = res.values;
        std::stable_sort(res.sorted.begin(), res.sorted.end());
        return res;
    }

  private:
    static constexpr int kRefreshInterval = 512;

    void require_invertible() const {
        if (!have_inv_)
            throw StateError("EstimatorState: estimates undefined before two distinct prices");
    }

    void direct_inverse() {
        const double n = static_cast<double>(count());
        const double det = sum_p2_ * n - sum_p_ * sum_p_;
        inv_ = {n / det, -sum_p_ / det, -sum_p_ / det, sum_p2_ / det};
    }

    /// P_t^{-1} from P_{t-1}^{-1} after adding x x^T with x = (price, 1)^T.
    void sherman_morrison(double price) {
        const double v0 = inv_[0] * price + inv_[1];  // P^{-1} x
        const double v1 = inv_[2] * price + inv_[3];
        const double denom = 1.0 + price * v0 + v1;   // 1 + x^T P^{-1} x
        inv_[0] -= v0 * v0 / denom;
        inv_[1] -= v0 * v1 / denom;
        inv_[2] -= v1 * v0 / denom;
        inv_[3] -= v1 * v1 / denom;
    }

    ParamBox box_;
    std::vector<std::pair<double, double>> history_;
    double sum_p_ = 0.0, sum_p2_ = 0.0, sum_d_ = 0.0, sum_pd_ = 0.0;
    double mean_p_ = 0.0, m2_p_ = 0.0;
    std::array<double, 4> inv_ = {0.0, 0.0, 0.0, 0.0};
    bool have_inv_ = false;
    int since_refresh_ = 0;
};

/// Empirical quantile of the residuals: the order statistic with index
/// i = ceil(t * alpha), the unique i with i-1 < t*alpha <= i. Coincides
/// with inf{x : F-hat(x) >= alpha}.
inline double empirical_quantile(const ResidualSet& res, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("empirical_quantile: alpha must lie in (0,1)");
    if (res.sorted.empty()) throw StateError("empirical_quantile: empty residual set");
    const double t = static_cast<double>(res.sorted.size());
    auto i = static_cast<std::size_t>(std::ceil(t * alpha));
    if (i < 1) i = 1;
    if (i > res.sorted.size()) i = res.sorted.size();
    return res.sorted[i - 1];
}

}  // namespace drsim
