// Zero-mean normal distribution truncated to a bounded interval.
//
// The CDF goes through a rational-approximation erf (W. J. Cody, "Rational
// Chebyshev approximation for the error function", Math. Comp. 23, 1969)
// rather than a platform special function, so results are identical across
// toolchains. Quantiles are obtained by bisection on the CDF.
#pragma once

#include <cmath>
#include <stdexcept>

#include "drsim/rng.hpp"

namespace drsim {

namespace detail {

// Cody's erf/erfc, three-region rational approximation. Absolute error is
// below 1e-15 over the real line, well inside the 1e-12 budget.
inline double erfc_cody(double x);

inline double erf_cody(double x) {
    const double ax = std::fabs(x);
    if (ax > 0.46875) return x < 0.0 ? erfc_cody(ax) - 1.0 : 1.0 - erfc_cody(ax);
    // |x| <= 0.46875: erf(x) = x * R(x^2)
    static const double a[5] = {3.16112374387056560e+00, 1.13864154151050156e+02,
                                3.77485237685302021e+02, 3.20937758913846947e+03,
                                1.85777706184603153e-01};
    static const double b[4] = {2.36012909523441209e+01, 2.44024637934444173e+02,
                                1.28261652607737228e+03, 2.84423683343917062e+03};
    const double z = x * x;
    double num = a[4] * z;
    double den = z;
    for (int i = 0; i < 3; ++i) {
        num = (num + a[i]) * z;
        den = (den + b[i]) * z;
    }
    return x * (num + a[3]) / (den + b[3]);
}

inline double erfc_cody(double x) {
    if (x < 0.0) return 2.0 - erfc_cody(-x);
    if (x <= 0.46875) return 1.0 - erf_cody(x);
    double result;
    if (x <= 4.0) {
        // 0.5 < x <= 4: erfc(x) = exp(-x^2) * R(x)
        static const double c[9] = {5.64188496988670089e-01, 8.88314979438837594e+00,
                                    6.61191906371416295e+01, 2.98635138197400131e+02,
                                    8.81952221241769090e+02, 1.71204761263407058e+03,
                                    2.05107837782607147e+03, 1.23033935479799725e+03,
                                    2.15311535474403846e-08};
        static const double d[8] = {1.57449261107098347e+01, 1.17693950891312499e+02,
                                    5.37181101862009858e+02, 1.62138957456669019e+03,
                                    3.29079923573345963e+03, 4.36261909014324716e+03,
                                    3.43936767414372164e+03, 1.23033935480374942e+03};
        double num = c[8] * x;
        double den = x;
        for (int i = 0; i < 7; ++i) {
            num = (num + c[i]) * x;
            den = (den + d[i]) * x;
        }
        result = (num + c[7]) / (den + d[7]);
    } else {
        // x > 4: erfc(x) = exp(-x^2)/x * (1/sqrt(pi) + R(1/x^2)/x^2)
        static const double p[6] = {3.05326634961232344e-01, 3.60344899949804439e-01,
                                    1.25781726111229246e-01, 1.60837851487422766e-02,
                                    6.58749161529837803e-04, 1.63153871373020978e-02};
        static const double q[5] = {2.56852019228982242e+00, 1.87295284992346047e+00,
                                    5.27905102951428412e-01, 6.05183413124413191e-02,
                                    2.33520497626869185e-03};
        if (x >= 26.6) return 0.0;  // underflows double anyway
        const double z = 1.0 / (x * x);
        double num = p[5] * z;
        double den = z;
        for (int i = 0; i < 4; ++i) {
            num = (num + p[i]) * z;
            den = (den + q[i]) * z;
        }
        result = z * (num + p[4]) / (den + q[4]);
        result = (5.6418958354775628695e-01 - result) / x;
    }
    // exp(-x^2) computed in split form to limit argument-rounding error.
    const double xsq = std::floor(x * 16.0) / 16.0;
    const double del = (x - xsq) * (x + xsq);
    return std::exp(-xsq * xsq) * std::exp(-del) * result;
}

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double std_normal_cdf(double x) { return 0.5 * erfc_cody(-x * kInvSqrt2); }
inline double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace detail

/// N(0, sigma^2) conditioned on [lo, hi].
class TruncatedNormal {
  public:
    TruncatedNormal(double sigma, double lo, double hi) : sigma_(sigma), lo_(lo), hi_(hi) {
        if (!(sigma > 0.0)) throw std::invalid_argument("TruncatedNormal: sigma must be > 0");
        if (!(lo < hi)) throw std::invalid_argument("TruncatedNormal: require lo < hi");
        cdf_lo_ = detail::std_normal_cdf(lo_ / sigma_);
        mass_ = detail::std_normal_cdf(hi_ / sigma_) - cdf_lo_;
        if (!(mass_ > 0.0))
            throw std::invalid_argument("TruncatedNormal: truncation interval carries no mass");
    }

    double sigma() const { return sigma_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    double pdf(double x) const {
        if (x < lo_ || x > hi_) return 0.0;
        return detail::std_normal_pdf(x / sigma_) / (sigma_ * mass_);
    }

    double cdf(double x) const {
        if (x <= lo_) return 0.0;
        if (x >= hi_) return 1.0;
        const double c = (detail::std_normal_cdf(x / sigma_) - cdf_lo_) / mass_;
        return c < 0.0 ? 0.0 : (c > 1.0 ? 1.0 : c);
    }

    /// inf{x : cdf(x) >= alpha}, by bisection to 1e-12 of the support width.
    double quantile(double alpha) const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::domain_error("TruncatedNormal::quantile: alpha must lie in (0,1)");
        double a = lo_, b = hi_;
        const double tol = 1e-12 * std::max(1.0, hi_ - lo_);
        while (b - a > tol) {
            const double m = 0.5 * (a + b);
            if (cdf(m) >= alpha)
                b = m;
            else
                a = m;
        }
        return 0.5 * (a + b);
    }

    double mean() const {
        const double a0 = lo_ / sigma_, b0 = hi_ / sigma_;
        return sigma_ * (detail::std_normal_pdf(a0) - detail::std_normal_pdf(b0)) / mass_;
    }

    double variance() const {
        const double a0 = lo_ / sigma_, b0 = hi_ / sigma_;
        const double pa = detail::std_normal_pdf(a0), pb = detail::std_normal_pdf(b0);
        const double m1 = (pa - pb) / mass_;
        return sigma_ * sigma_ * (1.0 + (a0 * pa - b0 * pb) / mass_ - m1 * m1);
    }

    /// One draw. Rejection from N(0, sigma) when the interval keeps at least
    /// 10% of the mass, otherwise inverse-CDF on a single uniform.
    double sample(Rng& rng) const {
        if (mass_ >= 0.1) {
            for (;;) {
                const double x = sigma_ * rng.normal();
                if (x >= lo_ && x <= hi_) return x;
            }
        }
        double u = rng.uniform01();
        if (u <= 0.0) u = 0x1.0p-53;
        return quantile(u);
    }

  private:
    double sigma_, lo_, hi_;
    double cdf_lo_, mass_;
};

}  // namespace drsim
