#pragma once

// Numerical statistics used by the significance procedures: distribution
// CDFs, least-squares regression and the hypothesis tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "factweaver/errors.hpp"

namespace factweaver::stats {

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kEps = 1e-16;
inline constexpr double kTiny = 1e-300;
inline constexpr int kMaxIter = 10000;

// Series expansion of P(a, x), valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < kMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), valid for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw DomainError("gamma_p: invalid arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw DomainError("gamma_q: invalid arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_fraction(a, x);
}

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0 || x < 0.0 || x > 1.0) throw DomainError("incomplete_beta: invalid arguments");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front =
        std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_fraction(b, a, 1.0 - x) / b;
}

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

struct Normal {
    double mu = 0.0;
    double sigma = 1.0;
};

struct Logistic {
    double mu = 0.0;
    double s = 1.0;
};

struct StudentT {
    double nu = 1.0;
};

struct ChiSquare {
    double nu = 1.0;
};

using Distribution = std::variant<Normal, Logistic, StudentT, ChiSquare>;

inline void check(const Normal& d) {
    if (!(d.sigma > 0.0)) throw DomainError("normal: sigma must be positive");
}
inline void check(const Logistic& d) {
    if (!(d.s > 0.0)) throw DomainError("logistic: scale must be positive");
}
inline void check(const StudentT& d) {
    if (!(d.nu >= 1.0)) throw DomainError("student t: degrees of freedom must be >= 1");
}
inline void check(const ChiSquare& d) {
    if (!(d.nu >= 1.0)) throw DomainError("chi-square: degrees of freedom must be >= 1");
}

inline double cdf(const Normal& d, double x) {
    check(d);
    return 0.5 * std::erfc(-(x - d.mu) / (d.sigma * std::sqrt(2.0)));
}

/// Upper tail P(X > x).
inline double sf(const Normal& d, double x) {
    check(d);
    return 0.5 * std::erfc((x - d.mu) / (d.sigma * std::sqrt(2.0)));
}

inline double cdf(const Logistic& d, double x) {
    check(d);
    const double z = (x - d.mu) / d.s;
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline double sf(const Logistic& d, double x) {
    check(d);
    return cdf(Logistic{-d.mu, d.s}, -x);
}

inline double sf(const StudentT& d, double t) {
    check(d);
    if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
    const double tail = 0.5 * incomplete_beta(d.nu / 2.0, 0.5, d.nu / (d.nu + t * t));
    return t > 0 ? tail : 1.0 - tail;
}

inline double cdf(const StudentT& d, double t) {
    check(d);
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(d.nu / 2.0, 0.5, d.nu / (d.nu + t * t));
    return t > 0 ? 1.0 - tail : tail;
}

inline double cdf(const ChiSquare& d, double x) {
    check(d);
    if (x <= 0.0) return 0.0;
    return gamma_p(d.nu / 2.0, x / 2.0);
}

inline double sf(const ChiSquare& d, double x) {
    check(d);
    if (x <= 0.0) return 1.0;
    return gamma_q(d.nu / 2.0, x / 2.0);
}

inline double cdf(const Distribution& d, double x) {
    return std::visit([x](const auto& dist) { return cdf(dist, x); }, d);
}

inline double sf(const Distribution& d, double x) {
    return std::visit([x](const auto& dist) { return sf(dist, x); }, d);
}

/// Inverse standard normal CDF: Acklam's rational approximation polished by
/// one Halley step against erfc.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw DomainError("normal_quantile: p outside [0, 1]");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01, -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * kPi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

/// Inverse Student t CDF by bracketing and bisection.
inline double student_t_quantile(double p, double nu) {
    check(StudentT{nu});
    if (!(p > 0.0 && p < 1.0)) throw DomainError("student_t_quantile: p must be in (0, 1)");
    double lo = -1.0, hi = 1.0;
    while (cdf(StudentT{nu}, lo) > p) lo *= 2.0;
    while (cdf(StudentT{nu}, hi) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(StudentT{nu}, mid) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Regression and tests
// ---------------------------------------------------------------------------

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

namespace detail {

inline double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace detail

/// Least squares of y against its index rescaled to [0, 1].
/// Constant y yields slope 0 and r^2 = 0.
inline RegressionFit linear_regression(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 3) throw InsufficientData("linear regression needs at least 3 points");
    const double denom = static_cast<double>(n - 1);
    double x_mean = 0.5;
    const double y_mean = detail::mean(y);
    double sxx = 0, sxy = 0, sst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) / denom - x_mean;
        const double dy = y[i] - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        sst += dy * dy;
    }
    RegressionFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = y_mean - fit.slope * x_mean;
    if (sst == 0.0) {
        fit.r_squared = 0.0;
        return fit;
    }
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (fit.intercept + fit.slope * static_cast<double>(i) / denom);
        sse += e * e;
    }
    fit.r_squared = sse <= 1e-24 * sst ? 1.0 : detail::clamp01(1.0 - sse / sst);
    return fit;
}

struct PearsonResult {
    double r = 0.0;
    TestResult test;
};

/// Pearson correlation with a two-tailed t test on n - 2 degrees of freedom.
inline PearsonResult pearson_test(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("pearson_test: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw InsufficientData("pearson_test needs at least 3 pairs");
    const double mx = detail::mean(x), my = detail::mean(y);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("pearson_test: zero variance");
    PearsonResult out;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double one_minus = 1.0 - out.r * out.r;
    if (one_minus <= 1e-15) {
        out.r = out.r > 0 ? 1.0 : -1.0;
        out.test = {std::copysign(std::numeric_limits<double>::infinity(), out.r), 0.0};
        return out;
    }
    const double dof = static_cast<double>(n - 2);
    const double t = out.r * std::sqrt(dof / one_minus);
    out.test.statistic = t;
    out.test.p_value = detail::clamp01(2.0 * sf(StudentT{dof}, std::fabs(t)));
    return out;
}

/// Chi-square goodness of fit against equal counts.
inline TestResult chi_square_uniform(std::span<const double> counts) {
    const std::size_t k = counts.size();
    if (k < 2) throw DegenerateInput("chi-square test needs at least 2 categories");
    double total = 0;
    for (double c : counts) {
        if (c < 0) throw DomainError("chi-square counts must be non-negative");
        total += c;
    }
    if (total <= 0) throw DegenerateInput("chi-square test needs a positive total");
    const double expected = total / static_cast<double>(k);
    double stat = 0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    return {stat, detail::clamp01(sf(ChiSquare{static_cast<double>(k - 1)}, stat))};
}

namespace detail {

inline double poly(const double* cc, int nord, double x) {
    double ret = cc[0];
    if (nord > 1) {
        double p = x * cc[nord - 1];
        for (int j = nord - 2; j > 0; --j) p = (p + cc[j]) * x;
        ret += p;
    }
    return ret;
}

}  // namespace detail

/// Shapiro-Wilk W with Royston's (1995) coefficient and p-value
/// approximation, valid for 3 <= n <= 5000.
inline TestResult shapiro_wilk(std::span<const double> data) {
    const std::size_t n = data.size();
    if (n < 3 || n > 5000) throw DegenerateInput("shapiro_wilk needs 3 <= n <= 5000");
    std::vector<double> x(data.begin(), data.end());
    std::sort(x.begin(), x.end());
    const double range = x.back() - x.front();
    if (range < 1e-19 * std::max(1.0, std::fabs(x.back()))) throw DegenerateInput("shapiro_wilk: zero variance");

    static constexpr double g[] = {-2.273, 0.459};
    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};

    const std::size_t half = n / 2;
    const double an = static_cast<double>(n);
    std::vector<double> a(half);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        std::vector<double> m(half);
        double summ2 = 0;
        for (std::size_t i = 0; i < half; ++i) {
            m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = detail::poly(c1, 6, rsn) - m[0] / ssumm2;
        std::size_t first;
        double fac;
        if (n > 5) {
            first = 2;
            const double a2 = -m[1] / ssumm2 + detail::poly(c2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                            (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
        } else {
            first = 1;
            fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
    }

    // W is the squared correlation between the ordered sample and the
    // antisymmetric coefficient vector.
    std::vector<double> coeff(n, 0.0);
    for (std::size_t i = 0; i < half; ++i) {
        coeff[i] = -a[i];
        coeff[n - 1 - i] = a[i];
    }
    const double cm = detail::mean(coeff);
    const double xm = detail::mean(x);
    double ssa = 0, ssx = 0, sax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ca = coeff[i] - cm;
        const double cx = (x[i] - xm) / range;
        ssa += ca * ca;
        ssx += cx * cx;
        sax += ca * cx;
    }
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    const double w = 1.0 - w1;

    TestResult out{w, 1.0};
    if (n == 3) {
        constexpr double pi6 = 1.90985931710274;
        constexpr double stqr = 1.04719755119660;
        out.p_value = detail::clamp01(pi6 * (std::asin(std::sqrt(w)) - stqr));
        return out;
    }
    double y = std::log(w1);
    const double xx = std::log(an);
    double mean, sd;
    if (n <= 11) {
        const double gamma = detail::poly(g, 2, an);
        if (y >= gamma) {
            out.p_value = 1e-99;
            return out;
        }
        y = -std::log(gamma - y);
        mean = detail::poly(c3, 4, an);
        sd = std::exp(detail::poly(c4, 4, an));
    } else {
        mean = detail::poly(c5, 4, xx);
        sd = std::exp(detail::poly(c6, 3, xx));
    }
    out.p_value = detail::clamp01(sf(Normal{mean, sd}, y));
    return out;
}

struct GrubbsResult {
    std::optional<std::size_t> outlier_index;
    TestResult test;
    double critical_value = 0.0;
};

/// Two-sided Grubbs test. The outlier is reported only when G exceeds the
/// t-based critical value at `alpha`; the p-value is always filled.
inline GrubbsResult grubbs_test(std::span<const double> x, double alpha = 0.05) {
    const std::size_t n = x.size();
    if (n < 3) throw DegenerateInput("grubbs_test needs at least 3 values");
    const double m = detail::mean(x);
    double ss = 0;
    for (double v : x) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 1e-300) || ss <= 1e-24 * std::max(1.0, m * m)) throw DegenerateInput("grubbs_test: zero variance");

    std::size_t idx = 0;
    double g = -1;
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = std::fabs(x[i] - m) / sd;
        if (dev > g) {
            g = dev;
            idx = i;
        }
    }
    const double nn = static_cast<double>(n);
    const double dof = nn - 2.0;
    const double t_crit = student_t_quantile(1.0 - alpha / (2.0 * nn), dof);
    const double g_crit = (nn - 1.0) / std::sqrt(nn) * std::sqrt(t_crit * t_crit / (dof + t_crit * t_crit));

    GrubbsResult out;
    out.critical_value = g_crit;
    out.test.statistic = g;
    const double denom = (nn - 1.0) * (nn - 1.0) - nn * g * g;
    if (denom <= 0.0) {
        out.test.p_value = 0.0;
    } else {
        const double t = std::sqrt(nn * dof * g * g / denom);
        out.test.p_value = detail::clamp01(2.0 * nn * sf(StudentT{dof}, t));
    }
    if (g > g_crit) out.outlier_index = idx;
    return out;
}

inline constexpr double kPowerLawExponent = 0.7;

/// Tests whether the first (largest) value of a descending series stands out
/// from a power-law fit x_i ~ a * i^-0.7 + b over the remaining values. The
/// statistic is the residual of the maximum; the p-value is its upper tail
/// under a Gaussian fitted to the other residuals.
inline TestResult power_law_residual_test(std::span<const double> sorted_desc) {
    const std::size_t n = sorted_desc.size();
    if (n < 4) throw InsufficientData("power-law residual test needs at least 4 values");
    for (std::size_t i = 0; i < n; ++i) {
        if (sorted_desc[i] < 0) throw DomainError("power-law residual test needs non-negative values");
        if (i > 0 && sorted_desc[i] > sorted_desc[i - 1]) throw DomainError("values must be sorted descending");
    }
    const std::size_t m = n - 1;
    std::vector<double> z(m), v(m);
    for (std::size_t k = 0; k < m; ++k) {
        z[k] = std::pow(static_cast<double>(k + 2), -kPowerLawExponent);
        v[k] = sorted_desc[k + 1];
    }
    const double zm = detail::mean(z), vm = detail::mean(v);
    double szz = 0, szv = 0;
    for (std::size_t k = 0; k < m; ++k) {
        szz += (z[k] - zm) * (z[k] - zm);
        szv += (z[k] - zm) * (v[k] - vm);
    }
    const double slope = szv / szz;
    const double intercept = vm - slope * zm;
    std::vector<double> residuals(m);
    for (std::size_t k = 0; k < m; ++k) residuals[k] = v[k] - (slope * z[k] + intercept);
    const double rm = detail::mean(residuals);
    double sse = 0;
    for (double r : residuals) sse += (r - rm) * (r - rm);
    const double sigma = std::sqrt(sse / static_cast<double>(m - 2));

    const double predicted = slope * 1.0 + intercept;
    const double residual = sorted_desc[0] - predicted;
    const double scale = std::max(1.0, std::fabs(sorted_desc[0]));
    TestResult out{residual, 0.5};
    if (sigma <= 1e-12 * scale) {
        const double tol = 1e-9 * scale;
        if (residual > rm + tol)
            out.p_value = 0.0;
        else if (residual < rm - tol)
            out.p_value = 1.0;
        return out;
    }
    out.p_value = detail::clamp01(sf(Normal{rm, sigma}, residual));
    return out;
}

}  // namespace factweaver::stats
