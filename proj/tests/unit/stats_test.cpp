#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "factweaver/stats.hpp"
#include "factweaver/util.hpp"

using namespace factweaver;
using namespace factweaver::stats;

namespace {

double t_density(double x, double nu) {
    const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * kPi);
    return c * std::pow(1 + x * x / nu, -(nu + 1) / 2);
}

double t_cdf_quadrature(double x, double nu) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double tail = integrator.integrate([nu](double u) { return t_density(u, nu); }, 0.0, std::fabs(x));
    return x >= 0 ? 0.5 + tail : 0.5 - tail;
}

double chi2_cdf_quadrature(double x, double k) {
    const double c = 1.0 / (std::pow(2.0, k / 2) * std::tgamma(k / 2));
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate([&](double u) { return c * std::pow(u, k / 2 - 1) * std::exp(-u / 2); }, 0.0, x);
}

std::vector<double> normal_sample(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<double> out;
    while (out.size() < n) {
        const double u1 = uniform01(rng), u2 = uniform01(rng);
        if (u1 <= 0) continue;
        out.push_back(std::sqrt(-2 * std::log(u1)) * std::cos(2 * kPi * u2));
    }
    return out;
}

}  // namespace

TEST(Cdf, Symmetry) {
    EXPECT_DOUBLE_EQ(cdf(Normal{0, 1}, 0), 0.5);
    for (double nu : {1.0, 2.0, 7.0, 30.0}) EXPECT_DOUBLE_EQ(cdf(StudentT{nu}, 0), 0.5);
    EXPECT_DOUBLE_EQ(cdf(Logistic{2, 3}, 2), 0.5);
}

TEST(Cdf, StudentTMatchesQuadrature) {
    EXPECT_NEAR(cdf(StudentT{10}, 1.812), t_cdf_quadrature(1.812, 10), 1e-9);
    EXPECT_NEAR(cdf(StudentT{10}, 1.812), 0.95, 1e-3);
    for (double nu : {1.0, 3.0, 10.0, 25.0})
        for (double x : {-4.0, -1.3, 0.2, 0.9, 2.5, 6.0}) EXPECT_NEAR(cdf(StudentT{nu}, x), t_cdf_quadrature(x, nu), 1e-9);
}

TEST(Cdf, ChiSquareMatchesQuadrature) {
    for (double k : {1.0, 2.0, 4.0, 9.0})
        for (double x : {0.3, 1.0, 3.7, 8.0, 15.0}) EXPECT_NEAR(cdf(ChiSquare{k}, x), chi2_cdf_quadrature(x, k), 1e-9);
}

TEST(Cdf, NormalAndLogisticMatchQuadrature) {
    boost::math::quadrature::gauss_kronrod<double, 61> gk;
    for (double x : {-3.0, -0.5, 0.7, 2.2}) {
        const double n = 0.5 + gk.integrate([](double u) { return std::exp(-u * u / 2) / std::sqrt(2 * kPi); }, 0.0, x);
        EXPECT_NEAR(cdf(Normal{0, 1}, x), n, 1e-9);
        const double s = 0.5;
        const double l = 0.5 + gk.integrate(
                                   [s](double u) {
                                       const double e = std::exp(-u / s);
                                       return e / (s * (1 + e) * (1 + e));
                                   },
                                   0.0, x);
        EXPECT_NEAR(cdf(Logistic{0, s}, x), l, 1e-9);
    }
}

TEST(Cdf, MonotoneOnGrid) {
    const std::vector<Distribution> dists{Normal{1, 2}, Logistic{0, 0.5}, StudentT{3}, ChiSquare{5}};
    for (const auto& d : dists) {
        double prev = 0;
        for (double x = -20; x <= 20; x += 0.05) {
            const double p = cdf(d, x);
            EXPECT_GE(p, prev - 1e-15);
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
            prev = p;
        }
    }
}

TEST(Cdf, InvalidParameters) {
    EXPECT_THROW(cdf(Normal{0, 0}, 1), DomainError);
    EXPECT_THROW(cdf(Logistic{0, -1}, 1), DomainError);
    EXPECT_THROW(cdf(StudentT{0.5}, 1), DomainError);
    EXPECT_THROW(cdf(ChiSquare{0}, 1), DomainError);
}

TEST(Quantiles, RoundTrip) {
    for (double p : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999}) {
        EXPECT_NEAR(cdf(Normal{}, normal_quantile(p)), p, 1e-13);
        EXPECT_NEAR(cdf(StudentT{4}, student_t_quantile(p, 4)), p, 1e-12);
    }
}

TEST(LinearRegression, Fixtures) {
    const std::vector<double> line{1, 3, 5};
    auto fit = linear_regression(line);
    EXPECT_NEAR(fit.slope, 4.0, 1e-12);
    EXPECT_NEAR(fit.intercept, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(fit.r_squared, 1.0);

    const std::vector<double> flat{2, 2, 2, 2};
    fit = linear_regression(flat);
    EXPECT_DOUBLE_EQ(fit.slope, 0.0);
    EXPECT_DOUBLE_EQ(fit.r_squared, 0.0);

    // Normal equations by hand on x = 0, .25, .5, .75, 1.
    const std::vector<double> y{2, 1, 4, 3, 6};
    fit = linear_regression(y);
    EXPECT_NEAR(fit.slope, 4.0, 1e-12);
    EXPECT_NEAR(fit.intercept, 1.2, 1e-12);
    EXPECT_NEAR(fit.r_squared, 0.8219949365267863 * 0.8219949365267863, 1e-12);

    const std::vector<double> two{1, 2};
    EXPECT_THROW(linear_regression(two), InsufficientData);
}

TEST(Pearson, Fixtures) {
    const std::vector<double> x{1, 2, 3}, y{2, 4, 6};
    auto r = pearson_test(x, y);
    EXPECT_DOUBLE_EQ(r.r, 1.0);
    EXPECT_DOUBLE_EQ(r.test.p_value, 0.0);
    r = pearson_test(x, x);
    EXPECT_DOUBLE_EQ(r.test.p_value, 0.0);

    const std::vector<double> a{1, 2, 3, 4}, b{2, 1, 4, 3};
    r = pearson_test(a, b);
    EXPECT_NEAR(r.r, 0.6, 1e-12);
    const double t = 0.6 * std::sqrt(2 / (1 - 0.36));
    EXPECT_NEAR(r.test.p_value, 2 * (1 - t_cdf_quadrature(t, 2)), 1e-9);

    const std::vector<double> c{1, 2, 3, 4}, d{1, -1, -1, 1};
    r = pearson_test(c, d);
    EXPECT_NEAR(r.r, 0.0, 1e-12);
    EXPECT_NEAR(r.test.p_value, 1.0, 1e-9);

    const std::vector<double> flat{3, 3, 3};
    EXPECT_THROW(pearson_test(x, flat), DegenerateInput);
}

TEST(Pearson, AffineInvariance) {
    const std::vector<double> x{1.5, 2.0, 3.7, 4.1, 5.9}, y{2.2, 1.9, 4.4, 3.0, 6.1};
    std::vector<double> xs;
    for (double v : x) xs.push_back(3 * v + 10);
    EXPECT_NEAR(pearson_test(x, y).test.p_value, pearson_test(xs, y).test.p_value, 1e-12);
}

TEST(ChiSquareUniform, Fixtures) {
    const std::vector<double> even{5, 5, 5, 5};
    auto r = chi_square_uniform(even);
    EXPECT_DOUBLE_EQ(r.statistic, 0.0);
    EXPECT_DOUBLE_EQ(r.p_value, 1.0);

    const std::vector<double> skew{10, 0};
    r = chi_square_uniform(skew);
    EXPECT_DOUBLE_EQ(r.statistic, 10.0);
    EXPECT_NEAR(r.p_value, 1 - chi2_cdf_quadrature(10, 1), 1e-9);
    EXPECT_NEAR(r.p_value, 0.001565402258002549, 1e-12);

    const std::vector<double> single{4}, zero{0, 0};
    EXPECT_THROW(chi_square_uniform(single), DegenerateInput);
    EXPECT_THROW(chi_square_uniform(zero), DegenerateInput);
}

// Reference values from the Royston algorithm as shipped in common
// statistics packages (single-precision coefficients, hence 1e-5).
TEST(ShapiroWilk, ReferenceValues) {
    std::vector<double> pow2;
    for (int i = 0; i < 20; ++i) pow2.push_back(std::ldexp(1.0, i));
    auto r = shapiro_wilk(pow2);
    EXPECT_NEAR(r.statistic, 0.4846912634694175, 1e-5);
    EXPECT_LT(r.p_value, 0.01);

    const std::vector<double> three{1, 2, 4};
    r = shapiro_wilk(three);
    EXPECT_NEAR(r.statistic, 0.9642857142857142, 1e-9);
    EXPECT_NEAR(r.p_value, 0.6368868450289689, 1e-6);

    const std::vector<double> seven{2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8};
    r = shapiro_wilk(seven);
    EXPECT_NEAR(r.statistic, 0.9401366781979513, 1e-5);
    EXPECT_NEAR(r.p_value, 0.6399513746153818, 1e-4);

    const std::vector<double> fifteen{0.1, -1.2, 0.5, 2.3, -0.7, 0.9, 1.4, -0.3, 0.0, 0.6, -1.8, 1.1, 0.25, -0.45, 0.75};
    r = shapiro_wilk(fifteen);
    EXPECT_NEAR(r.statistic, 0.9945758180093465, 1e-5);
    EXPECT_GT(r.p_value, 0.99);
}

TEST(ShapiroWilk, NormalSamplesRarelyRejected) {
    int accepted = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto x = normal_sample(seed, 20);
        if (shapiro_wilk(x).p_value > 0.05) ++accepted;
    }
    EXPECT_GE(accepted, 900);
}

TEST(ShapiroWilk, Errors) {
    const std::vector<double> flat{2, 2, 2, 2}, two{1, 2};
    EXPECT_THROW(shapiro_wilk(flat), DegenerateInput);
    EXPECT_THROW(shapiro_wilk(two), DegenerateInput);
}

TEST(Grubbs, Fixtures) {
    const std::vector<double> x{8, 9, 10, 9, 50};
    auto r = grubbs_test(x);
    ASSERT_TRUE(r.outlier_index.has_value());
    EXPECT_EQ(*r.outlier_index, 4u);
    EXPECT_LT(r.test.p_value, 0.05);

    // n = 5: G = 2/sqrt(2.5) = 1.2649 is below the critical value 1.715.
    const std::vector<double> y{1, 2, 3, 4, 5};
    r = grubbs_test(y);
    EXPECT_FALSE(r.outlier_index.has_value());
    EXPECT_NEAR(r.test.statistic, 2 / std::sqrt(2.5), 1e-12);
    EXPECT_NEAR(r.critical_value, 1.7150, 1e-3);

    const std::vector<double> flat{3, 3, 3};
    EXPECT_THROW(grubbs_test(flat), DegenerateInput);
}

TEST(Grubbs, ShiftScaleInvariant) {
    const std::vector<double> x{8, 9, 10, 9, 50, 7};
    std::vector<double> y;
    for (double v : x) y.push_back(2.5 * v - 40);
    EXPECT_NEAR(grubbs_test(x).test.statistic, grubbs_test(y).test.statistic, 1e-12);
}

TEST(PowerLaw, Fixtures) {
    std::vector<double> exact;
    for (int i = 1; i <= 8; ++i) exact.push_back(50 * std::pow(i, -0.7));
    auto r = power_law_residual_test(exact);
    EXPECT_NEAR(r.statistic, 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(r.p_value, 0.5);

    const std::vector<double> spike{100, 5, 4, 3.5, 3};
    r = power_law_residual_test(spike);
    EXPECT_GT(r.statistic, 0);
    EXPECT_LT(r.p_value, 1e-6);

    const std::vector<double> three{3, 2, 1};
    EXPECT_THROW(power_law_residual_test(three), InsufficientData);
}
