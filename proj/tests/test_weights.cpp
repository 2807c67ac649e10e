#include "doctest.h"

#include <cmath>
#include <vector>

#include "fpp/weights.hpp"

using namespace fpp;

namespace {

// Pearson correlation, plain two-pass oracle
double correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= double(xs.size());
    my /= double(ys.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("distribution quantiles and survival functions") {
    auto det = DistributionSpec::deterministic(1.0);
    CHECK(det.quantile(0.0) == 1.0);
    CHECK(det.quantile(0.73) == 1.0);
    CHECK(det.survival(0.5) == 1.0);
    CHECK(det.survival(1.0) == 0.0);
    CHECK(det.tbar(0.37) == 1.0);
    CHECK(det.min_weight() == 1.0);

    auto uni = DistributionSpec::uniform01();
    CHECK(uni.quantile(0.25) == doctest::Approx(0.25));
    CHECK(uni.survival(0.25) == doctest::Approx(0.75));
    CHECK(uni.tbar(0.05) == doctest::Approx(0.95));
    CHECK(uni.min_weight() == 0.0);

    auto expo = DistributionSpec::exponential(1.0);
    CHECK(expo.quantile(0.5) == doctest::Approx(std::log(2.0)));
    CHECK(expo.survival(2.0) == doctest::Approx(std::exp(-2.0)));

    auto ber = DistributionSpec::bernoulli(0.3);
    CHECK(ber.quantile(0.1) == 0.0);
    CHECK(ber.quantile(0.9) == 1.0);
    CHECK(ber.zero_atom() == doctest::Approx(0.3));
    CHECK(uni.zero_atom() == 0.0);

    auto par = DistributionSpec::pareto(2.0);
    CHECK(par.survival(5.0) == doctest::Approx(0.04));
    CHECK(par.tbar(0.04) == doctest::Approx(5.0));
    CHECK(par.min_weight() == doctest::Approx(1.0));
    CHECK(par.quantile(0.0) == doctest::Approx(1.0));
}

TEST_CASE("minimum-of-incident-edges survival") {
    // Y is the min of 2*dim i.i.d. copies, so P(Y > x) = survival(x)^(2 dim)
    auto par = DistributionSpec::pareto(2.0);
    // survival(2) = 2^-2, raised to the 4 incident edges of d=2
    CHECK(par.y_survival(2.0, 2) == doctest::Approx(std::pow(2.0, -8.0)));
    auto uni = DistributionSpec::uniform01();
    CHECK(uni.y_survival(0.5, 2) == doctest::Approx(std::pow(0.5, 4.0)));
    CHECK(uni.y_survival(0.5, 3) == doctest::Approx(std::pow(0.5, 6.0)));
}

TEST_CASE("moment finiteness boundaries") {
    auto par = DistributionSpec::pareto(1.0);
    CHECK(par.moment_finite(0.5));
    CHECK(!par.moment_finite(1.0));  // E[tau] diverges at alpha = a
    CHECK(!par.moment_finite(2.0));
    // Y = min of 4 copies in d=2: finite below 2*2*1 = 4
    CHECK(par.y_moment_finite(3.9, 2));
    CHECK(!par.y_moment_finite(4.0, 2));
    CHECK(par.y_moment_finite(5.9, 3));

    auto p02 = DistributionSpec::pareto(0.2);
    CHECK(!p02.y_moment_finite(1.0, 2));  // 2da = 0.8 < 1
    auto p1 = DistributionSpec::pareto(0.4);
    CHECK(p1.y_moment_finite(1.0, 2));  // 2da = 1.6 > 1

    for (auto spec : {DistributionSpec::uniform01(), DistributionSpec::exponential(1.0),
                      DistributionSpec::deterministic(2.0), DistributionSpec::bernoulli(0.2)}) {
        CHECK(spec.moment_finite(7.0));
        CHECK(spec.y_moment_finite(7.0, 4));
    }
}

TEST_CASE("parameter validation") {
    DistributionSpec bad = DistributionSpec::pareto(1.0);
    bad.a = 0.0;
    CHECK_THROWS_AS(bad.validate(), WeightError);
    bad = DistributionSpec::bernoulli(0.5);
    bad.p0 = 1.5;
    CHECK_THROWS_AS(bad.validate(), WeightError);
    bad = DistributionSpec::exponential(1.0);
    bad.rate = -1.0;
    CHECK_THROWS_AS(bad.validate(), WeightError);
    bad = DistributionSpec::deterministic(2.0);
    bad.value = -2.0;
    CHECK_THROWS_AS(bad.validate(), WeightError);
}

TEST_CASE("seed splitting separates streams") {
    CHECK(split_seed(1, 2, 3) == split_seed(1, 2, 3));
    CHECK(split_seed(1, 2, 3) != split_seed(1, 2, 4));
    CHECK(split_seed(1, 2, 3) != split_seed(1, 3, 3));
    CHECK(split_seed(2, 2, 3) != split_seed(1, 2, 3));
}

TEST_CASE("field determinism and canonical-edge symmetry") {
    WeightField f1(DistributionSpec::uniform01(), 42, 2);
    WeightField f2(DistributionSpec::uniform01(), 42, 2);
    WeightField g(DistributionSpec::uniform01(), 43, 2);
    bool any_diff = false;
    for (int a = -20; a <= 20; ++a)
        for (int b = -20; b <= 20; ++b) {
            Point p = make_point({a, b});
            Point q = make_point({a + 1, b});
            CHECK(f1.weight(p, q) == f2.weight(p, q));
            CHECK(f1.weight(p, q) == f1.weight(q, p));
            if (f1.weight(p, q) != g.weight(p, q)) any_diff = true;
            CHECK(f1.weight(p, q) >= 0.0);
            CHECK(f1.weight(p, q) < 1.0);
        }
    CHECK(any_diff);
}

TEST_CASE("deterministic and degenerate fields") {
    WeightField det(DistributionSpec::deterministic(1.0), 9, 2);
    WeightField zero(DistributionSpec::bernoulli(1.0), 9, 2);
    for (int a = -5; a <= 5; ++a)
        for (int b = -5; b <= 5; ++b) {
            Point p = make_point({a, b});
            CHECK(det.y_at(p) == 1.0);
            CHECK(zero.y_at(p) == 0.0);
        }
}

TEST_CASE("empirical mean of uniform weights") {
    WeightField f(DistributionSpec::uniform01(), 7, 2);
    double sum = 0;
    long long n = 0;
    for (int a = -150; a < 150; ++a)
        for (int b = -150; b < 150; ++b) {
            sum += f.weight(make_point({a, b}), make_point({a + 1, b}));
            ++n;
        }
    CHECK(n >= 90000);
    CHECK(sum / double(n) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("empirical mean of Y for exponential weights") {
    // min of 4 Exp(1) is Exp(4); sample far-separated points so the incident
    // edge sets are disjoint
    WeightField f(DistributionSpec::exponential(1.0), 11, 2);
    double sum = 0;
    long long n = 0;
    for (int a = -300; a <= 300; a += 3)
        for (int b = -300; b <= 300; b += 3) {
            sum += f.y_at(make_point({a, b}));
            ++n;
        }
    CHECK(n >= 40000);
    CHECK(sum / double(n) == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("bernoulli zero fraction") {
    WeightField f(DistributionSpec::bernoulli(0.3), 5, 2);
    long long zeros = 0, n = 0;
    for (int a = -100; a < 100; ++a)
        for (int b = -100; b < 100; ++b) {
            double w = f.weight(make_point({a, b}), make_point({a, b + 1}));
            CHECK((w == 0.0 || w == 1.0));
            if (w == 0.0) ++zeros;
            ++n;
        }
    CHECK(double(zeros) / double(n) == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("independence proxy: disjoint edges are uncorrelated") {
    WeightField f(DistributionSpec::uniform01(), 13, 2);
    std::vector<double> xs, ys;
    for (int a = -300; a < 300; a += 2)
        for (int b = -300; b < 300; b += 2) {
            xs.push_back(f.weight(make_point({a, b}), make_point({a + 1, b})));
            ys.push_back(f.weight(make_point({a, b + 1}), make_point({a + 1, b + 1})));
        }
    CHECK(xs.size() >= 90000);
    CHECK(std::abs(correlation(xs, ys)) < 0.02);
}

TEST_CASE("pareto Y tail follows the analytic exponent") {
    // d=2, a=0.25: P(Y > x) = x^(-1); check pointwise on a grid
    WeightField f(DistributionSpec::pareto(0.25), 17, 2);
    std::vector<double> grid = {2, 4, 8, 16};
    std::vector<long long> counts(grid.size(), 0);
    long long n = 0;
    for (int a = -450; a <= 450; a += 3)
        for (int b = -450; b <= 450; b += 3) {
            double y = f.y_at(make_point({a, b}));
            for (size_t i = 0; i < grid.size(); ++i)
                if (y > grid[i]) ++counts[i];
            ++n;
        }
    for (size_t i = 0; i < grid.size(); ++i) {
        double p_hat = double(counts[i]) / double(n);
        double expect = 1.0 / grid[i];
        CHECK(std::abs(std::log(p_hat) - std::log(expect)) < 0.15);
    }
}

TEST_CASE("restricted moment: analytic uniform case and internal identity") {
    // E[X 1{X > 1/2}] for X ~ Uniform(0,1) is 3/8
    WeightField f(DistributionSpec::uniform01(), 23, 2);
    std::vector<double> samples;
    for (int a = -200; a < 200; ++a)
        for (int b = 0; b < 2; ++b)
            samples.push_back(f.weight(make_point({a, b * 7}), make_point({a + 1, b * 7})));
    RestrictedMoment rm = restricted_moment(samples, 1.0, 0.5);
    CHECK(rm.direct == doctest::Approx(0.375).epsilon(0.1));
    CHECK(rm.tail_formula == doctest::Approx(rm.direct).epsilon(1e-9));
    CHECK(rm.exceed_fraction == doctest::Approx(0.5).epsilon(0.1));

    // hand-checked small case: samples {1,2,3,4}, alpha=1, a=2
    RestrictedMoment hand = restricted_moment({1, 2, 3, 4}, 1.0, 2.0);
    CHECK(hand.direct == doctest::Approx(1.75));
    CHECK(hand.tail_formula == doctest::Approx(1.75));

    // a=0 gives the plain moment
    RestrictedMoment plain = restricted_moment({1, 2, 3}, 2.0, 0.0);
    CHECK(plain.direct == doctest::Approx((1.0 + 4.0 + 9.0) / 3.0));

    // indicator never fires above the support
    RestrictedMoment none = restricted_moment({1, 1, 1}, 2.0, 2.0);
    CHECK(none.direct == 0.0);
    CHECK(none.tail_formula == 0.0);

    CHECK_THROWS_AS(restricted_moment({}, 1.0, 0.0), WeightError);
}

TEST_CASE("min-moment comparison bounds") {
    // deterministic: LHS = 1 <= 1 + beta/alpha
    MinMomentCheck det = min_moment_check(DistributionSpec::deterministic(1.0), 1, 2, 1.0, 1.0,
                                          1, 2000, 101);
    CHECK(det.holds_within_error);
    CHECK(det.lhs == doctest::Approx(1.0));

    // heavy-tailed case from the contract: K=2, L=4, alpha=1, beta=2
    MinMomentCheck par = min_moment_check(DistributionSpec::pareto(1.0), 2, 4, 1.0, 2.0,
                                          1, 20000, 102);
    CHECK(par.holds_within_error);

    // summed variant with N=3
    MinMomentCheck summed = min_moment_check(DistributionSpec::pareto(1.0), 2, 4, 1.0, 2.0,
                                             3, 20000, 103);
    CHECK(summed.holds_within_error);

    CHECK_THROWS_AS(min_moment_check(DistributionSpec::uniform01(), 2, 2, 1.0, 2.0, 1, 100, 1),
                    WeightError);
}
