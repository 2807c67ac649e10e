#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "fpp/stats.hpp"

using namespace fpp;
using doctest::Approx;

namespace {

std::vector<double> mixed_values(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-40, 40);
    std::vector<double> v(n);
    for (auto& x : v) x = std::ldexp(mant(rng), expo(rng));
    return v;
}

}  // namespace

TEST_CASE("exact sums cancel catastrophic floating-point losses") {
    ExactSum s;
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    CHECK(s.to_double() == 1.0);  // left-to-right double addition yields 0
    CHECK((1e16 + 1.0) - 1e16 == 0.0);
}

TEST_CASE("exact sums are order independent byte-for-byte") {
    auto vals = mixed_values(300, 7);
    ExactSum forward, backward, shuffled;
    for (double v : vals) forward.add(v);
    for (auto it = vals.rbegin(); it != vals.rend(); ++it) backward.add(*it);
    auto perm = vals;
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(99));
    for (double v : perm) shuffled.add(v);
    CHECK(forward.to_hex() == backward.to_hex());
    CHECK(forward.to_hex() == shuffled.to_hex());

    // merging partial sums is associative
    ExactSum a, b, c;
    for (size_t i = 0; i < 100; ++i) a.add(vals[i]);
    for (size_t i = 100; i < 200; ++i) b.add(vals[i]);
    for (size_t i = 200; i < 300; ++i) c.add(vals[i]);
    ExactSum ab = a;
    ab.add(b);
    ab.add(c);
    ExactSum bc = b;
    bc.add(c);
    ExactSum a_bc = a;
    a_bc.add(bc);
    CHECK(ab == a_bc);
    CHECK(ab.to_hex() == forward.to_hex());
}

TEST_CASE("exact sum conversions and sign handling") {
    ExactSum s;
    s.add(1.5);
    s.add(2.25);
    CHECK(s.to_double() == 3.75);
    ExactSum t;
    t.add(1.0);
    t.add(-1.0);
    CHECK(t.is_zero());
    ExactSum u;
    u.add(-2.5);
    u.add(1.0);
    CHECK(u.to_double() == -1.5);

    ExactSum wide;
    wide.add(1e300);
    wide.add(1e-300);
    CHECK(wide.to_double() == 1e300);
    ExactSum tiny;
    tiny.add(5e-324);  // smallest subnormal still fits the fixed point
    CHECK(tiny.to_double() == 5e-324);
    CHECK_THROWS_AS(tiny.add(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("exact sum ordering") {
    auto make = [](double v) {
        ExactSum s;
        s.add(v);
        return s;
    };
    CHECK(make(-1.5) < make(1.0));
    CHECK(make(0.0) < make(1e-12));
    CHECK(make(-2.0) < make(-1.0));
    CHECK(!(make(1.0) < make(1.0)));
    CHECK(make(1.0) <= make(1.0));
    CHECK(!(make(2.0) <= make(1.0)));
    ExactSum near_one;
    near_one.add(1.0);
    near_one.add(-1e-30);
    CHECK(near_one < make(1.0));
}

TEST_CASE("exact sum hex round trip") {
    ExactSum s;
    for (double v : mixed_values(50, 11)) s.add(v);
    std::string h = s.to_hex();
    CHECK(h.size() == 36u * 16u);
    CHECK(ExactSum::from_hex(h) == s);
    CHECK(ExactSum::from_hex(h).to_double() == s.to_double());
    CHECK_THROWS_AS(ExactSum::from_hex("abc"), std::invalid_argument);
}

TEST_CASE("mean block matches direct formulas") {
    MeanBlock m;
    for (double x : {1.0, 2.0, 3.0, 4.0}) m.add(x);
    CHECK(m.mean() == Approx(2.5).epsilon(1e-15));
    double var = ((1 + 4 + 9 + 16) / 4.0 - 2.5 * 2.5) * 4.0 / 3.0;
    CHECK(m.sample_sd() == Approx(std::sqrt(var)).epsilon(1e-14));
    CHECK(m.ci_half_width() == Approx(3.182 * std::sqrt(var) / 2.0).epsilon(1e-12));
    MeanBlock single;
    single.add(7.0);
    CHECK(single.mean() == 7.0);
    CHECK(single.sample_sd() == 0.0);
    CHECK(single.ci_half_width() == 0.0);
}

TEST_CASE("mean block merge equals pooled accumulation bitwise") {
    auto vals = mixed_values(90, 23);
    MeanBlock pooled, a, b, c;
    for (size_t i = 0; i < vals.size(); ++i) {
        pooled.add(vals[i]);
        (i < 30 ? a : i < 60 ? b : c).add(vals[i]);
    }
    MeanBlock left = a;
    left.merge(b);
    left.merge(c);
    MeanBlock right = c;
    right.merge(b);
    right.merge(a);
    CHECK(left.n == pooled.n);
    CHECK(left.sum.to_hex() == pooled.sum.to_hex());
    CHECK(left.sum_sq.to_hex() == pooled.sum_sq.to_hex());
    CHECK(right.sum.to_hex() == pooled.sum.to_hex());
    CHECK(right.sum_sq.to_hex() == pooled.sum_sq.to_hex());
}

TEST_CASE("sample block keeps a sorted multiset under add and merge") {
    SampleBlock s;
    for (double x : {3.0, 1.0, 2.0, 2.0}) s.add(x);
    CHECK(s.sorted == std::vector<double>{1.0, 2.0, 2.0, 3.0});
    SampleBlock t;
    t.add(2.5);
    t.add(0.5);
    SampleBlock st = s;
    st.merge(t);
    SampleBlock ts = t;
    ts.merge(s);
    CHECK(st.sorted == std::vector<double>{0.5, 1.0, 2.0, 2.0, 2.5, 3.0});
    CHECK(st.sorted == ts.sorted);
    CHECK(s.median() == 2.0);
    CHECK(st.median() == 2.0);  // (2.0 + 2.0) / 2
    SampleBlock odd;
    for (double x : {5.0, 1.0, 9.0}) odd.add(x);
    CHECK(odd.median() == 5.0);
}

TEST_CASE("median confidence interval uses binomial order statistics") {
    SampleBlock s;
    for (int i = 1; i <= 100; ++i) s.add(double(i));
    double lo = 0, hi = 0;
    s.median_ci(lo, hi);
    // half = 50, spread = 9.7998: ranks floor(40.2)-1 = 39 and ceil(59.8) = 60
    CHECK(lo == 40.0);
    CHECK(hi == 61.0);
    CHECK(lo < s.median());
    CHECK(s.median() < hi);
    SampleBlock few;
    few.add(2.0);
    few.add(5.0);
    few.median_ci(lo, hi);
    CHECK(lo == 2.0);
    CHECK(hi == 5.0);
}

TEST_CASE("wilson interval matches the closed form") {
    auto oracle = [](long long k, long long n) {
        const double z = 1.959963984540054;
        double p = double(k) / double(n), nn = double(n), z2 = z * z;
        double denom = 1 + z2 / nn;
        double center = (p + z2 / (2 * nn)) / denom;
        double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
        return std::pair{std::max(0.0, center - half), std::min(1.0, center + half)};
    };
    for (auto [k, n] : std::vector<std::pair<long long, long long>>{
             {5, 10}, {1, 1000}, {999, 1000}, {50, 200}}) {
        WilsonInterval w = wilson95(k, n);
        auto [lo, hi] = oracle(k, n);
        CHECK(w.p_hat == double(k) / double(n));
        CHECK(w.lo == Approx(lo).epsilon(1e-14));
        CHECK(w.hi == Approx(hi).epsilon(1e-14));
        CHECK(w.lo < w.p_hat);
        CHECK(w.p_hat < w.hi);
    }
    WilsonInterval zero = wilson95(0, 50);
    CHECK(zero.lo == Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(zero.hi > 0);
    WilsonInterval full = wilson95(50, 50);
    CHECK(full.hi == Approx(1.0).epsilon(1e-12));
    CHECK(full.lo < 1);
    WilsonInterval empty = wilson95(0, 0);
    CHECK(empty.lo == 0);
    CHECK(empty.hi == 1);

    CountBlock cb;
    cb.add(true);
    cb.add(false);
    cb.add(true);
    CountBlock other;
    other.add(false);
    cb.merge(other);
    CHECK(cb.n == 4);
    CHECK(cb.k == 2);
    CHECK(cb.wilson().p_hat == 0.5);
}

TEST_CASE("t quantiles track standard tables") {
    CHECK(t_quantile_975(1) == 12.706);
    CHECK(t_quantile_975(5) == 2.571);
    CHECK(t_quantile_975(10) == 2.228);
    CHECK(std::abs(t_quantile_975(30) - 2.0423) < 0.005);
    CHECK(std::abs(t_quantile_975(100) - 1.9840) < 0.002);
    CHECK(std::abs(t_quantile_975(1000000) - 1.9600) < 1e-3);
    for (long long df = 11; df < 200; ++df)
        CHECK(t_quantile_975(df) >= t_quantile_975(df + 1));
}

TEST_CASE("interval unions merge overlapping and touching pieces") {
    IntervalUnion u;
    CHECK(u.empty());
    CHECK(u.measure() == 0);
    CHECK(u.sup() == 0);
    u.add(2.0, 1.0);  // empty interval ignored
    CHECK(u.raw_count() == 0);

    u.add(0.0, 1.0);
    u.add(0.5, 2.0);
    auto comps = u.components();
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].lo == 0.0);
    CHECK(comps[0].hi == 2.0);
    CHECK(u.measure() == 2.0);

    u.add(2.0, 3.0);  // touching: [0,2) + [2,3) is one interval
    comps = u.components();
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].hi == 3.0);

    u.add(5.0, 6.0);
    comps = u.components();
    REQUIRE(comps.size() == 2);
    CHECK(u.measure() == 4.0);
    CHECK(u.sup() == 6.0);

    IntervalUnion nested;
    nested.add(0.0, 5.0);
    nested.add(1.0, 2.0);
    CHECK(nested.measure() == 5.0);
    CHECK(nested.components().size() == 1);

    // insertion order does not matter
    IntervalUnion r1, r2;
    std::vector<Interval> ivs = {{3, 4}, {0, 1}, {0.5, 3.2}, {7, 9}};
    for (const auto& iv : ivs) r1.add(iv);
    for (auto it = ivs.rbegin(); it != ivs.rend(); ++it) r2.add(*it);
    CHECK(r1.measure() == r2.measure());
    CHECK(r1.components().size() == r2.components().size());
}

TEST_CASE("grid measure approximates within one step") {
    IntervalUnion u;
    u.add(0.0, 1.0);
    u.add(2.0, 3.5);
    for (double step : {0.01, 0.1, 0.3}) {
        double g = grid_measure(u, step);
        CHECK(std::abs(g - u.measure()) <= step + 1e-12);
    }
    CHECK(grid_measure(IntervalUnion{}, 0.1) == 0);
    CHECK_THROWS_AS(grid_measure(u, 0.0), std::invalid_argument);
}

TEST_CASE("linear fit recovers an exact line") {
    std::vector<double> xs = {0, 1, 2, 5};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(3 * x - 2);
    LinearFit f = linear_fit(xs, ys);
    CHECK(f.slope == 3.0);
    CHECK(f.intercept == -2.0);
    CHECK(f.r2 == 1.0);
    CHECK(f.points == 4);

    // noisy data keeps r2 below 1 but the slope close
    std::vector<double> noisy = ys;
    noisy[1] += 0.5;
    noisy[3] -= 0.5;
    LinearFit g = linear_fit(xs, noisy);
    CHECK(g.r2 < 1.0);
    CHECK(g.r2 > 0.9);
    CHECK(std::abs(g.slope - 3.0) < 0.3);

    CHECK_THROWS_AS(linear_fit({1.0}, {2.0}), std::invalid_argument);
    CHECK_THROWS_AS(linear_fit({1, 2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(linear_fit({2, 2, 2}, {1, 2, 3}), std::invalid_argument);
}
