#include "fpp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fpp {

void ExactSum::add_shifted(uint64_t mantissa, int bit_offset, bool negative) {
    if (mantissa == 0) return;
    if (bit_offset < 0 || bit_offset + 54 >= kLimbs * 64)
        throw std::overflow_error("exact sum out of range");
    const int limb = bit_offset / 64;
    const int shift = bit_offset % 64;
    // spread mantissa over up to three limbs
    std::array<uint64_t, 3> part{0, 0, 0};
    part[0] = mantissa << shift;
    if (shift) part[1] = mantissa >> (64 - shift);
    if (negative) {
        // two's complement subtraction: add the negation with sign extension
        std::array<uint64_t, kLimbs> neg{};
        neg.fill(0);
        neg[static_cast<size_t>(limb)] = part[0];
        if (limb + 1 < kLimbs) neg[static_cast<size_t>(limb) + 1] = part[1];
        // negate
        uint64_t carry = 1;
        for (int i = 0; i < kLimbs; ++i) {
            uint64_t v = ~neg[static_cast<size_t>(i)];
            uint64_t s = v + carry;
            carry = (s < v) ? 1 : 0;
            neg[static_cast<size_t>(i)] = s;
        }
        carry = 0;
        for (int i = 0; i < kLimbs; ++i) {
            uint64_t a = limbs_[static_cast<size_t>(i)], b = neg[static_cast<size_t>(i)];
            uint64_t s = a + b;
            uint64_t c1 = (s < a) ? 1 : 0;
            uint64_t s2 = s + carry;
            uint64_t c2 = (s2 < s) ? 1 : 0;
            limbs_[static_cast<size_t>(i)] = s2;
            carry = c1 | c2;
        }
        return;
    }
    uint64_t carry = 0;
    for (int i = limb; i < kLimbs; ++i) {
        uint64_t inc = (i - limb < 3) ? part[static_cast<size_t>(i - limb)] : 0;
        if (i - limb >= 3 && carry == 0) break;
        uint64_t a = limbs_[static_cast<size_t>(i)];
        uint64_t s = a + inc;
        uint64_t c1 = (s < a) ? 1 : 0;
        uint64_t s2 = s + carry;
        uint64_t c2 = (s2 < s) ? 1 : 0;
        limbs_[static_cast<size_t>(i)] = s2;
        carry = c1 | c2;
    }
}

void ExactSum::add(double v) {
    if (v == 0) return;
    if (!std::isfinite(v)) throw std::invalid_argument("exact sum of non-finite value");
    int exp = 0;
    double m = std::frexp(std::abs(v), &exp);  // |v| = m * 2^exp, m in [0.5, 1)
    // 53-bit integer mantissa: |v| = mant * 2^(exp - 53)
    auto mant = static_cast<uint64_t>(std::ldexp(m, 53));
    add_shifted(mant, exp - 53 + kBias, v < 0);
}

void ExactSum::add(const ExactSum& o) {
    uint64_t carry = 0;
    for (int i = 0; i < kLimbs; ++i) {
        uint64_t a = limbs_[static_cast<size_t>(i)], b = o.limbs_[static_cast<size_t>(i)];
        uint64_t s = a + b;
        uint64_t c1 = (s < a) ? 1 : 0;
        uint64_t s2 = s + carry;
        uint64_t c2 = (s2 < s) ? 1 : 0;
        limbs_[static_cast<size_t>(i)] = s2;
        carry = c1 | c2;
    }
}

bool ExactSum::is_zero() const {
    for (uint64_t l : limbs_)
        if (l) return false;
    return true;
}

bool ExactSum::operator<(const ExactSum& o) const {
    bool a_neg = (limbs_[kLimbs - 1] >> 63) != 0;
    bool b_neg = (o.limbs_[kLimbs - 1] >> 63) != 0;
    if (a_neg != b_neg) return a_neg;
    // same sign: two's complement order matches unsigned limb order
    for (int i = kLimbs - 1; i >= 0; --i) {
        uint64_t a = limbs_[static_cast<size_t>(i)], b = o.limbs_[static_cast<size_t>(i)];
        if (a != b) return a < b;
    }
    return false;
}

double ExactSum::to_double() const {
    bool neg = (limbs_[kLimbs - 1] >> 63) != 0;
    std::array<uint64_t, kLimbs> mag = limbs_;
    if (neg) {
        uint64_t carry = 1;
        for (int i = 0; i < kLimbs; ++i) {
            uint64_t v = ~mag[static_cast<size_t>(i)];
            uint64_t s = v + carry;
            carry = (s < v) ? 1 : 0;
            mag[static_cast<size_t>(i)] = s;
        }
    }
    int top = kLimbs - 1;
    while (top >= 0 && mag[static_cast<size_t>(top)] == 0) --top;
    if (top < 0) return 0.0;
    long double acc = 0;
    for (int i = top; i >= 0 && i >= top - 2; --i)
        acc = acc * 18446744073709551616.0L + static_cast<long double>(mag[static_cast<size_t>(i)]);
    int low_limb = std::max(0, top - 2);
    acc = std::ldexp(acc, 64 * low_limb - kBias);
    double out = static_cast<double>(acc);
    return neg ? -out : out;
}

std::string ExactSum::to_hex() const {
    std::string s;
    s.reserve(kLimbs * 16);
    char buf[17];
    for (int i = kLimbs - 1; i >= 0; --i) {
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(limbs_[static_cast<size_t>(i)]));
        s += buf;
    }
    return s;
}

ExactSum ExactSum::from_hex(const std::string& s) {
    if (s.size() != static_cast<size_t>(kLimbs) * 16)
        throw std::invalid_argument("bad exact-sum hex length");
    ExactSum out;
    for (int i = 0; i < kLimbs; ++i) {
        const std::string chunk = s.substr(static_cast<size_t>(kLimbs - 1 - i) * 16, 16);
        out.limbs_[static_cast<size_t>(i)] = std::stoull(chunk, nullptr, 16);
    }
    return out;
}

void IntervalUnion::add(const Interval& iv) {
    if (iv.hi > iv.lo) raw_.push_back(iv);
}

std::vector<Interval> IntervalUnion::components() const {
    std::vector<Interval> v = raw_;
    std::sort(v.begin(), v.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> out;
    for (const Interval& iv : v) {
        if (!out.empty() && iv.lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
    }
    return out;
}

double IntervalUnion::measure() const {
    double m = 0;
    for (const Interval& iv : components()) m += iv.length();
    return m;
}

double IntervalUnion::sup() const {
    double s = 0;
    for (const Interval& iv : raw_) s = std::max(s, iv.hi);
    return s;
}

bool IntervalUnion::empty() const { return raw_.empty(); }

double grid_measure(const IntervalUnion& u, double step) {
    if (step <= 0) throw std::invalid_argument("grid step must be positive");
    auto comps = u.components();
    if (comps.empty()) return 0;
    double hi = comps.back().hi;
    long long count = 0;
    size_t ci = 0;
    for (long long j = 0; static_cast<double>(j) * step <= hi; ++j) {
        double t = static_cast<double>(j) * step;
        while (ci < comps.size() && comps[ci].hi <= t) ++ci;
        if (ci < comps.size() && t >= comps[ci].lo && t < comps[ci].hi) ++count;
    }
    return static_cast<double>(count) * step;
}

WilsonInterval wilson95(long long k, long long n) {
    WilsonInterval w;
    if (n <= 0) return w;
    const double zq = 1.959963984540054;
    double p = static_cast<double>(k) / static_cast<double>(n);
    double nn = static_cast<double>(n), z2 = zq * zq;
    w.p_hat = p;
    double center = (p + z2 / (2 * nn)) / (1 + z2 / nn);
    double half = zq * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
    w.lo = std::max(0.0, center - half);
    w.hi = std::min(1.0, center + half);
    return w;
}

double t_quantile_975(long long df) {
    static const double table[] = {12.706, 12.706, 4.303, 3.182, 2.776, 2.571,
                                   2.447,  2.365,  2.306, 2.262, 2.228};
    if (df <= 10) return table[std::max<long long>(df, 0)];
    const double z = 1.959963984540054;
    double v = static_cast<double>(df);
    // Cornish-Fisher expansion; within ~0.5% of tables for df > 10
    return z + (z * z * z + z) / (4 * v) +
           (5 * std::pow(z, 5) + 16 * z * z * z + 3 * z) / (96 * v * v);
}

double MeanBlock::mean() const {
    if (n == 0) return 0;
    return sum.to_double() / static_cast<double>(n);
}

double MeanBlock::sample_sd() const {
    if (n < 2) return 0;
    double m = mean();
    double ex2 = sum_sq.to_double() / static_cast<double>(n);
    double var = (ex2 - m * m) * static_cast<double>(n) / static_cast<double>(n - 1);
    return var > 0 ? std::sqrt(var) : 0;
}

double MeanBlock::ci_half_width() const {
    if (n < 2) return 0;
    return t_quantile_975(n - 1) * sample_sd() / std::sqrt(static_cast<double>(n));
}

void SampleBlock::add(double x) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
    sorted.insert(it, x);
}

void SampleBlock::merge(const SampleBlock& o) {
    std::vector<double> merged;
    merged.reserve(sorted.size() + o.sorted.size());
    std::merge(sorted.begin(), sorted.end(), o.sorted.begin(), o.sorted.end(),
               std::back_inserter(merged));
    sorted = std::move(merged);
}

double SampleBlock::median() const {
    if (sorted.empty()) return 0;
    size_t n = sorted.size();
    if (n % 2) return sorted[n / 2];
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

void SampleBlock::median_ci(double& lo, double& hi) const {
    size_t n = sorted.size();
    if (n < 8) {  // too few points for a useful distribution-free interval
        lo = sorted.empty() ? 0 : sorted.front();
        hi = sorted.empty() ? 0 : sorted.back();
        return;
    }
    double half = 0.5 * static_cast<double>(n);
    double spread = 0.979981992270027 * std::sqrt(static_cast<double>(n));  // z/2 * sqrt(n)
    auto jlo = static_cast<long long>(std::floor(half - spread)) - 1;
    auto jhi = static_cast<long long>(std::ceil(half + spread));
    jlo = std::max<long long>(0, jlo);
    jhi = std::min<long long>(static_cast<long long>(n) - 1, jhi);
    lo = sorted[static_cast<size_t>(jlo)];
    hi = sorted[static_cast<size_t>(jhi)];
}

LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    LinearFit f;
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("linear_fit needs matching xs/ys with >= 2 points");
    f.points = xs.size();
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    double den = n * sxx - sx * sx;
    if (den == 0) throw std::invalid_argument("linear_fit on degenerate xs");
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double e = ys[i] - (f.intercept + f.slope * xs[i]);
        ss_res += e * e;
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

}  // namespace fpp
