#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

// Statistical building blocks for the experiment harness.
//
// Sums of samples are accumulated in ExactSum, a wide fixed-point integer.
// Doubles are dyadic rationals, so these sums are exact and their addition is
// associative and commutative bit-for-bit; merged reports are byte-identical
// no matter how the replicas were partitioned across runs or threads.

namespace fpp {

class ExactSum {
  public:
    static constexpr int kLimbs = 36;  // 2304 bits, fixed point at 2^-1140

    ExactSum() { limbs_.fill(0); }

    void add(double v);
    void add(const ExactSum& o);
    double to_double() const;
    bool is_zero() const;
    bool operator==(const ExactSum& o) const { return limbs_ == o.limbs_; }
    // signed comparison; lets callers test inequalities between exact sums
    bool operator<(const ExactSum& o) const;
    bool operator<=(const ExactSum& o) const { return !(o < *this); }

    std::string to_hex() const;                  // serialization for merge files
    static ExactSum from_hex(const std::string& s);

  private:
    static constexpr int kBias = 1140;  // bit index of 2^0
    std::array<uint64_t, kLimbs> limbs_;  // two's complement, little endian
    void add_shifted(uint64_t mantissa, int bit_offset, bool negative);
};

struct Interval {  // half-open [lo, hi); empty when hi <= lo
    double lo = 0, hi = 0;
    double length() const { return hi > lo ? hi - lo : 0; }
};

// union of half-open intervals with Lebesgue measure and supremum
class IntervalUnion {
  public:
    void add(const Interval& iv);
    void add(double lo, double hi) { add(Interval{lo, hi}); }
    // merged disjoint components, sorted
    std::vector<Interval> components() const;
    double measure() const;
    double sup() const;  // 0 when empty
    bool empty() const;
    size_t raw_count() const { return raw_.size(); }

  private:
    std::vector<Interval> raw_;
};

// measure of the union estimated by counting grid points j*step inside it
double grid_measure(const IntervalUnion& u, double step);

struct WilsonInterval {
    double p_hat = 0, lo = 0, hi = 1;
};
WilsonInterval wilson95(long long k, long long n);

// two-sided 97.5% t quantile (Cornish-Fisher expansion in 1/df)
double t_quantile_975(long long df);

// counts of a Bernoulli statistic
struct CountBlock {
    long long n = 0, k = 0;
    void add(bool hit) {
        ++n;
        if (hit) ++k;
    }
    void merge(const CountBlock& o) {
        n += o.n;
        k += o.k;
    }
    WilsonInterval wilson() const { return wilson95(k, n); }
};

// mean/variance via exact sums; CI is the t-interval
struct MeanBlock {
    long long n = 0;
    ExactSum sum, sum_sq;
    void add(double x) {
        ++n;
        sum.add(x);
        double xx = x * x;
        sum_sq.add(xx);
    }
    void merge(const MeanBlock& o) {
        n += o.n;
        sum.add(o.sum);
        sum_sq.add(o.sum_sq);
    }
    double mean() const;
    double sample_sd() const;
    double ci_half_width() const;  // 95% t-interval
};

// retained samples for order statistics; merge keeps the multiset sorted so
// it is associative byte-for-byte
struct SampleBlock {
    std::vector<double> sorted;
    void add(double x);
    void merge(const SampleBlock& o);
    double median() const;
    // distribution-free ~95% CI for the median from binomial order statistics
    void median_ci(double& lo, double& hi) const;
};

struct LinearFit {
    double slope = 0, intercept = 0, r2 = 0;
    size_t points = 0;
};
LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace fpp
