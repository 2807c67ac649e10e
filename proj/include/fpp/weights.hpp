#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpp/lattice.hpp"

// Edge-weight distributions and the lazily realized i.i.d. weight field.
//
// A field never stores weights: the weight of an edge is a pure function of
// (seed, canonical edge id), obtained by hashing into a uniform variate and
// pushing it through the distribution's generalized inverse CDF.  Two fields
// with the same seed therefore agree on every edge, which is what makes
// same-seed couplings across regions and radii exact.

namespace fpp {

enum class DistKind { Deterministic, Uniform, Exponential, Bernoulli, Pareto };

struct DistributionSpec {
    DistKind kind = DistKind::Uniform;
    double value = 1.0;   // Deterministic: the constant
    double rate = 1.0;    // Exponential
    double p0 = 0.0;      // Bernoulli: P(tau = 0); otherwise tau = 1
    double a = 1.0;       // Pareto shape: P(tau > x) = x^-a for x >= 1

    static DistributionSpec deterministic(double c);
    static DistributionSpec uniform01();
    static DistributionSpec exponential(double rate);
    static DistributionSpec bernoulli(double p0);
    static DistributionSpec pareto(double a);

    void validate() const;  // throws WeightError on out-of-range parameters

    // generalized inverse CDF, q in [0,1)
    double quantile(double q) const;
    // P(tau > x)
    double survival(double x) const;
    // P(Y > x) for Y = min of 2*dim independent copies
    double y_survival(double x, int dim) const;
    // smallest t with P(tau <= t) >= 1 - delta
    double tbar(double delta) const;
    // infimum of the support (0 except Pareto: 1, Deterministic: value)
    double min_weight() const;
    // true when E[tau^alpha] < infinity
    bool moment_finite(double alpha) const;
    // true when E[Y^alpha] < infinity with Y the min of 2*dim copies
    bool y_moment_finite(double alpha, int dim) const;
    // P(tau = 0); positive only for Bernoulli(p0) and Deterministic(0)
    double zero_atom() const;

    std::string describe() const;
    bool operator==(const DistributionSpec& o) const;
};

// deterministic stream splitting: hash of (master_seed, index, stream tag);
// replica seeds and auxiliary RNG seeds come from disjoint stream tags
uint64_t split_seed(uint64_t master_seed, uint64_t index, uint64_t stream);

class WeightField {
  public:
    WeightField(DistributionSpec spec, uint64_t seed, int dim);

    double weight(const Edge& e) const;
    double weight(const Point& a, const Point& b) const { return weight(edge_between(a, b)); }
    // Y(z): minimum weight over the 2*dim edges incident to z
    double y_at(const Point& z) const;

    const DistributionSpec& spec() const { return spec_; }
    uint64_t seed() const { return seed_; }
    int dim() const { return dim_; }

  private:
    DistributionSpec spec_;
    uint64_t seed_;
    int dim_;
};

// E[X^alpha 1{X > a}] from samples, two routes:
//   first  = direct average of x^alpha over samples exceeding a
//   second = a^alpha * Phat(X > a) + alpha * Int_a^inf x^(alpha-1) Phat(X > x) dx
// with the integral taken exactly over the empirical (step) survival function.
struct RestrictedMoment {
    double direct = 0;
    double tail_formula = 0;
    double exceed_fraction = 0;
};
RestrictedMoment restricted_moment(std::vector<double> samples, double alpha, double a);

// Monte Carlo check of the min-moment comparison bounds.
//   single:  E[(min_{i<=L} tau_i)^beta] <= 1 + (beta/alpha) E[(min_{i<=K} tau_i)^alpha]^(L/K)
//   summed:  E[(min_{i<=L} sum_{j<=N} tau_ij)^beta]
//              <= N^(L+beta) (1 + (beta/alpha) E[(min_{i<=K} tau_ij)^alpha]^(L/K))
// requires L >= K >= 1 and beta*K <= alpha*L.
struct MinMomentCheck {
    double lhs = 0, lhs_ci = 0;   // estimate and t-interval half width
    double rhs = 0, rhs_ci = 0;
    bool holds_within_error = false;
};
MinMomentCheck min_moment_check(const DistributionSpec& spec, int K, int L, double alpha,
                                double beta, int N, int samples, uint64_t seed);

struct WeightError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace fpp
