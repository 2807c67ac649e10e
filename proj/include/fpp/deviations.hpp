#pragma once

#include <optional>
#include <vector>

#include "fpp/paths.hpp"
#include "fpp/stats.hpp"
#include "fpp/weights.hpp"

// Deviation-set estimators: the random sets of sites whose travel time
// disagrees with the norm mu by a linear margin, the exceptional time set
// carved out of the real line by those disagreements, and the weighted sums
// whose convergence tracks the moments of Y (the cheapest edge at a vertex).
//
// Everything here needs a reference for mu.  The reference is exact for
// deterministic weights; otherwise it is built from radial estimates along a
// fan of directions and extended by positive homogeneity, lattice symmetry
// and the Lipschitz bound |mu(x) - mu(y)| <= mu(e1) |x - y|_1, with the
// extension slack counted into the reported uncertainty.

namespace fpp {

enum class MuEstimator { Auto, Mean, Median };

// radial estimate along one direction
struct MuEstimate {
    Point z{};
    std::vector<long long> n_grid;
    std::vector<double> value_per_n;   // estimate of T(0, n z)/n for each n
    std::vector<double> ci_per_n;
    double value = 0;    // mu_hat(z): per_n value at the largest n, scaled by |z|... see note
    double ci = 0;       // half width at the largest n (same scale as value)
    bool exact = false;  // deterministic weights need no sampling
    MuEstimator used = MuEstimator::Mean;
    size_t inexact_sweeps = 0;
};

// mu_hat(z) with CI; value estimates mu(z) itself (not per unit).
// One sweep per replica settles every grid point n*z.  The estimator is the
// sample mean with a t-interval, or the sample median with an order-statistic
// interval; Auto picks the median exactly when E[Y^2] = infinity, where
// sample-mean intervals are unreliable.
MuEstimate estimate_mu(const DistributionSpec& spec, uint64_t master_seed, const Point& z,
                       const std::vector<long long>& n_grid, int replicas,
                       MuEstimator estimator = MuEstimator::Auto, int window_pad = 6);

// single-replica kernel behind estimate_mu: T(0, n z)/n for each grid n, plus
// whether any of those values carried only a window upper-bound certificate
std::vector<double> mu_replica_values(const WeightField& field, const Point& z,
                                      const std::vector<long long>& n_grid, int window_pad,
                                      bool& clipped);
MuEstimator resolve_estimator(MuEstimator requested, const DistributionSpec& spec, int dim);

// direction fan with first-orthant representatives; lookups canonicalize by
// coordinate reflections and permutations (both are symmetries of the field)
class MuRef {
  public:
    struct FanEntry {
        std::array<double, kMaxDim> unit;  // l1-unit direction, abs-sorted descending
        double per_unit = 0;               // mu_hat along it, per unit of |.|_1
        double per_unit_ci = 0;
    };

    static MuRef exact(double unit_cost, int dim);  // mu(x) = unit_cost * |x|_1
    static MuRef from_fan(std::vector<FanEntry> fan, int dim);

    double value(const Point& z) const;          // mu_hat(z)
    double uncertainty(const Point& z) const;    // CI + Lipschitz extension slack
    double unit_value(const std::array<double, kMaxDim>& dir) const;  // per l1 unit
    double unit_lower() const;  // inf over fan entries (CI not subtracted)
    double unit_upper() const;
    bool is_exact() const { return exact_; }
    double exact_unit() const { return exact_unit_; }
    const std::vector<FanEntry>& fan() const { return fan_; }
    int dim() const { return dim_; }

  private:
    int dim_ = 2;
    bool exact_ = false;
    double exact_unit_ = 0;
    std::vector<FanEntry> fan_;
    double lipschitz_ = 0;  // mu_hat(e1) used in the extension bound
};

// builds the fan from estimate_mu runs along every direction of the
// abs-sorted cone {x : x_1 >= x_2 >= ... >= 0, |x|_1 = fan_n}
MuRef build_mu_fan(const DistributionSpec& spec, uint64_t master_seed, int dim, int fan_n,
                   long long n_est, int replicas, MuEstimator estimator = MuEstimator::Auto);

// gate used by everything that mixes mu_hat into indicator counts: the mu
// uncertainty at z must stay below eps*|z|_1/4
void require_mu_certain(const MuRef& mu, const Point& z, double eps);

// extension to real arguments: normalize to the l1 sphere, nearest-direction
// lookup, scale back; exactly homogeneous by construction
double extend_mu(const MuRef& mu, const std::array<double, kMaxDim>& x);

// single-site deviation intervals (empty optional when no deviation)
std::optional<Interval> interval_above(double t, double mu, double eps);  // T too large
std::optional<Interval> interval_below(double t, double mu, double eps);  // T too small

struct DeviationReport {
    double eps = 0;
    long long window_radius = 0;
    std::vector<Point> z_members;      // Z_eps inside the window, sorted
    std::vector<Interval> intervals;   // every nonempty per-site interval
    IntervalUnion t_set;               // union of the per-site intervals
    double t_measure = 0;
    double t_sup = 0;
    long long sup_member_norm = 0;     // largest |z|_1 among members
    bool censored = false;             // a member lies in the outer half
    size_t inexact_members = 0;        // members whose T was only an upper bound
};
DeviationReport deviation_sets(const WeightField& field, double eps, const MuRef& mu,
                               long long window_radius);

// #(z != 0 in the window with Y(z) > beta |z|_1); the lower-bound device for
// |Z_eps| when beta >= sup-direction mu + eps
long long count_y_exceeding(const WeightField& field, double beta, long long window_radius);

struct TailRow {
    double x = 0;
    long long count = 0, n = 0;
    WilsonInterval ci;
    // analytic P(Y > x/c) companions for dominance comparisons
    double y_tail_c1 = 0, y_tail_c2 = 0, y_tail_c4 = 0;
};
struct TailReport {
    std::vector<TailRow> rows;
    LinearFit log_slope;        // log smoothed p_hat against x (below) or log x (above)
    size_t censored_sweeps = 0;
    double mu_value = 0;        // the reference mu(z) used
};
// P(T(0,z) - mu(z) < -eps x) on the x grid; every x must be >= |z|_1
TailReport tail_below(const DistributionSpec& spec, uint64_t master_seed, const Point& z,
                      double eps, const std::vector<double>& x_grid, int replicas,
                      const MuRef& mu, int window_pad = 10);
// P(T(0,z) - mu(z) > eps x), same grid contract, log-log fit
TailReport tail_above(const DistributionSpec& spec, uint64_t master_seed, const Point& z,
                      double eps, const std::vector<double>& x_grid, int replicas,
                      const MuRef& mu, int window_pad = 10);

struct SumRow {
    double radius = 0;       // nesting radius (R for hre, n for radial)
    double partial_sum = 0;  // mean over replicas of the per-replica sum
    double ci = 0;           // t-interval half width over replicas
    double increment = 0;
    double comparison = 0;   // analytic comparison series partial sum
};
// sum over 0 < |z|_1 <= R of |z|_1^(alpha-d) Phat(|T(0,z) - mu(z)| > eps |z|_1),
// nested radii share one sweep per replica; comparison series uses
// sum over n <= R of n^(alpha-1) P(Y > comparison_m * n) analytically
std::vector<SumRow> hre_partial_sum(const DistributionSpec& spec, uint64_t master_seed,
                                    double alpha, double eps,
                                    const std::vector<long long>& radii, int replicas,
                                    const MuRef& mu, double comparison_m = 1.0);
// sum over n <= n_max of n^(alpha-1) Phat(|T(0, n z) - n mu(z)| > eps n)
std::vector<SumRow> radial_partial_sum(const DistributionSpec& spec, uint64_t master_seed,
                                       const Point& z, double alpha, double eps, long long n_max,
                                       int replicas, const MuRef& mu, double comparison_m = 1.0);

// single-replica kernels behind the two partial sums: one value per radius / per n.
// The caller is responsible for the mu-certainty gate (checked once, not per replica).
// inexact, when given, receives the number of counted sites whose travel time
// carried only a window upper-bound certificate.
std::vector<double> hre_replica_sums(const WeightField& field, double alpha, double eps,
                                     const std::vector<long long>& radii, const MuRef& mu,
                                     size_t* inexact = nullptr);
std::vector<double> radial_replica_sums(const WeightField& field, const Point& z, double alpha,
                                        double eps, long long n_max, const MuRef& mu,
                                        size_t* inexact = nullptr);
// the gate itself: every site of l1 norm <= r_max must pass require_mu_certain
void hre_mu_gate(const MuRef& mu, double eps, long long r_max);

// box holding the whole segment [0, n*z] with enough slack that the window
// boundary certificate usually passes
Region segment_window(const Point& z, long long n, int pad);
// analytic comparison columns shared by the aggregate and the run harness
std::vector<double> hre_comparison_sums(const DistributionSpec& spec, int dim, double alpha,
                                        const std::vector<long long>& radii, double comparison_m);
std::vector<double> radial_comparison_sums(const DistributionSpec& spec, int dim, double alpha,
                                           long long n_max, double comparison_m);

struct LpRow {
    Point z{};
    double moment = 0, ci = 0;  // E |T(0,z)/|z|_1 - mu(z)/|z|_1|^p
};
std::vector<LpRow> lp_error(const DistributionSpec& spec, uint64_t master_seed,
                            const std::vector<Point>& z_grid, double p, int replicas,
                            const MuRef& mu);

struct ShapeRow {
    long long n = 0;
    double ratio_mean = 0, ratio_ci = 0;  // T(0, outside mu-ball of radius n)/n
    size_t inexact = 0;
};
// requires a strictly positive mu (throws DeviationError "mu-degenerate")
std::vector<ShapeRow> point_to_shape(const DistributionSpec& spec, uint64_t master_seed,
                                     const std::vector<long long>& n_grid, int replicas,
                                     const MuRef& mu);

// window and per-cell mu values reused across replicas of the shape experiment
struct ShapeScratch {
    Region window;
    BoxIndex box;
    std::vector<double> mu_at;
    double level_top = 0;
};
ShapeScratch shape_scratch(const std::vector<long long>& n_grid, const MuRef& mu, int dim);
struct ShapeSample {
    double ratio = 0;
    bool exact = false;
};
// one replica: for each grid n, min window time to the complement of the mu-ball
// of radius n, divided by n
std::vector<ShapeSample> shape_replica_ratios(const WeightField& field, const ShapeScratch& scratch,
                                              const std::vector<long long>& n_grid);

struct YRecord {
    long long n = 0;       // even l1 norm
    Point witness{};
    double y_value = 0;
};
struct YRecordReport {
    std::vector<YRecord> records;  // one per even n with a record, smallest witness
    long long sup_n = 0;
};
YRecordReport y_record_scan(const WeightField& field, double beta, long long window_radius);

struct DeviationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fpp
