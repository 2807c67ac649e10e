#pragma once

#include <optional>
#include <vector>

#include "fpp/paths.hpp"
#include "fpp/weights.hpp"

// Regeneration structure inside the cylinder C(z,r): level n regenerates when
// every edge crossing from level n*|z|_1 - 1 to n*|z|_1 has weight <= tbar.
// Crossing-edge sets at distinct levels are disjoint, so regeneration events
// are i.i.d. Bernoulli across levels and the gaps between consecutive events
// are i.i.d. geometric.  Segment travel times between consecutive
// regeneration cross-sections are computed inside the closed slab between
// them; distinct slabs share no edges, which keeps the (gap, segment) pairs
// i.i.d. and makes the realization-wise sandwich inequality provable:
//   sum_{j < nu(n)} seg_j  <=  T_C(V_0, V_n)  <=  sum_{j <= nu(n)} seg_j
//                                               + tbar * |E_0| * (nu(n) - 1)
// (the upper bound glues slab optimizers through the all-cheap bands, so it
// needs the band graph to be connected; check cross_band_connected first).

namespace fpp {

struct RegenTrace {
    Point z{};
    Rat64 r{};
    double tbar = 0;
    long long m_max = 0;
    size_t e0_size = 0;
    std::vector<long long> rho;          // regeneration levels, without the rho_0 = 0 entry
    std::vector<double> segment_times;   // slab time between rho_{j-1} and rho_j
    std::vector<uint8_t> segment_exact;  // slab sweeps are always window-complete; kept for audit
    // cylinder-restricted T_C(V_0, V_n) at n = last regeneration level
    std::optional<double> t_c = std::nullopt;
    bool t_c_exact = false;
    long long t_c_level = 0;  // the n used for t_c
};

// scan levels 1..m_max for regenerations; optionally run the slab segment
// sweeps and the full cylinder sweep for the sandwich comparison.
// level_margin controls how far beyond [0, n*|z|_1] the full-cylinder window
// extends (paths may backtrack outside the slab range).
RegenTrace scan_regenerations(const WeightField& field, const Point& z, Rat64 r, double tbar,
                              long long m_max, bool with_segments = false,
                              bool with_cylinder_time = false, long long level_margin = 12);

// nu(m) = smallest j >= 1 with rho_j > m; throws RegenError when the trace
// was not scanned far enough to know it
long long nu(const RegenTrace& trace, long long m);

// window box that fully contains the cylinder slab between the given levels
Region slab_window(const Point& z, Rat64 r, long long lo_level, long long hi_level);

// set-to-set slab travel time between cross-sections at lo and hi levels
TravelTimeResult slab_travel_time(const WeightField& field, const Point& z, Rat64 r,
                                  long long lo_level, long long hi_level);

struct RegenEstimate {
    double p_hat = 0;            // regeneration probability per level
    double p_wilson_lo = 0, p_wilson_hi = 0;
    double mu_rho = 0, mu_rho_ci = 0;    // mean gap and t-interval half width
    double mu_tau = 0, mu_tau_ci = 0;    // mean segment time
    double mu_c = 0, mu_c_ci = 0;        // mean T_C(V_0,V_n)/n over traces
    double sandwich_lo = 0, sandwich_hi = 0;  // mu_tau/mu_rho and + |E_0| tbar/mu_rho
    size_t traces = 0, gaps = 0;
};
// pools gaps, segments and cylinder times across traces; throws RegenError
// with fewer than min_traces traces
RegenEstimate estimate_regen_constants(const std::vector<RegenTrace>& traces,
                                       size_t min_traces = 30);

// same-seed tube constant scan over increasing radii; per radius the mean of
// T_C(V_0, V_n)/n plus the per-replica values (for exact coupling checks)
struct TubeSweepRow {
    double radius = 0;
    double mu_c = 0, mu_c_ci = 0;
    std::vector<double> per_replica;  // indexed by replica, same seeds across radii
    size_t inexact = 0;
};
std::vector<TubeSweepRow> tube_constant_sweep(const DistributionSpec& spec, uint64_t master_seed,
                                              const Point& z, const std::vector<Rat64>& radii,
                                              double tbar, long long n_levels, int replicas);

// empirical check of the cylinder tail domination
//   P(T_C(0, z) > 9 |z|_1 x) <= 9^(2 dim) |z|_1 P(Y > x)
struct CylinderTailRow {
    double x = 0;
    double lhs_hat = 0, lhs_wilson_hi = 0;
    double rhs = 0;
    bool holds_within_ci = false;
};
std::vector<CylinderTailRow> cylinder_tail_check(const DistributionSpec& spec,
                                                 uint64_t master_seed, const Point& z, Rat64 r,
                                                 const std::vector<double>& x_grid, int replicas);

struct RegenError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fpp
