#include "fpp/regen.hpp"

#include <algorithm>
#include <cmath>

namespace fpp {

namespace {

// Wilson 95% interval for a binomial proportion
void wilson(double k, double n, double& lo, double& hi) {
    if (n <= 0) {
        lo = 0;
        hi = 1;
        return;
    }
    const double zq = 1.959963984540054;
    double p = k / n, z2 = zq * zq;
    double center = (p + z2 / (2 * n)) / (1 + z2 / n);
    double half = zq * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

void mean_ci(const std::vector<double>& xs, double& mean, double& ci) {
    mean = 0;
    ci = 0;
    if (xs.empty()) return;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return;
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    ci = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
}

std::vector<Edge> shifted_band(const std::vector<Edge>& e0, const Point& z, long long n) {
    std::vector<Edge> out = e0;
    Point shift = scale(z, static_cast<int>(n));
    for (Edge& e : out) e.base = add(e.base, shift);
    return out;
}

}  // namespace

Region slab_window(const Point& z, Rat64 r, long long lo_level, long long hi_level) {
    const long long nz = l1_norm(z);
    const double rd = r.to_double();
    const double mid_scale = static_cast<double>(lo_level + hi_level) / (2.0 * nz);
    Point center = zero_point(z.dim);
    for (int i = 0; i < z.dim; ++i)
        center[i] = static_cast<int>(std::llround(mid_scale * z[i]));
    const double span = static_cast<double>(hi_level - lo_level);
    const int radius = static_cast<int>(
        std::ceil(span / 2.0 + rd * (1.0 + std::sqrt(static_cast<double>(z.dim))))) + 2;
    return Region::box(center, radius);
}

TravelTimeResult slab_travel_time(const WeightField& field, const Point& z, Rat64 r,
                                  long long lo_level, long long hi_level) {
    Region slab = Region::cylinder_slab(z, r, lo_level, hi_level);
    Region window = slab_window(z, r, lo_level, hi_level);
    std::vector<Point> sources = cylinder_level_set(z, r, lo_level);
    auto target = [hi_level](const Point& p) { return coord_sum(p) == hi_level; };
    return travel_time_set(field, sources, target, slab, window);
}

RegenTrace scan_regenerations(const WeightField& field, const Point& z, Rat64 r, double tbar,
                              long long m_max, bool with_segments, bool with_cylinder_time,
                              long long level_margin) {
    require_direction(z);
    for (int i = 0; i < z.dim; ++i)
        if (z[i] < 0) throw RegenError("regeneration direction must be first-orthant");
    if (m_max < 1) throw RegenError("m_max must be >= 1");
    RegenTrace tr;
    tr.z = z;
    tr.r = r;
    tr.tbar = tbar;
    tr.m_max = m_max;

    const std::vector<Edge> e0 = cross_edges(z, r, 0);
    if (e0.empty()) throw RegenError("empty crossing band; radius too small for direction");
    tr.e0_size = e0.size();

    for (long long n = 1; n <= m_max; ++n) {
        bool all_cheap = true;
        for (const Edge& e : shifted_band(e0, z, n)) {
            if (field.weight(e) > tbar) {
                all_cheap = false;
                break;
            }
        }
        if (all_cheap) tr.rho.push_back(n);
    }

    const long long nz = l1_norm(z);
    if (with_segments) {
        long long prev = 0;
        for (long long level : tr.rho) {
            TravelTimeResult seg = slab_travel_time(field, z, r, prev * nz, level * nz);
            if (seg.status != TTStatus::Reached)
                throw RegenError("slab sweep failed to cross; inconsistent geometry");
            tr.segment_times.push_back(seg.value);
            tr.segment_exact.push_back(seg.bound == TTBound::Exact ? 1 : 0);
            prev = level;
        }
    }
    if (with_cylinder_time && !tr.rho.empty()) {
        const long long n = tr.rho.back();
        tr.t_c_level = n;
        Region cyl = Region::cylinder(z, r);
        Region window = slab_window(z, r, -level_margin * nz, (n + level_margin) * nz);
        std::vector<Point> sources = cylinder_level_set(z, r, 0);
        auto target = [n, nz](const Point& p) { return coord_sum(p) == n * nz; };
        TravelTimeResult res = travel_time_set(field, sources, target, cyl, window);
        if (res.status == TTStatus::Reached) {
            tr.t_c = res.value;
            tr.t_c_exact = res.bound == TTBound::Exact;
        }
    }
    return tr;
}

long long nu(const RegenTrace& trace, long long m) {
    for (size_t j = 0; j < trace.rho.size(); ++j)
        if (trace.rho[j] > m) return static_cast<long long>(j) + 1;
    throw RegenError("insufficient-data: no regeneration beyond m in this trace");
}

RegenEstimate estimate_regen_constants(const std::vector<RegenTrace>& traces, size_t min_traces) {
    if (traces.size() < min_traces)
        throw RegenError("insufficient-data: need at least " + std::to_string(min_traces) +
                         " traces");
    RegenEstimate est;
    est.traces = traces.size();
    std::vector<double> gaps, segs, cs;
    long long levels_scanned = 0, events = 0;
    for (const RegenTrace& tr : traces) {
        levels_scanned += tr.m_max;
        events += static_cast<long long>(tr.rho.size());
        long long prev = 0;
        for (long long level : tr.rho) {
            gaps.push_back(static_cast<double>(level - prev));
            prev = level;
        }
        for (double s : tr.segment_times) segs.push_back(s);
        if (tr.t_c && tr.t_c_level > 0)
            cs.push_back(*tr.t_c / static_cast<double>(tr.t_c_level));
    }
    est.gaps = gaps.size();
    est.p_hat = levels_scanned > 0 ? static_cast<double>(events) / levels_scanned : 0;
    wilson(static_cast<double>(events), static_cast<double>(levels_scanned), est.p_wilson_lo,
           est.p_wilson_hi);
    mean_ci(gaps, est.mu_rho, est.mu_rho_ci);
    mean_ci(segs, est.mu_tau, est.mu_tau_ci);
    mean_ci(cs, est.mu_c, est.mu_c_ci);
    if (est.mu_rho > 0 && !traces.empty()) {
        double tbar = traces.front().tbar;
        double e0 = static_cast<double>(traces.front().e0_size);
        // everything is per unit of n (multiples of z): J segments cover
        // about J*mu_rho units of n at a cost of about J*mu_tau
        est.sandwich_lo = est.mu_tau / est.mu_rho;
        est.sandwich_hi = est.sandwich_lo + e0 * tbar / est.mu_rho;
    }
    return est;
}

std::vector<TubeSweepRow> tube_constant_sweep(const DistributionSpec& spec, uint64_t master_seed,
                                              const Point& z, const std::vector<Rat64>& radii,
                                              double tbar, long long n_levels, int replicas) {
    (void)tbar;
    std::vector<TubeSweepRow> rows;
    const long long nz = l1_norm(z);
    for (const Rat64& r : radii) {
        TubeSweepRow row;
        row.radius = r.to_double();
        row.per_replica.resize(static_cast<size_t>(replicas), 0.0);
        for (int k = 0; k < replicas; ++k) {
            WeightField field(spec, split_seed(master_seed, static_cast<uint64_t>(k), 0), z.dim);
            Region cyl = Region::cylinder(z, r);
            Region window = slab_window(z, r, -12 * nz, (n_levels + 12) * nz);
            std::vector<Point> sources = cylinder_level_set(z, r, 0);
            const long long target_level = n_levels * nz;
            auto target = [target_level](const Point& p) {
                return coord_sum(p) == target_level;
            };
            TravelTimeResult res = travel_time_set(field, sources, target, cyl, window);
            if (res.status != TTStatus::Reached)
                throw RegenError("tube sweep failed to reach the target cross-section");
            if (res.bound != TTBound::Exact) ++row.inexact;
            row.per_replica[static_cast<size_t>(k)] =
                res.value / static_cast<double>(n_levels);
        }
        mean_ci(row.per_replica, row.mu_c, row.mu_c_ci);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<CylinderTailRow> cylinder_tail_check(const DistributionSpec& spec,
                                                 uint64_t master_seed, const Point& z, Rat64 r,
                                                 const std::vector<double>& x_grid,
                                                 int replicas) {
    require_direction(z);
    const double rd = r.to_double();
    if (rd < 9.0 * std::sqrt(static_cast<double>(z.dim)))
        throw RegenError("radius-too-small: cylinder tail domination needs r >= 9*sqrt(d)");
    const long long nz = l1_norm(z);
    const double norm = static_cast<double>(nz);
    std::vector<double> samples;
    samples.reserve(static_cast<size_t>(replicas));
    Region cyl = Region::cylinder(z, r);
    Region window = slab_window(z, r, -8 * nz, 9 * nz);
    Point origin = zero_point(z.dim);
    Point dest = z;
    for (int k = 0; k < replicas; ++k) {
        WeightField field(spec, split_seed(master_seed, static_cast<uint64_t>(k), 0), z.dim);
        TravelTimeResult res = travel_time(field, origin, dest, cyl, window);
        if (res.status != TTStatus::Reached)
            throw RegenError("cylinder tail sweep failed to reach z");
        samples.push_back(res.value);
    }
    std::vector<CylinderTailRow> rows;
    const double factor = std::pow(9.0, 2.0 * z.dim) * norm;
    for (double x : x_grid) {
        CylinderTailRow row;
        row.x = x;
        double count = 0;
        for (double s : samples)
            if (s > 9.0 * norm * x) count += 1;
        double n = static_cast<double>(samples.size());
        row.lhs_hat = count / n;
        double lo, hi;
        wilson(count, n, lo, hi);
        row.lhs_wilson_hi = hi;
        row.rhs = std::min(1.0, factor * spec.y_survival(x, z.dim));
        row.holds_within_ci = row.lhs_hat <= row.rhs || lo <= row.rhs;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fpp
