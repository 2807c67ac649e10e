#include "fpp/deviations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fpp {

namespace {

Point segment_midpoint(const Point& z, long long n) {
    Point m = zero_point(z.dim);
    for (int i = 0; i < z.dim; ++i) m.c[i] = static_cast<int>(n * z.c[i] / 2);
    return m;
}

void check_grid(const std::vector<long long>& grid, const char* what) {
    if (grid.empty()) throw DeviationError(std::string(what) + ": empty grid");
    for (size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 1) throw DeviationError(std::string(what) + ": grid values must be >= 1");
        if (i && grid[i] <= grid[i - 1])
            throw DeviationError(std::string(what) + ": grid must increase");
    }
}

std::array<double, kMaxDim> canonical_unit(const Point& z) {
    std::array<double, kMaxDim> u{0, 0, 0, 0};
    double n1 = double(l1_norm(z));
    for (int i = 0; i < z.dim; ++i) u[i] = std::abs(double(z.c[i])) / n1;
    std::sort(u.begin(), u.begin() + z.dim, std::greater<double>());
    return u;
}

double unit_l1_dist(const std::array<double, kMaxDim>& a, const std::array<double, kMaxDim>& b) {
    double s = 0;
    for (int i = 0; i < kMaxDim; ++i) s += std::abs(a[i] - b[i]);
    return s;
}

bool point_exact(const SweepOutcome& s, double dist) {
    return !s.boundary_touched || dist <= s.min_boundary_dist;
}

}  // namespace

Region segment_window(const Point& z, long long n, int pad) {
    long long radius = static_cast<long long>(std::ceil(0.8 * double(n) * double(l1_norm(z))));
    return Region::box(segment_midpoint(z, n), static_cast<int>(radius) + pad);
}

MuEstimator resolve_estimator(MuEstimator requested, const DistributionSpec& spec, int dim) {
    if (requested != MuEstimator::Auto) return requested;
    return spec.y_moment_finite(2.0, dim) ? MuEstimator::Mean : MuEstimator::Median;
}

std::vector<double> mu_replica_values(const WeightField& field, const Point& z,
                                      const std::vector<long long>& n_grid, int window_pad,
                                      bool& clipped) {
    Region window = segment_window(z, n_grid.back(), window_pad);
    SweepOutcome s = sweep(field, {zero_point(z.dim)}, Region::full_lattice(z.dim), window);
    clipped = false;
    std::vector<double> out(n_grid.size());
    for (size_t i = 0; i < n_grid.size(); ++i) {
        Point p = scale(z, static_cast<int>(n_grid[i]));
        double t = s.dist_at(p);
        if (t == kInf) throw DeviationError("estimate_mu: grid point never settled");
        if (!point_exact(s, t)) clipped = true;
        out[i] = t / double(n_grid[i]);
    }
    return out;
}

MuEstimate estimate_mu(const DistributionSpec& spec, uint64_t master_seed, const Point& z,
                       const std::vector<long long>& n_grid, int replicas, MuEstimator estimator,
                       int window_pad) {
    spec.validate();
    require_direction(z);
    check_grid(n_grid, "estimate_mu");

    MuEstimate out;
    out.z = z;
    out.n_grid = n_grid;

    if (spec.kind == DistKind::Deterministic) {
        // every shortest lattice path costs the same, T(0, nz) = n c |z|_1
        out.exact = true;
        out.value = spec.value * double(l1_norm(z));
        out.ci = 0;
        out.value_per_n.assign(n_grid.size(), out.value);
        out.ci_per_n.assign(n_grid.size(), 0.0);
        return out;
    }

    if (replicas < 30) throw DeviationError("estimate_mu: needs at least 30 replicas");
    MuEstimator used = resolve_estimator(estimator, spec, z.dim);
    out.used = used;

    std::vector<MeanBlock> means(n_grid.size());
    std::vector<SampleBlock> samples(n_grid.size());

    for (int rep = 0; rep < replicas; ++rep) {
        WeightField field(spec, split_seed(master_seed, uint64_t(rep), 0), z.dim);
        bool clipped = false;
        std::vector<double> per_n = mu_replica_values(field, z, n_grid, window_pad, clipped);
        for (size_t i = 0; i < n_grid.size(); ++i) {
            if (used == MuEstimator::Mean)
                means[i].add(per_n[i]);
            else
                samples[i].add(per_n[i]);
        }
        if (clipped) ++out.inexact_sweeps;
    }

    out.value_per_n.resize(n_grid.size());
    out.ci_per_n.resize(n_grid.size());
    for (size_t i = 0; i < n_grid.size(); ++i) {
        if (used == MuEstimator::Mean) {
            out.value_per_n[i] = means[i].mean();
            out.ci_per_n[i] = means[i].ci_half_width();
        } else {
            out.value_per_n[i] = samples[i].median();
            double lo = 0, hi = 0;
            samples[i].median_ci(lo, hi);
            out.ci_per_n[i] = (hi - lo) / 2.0;
        }
    }
    out.value = out.value_per_n.back();
    out.ci = out.ci_per_n.back();
    return out;
}

MuRef MuRef::exact(double unit_cost, int dim) {
    require_dim(dim);
    MuRef m;
    m.dim_ = dim;
    m.exact_ = true;
    m.exact_unit_ = unit_cost;
    m.lipschitz_ = unit_cost;
    return m;
}

MuRef MuRef::from_fan(std::vector<FanEntry> fan, int dim) {
    require_dim(dim);
    if (fan.empty()) throw DeviationError("MuRef: empty fan");
    MuRef m;
    m.dim_ = dim;
    m.exact_ = false;
    m.fan_ = std::move(fan);
    m.lipschitz_ = 0;
    for (const auto& e : m.fan_) m.lipschitz_ = std::max(m.lipschitz_, e.per_unit);
    return m;
}

double MuRef::unit_value(const std::array<double, kMaxDim>& dir) const {
    if (exact_) return exact_unit_;
    double best = kInf;
    double val = 0;
    for (const auto& e : fan_) {
        double d = unit_l1_dist(dir, e.unit);
        if (d < best) {
            best = d;
            val = e.per_unit;
        }
    }
    return val;
}

double MuRef::value(const Point& z) const {
    if (l1_norm(z) == 0) return 0;
    if (exact_) return exact_unit_ * double(l1_norm(z));
    return unit_value(canonical_unit(z)) * double(l1_norm(z));
}

double MuRef::uncertainty(const Point& z) const {
    if (exact_ || l1_norm(z) == 0) return 0;
    auto dir = canonical_unit(z);
    double best = kInf;
    double ci = 0;
    for (const auto& e : fan_) {
        double d = unit_l1_dist(dir, e.unit);
        if (d < best) {
            best = d;
            ci = e.per_unit_ci;
        }
    }
    // statistical width at the nearest sampled direction plus the norm's own
    // variation bound |mu(u) - mu(v)| <= mu(e1) |u - v|_1 across the gap
    return (ci + lipschitz_ * best) * double(l1_norm(z));
}

double MuRef::unit_lower() const {
    if (exact_) return exact_unit_;
    double v = kInf;
    for (const auto& e : fan_) v = std::min(v, e.per_unit);
    return v;
}

double MuRef::unit_upper() const {
    if (exact_) return exact_unit_;
    double v = 0;
    for (const auto& e : fan_) v = std::max(v, e.per_unit);
    return v;
}

namespace {

// nonincreasing nonnegative integer tuples of length dim summing to total;
// each is the abs-sorted representative of one symmetry class of directions
void enumerate_sorted_tuples(int dim, int total, int max_part, std::vector<int>& cur,
                             std::vector<Point>& out) {
    if (static_cast<int>(cur.size()) == dim) {
        if (total == 0) {
            Point p = zero_point(dim);
            for (int i = 0; i < dim; ++i) p.c[i] = cur[i];
            out.push_back(p);
        }
        return;
    }
    int remaining_slots = dim - static_cast<int>(cur.size());
    for (int part = std::min(total, max_part); part >= 0; --part) {
        if (part * remaining_slots < total) break;  // cannot reach the total any more
        cur.push_back(part);
        enumerate_sorted_tuples(dim, total - part, part, cur, out);
        cur.pop_back();
    }
}

}  // namespace

MuRef build_mu_fan(const DistributionSpec& spec, uint64_t master_seed, int dim, int fan_n,
                   long long n_est, int replicas, MuEstimator estimator) {
    spec.validate();
    require_dim(dim);
    if (fan_n < 1) throw DeviationError("build_mu_fan: fan_n must be >= 1");
    if (spec.kind == DistKind::Deterministic) return MuRef::exact(spec.value, dim);

    std::vector<Point> dirs;
    std::vector<int> cur;
    enumerate_sorted_tuples(dim, fan_n, fan_n, cur, dirs);

    std::vector<MuRef::FanEntry> fan;
    fan.reserve(dirs.size());
    for (size_t k = 0; k < dirs.size(); ++k) {
        MuEstimate est = estimate_mu(spec, split_seed(master_seed, k, 7), dirs[k], {n_est},
                                     replicas, estimator);
        MuRef::FanEntry e;
        e.unit = canonical_unit(dirs[k]);
        e.per_unit = est.value / double(fan_n);
        e.per_unit_ci = est.ci / double(fan_n);
        fan.push_back(e);
    }
    return MuRef::from_fan(std::move(fan), dim);
}

double extend_mu(const MuRef& mu, const std::array<double, kMaxDim>& x) {
    double n1 = 0;
    for (int i = 0; i < kMaxDim; ++i) n1 += std::abs(x[i]);
    if (n1 == 0) return 0;
    std::array<double, kMaxDim> u{0, 0, 0, 0};
    for (int i = 0; i < kMaxDim; ++i) u[i] = std::abs(x[i]) / n1;
    std::sort(u.begin(), u.end(), std::greater<double>());
    return mu.unit_value(u) * n1;
}

void require_mu_certain(const MuRef& mu, const Point& z, double eps) {
    double budget = eps * double(l1_norm(z)) / 4.0;
    double unc = mu.uncertainty(z);
    if (unc > budget) {
        std::ostringstream msg;
        msg << "mu-too-uncertain: uncertainty " << unc << " at " << to_string(z)
            << " exceeds eps*|z|_1/4 = " << budget;
        throw DeviationError(msg.str());
    }
}

std::optional<Interval> interval_above(double t, double mu, double eps) {
    if (eps <= 0 || eps >= 1) throw DeviationError("interval_above: eps must be in (0,1)");
    double lo = mu / (1.0 - eps);
    if (t > lo) return Interval{lo, t};
    return std::nullopt;
}

std::optional<Interval> interval_below(double t, double mu, double eps) {
    if (eps <= 0) throw DeviationError("interval_below: eps must be positive");
    double hi = mu / (1.0 + eps);
    if (t < hi) return Interval{t, hi};
    return std::nullopt;
}

DeviationReport deviation_sets(const WeightField& field, double eps, const MuRef& mu,
                               long long window_radius) {
    if (eps <= 0 || eps >= 1) throw DeviationError("deviation_sets: eps must be in (0,1)");
    if (window_radius < 2) throw DeviationError("deviation_sets: window too small");
    int dim = field.dim();
    Point origin = zero_point(dim);
    Region window = Region::box(origin, static_cast<int>(window_radius));
    {
        // every classified site needs the reference trusted to a quarter of its margin
        BoxIndex gate = BoxIndex::from_region(window);
        for (long long idx = 0; idx < gate.volume; ++idx) {
            Point p = gate.point(idx);
            if (l1_norm(p) > 0) require_mu_certain(mu, p, eps);
        }
    }
    SweepOutcome s = sweep(field, {origin}, Region::full_lattice(dim), window);

    DeviationReport rep;
    rep.eps = eps;
    rep.window_radius = window_radius;
    for (long long idx = 0; idx < s.box.volume; ++idx) {
        Point p = s.box.point(idx);
        if (l1_norm(p) == 0) continue;
        double t = s.dist[idx];
        if (t == kInf) throw DeviationError("deviation_sets: unsettled point");
        double muz = mu.value(p);
        if (auto iv = interval_above(t, muz, eps)) {
            rep.intervals.push_back(*iv);
            rep.t_set.add(*iv);
        }
        if (auto iv = interval_below(t, muz, eps)) {
            rep.intervals.push_back(*iv);
            rep.t_set.add(*iv);
        }
        if (std::abs(t - muz) > eps * double(l1_norm(p))) {
            rep.z_members.push_back(p);
            rep.sup_member_norm = std::max(rep.sup_member_norm, l1_norm(p));
            if (linf_norm(p) > window_radius / 2) rep.censored = true;
            if (!point_exact(s, t)) ++rep.inexact_members;
        }
    }
    rep.t_measure = rep.t_set.measure();
    rep.t_sup = rep.t_set.sup();
    return rep;
}

long long count_y_exceeding(const WeightField& field, double beta, long long window_radius) {
    BoxIndex box = BoxIndex::from_region(
        Region::box(zero_point(field.dim()), static_cast<int>(window_radius)));
    long long count = 0;
    for (long long idx = 0; idx < box.volume; ++idx) {
        Point p = box.point(idx);
        long long n = l1_norm(p);
        if (n == 0) continue;
        if (field.y_at(p) > beta * double(n)) ++count;
    }
    return count;
}

namespace {

TailReport tail_core(const DistributionSpec& spec, uint64_t master_seed, const Point& z,
                     double eps, const std::vector<double>& x_grid, int replicas, const MuRef& mu,
                     int window_pad, bool above) {
    spec.validate();
    require_direction(z);
    if (eps <= 0) throw DeviationError("tail: eps must be positive");
    if (replicas < 1) throw DeviationError("tail: needs replicas");
    if (x_grid.empty()) throw DeviationError("tail: empty x grid");
    for (size_t i = 0; i < x_grid.size(); ++i) {
        if (x_grid[i] < double(l1_norm(z)))
            throw DeviationError("tail: x grid must start at or above |z|_1");
        if (i && x_grid[i] <= x_grid[i - 1]) throw DeviationError("tail: x grid must increase");
    }
    require_mu_certain(mu, z, eps);

    double muz = mu.value(z);
    Region window = segment_window(z, 1, window_pad);
    Region region = Region::full_lattice(z.dim);
    Point origin = zero_point(z.dim);

    TailReport out;
    out.mu_value = muz;
    std::vector<CountBlock> blocks(x_grid.size());
    for (int rep = 0; rep < replicas; ++rep) {
        WeightField field(spec, split_seed(master_seed, uint64_t(rep), 0), z.dim);
        TravelTimeResult r = travel_time(field, origin, z, region, window);
        if (r.status != TTStatus::Reached) throw DeviationError("tail: target not reached");
        if (!r.reached_exact()) ++out.censored_sweeps;
        double dev = above ? r.value - muz : muz - r.value;
        for (size_t i = 0; i < x_grid.size(); ++i) blocks[i].add(dev > eps * x_grid[i]);
    }

    std::vector<double> xs, ys;
    for (size_t i = 0; i < x_grid.size(); ++i) {
        TailRow row;
        row.x = x_grid[i];
        row.count = blocks[i].k;
        row.n = blocks[i].n;
        row.ci = blocks[i].wilson();
        row.y_tail_c1 = spec.y_survival(row.x, z.dim);
        row.y_tail_c2 = spec.y_survival(row.x / 2.0, z.dim);
        row.y_tail_c4 = spec.y_survival(row.x / 4.0, z.dim);
        out.rows.push_back(row);
        if (row.count > 0) {
            xs.push_back(above ? std::log(row.x) : row.x);
            ys.push_back(std::log(double(row.count) / double(row.n)));
        }
    }
    out.log_slope = linear_fit(xs, ys);
    return out;
}

}  // namespace

TailReport tail_below(const DistributionSpec& spec, uint64_t master_seed, const Point& z,
                      double eps, const std::vector<double>& x_grid, int replicas,
                      const MuRef& mu, int window_pad) {
    return tail_core(spec, master_seed, z, eps, x_grid, replicas, mu, window_pad, false);
}

TailReport tail_above(const DistributionSpec& spec, uint64_t master_seed, const Point& z,
                      double eps, const std::vector<double>& x_grid, int replicas,
                      const MuRef& mu, int window_pad) {
    return tail_core(spec, master_seed, z, eps, x_grid, replicas, mu, window_pad, true);
}

void hre_mu_gate(const MuRef& mu, double eps, long long r_max) {
    Region window = Region::box(zero_point(mu.dim()), static_cast<int>(r_max));
    BoxIndex box = BoxIndex::from_region(window);
    // gate every summed site before spending any sweeps
    for (long long idx = 0; idx < box.volume; ++idx) {
        Point p = box.point(idx);
        long long n = l1_norm(p);
        if (n == 0 || n > r_max) continue;
        require_mu_certain(mu, p, eps);
    }
}

std::vector<double> hre_replica_sums(const WeightField& field, double alpha, double eps,
                                     const std::vector<long long>& radii, const MuRef& mu,
                                     size_t* inexact) {
    int dim = field.dim();
    long long r_max = radii.back();
    int pad = static_cast<int>(std::max<long long>(4, r_max / 4));
    Point origin = zero_point(dim);
    Region window = Region::box(origin, static_cast<int>(r_max) + pad);
    SweepOutcome s = sweep(field, {origin}, Region::full_lattice(dim), window);

    if (inexact) *inexact = 0;
    std::vector<double> bucket(radii.size(), 0);
    for (long long idx = 0; idx < s.box.volume; ++idx) {
        Point p = s.box.point(idx);
        long long n = l1_norm(p);
        if (n == 0 || n > r_max) continue;
        if (std::abs(s.dist[idx] - mu.value(p)) > eps * double(n)) {
            if (inexact && !point_exact(s, s.dist[idx])) ++*inexact;
            for (size_t k = 0; k < radii.size(); ++k) {
                if (n <= radii[k]) {
                    bucket[k] += std::pow(double(n), alpha - dim);
                    break;
                }
            }
        }
    }
    std::vector<double> sums(radii.size());
    double running = 0;
    for (size_t k = 0; k < radii.size(); ++k) {
        running += bucket[k];
        sums[k] = running;
    }
    return sums;
}

std::vector<double> hre_comparison_sums(const DistributionSpec& spec, int dim, double alpha,
                                        const std::vector<long long>& radii, double comparison_m) {
    std::vector<double> out(radii.size());
    double comp = 0;
    long long n = 1;
    for (size_t k = 0; k < radii.size(); ++k) {
        for (; n <= radii[k]; ++n)
            comp += std::pow(double(n), alpha - 1) * spec.y_survival(comparison_m * double(n), dim);
        out[k] = comp;
    }
    return out;
}

std::vector<double> radial_comparison_sums(const DistributionSpec& spec, int dim, double alpha,
                                           long long n_max, double comparison_m) {
    std::vector<double> out(static_cast<size_t>(n_max));
    double comp = 0;
    for (long long n = 1; n <= n_max; ++n) {
        comp += std::pow(double(n), alpha - 1) * spec.y_survival(comparison_m * double(n), dim);
        out[n - 1] = comp;
    }
    return out;
}

std::vector<SumRow> hre_partial_sum(const DistributionSpec& spec, uint64_t master_seed,
                                    double alpha, double eps, const std::vector<long long>& radii,
                                    int replicas, const MuRef& mu, double comparison_m) {
    spec.validate();
    check_grid(radii, "hre_partial_sum");
    if (eps <= 0) throw DeviationError("hre_partial_sum: eps must be positive");
    if (replicas < 2) throw DeviationError("hre_partial_sum: needs at least 2 replicas");
    int dim = mu.dim();
    hre_mu_gate(mu, eps, radii.back());

    std::vector<MeanBlock> sums(radii.size());
    for (int rep = 0; rep < replicas; ++rep) {
        WeightField field(spec, split_seed(master_seed, uint64_t(rep), 0), dim);
        std::vector<double> partial = hre_replica_sums(field, alpha, eps, radii, mu);
        for (size_t k = 0; k < radii.size(); ++k) sums[k].add(partial[k]);
    }

    std::vector<double> comp = hre_comparison_sums(spec, dim, alpha, radii, comparison_m);
    std::vector<SumRow> rows;
    double prev = 0;
    for (size_t k = 0; k < radii.size(); ++k) {
        SumRow row;
        row.radius = double(radii[k]);
        row.partial_sum = sums[k].mean();
        row.ci = sums[k].ci_half_width();
        row.increment = row.partial_sum - prev;
        prev = row.partial_sum;
        row.comparison = comp[k];
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> radial_replica_sums(const WeightField& field, const Point& z, double alpha,
                                        double eps, long long n_max, const MuRef& mu,
                                        size_t* inexact) {
    double muz = mu.value(z);
    Region window = segment_window(z, n_max, 8);
    SweepOutcome s = sweep(field, {zero_point(z.dim)}, Region::full_lattice(z.dim), window);
    if (inexact) *inexact = 0;
    std::vector<double> sums(static_cast<size_t>(n_max));
    double running = 0;
    for (long long n = 1; n <= n_max; ++n) {
        double t = s.dist_at(scale(z, static_cast<int>(n)));
        if (t == kInf) throw DeviationError("radial_partial_sum: unsettled grid point");
        if (std::abs(t - double(n) * muz) > eps * double(n)) {
            if (inexact && !point_exact(s, t)) ++*inexact;
            running += std::pow(double(n), alpha - 1);
        }
        sums[n - 1] = running;
    }
    return sums;
}

std::vector<SumRow> radial_partial_sum(const DistributionSpec& spec, uint64_t master_seed,
                                       const Point& z, double alpha, double eps, long long n_max,
                                       int replicas, const MuRef& mu, double comparison_m) {
    spec.validate();
    require_direction(z);
    if (eps <= 0) throw DeviationError("radial_partial_sum: eps must be positive");
    if (n_max < 1) throw DeviationError("radial_partial_sum: n_max must be >= 1");
    if (replicas < 2) throw DeviationError("radial_partial_sum: needs at least 2 replicas");
    // the margin at step n is eps*n, so the reference error n*U(z) must stay
    // under a quarter of it uniformly in n
    if (mu.uncertainty(z) > eps / 4.0)
        throw DeviationError("mu-too-uncertain: radial margin eps/4 exceeded");

    std::vector<MeanBlock> sums(static_cast<size_t>(n_max));
    for (int rep = 0; rep < replicas; ++rep) {
        WeightField field(spec, split_seed(master_seed, uint64_t(rep), 0), z.dim);
        std::vector<double> partial = radial_replica_sums(field, z, alpha, eps, n_max, mu);
        for (long long n = 1; n <= n_max; ++n) sums[n - 1].add(partial[n - 1]);
    }

    std::vector<double> comp = radial_comparison_sums(spec, z.dim, alpha, n_max, comparison_m);
    std::vector<SumRow> rows;
    double prev = 0;
    for (long long n = 1; n <= n_max; ++n) {
        SumRow row;
        row.radius = double(n);
        row.partial_sum = sums[n - 1].mean();
        row.ci = sums[n - 1].ci_half_width();
        row.increment = row.partial_sum - prev;
        prev = row.partial_sum;
        row.comparison = comp[n - 1];
        rows.push_back(row);
    }
    return rows;
}

std::vector<LpRow> lp_error(const DistributionSpec& spec, uint64_t master_seed,
                            const std::vector<Point>& z_grid, double p, int replicas,
                            const MuRef& mu) {
    spec.validate();
    if (z_grid.empty()) throw DeviationError("lp_error: empty z grid");
    if (p <= 0) throw DeviationError("lp_error: p must be positive");
    if (replicas < 2) throw DeviationError("lp_error: needs at least 2 replicas");

    std::vector<LpRow> rows;
    for (size_t zi = 0; zi < z_grid.size(); ++zi) {
        const Point& z = z_grid[zi];
        require_direction(z);
        double muz = mu.value(z);
        double norm = double(l1_norm(z));
        Region window = segment_window(z, 1, 8);
        Region region = Region::full_lattice(z.dim);
        Point origin = zero_point(z.dim);
        MeanBlock block;
        for (int rep = 0; rep < replicas; ++rep) {
            WeightField field(spec, split_seed(master_seed, uint64_t(rep), zi + 1), z.dim);
            TravelTimeResult r = travel_time(field, origin, z, region, window);
            if (r.status != TTStatus::Reached) throw DeviationError("lp_error: target not reached");
            block.add(std::pow(std::abs(r.value - muz) / norm, p));
        }
        LpRow row;
        row.z = z;
        row.moment = block.mean();
        row.ci = block.ci_half_width();
        rows.push_back(row);
    }
    return rows;
}

ShapeScratch shape_scratch(const std::vector<long long>& n_grid, const MuRef& mu, int dim) {
    check_grid(n_grid, "point_to_shape");
    double u_lo = mu.unit_lower();
    double u_hi = mu.unit_upper();
    if (!(u_lo > 0)) throw DeviationError("mu-degenerate: unit ball of mu is unbounded");

    // window covering the largest mu-ball plus one crossing ring: a path out
    // of the ball raises mu by at most u_hi per step, so the first point past
    // level n has |.|_1 <= (n + u_hi)/u_lo
    long long n_top = n_grid.back();
    int radius = static_cast<int>(std::ceil((double(n_top) + u_hi) / u_lo)) + 4;
    Region window = Region::box(zero_point(dim), radius);
    ShapeScratch out{window, BoxIndex::from_region(window), {}, double(n_top)};
    out.mu_at.resize(out.box.volume);
    for (long long idx = 0; idx < out.box.volume; ++idx)
        out.mu_at[idx] = mu.value(out.box.point(idx));
    return out;
}

std::vector<ShapeSample> shape_replica_ratios(const WeightField& field, const ShapeScratch& scratch,
                                              const std::vector<long long>& n_grid) {
    Point origin = zero_point(field.dim());
    SweepOutcome s = sweep(field, {origin}, Region::full_lattice(field.dim()), scratch.window);
    std::vector<ShapeSample> out(n_grid.size());
    for (size_t gi = 0; gi < n_grid.size(); ++gi) {
        double level = double(n_grid[gi]);
        double best = kInf;
        for (long long idx = 0; idx < scratch.box.volume; ++idx) {
            if (scratch.mu_at[idx] > level && s.dist[idx] < best) best = s.dist[idx];
        }
        if (best == kInf) throw DeviationError("point_to_shape: level set out of window");
        out[gi].ratio = best / level;
        out[gi].exact = point_exact(s, best);
    }
    return out;
}

std::vector<ShapeRow> point_to_shape(const DistributionSpec& spec, uint64_t master_seed,
                                     const std::vector<long long>& n_grid, int replicas,
                                     const MuRef& mu) {
    spec.validate();
    check_grid(n_grid, "point_to_shape");
    if (replicas < 2) throw DeviationError("point_to_shape: needs at least 2 replicas");
    int dim = mu.dim();
    ShapeScratch scratch = shape_scratch(n_grid, mu, dim);

    std::vector<MeanBlock> blocks(n_grid.size());
    std::vector<size_t> inexact(n_grid.size(), 0);
    for (int rep = 0; rep < replicas; ++rep) {
        WeightField field(spec, split_seed(master_seed, uint64_t(rep), 0), dim);
        std::vector<ShapeSample> samples = shape_replica_ratios(field, scratch, n_grid);
        for (size_t gi = 0; gi < n_grid.size(); ++gi) {
            if (!samples[gi].exact) ++inexact[gi];
            blocks[gi].add(samples[gi].ratio);
        }
    }

    std::vector<ShapeRow> rows;
    for (size_t gi = 0; gi < n_grid.size(); ++gi) {
        ShapeRow row;
        row.n = n_grid[gi];
        row.ratio_mean = blocks[gi].mean();
        row.ratio_ci = blocks[gi].ci_half_width();
        row.inexact = inexact[gi];
        rows.push_back(row);
    }
    return rows;
}

YRecordReport y_record_scan(const WeightField& field, double beta, long long window_radius) {
    if (window_radius < 2) throw DeviationError("y_record_scan: window too small");
    BoxIndex box = BoxIndex::from_region(
        Region::box(zero_point(field.dim()), static_cast<int>(window_radius)));
    YRecordReport out;
    // lexicographic scan, so the first witness stored for each n is smallest
    for (long long idx = 0; idx < box.volume; ++idx) {
        Point p = box.point(idx);
        long long n = l1_norm(p);
        if (n == 0 || n % 2 != 0 || n > window_radius) continue;
        double y = field.y_at(p);
        if (y <= beta * double(n)) continue;
        bool seen = false;
        for (const auto& r : out.records) {
            if (r.n == n) {
                seen = true;
                break;
            }
        }
        if (!seen) {
            out.records.push_back(YRecord{n, p, y});
            out.sup_n = std::max(out.sup_n, n);
        }
    }
    std::sort(out.records.begin(), out.records.end(),
              [](const YRecord& a, const YRecord& b) { return a.n < b.n; });
    return out;
}

}  // namespace fpp
