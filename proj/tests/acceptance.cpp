// Acceptance gate: thirteen end-to-end checks over the whole laboratory,
// one [PASS]/[FAIL] line each.  Exact claims compare bitwise or in exact
// arithmetic; statistical claims use pinned seeds, pinned sample sizes and
// tolerances pinned below next to each check.
//
// Usage: fpp_acceptance <path-to-fpp-lab> [--only 1,4,9]
// The CLI path is only needed by the reproducibility check (13).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fpp/deviations.hpp"
#include "fpp/lattice.hpp"
#include "fpp/paths.hpp"
#include "fpp/regen.hpp"
#include "fpp/shells.hpp"
#include "fpp/stats.hpp"
#include "fpp/weights.hpp"

namespace fs = std::filesystem;
using namespace fpp;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// accumulate failures without aborting the criterion, so the line reports
// every broken sub-check at once
struct Checker {
    bool ok = true;
    std::ostringstream note;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            note << " FAILED{" << what << "}";
        }
    }
    void info(const std::string& s) { note << " " << s; }
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

ExactSum path_weight_sum(const WeightField& f, const GeodesicResult& g) {
    ExactSum s;
    for (const Edge& e : g.edges) s.add(f.weight(e));
    return s;
}

// ---------------------------------------------------------------------------
// 1. engine travel times equal exhaustive self-avoiding-path enumeration
// ---------------------------------------------------------------------------

// Depth-first enumeration of self-avoiding paths inside a small box, keeping
// the running minimum of the left-to-right floating-point sum per cell.  The
// only prune is lossless: once every cell has a finite minimum, a prefix
// whose accumulated sum already reaches the largest of those minima cannot
// improve any cell (extensions only add nonnegative weights).
struct SawOracle {
    const WeightField& field;
    BoxIndex box;
    std::vector<std::vector<std::pair<double, long long>>> adj;
    std::vector<double> best;
    std::vector<uint8_t> on_path;
    long long reached = 0;
    double worst = kInf;
    bool worst_dirty = false;

    SawOracle(const WeightField& f, const Region& window) : field(f), box(BoxIndex::from_region(window)) {
        adj.resize(static_cast<size_t>(box.volume));
        for (long long i = 0; i < box.volume; ++i) {
            Point p = box.point(i);
            for (const Point& q : neighbors(p)) {
                if (!box.contains(q)) continue;
                adj[static_cast<size_t>(i)].push_back({field.weight(p, q), box.index(q)});
            }
            // cheap edges first so the minima drop early and the prune bites
            std::sort(adj[static_cast<size_t>(i)].begin(), adj[static_cast<size_t>(i)].end());
        }
    }

    double current_worst() {
        if (reached < box.volume) return kInf;
        if (worst_dirty) {
            worst = 0;
            for (double b : best) worst = std::max(worst, b);
            worst_dirty = false;
        }
        return worst;
    }

    void dfs(long long idx, double acc) {
        for (const auto& [w, nidx] : adj[static_cast<size_t>(idx)]) {
            if (on_path[static_cast<size_t>(nidx)]) continue;
            double next = acc + w;
            if (next >= current_worst()) continue;
            if (next < best[static_cast<size_t>(nidx)]) {
                if (best[static_cast<size_t>(nidx)] == kInf) ++reached;
                best[static_cast<size_t>(nidx)] = next;
                worst_dirty = true;
            }
            on_path[static_cast<size_t>(nidx)] = 1;
            dfs(nidx, next);
            on_path[static_cast<size_t>(nidx)] = 0;
        }
    }

    std::vector<double> run(const Point& src) {
        best.assign(static_cast<size_t>(box.volume), kInf);
        on_path.assign(static_cast<size_t>(box.volume), 0);
        reached = 1;
        worst = kInf;
        worst_dirty = true;
        long long s = box.index(src);
        best[static_cast<size_t>(s)] = 0.0;
        on_path[static_cast<size_t>(s)] = 1;
        dfs(s, 0.0);
        return best;
    }
};

Outcome criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    Checker c;
    Region window = Region::box(zero_point(2), 2);
    Region full = Region::full_lattice(2);
    long long mismatches = 0;
    for (uint64_t seed = 1; seed <= 25; ++seed) {
        WeightField f(DistributionSpec::uniform01(), seed, 2);
        Point src = (seed % 2) ? make_point({-2, -2}) : zero_point(2);
        SawOracle oracle(f, window);
        std::vector<double> best = oracle.run(src);
        SweepOutcome s = sweep(f, {src}, full, window);
        for (long long i = 0; i < s.box.volume; ++i)
            if (s.dist[static_cast<size_t>(i)] != best[static_cast<size_t>(i)]) ++mismatches;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(mismatches == 0, "bitwise mismatch count " + std::to_string(mismatches));
    c.require(secs < 60.0, "runtime " + fmt(secs) + "s over 60s budget");
    c.info("25 fields, 5x5 box, all 25 cells bitwise equal, " + fmt(secs, 3) + "s");
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 2. unit weights give the l1 metric exactly, with empty deviation sets
// ---------------------------------------------------------------------------

Outcome criterion_2() {
    Checker c;
    DistributionSpec det = DistributionSpec::deterministic(1.0);
    for (int dim : {2, 3}) {
        WeightField f(det, 7, dim);
        int radius = dim == 2 ? 8 : 4;
        Region window = Region::box(zero_point(dim), radius);
        SweepOutcome s = sweep(f, {zero_point(dim)}, Region::full_lattice(dim), window);
        long long bad = 0;
        for (long long i = 0; i < s.box.volume; ++i) {
            Point p = s.box.point(i);
            if (s.dist[static_cast<size_t>(i)] != static_cast<double>(l1_norm(p))) ++bad;
        }
        c.require(bad == 0, "dim " + std::to_string(dim) + ": " + std::to_string(bad) +
                                " cells differ from |z|_1");
        MuRef ref = MuRef::exact(1.0, dim);
        for (double eps : {0.1, 0.5}) {
            DeviationReport rep = deviation_sets(f, eps, ref, dim == 2 ? 8 : 3);
            c.require(rep.z_members.empty(), "members not empty at eps " + fmt(eps));
            c.require(rep.intervals.empty(), "intervals not empty at eps " + fmt(eps));
            c.require(rep.t_measure == 0.0, "t measure nonzero at eps " + fmt(eps));
            c.require(rep.t_sup == 0.0, "t sup nonzero at eps " + fmt(eps));
        }
    }
    for (auto coords : {std::initializer_list<int>{1, 0}, {2, 3}, {-4, 5}}) {
        Point z = make_point(coords);
        MuEstimate est = estimate_mu(det, 11, z, {1, 2}, 1);
        c.require(est.exact, "unit-cost estimate not flagged exact");
        c.require(est.value == static_cast<double>(l1_norm(z)),
                  "estimate at " + to_string(z) + " is " + fmt(est.value));
        c.require(est.ci == 0.0, "unit-cost estimate has nonzero ci");
    }
    c.info("T == |z|_1 bitwise (d=2,3), empty deviation sets at eps 0.1/0.5, exact norm estimates");
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 3. subadditivity, symmetry, region monotonicity, T >= Y
// ---------------------------------------------------------------------------

Outcome criterion_3() {
    Checker c;
    const int kInstances = 1000;
    Region full = Region::full_lattice(2);
    Region window = Region::box(zero_point(2), 12);
    long long sub_bad = 0, sym_bad = 0, reg_bad = 0, y_bad = 0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        WeightField f(DistributionSpec::uniform01(), seed, 2);
        std::mt19937_64 rng(seed * 7919);
        std::uniform_int_distribution<int> coord(-3, 3);
        auto draw = [&] { return make_point({coord(rng), coord(rng)}); };

        // subadditivity and symmetry through exact witness-path weights: the
        // engine minimizes the floating-point evaluation, so comparisons run
        // over the geodesics' exact dyadic sums instead of rounded totals
        for (int i = 0; i < kInstances; ++i) {
            Point x = draw(), y = draw(), z = draw();
            ExactSum xz = path_weight_sum(f, geodesic(f, x, z, full, window));
            ExactSum xy = path_weight_sum(f, geodesic(f, x, y, full, window));
            ExactSum yz = path_weight_sum(f, geodesic(f, y, z, full, window));
            xy.add(yz);
            if (!(xz <= xy)) ++sub_bad;
        }
        for (int i = 0; i < kInstances; ++i) {
            Point y = draw(), z = draw();
            ExactSum a = path_weight_sum(f, geodesic(f, y, z, full, window));
            ExactSum b = path_weight_sum(f, geodesic(f, z, y, full, window));
            if (!(a == b)) ++sym_bad;
        }

        // widening the region can only widen the feasible path set, and every
        // path keeps its evaluation, so the minima are ordered as doubles
        std::uniform_int_distribution<int> len(3, 6);
        std::uniform_int_distribution<int> axis_pick(0, 3);
        std::uniform_int_distribution<int> rad_pick(1, 4);
        for (int i = 0; i < kInstances; ++i) {
            int a = axis_pick(rng);
            Point dst = scale(unit_point(2, a % 2), (a < 2 ? 1 : -1) * len(rng));
            int r1 = rad_pick(rng), r2 = rad_pick(rng);
            if (r1 == r2) r2 = r1 + 1;
            if (r1 > r2) std::swap(r1, r2);
            double t1 = travel_time(f, zero_point(2), dst, Region::cylinder(dst, Rat64::from_int(r1)), window).value;
            double t2 = travel_time(f, zero_point(2), dst, Region::cylinder(dst, Rat64::from_int(r2)), window).value;
            double tf = travel_time(f, zero_point(2), dst, full, window).value;
            if (!(t1 >= t2 && t2 >= tf)) ++reg_bad;
        }

        // any path into z ends with an edge at z and starts with one at the
        // origin, and running floating-point sums never shrink
        SweepOutcome s = sweep(f, {zero_point(2)}, full, Region::box(zero_point(2), 8));
        std::uniform_int_distribution<int> wide(-8, 8);
        double y0 = f.y_at(zero_point(2));
        for (int i = 0; i < kInstances; ++i) {
            Point z = make_point({wide(rng), wide(rng)});
            if (l1_norm(z) == 0) z = make_point({1, 0});
            double t = s.dist_at(z);
            if (!(t >= f.y_at(z) && t >= y0)) ++y_bad;
        }
    }
    c.require(sub_bad == 0, std::to_string(sub_bad) + " subadditivity violations");
    c.require(sym_bad == 0, std::to_string(sym_bad) + " symmetry violations");
    c.require(reg_bad == 0, std::to_string(reg_bad) + " region monotonicity violations");
    c.require(y_bad == 0, std::to_string(y_bad) + " T >= Y violations");
    c.info("10 seeds x 1000 instances per property, all exact");
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 4. shell suite: structural properties and the comparison inequality
// ---------------------------------------------------------------------------

Outcome criterion_4() {
    auto t0 = std::chrono::steady_clock::now();
    Checker c;
    const double tbar = DistributionSpec::uniform01().quantile(1.0 - 0.02);
    Region window = Region::box(zero_point(2), 100);

    long long attempts = 0, complete = 0;
    long long conn_bad = 0, sep_bad = 0, white_bad = 0, type_bad = 0;
    for (uint64_t seed = 1; complete < 500 && attempts < 560; ++seed) {
        ++attempts;
        WeightField f(DistributionSpec::uniform01(), seed, 2);
        ShellWindow w(f, tbar, window);
        Shell sh;
        try {
            sh = build_shell(w, zero_point(2));
        } catch (const ShellError&) {
            continue;
        }
        if (sh.status != Shell::Status::Complete) continue;
        ++complete;
        if (!shell_connected(sh)) ++conn_bad;
        if (!shell_separates(w, sh)) ++sep_bad;
        if (!shell_touches_infinite_white(w, sh)) ++white_bad;
        bool type_ok = sh.diameter == set_diameter_l1(sh.delta);
        for (const Point& p : sh.delta)
            if (w.black(p)) type_ok = false;
        for (const Point& p : sh.s_set)
            if (std::find(sh.delta.begin(), sh.delta.end(), p) == sh.delta.end()) type_ok = false;
        if (!type_ok) ++type_bad;
    }
    double completion = attempts ? static_cast<double>(complete) / static_cast<double>(attempts) : 0;
    c.require(complete == 500, "only " + std::to_string(complete) + " complete shells");
    c.require(completion >= 0.95, "completion rate " + fmt(completion));
    c.require(conn_bad == 0, std::to_string(conn_bad) + " connectivity failures");
    c.require(sep_bad == 0, std::to_string(sep_bad) + " separation failures");
    c.require(white_bad == 0, std::to_string(white_bad) + " white-witness failures");
    c.require(type_bad == 0, std::to_string(type_bad) + " structural-field failures");

    // pairs: both shells complete, they block each other's center, and the
    // travel-time comparison holds with all four terms on one realization
    long long pair_attempts = 0, pairs = 0, pair_sep_bad = 0, cmp_bad = 0;
    Point a_center = make_point({-15, 0});
    Point b_center = make_point({15, 0});
    for (uint64_t seed = 50001; pairs < 100 && pair_attempts < 130; ++seed) {
        ++pair_attempts;
        WeightField f(DistributionSpec::uniform01(), seed, 2);
        ShellWindow w(f, tbar, window);
        Shell sa, sb;
        try {
            sa = build_shell(w, a_center);
            sb = build_shell(w, b_center);
        } catch (const ShellError&) {
            continue;
        }
        if (sa.status != Shell::Status::Complete || sb.status != Shell::Status::Complete) continue;
        ++pairs;
        if (!shell_pair_separation(w, sa, sb)) ++pair_sep_bad;
        ShellComparison cmp = shell_comparison(f, window, tbar, sa, sb);
        if (!cmp.holds) ++cmp_bad;
    }
    c.require(pairs == 100, "only " + std::to_string(pairs) + " complete pairs");
    c.require(pair_sep_bad == 0, std::to_string(pair_sep_bad) + " pair-separation failures");
    c.require(cmp_bad == 0, std::to_string(cmp_bad) + " comparison failures");

    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs < 600.0, "runtime " + fmt(secs) + "s over 600s budget");
    c.info("completion " + fmt(completion, 4) + ", 100 pairs, " + fmt(secs, 3) + "s");
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 5. shell diameter survival decays log-linearly
// ---------------------------------------------------------------------------

Outcome criterion_5() {
    Checker c;
    const double tbar = DistributionSpec::uniform01().quantile(1.0 - 0.02);
    Region window = Region::box(zero_point(2), 40);
    const int kMaxK = 30, kMinK = 4;
    long long complete = 0;
    std::vector<long long> at_least(kMaxK + 1, 0);
    for (uint64_t seed = 1; seed <= 10000; ++seed) {
        WeightField f(DistributionSpec::uniform01(), seed, 2);
        ShellWindow w(f, tbar, window);
        Shell sh;
        try {
            sh = build_shell(w, zero_point(2));
        } catch (const ShellError&) {
            continue;
        }
        if (sh.status != Shell::Status::Complete) continue;
        ++complete;
        for (int k = kMinK; k <= kMaxK; ++k)
            if (sh.diameter >= k) ++at_least[static_cast<size_t>(k)];
    }
    c.require(complete >= 9900, "only " + std::to_string(complete) + "/10000 complete");

    std::vector<double> xs, ys;
    for (int k = kMinK; k <= kMaxK; ++k) {
        long long n = at_least[static_cast<size_t>(k)];
        if (n == 0) continue;
        xs.push_back(static_cast<double>(k));
        ys.push_back(std::log(static_cast<double>(n) / static_cast<double>(complete)));
    }
    c.require(xs.size() >= 3, "only " + std::to_string(xs.size()) + " populated diameters");
    bool nonincreasing = true;
    for (size_t i = 1; i < ys.size(); ++i)
        if (ys[i] > ys[i - 1]) nonincreasing = false;
    c.require(nonincreasing, "log-survival not nonincreasing");
    c.require(ys.size() >= 2 && ys.back() < ys.front(), "no overall decrease");
    LinearFit fit = linear_fit(xs, ys);
    c.require(fit.slope < 0, "slope " + fmt(fit.slope));
    c.require(fit.r2 >= 0.9, "r2 " + fmt(fit.r2));
    c.info("slope " + fmt(fit.slope) + ", r2 " + fmt(fit.r2) + ", " +
           std::to_string(xs.size()) + " points, " + std::to_string(complete) + " shells");
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 6. regeneration gaps are geometric-mean and segments sandwich the tube time
// ---------------------------------------------------------------------------

Outcome criterion_6() {
    Checker c;
    DistributionSpec dist = DistributionSpec::uniform01();
    const double tbar = dist.quantile(0.9);
    Point z = unit_point(2, 0);
    Rat64 r = Rat64::from_int(1);
    const double target = 1.0 / std::pow(0.9, 5);

    // mean level gap between regenerations; each trace contributes its first
    // gaps only, so a slow trace cannot flood the pool
    std::vector<double> gaps;
    gaps.reserve(12000);
    for (uint64_t seed = 1; seed <= 120 && gaps.size() < 11000; ++seed) {
        WeightField f(dist, seed, 2);
        RegenTrace tr = scan_regenerations(f, z, r, tbar, 200);
        long long prev = 0;
        size_t take = std::min<size_t>(tr.rho.size(), 100);
        for (size_t j = 0; j < take; ++j) {
            gaps.push_back(static_cast<double>(tr.rho[j] - prev));
            prev = tr.rho[j];
        }
    }
    c.require(gaps.size() >= 10000, "only " + std::to_string(gaps.size()) + " increments");
    double mean = 0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(gaps.size());
    double var = 0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    var /= static_cast<double>(gaps.size() - 1);
    double se = std::sqrt(var / static_cast<double>(gaps.size()));
    c.require(std::abs(mean - target) <= 3.0 * se,
              "mean " + fmt(mean, 6) + " vs " + fmt(target, 6) + " (3se " + fmt(3 * se, 4) + ")");

    // per-realization sandwich: segment sums below the cylinder time, and the
    // crossing overhead bounded by tbar * |E_0| per interior regeneration
    long long traces_with_tc = 0, sandwich_bad = 0;
    for (uint64_t seed = 1; seed <= 30; ++seed) {
        WeightField f(dist, seed, 2);
        RegenTrace tr = scan_regenerations(f, z, r, tbar, 10, true, true);
        if (!tr.t_c) continue;
        ++traces_with_tc;
        double seg_sum = 0;
        for (double s : tr.segment_times) seg_sum += s;
        double upper =
            seg_sum + tbar * static_cast<double>(tr.e0_size) * static_cast<double>(tr.rho.size() - 1);
        if (!(seg_sum <= *tr.t_c && *tr.t_c <= upper)) ++sandwich_bad;
    }
    c.require(traces_with_tc >= 25, "only " + std::to_string(traces_with_tc) + " cylinder times");
    c.require(sandwich_bad == 0, std::to_string(sandwich_bad) + " sandwich violations");
    c.info("mean gap " + fmt(mean, 6) + " (target " + fmt(target, 6) + ", 3se " + fmt(3 * se, 4) +
           ", n " + std::to_string(gaps.size()) + "), sandwich exact on " +
           std::to_string(traces_with_tc) + " traces");
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 7. tube constants nonincreasing in the radius, gap to the open estimate
// ---------------------------------------------------------------------------

Outcome criterion_7() {
    Checker c;
    DistributionSpec dist = DistributionSpec::uniform01();
    Point z = unit_point(2, 0);
    const uint64_t master = 901;
    const int replicas = 40;
    // the last radius is wide enough that no 12-level crossing feels the
    // walls: it plays the unrestricted baseline with the same seeds and the
    // same crossing target, so gaps to it are coupled realization by
    // realization
    std::vector<Rat64> radii = {Rat64::from_int(1), Rat64::from_int(2), Rat64::from_int(4),
                                Rat64::from_int(8), Rat64::from_int(50)};
    std::vector<TubeSweepRow> rows =
        tube_constant_sweep(dist, master, z, radii, dist.quantile(0.9), 12, replicas);

    // same seeds, wider tube: the feasible path set only grows
    long long coupled_bad = 0;
    for (size_t i = 0; i + 1 < rows.size(); ++i)
        for (int k = 0; k < replicas; ++k)
            if (!(rows[i].per_replica[static_cast<size_t>(k)] >=
                  rows[i + 1].per_replica[static_cast<size_t>(k)]))
                ++coupled_bad;
    c.require(coupled_bad == 0, std::to_string(coupled_bad) + " coupled monotonicity violations");

    const TubeSweepRow& base = rows.back();
    std::ostringstream gap_str;
    std::vector<double> gaps;
    for (size_t i = 0; i + 1 < rows.size(); ++i) {
        gaps.push_back(rows[i].mu_c - base.mu_c);
        gap_str << (i ? " " : "") << fmt(gaps.back(), 4);
    }
    bool nonneg = true, strict_ok = true;
    for (double g : gaps)
        if (!(g >= 0)) nonneg = false;
    for (size_t i = 0; i + 1 < gaps.size(); ++i)
        if (!(gaps[i + 1] < gaps[i])) strict_ok = false;
    c.require(nonneg, "a restricted constant fell below the open baseline");
    c.require(strict_ok, "gaps to the open baseline not strictly decreasing");
    c.info("gaps [" + gap_str.str() + "] vs baseline " + fmt(base.mu_c, 5));
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 8. lower tail: empirical decay and ordered survival at |z| vs 2|z|
// ---------------------------------------------------------------------------

Outcome criterion_8() {
    Checker c;
    DistributionSpec dist = DistributionSpec::exponential(1.0);
    Point z = make_point({10, 0});
    // reference pinned at the coarse-scale norm estimate: the +-eps band must
    // sit where 10^4 replicas can populate it, and the small-scale estimate
    // is the one the band is measured against
    MuEstimate est = estimate_mu(dist, 1001, unit_point(2, 0), {2, 4}, 400);
    MuRef ref = MuRef::exact(est.value, 2);
    TailReport rep = tail_below(dist, 1002, z, 0.2, {10, 11, 12, 13, 20}, 10000, ref);

    c.require(rep.log_slope.points >= 2, "fewer than 2 populated grid rows");
    c.require(rep.log_slope.slope < 0, "slope " + fmt(rep.log_slope.slope));
    bool mono = true;
    for (size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].count > rep.rows[i - 1].count) mono = false;
    c.require(mono, "survival counts not nonincreasing");
    const TailRow& lo_row = rep.rows.front();
    const TailRow& hi_row = rep.rows.back();
    c.require(hi_row.ci.hi < lo_row.ci.lo,
              "no 95% separation: hi(2|z|) " + fmt(hi_row.ci.hi, 4) + " vs lo(|z|) " +
                  fmt(lo_row.ci.lo, 4));
    std::ostringstream counts;
    for (const auto& row : rep.rows) counts << " " << row.count;
    c.info("mu_ref " + fmt(est.value, 4) + "/unit, slope " + fmt(rep.log_slope.slope, 4) +
           ", counts" + counts.str());
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 9. upper tail: log-log slope matches the cheapest-exit exponent
// ---------------------------------------------------------------------------

Outcome criterion_9() {
    Checker c;
    DistributionSpec dist = DistributionSpec::pareto(1.0);
    Point z = make_point({10, 0});
    MuEstimate est = estimate_mu(dist, 1101, unit_point(2, 0), {4, 8}, 400);
    MuRef ref = MuRef::exact(est.value, 2);
    // thresholds must clear the bulk fluctuations before the decay is ruled
    // by single expensive incident edges; 0.2 puts the whole grid there while
    // 10^4 replicas still populate four of the five rows
    const double eps = 0.2;
    TailReport rep = tail_above(dist, 1102, z, eps, {20, 28, 40, 57, 80}, 10000, ref);

    // min of 4 incident edges, each with survival x^-1: exponent 4
    const double kExponent = -4.0;
    c.require(rep.log_slope.points >= 3, "fewer than 3 populated grid rows");
    c.require(std::abs(rep.log_slope.slope - kExponent) <= 0.5,
              "slope " + fmt(rep.log_slope.slope, 4) + " outside -4 +- 0.5");
    std::ostringstream counts;
    for (const auto& row : rep.rows) counts << " " << row.count;
    c.info("mu_ref " + fmt(est.value, 4) + "/unit, eps " + fmt(eps) + ", slope " +
           fmt(rep.log_slope.slope, 4) + ", counts" + counts.str());
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 10. moment dichotomy: partial-sum trends and deviation-set growth
// ---------------------------------------------------------------------------

// increment-ratio rule also used by the harness metrics: compare the last
// radius window against the first true window
std::string trend_of(const std::vector<SumRow>& rows, double threshold) {
    std::vector<double> inc;
    for (size_t k = 1; k < rows.size(); ++k) inc.push_back(rows[k].increment);
    if (inc.size() < 2) return "unknown";
    if (inc.front() <= 0) return inc.back() <= 0 ? "converging" : "diverging";
    double ratio = inc.back() / inc.front();
    if (ratio < threshold) return "converging";
    if (ratio > 1.0 / threshold) return "diverging";
    return "flat";
}

Outcome criterion_10() {
    Checker c;
    const double kThreshold = 0.9;

    // summable side: light enough tail that members die out with the radius
    {
        DistributionSpec dist = DistributionSpec::pareto(1.0);
        MuEstimate est = estimate_mu(dist, 1201, unit_point(2, 0), {8, 16}, 200);
        double eps = 0.35 * est.value;  // clears the diagonal-vs-axis spread of the l1 reference
        std::vector<SumRow> rows =
            hre_partial_sum(dist, 1202, 1.0, eps, {2, 4, 8, 16}, 2000, MuRef::exact(est.value, 2));
        std::string label = trend_of(rows, kThreshold);
        c.require(label == "converging", "summable case labeled " + label);
        c.info("conv inc [" + fmt(rows[1].increment, 4) + " " + fmt(rows[2].increment, 4) + " " +
               fmt(rows[3].increment, 4) + "]");
    }

    // divergent side: geometric windows keep the true increments flat while
    // a summable tail would still collapse them
    {
        DistributionSpec dist = DistributionSpec::pareto(0.2);
        MuEstimate est = estimate_mu(dist, 1301, unit_point(2, 0), {4, 8, 16}, 200);
        double eps = 0.35 * est.value;
        std::vector<SumRow> rows = hre_partial_sum(dist, 1302, 1.0, eps, {20, 30, 45, 68}, 6000,
                                                   MuRef::exact(est.value, 2));
        std::string label = trend_of(rows, kThreshold);
        double ratio = rows[1].increment > 0 ? rows[3].increment / rows[1].increment : -1;
        c.require(label != "converging", "divergent case labeled " + label);
        c.info("div ratio " + fmt(ratio, 4) + " label " + label + " (unit " + fmt(est.value, 4) + ")");
    }

    // member counts: grow under a heavy tail, stabilize under a light one
    auto count_members = [](const DistributionSpec& dist, uint64_t master, double eps,
                            const MuRef& ref, int replicas, std::vector<MeanBlock>& blocks) {
        const long long radii[3] = {10, 20, 30};
        for (int rep = 0; rep < replicas; ++rep) {
            WeightField f(dist, split_seed(master, static_cast<uint64_t>(rep), 0), 2);
            for (int i = 0; i < 3; ++i) {
                DeviationReport r = deviation_sets(f, eps, ref, radii[i]);
                blocks[static_cast<size_t>(i)].add(static_cast<double>(r.z_members.size()));
            }
        }
    };
    {
        MuRef fan = build_mu_fan(DistributionSpec::pareto(0.4), 1401, 2, 64, 1, 100,
                                 MuEstimator::Median);
        std::vector<MeanBlock> blocks(3);
        count_members(DistributionSpec::pareto(0.4), 1402, 0.9, fan, 450, blocks);
        double c10 = blocks[0].mean(), c20 = blocks[1].mean(), c30 = blocks[2].mean();
        bool grows = c30 > c20 && c20 > c10 &&
                     (c30 - c10) > blocks[0].ci_half_width() + blocks[2].ci_half_width();
        c.require(grows, "heavy-tail member counts did not grow: " + fmt(c10, 4) + " " +
                             fmt(c20, 4) + " " + fmt(c30, 4));
        c.info("grow counts [" + fmt(c10, 4) + " " + fmt(c20, 4) + " " + fmt(c30, 4) + "]");
    }
    {
        MuRef fan = build_mu_fan(DistributionSpec::exponential(1.0), 1501, 2, 16, 8, 100,
                                 MuEstimator::Mean);
        std::vector<MeanBlock> blocks(3);
        count_members(DistributionSpec::exponential(1.0), 1502, 0.3, fan, 450, blocks);
        double c20 = blocks[1].mean(), c30 = blocks[2].mean();
        bool stable = (c30 - c20) <= blocks[1].ci_half_width() + blocks[2].ci_half_width();
        c.require(stable, "light-tail member counts kept growing: " + fmt(c20, 4) + " -> " +
                              fmt(c30, 4));
        c.info("stab counts [" + fmt(blocks[0].mean(), 4) + " " + fmt(c20, 4) + " " + fmt(c30, 4) +
               "]");
    }
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 11. point-to-level-set times approach the estimated norm
// ---------------------------------------------------------------------------

Outcome criterion_11() {
    Checker c;
    DistributionSpec dist = DistributionSpec::exponential(1.0);
    // two-scale direction fan with 1/n extrapolation: the raw finite-scale
    // estimates carry a bias comparable to the effect under test, and the
    // extrapolated fan removes it without widening the windows
    std::vector<MuRef::FanEntry> fan;
    const int kFanN = 16;
    for (int a = kFanN; a * 2 >= kFanN; --a) {
        int b = kFanN - a;
        Point dir = make_point({a, b});
        MuEstimate est = estimate_mu(dist, split_seed(1601, static_cast<uint64_t>(a), 7), dir,
                                     {1, 2, 4}, 200);
        double per_unit = (2.0 * est.value_per_n[2] - est.value_per_n[1]) / static_cast<double>(kFanN);
        double per_ci = (2.0 * est.ci_per_n[2] + est.ci_per_n[1]) / static_cast<double>(kFanN);
        MuRef::FanEntry e;
        e.unit = {static_cast<double>(a) / kFanN, static_cast<double>(b) / kFanN, 0.0, 0.0};
        e.per_unit = per_unit;
        e.per_unit_ci = per_ci;
        c.require(per_unit > 0.05, "degenerate extrapolated direction estimate " + fmt(per_unit));
        fan.push_back(e);
    }
    MuRef ref = MuRef::from_fan(fan, 2);

    std::vector<ShapeRow> rows = point_to_shape(dist, 1602, {10, 20, 40}, 200, ref);
    std::vector<double> gap;
    std::ostringstream gs;
    for (const auto& row : rows) {
        gap.push_back(std::abs(row.ratio_mean - 1.0));
        gs << " " << fmt(gap.back(), 4);
    }
    c.require(gap.size() == 3 && gap[0] > gap[1] && gap[1] > gap[2],
              "normalized exit-time gaps not decreasing:" + gs.str());
    c.info("gaps" + gs.str());
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 12. identities: restricted moments, bound chains, grid measure
// ---------------------------------------------------------------------------

Outcome criterion_12() {
    Checker c;
    const double kRelTol = 1e-6;

    // two evaluation routes over the same empirical measure must agree; the
    // analytic anchors pin the quantile grids themselves
    struct MomentCase {
        const char* name;
        std::vector<double> samples;
        double alpha, a, anchor, anchor_tol;
    };
    const int kN = 20000;
    std::vector<MomentCase> cases;
    {
        std::vector<double> u, e, p;
        for (int i = 0; i < kN; ++i) {
            double q = (static_cast<double>(i) + 0.5) / kN;
            u.push_back(q);
            e.push_back(-std::log(1.0 - q));
            p.push_back(1.0 / (1.0 - q));
        }
        cases.push_back({"uniform", u, 1.0, 0.5, 0.375, 1e-3});
        cases.push_back({"exponential", e, 1.0, 0.5, 1.5 * std::exp(-0.5), 2e-3});
        cases.push_back({"pareto", p, 0.5, 2.0, std::sqrt(2.0), 0.02});
    }
    for (const auto& mc : cases) {
        RestrictedMoment m = restricted_moment(mc.samples, mc.alpha, mc.a);
        double rel = std::abs(m.direct - m.tail_formula) / std::max(1.0, std::abs(m.direct));
        c.require(rel <= kRelTol, std::string(mc.name) + " route mismatch " + fmt(rel, 3));
        c.require(std::abs(m.direct - mc.anchor) <= mc.anchor_tol,
                  std::string(mc.name) + " off anchor: " + fmt(m.direct, 6) + " vs " +
                      fmt(mc.anchor, 6));
    }

    // realization-wise chains: expensive incident edges force membership and
    // open intervals of provable length
    MuRef mu = MuRef::exact(2.0, 2);
    const double eps = 0.5;
    double beta_count = (mu.unit_upper() + eps) * 1.05;
    double beta_iv = mu.unit_upper() / (1.0 - eps) * 1.05;
    // heavy tail so the device trips often; the inequalities themselves hold
    // for any field realization
    long long chain_sites = 0, chain_bad = 0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        WeightField f(DistributionSpec::pareto(0.25), seed, 2);
        DeviationReport rep = deviation_sets(f, eps, mu, 8);
        if (rep.t_measure != rep.t_set.measure()) ++chain_bad;
        long long low = count_y_exceeding(f, beta_count, 8);
        if (low > static_cast<long long>(rep.z_members.size())) ++chain_bad;
        SweepOutcome s =
            sweep(f, {zero_point(2)}, Region::full_lattice(2), Region::box(zero_point(2), 8));
        for (long long idx = 0; idx < s.box.volume; ++idx) {
            Point p = s.box.point(idx);
            long long n = l1_norm(p);
            if (n == 0) continue;
            double y = f.y_at(p);
            if (!(y > beta_iv * static_cast<double>(n))) continue;
            ++chain_sites;
            double t = s.dist[static_cast<size_t>(idx)];
            auto iv = interval_above(t, mu.value(p), eps);
            bool ok = t >= y && iv.has_value();
            if (ok) {
                ok = iv->length() >= y - beta_iv * static_cast<double>(n) && rep.t_sup >= iv->hi &&
                     std::binary_search(rep.z_members.begin(), rep.z_members.end(), p);
            }
            if (!ok) ++chain_bad;
        }
    }
    c.require(chain_sites > 0, "no qualifying expensive sites in 20 fields");
    c.require(chain_bad == 0, std::to_string(chain_bad) + " chain violations");

    // grid-filtered measure: each maximal interval contributes less than one
    // step of discrepancy; checked on synthetic unions and on exceptional
    // sets of a light-tailed field, where the support stays bounded
    long long grid_bad = 0, grid_unions = 0;
    double worst_grid = 0;
    const double step = 0.01;
    auto check_grid = [&](const IntervalUnion& u) {
        ++grid_unions;
        size_t comps = std::max<size_t>(1, u.components().size());
        double err = std::abs(u.measure() - grid_measure(u, step));
        worst_grid = std::max(worst_grid, err / (step * static_cast<double>(comps)));
        if (!(err < step * static_cast<double>(comps))) ++grid_bad;
    };
    std::mt19937_64 grng(2024);
    std::uniform_real_distribution<double> lo_d(0.0, 50.0), len_d(0.0, 3.0);
    for (int trial = 0; trial < 30; ++trial) {
        IntervalUnion u;
        int m = 1 + static_cast<int>(grng() % 40);
        for (int i = 0; i < m; ++i) {
            double lo = lo_d(grng);
            u.add(lo, lo + len_d(grng));
        }
        check_grid(u);
    }
    MuRef mu_exp = MuRef::exact(0.6, 2);
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        WeightField f(DistributionSpec::exponential(1.0), seed, 2);
        DeviationReport rep = deviation_sets(f, 0.3, mu_exp, 8);
        if (!rep.t_set.empty()) check_grid(rep.t_set);
    }
    c.require(grid_bad == 0, std::to_string(grid_bad) + " grid-measure violations");
    c.info("moment routes <= 1e-6 rel, " + std::to_string(chain_sites) + " chain sites exact, " +
           std::to_string(grid_unions) + " unions within " + fmt(worst_grid, 3) +
           " steps/interval");
    return {c.ok, c.note.str()};
}

// ---------------------------------------------------------------------------
// 13. CLI runs are byte-identical regardless of thread count
// ---------------------------------------------------------------------------

struct TempTree {
    fs::path path;
    explicit TempTree(const std::string& tag) {
        auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path = fs::temp_directory_path() / ("fpp_acceptance_" + tag + "_" + std::to_string(stamp));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempTree() { fs::remove_all(path); }
    fs::path sub(const std::string& name) const { return path / name; }
};

std::optional<std::string> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome criterion_13(const std::string& lab_path) {
    Checker c;
    if (lab_path.empty()) {
        c.require(false, "fpp-lab path not provided on the command line");
        return {c.ok, c.note.str()};
    }
    TempTree tree("repro");
    {
        std::ofstream cfg(tree.sub("run.toml"));
        cfg << "[run]\n"
               "experiment = \"y-records\"\n"
               "dimension = 2\n"
               "master_seed = 123\n"
               "replicas = 64\n"
               "window_radius = 10\n"
               "\n"
               "[distribution]\n"
               "kind = \"pareto\"\n"
               "a = 0.4\n"
               "\n"
               "[y-records]\n"
               "beta = 1.0\n";
    }
    auto run = [&](const std::string& out, int threads) {
        std::ostringstream cmd;
        cmd << "\"" << lab_path << "\" run --config \"" << tree.sub("run.toml").string()
            << "\" --out \"" << tree.sub(out).string() << "\" --threads " << threads
            << " > /dev/null 2>&1";
        return std::system(cmd.str().c_str());
    };
    c.require(run("t1", 1) == 0, "single-thread run failed");
    c.require(run("t4", 4) == 0, "four-thread run failed");
    c.require(run("t1b", 1) == 0, "repeat run failed");
    for (const char* name : {"config.toml", "results.csv", "summary.json"}) {
        auto a = read_bytes(tree.sub("t1") / name);
        auto b = read_bytes(tree.sub("t4") / name);
        auto d = read_bytes(tree.sub("t1b") / name);
        c.require(a.has_value() && b.has_value() && d.has_value(),
                  std::string(name) + " missing from an output");
        if (a && b && d) {
            c.require(*a == *b, std::string(name) + " differs between 1 and 4 threads");
            c.require(*a == *d, std::string(name) + " differs between repeated runs");
        }
    }
    c.info("three runs (1, 4, 1 threads), all artifacts byte-identical");
    return {c.ok, c.note.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::string lab_path;
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            std::istringstream is(argv[++i]);
            std::string tok;
            while (std::getline(is, tok, ',')) only.push_back(std::stoi(tok));
        } else if (lab_path.empty()) {
            lab_path = arg;
        }
    }

    struct Entry {
        int id;
        const char* label;
        std::function<Outcome()> run;
    };
    std::vector<Entry> entries = {
        {1, "exact oracle equivalence", criterion_1},
        {2, "deterministic field exactness", criterion_2},
        {3, "metric inequalities", criterion_3},
        {4, "shell suite", criterion_4},
        {5, "shell diameter tail", criterion_5},
        {6, "regeneration law", criterion_6},
        {7, "tube-constant monotonicity", criterion_7},
        {8, "lower tail decay", criterion_8},
        {9, "upper tail exponent", criterion_9},
        {10, "moment dichotomy trends", criterion_10},
        {11, "point-to-shape convergence", criterion_11},
        {12, "identities and bound chains", criterion_12},
        {13, "thread-count reproducibility", [&] { return criterion_13(lab_path); }},
    };

    int failures = 0, ran = 0;
    for (const auto& e : entries) {
        if (!only.empty() && std::find(only.begin(), only.end(), e.id) == only.end()) continue;
        ++ran;
        auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = e.run();
        } catch (const std::exception& ex) {
            out.pass = false;
            out.detail = std::string(" threw: ") + ex.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!out.pass) ++failures;
        std::cout << (out.pass ? "[PASS]" : "[FAIL]") << " criterion " << e.id << ": " << e.label
                  << " |" << out.detail << " | " << fmt(secs, 3) << "s" << std::endl;
    }
    std::cout << "acceptance: " << (ran - failures) << "/" << ran << " criteria passed"
              << std::endl;
    return failures == 0 ? 0 : 1;
}
