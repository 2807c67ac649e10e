#include "fpp/paths.hpp"

#include <algorithm>
#include <queue>

namespace fpp {

BoxIndex BoxIndex::from_region(const Region& window) {
    if (window.kind() != Region::Kind::Box)
        throw PathError("sweep windows must be box regions");
    BoxIndex b;
    b.dim = window.dim();
    b.lo = window.box_center();
    const int r = window.box_radius();
    b.volume = 1;
    for (int i = 0; i < b.dim; ++i) {
        b.lo[i] -= r;
        b.ext[static_cast<size_t>(i)] = 2 * r + 1;
        b.volume *= 2 * r + 1;
    }
    if (b.volume > (1LL << 31) - 2) throw PathError("window too large to index");
    return b;
}

bool BoxIndex::contains(const Point& p) const {
    if (p.dim != dim) return false;
    for (int i = 0; i < dim; ++i) {
        int off = p[i] - lo[i];
        if (off < 0 || off >= ext[static_cast<size_t>(i)]) return false;
    }
    return true;
}

long long BoxIndex::index(const Point& p) const {
    long long idx = 0;
    for (int i = 0; i < dim; ++i)
        idx = idx * ext[static_cast<size_t>(i)] + (p[i] - lo[i]);
    return idx;
}

Point BoxIndex::point(long long idx) const {
    Point p = lo;
    for (int i = dim - 1; i >= 0; --i) {
        int e = ext[static_cast<size_t>(i)];
        p[i] = lo[i] + static_cast<int>(idx % e);
        idx /= e;
    }
    return p;
}

long long BoxIndex::exit_steps(const Point& p) const {
    long long best = std::numeric_limits<long long>::max();
    for (int i = 0; i < dim; ++i) {
        long long left = p[i] - lo[i] + 1;
        long long right = lo[i] + ext[static_cast<size_t>(i)] - p[i];
        best = std::min({best, left, right});
    }
    return best;
}

bool SweepOutcome::settled(const Point& p) const {
    if (!box.contains(p)) return false;
    return done[static_cast<size_t>(box.index(p))] != 0;
}

double SweepOutcome::dist_at(const Point& p) const {
    if (!settled(p)) return kInf;
    return dist[static_cast<size_t>(box.index(p))];
}

namespace {

struct QEntry {
    double d;
    long long idx;
    long long parent;
    bool operator>(const QEntry& o) const {
        if (d != o.d) return d > o.d;
        if (idx != o.idx) return idx > o.idx;
        return parent > o.parent;
    }
};

}  // namespace

SweepOutcome sweep(const WeightField& field, const std::vector<Point>& sources,
                   const Region& region, const Region& window,
                   const std::function<bool(const Point&)>& target, double t_max) {
    if (sources.empty()) throw PathError("sweep needs at least one source");
    SweepOutcome out;
    out.box = BoxIndex::from_region(window);
    const size_t vol = static_cast<size_t>(out.box.volume);
    out.dist.assign(vol, kInf);
    out.parent.assign(vol, -1);
    out.done.assign(vol, 0);

    std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> pq;
    for (const Point& s : sources) {
        if (s.dim != field.dim()) throw PathError("source dimension mismatch");
        if (!out.box.contains(s)) throw PathError("source outside window: " + to_string(s));
        if (!region.contains(s)) throw PathError("source outside region: " + to_string(s));
        long long idx = out.box.index(s);
        if (out.dist[static_cast<size_t>(idx)] == 0.0) continue;  // duplicate source
        out.dist[static_cast<size_t>(idx)] = 0.0;
        pq.push(QEntry{0.0, idx, -1});
    }

    while (!pq.empty()) {
        QEntry top = pq.top();
        pq.pop();
        const size_t ti = static_cast<size_t>(top.idx);
        if (out.done[ti]) continue;
        if (top.d > t_max) break;
        out.done[ti] = 1;
        out.dist[ti] = top.d;
        out.parent[ti] = static_cast<int>(top.parent);
        out.settled_up_to = top.d;
        ++out.settled_count;

        const Point p = out.box.point(top.idx);
        bool escape_here = false;
        for (int axis = 0; axis < p.dim; ++axis) {
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                Point q = p;
                q[axis] += sgn;
                if (!out.box.contains(q)) {
                    if (region.contains(q)) escape_here = true;
                    continue;
                }
                if (!region.contains(q)) continue;
                const size_t qi = static_cast<size_t>(out.box.index(q));
                if (out.done[qi]) continue;
                Edge e;
                e.axis = axis;
                e.base = (sgn > 0) ? p : q;
                double nd = top.d + field.weight(e);
                if (nd < out.dist[qi]) {
                    out.dist[qi] = nd;
                    pq.push(QEntry{nd, static_cast<long long>(qi), top.idx});
                }
            }
        }
        if (escape_here) {
            out.boundary_touched = true;
            out.min_boundary_dist = std::min(out.min_boundary_dist, top.d);
        }
        if (target && target(p)) {
            out.hit = top.idx;
            break;
        }
    }
    return out;
}

namespace {

// exactness certificate for a value v found inside the window: any path that
// leaves the window either crosses a settled boundary point (cost >= the
// minimum settled boundary distance) or needs more cheap steps than v buys
TTBound classify_bound(const SweepOutcome& s, double v, long long min_exit_steps,
                       double min_weight) {
    if (!s.boundary_touched || s.min_boundary_dist >= v) return TTBound::Exact;
    if (min_weight > 0 && v <= static_cast<double>(min_exit_steps) * min_weight)
        return TTBound::Exact;
    return TTBound::UpperBound;
}

TravelTimeResult finish_unreached(const SweepOutcome& s, const Region& region) {
    TravelTimeResult r;
    r.settled_up_to = s.settled_up_to;
    r.boundary_touched = s.boundary_touched;
    if (!s.boundary_touched) {
        r.status = TTStatus::Unreachable;  // the whole reachable component was swept
    } else if (region.kind() == Region::Kind::FullLattice) {
        r.status = TTStatus::WindowTooSmall;
    } else {
        r.status = TTStatus::Censored;
    }
    return r;
}

}  // namespace

TravelTimeResult travel_time(const WeightField& field, const Point& src, const Point& dst,
                             const Region& region, const Region& window) {
    BoxIndex box = BoxIndex::from_region(window);
    if (!region.contains(dst)) {
        TravelTimeResult r;
        r.status = TTStatus::Unreachable;
        return r;
    }
    if (!box.contains(dst)) {
        TravelTimeResult r;
        r.status = region.kind() == Region::Kind::FullLattice ? TTStatus::WindowTooSmall
                                                              : TTStatus::Censored;
        return r;
    }
    auto is_dst = [&dst](const Point& p) { return p == dst; };
    SweepOutcome s = sweep(field, {src}, region, window, is_dst);
    if (!s.hit) return finish_unreached(s, region);

    TravelTimeResult r;
    r.status = TTStatus::Reached;
    r.value = s.dist[static_cast<size_t>(*s.hit)];
    r.settled_up_to = s.settled_up_to;
    r.boundary_touched = s.boundary_touched;
    r.hit_point = dst;
    long long exit_sum = box.exit_steps(src) + box.exit_steps(dst);
    r.bound = classify_bound(s, r.value, exit_sum, field.spec().min_weight());
    return r;
}

TravelTimeResult travel_time_set(const WeightField& field, const std::vector<Point>& sources,
                                 const std::function<bool(const Point&)>& target,
                                 const Region& region, const Region& window) {
    if (!target) throw PathError("travel_time_set needs a target predicate");
    SweepOutcome s = sweep(field, sources, region, window, target);
    if (!s.hit) return finish_unreached(s, region);

    TravelTimeResult r;
    r.status = TTStatus::Reached;
    r.value = s.dist[static_cast<size_t>(*s.hit)];
    r.settled_up_to = s.settled_up_to;
    r.boundary_touched = s.boundary_touched;
    r.hit_point = s.box.point(*s.hit);
    // a path through the outside still has to reach the boundary layer first,
    // so only the boundary certificate applies (the target may extend beyond
    // the window, leaving no return leg to count steps for)
    long long min_exit = std::numeric_limits<long long>::max();
    for (const Point& p : sources) min_exit = std::min(min_exit, s.box.exit_steps(p));
    r.bound = classify_bound(s, r.value, min_exit, field.spec().min_weight());
    return r;
}

BallResult grow_ball(const WeightField& field, const Point& origin, double t_max,
                     const Region& window) {
    if (t_max < 0) throw PathError("grow_ball needs t_max >= 0");
    Region region = Region::full_lattice(origin.dim);
    SweepOutcome s = sweep(field, {origin}, region, window, nullptr, t_max);
    BallResult out;
    out.boundary_touched = s.boundary_touched;
    out.exact = !s.boundary_touched || s.min_boundary_dist > t_max;
    std::vector<std::pair<double, long long>> settled;
    settled.reserve(s.settled_count);
    for (size_t i = 0; i < s.done.size(); ++i)
        if (s.done[i]) settled.emplace_back(s.dist[i], static_cast<long long>(i));
    std::sort(settled.begin(), settled.end());
    out.events.reserve(settled.size());
    for (auto& [d, idx] : settled) out.events.emplace_back(s.box.point(idx), d);
    return out;
}

GeodesicResult geodesic(const WeightField& field, const Point& src, const Point& dst,
                        const Region& region, const Region& window) {
    auto is_dst = [&dst](const Point& p) { return p == dst; };
    SweepOutcome s = sweep(field, {src}, region, window, is_dst);
    if (!s.hit) throw PathError("geodesic: destination not reached");
    GeodesicResult out;
    out.value = s.dist[static_cast<size_t>(*s.hit)];
    BoxIndex box = s.box;
    long long exit_sum = box.exit_steps(src) + box.exit_steps(dst);
    out.bound = classify_bound(s, out.value, exit_sum, field.spec().min_weight());
    long long cur = *s.hit;
    while (s.parent[static_cast<size_t>(cur)] >= 0) {
        long long par = s.parent[static_cast<size_t>(cur)];
        out.edges.push_back(edge_between(box.point(par), box.point(cur)));
        cur = par;
    }
    std::reverse(out.edges.begin(), out.edges.end());
    return out;
}

}  // namespace fpp
