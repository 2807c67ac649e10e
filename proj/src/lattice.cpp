#include "fpp/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <queue>
#include <unordered_set>

namespace fpp {

void require_dim(int dim) {
    if (dim < 2 || dim > kMaxDim)
        throw LatticeError("dimension must be 2, 3 or 4, got " + std::to_string(dim));
}

Point make_point(std::initializer_list<int> coords) {
    Point p;
    p.dim = static_cast<int>(coords.size());
    require_dim(p.dim);
    int i = 0;
    for (int v : coords) p.c[static_cast<size_t>(i++)] = v;
    return p;
}

Point zero_point(int dim) {
    require_dim(dim);
    Point p;
    p.dim = dim;
    return p;
}

Point unit_point(int dim, int axis) {
    Point p = zero_point(dim);
    if (axis < 0 || axis >= dim) throw LatticeError("axis out of range");
    p[axis] = 1;
    return p;
}

Point add(const Point& a, const Point& b) {
    Point r = a;
    for (int i = 0; i < a.dim; ++i) r[i] += b[i];
    return r;
}

Point sub(const Point& a, const Point& b) {
    Point r = a;
    for (int i = 0; i < a.dim; ++i) r[i] -= b[i];
    return r;
}

Point scale(const Point& a, int k) {
    Point r = a;
    for (int i = 0; i < a.dim; ++i) r[i] *= k;
    return r;
}

long long l1_norm(const Point& a) {
    long long s = 0;
    for (int i = 0; i < a.dim; ++i) s += std::llabs(a[i]);
    return s;
}

long long l2_norm_sq(const Point& a) {
    long long s = 0;
    for (int i = 0; i < a.dim; ++i) s += static_cast<long long>(a[i]) * a[i];
    return s;
}

double l2_norm(const Point& a) { return std::sqrt(static_cast<double>(l2_norm_sq(a))); }

long long linf_norm(const Point& a) {
    long long m = 0;
    for (int i = 0; i < a.dim; ++i) m = std::max(m, static_cast<long long>(std::llabs(a[i])));
    return m;
}

long long l1_dist(const Point& a, const Point& b) { return l1_norm(sub(a, b)); }
long long linf_dist(const Point& a, const Point& b) { return linf_norm(sub(a, b)); }

long long coord_sum(const Point& a) {
    long long s = 0;
    for (int i = 0; i < a.dim; ++i) s += a[i];
    return s;
}

std::string to_string(const Point& a) {
    std::string s = "(";
    for (int i = 0; i < a.dim; ++i) {
        if (i) s += ",";
        s += std::to_string(a[i]);
    }
    return s + ")";
}

std::vector<Point> neighbors(const Point& a) {
    std::vector<Point> out;
    out.reserve(static_cast<size_t>(2 * a.dim));
    for (int i = 0; i < a.dim; ++i) {
        Point p = a;
        p[i] += 1;
        out.push_back(p);
        p[i] -= 2;
        out.push_back(p);
    }
    return out;
}

std::vector<Point> star_neighbors(const Point& a) {
    std::vector<Point> out;
    int n = 1;
    for (int i = 0; i < a.dim; ++i) n *= 3;
    out.reserve(static_cast<size_t>(n - 1));
    std::array<int, kMaxDim> off{0, 0, 0, 0};
    // odometer over {-1,0,1}^dim, skipping the all-zero offset
    for (int code = 0; code < n; ++code) {
        int v = code;
        bool all_zero = true;
        for (int i = 0; i < a.dim; ++i) {
            off[static_cast<size_t>(i)] = v % 3 - 1;
            v /= 3;
            if (off[static_cast<size_t>(i)] != 0) all_zero = false;
        }
        if (all_zero) continue;
        Point p = a;
        for (int i = 0; i < a.dim; ++i) p[i] += off[static_cast<size_t>(i)];
        out.push_back(p);
    }
    return out;
}

static uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

size_t PointHash::operator()(const Point& a) const {
    uint64_t h = static_cast<uint64_t>(a.dim);
    for (int i = 0; i < a.dim; ++i)
        h = mix64(h ^ static_cast<uint64_t>(static_cast<int64_t>(a[i])));
    return static_cast<size_t>(h);
}

Point Edge::other() const {
    Point p = base;
    p[axis] += 1;
    return p;
}

Edge edge_between(const Point& a, const Point& b) {
    if (a.dim != b.dim) throw LatticeError("edge endpoints of mixed dimension");
    int axis = -1;
    for (int i = 0; i < a.dim; ++i) {
        if (a[i] == b[i]) continue;
        if (std::abs(a[i] - b[i]) != 1 || axis != -1)
            throw LatticeError("points are not lattice neighbors: " + to_string(a) + " " +
                               to_string(b));
        axis = i;
    }
    if (axis == -1) throw LatticeError("degenerate edge at " + to_string(a));
    Edge e;
    e.base = (a[axis] < b[axis]) ? a : b;
    e.axis = axis;
    return e;
}

std::vector<Edge> incident_edges(const Point& a) {
    std::vector<Edge> out;
    out.reserve(static_cast<size_t>(2 * a.dim));
    for (int i = 0; i < a.dim; ++i) {
        Edge up;
        up.base = a;
        up.axis = i;
        out.push_back(up);
        Edge down;
        down.base = a;
        down.base[i] -= 1;
        down.axis = i;
        out.push_back(down);
    }
    return out;
}

size_t EdgeHash::operator()(const Edge& e) const {
    return static_cast<size_t>(
        mix64(PointHash{}(e.base) ^ (0x51afd54ed1c4bf1dULL + static_cast<uint64_t>(e.axis))));
}

Rat64 Rat64::from_double(double v, long long max_den) {
    if (v < 0) throw LatticeError("radius must be nonnegative");
    // continued fraction expansion of v, truncated at max_den
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double x = v;
    for (int it = 0; it < 64; ++it) {
        double fa = std::floor(x);
        long long a = static_cast<long long>(fa);
        long long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        double frac = x - fa;
        if (frac < 1e-12) break;
        x = 1.0 / frac;
    }
    if (q1 == 0) return Rat64{static_cast<long long>(std::llround(v)), 1};
    return Rat64{p1, q1};
}

bool within_cylinder(const Point& y, const Point& z, const Rat64& r) {
    // dist(y, R z)^2 = (|y|^2 |z|^2 - (y.z)^2) / |z|^2, all integer upstairs
    long long yy = l2_norm_sq(y), zz = l2_norm_sq(z);
    long long yz = 0;
    for (int i = 0; i < y.dim; ++i) yz += static_cast<long long>(y[i]) * z[i];
    __int128 lhs = (static_cast<__int128>(yy) * zz - static_cast<__int128>(yz) * yz) *
                   r.den * r.den;
    __int128 rhs = static_cast<__int128>(r.num) * r.num * zz;
    return lhs <= rhs;
}

void require_direction(const Point& z) {
    require_dim(z.dim);
    if (l1_norm(z) == 0) throw LatticeError("cylinder direction must be nonzero");
}

Region Region::full_lattice(int dim) {
    require_dim(dim);
    Region g;
    g.kind_ = Kind::FullLattice;
    g.dim_ = dim;
    return g;
}

Region Region::box(const Point& center, int radius) {
    require_dim(center.dim);
    if (radius < 0) throw LatticeError("box radius must be nonnegative");
    Region g;
    g.kind_ = Kind::Box;
    g.dim_ = center.dim;
    g.center_ = center;
    g.box_radius_ = radius;
    return g;
}

Region Region::cylinder(const Point& z, Rat64 r) {
    require_direction(z);
    if (r.num < 0 || r.den <= 0) throw LatticeError("bad cylinder radius");
    Region g;
    g.kind_ = Kind::Cylinder;
    g.dim_ = z.dim;
    g.dir_ = z;
    for (int i = 0; i < z.dim; ++i) {
        if (z[i] < 0) {
            g.flip_[static_cast<size_t>(i)] = -1;
            g.dir_[i] = -z[i];
        }
    }
    g.rad_ = r;
    return g;
}

Region Region::cylinder_slab(const Point& z, Rat64 r, long long lo_level, long long hi_level) {
    Region g = cylinder(z, r);
    if (lo_level > hi_level) throw LatticeError("slab levels inverted");
    g.has_slab_ = true;
    g.slab_lo_ = lo_level;
    g.slab_hi_ = hi_level;
    return g;
}

Region Region::mu_ball_complement(double threshold, std::function<double(const Point&)> mu,
                                  int dim) {
    require_dim(dim);
    if (!mu) throw LatticeError("mu ball complement needs a mu function");
    Region g;
    g.kind_ = Kind::MuBallComplement;
    g.dim_ = dim;
    g.mu_threshold_ = threshold;
    g.mu_ = std::move(mu);
    return g;
}

bool Region::contains(const Point& y) const {
    if (y.dim != dim_) return false;
    switch (kind_) {
        case Kind::FullLattice:
            return true;
        case Kind::Box:
            return linf_dist(y, center_) <= box_radius_;
        case Kind::Cylinder: {
            Point t = y;
            for (int i = 0; i < dim_; ++i) t[i] *= flip_[static_cast<size_t>(i)];
            if (has_slab_) {
                long long s = coord_sum(t);
                if (s < slab_lo_ || s > slab_hi_) return false;
            }
            return within_cylinder(t, dir_, rad_);
        }
        case Kind::MuBallComplement:
            return mu_(y) > mu_threshold_;
    }
    return false;
}

std::vector<Point> cylinder_level_set(const Point& z, Rat64 r, long long m) {
    require_direction(z);
    for (int i = 0; i < z.dim; ++i)
        if (z[i] < 0) throw LatticeError("level sets expect a first-orthant direction");
    const long long nz = l1_norm(z);
    const double rd = r.to_double();
    // every member lies within Euclidean distance r*(1+sqrt(d)) of the axis
    // point (m/|z|_1) * z; enumerate an l-infinity box around it, fixing the
    // last coordinate from the level constraint
    const double axis_scale = static_cast<double>(m) / static_cast<double>(nz);
    const long long reach =
        static_cast<long long>(std::ceil(rd * (1.0 + std::sqrt(static_cast<double>(z.dim))))) + 1;
    Point anchor = zero_point(z.dim);
    for (int i = 0; i < z.dim; ++i)
        anchor[i] = static_cast<int>(std::llround(axis_scale * z[i]));

    std::vector<Point> out;
    const int d = z.dim;
    std::array<long long, kMaxDim> lo{}, hi{};
    for (int i = 0; i < d; ++i) {
        lo[static_cast<size_t>(i)] = anchor[i] - reach;
        hi[static_cast<size_t>(i)] = anchor[i] + reach;
    }
    Point p = zero_point(d);
    // iterate free coordinates 0..d-2, solve coordinate d-1 from the level
    std::array<long long, kMaxDim> cur{};
    for (int i = 0; i < d - 1; ++i) cur[static_cast<size_t>(i)] = lo[static_cast<size_t>(i)];
    while (true) {
        long long partial = 0;
        for (int i = 0; i < d - 1; ++i) partial += cur[static_cast<size_t>(i)];
        long long last = m - partial;
        if (last >= lo[static_cast<size_t>(d - 1)] && last <= hi[static_cast<size_t>(d - 1)]) {
            for (int i = 0; i < d - 1; ++i) p[i] = static_cast<int>(cur[static_cast<size_t>(i)]);
            p[d - 1] = static_cast<int>(last);
            if (within_cylinder(p, z, r)) out.push_back(p);
        }
        int k = d - 2;
        while (k >= 0) {
            if (++cur[static_cast<size_t>(k)] <= hi[static_cast<size_t>(k)]) break;
            cur[static_cast<size_t>(k)] = lo[static_cast<size_t>(k)];
            --k;
        }
        if (k < 0) break;
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Point> cross_section(const Point& z, Rat64 r, long long n) {
    return cylinder_level_set(z, r, n * l1_norm(z));
}

std::vector<Edge> cross_edges(const Point& z, Rat64 r, long long n) {
    const long long level = n * l1_norm(z);
    std::vector<Point> heads = cylinder_level_set(z, r, level);
    std::vector<Edge> out;
    for (const Point& h : heads) {
        for (int i = 0; i < z.dim; ++i) {
            Point tail = h;
            tail[i] -= 1;
            if (within_cylinder(tail, z, r)) {
                Edge e;
                e.base = tail;  // tail has the smaller coordinate along axis i
                e.axis = i;
                out.push_back(e);
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) {
        if (a.base != b.base) return a.base < b.base;
        return a.axis < b.axis;
    });
    return out;
}

bool cross_band_connected(const Point& z, Rat64 r) {
    std::vector<Edge> band = cross_edges(z, r, 0);
    if (band.empty()) return false;
    std::unordered_set<Point, PointHash> verts;
    for (const Edge& e : band) {
        verts.insert(e.base);
        verts.insert(e.other());
    }
    std::unordered_set<Point, PointHash> seen;
    std::queue<Point> q;
    q.push(band.front().base);
    seen.insert(band.front().base);
    while (!q.empty()) {
        Point p = q.front();
        q.pop();
        for (const Edge& e : band) {
            Point o;
            if (e.base == p)
                o = e.other();
            else if (e.other() == p)
                o = e.base;
            else
                continue;
            if (seen.insert(o).second) q.push(o);
        }
    }
    return seen.size() == verts.size();
}

}  // namespace fpp
