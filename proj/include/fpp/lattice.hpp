#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

// Integer lattice geometry for Z^d, d in {2,3,4}: points, nearest-neighbor
// edges in canonical form, regions used to restrict path searches, and the
// cross-section machinery for cylinders around a lattice direction.

namespace fpp {

inline constexpr int kMaxDim = 4;

struct Point {
    std::array<int, kMaxDim> c{0, 0, 0, 0};  // coords beyond dim stay zero
    int dim = 2;

    int operator[](int i) const { return c[static_cast<size_t>(i)]; }
    int& operator[](int i) { return c[static_cast<size_t>(i)]; }

    bool operator==(const Point& o) const { return dim == o.dim && c == o.c; }
    bool operator!=(const Point& o) const { return !(*this == o); }
    // lexicographic; used for deterministic tie-breaking
    bool operator<(const Point& o) const { return c < o.c; }
};

Point make_point(std::initializer_list<int> coords);
Point zero_point(int dim);
Point unit_point(int dim, int axis);  // e_axis

Point add(const Point& a, const Point& b);
Point sub(const Point& a, const Point& b);
Point scale(const Point& a, int k);

long long l1_norm(const Point& a);            // sum |a_i|
long long l2_norm_sq(const Point& a);         // sum a_i^2, exact
double l2_norm(const Point& a);
long long linf_norm(const Point& a);
long long l1_dist(const Point& a, const Point& b);
long long linf_dist(const Point& a, const Point& b);
long long coord_sum(const Point& a);          // hyperplane level Sum_i a_i

std::string to_string(const Point& a);

// 2d nearest neighbors (l1 distance 1)
std::vector<Point> neighbors(const Point& a);
// 3^d - 1 star neighbors (l-infinity distance 1)
std::vector<Point> star_neighbors(const Point& a);

struct PointHash {
    size_t operator()(const Point& a) const;
};

// Nearest-neighbor edge in canonical form: the edge {base, base + e_axis}.
// base is the endpoint with the smaller coordinate along axis, so each
// geometric edge has exactly one representation.
struct Edge {
    Point base;
    int axis = 0;

    Point other() const;
    bool operator==(const Edge& o) const { return axis == o.axis && base == o.base; }
};

// canonicalize the edge between two adjacent points; throws if not adjacent
Edge edge_between(const Point& a, const Point& b);
// the 2*dim edges incident to a vertex, canonical
std::vector<Edge> incident_edges(const Point& a);

struct EdgeHash {
    size_t operator()(const Edge& e) const;
};

// Exact rational used for cylinder radii so that membership tests compare
// squared distances in integer arithmetic, with no boundary flicker.
struct Rat64 {
    long long num = 0;
    long long den = 1;  // > 0

    static Rat64 from_int(long long v) { return Rat64{v, 1}; }
    // nearest rational with denominator <= max_den (continued fractions);
    // exact for decimal-ish inputs like 2.5 or 0.1
    static Rat64 from_double(double v, long long max_den = 1000000);
    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// squared Euclidean point-to-line distance test:
//   dist(y, R*z)^2 <= r^2  iff  (|y|^2|z|^2 - (y.z)^2) * den^2 <= num^2 * |z|^2
bool within_cylinder(const Point& y, const Point& z, const Rat64& r);

class Region {
  public:
    enum class Kind { FullLattice, Box, Cylinder, MuBallComplement };

    static Region full_lattice(int dim);
    // l-infinity box, side 2*radius + 1
    static Region box(const Point& center, int radius);
    // all y with Euclidean distance <= r from the line R*z; the direction is
    // canonicalized into the first orthant (per-axis sign flips) and membership
    // queries flip the same way
    static Region cylinder(const Point& z, Rat64 r);
    // cylinder intersected with coordinate-sum levels [lo_level, hi_level]
    // (levels measured in the canonicalized orientation)
    static Region cylinder_slab(const Point& z, Rat64 r, long long lo_level, long long hi_level);
    // all y with mu(y) > threshold
    static Region mu_ball_complement(double threshold, std::function<double(const Point&)> mu,
                                     int dim);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    bool contains(const Point& y) const;

    const Point& box_center() const { return center_; }
    int box_radius() const { return box_radius_; }
    const Point& direction() const { return dir_; }  // canonicalized
    Rat64 radius() const { return rad_; }
    bool has_slab() const { return has_slab_; }
    long long slab_lo() const { return slab_lo_; }
    long long slab_hi() const { return slab_hi_; }

  private:
    Region() = default;
    Kind kind_ = Kind::FullLattice;
    int dim_ = 2;
    Point center_{};                 // Box
    int box_radius_ = 0;             // Box
    Point dir_{};                    // Cylinder, first-orthant canonical
    std::array<int, kMaxDim> flip_{1, 1, 1, 1};  // Cylinder sign flips
    Rat64 rad_{};                    // Cylinder
    bool has_slab_ = false;
    long long slab_lo_ = 0, slab_hi_ = 0;
    double mu_threshold_ = 0;        // MuBallComplement
    std::function<double(const Point&)> mu_;
};

// Cross-section and crossing-edge sets of the cylinder C(z,r).
//
// level_set(z,r,m):  { y in C(z,r) : coord_sum(y) = m }, finite because the
//                    hyperplane cuts the cylinder transversally (z is in the
//                    first orthant after canonicalization, so coord_sum
//                    strictly increases along the axis direction).
// cross_section(z,r,n):  level_set at m = n * l1_norm(z).
// cross_edges(z,r,n): edges with tail in C at level n*l1_norm(z) - 1 and head
//                     in C at level n*l1_norm(z); every cylinder path crossing
//                     that level uses one of them.
std::vector<Point> cylinder_level_set(const Point& z, Rat64 r, long long m);
std::vector<Point> cross_section(const Point& z, Rat64 r, long long n);
std::vector<Edge> cross_edges(const Point& z, Rat64 r, long long n);

// true when the bipartite graph of cross_edges(z,r,0) is connected; the
// regeneration upper bound glues segment paths through this band
bool cross_band_connected(const Point& z, Rat64 r);

struct LatticeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

void require_dim(int dim);  // throws LatticeError unless dim in {2,3,4}
// first-orthant, nonzero, dim-consistent direction check for cylinders
void require_direction(const Point& z);

}  // namespace fpp
