#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "fpp/lattice.hpp"
#include "fpp/weights.hpp"

// Travel times by best-first expansion (Dijkstra) over the implicit weighted
// lattice.  Every search runs inside a finite l-infinity box window; results
// carry certificates saying whether the window could have clipped a better
// path.  Tie-breaking is lexicographic on (distance, point, parent point), so
// a sweep is a pure function of (field, sources, region, window).

namespace fpp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// dense index space of a window box; row-major over coordinates, so index
// order coincides with lexicographic point order
struct BoxIndex {
    Point lo;                        // smallest corner
    std::array<int, kMaxDim> ext{};  // side lengths
    int dim = 2;
    long long volume = 0;

    static BoxIndex from_region(const Region& window);
    bool contains(const Point& p) const;
    long long index(const Point& p) const;  // caller guarantees contains(p)
    Point point(long long idx) const;
    // fewest lattice steps from p to any point outside the box
    long long exit_steps(const Point& p) const;
};

struct SweepOutcome {
    BoxIndex box;
    std::vector<double> dist;     // settled distance, kInf if never settled
    std::vector<int> parent;      // settled predecessor index, -1 for sources
    std::vector<uint8_t> done;
    double settled_up_to = 0;     // largest settled distance
    size_t settled_count = 0;
    // a boundary point here means: settled, with a region-neighbor outside
    // the window (an escape route a larger window would have explored)
    bool boundary_touched = false;
    double min_boundary_dist = kInf;
    std::optional<long long> hit = std::nullopt;  // first settled target index

    bool settled(const Point& p) const;
    double dist_at(const Point& p) const;  // kInf when not settled
};

// expand from sources (distance 0) until the target predicate is settled,
// t_max is exceeded, or the reachable part of region∩window is exhausted;
// no target and t_max = inf means full exhaustion
SweepOutcome sweep(const WeightField& field, const std::vector<Point>& sources,
                   const Region& region, const Region& window,
                   const std::function<bool(const Point&)>& target = nullptr,
                   double t_max = kInf);

enum class TTStatus { Reached, Unreachable, WindowTooSmall, Censored };
enum class TTBound { Exact, UpperBound };

struct TravelTimeResult {
    TTStatus status = TTStatus::Censored;
    double value = kInf;
    TTBound bound = TTBound::UpperBound;
    double settled_up_to = 0;
    bool boundary_touched = false;
    Point hit_point{};  // the settled target, when status == Reached

    bool reached_exact() const { return status == TTStatus::Reached && bound == TTBound::Exact; }
};

TravelTimeResult travel_time(const WeightField& field, const Point& src, const Point& dst,
                             const Region& region, const Region& window);

TravelTimeResult travel_time_set(const WeightField& field, const std::vector<Point>& sources,
                                 const std::function<bool(const Point&)>& target,
                                 const Region& region, const Region& window);

// ball of the metric: all points settled with distance <= t_max, in settle
// order; exact iff every escape route through the window boundary costs more
// than t_max
struct BallResult {
    std::vector<std::pair<Point, double>> events;
    bool exact = false;
    bool boundary_touched = false;
};
BallResult grow_ball(const WeightField& field, const Point& origin, double t_max,
                     const Region& window);

// minimizing path as a list of canonical edges, src side first; requires the
// travel time to be Reached (throws PathError otherwise)
struct GeodesicResult {
    std::vector<Edge> edges;
    double value = 0;
    TTBound bound = TTBound::UpperBound;
};
GeodesicResult geodesic(const WeightField& field, const Point& src, const Point& dst,
                        const Region& region, const Region& window);

struct PathError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fpp
