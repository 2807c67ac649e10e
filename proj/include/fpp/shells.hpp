#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpp/paths.hpp"
#include "fpp/weights.hpp"

// Blocking shells built from a two-color coarse graining of the weight field:
// a vertex is black when at least one incident edge exceeds the threshold
// tbar, white otherwise.  Around a center z we grow the black star-cluster of
// a small box, take its exterior boundary (all white), and thicken it by the
// white points inside that are white-connected to it.  The result is a finite
// connected white barrier separating z from infinity, every crossing of which
// costs at most 2d*tbar per visited vertex.
//
// "Infinite white cluster" is approximated by "white cluster reaching the
// window boundary"; a shell is complete only modulo that approximation, and
// every flood that could have been clipped by the window flips the status to
// indeterminate instead.

namespace fpp {

// coloring of a box window with white-cluster labels
class ShellWindow {
  public:
    ShellWindow(const WeightField& field, double tbar, const Region& window);

    int dim() const { return box_.dim; }
    double tbar() const { return tbar_; }
    const BoxIndex& box() const { return box_; }
    bool black(const Point& p) const { return black_[static_cast<size_t>(box_.index(p))] != 0; }
    bool contains(const Point& p) const { return box_.contains(p); }
    bool on_face(const Point& p) const;  // outermost layer of the window
    // white-cluster label, -1 for black cells
    int white_label(const Point& p) const;
    // label reaches the window boundary (the infinite-cluster surrogate)
    bool label_reaches_boundary(int label) const;
    // true when a white cell adjacent (l1) to p lies in a boundary-reaching
    // white cluster; this witnesses an infinite white component at p
    bool white_witness(const Point& p) const;

  private:
    BoxIndex box_;
    double tbar_;
    std::vector<uint8_t> black_;
    std::vector<int> label_;
    std::vector<uint8_t> label_boundary_;
};

struct StarCluster {
    std::vector<Point> cells;   // A together with attached black star-clusters
    bool clipped = false;       // some flood touched the window face
};
// C(A, black): A plus every black cell star-connected to the l-infinity
// 1-neighborhood of A through black cells
StarCluster black_star_cluster(const ShellWindow& w, const std::vector<Point>& seed_box);

// exterior boundary of a finite cell set: cells outside C, l-infinity
// adjacent to C, with a lattice path to the window face avoiding C
std::vector<Point> exterior_boundary(const ShellWindow& w, const std::vector<Point>& cluster);

struct Shell {
    Point center{};
    int n_of_z = 0;                // smallest box radius with a white witness
    std::vector<Point> s_set;      // exterior boundary of the blocking cluster
    std::vector<Point> delta;      // s_set plus attached interior white cells
    long long diameter = 0;        // max l1 distance between two delta cells
    enum class Status { Complete, Indeterminate } status = Status::Indeterminate;
};

long long set_diameter_l1(const std::vector<Point>& cells);

// grows the shell around z; throws ShellError("no-white-witness") when no
// boundary-reaching white cluster is visible near z, and
// ShellError("window-overflow") when require_complete is set and a flood was
// clipped (otherwise the shell comes back indeterminate)
Shell build_shell(const ShellWindow& w, const Point& z, bool require_complete = false);

// structural checks used by tests and the experiment harness; each returns
// true when the property held exactly on this realization
bool shell_connected(const Shell& sh);
bool shell_separates(const ShellWindow& w, const Shell& sh);
bool shell_touches_infinite_white(const ShellWindow& w, const Shell& sh);
// disjoint shells block every path between their centers; overlapping shells
// are the allowed alternative
bool shell_pair_separation(const ShellWindow& w, const Shell& a, const Shell& b);

// travel-time comparison between y and z and between their shells:
//   0 <= T(y,z) - T(delta_y, delta_z)
//     <= T(y, delta_y) + T(delta_z, z) + 2*dim*tbar*(|delta_y| + |delta_z|)
struct ShellComparison {
    double t_yz = 0;
    double t_shells = 0;
    double t_y_to_shell = 0;
    double t_shell_to_z = 0;
    double slack = 0;       // the 2*dim*tbar*(...) term
    bool all_exact = false; // every sweep certified window-exact
    bool holds = false;
};
ShellComparison shell_comparison(const WeightField& field, const Region& window, double tbar,
                                 const Shell& a, const Shell& b);

// JSON round-trip for shell records
std::string shell_to_json(const Shell& sh);
Shell shell_from_json(const std::string& text);

struct ShellError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fpp
