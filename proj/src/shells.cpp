#include "fpp/shells.hpp"

#include <algorithm>
#include <queue>
#include <unordered_set>

#include "json.hpp"

namespace fpp {

ShellWindow::ShellWindow(const WeightField& field, double tbar, const Region& window)
    : box_(BoxIndex::from_region(window)), tbar_(tbar) {
    if (field.dim() != box_.dim) throw ShellError("field/window dimension mismatch");
    const size_t vol = static_cast<size_t>(box_.volume);
    black_.assign(vol, 0);
    for (long long i = 0; i < box_.volume; ++i) {
        Point p = box_.point(i);
        for (const Edge& e : incident_edges(p)) {
            if (field.weight(e) > tbar_) {
                black_[static_cast<size_t>(i)] = 1;
                break;
            }
        }
    }
    // label white clusters (l1 adjacency) and mark the ones hitting the face
    label_.assign(vol, -1);
    int next = 0;
    std::vector<long long> stack;
    for (long long i = 0; i < box_.volume; ++i) {
        if (black_[static_cast<size_t>(i)] || label_[static_cast<size_t>(i)] >= 0) continue;
        int lab = next++;
        bool hits = false;
        stack.assign(1, i);
        label_[static_cast<size_t>(i)] = lab;
        while (!stack.empty()) {
            long long cur = stack.back();
            stack.pop_back();
            Point p = box_.point(cur);
            if (on_face(p)) hits = true;
            for (const Point& q : neighbors(p)) {
                if (!box_.contains(q)) continue;
                size_t qi = static_cast<size_t>(box_.index(q));
                if (black_[qi] || label_[qi] >= 0) continue;
                label_[qi] = lab;
                stack.push_back(static_cast<long long>(qi));
            }
        }
        label_boundary_.push_back(hits ? 1 : 0);
    }
}

bool ShellWindow::on_face(const Point& p) const {
    for (int i = 0; i < box_.dim; ++i) {
        int off = p[i] - box_.lo[i];
        if (off == 0 || off == box_.ext[static_cast<size_t>(i)] - 1) return true;
    }
    return false;
}

int ShellWindow::white_label(const Point& p) const {
    return label_[static_cast<size_t>(box_.index(p))];
}

bool ShellWindow::label_reaches_boundary(int label) const {
    return label >= 0 && label_boundary_[static_cast<size_t>(label)] != 0;
}

bool ShellWindow::white_witness(const Point& p) const {
    for (const Point& q : neighbors(p)) {
        if (!box_.contains(q)) continue;
        if (!black(q) && label_reaches_boundary(white_label(q))) return true;
    }
    return false;
}

StarCluster black_star_cluster(const ShellWindow& w, const std::vector<Point>& seed_box) {
    StarCluster out;
    std::unordered_set<Point, PointHash> in_cluster(seed_box.begin(), seed_box.end());
    std::vector<Point> stack;
    for (const Point& a : seed_box) {
        for (const Point& y : star_neighbors(a)) {
            if (in_cluster.count(y)) continue;
            if (!w.contains(y)) {
                out.clipped = true;
                continue;
            }
            if (w.black(y)) {
                in_cluster.insert(y);
                stack.push_back(y);
            }
        }
    }
    while (!stack.empty()) {
        Point p = stack.back();
        stack.pop_back();
        if (w.on_face(p)) out.clipped = true;
        for (const Point& q : star_neighbors(p)) {
            if (in_cluster.count(q)) continue;
            if (!w.contains(q)) {
                out.clipped = true;
                continue;
            }
            if (w.black(q)) {
                in_cluster.insert(q);
                stack.push_back(q);
            }
        }
    }
    out.cells.assign(in_cluster.begin(), in_cluster.end());
    std::sort(out.cells.begin(), out.cells.end());
    return out;
}

namespace {

// cells (l1-)reachable from the window face without entering `blocked`
std::vector<uint8_t> flood_from_face(const ShellWindow& w,
                                     const std::unordered_set<Point, PointHash>& blocked) {
    const BoxIndex& box = w.box();
    std::vector<uint8_t> reach(static_cast<size_t>(box.volume), 0);
    std::vector<long long> stack;
    for (long long i = 0; i < box.volume; ++i) {
        Point p = box.point(i);
        if (!w.on_face(p) || blocked.count(p)) continue;
        reach[static_cast<size_t>(i)] = 1;
        stack.push_back(i);
    }
    while (!stack.empty()) {
        long long cur = stack.back();
        stack.pop_back();
        for (const Point& q : neighbors(box.point(cur))) {
            if (!box.contains(q) || blocked.count(q)) continue;
            size_t qi = static_cast<size_t>(box.index(q));
            if (reach[qi]) continue;
            reach[qi] = 1;
            stack.push_back(static_cast<long long>(qi));
        }
    }
    return reach;
}

}  // namespace

std::vector<Point> exterior_boundary(const ShellWindow& w, const std::vector<Point>& cluster) {
    std::unordered_set<Point, PointHash> in_c(cluster.begin(), cluster.end());
    std::vector<uint8_t> outside = flood_from_face(w, in_c);
    const BoxIndex& box = w.box();
    std::vector<Point> out;
    std::unordered_set<Point, PointHash> seen;
    for (const Point& c : cluster) {
        for (const Point& q : star_neighbors(c)) {
            if (!box.contains(q) || in_c.count(q)) continue;
            if (!outside[static_cast<size_t>(box.index(q))]) continue;
            if (seen.insert(q).second) out.push_back(q);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

long long set_diameter_l1(const std::vector<Point>& cells) {
    long long best = 0;
    for (size_t i = 0; i < cells.size(); ++i)
        for (size_t j = i + 1; j < cells.size(); ++j)
            best = std::max(best, l1_dist(cells[i], cells[j]));
    return best;
}

Shell build_shell(const ShellWindow& w, const Point& z, bool require_complete) {
    if (!w.contains(z)) throw ShellError("shell center outside window");
    Shell sh;
    sh.center = z;
    bool clipped = false;

    // smallest box D_n(z) holding a witness of an infinite white cluster
    int n = -1;
    const BoxIndex& box = w.box();
    for (int k = 0;; ++k) {
        bool box_inside = true;
        bool found = false;
        // scan the l-infinity sphere of radius k around z (all of D_k for k=0)
        std::vector<Point> ring;
        if (k == 0) {
            ring.push_back(z);
        } else {
            Region dk = Region::box(z, k);
            Region dk1 = Region::box(z, k - 1);
            // enumerate D_k \ D_{k-1}
            Point lo = z, hi = z;
            for (int i = 0; i < z.dim; ++i) {
                lo[i] -= k;
                hi[i] += k;
            }
            std::array<int, kMaxDim> cur{};
            for (int i = 0; i < z.dim; ++i) cur[static_cast<size_t>(i)] = lo[i];
            while (true) {
                Point p = z;
                for (int i = 0; i < z.dim; ++i) p[i] = cur[static_cast<size_t>(i)];
                if (dk.contains(p) && !dk1.contains(p)) ring.push_back(p);
                int ax = z.dim - 1;
                while (ax >= 0) {
                    if (++cur[static_cast<size_t>(ax)] <= hi[ax]) break;
                    cur[static_cast<size_t>(ax)] = lo[ax];
                    --ax;
                }
                if (ax < 0) break;
            }
        }
        for (const Point& y : ring) {
            if (!box.contains(y)) {
                box_inside = false;
                continue;
            }
            if (w.white_witness(y)) {
                found = true;
                break;
            }
        }
        if (found) {
            n = k;
            break;
        }
        if (!box_inside) throw ShellError("no-white-witness");
    }
    sh.n_of_z = n;

    // blocking cluster: D_n(z) plus attached black star-clusters
    std::vector<Point> seed;
    {
        Point lo = z, hi = z;
        for (int i = 0; i < z.dim; ++i) {
            lo[i] -= n;
            hi[i] += n;
        }
        std::array<int, kMaxDim> cur{};
        for (int i = 0; i < z.dim; ++i) cur[static_cast<size_t>(i)] = lo[i];
        while (true) {
            Point p = z;
            for (int i = 0; i < z.dim; ++i) p[i] = cur[static_cast<size_t>(i)];
            if (!box.contains(p)) throw ShellError("no-white-witness");
            seed.push_back(p);
            int ax = z.dim - 1;
            while (ax >= 0) {
                if (++cur[static_cast<size_t>(ax)] <= hi[ax]) break;
                cur[static_cast<size_t>(ax)] = lo[ax];
                --ax;
            }
            if (ax < 0) break;
        }
    }
    StarCluster cb = black_star_cluster(w, seed);
    clipped = clipped || cb.clipped;

    // its exterior boundary, then the white thickening inside
    sh.s_set = exterior_boundary(w, cb.cells);

    std::unordered_set<Point, PointHash> in_s(sh.s_set.begin(), sh.s_set.end());
    std::vector<uint8_t> outside = flood_from_face(w, in_s);
    std::unordered_set<Point, PointHash> in_delta = in_s;
    std::vector<Point> stack(sh.s_set.begin(), sh.s_set.end());
    while (!stack.empty()) {
        Point p = stack.back();
        stack.pop_back();
        for (const Point& q : neighbors(p)) {
            if (!box.contains(q) || in_delta.count(q)) continue;
            if (outside[static_cast<size_t>(box.index(q))]) continue;  // interior cells only
            if (w.black(q)) continue;
            in_delta.insert(q);
            stack.push_back(q);
        }
    }
    sh.delta.assign(in_delta.begin(), in_delta.end());
    std::sort(sh.delta.begin(), sh.delta.end());
    sh.diameter = set_diameter_l1(sh.delta);
    sh.status = clipped ? Shell::Status::Indeterminate : Shell::Status::Complete;
    if (require_complete && clipped) throw ShellError("window-overflow");
    return sh;
}

bool shell_connected(const Shell& sh) {
    if (sh.delta.empty()) return false;
    std::unordered_set<Point, PointHash> in_d(sh.delta.begin(), sh.delta.end());
    std::unordered_set<Point, PointHash> seen;
    std::vector<Point> stack{sh.delta.front()};
    seen.insert(sh.delta.front());
    while (!stack.empty()) {
        Point p = stack.back();
        stack.pop_back();
        for (const Point& q : neighbors(p)) {
            if (!in_d.count(q) || seen.count(q)) continue;
            seen.insert(q);
            stack.push_back(q);
        }
    }
    return seen.size() == sh.delta.size();
}

bool shell_separates(const ShellWindow& w, const Shell& sh) {
    std::unordered_set<Point, PointHash> in_d(sh.delta.begin(), sh.delta.end());
    if (in_d.count(sh.center)) return true;  // on the barrier itself
    std::unordered_set<Point, PointHash> seen{sh.center};
    std::vector<Point> stack{sh.center};
    while (!stack.empty()) {
        Point p = stack.back();
        stack.pop_back();
        if (w.on_face(p)) return false;  // escaped to the boundary
        for (const Point& q : neighbors(p)) {
            if (!w.contains(q) || in_d.count(q) || seen.count(q)) continue;
            seen.insert(q);
            stack.push_back(q);
        }
    }
    return true;
}

bool shell_touches_infinite_white(const ShellWindow& w, const Shell& sh) {
    for (const Point& p : sh.delta)
        if (!w.black(p) && w.label_reaches_boundary(w.white_label(p))) return true;
    return false;
}

bool shell_pair_separation(const ShellWindow& w, const Shell& a, const Shell& b) {
    std::unordered_set<Point, PointHash> in_a(a.delta.begin(), a.delta.end());
    bool disjoint = true;
    for (const Point& p : b.delta)
        if (in_a.count(p)) {
            disjoint = false;
            break;
        }
    if (!disjoint) return true;  // overlap is the allowed alternative

    // disjoint: every path between the centers must cross both shells, i.e.
    // flooding from either center around its own shell never reaches the other
    auto blocked_reach = [&w](const Point& from, const std::vector<Point>& barrier,
                              const Point& target) {
        std::unordered_set<Point, PointHash> in_s(barrier.begin(), barrier.end());
        if (in_s.count(from)) return false;
        std::unordered_set<Point, PointHash> seen{from};
        std::vector<Point> stack{from};
        while (!stack.empty()) {
            Point p = stack.back();
            stack.pop_back();
            if (p == target) return true;
            for (const Point& q : neighbors(p)) {
                if (!w.contains(q) || in_s.count(q) || seen.count(q)) continue;
                seen.insert(q);
                stack.push_back(q);
            }
        }
        return false;
    };
    if (blocked_reach(a.center, a.delta, b.center)) return false;
    if (blocked_reach(b.center, b.delta, a.center)) return false;
    return true;
}

ShellComparison shell_comparison(const WeightField& field, const Region& window, double tbar,
                                 const Shell& a, const Shell& b) {
    ShellComparison out;
    Region full = Region::full_lattice(field.dim());
    std::unordered_set<Point, PointHash> in_b(b.delta.begin(), b.delta.end());
    auto in_b_pred = [&in_b](const Point& p) { return in_b.count(p) > 0; };
    auto eq_b = [&b](const Point& p) { return p == b.center; };
    auto in_a_pred = [&a](const Point& p) {
        return std::binary_search(a.delta.begin(), a.delta.end(), p);
    };

    TravelTimeResult t_yz = travel_time(field, a.center, b.center, full, window);
    TravelTimeResult t_dd = travel_time_set(field, a.delta, in_b_pred, full, window);
    TravelTimeResult t_ya = travel_time_set(field, {a.center}, in_a_pred, full, window);
    TravelTimeResult t_bz = travel_time_set(field, b.delta, eq_b, full, window);
    out.all_exact = t_yz.reached_exact() && t_dd.reached_exact() && t_ya.reached_exact() &&
                    t_bz.reached_exact();
    out.t_yz = t_yz.value;
    out.t_shells = t_dd.value;
    out.t_y_to_shell = t_ya.value;
    out.t_shell_to_z = t_bz.value;
    // shells are white, so each of the 2*dim edges at a shell vertex costs at
    // most tbar; a walk across both shells pays at most this slack
    out.slack = 2.0 * field.dim() * tbar *
                (static_cast<double>(a.delta.size()) + static_cast<double>(b.delta.size()));
    double diff = out.t_yz - out.t_shells;
    out.holds = diff >= -1e-12 && diff <= out.t_y_to_shell + out.t_shell_to_z + out.slack + 1e-9;
    return out;
}

std::string shell_to_json(const Shell& sh) {
    nlohmann::json j;
    j["center"] = std::vector<int>(sh.center.c.begin(), sh.center.c.begin() + sh.center.dim);
    j["n_of_z"] = sh.n_of_z;
    auto pts = [](const std::vector<Point>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const Point& p : v)
            arr.push_back(std::vector<int>(p.c.begin(), p.c.begin() + p.dim));
        return arr;
    };
    j["s"] = pts(sh.s_set);
    j["delta"] = pts(sh.delta);
    j["diameter"] = sh.diameter;
    j["status"] = sh.status == Shell::Status::Complete ? "complete" : "indeterminate";
    return j.dump();
}

Shell shell_from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        Shell sh;
        std::vector<int> c = j.at("center").get<std::vector<int>>();
        sh.center.dim = static_cast<int>(c.size());
        for (size_t i = 0; i < c.size(); ++i) sh.center.c[i] = c[i];
        sh.n_of_z = j.at("n_of_z").get<int>();
        auto pts = [&](const char* key) {
            std::vector<Point> v;
            for (const auto& arr : j.at(key)) {
                std::vector<int> pc = arr.get<std::vector<int>>();
                Point p;
                p.dim = static_cast<int>(pc.size());
                for (size_t i = 0; i < pc.size(); ++i) p.c[i] = pc[i];
                v.push_back(p);
            }
            return v;
        };
        sh.s_set = pts("s");
        sh.delta = pts("delta");
        sh.diameter = j.at("diameter").get<long long>();
        sh.status = j.at("status").get<std::string>() == "complete" ? Shell::Status::Complete
                                                                    : Shell::Status::Indeterminate;
        return sh;
    } catch (const nlohmann::json::exception& e) {
        throw ShellError(std::string("bad shell record: ") + e.what());
    }
}

}  // namespace fpp
