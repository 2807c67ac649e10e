#include "fpp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "fpp/deviations.hpp"
#include "fpp/regen.hpp"
#include "fpp/shells.hpp"

namespace fpp {

using nlohmann::json;
using Row = std::vector<std::string>;

namespace {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

std::string fmt_u64(uint64_t v) { return std::to_string(v); }
std::string fmt_i64(long long v) { return std::to_string(v); }
std::string fmt_flag(bool b) { return b ? "true" : "false"; }

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw RunnerError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---- csv (RFC 4180: CRLF records, quoted cells may hold commas/quotes) ----

std::string csv_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    return out + "\"";
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<Row>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw RunnerError("cannot write " + path);
    auto line = [&f](const Row& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) f << ',';
            f << csv_cell(cells[i]);
        }
        f << "\r\n";
    };
    line(columns);
    for (const Row& r : rows) line(r);
}

std::vector<Row> parse_csv(const std::string& text) {
    std::vector<Row> records;
    Row row;
    std::string cell;
    bool quoted = false, pending = false;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    i += 2;
                    continue;
                }
                quoted = false;
                ++i;
                continue;
            }
            cell += c;
            ++i;
            continue;
        }
        if (c == '"' && cell.empty()) {
            quoted = true;
            pending = true;
            ++i;
            continue;
        }
        if (c == ',') {
            row.push_back(cell);
            cell.clear();
            pending = true;
            ++i;
            continue;
        }
        if (c == '\r' || c == '\n') {
            if (pending || !cell.empty() || !row.empty()) {
                row.push_back(cell);
                records.push_back(row);
                row.clear();
                cell.clear();
                pending = false;
            }
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') i += 2;
            else ++i;
            continue;
        }
        cell += c;
        pending = true;
        ++i;
    }
    if (quoted) throw RunnerError("results.csv: unterminated quoted cell");
    if (pending || !cell.empty() || !row.empty()) {
        row.push_back(cell);
        records.push_back(row);
    }
    return records;
}

// ---- replica-indexed thread pool ----
// Work lands in slots indexed by replica; folds happen after the join in
// index order, which removes any dependence on the thread count.

void for_each_replica(int replicas, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, replicas));
    if (threads <= 1) {
        for (int r = 0; r < replicas; ++r) fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_lock;
    std::exception_ptr err;
    auto work = [&]() {
        for (;;) {
            if (failed.load()) return;
            int r = next.fetch_add(1);
            if (r >= replicas) return;
            try {
                fn(r);
            } catch (...) {
                std::lock_guard<std::mutex> hold(err_lock);
                if (!err) err = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace

// ---- blocks ----

Block Block::of(CountBlock b) {
    Block x;
    x.kind = Kind::Count;
    x.count = b;
    return x;
}

Block Block::of(MeanBlock b) {
    Block x;
    x.kind = Kind::Mean;
    x.mean = std::move(b);
    return x;
}

Block Block::of(SampleBlock b) {
    Block x;
    x.kind = Kind::Samples;
    x.samples = std::move(b);
    return x;
}

void Block::merge(const Block& o) {
    if (kind != o.kind) throw RunnerError("merge: block kind mismatch");
    switch (kind) {
        case Kind::Count: count.merge(o.count); break;
        case Kind::Mean: mean.merge(o.mean); break;
        case Kind::Samples: samples.merge(o.samples); break;
    }
}

long long Block::size() const {
    switch (kind) {
        case Kind::Count: return count.n;
        case Kind::Mean: return mean.n;
        case Kind::Samples: return static_cast<long long>(samples.sorted.size());
    }
    return 0;
}

namespace {

json block_json(const Block& b) {
    json j;
    switch (b.kind) {
        case Block::Kind::Count:
            j["type"] = "count";
            j["n"] = b.count.n;
            j["k"] = b.count.k;
            break;
        case Block::Kind::Mean:
            j["type"] = "mean";
            j["n"] = b.mean.n;
            j["sum"] = b.mean.sum.to_hex();
            j["sum_sq"] = b.mean.sum_sq.to_hex();
            break;
        case Block::Kind::Samples:
            j["type"] = "samples";
            j["values"] = b.samples.sorted;
            break;
    }
    return j;
}

Block block_from_json(const json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "count") {
        CountBlock c;
        c.n = j.at("n").get<long long>();
        c.k = j.at("k").get<long long>();
        return Block::of(c);
    }
    if (type == "mean") {
        MeanBlock m;
        m.n = j.at("n").get<long long>();
        m.sum = ExactSum::from_hex(j.at("sum").get<std::string>());
        m.sum_sq = ExactSum::from_hex(j.at("sum_sq").get<std::string>());
        return Block::of(std::move(m));
    }
    if (type == "samples") {
        SampleBlock s;
        s.sorted = j.at("values").get<std::vector<double>>();
        if (!std::is_sorted(s.sorted.begin(), s.sorted.end()))
            throw RunnerError("summary.json: samples block not sorted");
        return Block::of(std::move(s));
    }
    throw RunnerError("summary.json: unknown block type " + type);
}

// ---- reference norm ----

bool experiment_needs_mu(Experiment e) {
    switch (e) {
        case Experiment::Tails:
        case Experiment::DeviationSets:
        case Experiment::HreSum:
        case Experiment::RadialSum:
        case Experiment::Lp:
        case Experiment::PointToShape: return true;
        default: return false;
    }
}

const char* estimator_label(MuEstimator e) {
    switch (e) {
        case MuEstimator::Auto: return "auto";
        case MuEstimator::Mean: return "mean";
        case MuEstimator::Median: return "median";
    }
    return "auto";
}

json mu_ref_provenance(const MuRef& mu, const ExperimentConfig& cfg) {
    json j;
    if (mu.is_exact()) {
        j["mode"] = "exact";
        j["unit_cost"] = mu.exact_unit();
        return j;
    }
    j["mode"] = "fan";
    j["fan_n"] = cfg.mu_ref.fan_n;
    j["n_est"] = cfg.mu_ref.n_est;
    j["replicas"] = cfg.mu_ref.fan_replicas;
    j["estimator"] = estimator_label(cfg.mu_ref.estimator);
    json entries = json::array();
    for (const auto& e : mu.fan()) {
        json je;
        json unit = json::array();
        for (int i = 0; i < mu.dim(); ++i) unit.push_back(e.unit[static_cast<size_t>(i)]);
        je["unit"] = unit;
        je["per_unit"] = e.per_unit;
        je["ci"] = e.per_unit_ci;
        entries.push_back(je);
    }
    j["entries"] = entries;
    return j;
}

}  // namespace

MuRef make_mu_ref(const ExperimentConfig& cfg) {
    const MuRefConfig& m = cfg.mu_ref;
    if (m.mode == MuRefMode::Exact) return MuRef::exact(m.unit_cost, cfg.dimension);
    if (m.mode == MuRefMode::Auto && cfg.dist.kind == DistKind::Deterministic)
        return MuRef::exact(cfg.dist.value, cfg.dimension);
    return build_mu_fan(cfg.dist, split_seed(cfg.master_seed, 0, 11), cfg.dimension, m.fan_n,
                        m.n_est, m.fan_replicas, m.estimator);
}

// ---- per-experiment runners ----

namespace {

void run_mu(const ExperimentConfig& cfg, int threads, RunArtifacts& art) {
    const auto& grid = cfg.mu_n_grid;
    MuEstimator used = resolve_estimator(cfg.mu_estimator, cfg.dist, cfg.dimension);

    struct Slot {
        std::vector<double> per_n;
        bool clipped = false;
    };
    std::vector<Slot> slots(static_cast<size_t>(cfg.replicas));
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), 0), cfg.dimension);
        slots[rep].per_n = mu_replica_values(field, cfg.mu_z, grid, 6, slots[rep].clipped);
    });

    art.columns = {"master_seed", "replica"};
    for (long long n : grid) art.columns.push_back("t_over_n_" + std::to_string(n));
    art.columns.push_back("clipped");

    std::vector<MeanBlock> means(grid.size());
    std::vector<SampleBlock> samples(grid.size());
    CountBlock clipped;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        Row row = {fmt_u64(cfg.master_seed), fmt_i64(rep)};
        for (size_t i = 0; i < grid.size(); ++i) {
            double v = slots[rep].per_n[i];
            row.push_back(fmt_g17(v));
            if (used == MuEstimator::Mean) means[i].add(v);
            else samples[i].add(v);
        }
        row.push_back(fmt_flag(slots[rep].clipped));
        clipped.add(slots[rep].clipped);
        art.rows.push_back(std::move(row));
    }
    for (size_t i = 0; i < grid.size(); ++i) {
        std::string name = "per_n_" + std::to_string(grid[i]);
        if (used == MuEstimator::Mean) art.blocks.emplace(name, Block::of(means[i]));
        else art.blocks.emplace(name, Block::of(samples[i]));
    }
    art.blocks.emplace("clipped", Block::of(clipped));
    art.censored = clipped.k;
    art.censor_total = clipped.n;
}

void run_tails(const ExperimentConfig& cfg, int threads, const MuRef& mu, RunArtifacts& art) {
    const Point& z = cfg.tails_z;
    require_mu_certain(mu, z, cfg.tails_eps);
    double muz = mu.value(z);
    Region window = segment_window(z, 1, 10);
    Region region = Region::full_lattice(cfg.dimension);
    Point origin = zero_point(cfg.dimension);

    struct Slot {
        double t = 0;
        bool exact = false;
    };
    std::vector<Slot> slots(static_cast<size_t>(cfg.replicas));
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), 0), cfg.dimension);
        TravelTimeResult r = travel_time(field, origin, z, region, window);
        if (r.status != TTStatus::Reached) throw RunnerError("tails: target not reached");
        slots[rep] = {r.value, r.reached_exact()};
    });

    art.columns = {"master_seed", "replica", "t", "deviation", "exact"};
    std::vector<CountBlock> counts(cfg.tails_x_grid.size());
    CountBlock censored;
    MeanBlock t_mean;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        double dev = cfg.tails_above ? slots[rep].t - muz : muz - slots[rep].t;
        for (size_t i = 0; i < counts.size(); ++i)
            counts[i].add(dev > cfg.tails_eps * cfg.tails_x_grid[i]);
        censored.add(!slots[rep].exact);
        t_mean.add(slots[rep].t);
        art.rows.push_back({fmt_u64(cfg.master_seed), fmt_i64(rep), fmt_g17(slots[rep].t),
                            fmt_g17(dev), fmt_flag(slots[rep].exact)});
    }
    for (size_t i = 0; i < counts.size(); ++i)
        art.blocks.emplace("count_x_" + std::to_string(i), Block::of(counts[i]));
    art.blocks.emplace("t", Block::of(std::move(t_mean)));
    art.blocks.emplace("censored", Block::of(censored));
    art.censored = censored.k;
    art.censor_total = censored.n;
}

void run_shells(const ExperimentConfig& cfg, int threads, RunArtifacts& art) {
    double tb = cfg.dist.tbar(cfg.shells_delta);
    Region window = Region::box(zero_point(cfg.dimension), static_cast<int>(cfg.window_radius));

    struct Slot {
        bool built = false, complete = false;
        int n_of_z = 0;
        size_t s_size = 0, delta_size = 0;
        long long diameter = 0;
        bool p_conn = false, p_sep = false, p_white = false;
        bool pair_attempted = false, pair_built = false, pair_sep = false;
        bool ineq_holds = false, ineq_exact = false;
    };
    std::vector<Slot> slots(static_cast<size_t>(cfg.replicas));
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        Slot& s = slots[rep];
        WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), 0), cfg.dimension);
        ShellWindow w(field, tb, window);
        try {
            Shell sh = build_shell(w, cfg.shells_z);
            s.built = true;
            s.complete = sh.status == Shell::Status::Complete;
            s.n_of_z = sh.n_of_z;
            s.s_size = sh.s_set.size();
            s.delta_size = sh.delta.size();
            s.diameter = sh.diameter;
            if (s.complete) {
                s.p_conn = shell_connected(sh);
                s.p_sep = shell_separates(w, sh);
                s.p_white = shell_touches_infinite_white(w, sh);
            }
        } catch (const ShellError&) {
            s.built = false;
        }
        if (rep < cfg.shells_pair_count) {
            s.pair_attempted = true;
            try {
                Shell a = build_shell(w, cfg.shells_pair_a);
                Shell b = build_shell(w, cfg.shells_pair_b);
                if (a.status == Shell::Status::Complete && b.status == Shell::Status::Complete) {
                    s.pair_built = true;
                    s.pair_sep = shell_pair_separation(w, a, b);
                    ShellComparison c = shell_comparison(field, window, tb, a, b);
                    s.ineq_holds = c.holds;
                    s.ineq_exact = c.all_exact;
                }
            } catch (const ShellError&) {
                s.pair_built = false;
            }
        }
    });

    art.columns = {"master_seed", "replica",    "complete",       "n_of_z",
                   "shell_cells", "thick_cells", "diameter",       "connected",
                   "separates",   "infinite_white", "pair_built", "pair_separation",
                   "ineq_holds",  "ineq_exact"};
    CountBlock complete, p_conn, p_sep, p_white, pair_built, pair_sep, ineq_holds, ineq_exact;
    SampleBlock diameters, n_of_z;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        const Slot& s = slots[rep];
        complete.add(s.complete);
        Row row = {fmt_u64(cfg.master_seed), fmt_i64(rep), fmt_flag(s.complete)};
        if (s.built) {
            row.push_back(fmt_i64(s.n_of_z));
            row.push_back(fmt_i64(static_cast<long long>(s.s_size)));
            row.push_back(fmt_i64(static_cast<long long>(s.delta_size)));
            row.push_back(fmt_i64(s.diameter));
        } else {
            row.insert(row.end(), {"", "", "", ""});
        }
        if (s.complete) {
            p_conn.add(s.p_conn);
            p_sep.add(s.p_sep);
            p_white.add(s.p_white);
            diameters.add(double(s.diameter));
            n_of_z.add(double(s.n_of_z));
            row.push_back(fmt_flag(s.p_conn));
            row.push_back(fmt_flag(s.p_sep));
            row.push_back(fmt_flag(s.p_white));
        } else {
            row.insert(row.end(), {"", "", ""});
        }
        if (s.pair_attempted) {
            pair_built.add(s.pair_built);
            row.push_back(fmt_flag(s.pair_built));
            if (s.pair_built) {
                pair_sep.add(s.pair_sep);
                ineq_holds.add(s.ineq_holds);
                ineq_exact.add(s.ineq_exact);
                row.push_back(fmt_flag(s.pair_sep));
                row.push_back(fmt_flag(s.ineq_holds));
                row.push_back(fmt_flag(s.ineq_exact));
            } else {
                row.insert(row.end(), {"", "", ""});
            }
        } else {
            row.insert(row.end(), {"", "", "", ""});
        }
        art.rows.push_back(std::move(row));
    }
    art.blocks.emplace("complete", Block::of(complete));
    art.blocks.emplace("prop_connected", Block::of(p_conn));
    art.blocks.emplace("prop_separates", Block::of(p_sep));
    art.blocks.emplace("prop_infinite_white", Block::of(p_white));
    art.blocks.emplace("pair_built", Block::of(pair_built));
    art.blocks.emplace("pair_separation", Block::of(pair_sep));
    art.blocks.emplace("ineq_holds", Block::of(ineq_holds));
    art.blocks.emplace("ineq_exact", Block::of(ineq_exact));
    art.blocks.emplace("diameters", Block::of(std::move(diameters)));
    art.blocks.emplace("n_of_z", Block::of(std::move(n_of_z)));
    art.censored = complete.n - complete.k;
    art.censor_total = complete.n;
}

void run_regen(const ExperimentConfig& cfg, int threads, RunArtifacts& art) {
    double tb = cfg.dist.quantile(cfg.regen_tbar_quantile);
    std::vector<RegenTrace> traces(static_cast<size_t>(cfg.replicas));
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), 0), cfg.dimension);
        traces[rep] = scan_regenerations(field, cfg.regen_z, cfg.regen_r, tb, cfg.regen_m_max,
                                         cfg.regen_segments, cfg.regen_cylinder_time);
    });

    art.columns = {"master_seed", "replica",  "regens",      "rho_last",
                   "sum_segments", "t_c",     "t_c_level",   "sandwich_lo",
                   "sandwich_hi",  "sandwich_ok", "t_c_exact"};
    CountBlock events, sandwich_ok, tc_exact;
    MeanBlock gaps, segs, tc_per_level, e0;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        const RegenTrace& tr = traces[rep];
        events.n += tr.m_max;
        events.k += static_cast<long long>(tr.rho.size());
        long long prev = 0;
        for (long long level : tr.rho) {
            gaps.add(double(level - prev));
            prev = level;
        }
        for (double t : tr.segment_times) segs.add(t);
        e0.add(double(tr.e0_size));

        Row row = {fmt_u64(cfg.master_seed), fmt_i64(rep),
                   fmt_i64(static_cast<long long>(tr.rho.size())),
                   tr.rho.empty() ? "" : fmt_i64(tr.rho.back())};
        double seg_sum = 0;
        for (double t : tr.segment_times) seg_sum += t;
        row.push_back(tr.segment_times.empty() ? "" : fmt_g17(seg_sum));
        if (tr.t_c.has_value()) {
            long long k = static_cast<long long>(tr.rho.size());
            double lower = seg_sum;
            double upper = seg_sum + tb * double(tr.e0_size) * double(k - 1);
            bool ok = lower <= *tr.t_c && *tr.t_c <= upper;
            sandwich_ok.add(ok);
            tc_exact.add(tr.t_c_exact);
            tc_per_level.add(*tr.t_c / double(tr.t_c_level));
            row.push_back(fmt_g17(*tr.t_c));
            row.push_back(fmt_i64(tr.t_c_level));
            row.push_back(fmt_g17(lower));
            row.push_back(fmt_g17(upper));
            row.push_back(fmt_flag(ok));
            row.push_back(fmt_flag(tr.t_c_exact));
        } else {
            row.insert(row.end(), {"", "", "", "", "", ""});
        }
        art.rows.push_back(std::move(row));
    }
    art.blocks.emplace("events", Block::of(events));
    art.blocks.emplace("gaps", Block::of(std::move(gaps)));
    art.blocks.emplace("e0_size", Block::of(std::move(e0)));
    if (cfg.regen_segments) art.blocks.emplace("segments", Block::of(std::move(segs)));
    if (cfg.regen_cylinder_time) {
        art.blocks.emplace("tc_per_level", Block::of(std::move(tc_per_level)));
        art.blocks.emplace("sandwich_ok", Block::of(sandwich_ok));
        art.blocks.emplace("tc_exact", Block::of(tc_exact));
    }
    art.censored = tc_exact.n - tc_exact.k;
    art.censor_total = tc_exact.n;
}

void run_deviation_sets(const ExperimentConfig& cfg, int threads, const MuRef& mu,
                        RunArtifacts& art) {
    struct Slot {
        std::vector<DeviationReport> reports;
    };
    std::vector<Slot> slots(static_cast<size_t>(cfg.replicas));
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), 0), cfg.dimension);
        for (long long radius : cfg.dev_radii)
            slots[rep].reports.push_back(deviation_sets(field, cfg.dev_eps, mu, radius));
    });

    art.columns = {"master_seed", "replica", "radius",  "z_count", "sup_norm",
                   "intervals",   "t_measure", "t_sup", "censored", "inexact_members"};
    std::map<long long, MeanBlock> z_count, t_measure, t_sup;
    std::map<long long, CountBlock> nonempty;
    std::map<long long, SampleBlock> sup_norm;
    CountBlock censored, inexact_any;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        for (size_t ri = 0; ri < cfg.dev_radii.size(); ++ri) {
            long long radius = cfg.dev_radii[ri];
            const DeviationReport& r = slots[rep].reports[ri];
            z_count[radius].add(double(r.z_members.size()));
            t_measure[radius].add(r.t_measure);
            t_sup[radius].add(r.t_sup);
            nonempty[radius].add(!r.z_members.empty());
            sup_norm[radius].add(double(r.sup_member_norm));
            censored.add(r.censored);
            inexact_any.add(r.inexact_members > 0);
            art.rows.push_back({fmt_u64(cfg.master_seed), fmt_i64(rep), fmt_i64(radius),
                                fmt_i64(static_cast<long long>(r.z_members.size())),
                                fmt_i64(r.sup_member_norm),
                                fmt_i64(static_cast<long long>(r.intervals.size())),
                                fmt_g17(r.t_measure), fmt_g17(r.t_sup), fmt_flag(r.censored),
                                fmt_i64(static_cast<long long>(r.inexact_members))});
        }
    }
    for (long long radius : cfg.dev_radii) {
        std::string suffix = "_r" + std::to_string(radius);
        art.blocks.emplace("z_count" + suffix, Block::of(std::move(z_count[radius])));
        art.blocks.emplace("t_measure" + suffix, Block::of(std::move(t_measure[radius])));
        art.blocks.emplace("t_sup" + suffix, Block::of(std::move(t_sup[radius])));
        art.blocks.emplace("nonempty" + suffix, Block::of(nonempty[radius]));
        art.blocks.emplace("sup_norm" + suffix, Block::of(std::move(sup_norm[radius])));
    }
    art.blocks.emplace("censored", Block::of(censored));
    art.blocks.emplace("inexact_any", Block::of(inexact_any));
    art.censored = censored.k;
    art.censor_total = censored.n;
}

void run_hre_sum(const ExperimentConfig& cfg, int threads, const MuRef& mu, RunArtifacts& art) {
    hre_mu_gate(mu, cfg.hre_eps, cfg.hre_radii.back());
    struct Slot {
        std::vector<double> sums;
        size_t inexact = 0;
    };
    std::vector<Slot> slots(static_cast<size_t>(cfg.replicas));
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), 0), cfg.dimension);
        slots[rep].sums = hre_replica_sums(field, cfg.hre_alpha, cfg.hre_eps, cfg.hre_radii, mu,
                                           &slots[rep].inexact);
    });

    art.columns = {"master_seed", "replica"};
    for (long long r : cfg.hre_radii) art.columns.push_back("sum_r" + std::to_string(r));
    art.columns.push_back("inexact_members");

    std::vector<MeanBlock> sums(cfg.hre_radii.size());
    CountBlock inexact_any;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        Row row = {fmt_u64(cfg.master_seed), fmt_i64(rep)};
        for (size_t k = 0; k < cfg.hre_radii.size(); ++k) {
            sums[k].add(slots[rep].sums[k]);
            row.push_back(fmt_g17(slots[rep].sums[k]));
        }
        inexact_any.add(slots[rep].inexact > 0);
        row.push_back(fmt_i64(static_cast<long long>(slots[rep].inexact)));
        art.rows.push_back(std::move(row));
    }
    for (size_t k = 0; k < cfg.hre_radii.size(); ++k)
        art.blocks.emplace("sum_r" + std::to_string(cfg.hre_radii[k]),
                           Block::of(std::move(sums[k])));
    art.blocks.emplace("inexact_any", Block::of(inexact_any));
    art.censored = inexact_any.k;
    art.censor_total = inexact_any.n;
}

void run_radial_sum(const ExperimentConfig& cfg, int threads, const MuRef& mu, RunArtifacts& art) {
    if (mu.uncertainty(cfg.radial_z) > cfg.radial_eps / 4.0)
        throw RunnerError("mu-too-uncertain: radial margin eps/4 exceeded");
    struct Slot {
        std::vector<double> sums;
        size_t inexact = 0;
    };
    std::vector<Slot> slots(static_cast<size_t>(cfg.replicas));
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), 0), cfg.dimension);
        slots[rep].sums = radial_replica_sums(field, cfg.radial_z, cfg.radial_alpha,
                                              cfg.radial_eps, cfg.radial_n_max, mu,
                                              &slots[rep].inexact);
    });

    art.columns = {"master_seed", "replica", "final_sum", "inexact_members"};
    std::vector<MeanBlock> sums(static_cast<size_t>(cfg.radial_n_max));
    CountBlock inexact_any;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        for (long long n = 1; n <= cfg.radial_n_max; ++n)
            sums[n - 1].add(slots[rep].sums[n - 1]);
        inexact_any.add(slots[rep].inexact > 0);
        art.rows.push_back({fmt_u64(cfg.master_seed), fmt_i64(rep),
                            fmt_g17(slots[rep].sums.back()),
                            fmt_i64(static_cast<long long>(slots[rep].inexact))});
    }
    for (long long n = 1; n <= cfg.radial_n_max; ++n)
        art.blocks.emplace("sum_n" + std::to_string(n), Block::of(std::move(sums[n - 1])));
    art.blocks.emplace("inexact_any", Block::of(inexact_any));
    art.censored = inexact_any.k;
    art.censor_total = inexact_any.n;
}

void run_lp(const ExperimentConfig& cfg, int threads, const MuRef& mu, RunArtifacts& art) {
    std::vector<Point> z_grid;
    for (long long n : cfg.lp_n_grid) z_grid.push_back(scale(cfg.lp_z, static_cast<int>(n)));

    struct Slot {
        std::vector<double> values;
        std::vector<uint8_t> exact;
    };
    std::vector<Slot> slots(static_cast<size_t>(cfg.replicas));
    Region region = Region::full_lattice(cfg.dimension);
    Point origin = zero_point(cfg.dimension);
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        Slot& s = slots[rep];
        for (size_t zi = 0; zi < z_grid.size(); ++zi) {
            const Point& z = z_grid[zi];
            WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), zi + 1),
                              cfg.dimension);
            TravelTimeResult r = travel_time(field, origin, z, region, segment_window(z, 1, 8));
            if (r.status != TTStatus::Reached) throw RunnerError("lp: target not reached");
            double muz = mu.value(z);
            s.values.push_back(
                std::pow(std::abs(r.value - muz) / double(l1_norm(z)), cfg.lp_p));
            s.exact.push_back(r.reached_exact() ? 1 : 0);
        }
    });

    art.columns = {"master_seed", "replica"};
    for (long long n : cfg.lp_n_grid) art.columns.push_back("err_p_n" + std::to_string(n));
    art.columns.push_back("all_exact");

    std::vector<MeanBlock> moments(z_grid.size());
    CountBlock censored;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        Row row = {fmt_u64(cfg.master_seed), fmt_i64(rep)};
        bool all_exact = true;
        for (size_t zi = 0; zi < z_grid.size(); ++zi) {
            moments[zi].add(slots[rep].values[zi]);
            row.push_back(fmt_g17(slots[rep].values[zi]));
            if (!slots[rep].exact[zi]) all_exact = false;
        }
        censored.add(!all_exact);
        row.push_back(fmt_flag(all_exact));
        art.rows.push_back(std::move(row));
    }
    for (size_t zi = 0; zi < z_grid.size(); ++zi)
        art.blocks.emplace("lp_n" + std::to_string(cfg.lp_n_grid[zi]),
                           Block::of(std::move(moments[zi])));
    art.blocks.emplace("censored", Block::of(censored));
    art.censored = censored.k;
    art.censor_total = censored.n;
}

void run_point_to_shape(const ExperimentConfig& cfg, int threads, const MuRef& mu,
                        RunArtifacts& art) {
    ShapeScratch scratch = shape_scratch(cfg.shape_n_grid, mu, cfg.dimension);
    std::vector<std::vector<ShapeSample>> slots(static_cast<size_t>(cfg.replicas));
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), 0), cfg.dimension);
        slots[rep] = shape_replica_ratios(field, scratch, cfg.shape_n_grid);
    });

    art.columns = {"master_seed", "replica"};
    for (long long n : cfg.shape_n_grid) art.columns.push_back("ratio_n" + std::to_string(n));
    art.columns.push_back("all_exact");

    std::vector<MeanBlock> ratios(cfg.shape_n_grid.size());
    CountBlock censored;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        Row row = {fmt_u64(cfg.master_seed), fmt_i64(rep)};
        bool all_exact = true;
        for (size_t gi = 0; gi < cfg.shape_n_grid.size(); ++gi) {
            ratios[gi].add(slots[rep][gi].ratio);
            row.push_back(fmt_g17(slots[rep][gi].ratio));
            if (!slots[rep][gi].exact) all_exact = false;
        }
        censored.add(!all_exact);
        row.push_back(fmt_flag(all_exact));
        art.rows.push_back(std::move(row));
    }
    for (size_t gi = 0; gi < cfg.shape_n_grid.size(); ++gi)
        art.blocks.emplace("ratio_n" + std::to_string(cfg.shape_n_grid[gi]),
                           Block::of(std::move(ratios[gi])));
    art.blocks.emplace("censored", Block::of(censored));
    art.censored = censored.k;
    art.censor_total = censored.n;
}

void run_tube_sweep(const ExperimentConfig& cfg, int /*threads*/, RunArtifacts& art) {
    // one coupled pass: every radius reuses the same per-replica fields, so
    // this experiment runs single-threaded by construction
    double tb = cfg.dist.quantile(cfg.tube_tbar_quantile);
    std::vector<TubeSweepRow> sweep_rows =
        tube_constant_sweep(cfg.dist, cfg.master_seed, cfg.tube_z, cfg.tube_radii, tb,
                            cfg.tube_n_levels, cfg.replicas);

    art.columns = {"master_seed", "replica", "radius", "t_over_n"};
    CountBlock monotone_ok, inexact;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        bool mono = true;
        for (size_t i = 0; i < sweep_rows.size(); ++i) {
            double v = sweep_rows[i].per_replica[static_cast<size_t>(rep)];
            if (i && v > sweep_rows[i - 1].per_replica[static_cast<size_t>(rep)]) mono = false;
            art.rows.push_back({fmt_u64(cfg.master_seed), fmt_i64(rep),
                                fmt_g17(sweep_rows[i].radius), fmt_g17(v)});
        }
        monotone_ok.add(mono);
    }
    for (size_t i = 0; i < sweep_rows.size(); ++i) {
        MeanBlock m;
        for (double v : sweep_rows[i].per_replica) m.add(v);
        art.blocks.emplace("tc_" + std::to_string(i), Block::of(std::move(m)));
        inexact.n += cfg.replicas;
        inexact.k += static_cast<long long>(sweep_rows[i].inexact);
    }
    art.blocks.emplace("monotone_ok", Block::of(monotone_ok));
    art.blocks.emplace("inexact", Block::of(inexact));
    art.censored = inexact.k;
    art.censor_total = inexact.n;
}

void run_y_records(const ExperimentConfig& cfg, int threads, RunArtifacts& art) {
    std::vector<YRecordReport> slots(static_cast<size_t>(cfg.replicas));
    for_each_replica(cfg.replicas, threads, [&](int rep) {
        WeightField field(cfg.dist, split_seed(cfg.master_seed, uint64_t(rep), 0), cfg.dimension);
        slots[rep] = y_record_scan(field, cfg.yrec_beta, cfg.window_radius);
    });

    art.columns = {"master_seed", "replica", "records", "sup_n"};
    CountBlock nonempty, censored;
    SampleBlock sup_n;
    MeanBlock record_count;
    for (int rep = 0; rep < cfg.replicas; ++rep) {
        const YRecordReport& r = slots[rep];
        nonempty.add(!r.records.empty());
        sup_n.add(double(r.sup_n));
        record_count.add(double(r.records.size()));
        censored.add(r.sup_n >= cfg.window_radius - 1);
        art.rows.push_back({fmt_u64(cfg.master_seed), fmt_i64(rep),
                            fmt_i64(static_cast<long long>(r.records.size())),
                            fmt_i64(r.sup_n)});
    }
    art.blocks.emplace("nonempty", Block::of(nonempty));
    art.blocks.emplace("sup_n", Block::of(std::move(sup_n)));
    art.blocks.emplace("record_count", Block::of(std::move(record_count)));
    art.blocks.emplace("boundary_records", Block::of(censored));
    art.censored = censored.k;
    art.censor_total = censored.n;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    RunArtifacts art;
    art.config = cfg;
    art.merged_seeds = {cfg.master_seed};

    std::optional<MuRef> mu;
    if (experiment_needs_mu(cfg.experiment)) {
        mu = make_mu_ref(cfg);
        art.mu_ref_by_seed[fmt_u64(cfg.master_seed)] = mu_ref_provenance(*mu, cfg).dump();
    }

    switch (cfg.experiment) {
        case Experiment::Mu: run_mu(cfg, threads, art); break;
        case Experiment::Tails: run_tails(cfg, threads, *mu, art); break;
        case Experiment::Shells: run_shells(cfg, threads, art); break;
        case Experiment::Regen: run_regen(cfg, threads, art); break;
        case Experiment::DeviationSets: run_deviation_sets(cfg, threads, *mu, art); break;
        case Experiment::HreSum: run_hre_sum(cfg, threads, *mu, art); break;
        case Experiment::RadialSum: run_radial_sum(cfg, threads, *mu, art); break;
        case Experiment::Lp: run_lp(cfg, threads, *mu, art); break;
        case Experiment::PointToShape: run_point_to_shape(cfg, threads, *mu, art); break;
        case Experiment::TubeSweep: run_tube_sweep(cfg, threads, art); break;
        case Experiment::YRecords: run_y_records(cfg, threads, art); break;
    }
    return art;
}

// ---- metrics ----

namespace {

const Block& need_block(const BlockMap& blocks, const std::string& name) {
    auto it = blocks.find(name);
    if (it == blocks.end()) throw RunnerError("missing block: " + name);
    return it->second;
}

const CountBlock& need_count(const BlockMap& blocks, const std::string& name) {
    const Block& b = need_block(blocks, name);
    if (b.kind != Block::Kind::Count) throw RunnerError("block " + name + " is not a count");
    return b.count;
}

const MeanBlock& need_mean(const BlockMap& blocks, const std::string& name) {
    const Block& b = need_block(blocks, name);
    if (b.kind != Block::Kind::Mean) throw RunnerError("block " + name + " is not a mean");
    return b.mean;
}

const SampleBlock& need_samples(const BlockMap& blocks, const std::string& name) {
    const Block& b = need_block(blocks, name);
    if (b.kind != Block::Kind::Samples) throw RunnerError("block " + name + " is not samples");
    return b.samples;
}

json count_json(const CountBlock& c) {
    json j;
    j["k"] = c.k;
    j["n"] = c.n;
    if (c.n > 0) {
        WilsonInterval w = c.wilson();
        j["p_hat"] = w.p_hat;
        j["wilson_lo"] = w.lo;
        j["wilson_hi"] = w.hi;
    }
    return j;
}

json mean_json(const MeanBlock& m) {
    json j;
    j["n"] = m.n;
    if (m.n > 0) {
        j["mean"] = m.mean();
        j["sd"] = m.sample_sd();
        j["ci"] = m.ci_half_width();
    }
    return j;
}

json samples_json(const SampleBlock& s) {
    json j;
    j["n"] = s.sorted.size();
    if (!s.sorted.empty()) {
        j["median"] = s.median();
        double lo = 0, hi = 0;
        s.median_ci(lo, hi);
        j["median_lo"] = lo;
        j["median_hi"] = hi;
        j["min"] = s.sorted.front();
        j["max"] = s.sorted.back();
    }
    return j;
}

json mu_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    MuEstimator used = resolve_estimator(cfg.mu_estimator, cfg.dist, cfg.dimension);
    json j;
    j["estimator"] = used == MuEstimator::Mean ? "mean" : "median";
    json per = json::array();
    double mu_hat = 0, ci = 0;
    for (long long n : cfg.mu_n_grid) {
        std::string name = "per_n_" + std::to_string(n);
        double v = 0, c = 0;
        if (used == MuEstimator::Mean) {
            const MeanBlock& m = need_mean(blocks, name);
            v = m.mean();
            c = m.ci_half_width();
        } else {
            const SampleBlock& s = need_samples(blocks, name);
            v = s.median();
            double lo = 0, hi = 0;
            s.median_ci(lo, hi);
            c = (hi - lo) / 2.0;
        }
        per.push_back({{"n", n}, {"value", v}, {"ci", c}});
        mu_hat = v;
        ci = c;
    }
    j["per_n"] = per;
    j["mu_hat"] = mu_hat;
    j["ci"] = ci;
    j["clipped"] = count_json(need_count(blocks, "clipped"));
    return j;
}

json tails_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    j["side"] = cfg.tails_above ? "above" : "below";
    json rows = json::array();
    std::vector<double> xs, ys;
    for (size_t i = 0; i < cfg.tails_x_grid.size(); ++i) {
        double x = cfg.tails_x_grid[i];
        const CountBlock& c = need_count(blocks, "count_x_" + std::to_string(i));
        json row = count_json(c);
        row["x"] = x;
        row["y_tail_c1"] = cfg.dist.y_survival(x, cfg.dimension);
        row["y_tail_c2"] = cfg.dist.y_survival(x / 2.0, cfg.dimension);
        row["y_tail_c4"] = cfg.dist.y_survival(x / 4.0, cfg.dimension);
        rows.push_back(row);
        if (c.k > 0 && c.n > 0) {
            xs.push_back(cfg.tails_above ? std::log(x) : x);
            ys.push_back(std::log(double(c.k) / double(c.n)));
        }
    }
    j["rows"] = rows;
    LinearFit fit = linear_fit(xs, ys);
    j["log_slope"] = {{"slope", fit.slope},
                      {"intercept", fit.intercept},
                      {"r2", fit.r2},
                      {"points", fit.points}};
    j["t"] = mean_json(need_mean(blocks, "t"));
    return j;
}

json shells_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    j["tbar"] = cfg.dist.tbar(cfg.shells_delta);
    j["complete"] = count_json(need_count(blocks, "complete"));
    j["properties"] = {{"connected", count_json(need_count(blocks, "prop_connected"))},
                       {"separates", count_json(need_count(blocks, "prop_separates"))},
                       {"infinite_white", count_json(need_count(blocks, "prop_infinite_white"))}};
    j["diameter"] = samples_json(need_samples(blocks, "diameters"));
    j["n_of_z"] = samples_json(need_samples(blocks, "n_of_z"));
    j["pairs"] = {{"built", count_json(need_count(blocks, "pair_built"))},
                  {"separation", count_json(need_count(blocks, "pair_separation"))},
                  {"inequality_holds", count_json(need_count(blocks, "ineq_holds"))},
                  {"inequality_exact", count_json(need_count(blocks, "ineq_exact"))}};
    return j;
}

json regen_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    j["tbar"] = cfg.dist.quantile(cfg.regen_tbar_quantile);
    const CountBlock& events = need_count(blocks, "events");
    j["p_hat"] = count_json(events);
    if (events.k > 0) j["inverse_p"] = double(events.n) / double(events.k);
    const MeanBlock& gaps = need_mean(blocks, "gaps");
    json g = mean_json(gaps);
    if (gaps.n > 0) g["se"] = gaps.sample_sd() / std::sqrt(double(gaps.n));
    j["gap"] = g;
    j["e0_size"] = mean_json(need_mean(blocks, "e0_size"));
    if (cfg.regen_segments) j["segment"] = mean_json(need_mean(blocks, "segments"));
    if (cfg.regen_cylinder_time) {
        j["tube_constant"] = mean_json(need_mean(blocks, "tc_per_level"));
        j["sandwich"] = count_json(need_count(blocks, "sandwich_ok"));
        j["tc_exact"] = count_json(need_count(blocks, "tc_exact"));
    }
    return j;
}

json deviation_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    j["eps"] = cfg.dev_eps;
    json rows = json::array();
    for (long long radius : cfg.dev_radii) {
        std::string suffix = "_r" + std::to_string(radius);
        json row;
        row["radius"] = radius;
        row["z_count"] = mean_json(need_mean(blocks, "z_count" + suffix));
        row["nonempty"] = count_json(need_count(blocks, "nonempty" + suffix));
        row["t_measure"] = mean_json(need_mean(blocks, "t_measure" + suffix));
        row["t_sup"] = mean_json(need_mean(blocks, "t_sup" + suffix));
        row["sup_norm"] = samples_json(need_samples(blocks, "sup_norm" + suffix));
        rows.push_back(row);
    }
    j["radii"] = rows;
    j["censored"] = count_json(need_count(blocks, "censored"));
    j["inexact_any"] = count_json(need_count(blocks, "inexact_any"));
    return j;
}

// increments between consecutive grid rows; the first cumulative value is not
// a window, so trends compare the first true window against the last
std::string trend_label(const std::vector<double>& increments, double threshold) {
    if (increments.size() < 2) return "unknown";
    double first = increments.front();
    double last = increments.back();
    if (first <= 0) return last <= 0 ? "converging" : "diverging";
    double ratio = last / first;
    if (ratio < threshold) return "converging";
    if (ratio > 1.0 / threshold) return "diverging";
    return "flat";
}

json hre_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    std::vector<double> comp = hre_comparison_sums(cfg.dist, cfg.dimension, cfg.hre_alpha,
                                                   cfg.hre_radii, cfg.hre_comparison_m);
    json rows = json::array();
    double prev = 0;
    std::vector<double> increments;
    for (size_t k = 0; k < cfg.hre_radii.size(); ++k) {
        const MeanBlock& m = need_mean(blocks, "sum_r" + std::to_string(cfg.hre_radii[k]));
        json row = mean_json(m);
        row["radius"] = cfg.hre_radii[k];
        double inc = m.mean() - prev;
        row["increment"] = inc;
        row["comparison"] = comp[k];
        prev = m.mean();
        if (k > 0) increments.push_back(inc);
        rows.push_back(row);
    }
    j["rows"] = rows;
    j["threshold"] = cfg.hre_ratio_threshold;
    j["trend"] = trend_label(increments, cfg.hre_ratio_threshold);
    if (increments.size() >= 2 && increments.front() > 0)
        j["increment_ratio"] = increments.back() / increments.front();
    j["inexact_any"] = count_json(need_count(blocks, "inexact_any"));
    return j;
}

json radial_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    std::vector<double> comp = radial_comparison_sums(cfg.dist, cfg.dimension, cfg.radial_alpha,
                                                      cfg.radial_n_max, cfg.radial_comparison_m);
    json rows = json::array();
    double prev = 0;
    std::vector<double> increments;
    for (long long n = 1; n <= cfg.radial_n_max; ++n) {
        const MeanBlock& m = need_mean(blocks, "sum_n" + std::to_string(n));
        json row = mean_json(m);
        row["n"] = n;
        double inc = m.mean() - prev;
        row["increment"] = inc;
        row["comparison"] = comp[static_cast<size_t>(n - 1)];
        prev = m.mean();
        increments.push_back(inc);  // every step is a width-one window
        rows.push_back(row);
    }
    j["rows"] = rows;
    // quarter averages damp the per-step noise of width-one windows
    size_t q = std::max<size_t>(1, increments.size() / 4);
    double first = 0, last = 0;
    for (size_t i = 0; i < q; ++i) first += increments[i];
    for (size_t i = increments.size() - q; i < increments.size(); ++i) last += increments[i];
    j["threshold"] = cfg.radial_ratio_threshold;
    j["trend"] = trend_label({first / double(q), last / double(q)}, cfg.radial_ratio_threshold);
    if (first > 0) j["increment_ratio"] = last / first;
    j["inexact_any"] = count_json(need_count(blocks, "inexact_any"));
    return j;
}

json lp_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    j["p"] = cfg.lp_p;
    json rows = json::array();
    double prev = 0;
    long long violations = 0;
    for (size_t i = 0; i < cfg.lp_n_grid.size(); ++i) {
        long long n = cfg.lp_n_grid[i];
        const MeanBlock& m = need_mean(blocks, "lp_n" + std::to_string(n));
        json row = mean_json(m);
        row["n"] = n;
        rows.push_back(row);
        if (i > 0 && m.mean() > prev) ++violations;
        prev = m.mean();
    }
    j["rows"] = rows;
    j["monotone_violations"] = violations;
    j["censored"] = count_json(need_count(blocks, "censored"));
    return j;
}

json shape_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    json rows = json::array();
    bool decreasing = true;
    double prev_gap = 0;
    for (size_t i = 0; i < cfg.shape_n_grid.size(); ++i) {
        long long n = cfg.shape_n_grid[i];
        const MeanBlock& m = need_mean(blocks, "ratio_n" + std::to_string(n));
        json row = mean_json(m);
        row["n"] = n;
        double gap = std::abs(m.mean() - 1.0);
        row["gap"] = gap;
        rows.push_back(row);
        if (i > 0 && gap >= prev_gap) decreasing = false;
        prev_gap = gap;
    }
    j["rows"] = rows;
    j["gaps_decreasing"] = decreasing;
    j["censored"] = count_json(need_count(blocks, "censored"));
    return j;
}

json tube_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    j["tbar"] = cfg.dist.quantile(cfg.tube_tbar_quantile);
    json rows = json::array();
    for (size_t i = 0; i < cfg.tube_radii.size(); ++i) {
        const MeanBlock& m = need_mean(blocks, "tc_" + std::to_string(i));
        json row = mean_json(m);
        row["radius"] = cfg.tube_radii[i].to_double();
        rows.push_back(row);
    }
    j["rows"] = rows;
    j["monotone"] = count_json(need_count(blocks, "monotone_ok"));
    j["inexact"] = count_json(need_count(blocks, "inexact"));
    return j;
}

json yrec_metrics(const ExperimentConfig& cfg, const BlockMap& blocks) {
    json j;
    j["beta"] = cfg.yrec_beta;
    j["nonempty"] = count_json(need_count(blocks, "nonempty"));
    j["sup_n"] = samples_json(need_samples(blocks, "sup_n"));
    j["record_count"] = mean_json(need_mean(blocks, "record_count"));
    j["boundary_records"] = count_json(need_count(blocks, "boundary_records"));
    return j;
}

}  // namespace

std::string metrics_json(const ExperimentConfig& cfg, const BlockMap& blocks, long long censored,
                         long long censor_total) {
    json j;
    switch (cfg.experiment) {
        case Experiment::Mu: j = mu_metrics(cfg, blocks); break;
        case Experiment::Tails: j = tails_metrics(cfg, blocks); break;
        case Experiment::Shells: j = shells_metrics(cfg, blocks); break;
        case Experiment::Regen: j = regen_metrics(cfg, blocks); break;
        case Experiment::DeviationSets: j = deviation_metrics(cfg, blocks); break;
        case Experiment::HreSum: j = hre_metrics(cfg, blocks); break;
        case Experiment::RadialSum: j = radial_metrics(cfg, blocks); break;
        case Experiment::Lp: j = lp_metrics(cfg, blocks); break;
        case Experiment::PointToShape: j = shape_metrics(cfg, blocks); break;
        case Experiment::TubeSweep: j = tube_metrics(cfg, blocks); break;
        case Experiment::YRecords: j = yrec_metrics(cfg, blocks); break;
    }
    j["censored_events"] = censored;
    j["censor_total"] = censor_total;
    return j.dump();
}

// ---- artifact io ----

bool censoring_flagged(long long censored, long long total) { return censored * 100 > total; }

namespace {

json toml_value_json(const TomlValue& v) {
    switch (v.kind) {
        case TomlValue::Kind::String: return v.str;
        case TomlValue::Kind::Bool: return v.boolean;
        case TomlValue::Kind::Int: return v.integer;
        case TomlValue::Kind::Float: return v.real;
        case TomlValue::Kind::Array: {
            json arr = json::array();
            for (const TomlValue& e : v.array) arr.push_back(toml_value_json(e));
            return arr;
        }
    }
    return nullptr;
}

json toml_doc_json(const TomlDoc& doc) {
    json j = json::object();
    for (const auto& [name, table] : doc) {
        json t = json::object();
        for (const auto& [key, value] : table) t[key] = toml_value_json(value);
        j[name] = t;
    }
    return j;
}

}  // namespace

void write_artifacts(const RunArtifacts& art, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream f(out_dir + "/config.toml", std::ios::binary);
        if (!f) throw RunnerError("cannot write " + out_dir + "/config.toml");
        f << serialize_toml(art.config.to_toml());
    }
    write_csv(out_dir + "/results.csv", art.columns, art.rows);

    json j;
    j["schema_version"] = 1;
    j["experiment"] = experiment_name(art.config.experiment);
    j["config"] = toml_doc_json(art.config.to_toml());
    j["censoring"] = {{"count", art.censored},
                      {"total", art.censor_total},
                      {"flagged", censoring_flagged(art.censored, art.censor_total)}};
    json seeds = json::array();
    for (uint64_t s : art.merged_seeds) seeds.push_back(s);
    j["merged_seeds"] = seeds;
    json refs = json::object();
    for (const auto& [seed, text] : art.mu_ref_by_seed) refs[seed] = json::parse(text);
    j["mu_ref_by_seed"] = refs;
    j["metrics"] =
        json::parse(metrics_json(art.config, art.blocks, art.censored, art.censor_total));
    json bj = json::object();
    for (const auto& [name, block] : art.blocks) bj[name] = block_json(block);
    j["blocks"] = bj;

    std::ofstream f(out_dir + "/summary.json", std::ios::binary);
    if (!f) throw RunnerError("cannot write " + out_dir + "/summary.json");
    f << j.dump(2) << "\n";
}

RunArtifacts load_artifacts(const std::string& dir) {
    RunArtifacts art;
    art.config = load_config(dir + "/config.toml");

    std::vector<Row> records = parse_csv(read_file(dir + "/results.csv"));
    if (records.empty()) throw RunnerError(dir + "/results.csv: empty");
    art.columns = records.front();
    art.rows.assign(records.begin() + 1, records.end());

    json j;
    try {
        j = json::parse(read_file(dir + "/summary.json"));
    } catch (const json::exception& e) {
        throw RunnerError(dir + "/summary.json: " + e.what());
    }
    try {
        if (j.at("schema_version").get<int>() != 1)
            throw RunnerError(dir + "/summary.json: unsupported schema version");
        art.censored = j.at("censoring").at("count").get<long long>();
        art.censor_total = j.at("censoring").at("total").get<long long>();
        for (const auto& s : j.at("merged_seeds")) art.merged_seeds.push_back(s.get<uint64_t>());
        for (auto it = j.at("mu_ref_by_seed").begin(); it != j.at("mu_ref_by_seed").end(); ++it)
            art.mu_ref_by_seed[it.key()] = it.value().dump();
        for (auto it = j.at("blocks").begin(); it != j.at("blocks").end(); ++it)
            art.blocks.emplace(it.key(), block_from_json(it.value()));
    } catch (const json::exception& e) {
        throw RunnerError(dir + "/summary.json: " + e.what());
    }
    return art;
}

RunArtifacts merge_artifacts(std::vector<RunArtifacts> parts) {
    if (parts.empty()) throw RunnerError("merge: nothing to merge");
    RunArtifacts out = std::move(parts.front());
    for (size_t i = 1; i < parts.size(); ++i) {
        RunArtifacts& p = parts[i];
        if (!out.config.mergeable_with(p.config))
            throw RunnerError("merge: configs differ beyond master_seed");
        if (out.columns != p.columns) throw RunnerError("merge: column sets differ");
        if (out.blocks.size() != p.blocks.size()) throw RunnerError("merge: block sets differ");
        for (auto& [name, block] : out.blocks) {
            auto it = p.blocks.find(name);
            if (it == p.blocks.end()) throw RunnerError("merge: block sets differ");
            block.merge(it->second);
        }
        for (Row& r : p.rows) out.rows.push_back(std::move(r));
        out.censored += p.censored;
        out.censor_total += p.censor_total;
        out.merged_seeds.insert(out.merged_seeds.end(), p.merged_seeds.begin(),
                                p.merged_seeds.end());
        for (const auto& [seed, text] : p.mu_ref_by_seed) {
            auto it = out.mu_ref_by_seed.find(seed);
            if (it != out.mu_ref_by_seed.end() && it->second != text)
                throw RunnerError("merge: conflicting reference norms for seed " + seed);
            out.mu_ref_by_seed.emplace(seed, text);
        }
    }
    std::sort(out.merged_seeds.begin(), out.merged_seeds.end());
    out.config.master_seed = out.merged_seeds.front();
    auto row_key = [](const Row& r) -> std::pair<uint64_t, long long> {
        if (r.size() < 2) throw RunnerError("results.csv: row too short");
        try {
            return {std::stoull(r[0]), std::stoll(r[1])};
        } catch (const std::exception&) {
            throw RunnerError("results.csv: bad seed or replica cell");
        }
    };
    std::stable_sort(out.rows.begin(), out.rows.end(),
                     [&row_key](const Row& a, const Row& b) { return row_key(a) < row_key(b); });
    return out;
}

// ---- cli entry points ----

int run_command(const std::string& config_path, const std::string& out_dir, int threads,
                bool strict) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    RunArtifacts art;
    try {
        art = run_experiment(cfg, threads);
    } catch (const std::exception& e) {
        std::cerr << "run error: " << e.what() << "\n";
        return 2;
    }
    try {
        write_artifacts(art, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "write error: " << e.what() << "\n";
        return 2;
    }
    bool flagged = censoring_flagged(art.censored, art.censor_total);
    if (flagged)
        std::cerr << "warning: " << art.censored << " of " << art.censor_total
                  << " events were window-censored\n";
    if (strict && flagged) return 3;
    return 0;
}

int merge_command(const std::vector<std::string>& in_dirs, const std::string& out_dir) {
    std::vector<RunArtifacts> parts;
    try {
        for (const std::string& dir : in_dirs) parts.push_back(load_artifacts(dir));
        RunArtifacts merged = merge_artifacts(std::move(parts));
        write_artifacts(merged, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "merge error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int validate_command(const std::string& config_path) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        std::cout << serialize_toml(cfg.to_toml());
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace fpp
