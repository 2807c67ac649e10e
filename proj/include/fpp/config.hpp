#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "fpp/deviations.hpp"
#include "fpp/weights.hpp"

// Experiment configuration: a single TOML file with flat tables.  The parser
// covers the subset this project writes: [table] headers, key = value pairs,
// strings, booleans, integers, floats, and homogeneous arrays of those.
// Serialization is canonical (sorted tables and keys, %.17g floats), so
// parse -> serialize -> parse is the identity and the echo written next to
// results is byte-stable.

namespace fpp {

struct TomlValue {
    enum class Kind { String, Bool, Int, Float, Array };
    Kind kind = Kind::Int;
    std::string str;
    bool boolean = false;
    long long integer = 0;
    double real = 0;
    std::vector<TomlValue> array;

    static TomlValue of_string(std::string s);
    static TomlValue of_bool(bool b);
    static TomlValue of_int(long long i);
    static TomlValue of_float(double d);
    static TomlValue of_array(std::vector<TomlValue> items);

    double as_number() const;  // Int or Float
    bool operator==(const TomlValue& o) const;
};

using TomlTable = std::map<std::string, TomlValue>;
using TomlDoc = std::map<std::string, TomlTable>;

TomlDoc parse_toml(const std::string& text);  // throws ConfigError with line info
std::string serialize_toml(const TomlDoc& doc);

enum class Experiment {
    Mu,
    Tails,
    Shells,
    Regen,
    DeviationSets,
    HreSum,
    RadialSum,
    Lp,
    PointToShape,
    TubeSweep,
    YRecords,
};
const char* experiment_name(Experiment e);
Experiment experiment_from_name(const std::string& name);

enum class MuRefMode { Auto, Exact, Fan };

struct MuRefConfig {
    MuRefMode mode = MuRefMode::Auto;
    double unit_cost = 1.0;  // Exact mode
    int fan_n = 8;
    long long n_est = 8;
    int fan_replicas = 200;
    MuEstimator estimator = MuEstimator::Auto;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::Mu;
    int dimension = 2;
    uint64_t master_seed = 1;
    int replicas = 100;
    long long window_radius = 30;
    // thread count and strictness are CLI/environment concerns, never part of
    // the config: outputs must not depend on them

    DistributionSpec dist;
    MuRefConfig mu_ref;

    // mu
    Point mu_z{};
    std::vector<long long> mu_n_grid;
    MuEstimator mu_estimator = MuEstimator::Auto;
    // tails
    Point tails_z{};
    double tails_eps = 0.2;
    bool tails_above = false;
    std::vector<double> tails_x_grid;
    // shells
    Point shells_z{};
    double shells_delta = 0.02;
    int shells_pair_count = 0;
    Point shells_pair_a{}, shells_pair_b{};
    // regen
    Point regen_z{};
    Rat64 regen_r{1, 1};
    double regen_tbar_quantile = 0.9;
    long long regen_m_max = 50;
    bool regen_segments = false;
    bool regen_cylinder_time = false;
    // deviation-sets
    double dev_eps = 0.5;
    std::vector<long long> dev_radii;
    // hre-sum
    double hre_alpha = 1.0;
    double hre_eps = 0.5;
    std::vector<long long> hre_radii;
    double hre_comparison_m = 1.0;
    // increments are judged converging when late/early increment ratios stay below this
    double hre_ratio_threshold = 0.9;
    // radial-sum
    Point radial_z{};
    double radial_alpha = 1.0;
    double radial_eps = 0.3;
    long long radial_n_max = 40;
    double radial_comparison_m = 1.0;
    double radial_ratio_threshold = 0.9;
    // lp
    double lp_p = 1.0;
    Point lp_z{};
    std::vector<long long> lp_n_grid;
    // point-to-shape
    std::vector<long long> shape_n_grid;
    // tube-sweep
    Point tube_z{};
    std::vector<Rat64> tube_radii;
    double tube_tbar_quantile = 0.9;
    long long tube_n_levels = 20;
    // y-records
    double yrec_beta = 1.0;

    static ExperimentConfig from_toml(const TomlDoc& doc);  // validates
    TomlDoc to_toml() const;                                // canonical echo
    void validate() const;
    // true when o could be a shard of the same study: equal except master_seed
    bool mergeable_with(const ExperimentConfig& o) const;
};

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fpp
