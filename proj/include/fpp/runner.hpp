#pragma once

#include <map>
#include <string>
#include <vector>

#include "fpp/config.hpp"
#include "fpp/stats.hpp"

// Experiment harness: runs one configured experiment over replicas, writes a
// self-describing output directory, and merges directories produced by runs
// of the same study under different master seeds.
//
// Outputs are byte-identical for a given config no matter how many threads
// executed the replicas: replica k always draws its weights from
// split_seed(master_seed, k, stream), results land in slots indexed by k, and
// accumulator folds happen in index order after the parallel section.  The
// accumulators themselves (ExactSum-based) make merging associative and
// commutative bit-for-bit.
//
// Directory layout: config.toml (canonical echo), results.csv (RFC 4180,
// CRLF, one row per replica or per replica/grid-point), summary.json
// (censoring counters, merged seed list, reference-norm provenance, metrics
// recomputed from the mergeable blocks, and the blocks themselves).

namespace fpp {

// tagged union of the mergeable accumulators
struct Block {
    enum class Kind { Count, Mean, Samples };
    Kind kind = Kind::Count;
    CountBlock count;
    MeanBlock mean;
    SampleBlock samples;

    static Block of(CountBlock b);
    static Block of(MeanBlock b);
    static Block of(SampleBlock b);
    void merge(const Block& o);  // throws RunnerError on kind mismatch
    long long size() const;     // number of folded observations
};

using BlockMap = std::map<std::string, Block>;

struct RunArtifacts {
    ExperimentConfig config;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;  // cells already formatted
    BlockMap blocks;
    long long censored = 0;
    long long censor_total = 0;
    std::vector<uint64_t> merged_seeds;                // sorted, duplicates kept
    std::map<std::string, std::string> mu_ref_by_seed; // decimal seed -> JSON text
};

// builds the reference norm the config asks for; fan references derive their
// seeds from the master seed, so they are reproducible and mergeable
MuRef make_mu_ref(const ExperimentConfig& cfg);

RunArtifacts run_experiment(const ExperimentConfig& cfg, int threads);

// metrics are a pure function of (config, blocks, censoring), shared by run
// and merge so merged summaries are recomputed rather than averaged
std::string metrics_json(const ExperimentConfig& cfg, const BlockMap& blocks, long long censored,
                         long long censor_total);

void write_artifacts(const RunArtifacts& art, const std::string& out_dir);
RunArtifacts load_artifacts(const std::string& dir);
RunArtifacts merge_artifacts(std::vector<RunArtifacts> parts);

// CLI entry points; exit codes: 0 success, 2 config or usage error,
// 3 censoring above threshold under --strict
int run_command(const std::string& config_path, const std::string& out_dir, int threads,
                bool strict);
int merge_command(const std::vector<std::string>& in_dirs, const std::string& out_dir);
int validate_command(const std::string& config_path);

// censoring is flagged when more than 1% of the relevant events were clipped
bool censoring_flagged(long long censored, long long total);

struct RunnerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fpp
