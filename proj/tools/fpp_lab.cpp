#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "fpp/runner.hpp"

namespace {

int resolve_threads(int cli_threads) {
    if (cli_threads > 0) return cli_threads;
    if (const char* env = std::getenv("FPP_LAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"first-passage percolation simulation lab"};
    app.require_subcommand(1);

    std::string run_config, run_out;
    int run_threads = 0;
    bool run_strict = false;
    CLI::App* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("--config", run_config, "experiment config (TOML)")->required();
    run->add_option("--out", run_out, "output directory")->required();
    run->add_option("--threads", run_threads, "worker threads (default: FPP_LAB_THREADS or all cores)");
    run->add_flag("--strict", run_strict, "exit 3 when censoring exceeds 1% of events");

    std::vector<std::string> merge_dirs;
    std::string merge_out;
    CLI::App* merge = app.add_subcommand("merge", "merge result directories from independent seeds");
    merge->add_option("dirs", merge_dirs, "input result directories")->required()->expected(-1);
    merge->add_option("--out", merge_out, "output directory")->required();

    std::string validate_config;
    CLI::App* validate = app.add_subcommand("validate", "parse a config and print its canonical form");
    validate->add_option("--config", validate_config, "experiment config (TOML)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (run->parsed())
        return fpp::run_command(run_config, run_out, resolve_threads(run_threads), run_strict);
    if (merge->parsed()) return fpp::merge_command(merge_dirs, merge_out);
    if (validate->parsed()) return fpp::validate_command(validate_config);
    return 2;
}
