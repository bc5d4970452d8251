#pragma once

#include <map>
#include <string>
#include <vector>

#include "mimo/trainer.hpp"

namespace mimo {

// Minimal TOML subset: top-level [tables], [[arrays of tables]], and
// key = value lines with strings, numbers, booleans, or flat arrays.
struct TomlValue {
    enum class Kind { Str, Num, Bool, Arr } kind = Kind::Num;
    std::string str;
    double num = 0.0;
    bool is_int = false;
    long long i = 0;
    bool b = false;
    std::vector<TomlValue> arr;
};

using TomlTable = std::map<std::string, TomlValue>;

struct TomlDoc {
    std::map<std::string, TomlTable> tables;
    std::map<std::string, std::vector<TomlTable>> table_arrays;
};

TomlDoc parse_toml(const std::string& text);
TomlDoc parse_toml_file(const std::string& path);

struct DetectorSpec {
    std::string kind;        // detector name, also the CSV label unless overridden
    std::string label;       // optional CSV label when one kind appears twice
    int iters = 0;           // 0 picks the per-kind default
    std::string params_file; // optional trained weights, unfolded kinds only
};

struct ExperimentConfig {
    ScenarioConfig scenario;       // snr_db/block here act as sweep defaults
    std::string csi_method = "lmmse"; // lmmse | rdakf | perfect
    std::vector<DetectorSpec> detectors;
    std::vector<double> snr_db;    // sweep axes
    std::vector<int> blocks;
    long long min_symbol_errors = 100;
    long long max_trials = 1000000;
    uint64_t master_seed = 1;
    int threads = 1;
    bool timing = true;

    void validate() const;
};

ExperimentConfig experiment_from_toml(const TomlDoc& doc);

struct TrainJob {
    ScenarioConfig scenario;
    NetworkKind kind = NetworkKind::Lc;
    TrainConfig train;
};

TrainJob train_job_from_toml(const TomlDoc& doc);

} // namespace mimo
