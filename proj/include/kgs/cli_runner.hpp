// Experiment configuration, orchestration and artifact output.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgs {

enum class Experiment {
    ResonanceVerify,
    StrichartzSweep,
    BilinearSweep,
    TrilinearSweep,
    Transversality,
    SummationCheck,
    Solve,
    Picard,
    ScatterDiag,
    VnormSelftest
};
const char* experiment_name(Experiment e);
Experiment parse_experiment(const std::string& s);
std::vector<Experiment> all_experiments();
const char* experiment_summary(Experiment e);

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Triple {
    int k = 0, k1 = 0, k2 = 0;
};

struct ExperimentConfig {
    std::optional<Experiment> experiment;

    // grid and time
    double r_max = 64.0;
    std::size_t n_points = 4096;
    double T = 16.0;
    double dt = 1.0 / 128;
    std::string window = "fixed";  // fixed | adaptive
    double t_max = -1.0;           // cap on the adaptive half-window; < 0 means none

    int trials = 32;
    std::optional<std::uint64_t> seed;
    double epsilon = 0.1;
    std::string out = "results";
    int threads = 1;

    // sweep ranges
    std::vector<int> k, k1, k2;
    std::vector<Triple> triples, instances;
    std::vector<std::pair<double, double>> pairs;

    // experiment selectors and knobs
    std::string which;              // lemma case, bilinear/transversality case
    std::string flow = "schrodinger";
    std::string weight;             // sigma-s | sigma-w; empty picks by flow
    std::string kind = "schrodinger";  // trilinear pairing
    bool atom_mode = false;
    bool conj_u2 = true, conj_N = true;
    int gap = 10;
    int resolution = 200;
    int refinements = 2;
    double stability = 0.2;
    double ratio_bound = 4.0;       // max/min bound of sweep rows
    double slope_band = 0.15;
    std::vector<int> lengths;
    double delta = 0.01;
    std::vector<double> deltas;
    std::string method = "strang_split";
    int iterations = 4;
    int save_every = 1;
    int dump_every = 16;
    double coupling = 1.0;
    int kg_sign = 1;
    double width = 2.0;
    double mass_tol = 1e-8;
    double residual_tol = 1e-3;
    double regime_tol = 0.5;
    double contraction = 0.5;
    double summation_bound = 10.0;
    int sequences = 1000;
    int max_length = 12;

    std::map<std::string, std::string> explicit_keys;  // as written in the file

    bool randomized() const;
    std::string canonical() const;  // sorted key = value dump of every field
    std::uint64_t hash() const;     // FNV-1a of canonical()
};

// Flat "key: value" text; '#' starts a comment. Lists use brackets, ranges a..b.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Fills per-experiment defaults and checks ranges against the grid.
void validate(ExperimentConfig& cfg);

struct RunOutcome {
    int exit_status = 0;       // 0 all rows pass, 1 some rows fail or the run aborted
    std::size_t rows = 0;
    std::size_t failed = 0;
    std::vector<std::string> artifacts;
    std::string message;
};

RunOutcome run(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

// Deterministic parallel map: results land in slot order whatever the schedule.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace kgs
