#ifndef BLINDID_EXPERIMENT_HPP
#define BLINDID_EXPERIMENT_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "blindid/channel.hpp"

namespace blindid {

// Too few reliable error counts to fit a slope.
struct InsufficientStatistics : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentMode { identify_roundtrip, ber_sweep, rank_check, decompose_demo };

std::string to_string(ExperimentMode mode);
ExperimentMode mode_from_string(const std::string& name);

struct ExperimentSpec {
    int K = 2;
    int L = 2;
    int T = 2;
    std::uint32_t p = 2;
    std::uint32_t q = 3;
    std::uint32_t z_order = 2;
    bool punctured_y = false;
    std::vector<double> snr_grid_db;
    int trials_per_point = 1000;
    std::uint64_t master_seed = 1;
    ExperimentMode mode = ExperimentMode::ber_sweep;

    // Throws std::invalid_argument on any violated constraint (non-coprime
    // p/q, non-increasing grid, trials < 1, ...).
    void validate() const;
    FrameConfig frame_config() const;

    bool operator==(const ExperimentSpec&) const = default;
};

struct SnrRecord {
    double snr_db = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t frame_errors = 0;
    std::uint64_t symbol_errors = 0;
    double fer = 0.0;
    double ser = 0.0;
    double max_residual = 0.0;  // round-trip mode only; 0 for sweeps

    bool operator==(const SnrRecord&) const = default;
};

struct SlopeFit {
    double slope = 0.0;
    int points_used = 0;
    double rms_log10_residual = 0.0;
    bool valid = false;

    bool operator==(const SlopeFit&) const = default;
};

struct SweepResult {
    ExperimentSpec spec;
    std::vector<SnrRecord> points;
    SlopeFit slope;

    bool operator==(const SweepResult&) const = default;
};

// Stream derivation for per-trial RNGs. Part of the output contract: trial
// (snr_index, trial_index) always consumes the generator seeded with
//   mix(mix(master + (snr_index+1)*GAMMA) + (trial_index+1)*GAMMA)
// where GAMMA = 0x9E3779B97F4A7C15 and mix is the splitmix64 finalizer, so
// results do not depend on how trials are scheduled across workers.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t snr_index,
                                 std::uint64_t trial_index);

// Noise-free transmit/identify round trips. A deterministic subset of trials
// forces leading-zero taps and shortened channels so both detection paths are
// exercised. A trial counts as a frame error unless taps (to 1e-9), both
// payloads, the leading-zero count and the effective order are all recovered.
SweepResult run_identify_roundtrip(const ExperimentSpec& spec, int threads = 1);

// Monte Carlo frame/symbol error rates of the exhaustive non-coherent decoder
// over the SNR grid (SNR = 1/noise_variance, dB). Trials run on independent
// derived RNG streams; counts are identical for any thread count.
SweepResult run_ber_sweep(const ExperimentSpec& spec, int threads = 1);

// Least-squares slope of log10(FER) against snr_db/10 over the points with at
// least min_errors frame errors. Needs two such points.
double estimate_diversity_slope(const SweepResult& result, std::uint64_t min_errors = 50);

enum class OutputFormat { csv, json };

std::string to_csv(const SweepResult& result);
std::string to_json_string(const SweepResult& result);
SweepResult sweep_from_json(const std::string& text);

// Writes the chosen rendering to path; IO failures surface as
// std::runtime_error carrying the path.
void emit_results(const SweepResult& result, OutputFormat format, const std::string& path);

}  // namespace blindid

#endif
