// blindid: blind identification of zero-padded coprime-PSK transmissions and
// GLRT diversity experiments. See README.md for the output contracts.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blindid/constellation.hpp"
#include "blindid/experiment.hpp"
#include "blindid/glrt.hpp"

namespace {

struct Options {
    blindid::ExperimentSpec spec;
    double snr_from = 14.0;
    double snr_to = 26.0;
    double snr_step = 2.0;
    int threads = 1;
    std::uint64_t min_errors = 50;
    std::string out;
    std::string format = "csv";
    bool allow_non_coprime = false;
    double re = 0.0;
    double im = 0.0;
    std::string decompose_mode = "exact";
};

// All experiment-shaping flags live on the root app so a single flat
// key=value config file can supply any of them; subcommands fall through to
// these, and explicit flags always win over the file.
void add_shared_flags(CLI::App& app, Options& o) {
    app.add_option("--k", o.spec.K, "payload symbols per block")->check(CLI::PositiveNumber);
    app.add_option("--l", o.spec.L, "channel length bound")->check(CLI::PositiveNumber);
    app.add_option("--t", o.spec.T, "blocks per frame (>= 2)")->check(CLI::Range(2, 64));
    app.add_option("--p", o.spec.p, "first-block PSK order")->check(CLI::PositiveNumber);
    app.add_option("--q", o.spec.q, "second-block PSK order")->check(CLI::PositiveNumber);
    app.add_option("--z-order", o.spec.z_order, "data-block PSK order")
        ->check(CLI::PositiveNumber);
    app.add_flag("--punctured-y", o.spec.punctured_y,
                 "drop the shared point 1 from the second-block alphabet");
    app.add_option("--snr-from", o.snr_from, "first SNR point (dB)");
    app.add_option("--snr-to", o.snr_to, "last SNR point (dB)");
    app.add_option("--snr-step", o.snr_step, "SNR grid step (dB)")->check(CLI::PositiveNumber);
    app.add_option("--min-errors", o.min_errors,
                   "frame errors a point needs to join the slope fit");
    app.add_option("--trials", o.spec.trials_per_point, "Monte Carlo trials per point")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", o.spec.master_seed, "master seed for derived per-trial streams");
    app.add_option("--out", o.out, "write results here instead of stdout");
    app.add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", o.threads, "worker threads (does not change the results)")
        ->check(CLI::PositiveNumber);
    app.set_config("--config", "",
                   "key=value file supplying the same keys (long flag names without the "
                   "leading dashes); explicit flags win");
}

void deliver(const blindid::SweepResult& result, const Options& o) {
    const auto fmt =
        o.format == "json" ? blindid::OutputFormat::json : blindid::OutputFormat::csv;
    if (o.out.empty()) {
        std::cout << (fmt == blindid::OutputFormat::csv ? blindid::to_csv(result)
                                                        : blindid::to_json_string(result));
    } else {
        blindid::emit_results(result, fmt, o.out);
        std::cout << "wrote " << o.out << "\n";
    }
}

blindid::Codebook make_codebook(const Options& o) {
    if (o.allow_non_coprime) {
        std::vector<blindid::Constellation> sets;
        sets.push_back(blindid::Constellation::full(o.spec.p));
        sets.push_back(o.spec.punctured_y ? blindid::Constellation::punctured(o.spec.q)
                                          : blindid::Constellation::full(o.spec.q));
        for (int b = 2; b < o.spec.T; ++b)
            sets.push_back(blindid::Constellation::full(o.spec.z_order));
        return blindid::Codebook::with_sets(o.spec.K, o.spec.L, std::move(sets));
    }
    return blindid::Codebook(o.spec.frame_config());
}

int run_identify(Options& o) {
    o.spec.mode = blindid::ExperimentMode::identify_roundtrip;
    const blindid::SweepResult result = blindid::run_identify_roundtrip(o.spec, o.threads);
    deliver(result, o);
    const auto& pt = result.points.front();
    std::fprintf(stderr, "recovered %llu/%llu frames exactly, max residual %.3g\n",
                 static_cast<unsigned long long>(pt.trials - pt.frame_errors),
                 static_cast<unsigned long long>(pt.trials), pt.max_residual);
    return 0;
}

int run_sweep(Options& o) {
    if (o.snr_step <= 0.0)
        throw std::invalid_argument("--snr-step must be positive");
    if (o.snr_to < o.snr_from)
        throw std::invalid_argument("--snr-to must be >= --snr-from");
    o.spec.mode = blindid::ExperimentMode::ber_sweep;
    o.spec.snr_grid_db.clear();
    for (double s = o.snr_from; s <= o.snr_to + 1e-9; s += o.snr_step)
        o.spec.snr_grid_db.push_back(s);
    blindid::SweepResult result = blindid::run_ber_sweep(o.spec, o.threads);
    try {
        result.slope.slope = blindid::estimate_diversity_slope(result, o.min_errors);
        result.slope.valid = true;
    } catch (const blindid::InsufficientStatistics&) {
        result.slope = blindid::SlopeFit{};
    }
    deliver(result, o);
    if (result.slope.valid)
        std::fprintf(stderr, "fitted log10(FER) slope: %.3f\n", result.slope.slope);
    else
        std::fprintf(stderr, "slope not fitted: too few points with enough frame errors\n");
    return 0;
}

int run_rank_check(Options& o) {
    const blindid::Codebook codebook = make_codebook(o);
    const blindid::RankReport report = blindid::verify_full_rank(codebook);
    std::printf("codewords:            %llu\n", static_cast<unsigned long long>(codebook.size()));
    std::printf("pairs checked:        %llu\n",
                static_cast<unsigned long long>(report.pairs_checked));
    std::printf("required rank:        %d\n", report.full_rank);
    std::printf("minimum rank:         %d\n", report.min_rank);
    std::printf("rank-deficient pairs: %llu\n",
                static_cast<unsigned long long>(report.deficient_count));
    for (const auto& [a, b] : report.offending_pairs)
        std::printf("  deficient pair: (%llu, %llu)\n", static_cast<unsigned long long>(a),
                    static_cast<unsigned long long>(b));
    std::printf("full rank for all pairs: %s\n", report.all_full_rank() ? "yes" : "no");
    return 0;
}

int run_decompose(Options& o) {
    const blindid::CoprimePair pair(o.spec.p, o.spec.q);
    const auto mode = o.decompose_mode == "nearest" ? blindid::DecomposeMode::nearest
                                                    : blindid::DecomposeMode::exact;
    const blindid::cplx w(o.re, o.im);
    const auto dec = blindid::decompose_difference(w, pair, mode);
    if (!dec) {
        std::fprintf(stderr, "no exact decomposition of (%.17g, %.17g) over (%u, %u)\n", o.re,
                     o.im, o.spec.p, o.spec.q);
        return 1;
    }
    const blindid::cplx xe = dec->x.embed(), ye = dec->y.embed();
    std::printf("w        = (%.17g, %.17g)\n", w.real(), w.imag());
    std::printf("x        = index %u of %u-PSK = (%.17g, %.17g)\n", dec->x.index(), o.spec.p,
                xe.real(), xe.imag());
    std::printf("y        = index %u of %u-PSK = (%.17g, %.17g)\n", dec->y.index(), o.spec.q,
                ye.real(), ye.imag());
    std::printf("ell      = %lld\n", static_cast<long long>(dec->ell));
    std::printf("residual = %.3g\n", dec->residual);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blind identification of zero-padded coprime-PSK blocks "
                 "and GLRT diversity experiments"};
    app.require_subcommand(1);
    Options o;
    add_shared_flags(app, o);

    CLI::App* identify = app.add_subcommand(
        "identify", "noise-free transmit/identify round trips with exact-recovery accounting");
    CLI::App* sweep = app.add_subcommand(
        "ber-sweep", "Monte Carlo FER/SER of the exhaustive GLRT decoder over an SNR grid");
    CLI::App* rank = app.add_subcommand(
        "rank-check", "exhaustive pairwise column-rank audit of the codebook signal matrices");
    rank->add_flag("--allow-non-coprime", o.allow_non_coprime,
                   "skip the coprimality requirement (for rank-deficient controls)");
    CLI::App* decompose = app.add_subcommand(
        "decompose", "solve x - y = w over a coprime PSK pair for one complex value");
    decompose->add_option("--re", o.re, "real part of w")->required();
    decompose->add_option("--im", o.im, "imaginary part of w")->required();
    decompose->add_option("--mode", o.decompose_mode, "exact or nearest")
        ->check(CLI::IsMember({"exact", "nearest"}));

    for (CLI::App* cmd : {identify, sweep, rank, decompose})
        cmd->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (identify->parsed()) return run_identify(o);
        if (sweep->parsed()) return run_sweep(o);
        if (rank->parsed()) return run_rank_check(o);
        if (decompose->parsed()) return run_decompose(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
