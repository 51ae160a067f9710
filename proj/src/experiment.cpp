#include "blindid/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "blindid/glrt.hpp"
#include "blindid/identifier.hpp"

namespace blindid {

namespace {

constexpr double kRoundtripTapTol = 1e-9;

std::string fmt_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

struct TrialTally {
    std::uint64_t frame_errors = 0;
    std::uint64_t symbol_errors = 0;
    double max_residual = 0.0;

    void absorb(const TrialTally& other) {
        frame_errors += other.frame_errors;
        symbol_errors += other.symbol_errors;
        max_residual = std::max(max_residual, other.max_residual);
    }
};

// Runs trials [0, n) split into contiguous chunks. Every trial owns a derived
// RNG stream, so the combined counts do not depend on the chunking.
template <typename TrialFn>
TrialTally run_trials(std::uint64_t n, int threads, const TrialFn& trial) {
    const int workers = std::max(1, threads);
    if (workers == 1 || n < 2 * static_cast<std::uint64_t>(workers)) {
        TrialTally tally;
        for (std::uint64_t t = 0; t < n; ++t)
            trial(tally, t);
        return tally;
    }
    const auto w = static_cast<std::uint64_t>(workers);
    const std::uint64_t chunk = (n + w - 1) / w;
    std::vector<TrialTally> partial(w);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::uint64_t i = 0; i < w; ++i) {
        const std::uint64_t begin = i * chunk;
        const std::uint64_t end = std::min(n, begin + chunk);
        pool.emplace_back([&, i, begin, end] {
            for (std::uint64_t t = begin; t < end; ++t)
                trial(partial[i], t);
        });
    }
    for (auto& th : pool)
        th.join();
    TrialTally tally;
    for (const auto& p : partial)
        tally.absorb(p);
    return tally;
}

SlopeFit fit_slope(const SweepResult& result, std::uint64_t min_errors) {
    const std::uint64_t floor = std::max<std::uint64_t>(1, min_errors);
    std::vector<double> xs, ys;
    for (const auto& pt : result.points) {
        if (pt.frame_errors >= floor && pt.trials > 0) {
            xs.push_back(pt.snr_db / 10.0);
            ys.push_back(std::log10(pt.fer));
        }
    }
    if (xs.size() < 2)
        throw InsufficientStatistics("slope fit needs at least two points with " +
                                     std::to_string(floor) + "+ frame errors, have " +
                                     std::to_string(xs.size()));
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.points_used = static_cast<int>(xs.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = my + fit.slope * (xs[i] - mx);
        ss += (ys[i] - pred) * (ys[i] - pred);
    }
    fit.rms_log10_residual = std::sqrt(ss / n);
    fit.valid = true;
    return fit;
}

}  // namespace

std::string to_string(ExperimentMode mode) {
    switch (mode) {
        case ExperimentMode::identify_roundtrip: return "identify-roundtrip";
        case ExperimentMode::ber_sweep: return "ber-sweep";
        case ExperimentMode::rank_check: return "rank-check";
        case ExperimentMode::decompose_demo: return "decompose-demo";
    }
    throw std::logic_error("unknown mode");
}

ExperimentMode mode_from_string(const std::string& name) {
    if (name == "identify-roundtrip") return ExperimentMode::identify_roundtrip;
    if (name == "ber-sweep") return ExperimentMode::ber_sweep;
    if (name == "rank-check") return ExperimentMode::rank_check;
    if (name == "decompose-demo") return ExperimentMode::decompose_demo;
    throw std::invalid_argument("unknown experiment mode: " + name);
}

void ExperimentSpec::validate() const {
    frame_config();  // validates K, L, T, coprimality, z_order
    if (trials_per_point < 1)
        throw std::invalid_argument("trials_per_point must be >= 1");
    for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
        if (!(snr_grid_db[i] > snr_grid_db[i - 1]))
            throw std::invalid_argument("snr grid must be strictly increasing");
    if (mode == ExperimentMode::ber_sweep && snr_grid_db.empty())
        throw std::invalid_argument("ber-sweep needs a non-empty snr grid");
}

FrameConfig ExperimentSpec::frame_config() const {
    return FrameConfig(K, L, T, CoprimePair(p, q), z_order, punctured_y);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t snr_index,
                                 std::uint64_t trial_index) {
    constexpr std::uint64_t gamma = 0x9E3779B97F4A7C15ull;
    return splitmix64(splitmix64(master + (snr_index + 1) * gamma) + (trial_index + 1) * gamma);
}

SweepResult run_identify_roundtrip(const ExperimentSpec& spec, int threads) {
    spec.validate();
    const FrameConfig cfg = spec.frame_config();
    const auto trials = static_cast<std::uint64_t>(spec.trials_per_point);
    const Constellation xs = cfg.x_set();
    const Constellation ys = cfg.y_set();

    const auto trial = [&](TrialTally& tally, std::uint64_t t) {
        rng_t rng(derive_stream_seed(spec.master_seed, 0, t));
        ChannelImpulseResponse h = sample_channel(cfg.L, rng);
        FrameSet fs;
        std::uniform_int_distribution<std::uint32_t> px(0, xs.size() - 1), py(0, ys.size() - 1);
        for (int i = 0; i < cfg.K; ++i)
            fs.x.push_back(xs.symbol(px(rng)));
        for (int i = 0; i < cfg.K; ++i)
            fs.y.push_back(ys.symbol(py(rng)));

        // Deterministically exercise the structured channels: leading zeros,
        // shortened support, and both at once.
        switch (t % 6) {
            case 1:
                if (cfg.L >= 2) h.taps[0] = 0.0;
                break;
            case 3:
                if (cfg.L >= 2) h.taps[cfg.L - 1] = 0.0;
                break;
            case 5:
                if (cfg.L >= 3) {
                    h.taps[0] = 0.0;
                    h.taps[cfg.L - 1] = 0.0;
                }
                break;
            default:
                break;
        }
        int true_r = 0;
        while (true_r < cfg.L && h.taps[true_r] == 0.0)
            ++true_r;
        int true_last = cfg.L - 1;
        while (true_last > true_r && h.taps[true_last] == 0.0)
            --true_last;

        ReceivedFrame rx = transmit(fs, h, 0.0, rng);
        bool ok = false;
        try {
            const IdentificationResult res = identify(rx.blocks[0], rx.blocks[1], cfg);
            const double residual = reconstruct_residual(res, rx.blocks[0], rx.blocks[1]);
            tally.max_residual = std::max(tally.max_residual, residual);
            std::uint64_t sym_err = 0;
            for (int i = 0; i < cfg.K; ++i) {
                sym_err += res.x_hat[static_cast<std::size_t>(i)] == fs.x[static_cast<std::size_t>(i)] ? 0 : 1;
                sym_err += res.y_hat[static_cast<std::size_t>(i)] == fs.y[static_cast<std::size_t>(i)] ? 0 : 1;
            }
            tally.symbol_errors += sym_err;
            ok = sym_err == 0 && res.leading_zeros == true_r &&
                 res.effective_order == true_last - true_r + 1 &&
                 (res.taps.taps - h.taps).cwiseAbs().maxCoeff() <= kRoundtripTapTol &&
                 residual <= kRoundtripTapTol;
        } catch (const std::exception&) {
            tally.symbol_errors += 2 * static_cast<std::uint64_t>(cfg.K);
        }
        if (!ok)
            ++tally.frame_errors;
    };

    const TrialTally tally = run_trials(trials, threads, trial);

    SweepResult result;
    result.spec = spec;
    SnrRecord rec;
    rec.snr_db = 0.0;  // noise-free mode: the column is a placeholder
    rec.trials = trials;
    rec.frame_errors = tally.frame_errors;
    rec.symbol_errors = tally.symbol_errors;
    rec.fer = static_cast<double>(tally.frame_errors) / static_cast<double>(trials);
    rec.ser = static_cast<double>(tally.symbol_errors) /
              static_cast<double>(trials * 2 * static_cast<std::uint64_t>(cfg.K));
    rec.max_residual = tally.max_residual;
    result.points.push_back(rec);
    return result;
}

SweepResult run_ber_sweep(const ExperimentSpec& spec, int threads) {
    spec.validate();
    const FrameConfig cfg = spec.frame_config();
    const Codebook codebook(cfg);
    const GlrtDecoder decoder(codebook);
    const auto trials = static_cast<std::uint64_t>(spec.trials_per_point);
    const auto symbols_per_frame = static_cast<std::uint64_t>(cfg.K) * static_cast<std::uint64_t>(cfg.T);

    SweepResult result;
    result.spec = spec;

    for (std::size_t si = 0; si < spec.snr_grid_db.size(); ++si) {
        const double snr_db = spec.snr_grid_db[si];
        const double noise_variance = std::pow(10.0, -snr_db / 10.0);
        const double component_sigma = std::sqrt(noise_variance / 2.0);

        const auto trial = [&](TrialTally& tally, std::uint64_t t) {
            rng_t rng(derive_stream_seed(spec.master_seed, si, t));
            const ChannelImpulseResponse h = sample_channel(cfg.L, rng);
            std::uniform_int_distribution<std::uint64_t> pick(0, codebook.size() - 1);
            const std::uint64_t sent = pick(rng);
            cvec z = decoder.signal_matrix(sent) * h.taps;
            std::normal_distribution<double> component(0.0, component_sigma);
            for (Eigen::Index i = 0; i < z.size(); ++i)
                z[i] += cplx(component(rng), component(rng));
            const DecodeResult dec = decoder.decode(z);
            if (dec.index != sent) {
                ++tally.frame_errors;
                tally.symbol_errors +=
                    static_cast<std::uint64_t>(codebook.count_symbol_differences(sent, dec.index));
            }
        };

        const TrialTally tally = run_trials(trials, threads, trial);
        SnrRecord rec;
        rec.snr_db = snr_db;
        rec.trials = trials;
        rec.frame_errors = tally.frame_errors;
        rec.symbol_errors = tally.symbol_errors;
        rec.fer = static_cast<double>(tally.frame_errors) / static_cast<double>(trials);
        rec.ser = static_cast<double>(tally.symbol_errors) /
                  static_cast<double>(trials * symbols_per_frame);
        result.points.push_back(rec);
    }

    try {
        result.slope = fit_slope(result, 50);
    } catch (const InsufficientStatistics&) {
        result.slope = SlopeFit{};
    }
    return result;
}

double estimate_diversity_slope(const SweepResult& result, std::uint64_t min_errors) {
    return fit_slope(result, min_errors).slope;
}

std::string to_csv(const SweepResult& result) {
    std::string out = "snr_db,trials,frame_errors,symbol_errors,fer,ser\n";
    for (const auto& pt : result.points) {
        out += fmt_double(pt.snr_db);
        out += ',';
        out += std::to_string(pt.trials);
        out += ',';
        out += std::to_string(pt.frame_errors);
        out += ',';
        out += std::to_string(pt.symbol_errors);
        out += ',';
        out += fmt_double(pt.fer);
        out += ',';
        out += fmt_double(pt.ser);
        out += '\n';
    }
    return out;
}

namespace {

nlohmann::json spec_to_json(const ExperimentSpec& spec) {
    return nlohmann::json{{"mode", to_string(spec.mode)},
                          {"k", spec.K},
                          {"l", spec.L},
                          {"t", spec.T},
                          {"p", spec.p},
                          {"q", spec.q},
                          {"z_order", spec.z_order},
                          {"punctured_y", spec.punctured_y},
                          {"snr_grid_db", spec.snr_grid_db},
                          {"trials_per_point", spec.trials_per_point},
                          {"master_seed", spec.master_seed}};
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
    ExperimentSpec spec;
    spec.mode = mode_from_string(j.at("mode").get<std::string>());
    spec.K = j.at("k").get<int>();
    spec.L = j.at("l").get<int>();
    spec.T = j.at("t").get<int>();
    spec.p = j.at("p").get<std::uint32_t>();
    spec.q = j.at("q").get<std::uint32_t>();
    spec.z_order = j.at("z_order").get<std::uint32_t>();
    spec.punctured_y = j.at("punctured_y").get<bool>();
    spec.snr_grid_db = j.at("snr_grid_db").get<std::vector<double>>();
    spec.trials_per_point = j.at("trials_per_point").get<int>();
    spec.master_seed = j.at("master_seed").get<std::uint64_t>();
    return spec;
}

}  // namespace

std::string to_json_string(const SweepResult& result) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& pt : result.points) {
        points.push_back({{"snr_db", pt.snr_db},
                          {"trials", pt.trials},
                          {"frame_errors", pt.frame_errors},
                          {"symbol_errors", pt.symbol_errors},
                          {"fer", pt.fer},
                          {"ser", pt.ser},
                          {"max_residual", pt.max_residual}});
    }
    nlohmann::json j{{"config", spec_to_json(result.spec)},
                     {"points", points},
                     {"slope", {{"slope", result.slope.slope},
                                {"points_used", result.slope.points_used},
                                {"rms_log10_residual", result.slope.rms_log10_residual},
                                {"valid", result.slope.valid}}}};
    return j.dump(2) + "\n";
}

SweepResult sweep_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    SweepResult result;
    result.spec = spec_from_json(j.at("config"));
    for (const auto& pj : j.at("points")) {
        SnrRecord pt;
        pt.snr_db = pj.at("snr_db").get<double>();
        pt.trials = pj.at("trials").get<std::uint64_t>();
        pt.frame_errors = pj.at("frame_errors").get<std::uint64_t>();
        pt.symbol_errors = pj.at("symbol_errors").get<std::uint64_t>();
        pt.fer = pj.at("fer").get<double>();
        pt.ser = pj.at("ser").get<double>();
        pt.max_residual = pj.at("max_residual").get<double>();
        result.points.push_back(pt);
    }
    const auto& sj = j.at("slope");
    result.slope.slope = sj.at("slope").get<double>();
    result.slope.points_used = sj.at("points_used").get<int>();
    result.slope.rms_log10_residual = sj.at("rms_log10_residual").get<double>();
    result.slope.valid = sj.at("valid").get<bool>();
    return result;
}

void emit_results(const SweepResult& result, OutputFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << (format == OutputFormat::csv ? to_csv(result) : to_json_string(result));
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

}  // namespace blindid
