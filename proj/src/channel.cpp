#include "blindid/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace blindid {

FrameConfig::FrameConfig(int k, int l, int t, CoprimePair cp, std::uint32_t z, bool punct)
    : K(k), L(l), T(t), pair(cp), z_order(z), punctured_y(punct) {
    if (K < 1)
        throw std::invalid_argument("FrameConfig: K must be >= 1");
    if (L < 1)
        throw std::invalid_argument("FrameConfig: L must be >= 1");
    if (T < 2)
        throw std::invalid_argument("FrameConfig: T must be >= 2");
    if (z_order < 1)
        throw std::invalid_argument("FrameConfig: z_order must be >= 1");
}

const std::vector<PskSymbol>& FrameSet::block(int i) const {
    if (i == 0)
        return x;
    if (i == 1)
        return y;
    return z_blocks.at(static_cast<std::size_t>(i) - 2);
}

cvec embed(const std::vector<PskSymbol>& symbols) {
    cvec out(symbols.size());
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = symbols[static_cast<std::size_t>(i)].embed();
    return out;
}

cmat toeplitz_T(const cvec& s, int L) {
    const auto K = static_cast<int>(s.size());
    if (K < 1 || L < 1)
        throw std::invalid_argument("toeplitz_T: K and L must be >= 1");
    const int P = K + L - 1;
    cmat m = cmat::Zero(P, L);
    for (int j = 0; j < L; ++j)
        m.col(j).segment(j, K) = s;
    return m;
}

cmat toeplitz_H(const ChannelImpulseResponse& h, int K) {
    const int L = h.length();
    if (K < 1 || L < 1)
        throw std::invalid_argument("toeplitz_H: K and L must be >= 1");
    const int P = K + L - 1;
    cmat m = cmat::Zero(P, K);
    for (int j = 0; j < K; ++j)
        m.col(j).segment(j, L) = h.taps;
    return m;
}

ChannelImpulseResponse sample_channel(int L, rng_t& rng) {
    if (L < 1)
        throw std::invalid_argument("sample_channel: L must be >= 1");
    std::normal_distribution<double> component(0.0, std::sqrt(0.5));
    cvec taps(L);
    for (int i = 0; i < L; ++i) {
        const double re = component(rng);
        const double im = component(rng);
        taps[i] = cplx(re, im);
    }
    return ChannelImpulseResponse{std::move(taps)};
}

namespace {

std::vector<PskSymbol> sample_block(const Constellation& set, int K, rng_t& rng) {
    std::uniform_int_distribution<std::uint32_t> pick(0, set.size() - 1);
    std::vector<PskSymbol> out;
    out.reserve(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i)
        out.push_back(set.symbol(pick(rng)));
    return out;
}

}  // namespace

FrameSet sample_frames(const FrameConfig& cfg, rng_t& rng) {
    FrameSet fs;
    fs.x = sample_block(cfg.x_set(), cfg.K, rng);
    fs.y = sample_block(cfg.y_set(), cfg.K, rng);
    for (int i = 2; i < cfg.T; ++i)
        fs.z_blocks.push_back(sample_block(cfg.z_set(), cfg.K, rng));
    return fs;
}

ReceivedFrame transmit(const FrameSet& frames, const ChannelImpulseResponse& h,
                       double noise_variance, rng_t& rng) {
    if (noise_variance < 0.0)
        throw std::invalid_argument("transmit: noise variance must be >= 0");
    const int L = h.length();
    ReceivedFrame rx;
    rx.noise_variance = noise_variance;
    rx.blocks.reserve(static_cast<std::size_t>(frames.block_count()));
    std::normal_distribution<double> component(0.0, std::sqrt(noise_variance / 2.0));
    for (int b = 0; b < frames.block_count(); ++b) {
        cvec clean = toeplitz_T(embed(frames.block(b)), L) * h.taps;
        if (noise_variance > 0.0) {
            for (Eigen::Index i = 0; i < clean.size(); ++i)
                clean[i] += cplx(component(rng), component(rng));
        }
        rx.blocks.push_back(std::move(clean));
    }
    return rx;
}

}  // namespace blindid
