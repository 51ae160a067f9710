#ifndef BLINDID_CHANNEL_HPP
#define BLINDID_CHANNEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "blindid/constellation.hpp"

namespace blindid {

using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rng_t = std::mt19937_64;

struct ChannelImpulseResponse {
    cvec taps;  // h_0 ... h_{L-1}
    int length() const { return static_cast<int>(taps.size()); }
};

// Block-transmission geometry: payloads of K symbols are zero-padded with
// L-1 zeros so each received block has P = K + L - 1 samples and consecutive
// blocks never interfere through a channel of length at most L.
struct FrameConfig {
    int K;                   // payload symbols per block
    int L;                   // channel length bound
    int T;                   // number of blocks, >= 2
    CoprimePair pair;        // constellation orders of the first two blocks
    std::uint32_t z_order;   // alphabet size of the data blocks 3..T
    bool punctured_y;        // second block drawn from the q-PSK set minus {1}

    FrameConfig(int k, int l, int t, CoprimePair cp, std::uint32_t z = 2, bool punct = false);

    int P() const { return K + L - 1; }

    Constellation x_set() const { return Constellation::full(pair.p()); }
    Constellation y_set() const {
        return punctured_y ? Constellation::punctured(pair.q()) : Constellation::full(pair.q());
    }
    Constellation z_set() const { return Constellation::full(z_order); }
};

// The T payloads of one transmission: x from the p-PSK alphabet, y from the
// q-PSK alphabet (optionally punctured), and T-2 data blocks.
struct FrameSet {
    std::vector<PskSymbol> x;
    std::vector<PskSymbol> y;
    std::vector<std::vector<PskSymbol>> z_blocks;

    int block_count() const { return 2 + static_cast<int>(z_blocks.size()); }
    const std::vector<PskSymbol>& block(int i) const;

    bool operator==(const FrameSet&) const = default;
};

struct ReceivedFrame {
    std::vector<cvec> blocks;  // T vectors of length P
    double noise_variance = 0.0;
    std::uint64_t seed = 0;    // stream seed used for channel/noise draws, echoed for replay
};

cvec embed(const std::vector<PskSymbol>& symbols);

// P x L banded Toeplitz with column j holding s shifted down by j;
// T(s)*h is the linear convolution of s with h.
cmat toeplitz_T(const cvec& s, int L);

// P x K banded Toeplitz with first column (h_0 ... h_{L-1}, 0 ...)^T;
// satisfies H*s = T(s)*h.
cmat toeplitz_H(const ChannelImpulseResponse& h, int K);

// L iid circularly symmetric complex Gaussian taps with unit variance each
// (real and imaginary parts N(0, 1/2)).
ChannelImpulseResponse sample_channel(int L, rng_t& rng);

// Uniform draw of all T payloads.
FrameSet sample_frames(const FrameConfig& cfg, rng_t& rng);

// Per block: T(s_i)*h plus iid complex Gaussian noise of variance
// noise_variance per sample. noise_variance = 0 yields exact samples.
ReceivedFrame transmit(const FrameSet& frames, const ChannelImpulseResponse& h,
                       double noise_variance, rng_t& rng);

}  // namespace blindid

#endif
