#ifndef BLINDID_GLRT_HPP
#define BLINDID_GLRT_HPP

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "blindid/channel.hpp"

namespace blindid {

// A codebook or pair enumeration would exceed the configured cap; the
// exhaustive search must fail loudly instead of hanging.
struct ConfigTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultDecodeCap = std::uint64_t{1} << 20;
inline constexpr std::uint64_t kDefaultRankCap = std::uint64_t{1} << 12;
inline constexpr double kSingularValueEps = 1e-9;  // relative singular-value cutoff

// The stacked PT x L signal matrix of one codeword: the per-block Toeplitz
// operators of all T payloads on top of each other.
struct SignalMatrix {
    cmat S;
    FrameSet frames;
};

SignalMatrix build_signal_matrix(const FrameSet& frames, int L);

// Deterministic lexicographic enumeration of every codeword: block 0 is the
// most significant group of digits, and within a block the first symbol is
// most significant. index -> FrameSet is a bijection.
class Codebook {
public:
    explicit Codebook(const FrameConfig& cfg);

    // Experiment control: arbitrary per-block alphabets with no coprimality
    // requirement (e.g. both leading blocks from the same PSK set).
    static Codebook with_sets(int K, int L, std::vector<Constellation> block_sets);

    std::uint64_t size() const { return size_; }
    int K() const { return K_; }
    int L() const { return L_; }
    int T() const { return static_cast<int>(sets_.size()); }
    int P() const { return K_ + L_ - 1; }
    int PT() const { return P() * T(); }

    FrameSet frames_at(std::uint64_t index) const;
    cmat signal_matrix_at(std::uint64_t index) const;

    // Number of symbol positions at which two codewords differ.
    int count_symbol_differences(std::uint64_t a, std::uint64_t b) const;

private:
    Codebook(int K, int L, std::vector<Constellation> sets);
    int K_, L_;
    std::vector<Constellation> sets_;  // one alphabet per block
    std::uint64_t size_;
};

// Energy of the projection of z onto the column space of S, computed through
// a QR orthonormalization of S. Throws std::invalid_argument when S is
// numerically rank deficient.
double glrt_metric(const cvec& z, const cmat& S);

struct DecodeResult {
    std::uint64_t index = 0;
    double metric = 0.0;
};

// Exhaustive non-coherent decoder: maximizes the projected energy over the
// codebook, ties broken toward the lowest enumeration index. Column-space
// bases are cached up front so repeated decodes cost one pass of inner
// products per codeword.
class GlrtDecoder {
public:
    explicit GlrtDecoder(const Codebook& codebook, std::uint64_t cap = kDefaultDecodeCap);

    // workers > 1 evaluates disjoint index ranges and reduces with the same
    // tie-break, so the result is identical for any worker count.
    DecodeResult decode(const cvec& z, int workers = 1) const;

    const Codebook& codebook() const { return codebook_; }
    const cmat& signal_matrix(std::uint64_t index) const { return signals_[index]; }

private:
    Codebook codebook_;
    std::vector<cmat> signals_;      // S per codeword
    std::vector<cmat> orthobases_;   // thin Q per codeword
};

// One-shot convenience wrapper around GlrtDecoder.
std::pair<FrameSet, double> glrt_decode(const cvec& z, const Codebook& codebook,
                                        std::uint64_t cap = kDefaultDecodeCap);

struct RankReport {
    std::uint64_t pairs_checked = 0;
    int min_rank = 0;
    int full_rank = 0;  // 2L, the rank a diversity-achieving pair must reach
    std::uint64_t deficient_count = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> offending_pairs;  // first few, by index

    bool all_full_rank() const { return deficient_count == 0; }
};

// Exhaustive check that (S, S~) has full column rank 2L for every unordered
// pair of distinct codewords; the premise under which the exhaustive decoder
// achieves full diversity. Rank is counted from singular values above
// sv_threshold times the largest one.
RankReport verify_full_rank(const Codebook& codebook, std::uint64_t cap = kDefaultRankCap,
                            double sv_threshold = kSingularValueEps);

// For the square case K = L: the stacked 2K x 2K matrix
//   [ T(x)[rows 1..K]      T(x)[rows 1..K]        ]
//   [ T(z)[rows k..K+k-1]  T(z~)[rows k..K+k-1]   ]
// with z and z~ equal before position k and different at k has determinant
// x_1^K (z~_k - z_k)^K. Returns the absolute gap between the numerical
// determinant and that closed form.
double check_determinant_identity(const std::vector<PskSymbol>& x, const cvec& z,
                                  const cvec& z_alt, int k);

}  // namespace blindid

#endif
