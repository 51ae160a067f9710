#include "blindid/glrt.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace blindid {

SignalMatrix build_signal_matrix(const FrameSet& frames, int L) {
    const int T = frames.block_count();
    const auto K = static_cast<int>(frames.x.size());
    const int P = K + L - 1;
    cmat S(P * T, L);
    for (int b = 0; b < T; ++b)
        S.middleRows(b * P, P) = toeplitz_T(embed(frames.block(b)), L);
    return SignalMatrix{std::move(S), frames};
}

Codebook::Codebook(int K, int L, std::vector<Constellation> sets)
    : K_(K), L_(L), sets_(std::move(sets)) {
    if (K_ < 1 || L_ < 1)
        throw std::invalid_argument("Codebook: K and L must be >= 1");
    if (sets_.size() < 2)
        throw std::invalid_argument("Codebook: need at least two blocks");
    unsigned __int128 n = 1;
    for (const auto& set : sets_)
        for (int i = 0; i < K_; ++i) {
            n *= set.size();
            if (n > static_cast<unsigned __int128>(UINT64_MAX)) {
                size_ = UINT64_MAX;  // saturate; the caps reject it downstream
                return;
            }
        }
    size_ = static_cast<std::uint64_t>(n);
}

namespace {
std::vector<Constellation> block_sets_of(const FrameConfig& cfg) {
    std::vector<Constellation> sets;
    sets.push_back(cfg.x_set());
    sets.push_back(cfg.y_set());
    for (int i = 2; i < cfg.T; ++i)
        sets.push_back(cfg.z_set());
    return sets;
}
}  // namespace

Codebook::Codebook(const FrameConfig& cfg) : Codebook(cfg.K, cfg.L, block_sets_of(cfg)) {}

Codebook Codebook::with_sets(int K, int L, std::vector<Constellation> block_sets) {
    return Codebook(K, L, std::move(block_sets));
}

FrameSet Codebook::frames_at(std::uint64_t index) const {
    if (index >= size_)
        throw std::out_of_range("Codebook: index out of range");
    const int T = this->T();
    FrameSet fs;
    std::vector<std::vector<PskSymbol>> blocks(static_cast<std::size_t>(T));
    // Peel least-significant digit first: the last symbol of the last block.
    for (int b = T - 1; b >= 0; --b) {
        const Constellation& set = sets_[static_cast<std::size_t>(b)];
        std::vector<PskSymbol> blk;
        blk.reserve(static_cast<std::size_t>(K_));
        for (int i = 0; i < K_; ++i) {
            blk.push_back(set.symbol(static_cast<std::uint32_t>(index % set.size())));
            index /= set.size();
        }
        std::reverse(blk.begin(), blk.end());
        blocks[static_cast<std::size_t>(b)] = std::move(blk);
    }
    fs.x = std::move(blocks[0]);
    fs.y = std::move(blocks[1]);
    for (int b = 2; b < T; ++b)
        fs.z_blocks.push_back(std::move(blocks[static_cast<std::size_t>(b)]));
    return fs;
}

cmat Codebook::signal_matrix_at(std::uint64_t index) const {
    return build_signal_matrix(frames_at(index), L_).S;
}

int Codebook::count_symbol_differences(std::uint64_t a, std::uint64_t b) const {
    int diffs = 0;
    for (int blk = T() - 1; blk >= 0; --blk) {
        const std::uint64_t radix = sets_[static_cast<std::size_t>(blk)].size();
        for (int i = 0; i < K_; ++i) {
            if (a % radix != b % radix)
                ++diffs;
            a /= radix;
            b /= radix;
        }
    }
    return diffs;
}

double glrt_metric(const cvec& z, const cmat& S) {
    if (z.size() != S.rows())
        throw std::invalid_argument("glrt_metric: dimension mismatch");
    Eigen::ColPivHouseholderQR<cmat> qr(S);
    qr.setThreshold(kSingularValueEps);
    if (qr.rank() < S.cols())
        throw std::invalid_argument("glrt_metric: signal matrix is rank deficient");
    const cmat Q = qr.householderQ() * cmat::Identity(S.rows(), S.cols());
    return (Q.adjoint() * z).squaredNorm();
}

GlrtDecoder::GlrtDecoder(const Codebook& codebook, std::uint64_t cap) : codebook_(codebook) {
    if (codebook.size() > cap)
        throw ConfigTooLarge("codebook size " + std::to_string(codebook.size()) +
                             " exceeds the decode cap " + std::to_string(cap));
    const auto n = codebook.size();
    signals_.reserve(n);
    orthobases_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        cmat S = codebook.signal_matrix_at(i);
        Eigen::HouseholderQR<cmat> qr(S);
        orthobases_.push_back(qr.householderQ() * cmat::Identity(S.rows(), S.cols()));
        signals_.push_back(std::move(S));
    }
}

DecodeResult GlrtDecoder::decode(const cvec& z, int workers) const {
    const auto n = static_cast<std::uint64_t>(orthobases_.size());
    auto scan = [&](std::uint64_t begin, std::uint64_t end) {
        DecodeResult best{begin, -1.0};
        for (std::uint64_t i = begin; i < end; ++i) {
            const double metric = (orthobases_[i].adjoint() * z).squaredNorm();
            if (metric > best.metric) {
                best.metric = metric;
                best.index = i;
            }
        }
        return best;
    };

    if (workers <= 1 || n < 2 * static_cast<std::uint64_t>(workers))
        return scan(0, n);

    const auto w = static_cast<std::uint64_t>(workers);
    std::vector<DecodeResult> partial(w);
    std::vector<std::thread> pool;
    pool.reserve(w);
    const std::uint64_t chunk = (n + w - 1) / w;
    for (std::uint64_t t = 0; t < w; ++t) {
        const std::uint64_t begin = t * chunk;
        const std::uint64_t end = std::min(n, begin + chunk);
        pool.emplace_back([&, t, begin, end] { partial[t] = scan(begin, end); });
    }
    for (auto& th : pool)
        th.join();
    DecodeResult best = partial[0];
    for (std::uint64_t t = 1; t < w; ++t) {
        // Strict inequality keeps the lowest index on ties: chunks are scanned
        // in ascending index order.
        if (partial[t].metric > best.metric)
            best = partial[t];
    }
    return best;
}

std::pair<FrameSet, double> glrt_decode(const cvec& z, const Codebook& codebook,
                                        std::uint64_t cap) {
    GlrtDecoder decoder(codebook, cap);
    const DecodeResult r = decoder.decode(z);
    return {codebook.frames_at(r.index), r.metric};
}

RankReport verify_full_rank(const Codebook& codebook, std::uint64_t cap, double sv_threshold) {
    if (codebook.size() > cap)
        throw ConfigTooLarge("codebook size " + std::to_string(codebook.size()) +
                             " exceeds the pairwise rank cap " + std::to_string(cap));
    const auto n = codebook.size();
    const int L = codebook.L();
    RankReport report;
    report.full_rank = 2 * L;
    report.min_rank = 2 * L;  // vacuous value when there are no pairs

    std::vector<cmat> signals;
    signals.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        signals.push_back(codebook.signal_matrix_at(i));

    cmat stacked(codebook.PT(), 2 * L);
    for (std::uint64_t i = 0; i < n; ++i) {
        stacked.leftCols(L) = signals[i];
        for (std::uint64_t j = i + 1; j < n; ++j) {
            stacked.rightCols(L) = signals[j];
            Eigen::JacobiSVD<cmat> svd(stacked);
            const auto& sv = svd.singularValues();
            const double cutoff = sv_threshold * sv[0];
            int rank = 0;
            for (Eigen::Index s = 0; s < sv.size(); ++s)
                if (sv[s] > cutoff)
                    ++rank;
            ++report.pairs_checked;
            report.min_rank = std::min(report.min_rank, rank);
            if (rank < report.full_rank) {
                ++report.deficient_count;
                if (report.offending_pairs.size() < 16)
                    report.offending_pairs.emplace_back(i, j);
            }
        }
    }
    return report;
}

double check_determinant_identity(const std::vector<PskSymbol>& x, const cvec& z,
                                  const cvec& z_alt, int k) {
    const auto K = static_cast<int>(x.size());
    if (z.size() != K || z_alt.size() != K)
        throw std::invalid_argument("check_determinant_identity: payload lengths must match (K = L)");
    if (k < 1 || k > K)
        throw std::invalid_argument("check_determinant_identity: k must lie in [1, K]");
    for (int i = 0; i < k - 1; ++i)
        if (z[i] != z_alt[i])
            throw std::invalid_argument("check_determinant_identity: sequences must agree before k");
    if (z[k - 1] == z_alt[k - 1])
        throw std::invalid_argument("check_determinant_identity: sequences must differ at k");

    const cmat Tx = toeplitz_T(embed(x), K);
    const cmat Tz = toeplitz_T(z, K);
    const cmat Tz_alt = toeplitz_T(z_alt, K);

    cmat M(2 * K, 2 * K);
    M.topLeftCorner(K, K) = Tx.topRows(K);
    M.topRightCorner(K, K) = Tx.topRows(K);
    M.bottomLeftCorner(K, K) = Tz.middleRows(k - 1, K);
    M.bottomRightCorner(K, K) = Tz_alt.middleRows(k - 1, K);

    const cplx det = M.determinant();
    const cplx closed = std::pow(x[0].embed(), K) * std::pow(z_alt[k - 1] - z[k - 1], K);
    return std::abs(det - closed);
}

}  // namespace blindid
