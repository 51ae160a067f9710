// Shared test helpers: independent oracles and near-miss variants of the
// identification recursion used as regression contrasts. Test-only code;
// nothing here is part of the library API.
#ifndef BLINDID_TESTS_SUPPORT_HPP
#define BLINDID_TESTS_SUPPORT_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "blindid/channel.hpp"
#include "blindid/identifier.hpp"

namespace testsupport {

using blindid::cplx;
using blindid::cvec;

// Brute-force totient: count gcds directly, no factorization shortcuts.
inline std::uint64_t brute_totient(std::uint64_t n) {
    std::uint64_t count = 0;
    for (std::uint64_t k = 1; k <= n; ++k) {
        std::uint64_t a = n, b = k;
        while (b != 0) {
            const std::uint64_t t = a % b;
            a = b;
            b = t;
        }
        if (a == 1)
            ++count;
    }
    return count;
}

inline cplx unit_root(std::uint64_t num, std::uint64_t den) {
    return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(num) /
                               static_cast<double>(den));
}

// All (i, j) with e(i/p)*e(j/q) equal to e(k/pq), found by exhaustive scan.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>>
product_factorizations(std::uint64_t k, std::uint32_t p, std::uint32_t q, double tol = 1e-9) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> hits;
    const cplx target = unit_root(k, static_cast<std::uint64_t>(p) * q);
    for (std::uint32_t i = 0; i < p; ++i)
        for (std::uint32_t j = 0; j < q; ++j)
            if (std::abs(unit_root(i, p) * unit_root(j, q) - target) < tol)
                hits.emplace_back(i, j);
    return hits;
}

// Schoolbook linear convolution, the oracle for every Toeplitz product.
inline cvec conv_full(const cvec& s, const cvec& h) {
    cvec out = cvec::Zero(s.size() + h.size() - 1);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        for (Eigen::Index j = 0; j < h.size(); ++j)
            out[i + j] += s[i] * h[j];
    return out;
}

struct LiteralResult {
    cvec taps;
    std::vector<blindid::PskSymbol> x, y;
};

// The tap/symbol recursion with switches at the two spots where a slip still
// yields plausible-looking algebra:
//  - y_sum_uses_y: the running sum inside the second-block difference term
//    uses the y symbols; off, it wrongly reuses the x symbols;
//  - subtract_pivot_term: the tap update subtracts h_r * x_m; off, that term
//    is wrongly omitted.
// With both switches on this mirrors blindid::identify; with either off it
// produces a near-miss variant kept as a regression contrast.
inline std::optional<LiteralResult>
run_recursion_variant(const cvec& u, const cvec& v, const blindid::FrameConfig& cfg,
                      bool y_sum_uses_y, bool subtract_pivot_term) {
    using blindid::PskSymbol;
    const int K = cfg.K, L = cfg.L;
    const blindid::CoprimePair& pair = cfg.pair;

    const int r = blindid::detect_leading_zeros(u, v);
    if (r >= L || L - r > K)
        return std::nullopt;

    LiteralResult res;
    res.taps = cvec::Zero(L);
    res.x.assign(static_cast<std::size_t>(K), PskSymbol::unity(pair.p()));
    res.y.assign(static_cast<std::size_t>(K), PskSymbol::unity(pair.q()));

    const cplx w1 = u[r] / v[r];
    double theta1 = std::arg(w1);
    if (theta1 < 0.0)
        theta1 += 2.0 * std::numbers::pi;
    const auto ell1 = static_cast<std::uint64_t>(
        std::llround(pair.pq() * theta1 / (2.0 * std::numbers::pi)) %
        static_cast<std::int64_t>(pair.pq()));
    auto [x1, y1c_sym] = blindid::factor_product(ell1, pair);
    res.x[0] = x1;
    res.y[0] = y1c_sym.conj();
    const cplx x1c = std::conj(x1.embed());
    const cplx y1c = std::conj(res.y[0].embed());
    res.taps[r] = x1c * u[r];
    const cplx pivot = res.taps[r];

    for (int m = 2; m <= L - r; ++m) {
        cplx num_u = u[r + m - 1];
        cplx num_v = v[r + m - 1];
        for (int i = 1; i <= m - 2; ++i) {
            num_u -= res.taps[r + i] * res.x[static_cast<std::size_t>(m - i - 1)].embed();
            num_v -= res.taps[r + i] * (y_sum_uses_y
                                            ? res.y[static_cast<std::size_t>(m - i - 1)].embed()
                                            : res.x[static_cast<std::size_t>(m - i - 1)].embed());
        }
        const cplx wm = (x1c * num_u - y1c * num_v) / pivot;
        if (std::abs(wm) > 1e-7) {
            auto dec = blindid::decompose_difference(wm, pair, blindid::DecomposeMode::exact);
            if (!dec)
                return std::nullopt;
            res.x[static_cast<std::size_t>(m - 1)] = res.x[0] * dec->x;
            res.y[static_cast<std::size_t>(m - 1)] = res.y[0] * dec->y;
        } else {
            res.x[static_cast<std::size_t>(m - 1)] = res.x[0];
            res.y[static_cast<std::size_t>(m - 1)] = res.y[0];
        }
        cplx acc = num_u;
        if (subtract_pivot_term)
            acc -= pivot * res.x[static_cast<std::size_t>(m - 1)].embed();
        res.taps[r + m - 1] = x1c * acc;
    }

    const blindid::Constellation xs = cfg.x_set();
    const blindid::Constellation ys = cfg.y_set();
    for (int m = L - r + 1; m <= K; ++m) {
        cplx su = u[r + m - 1];
        cplx sv = v[r + m - 1];
        for (int i = 1; i <= L - 1 - r; ++i) {
            su -= res.taps[r + i] * res.x[static_cast<std::size_t>(m - i - 1)].embed();
            sv -= res.taps[r + i] * res.y[static_cast<std::size_t>(m - i - 1)].embed();
        }
        res.x[static_cast<std::size_t>(m - 1)] = xs.nearest(su / pivot);
        res.y[static_cast<std::size_t>(m - 1)] = ys.nearest(sv / pivot);
    }
    return res;
}

// Uniform random payloads plus a unit-ish random channel, transmitted
// noise-free; the canonical round-trip fixture.
struct Instance {
    blindid::ChannelImpulseResponse h;
    blindid::FrameSet frames;
    blindid::ReceivedFrame rx;
};

inline Instance make_instance(const blindid::FrameConfig& cfg, blindid::rng_t& rng) {
    Instance inst;
    inst.h = blindid::sample_channel(cfg.L, rng);
    inst.frames = blindid::sample_frames(cfg, rng);
    inst.rx = blindid::transmit(inst.frames, inst.h, 0.0, rng);
    return inst;
}

inline bool recovered_exactly(const blindid::IdentificationResult& res, const Instance& inst,
                              double tol = 1e-9) {
    if ((res.taps.taps - inst.h.taps).cwiseAbs().maxCoeff() > tol)
        return false;
    for (std::size_t i = 0; i < inst.frames.x.size(); ++i)
        if (!(res.x_hat[i] == inst.frames.x[i]) || !(res.y_hat[i] == inst.frames.y[i]))
            return false;
    return true;
}

}  // namespace testsupport

#endif
