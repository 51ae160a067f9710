#include "blindid/identifier.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace blindid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kUnitTol = 1e-6;  // slack on |w_1| = 1 in exact mode

double inf_norm(const cvec& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

int detect_leading_zeros(const cvec& u, const cvec& v, double eps_zero) {
    if (u.size() != v.size() || u.size() == 0)
        throw std::invalid_argument("detect_leading_zeros: u and v must have equal nonzero length");
    const double scale = std::max(inf_norm(u), inf_norm(v));
    const double tol = eps_zero * scale;
    int r = 0;
    while (r < u.size() && std::abs(u[r]) * std::abs(v[r]) <= tol)
        ++r;
    if (r == u.size())
        throw AllZeroReceived("received blocks carry no usable signal");
    return r;
}

IdentificationResult identify(const cvec& u, const cvec& v, const FrameConfig& cfg,
                              DecomposeMode mode) {
    const int P = cfg.P();
    const int K = cfg.K;
    const int L = cfg.L;
    if (u.size() != P || v.size() != P)
        throw std::invalid_argument("identify: blocks must have length P = K + L - 1");

    const double scale = std::max(inf_norm(u), inf_norm(v));
    const double zero_tol = kZeroEps * scale;
    const bool exact = (mode == DecomposeMode::exact);
    const CoprimePair& pair = cfg.pair;
    const double pq = pair.pq();

    const int r = detect_leading_zeros(u, v, kZeroEps);
    if (r >= L)
        throw DecompositionFailed("leading zero count " + std::to_string(r) +
                                  " exceeds the channel length bound");
    if (L - r > K)
        throw std::invalid_argument("identify: needs K >= L - r, got K=" + std::to_string(K) +
                                    ", L-r=" + std::to_string(L - r));

    IdentificationResult res;
    res.leading_zeros = r;
    res.taps.taps = cvec::Zero(L);
    res.x_hat.assign(static_cast<std::size_t>(K), PskSymbol::unity(pair.p()));
    res.y_hat.assign(static_cast<std::size_t>(K), PskSymbol::unity(pair.q()));

    auto& h = res.taps.taps;
    auto& x = res.x_hat;
    auto& y = res.y_hat;

    // First usable sample pair: u_{r+1} = h_r x_1, v_{r+1} = h_r y_1, so their
    // ratio w_1 = x_1 y_1^* is a pq-th root of unity and factors uniquely.
    if (std::abs(v[r]) <= zero_tol)
        throw DecompositionFailed("second block sample v_{r+1} vanishes while u_{r+1} does not");
    const cplx w1 = u[r] / v[r];
    if (exact && std::abs(std::abs(w1) - 1.0) > kUnitTol)
        throw DecompositionFailed("first sample ratio is not unit modulus");
    double theta1 = std::arg(w1);
    if (theta1 < 0.0)
        theta1 += kTwoPi;
    const double ell1_star = pq * theta1 / kTwoPi;
    std::int64_t ell1 = std::llround(ell1_star);
    if (exact && std::abs(ell1_star - static_cast<double>(ell1)) > 1e-6)
        throw DecompositionFailed("first sample ratio is not a pq-th root of unity");
    ell1 %= static_cast<std::int64_t>(pair.pq());

    auto [x1, y1_conj] = factor_product(static_cast<std::uint64_t>(ell1), pair);
    x[0] = x1;
    y[0] = y1_conj.conj();  // w_1 = x_1 y_1^*, so the factor pairs with y_1 conjugated
    const cplx x1c = std::conj(x1.embed());
    const cplx y1c = std::conj(y[0].embed());

    h[r] = x1c * u[r];
    if (std::abs(h[r]) <= zero_tol)
        throw NearZeroPivot("first usable tap |h_r| is below the relative threshold");
    const cplx pivot = h[r];

    res.trace.push_back({1, w1, theta1, ell1, std::abs(x1.embed() * y1c - w1), std::abs(h[r])});

    // Steps m = 2..L-r: each new sample pair pins one new tap and one new
    // symbol of each payload through the difference decomposition of
    //   w_m = x_1^* x_m - y_1^* y_m.
    for (int m = 2; m <= L - r; ++m) {
        cplx num_u = u[r + m - 1];
        cplx num_v = v[r + m - 1];
        for (int i = 1; i <= m - 2; ++i) {
            num_u -= h[r + i] * x[static_cast<std::size_t>(m - i - 1)].embed();
            num_v -= h[r + i] * y[static_cast<std::size_t>(m - i - 1)].embed();
        }
        const cplx wm = (x1c * num_u - y1c * num_v) / pivot;

        StepTrace step;
        step.m = m;
        step.w = wm;
        if (std::abs(wm) <= zero_tol) {
            x[static_cast<std::size_t>(m - 1)] = x[0];
            y[static_cast<std::size_t>(m - 1)] = y[0];
        } else {
            auto dec = decompose_difference(wm, pair, mode);
            if (!dec)
                throw DecompositionFailed("step " + std::to_string(m) +
                                          ": no constellation pair explains the difference value");
            x[static_cast<std::size_t>(m - 1)] = x[0] * dec->x;
            y[static_cast<std::size_t>(m - 1)] = y[0] * dec->y;
            step.theta = std::arg(wm);
            step.ell = dec->ell;
            step.residual = dec->residual;
        }
        h[r + m - 1] = x1c * (num_u - pivot * x[static_cast<std::size_t>(m - 1)].embed());
        step.innovation = std::abs(h[r + m - 1]);
        res.trace.push_back(step);
    }

    // Steps m = L-r+1..K: all taps are known, back-substitute for the
    // remaining symbols of both payloads.
    const Constellation xs = cfg.x_set();
    const Constellation ys = cfg.y_set();
    const DecompositionTolerances tol;
    for (int m = L - r + 1; m <= K; ++m) {
        cplx su = u[r + m - 1];
        cplx sv = v[r + m - 1];
        for (int i = 1; i <= L - 1 - r; ++i) {
            su -= h[r + i] * x[static_cast<std::size_t>(m - i - 1)].embed();
            sv -= h[r + i] * y[static_cast<std::size_t>(m - i - 1)].embed();
        }
        double dx = 0.0, dy = 0.0;
        x[static_cast<std::size_t>(m - 1)] = xs.nearest(su / pivot, &dx);
        y[static_cast<std::size_t>(m - 1)] = ys.nearest(sv / pivot, &dy);
        if (exact && (dx > tol.tol_rec || dy > tol.tol_rec))
            throw DecompositionFailed("back-substituted symbol at position " + std::to_string(m) +
                                      " is off-constellation");
    }

    // Order detection: the last tap whose innovation survives the relative
    // threshold bounds the true channel support; everything past it is noise
    // floor and snaps to exact zero.
    const double tap_scale = h.cwiseAbs().maxCoeff();
    int last = r;
    for (int j = r; j < L; ++j) {
        if (std::abs(h[j]) > kZeroEps * tap_scale)
            last = j;
        else
            h[j] = 0.0;
    }
    res.effective_order = last - r + 1;
    return res;
}

double reconstruct_residual(const IdentificationResult& result, const cvec& u, const cvec& v) {
    const int L = result.taps.length();
    const cvec uh = toeplitz_T(embed(result.x_hat), L) * result.taps.taps;
    const cvec vh = toeplitz_T(embed(result.y_hat), L) * result.taps.taps;
    return std::max(inf_norm(uh - u), inf_norm(vh - v));
}

}  // namespace blindid
