#include "blindid/constellation.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace blindid {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::uint64_t euler_totient(std::uint64_t n) {
    if (n == 0)
        throw std::domain_error("euler_totient: n must be positive");
    // Standard factorization form: phi(n) = n * prod(1 - 1/p) over prime p | n.
    std::uint64_t result = n;
    std::uint64_t m = n;
    for (std::uint64_t p = 2; p * p <= m; ++p) {
        if (m % p != 0)
            continue;
        while (m % p == 0)
            m /= p;
        result -= result / p;
    }
    if (m > 1)
        result -= result / m;
    return result;
}

std::uint64_t mod_pow(std::uint64_t base, std::uint64_t exponent, std::uint64_t modulus) {
    if (modulus == 0)
        throw std::domain_error("mod_pow: modulus must be >= 1");
    if (modulus == 1)
        return 0;
    unsigned __int128 acc = 1;
    unsigned __int128 b = base % modulus;
    while (exponent > 0) {
        if (exponent & 1)
            acc = acc * b % modulus;
        b = b * b % modulus;
        exponent >>= 1;
    }
    return static_cast<std::uint64_t>(acc);
}

PskSymbol::PskSymbol(std::uint32_t index, std::uint32_t order) : index_(index), order_(order) {
    if (order == 0)
        throw std::domain_error("PskSymbol: order must be >= 1");
    if (index >= order)
        throw std::domain_error("PskSymbol: index " + std::to_string(index) +
                                " out of range for order " + std::to_string(order));
}

cplx PskSymbol::embed() const {
    return std::polar(1.0, kTwoPi * static_cast<double>(index_) / static_cast<double>(order_));
}

PskSymbol PskSymbol::operator*(const PskSymbol& rhs) const {
    if (order_ != rhs.order_)
        throw std::domain_error("PskSymbol: product requires matching orders");
    std::uint32_t idx = index_ + rhs.index_;
    if (idx >= order_)
        idx -= order_;
    return PskSymbol(idx, order_);
}

CoprimePair::CoprimePair(std::uint32_t p, std::uint32_t q) : p_(p), q_(q) {
    if (p < 2 || q < 2)
        throw std::invalid_argument("CoprimePair: p and q must be >= 2");
    if (std::gcd(p, q) != 1)
        throw std::invalid_argument("CoprimePair: p=" + std::to_string(p) + " and q=" +
                                    std::to_string(q) + " are not coprime");
    phi_p_ = static_cast<std::uint32_t>(euler_totient(p));
    phi_q_ = static_cast<std::uint32_t>(euler_totient(q));
    // Euler's theorem: q^(phi(p)-1) inverts q modulo p, and symmetrically.
    inv_q_mod_p_ = static_cast<std::uint32_t>(mod_pow(q, phi_p_ - 1, p));
    inv_p_mod_q_ = static_cast<std::uint32_t>(mod_pow(p, phi_q_ - 1, q));
}

std::pair<PskSymbol, PskSymbol> factor_product(std::uint64_t k, const CoprimePair& pair) {
    if (k >= pair.pq())
        throw std::domain_error("factor_product: k must lie in [0, pq)");
    auto x_idx = static_cast<std::uint32_t>(k * pair.inv_q_mod_p() % pair.p());
    auto y_idx = static_cast<std::uint32_t>(k * pair.inv_p_mod_q() % pair.q());
    return {PskSymbol(x_idx, pair.p()), PskSymbol(y_idx, pair.q())};
}

std::optional<DifferenceDecomposition>
decompose_difference(cplx w, const CoprimePair& pair, DecomposeMode mode,
                     const DecompositionTolerances& tol) {
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag()))
        throw std::invalid_argument("decompose_difference: w must be finite");

    const double mag = std::abs(w);
    if (mag <= tol.zero_threshold) {
        // x = y = 1 is the only zero difference when p and q are coprime.
        return DifferenceDecomposition{PskSymbol::unity(pair.p()), PskSymbol::unity(pair.q()),
                                       0, mag};
    }
    // Unit-modulus points differ by at most 2; leave reconstruction-level
    // slack so a legitimate w of magnitude exactly 2 survives upstream fp.
    if (mag > 2.0 + tol.tol_rec && mode == DecomposeMode::exact)
        return std::nullopt;

    const double pq = pair.pq();
    // theta normalized so that ell* = pq*(theta/pi - 1/2) lands in [0, 2pq).
    double theta = std::arg(w);
    if (theta < std::numbers::pi / 2.0)
        theta += kTwoPi;
    const double ell_star = pq * (theta / std::numbers::pi - 0.5);
    const auto rounded = std::llround(ell_star);
    if (mode == DecomposeMode::exact && std::abs(ell_star - static_cast<double>(rounded)) > tol.tol_int)
        return std::nullopt;

    const std::int64_t ell = rounded % static_cast<std::int64_t>(pair.pq());
    auto x_idx = static_cast<std::uint32_t>(static_cast<std::uint64_t>(ell) * pair.inv_q_mod_p() % pair.p());
    auto y_idx = static_cast<std::uint32_t>(static_cast<std::uint64_t>(ell) * pair.inv_p_mod_q() % pair.q());
    PskSymbol x(x_idx, pair.p());
    PskSymbol y(y_idx, pair.q());

    const double residual = std::abs(x.embed() - y.embed() - w);
    if (mode == DecomposeMode::exact && residual > tol.tol_rec)
        return std::nullopt;
    return DifferenceDecomposition{x, y, ell, residual};
}

Constellation::Constellation(std::uint32_t order, bool punctured)
    : order_(order), punctured_(punctured) {
    if (order == 0)
        throw std::domain_error("Constellation: order must be >= 1");
    if (punctured && order < 2)
        throw std::domain_error("Constellation: puncturing requires order >= 2");
}

Constellation Constellation::full(std::uint32_t order) { return Constellation(order, false); }

Constellation Constellation::punctured(std::uint32_t order) { return Constellation(order, true); }

PskSymbol Constellation::symbol(std::uint32_t i) const {
    if (i >= size())
        throw std::domain_error("Constellation: member index out of range");
    return PskSymbol(punctured_ ? i + 1 : i, order_);
}

bool Constellation::contains(const PskSymbol& s) const {
    if (s.order() != order_)
        return false;
    return !(punctured_ && s.index() == 0);
}

PskSymbol Constellation::nearest(cplx value, double* distance) const {
    // Angle rounding gives the closest point of the full alphabet directly.
    double frac = std::arg(value) / kTwoPi * static_cast<double>(order_);
    auto idx = static_cast<std::int64_t>(std::llround(frac)) % static_cast<std::int64_t>(order_);
    if (idx < 0)
        idx += order_;
    PskSymbol best(static_cast<std::uint32_t>(idx), order_);
    if (punctured_ && best.index() == 0) {
        // The deleted point won: fall back to the closer of its two neighbours.
        PskSymbol lo(1, order_);
        PskSymbol hi(order_ - 1, order_);
        best = std::abs(lo.embed() - value) <= std::abs(hi.embed() - value) ? lo : hi;
    }
    if (distance != nullptr)
        *distance = std::abs(best.embed() - value);
    return best;
}

Constellation puncture_constellation(std::uint32_t order) {
    return Constellation::punctured(order);
}

}  // namespace blindid
