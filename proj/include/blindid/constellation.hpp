#ifndef BLINDID_CONSTELLATION_HPP
#define BLINDID_CONSTELLATION_HPP

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>

namespace blindid {

using cplx = std::complex<double>;

// Number of integers in [1, n] coprime to n. Throws std::domain_error for n == 0.
std::uint64_t euler_totient(std::uint64_t n);

// base^exponent mod modulus without intermediate overflow (modulus >= 1).
std::uint64_t mod_pow(std::uint64_t base, std::uint64_t exponent, std::uint64_t modulus);

// One point of an n-PSK constellation, stored as an integer residue so that
// all symbol algebra (products, conjugates) is exact. The complex value
// exp(j*2*pi*index/order) is materialized only where a signal needs it.
class PskSymbol {
public:
    PskSymbol(std::uint32_t index, std::uint32_t order);

    static PskSymbol unity(std::uint32_t order) { return PskSymbol(0, order); }

    std::uint32_t index() const { return index_; }
    std::uint32_t order() const { return order_; }

    cplx embed() const;

    PskSymbol conj() const { return PskSymbol(index_ == 0 ? 0 : order_ - index_, order_); }

    // Rotation by another symbol of the same order (residue addition).
    PskSymbol operator*(const PskSymbol& rhs) const;

    bool operator==(const PskSymbol&) const = default;

private:
    std::uint32_t index_;
    std::uint32_t order_;
};

// A validated coprime pair (p, q) with the precomputed number-theoretic data
// used by the product/difference decompositions: Euler totients and the
// modular inverses q^(phi(p)-1) mod p and p^(phi(q)-1) mod q.
class CoprimePair {
public:
    CoprimePair(std::uint32_t p, std::uint32_t q);

    std::uint32_t p() const { return p_; }
    std::uint32_t q() const { return q_; }
    std::uint32_t pq() const { return p_ * q_; }
    std::uint32_t phi_p() const { return phi_p_; }
    std::uint32_t phi_q() const { return phi_q_; }
    std::uint32_t inv_q_mod_p() const { return inv_q_mod_p_; }
    std::uint32_t inv_p_mod_q() const { return inv_p_mod_q_; }

private:
    std::uint32_t p_, q_;
    std::uint32_t phi_p_, phi_q_;
    std::uint32_t inv_q_mod_p_, inv_p_mod_q_;
};

// Unique (x, y) with x in p-PSK, y in q-PSK and x*y = exp(j*2*pi*k/(p*q)).
// Requires 0 <= k < p*q.
std::pair<PskSymbol, PskSymbol> factor_product(std::uint64_t k, const CoprimePair& pair);

struct DifferenceDecomposition {
    PskSymbol x;        // p-PSK point
    PskSymbol y;        // q-PSK point
    std::int64_t ell;   // congruence index in [0, pq)
    double residual;    // |embed(x) - embed(y) - w|
};

enum class DecomposeMode {
    exact,    // require an integral index and a tight reconstruction
    nearest   // round unconditionally and report the residual
};

struct DecompositionTolerances {
    double zero_threshold = 1e-12;  // |w| below this is treated as w = 0
    double tol_int = 1e-6;          // integrality slack for the rounded index
    double tol_rec = 1e-9;          // reconstruction bound |x - y - w|
};

// Solve x - y = w over a coprime p-PSK / q-PSK pair. Returns std::nullopt when
// no decomposition exists (exact mode: non-integral index, reconstruction
// mismatch, or |w| > 2 which no pair of unit-modulus points can reach).
std::optional<DifferenceDecomposition>
decompose_difference(cplx w, const CoprimePair& pair, DecomposeMode mode,
                     const DecompositionTolerances& tol = {});

// An n-PSK alphabet, optionally with the point 1 removed.
class Constellation {
public:
    static Constellation full(std::uint32_t order);
    static Constellation punctured(std::uint32_t order);  // order >= 2

    std::uint32_t order() const { return order_; }
    bool is_punctured() const { return punctured_; }
    std::uint32_t size() const { return punctured_ ? order_ - 1 : order_; }

    PskSymbol symbol(std::uint32_t i) const;       // i-th member, i in [0, size)
    bool contains(const PskSymbol& s) const;

    // Closest member to an arbitrary complex value; optionally reports the
    // Euclidean distance to it.
    PskSymbol nearest(cplx value, double* distance = nullptr) const;

private:
    Constellation(std::uint32_t order, bool punctured);
    std::uint32_t order_;
    bool punctured_;
};

// The alphabet with the shared point 1 deleted (order >= 2).
Constellation puncture_constellation(std::uint32_t order);

}  // namespace blindid

#endif
