#ifndef BLINDID_IDENTIFIER_HPP
#define BLINDID_IDENTIFIER_HPP

#include <stdexcept>
#include <vector>

#include "blindid/channel.hpp"

namespace blindid {

// Both received blocks are (numerically) zero; nothing can be recovered.
struct AllZeroReceived : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A step produced a value no coprime constellation pair can explain. On
// noise-free model-consistent input this cannot happen; it signals noise or a
// wrong (p, q) configuration.
struct DecompositionFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The first usable tap is too small relative to the received signal for the
// divisions in the recursion to be trustworthy.
struct NearZeroPivot : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Relative scale for "is this sample zero" decisions.
inline constexpr double kZeroEps = 1e-9;

// One record per recursion step m: the difference value w_m, its normalized
// angle and congruence index, the decomposition residual, and the magnitude
// of the tap innovation |h_{r+m-1}| (the order-detection observable).
struct StepTrace {
    int m = 0;
    cplx w{};
    double theta = 0.0;
    std::int64_t ell = 0;
    double residual = 0.0;
    double innovation = 0.0;
};

struct IdentificationResult {
    int leading_zeros = 0;           // r: taps h_0..h_{r-1} are exactly zero
    ChannelImpulseResponse taps;     // length L, trailing sub-threshold taps snapped to 0
    std::vector<PskSymbol> x_hat;    // recovered first payload
    std::vector<PskSymbol> y_hat;    // recovered second payload
    int effective_order = 0;         // detected channel length counted from tap r
    std::vector<StepTrace> trace;
};

// Largest r such that the first r sample products u_k * v_k all vanish
// (relative threshold eps_zero * max(|u|_inf, |v|_inf)). Throws
// AllZeroReceived when every product vanishes.
int detect_leading_zeros(const cvec& u, const cvec& v, double eps_zero = kZeroEps);

// Closed-form recovery of the channel taps and both payloads from the first
// two received blocks alone. In exact mode every step must reconstruct to
// machine-level tolerances; nearest mode rounds each step to the closest
// constellation point and reports residuals in the trace.
IdentificationResult identify(const cvec& u, const cvec& v, const FrameConfig& cfg,
                              DecomposeMode mode = DecomposeMode::exact);

// max over both blocks of |T(s_hat)*h_hat - received|_inf; the round-trip
// figure of merit for an identification result.
double reconstruct_residual(const IdentificationResult& result, const cvec& u, const cvec& v);

}  // namespace blindid

#endif
