#include <doctest.h>

#include <cmath>

#include "blindid/channel.hpp"
#include "support.hpp"

using namespace blindid;

TEST_CASE("toeplitz_T layout and convolution oracle") {
    cvec one(1);
    one << cplx(1.0, 0.0);
    const cmat t1 = toeplitz_T(one, 2);
    CHECK(t1.rows() == 2);
    CHECK(t1.cols() == 2);
    CHECK(t1.isApprox(cmat::Identity(2, 2)));

    cvec s(2);
    s << cplx(2.0, 1.0), cplx(-1.0, 3.0);
    const cmat t2 = toeplitz_T(s, 2);
    REQUIRE(t2.rows() == 3);
    CHECK(t2(0, 0) == s[0]);
    CHECK(t2(0, 1) == cplx(0.0, 0.0));
    CHECK(t2(1, 0) == s[1]);
    CHECK(t2(1, 1) == s[0]);
    CHECK(t2(2, 0) == cplx(0.0, 0.0));
    CHECK(t2(2, 1) == s[1]);

    rng_t rng(42);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int K = 1 + static_cast<int>(rng() % 8);
        const int L = 1 + static_cast<int>(rng() % 8);
        cvec sr(K), hr(L);
        for (int i = 0; i < K; ++i)
            sr[i] = cplx(n(rng), n(rng));
        for (int i = 0; i < L; ++i)
            hr[i] = cplx(n(rng), n(rng));
        const cvec via_toeplitz = toeplitz_T(sr, L) * hr;
        const cvec via_conv = testsupport::conv_full(sr, hr);
        CHECK((via_toeplitz - via_conv).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("toeplitz_H layout and the Hs = T(s)h identity") {
    ChannelImpulseResponse id1;
    id1.taps = cvec::Ones(1);
    CHECK(toeplitz_H(id1, 3).isApprox(cmat::Identity(3, 3)));

    ChannelImpulseResponse h2;
    h2.taps = cvec(2);
    h2.taps << cplx(0.5, -0.25), cplx(1.5, 2.0);
    const cmat H = toeplitz_H(h2, 2);
    REQUIRE(H.rows() == 3);
    CHECK(H(0, 0) == h2.taps[0]);
    CHECK(H(0, 1) == cplx(0.0, 0.0));
    CHECK(H(1, 0) == h2.taps[1]);
    CHECK(H(1, 1) == h2.taps[0]);
    CHECK(H(2, 0) == cplx(0.0, 0.0));
    CHECK(H(2, 1) == h2.taps[1]);

    rng_t rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int K = 1 + static_cast<int>(rng() % 8);
        const int L = 1 + static_cast<int>(rng() % 8);
        cvec s(K);
        ChannelImpulseResponse h;
        h.taps = cvec(L);
        for (int i = 0; i < K; ++i)
            s[i] = cplx(n(rng), n(rng));
        for (int i = 0; i < L; ++i)
            h.taps[i] = cplx(n(rng), n(rng));
        CHECK((toeplitz_H(h, K) * s - toeplitz_T(s, L) * h.taps).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("sample_channel statistics and determinism") {
    rng_t rng(123);
    const int draws = 100000;
    double mean_re = 0.0, mean_im = 0.0, var = 0.0;
    for (int i = 0; i < draws; ++i) {
        const ChannelImpulseResponse h = sample_channel(1, rng);
        mean_re += h.taps[0].real();
        mean_im += h.taps[0].imag();
        var += std::norm(h.taps[0]);
    }
    mean_re /= draws;
    mean_im /= draws;
    var /= draws;
    // Component std of the mean is sqrt(0.5/draws) ~ 0.0022; allow 3 sigma.
    CHECK(std::abs(mean_re) < 0.0068);
    CHECK(std::abs(mean_im) < 0.0068);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));

    rng_t a(99), b(99);
    const ChannelImpulseResponse ha = sample_channel(4, a);
    const ChannelImpulseResponse hb = sample_channel(4, b);
    CHECK(ha.taps.cwiseEqual(hb.taps).all());
    CHECK(ha.length() == 4);
}

TEST_CASE("FrameConfig validation and derived sets") {
    const FrameConfig cfg(4, 2, 3, CoprimePair(2, 3), 2, false);
    CHECK(cfg.P() == 5);
    CHECK(cfg.x_set().size() == 2);
    CHECK(cfg.y_set().size() == 3);
    CHECK(cfg.z_set().size() == 2);

    const FrameConfig punct(4, 2, 2, CoprimePair(4, 9), 2, true);
    CHECK(punct.y_set().size() == 8);
    CHECK(punct.y_set().is_punctured());

    CHECK_THROWS_AS(FrameConfig(0, 2, 2, CoprimePair(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(FrameConfig(2, 0, 2, CoprimePair(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(FrameConfig(2, 2, 1, CoprimePair(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(FrameConfig(2, 2, 2, CoprimePair(2, 3), 0), std::invalid_argument);
}

TEST_CASE("sample_frames draws in-alphabet symbols") {
    const FrameConfig cfg(3, 2, 4, CoprimePair(2, 3), 4, true);
    rng_t rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const FrameSet fs = sample_frames(cfg, rng);
        REQUIRE(fs.x.size() == 3);
        REQUIRE(fs.y.size() == 3);
        REQUIRE(fs.z_blocks.size() == 2);
        CHECK(fs.block_count() == 4);
        for (const auto& s : fs.x)
            CHECK(cfg.x_set().contains(s));
        for (const auto& s : fs.y) {
            CHECK(cfg.y_set().contains(s));
            CHECK(s.index() != 0);  // punctured alphabet never yields 1
        }
        for (const auto& blk : fs.z_blocks)
            for (const auto& s : blk)
                CHECK(cfg.z_set().contains(s));
        CHECK(&fs.block(0) == &fs.x);
        CHECK(&fs.block(1) == &fs.y);
        CHECK(&fs.block(2) == &fs.z_blocks[0]);
        CHECK(&fs.block(3) == &fs.z_blocks[1]);
    }
}

TEST_CASE("transmit: identity channel, convolution oracle, zero padding") {
    const FrameConfig cfg(4, 2, 2, CoprimePair(2, 3));
    rng_t rng(17);
    const FrameSet fs = sample_frames(cfg, rng);

    ChannelImpulseResponse unit;
    unit.taps = cvec(2);
    unit.taps << cplx(1.0, 0.0), cplx(0.0, 0.0);
    const ReceivedFrame direct = transmit(fs, unit, 0.0, rng);
    REQUIRE(direct.blocks.size() == 2);
    REQUIRE(direct.blocks[0].size() == 5);
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(direct.blocks[0][i] - fs.x[static_cast<std::size_t>(i)].embed()) < 1e-15);
    CHECK(std::abs(direct.blocks[0][4]) == 0.0);

    const ChannelImpulseResponse h = sample_channel(2, rng);
    const ReceivedFrame rx = transmit(fs, h, 0.0, rng);
    for (int b = 0; b < 2; ++b) {
        const cvec oracle = testsupport::conv_full(embed(fs.block(b)), h.taps);
        CHECK((rx.blocks[static_cast<std::size_t>(b)] - oracle).cwiseAbs().maxCoeff() < 1e-12);
    }

    // Zero padding isolates blocks: one long convolution of the padded
    // concatenation equals the per-block outputs.
    cvec padded(2 * cfg.P());
    padded.setZero();
    padded.segment(0, 4) = embed(fs.x);
    padded.segment(cfg.P(), 4) = embed(fs.y);
    const cvec longconv = testsupport::conv_full(padded, h.taps);
    CHECK((longconv.segment(0, cfg.P()) - rx.blocks[0]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((longconv.segment(cfg.P(), cfg.P()) - rx.blocks[1]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transmit noise statistics and determinism") {
    const FrameConfig cfg(8, 1, 2, CoprimePair(2, 3));
    rng_t rng(31);
    const FrameSet fs = sample_frames(cfg, rng);
    ChannelImpulseResponse unit;
    unit.taps = cvec::Ones(1);

    const double sigma2 = 0.5;
    double acc = 0.0;
    std::uint64_t count = 0;
    for (int trial = 0; trial < 7000; ++trial) {
        const ReceivedFrame rx = transmit(fs, unit, sigma2, rng);
        for (int b = 0; b < 2; ++b) {
            const cvec clean = embed(fs.block(b));  // L = 1: no padding samples
            acc += (rx.blocks[static_cast<std::size_t>(b)] - clean).squaredNorm();
            count += static_cast<std::uint64_t>(clean.size());
        }
    }
    CHECK(acc / static_cast<double>(count) == doctest::Approx(sigma2).epsilon(0.05));

    rng_t r1(77), r2(77);
    const ReceivedFrame a = transmit(fs, unit, 0.3, r1);
    const ReceivedFrame b = transmit(fs, unit, 0.3, r2);
    for (std::size_t i = 0; i < a.blocks.size(); ++i)
        CHECK(a.blocks[i].cwiseEqual(b.blocks[i]).all());
}
