#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "keycal/codec.hpp"

using namespace keycal;

namespace {

const PlaneSize kDims(16, 16);

ImageGrid render(const PlaneSize& dims, const std::function<double(double, double)>& f) {
    ImageGrid g(dims, 1);
    for (int y = 0; y < dims.height_px(); ++y)
        for (int x = 0; x < dims.width_px(); ++x) g.at(x, y) = f(x, y);
    return g;
}

// Stationary point of the quadratic model q(d) = g.d + d'Hd / 2, found by
// repeated grid search on a shrinking window for the smallest |g + Hd|_1.
Point stationary_point(const Eigen::Vector2d& g, const Eigen::Matrix2d& H) {
    const auto q = [&](const Eigen::Vector2d& d) { return -(g + H * d).lpNorm<1>(); };
    Eigen::Vector2d best = Eigen::Vector2d::Zero();
    double half = 2.0;
    for (int iter = 0; iter < 60; ++iter) {
        Eigen::Vector2d center = best;
        double best_q = q(best);
        for (int j = -10; j <= 10; ++j) {
            for (int i = -10; i <= 10; ++i) {
                const Eigen::Vector2d d = center + half / 10.0 * Eigen::Vector2d(i, j);
                if (const double v = q(d); v > best_q) {
                    best_q = v;
                    best = d;
                }
            }
        }
        half *= 0.5;
    }
    return best;
}

}  // namespace

TEST(Ccrf, OffsetsPointAtKeypoint) {
    const CcrfMaps t = encode_ccrf(Point(5.3, 7.8), kDims, 3.0);
    EXPECT_EQ(t.c.at(5, 8), 1.0);
    EXPECT_NEAR(t.x_off.at(5, 8), 0.3, 1e-15);
    EXPECT_NEAR(t.y_off.at(5, 8), -0.2, 1e-15);
    EXPECT_EQ(t.c.at(9, 8), 0.0);
    EXPECT_EQ(t.x_off.at(9, 8), 0.0);
}

TEST(Ccrf, DiscBoundaryIsExclusive) {
    const CcrfMaps t = encode_ccrf(Point(5.0, 5.0), kDims, 2.0);
    EXPECT_EQ(t.c.at(7, 5), 0.0);
    EXPECT_EQ(t.c.at(6, 6), 1.0);
    double area = 0.0;
    for (double v : t.c.data()) area += v;
    EXPECT_EQ(area, 9.0);
}

TEST(Ccrf, EncodeOutsidePlaneThrows) {
    EXPECT_THROW(encode_ccrf(Point(-0.1, 3.0), kDims, 2.0), OutOfBoundsError);
    EXPECT_THROW(encode_ccrf(Point(3.0, 15.01), kDims, 2.0), OutOfBoundsError);
    EXPECT_THROW(encode_ccrf(Point(3.0, 3.0), kDims, 0.0), std::invalid_argument);
}

TEST(Ccrf, DecodeWithoutResponseThrows) {
    CcrfMaps t = encode_ccrf(Point(5.0, 5.0), kDims, 2.0);
    t.c = ImageGrid(kDims, 1);
    EXPECT_THROW(decode_ccrf(t), NoDetectionError);
}

TEST(CcrfProperty, RoundTripIsExact) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 15.0);
    for (int i = 0; i < 2000; ++i) {
        const Point k(u(rng), u(rng));
        EXPECT_LT((decode_ccrf(encode_ccrf(k, kDims, 1.5)).k - k).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(CcrfProperty, FlipCommutesWithEncoding) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 15.0);
    for (int i = 0; i < 200; ++i) {
        const Point k(u(rng), u(rng));
        const Point decoded = decode_ccrf(flip_ccrf(encode_ccrf(k, kDims, 2.5))).k;
        EXPECT_NEAR(decoded.x(), 15.0 - k.x(), 1e-12);
        EXPECT_NEAR(decoded.y(), k.y(), 1e-12);
    }
}

TEST(Ccrf, GridRoundTripAndLoss) {
    const CcrfMaps t = encode_ccrf(Point(4.2, 9.9), kDims, 3.0);
    const CcrfMaps back = ccrf_from_grid(ccrf_to_grid(t), 3.0);
    EXPECT_EQ(back.c, t.c);
    EXPECT_EQ(back.x_off, t.x_off);
    EXPECT_EQ(loss_ccrf(back, t), 0.0);

    CcrfMaps off = t;
    off.x_off.at(0, 0) = 5.0;  // outside the disc: masked out
    EXPECT_EQ(loss_ccrf(off, t), 0.0);
    off.x_off.at(4, 10) += 0.5;
    EXPECT_DOUBLE_EQ(loss_ccrf(off, t), 0.5);
    EXPECT_THROW(ccrf_from_grid(t.c), std::invalid_argument);
}

TEST(Gaussian, PeakAndSymmetry) {
    const GaussianTarget t = encode_gaussian(Point(6.0, 4.0), kDims, 2.0);
    EXPECT_EQ(t.c.at(6, 4), 1.0);
    EXPECT_DOUBLE_EQ(t.c.at(8, 4), std::exp(-0.5));
    EXPECT_EQ(t.c.at(4, 4), t.c.at(8, 4));
    EXPECT_GT(t.c.at(15, 15), 0.0);
    EXPECT_THROW(encode_gaussian(Point(16.0, 0.0), kDims), OutOfBoundsError);
}

TEST(Gaussian, MseLoss) {
    const ImageGrid a = encode_gaussian(Point(6.0, 4.0), kDims).c;
    ImageGrid b = a;
    b.at(1, 1) += 3.0;
    b.at(2, 1) -= 4.0;
    EXPECT_DOUBLE_EQ(loss_mse(b, a), 5.0);
    EXPECT_THROW(loss_mse(a, ImageGrid(PlaneSize(3, 3), 1)), std::invalid_argument);
}

TEST(Argmax, FirstMaximumInRowMajorOrder) {
    ImageGrid g(PlaneSize(4, 3), 1);
    g.at(3, 0) = 1.0;
    g.at(0, 2) = 1.0;
    EXPECT_EQ(argmax_node(g), Eigen::Vector2i(3, 0));
    EXPECT_EQ(decode_argmax(g).k, Point(3.0, 0.0));
}

TEST(Dark, RecoversSubPixelCenter) {
    const DecodeResult r = decode_dark(encode_gaussian(Point(5.37, 8.21), kDims, 2.0).c);
    EXPECT_FALSE(r.degenerate);
    EXPECT_EQ(r.argmax, Eigen::Vector2i(5, 8));
    EXPECT_NEAR(r.k.x(), 5.37, 1e-3);
    EXPECT_NEAR(r.k.y(), 8.21, 1e-3);
}

TEST(Dark, MatchesBruteForceQuadraticMaximum) {
    // Skewed, correlated peak: log c is not quadratic, so the Newton step
    // differs from the true mode but must equal the model's maximizer.
    const auto f = [](double x, double y) {
        const double dx = x - 7.3, dy = y - 6.6;
        return std::exp(-(dx * dx / 8.0 + dy * dy / 4.5 + 0.1 * dx * dy) + 0.01 * dx * dx * dx);
    };
    const ImageGrid c = render(kDims, f);
    const DecodeResult r = decode_dark(c);
    ASSERT_FALSE(r.degenerate);

    const int x = r.argmax.x(), y = r.argmax.y();
    const auto l = [&](int i, int j) { return std::log(c.at(x + i, y + j)); };
    const Eigen::Vector2d g(0.5 * (l(1, 0) - l(-1, 0)), 0.5 * (l(0, 1) - l(0, -1)));
    Eigen::Matrix2d H;
    H(0, 0) = l(1, 0) - 2 * l(0, 0) + l(-1, 0);
    H(1, 1) = l(0, 1) - 2 * l(0, 0) + l(0, -1);
    H(0, 1) = H(1, 0) = 0.25 * (l(1, 1) - l(1, -1) - l(-1, 1) + l(-1, -1));

    const Point expected = r.argmax.cast<double>() + stationary_point(g, H);
    EXPECT_NEAR(r.k.x(), expected.x(), 1e-9);
    EXPECT_NEAR(r.k.y(), expected.y(), 1e-9);
}

TEST(DarkProperty, ExactGaussiansDecodeWithinTolerance) {
    const PlaneSize dims(48, 64);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ux(3.0, 44.0), uy(3.0, 60.0);
    for (int i = 0; i < 1000; ++i) {
        const Point k(ux(rng), uy(rng));
        const DecodeResult r = decode_dark(encode_gaussian(k, dims, 2.0).c);
        EXPECT_FALSE(r.degenerate);
        EXPECT_LT((r.k - k).cwiseAbs().maxCoeff(), 1e-3);
    }
}

TEST(Dark, FallsBackOnFlatOrBorderPeaks) {
    const ImageGrid flat = render(kDims, [](double, double) { return 1.0; });
    DecodeResult r = decode_dark(flat);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.k, Point(0.0, 0.0));

    r = decode_dark(encode_gaussian(Point(0.2, 7.0), kDims).c);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.k, Point(0.0, 7.0));

    ImageGrid holes = encode_gaussian(Point(7.0, 7.0), kDims).c;
    holes.at(8, 7) = 0.0;
    EXPECT_TRUE(decode_dark(holes).degenerate);

    // A saddle: not negative definite.
    ImageGrid saddle = render(kDims, [](double, double) { return std::exp(-10.0); });
    saddle.at(7, 7) = 1.0;
    for (auto [i, j] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) saddle.at(7 + i, 7 + j) = std::exp(-0.1);
    saddle.at(8, 8) = saddle.at(6, 6) = std::exp(-0.05);
    saddle.at(8, 6) = saddle.at(6, 8) = std::exp(-5.0);
    r = decode_dark(saddle);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.k, Point(7.0, 7.0));
}

TEST(BiasedQuarter, ShiftsTowardLargerNeighbour) {
    DecodeResult r = decode_biased_quarter(encode_gaussian(Point(5.3, 7.8), kDims).c);
    EXPECT_EQ(r.k, Point(5.25, 7.75));
    r = decode_biased_quarter(encode_gaussian(Point(5.0, 8.0), kDims).c);
    EXPECT_EQ(r.k, Point(5.25, 8.25));
}

TEST(BiasedQuarter, OneSidedDifferenceAtBorder) {
    DecodeResult r = decode_biased_quarter(encode_gaussian(Point(0.0, 15.0), kDims).c);
    EXPECT_EQ(r.k, Point(-0.25, 15.25));
    r = decode_biased_quarter(encode_gaussian(Point(15.0, 0.2), kDims).c);
    EXPECT_EQ(r.k, Point(15.25, -0.25));
}

TEST(BiasedQuarter, ErrorMomentsMatchQuadrature) {
    // Midpoint quadrature over the fractional part u of the keypoint.
    constexpr int kN = 4000;
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < kN; ++i) {
        const double u = (i + 0.5) / kN;
        const Point k(6.0 + u, 7.0);
        const double e = std::abs(decode_biased_quarter(encode_gaussian(k, kDims).c).k.x() - k.x());
        m1 += e / kN;
        m2 += e * e / kN;
    }
    EXPECT_NEAR(m1, 1.0 / 8.0, 1e-6);
    EXPECT_NEAR(m2 - m1 * m1, 1.0 / 192.0, 1e-6);
}
