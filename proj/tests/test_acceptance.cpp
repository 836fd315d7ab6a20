// Acceptance suite: one test per criterion, plus a PASS/FAIL summary line for
// each printed after the gtest run.

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "keycal/biaslab.hpp"
#include "keycal/codec.hpp"
#include "keycal/pipeline.hpp"
#include "keycal/raster.hpp"

using namespace keycal;

namespace {

struct Outcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

std::map<int, Outcome>& outcomes() {
    static std::map<int, Outcome> m;
    return m;
}

void record(int id, const std::string& name, bool passed, const std::string& detail) {
    outcomes()[id] = {name, passed, detail};
    EXPECT_TRUE(passed) << "criterion " << id << " (" << name << "): " << detail;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

PipelineConfig config(Convention conv, bool ft, Compensation comp, CodecKind codec) {
    PipelineConfig c;
    c.convention = conv;
    c.flip_test = ft;
    c.compensation = comp;
    c.codec = codec;
    return c;
}

struct Draw {
    Roi roi;
    PipelineConfig cfg;
};

Draw random_draw(std::mt19937_64& rng, Convention conv) {
    std::uniform_real_distribution<double> pos(-500.0, 1500.0), ext(5.0, 800.0);
    std::uniform_int_distribution<int> out(2, 160), stride(1, 8);
    const int wo = out(rng), ho = out(rng), s = stride(rng);
    PipelineConfig c;
    c.convention = conv;
    c.input = PlaneSize(wo * s, ho * s);
    c.output = PlaneSize(wo, ho);
    return {Roi::make(pos(rng), pos(rng), ext(rng), ext(rng)), c};
}

constexpr std::int64_t kTrials = 100000;
constexpr std::uint64_t kSeed = 20200720;

}  // namespace

TEST(Acceptance, C01_UnbiasedClosure) {
    const Stopwatch sw;
    std::mt19937_64 rng(1);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Draw d = random_draw(rng, i % 2 ? Convention::PixelCount : Convention::UnitLength);
        const Transform2D chain = output_to_source(d.roi, d.cfg) * input_to_output(d.cfg) * test_transform(d.roi, d.cfg);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        const Point p(d.roi.cx + d.roi.w * u(rng), d.roi.cy + d.roi.h * u(rng));
        worst = std::max(worst, (apply_point(chain, p) - p).norm());
    }
    const double t = sw.seconds();
    record(1, "unbiased closure", worst < 1e-9 && t < 1.0, fmt("max point error %.3g, %.3f s", worst, t));
}

TEST(Acceptance, C02_FlipAlignment) {
    const Stopwatch sw;
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Draw d = random_draw(rng, Convention::UnitLength);
        const Transform2D io = input_to_output(d.cfg);
        std::uniform_real_distribution<double> ux(0.0, d.cfg.input.width_units()), uy(0.0, d.cfg.input.height_units());
        const Point k_i(ux(rng), uy(rng));
        const Point k_o = apply_point(io, k_i);
        const Point k_o_flip = apply_point(t_flip(d.cfg.output.width_units()),
                                           apply_point(io, apply_point(t_flip(d.cfg.input.width_units()), k_i)));
        worst = std::max(worst, (k_o_flip - k_o).cwiseAbs().maxCoeff());
    }
    const double t = sw.seconds();
    record(2, "flip alignment (unit length)", worst < 1e-9 && t < 1.0, fmt("max |k'_o - k_o| %.3g, %.3f s", worst, t));
}

TEST(Acceptance, C03_BiasedFlipOffset) {
    const Stopwatch sw;
    std::mt19937_64 rng(3);
    double identity = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const PipelineConfig c = random_draw(rng, Convention::PixelCount).cfg;
        const double s = c.stride();
        const Transform2D io = input_to_output(c);
        identity = std::max(identity, max_abs_diff(t_flip(c.output.width_units()) * io * t_flip(c.input.width_units()),
                                                   t_translate((1.0 - s) / s, 0.0) * io));
    }
    const PipelineConfig c = config(Convention::PixelCount, true, Compensation::None, CodecKind::ArgmaxOnly);
    const ErrorStats st = monte_carlo(c, OracleMode::AnalyticShift, kTrials, kSeed);
    const double t = sw.seconds();
    const bool ok = identity < 1e-9 && std::abs(st.mean_abs_x - 0.375) <= 1e-3 && st.n_trials == kTrials &&
                    st.n_skipped == 0 && t < 5.0;
    record(3, "biased flip offset (1-s)/s, 0.375 at s=4", ok,
           fmt("offset identity %.3g, mean_abs_x %.6f, %.2f s", identity, st.mean_abs_x, t));
}

TEST(Acceptance, C04_SnoopResidual) {
    PipelineConfig c = config(Convention::PixelCount, true, Compensation::Snoop, CodecKind::ArgmaxOnly);
    const ErrorStats snoop = monte_carlo(c, OracleMode::AnalyticShift, kTrials, kSeed);
    c.compensation = Compensation::SnoopPlusEc;
    const ErrorStats ec = monte_carlo(c, OracleMode::AnalyticShift, kTrials, kSeed);
    const bool ok = std::abs(snoop.mean_abs_x - 0.125) <= 1e-3 && ec.mean_abs_x < 1e-3;
    record(4, "snoop residual 0.125, snoop+ec < 1e-3", ok,
           fmt("snoop %.6f, snoop+ec %.3g", snoop.mean_abs_x, ec.mean_abs_x));
}

TEST(Acceptance, C05_BiasedDecodeStatistics) {
    const Stopwatch sw;
    const PipelineConfig c = config(Convention::UnitLength, false, Compensation::None, CodecKind::CfBiasedDecode);
    const ErrorStats st = monte_carlo(c, OracleMode::FullHeatmap, kTrials, kSeed);
    const double t = sw.seconds();
    const bool ok = std::abs(st.mean_abs_x - 0.125) <= 0.005 && std::abs(st.mean_abs_y - 0.125) <= 0.005 &&
                    std::abs(st.var_abs_x - 0.0052) <= 0.001 && std::abs(st.var_abs_y - 0.0052) <= 0.001 &&
                    st.n_failed == 0 && t < 60.0;
    record(5, "quarter-shift decode statistics (full heatmaps)", ok,
           fmt("mean %.5f/%.5f, var %.5f/%.5f", st.mean_abs_x, st.mean_abs_y, st.var_abs_x, st.var_abs_y) +
               fmt(", %.1f s", t));
}

TEST(Acceptance, C06_JointAnalysisWithSnoop) {
    const PipelineConfig c = config(Convention::PixelCount, true, Compensation::Snoop, CodecKind::CfBiasedDecode);
    const ErrorStats a = monte_carlo(c, OracleMode::AnalyticShift, kTrials, kSeed);
    const ErrorStats f = monte_carlo(c, OracleMode::FullHeatmap, kTrials, kSeed);
    const bool analytic_ok =
        std::abs(a.mean_abs_x - 5.0 / 32.0) <= 1e-3 && std::abs(a.var_abs_x - 37.0 / 3072.0) <= 1e-3;
    const bool full_ok = std::abs(f.mean_abs_x - a.mean_abs_x) <= 0.02 && std::abs(f.var_abs_x - a.var_abs_x) <= 0.02;
    record(6, "joint analysis with snoop (5/32, 37/3072)", analytic_ok && full_ok,
           fmt("analytic mean %.6f var %.6f; full mean %.6f var %.6f", a.mean_abs_x, a.var_abs_x, f.mean_abs_x,
               f.var_abs_x));
}

TEST(Acceptance, C07_JointAnalysisWithoutSnoop) {
    const PipelineConfig c = config(Convention::PixelCount, true, Compensation::None, CodecKind::CfBiasedDecode);
    const ErrorStats a = monte_carlo(c, OracleMode::AnalyticShift, kTrials, kSeed);
    const bool ok = std::abs(a.mean_abs_x - 3.0 / 8.0) <= 1e-3 && std::abs(a.var_abs_x - 1.0 / 48.0) <= 1e-3;
    record(7, "joint analysis without snoop (3/8, 1/48)", ok,
           fmt("mean %.6f, var %.6f", a.mean_abs_x, a.var_abs_x));
}

TEST(Acceptance, C08_CodecIdentities) {
    const PlaneSize dims(48, 64);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ux(0.0, 47.0), uy(0.0, 63.0);
    double ccrf = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Point k(ux(rng), uy(rng));
        ccrf = std::max(ccrf, (decode_ccrf(encode_ccrf(k, dims, default_ccrf_radius(dims))).k - k).cwiseAbs().maxCoeff());
    }
    std::uniform_real_distribution<double> gx(1.0, 46.0), gy(1.0, 62.0);
    double dark = 0.0;
    int degenerate = 0;
    for (int i = 0; i < 10000; ++i) {
        const Point k(gx(rng), gy(rng));
        const DecodeResult r = decode_dark(encode_gaussian(k, dims, 2.0).c);
        degenerate += r.degenerate;
        dark = std::max(dark, (r.k - k).cwiseAbs().maxCoeff());
    }
    record(8, "codec identities (ccrf exact, dark within 1e-3)", ccrf < 1e-12 && dark < 1e-3 && degenerate == 0,
           fmt("ccrf %.3g, dark %.3g, degenerate %g", ccrf, dark, degenerate));
}

TEST(Acceptance, C09_ResolutionScaling) {
    PipelineConfig lo = config(Convention::PixelCount, true, Compensation::Snoop, CodecKind::CfBiasedDecode);
    PipelineConfig hi = lo;
    hi.input = PlaneSize(384, 512);
    hi.output = PlaneSize(96, 128);
    const ErrorStats a = monte_carlo(lo, OracleMode::AnalyticShift, kTrials, kSeed);
    const ErrorStats b = monte_carlo(hi, OracleMode::AnalyticShift, kTrials, kSeed);
    const double ratio = a.mean_abs_x_source / b.mean_abs_x_source;
    record(9, "doubling input resolution halves source error", std::abs(ratio - 2.0) <= 0.05,
           fmt("source mean %.5f -> %.5f, ratio %.4f", a.mean_abs_x_source, b.mean_abs_x_source, ratio));
}

TEST(Acceptance, C10_RasterExactness) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> val(-100.0, 100.0);
    bool permutation_ok = true;
    for (int i = 0; i < 50; ++i) {
        const int n = 5 + i % 7;
        ImageGrid g(PlaneSize(n, n), 2);
        for (auto& v : g.data()) v = val(rng);
        const double w = n - 1;
        const int dx = i % 3 - 1, dy = i % 2;
        const Transform2D t = t_translate(double(dx), double(dy)) * t_flip(w) *
                              t_rotate(std::numbers::pi / 2 * (i % 4), Point(0.5 * w, 0.5 * w));
        const ImageGrid out = warp(g, t, g.size());
        const Transform2D back = invert(t);
        for (int y = 0; y < n && permutation_ok; ++y) {
            for (int x = 0; x < n; ++x) {
                const Point s = apply_point(back, Point(x, y));
                const int sx = static_cast<int>(std::lround(s.x())), sy = static_cast<int>(std::lround(s.y()));
                const bool inside = sx >= 0 && sy >= 0 && sx < n && sy < n;
                for (int c = 0; c < 2; ++c) {
                    if (out.at(x, y, c) != (inside ? g.at(sx, sy, c) : 0.0)) permutation_ok = false;
                }
            }
        }
    }

    double linear = 0.0;
    std::uniform_real_distribution<double> coef(-3.0, 3.0), ang(-3.2, 3.2), scale(0.3, 2.5), shift(-10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        const double a = coef(rng), b = coef(rng), c0 = coef(rng);
        ImageGrid g(PlaneSize(20, 15), 1);
        for (int y = 0; y < 15; ++y)
            for (int x = 0; x < 20; ++x) g.at(x, y) = a * x + b * y + c0;
        const Transform2D t = t_translate(shift(rng), shift(rng)) * t_rotate(ang(rng), Point(9.5, 7.0)) *
                              t_resize(1.0, 1.0, scale(rng), scale(rng));
        const ImageGrid out = warp(g, t, PlaneSize(24, 24));
        const Transform2D back = invert(t);
        for (int y = 0; y < 24; ++y) {
            for (int x = 0; x < 24; ++x) {
                const Point s = apply_point(back, Point(x, y));
                if (s.x() < 0.0 || s.y() < 0.0 || s.x() > 19.0 || s.y() > 14.0) continue;
                linear = std::max(linear, std::abs(out.at(x, y) - (a * s.x() + b * s.y() + c0)));
            }
        }
    }
    record(10, "raster exactness (permutations bit-exact, linear fields 1e-9)", permutation_ok && linear < 1e-9,
           std::string("permutations ") + (permutation_ok ? "exact" : "MISMATCH") +
               fmt(", linear field max error %.3g", linear));
}

TEST(Acceptance, C11_EndToEndDeterminism) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path();
    const fs::path a = dir / "keycal_accept_run_a.csv", b = dir / "keycal_accept_run_b.csv";
    const std::string base = std::string(KEYCAL_CLI_PATH) +
                             " simulate --seed 42 -n 3000 --ft --snoop --codec cf-biased --mode full --jobs 2 > ";
    const int ra = std::system((base + a.string()).c_str());
    const int rb = std::system((base + b.string()).c_str());
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string ca = slurp(a), cb = slurp(b);
    fs::remove(a);
    fs::remove(b);
    record(11, "end-to-end determinism (byte-identical CSV)", ra == 0 && rb == 0 && !ca.empty() && ca == cb,
           fmt("exit codes %g/%g, %g bytes", ra, rb, double(ca.size())));
}

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    const int rc = RUN_ALL_TESTS();
    std::printf("\nAcceptance summary\n");
    for (const auto& [id, o] : outcomes()) {
        std::printf("[%s] criterion %2d: %s -- %s\n", o.passed ? "PASS" : "FAIL", id, o.name.c_str(), o.detail.c_str());
    }
    return rc;
}
