#include "keycal/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "keycal/codec.hpp"

namespace keycal {

namespace {

PipelineConfig make(Convention conv, PlaneSize in, PlaneSize out, bool ft, Compensation comp, CodecKind codec,
                    bool rno) {
    PipelineConfig c;
    c.convention = conv;
    c.input = in;
    c.output = out;
    c.flip_test = ft;
    c.compensation = comp;
    c.codec = codec;
    c.rno = rno;
    c.flip_pairs = coco_flip_pairs();
    return c;
}

}  // namespace

std::vector<AblationRow> ablation_preset(const std::string& name) {
    constexpr auto U = Convention::UnitLength;
    constexpr auto P = Convention::PixelCount;
    constexpr auto None = Compensation::None;
    constexpr auto Snoop = Compensation::Snoop;
    constexpr auto SnoopEc = Compensation::SnoopPlusEc;
    constexpr auto Biased = CodecKind::CfBiasedDecode;
    constexpr auto Ccrf = CodecKind::Ccrf;
    constexpr auto Cf = CodecKind::Cf;

    if (name == "topdown") {
        const PlaneSize in{192, 256};
        const PlaneSize out{48, 64};
        const Roi roi{320.0, 240.0, 150.0, 200.0};
        return {
            {"A", make(P, in, out, false, None, Biased, false), roi},
            {"B", make(U, in, out, false, None, Biased, false), roi},
            {"C", make(P, in, out, true, None, Biased, false), roi},
            {"D", make(U, in, out, true, None, Biased, false), roi},
            {"E", make(P, in, out, true, Snoop, Biased, false), roi},
            {"F", make(P, in, out, true, SnoopEc, Biased, false), roi},
            {"G", make(P, in, out, true, None, Ccrf, false), roi},
            {"H", make(U, in, out, true, None, Ccrf, false), roi},
            {"I", make(U, in, out, true, None, Cf, false), roi},
        };
    }
    if (name == "bottomup") {
        // Flip testing is always on; HNOR doubles the output resolution.
        const PlaneSize in{512, 512};
        const PlaneSize low{128, 128};
        const PlaneSize high{256, 256};
        const Roi roi{320.0, 240.0, 480.0, 480.0};
        return {
            {"A", make(P, in, low, true, None, Biased, true), roi},
            {"B", make(U, in, low, true, None, Biased, false), roi},
            {"C", make(U, in, low, true, None, Cf, false), roi},
            {"D", make(U, in, low, true, None, Cf, true), roi},
            {"E", make(P, in, high, true, None, Biased, false), roi},
            {"F", make(P, in, high, true, None, Biased, true), roi},
            {"G", make(P, in, high, true, None, Cf, true), roi},
            {"H", make(U, in, high, true, None, Biased, false), roi},
            {"I", make(U, in, high, true, None, Cf, false), roi},
            {"J", make(U, in, high, true, None, Cf, true), roi},
        };
    }
    throw std::invalid_argument("unknown ablation preset '" + name + "' (topdown|bottomup)");
}

namespace {

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

Roi random_roi(SplitMix64& rng) {
    return Roi{1000.0 * rng.uniform() - 200.0, 1000.0 * rng.uniform() - 200.0, 20.0 + 500.0 * rng.uniform(),
               20.0 + 500.0 * rng.uniform()};
}

PipelineConfig random_sizes(SplitMix64& rng, Convention conv) {
    PipelineConfig c;
    c.convention = conv;
    const int ow = 8 + static_cast<int>(rng() % 120);
    const int oh = 8 + static_cast<int>(rng() % 120);
    const int s = 1 + static_cast<int>(rng() % 8);
    c.output = PlaneSize(ow, oh);
    c.input = PlaneSize(ow * s, oh * s);
    return c;
}

CheckResult check_transform_identities(std::uint64_t seed) {
    constexpr int kDraws = 1000;
    double closure = 0.0, align = 0.0, defect = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        SplitMix64 rng = SplitMix64::substream(seed, i);
        const Roi roi = random_roi(rng);
        for (Convention conv : {Convention::UnitLength, Convention::PixelCount}) {
            const PipelineConfig cfg = random_sizes(rng, conv);
            const Transform2D chain = output_to_source(roi, cfg) * input_to_output(cfg) * test_transform(roi, cfg);
            closure = std::max(closure, max_abs_diff(chain, Transform2D::identity()));

            const Transform2D io = input_to_output(cfg);
            const Transform2D flipped = t_flip(cfg.output.width_units()) * io * t_flip(cfg.input.width_units());
            if (conv == Convention::UnitLength) {
                align = std::max(align, max_abs_diff(flipped, io));
            } else {
                const double s = cfg.stride();
                defect = std::max(defect, max_abs_diff(flipped, t_translate((1.0 - s) / s, 0.0) * io));
            }
        }
    }
    const double worst = std::max({closure, align, defect});
    return {"transform identities (closure, flip alignment, flip defect)", worst < 1e-9,
            fmt("max entry error %.3g (defect %.3g)", worst, defect)};
}

CheckResult check_source_scaling() {
    double worst = 0.0;
    for (int wip : {192, 256, 288, 384}) {
        for (int s : {2, 4}) {
            PipelineConfig cfg;
            cfg.convention = Convention::PixelCount;
            cfg.input = PlaneSize(wip, wip);
            cfg.output = PlaneSize(wip / s, wip / s);
            const Roi roi{100.0, 100.0, 150.0, 150.0};
            const Transform2D back = output_to_source(roi, cfg);
            const double mapped = back.linear()(0, 0) * (1.0 / (2.0 * s));
            worst = std::max(worst, std::abs(mapped - roi.w / (2.0 * wip)));
        }
    }
    return {"source-space residual equals bw / (2 wip)", worst < 1e-12, fmt("max error %.3g", worst, 0.0)};
}

CheckResult check_codecs(std::uint64_t seed) {
    const PlaneSize dims{48, 64};
    double ccrf = 0.0, dark = 0.0;
    for (int i = 0; i < 2000; ++i) {
        SplitMix64 rng = SplitMix64::substream(seed ^ 0xc0dec, i);
        const Point k(6.0 + 35.0 * rng.uniform(), 6.0 + 51.0 * rng.uniform());
        ccrf = std::max(ccrf, (decode_ccrf(encode_ccrf(k, dims, 3.0)).k - k).cwiseAbs().maxCoeff());
        dark = std::max(dark, (decode_dark(encode_gaussian(k, dims, 2.0).c).k - k).cwiseAbs().maxCoeff());
    }
    return {"codec round trips (ccrf exact, dark within 1e-3)", ccrf < 1e-12 && dark < 1e-3,
            fmt("ccrf %.3g, dark %.3g", ccrf, dark)};
}

CheckResult check_closed_form(const std::string& name, const PipelineConfig& cfg, std::int64_t n,
                              std::uint64_t seed, int jobs) {
    const ErrorStats st = monte_carlo(cfg, OracleMode::AnalyticShift, n, seed, {}, jobs);
    const AnalyticErrors a = analytic_errors(cfg);
    if (!a.mean_abs_x || !a.var_abs_x) return {name, false, "no closed form"};
    // Means: 5 standard errors of the closed-form variance, plus rounding.
    const double mean_tol = 5.0 * std::sqrt(*a.var_abs_x / static_cast<double>(n)) + 1e-9;
    const bool ok = st.n_failed == 0 && std::abs(st.mean_abs_x - *a.mean_abs_x) <= mean_tol &&
                    std::abs(st.var_abs_x - *a.var_abs_x) <= 0.1 * *a.var_abs_x + 1e-9;
    return {name, ok,
            fmt("mean %.6f vs %.6f", st.mean_abs_x, *a.mean_abs_x) +
                fmt(", var %.6f vs %.6f", st.var_abs_x, *a.var_abs_x)};
}

}  // namespace

std::vector<CheckResult> run_verification(std::int64_t n, std::uint64_t seed, int jobs) {
    std::vector<CheckResult> out;
    out.push_back(check_transform_identities(seed));
    out.push_back(check_source_scaling());
    out.push_back(check_codecs(seed));

    PipelineConfig base;
    base.convention = Convention::PixelCount;
    base.flip_test = true;
    base.codec = CodecKind::ArgmaxOnly;

    PipelineConfig c = base;
    out.push_back(check_closed_form("flip offset, no compensation (0.375)", c, n, seed, jobs));
    c.compensation = Compensation::Snoop;
    out.push_back(check_closed_form("flip offset with snoop (0.125)", c, n, seed, jobs));
    c.compensation = Compensation::SnoopPlusEc;
    out.push_back(check_closed_form("flip offset with snoop + ec (0)", c, n, seed, jobs));

    c = base;
    c.codec = CodecKind::CfBiasedDecode;
    c.convention = Convention::UnitLength;
    out.push_back(check_closed_form("quarter-shift decode (1/8, 1/192)", c, n, seed, jobs));
    c.convention = Convention::PixelCount;
    c.compensation = Compensation::Snoop;
    out.push_back(check_closed_form("quarter-shift decode with snoop (5/32, 37/3072)", c, n, seed, jobs));
    c.compensation = Compensation::None;
    out.push_back(check_closed_form("quarter-shift decode without snoop (3/8, 1/48)", c, n, seed, jobs));
    return out;
}

}  // namespace keycal
