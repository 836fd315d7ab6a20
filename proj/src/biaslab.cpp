#include "keycal/biaslab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace keycal {

std::string to_string(OracleMode m) { return m == OracleMode::AnalyticShift ? "analytic" : "full"; }

OracleMode parse_oracle_mode(const std::string& s) {
    if (s == "analytic") return OracleMode::AnalyticShift;
    if (s == "full") return OracleMode::FullHeatmap;
    throw std::invalid_argument("unknown oracle mode '" + s + "' (analytic|full)");
}

std::optional<NetworkOutput> ideal_network(const Point& k_i, const PipelineConfig& cfg, OracleMode mode) {
    if (!k_i.allFinite() || !cfg.input.contains(k_i)) return std::nullopt;
    const Point k_o = apply_point(input_to_output(cfg), k_i);
    if (mode == OracleMode::AnalyticShift) return NetworkOutput{k_o};

    if (!cfg.output.contains(k_o)) return std::nullopt;
    if (cfg.codec == CodecKind::Ccrf) {
        return NetworkOutput{encode_ccrf(k_o, cfg.output, cfg.effective_radius())};
    }
    return NetworkOutput{encode_gaussian(k_o, cfg.output, cfg.sigma).c};
}

namespace {

template <typename F>
NetworkOutput map_planes(const NetworkOutput& h, F&& f) {
    if (const auto* g = std::get_if<ImageGrid>(&h)) return NetworkOutput{f(*g)};
    const auto& m = std::get<CcrfMaps>(h);
    return NetworkOutput{CcrfMaps{f(m.c), f(m.x_off), f(m.y_off), m.radius}};
}

NetworkOutput flip_output(const NetworkOutput& h) {
    if (const auto* g = std::get_if<ImageGrid>(&h)) return NetworkOutput{flip_heatmap(*g)};
    return NetworkOutput{flip_ccrf(std::get<CcrfMaps>(h))};
}

NetworkOutput average_outputs(const NetworkOutput& a, const NetworkOutput& b) {
    const auto avg = [](const ImageGrid& x, const ImageGrid& y) {
        ImageGrid out = x;
        out.channel(0) = 0.5 * (x.channel(0) + y.channel(0));
        return out;
    };
    if (const auto* g = std::get_if<ImageGrid>(&a)) return NetworkOutput{avg(*g, std::get<ImageGrid>(b))};
    const auto& ma = std::get<CcrfMaps>(a);
    const auto& mb = std::get<CcrfMaps>(b);
    return NetworkOutput{CcrfMaps{avg(ma.c, mb.c), avg(ma.x_off, mb.x_off), avg(ma.y_off, mb.y_off), ma.radius}};
}

// Upsamples to input resolution; CCRF offsets are rescaled to input units.
NetworkOutput rno_output(const NetworkOutput& h, const PipelineConfig& cfg) {
    NetworkOutput up = map_planes(h, [&](const ImageGrid& g) { return rno_upsample(g, cfg); });
    if (auto* m = std::get_if<CcrfMaps>(&up)) {
        const Transform2D back = invert(input_to_output(cfg));
        m->x_off.channel(0) *= back(0, 0);
        m->y_off.channel(0) *= back(1, 1);
    }
    return up;
}

Point decode_output(const NetworkOutput& h, const PipelineConfig& cfg) {
    const NetworkOutput src = cfg.rno ? rno_output(h, cfg) : h;
    Point k;
    if (const auto* m = std::get_if<CcrfMaps>(&src)) {
        k = decode_ccrf(*m).k;
    } else {
        const auto& c = std::get<ImageGrid>(src);
        switch (cfg.codec) {
            case CodecKind::Cf: k = decode_dark(c).k; break;
            case CodecKind::CfBiasedDecode: k = decode_biased_quarter(c).k; break;
            case CodecKind::ArgmaxOnly:
            case CodecKind::Ccrf: k = decode_argmax(c).k; break;
        }
    }
    return cfg.rno ? apply_point(input_to_output(cfg), k) : k;
}

// Output-space prediction for an input-space keypoint; nullopt to skip.
std::optional<Point> predict_output(const Point& k_i, const PipelineConfig& cfg, OracleMode mode) {
    const auto net = ideal_network(k_i, cfg, mode);
    if (!net) return std::nullopt;
    std::optional<NetworkOutput> net_flip;
    if (cfg.flip_test) {
        net_flip = ideal_network(apply_point(t_flip(cfg.input.width_units()), k_i), cfg, mode);
        if (!net_flip) return std::nullopt;
    }

    if (mode == OracleMode::AnalyticShift) {
        Point k = std::get<Point>(*net);
        if (net_flip) k = flip_average(k, std::get<Point>(*net_flip), cfg);
        if (cfg.codec == CodecKind::CfBiasedDecode) {
            if (!cfg.output.contains(k)) return std::nullopt;
            k = decode_biased_quarter(encode_gaussian(k, cfg.output, cfg.sigma).c).k;
        }
        return extra_compensation(k, cfg);
    }

    if (!net_flip) return decode_output(*net, cfg);
    if (cfg.effective_combine() == Combine::AverageCoords) {
        return flip_combine(decode_output(*net, cfg), decode_output(*net_flip, cfg), cfg);
    }
    NetworkOutput back = flip_output(*net_flip);
    if (cfg.compensation != Compensation::None) {
        back = map_planes(back, [](const ImageGrid& g) { return shift_heatmap_x(g, 1.0); });
    }
    return extra_compensation(decode_output(average_outputs(*net, back), cfg), cfg);
}

struct TrialCore {
    TrialStatus status = TrialStatus::Ok;
    Point gt_output = Point::Zero();
    Point pred_output = Point::Zero();
    Point pred_source = Point::Zero();
};

TrialCore trial_core(const Point& gt_source, const Roi& roi, const PipelineConfig& cfg, OracleMode mode) {
    TrialCore r;
    const Point k_i = apply_point(test_transform(roi, cfg), gt_source);
    if (!cfg.input.contains(k_i)) {
        r.status = TrialStatus::Skipped;
        return r;
    }
    r.gt_output = apply_point(input_to_output(cfg), k_i);
    std::optional<Point> pred;
    try {
        pred = predict_output(k_i, cfg, mode);
    } catch (const NoDetectionError&) {
        r.status = TrialStatus::DecodeFailed;
        return r;
    }
    if (!pred) {
        r.status = TrialStatus::Skipped;
        return r;
    }
    r.pred_output = *pred;
    r.pred_source = apply_point(output_to_source(roi, cfg), *pred);
    return r;
}

// Compensated running sum.
class KahanSum {
public:
    void add(double v) {
        const double y = v - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

}  // namespace

TrialRecord run_trial(const Point& gt_source, const Roi& roi, const PipelineConfig& cfg, OracleMode mode) {
    cfg.validate();
    roi.validate();
    const TrialCore core = trial_core(gt_source, roi, cfg, mode);
    TrialRecord rec;
    rec.status = core.status;
    rec.gt_source = gt_source;
    rec.gt_output = core.gt_output;
    rec.pred_output = core.pred_output;
    rec.pred_source = core.pred_source;
    rec.config = cfg;
    return rec;
}

ErrorStats monte_carlo(const PipelineConfig& cfg, OracleMode mode, std::int64_t n, std::uint64_t seed,
                       const KeypointSampler& sampler, int jobs) {
    if (n < 1) throw std::invalid_argument("monte_carlo: n must be at least 1");
    if (sampler.rois.empty()) throw std::invalid_argument("monte_carlo: sampler has no ROI");
    cfg.validate();
    for (const auto& roi : sampler.rois) roi.validate();

    const double margin = sampler.margin.value_or(
        cfg.codec == CodecKind::Ccrf ? cfg.effective_radius() : 3.0 * cfg.sigma);
    const double span_x = std::floor(cfg.output.width_units() - 2.0 * margin);
    const double span_y = std::floor(cfg.output.height_units() - 2.0 * margin);
    if (margin < 0.0 || span_x < 1.0 || span_y < 1.0) {
        throw std::invalid_argument("monte_carlo: sampling margin leaves no room in the output plane");
    }
    const Transform2D output_to_input = invert(input_to_output(cfg));

    const auto count = static_cast<std::size_t>(n);
    std::vector<TrialStatus> status(count);
    std::vector<Eigen::Vector4d> errors(count);

    const auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            SplitMix64 rng = SplitMix64::substream(seed, i);
            Point gt_source;
            const Roi* roi = nullptr;
            if (!sampler.source_keypoints.empty()) {
                const auto& [r, p] = sampler.source_keypoints[rng() % sampler.source_keypoints.size()];
                roi = &sampler.rois.at(r);
                gt_source = p;
                const Point k_o = apply_point(input_to_output(cfg), apply_point(test_transform(*roi, cfg), p));
                if (k_o.x() < margin || k_o.y() < margin || k_o.x() > cfg.output.width_units() - margin ||
                    k_o.y() > cfg.output.height_units() - margin) {
                    status[i] = TrialStatus::Skipped;
                    continue;
                }
            } else {
                const std::size_t pick = sampler.rois.size() == 1
                                             ? 0
                                             : static_cast<std::size_t>(rng() % sampler.rois.size());
                roi = &sampler.rois[pick];
                const Point k_o(margin + span_x * rng.uniform(), margin + span_y * rng.uniform());
                gt_source = apply_point(invert(test_transform(*roi, cfg)), apply_point(output_to_input, k_o));
            }

            const TrialCore t = trial_core(gt_source, *roi, cfg, mode);
            status[i] = t.status;
            if (t.status == TrialStatus::Ok) {
                errors[i] << (t.pred_output - t.gt_output).cwiseAbs(), (t.pred_source - gt_source).cwiseAbs();
            }
        }
    };

    const int workers = std::clamp(jobs, 1, static_cast<int>(std::min<std::size_t>(count, 256)));
    if (workers == 1) {
        run_range(0, count);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (count + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::size_t b = std::min(count, w * chunk);
            const std::size_t e = std::min(count, b + chunk);
            pool.emplace_back(run_range, b, e);
        }
    }

    ErrorStats stats;
    stats.label = describe(cfg) + " mode=" + to_string(mode);
    stats.n_trials = n;
    KahanSum sum[4];
    std::int64_t ok = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (status[i] == TrialStatus::Skipped) ++stats.n_skipped;
        if (status[i] == TrialStatus::DecodeFailed) ++stats.n_failed;
        if (status[i] != TrialStatus::Ok) continue;
        ++ok;
        for (int k = 0; k < 4; ++k) sum[k].add(errors[i][k]);
    }
    if (ok == 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        stats.mean_abs_x = stats.mean_abs_y = stats.var_abs_x = stats.var_abs_y = nan;
        stats.mean_abs_x_source = stats.mean_abs_y_source = nan;
        return stats;
    }
    const double inv = 1.0 / static_cast<double>(ok);
    stats.mean_abs_x = sum[0].value() * inv;
    stats.mean_abs_y = sum[1].value() * inv;
    stats.mean_abs_x_source = sum[2].value() * inv;
    stats.mean_abs_y_source = sum[3].value() * inv;

    KahanSum dev_x, dev_y;
    for (std::size_t i = 0; i < count; ++i) {
        if (status[i] != TrialStatus::Ok) continue;
        const double dx = errors[i][0] - stats.mean_abs_x;
        const double dy = errors[i][1] - stats.mean_abs_y;
        dev_x.add(dx * dx);
        dev_y.add(dy * dy);
    }
    stats.var_abs_x = dev_x.value() * inv;
    stats.var_abs_y = dev_y.value() * inv;
    return stats;
}

AnalyticErrors analytic_errors(const PipelineConfig& cfg, std::optional<double> roi_width) {
    const double s = cfg.stride();
    AnalyticErrors a;
    if (cfg.flip_test) {
        // Flipped-back result sits (1 - s) / s units off under PixelCount;
        // the one-unit shift and the averaging act on that offset.
        double flipped = cfg.convention == Convention::PixelCount ? (1.0 - s) / s : 0.0;
        if (cfg.compensation != Compensation::None) flipped += 1.0;
        a.pre_ec_offset_x = 0.5 * flipped;
    }
    const double post = cfg.compensation == Compensation::SnoopPlusEc ? a.pre_ec_offset_x - 1.0 / (2.0 * s)
                                                                       : a.pre_ec_offset_x;
    a.coord_error_x = std::abs(post);
    if (roi_width) {
        a.coord_error_x_source = a.coord_error_x * *roi_width / plane_extent(cfg.output, cfg.convention).x();
    }

    if (cfg.rno) return a;
    if (cfg.codec != CodecKind::CfBiasedDecode) {
        a.mean_abs_x = a.coord_error_x;
        a.var_abs_x = 0.0;
        return a;
    }
    if (cfg.compensation == Compensation::SnoopPlusEc) return a;

    // Quarter-shift decoding of a Gaussian displaced by d from a keypoint
    // whose fractional part is uniform on [0, 1).
    struct Row {
        double offset, mean, var;
    };
    static constexpr Row kRows[] = {
        {0.0, 1.0 / 8.0, 1.0 / 192.0},
        {1.0 / 8.0, 5.0 / 32.0, 37.0 / 3072.0},
        {-3.0 / 8.0, 3.0 / 8.0, 1.0 / 48.0},
    };
    for (const Row& r : kRows) {
        if (std::abs(a.pre_ec_offset_x - r.offset) < 1e-12) {
            a.mean_abs_x = r.mean;
            a.var_abs_x = r.var;
        }
    }
    return a;
}

}  // namespace keycal
