#pragma once

// Ideal-network oracle and the error engines built on top of it.
//
// The oracle returns exactly what a zero-loss network would: the keypoint of
// its input mapped by input_to_output, either as a point (AnalyticShift) or
// rendered through the configured codec's encoder (FullHeatmap).
//
// AnalyticShift evaluates the coordinate pipeline on points. The codec is
// treated as exact except for CfBiasedDecode, whose decode is applied to a
// single Gaussian rendered at the combined point (the single-Gaussian
// approximation of the averaged flip heatmaps). FullHeatmap renders, flips,
// averages and decodes real heatmaps.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "keycal/codec.hpp"
#include "keycal/geometry.hpp"
#include "keycal/pipeline.hpp"
#include "keycal/raster.hpp"

namespace keycal {

enum class OracleMode { AnalyticShift, FullHeatmap };

std::string to_string(OracleMode m);
OracleMode parse_oracle_mode(const std::string& s);

/// splitmix64 (Steele, Lea, Flood 2014). Satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Independent substream for trial `index` of a run seeded with `seed`.
    static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 mix(seed ^ (index * 0xd1b54a32d192ed03ULL));
        return SplitMix64(mix());
    }

private:
    std::uint64_t state_;
};

using NetworkOutput = std::variant<Point, ImageGrid, CcrfMaps>;

/// Zero-loss network applied to an input-space keypoint. nullopt (skip the
/// trial) when the keypoint or its output image lies outside the planes.
std::optional<NetworkOutput> ideal_network(const Point& k_i, const PipelineConfig& cfg, OracleMode mode);

enum class TrialStatus { Ok, Skipped, DecodeFailed };

struct TrialRecord {
    TrialStatus status = TrialStatus::Ok;
    Point gt_source = Point::Zero();
    Point gt_output = Point::Zero();
    Point pred_output = Point::Zero();
    Point pred_source = Point::Zero();
    PipelineConfig config;
};

/// test_transform -> ideal network (+ flipped branch) -> combine -> decode ->
/// output_to_source.
TrialRecord run_trial(const Point& gt_source, const Roi& roi, const PipelineConfig& cfg, OracleMode mode);

/// Keypoint distribution for Monte Carlo runs. Keypoints are uniform in the
/// output plane, shrunk by `margin` output units on every side (default 3
/// sigma, or the CCRF radius) and trimmed to an integer span so fractional
/// parts stay uniform. Each trial picks one of `rois` uniformly.
///
/// When `source_keypoints` is non-empty, trials instead draw one
/// (roi index, source point) pair uniformly from it; points that land outside
/// the margin are counted as skipped.
struct KeypointSampler {
    std::optional<double> margin;
    std::vector<Roi> rois{Roi{320.0, 240.0, 150.0, 200.0}};
    std::vector<std::pair<std::size_t, Point>> source_keypoints;
};

struct ErrorStats {
    std::string label;
    std::int64_t n_trials = 0;
    std::int64_t n_skipped = 0;
    std::int64_t n_failed = 0;
    double mean_abs_x = 0.0;
    double mean_abs_y = 0.0;
    double var_abs_x = 0.0;
    double var_abs_y = 0.0;
    double mean_abs_x_source = 0.0;
    double mean_abs_y_source = 0.0;

    friend bool operator==(const ErrorStats&, const ErrorStats&) = default;
};

/// Aggregates n trials; trial i draws from SplitMix64::substream(seed, i), so
/// the result is bit-identical for any `jobs`.
ErrorStats monte_carlo(const PipelineConfig& cfg, OracleMode mode, std::int64_t n, std::uint64_t seed,
                       const KeypointSampler& sampler = {}, int jobs = 1);

/// Closed-form expectations. Fields are nullopt where no closed form applies.
struct AnalyticErrors {
    /// Signed x offset of the combined prediction before extra compensation.
    double pre_ec_offset_x = 0.0;
    /// |x offset| after all compensation, output units.
    double coord_error_x = 0.0;
    /// coord_error_x mapped back to source units; needs the ROI width.
    std::optional<double> coord_error_x_source;
    /// E|x - x_hat| and V|x - x_hat| including the decoder, output units.
    std::optional<double> mean_abs_x;
    std::optional<double> var_abs_x;
};

AnalyticErrors analytic_errors(const PipelineConfig& cfg, std::optional<double> roi_width = std::nullopt);

}  // namespace keycal
