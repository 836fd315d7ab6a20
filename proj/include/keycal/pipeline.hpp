#pragma once

// Train/test/flip pipelines assembled from the elementary transforms.
//
// Convention::UnitLength sizes every resize by w = wp - 1 (corner samples stay
// aligned). Convention::PixelCount sizes resizes by wp, which keeps the plain
// source -> input -> output -> source chain closed but shifts flipped results
// by (1 - s) / s output units. Image flips are always index reversals, i.e.
// t_flip with the unit-length width, under both conventions.

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "keycal/geometry.hpp"
#include "keycal/raster.hpp"

namespace keycal {

enum class Convention { UnitLength, PixelCount };
enum class Compensation { None, Snoop, SnoopPlusEc };
enum class CodecKind { Ccrf, Cf, CfBiasedDecode, ArgmaxOnly };
enum class Combine { AverageCoords, AverageHeatmaps };

struct PipelineConfig {
    Convention convention = Convention::UnitLength;
    PlaneSize input{192, 256};
    PlaneSize output{48, 64};
    bool flip_test = false;
    Compensation compensation = Compensation::None;
    CodecKind codec = CodecKind::Cf;
    // Unset: AverageHeatmaps for the Gaussian codecs, AverageCoords for CCRF.
    std::optional<Combine> combine;
    bool rno = false;
    std::vector<std::pair<int, int>> flip_pairs;
    double sigma = 2.0;
    // Unset: 0.0625 * output width in pixels.
    std::optional<double> radius;

    /// s = input.width_px / output.width_px.
    double stride() const {
        return static_cast<double>(input.width_px()) / static_cast<double>(output.width_px());
    }
    Combine effective_combine() const;
    double effective_radius() const;

    /// Throws std::invalid_argument for inconsistent settings, e.g. a
    /// compensation without flip testing.
    void validate() const;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Extent used for resizing a plane under the given convention.
Eigen::Vector2d plane_extent(const PlaneSize& size, Convention convention);

/// T_flip(w_i) * T_rot(theta, input center) * T_resize(roi -> input) * T_crop(roi).
Transform2D train_transform(const Roi& roi, double theta, bool flipped, const PipelineConfig& cfg);

/// T_resize(roi -> input) * T_crop(roi).
Transform2D test_transform(const Roi& roi, const PipelineConfig& cfg);

Transform2D input_to_output(const PipelineConfig& cfg);

/// Inverse crop translation * T_resize(output -> roi).
Transform2D output_to_source(const Roi& roi, const PipelineConfig& cfg);

/// Flip-back of the flipped-image result (including the one-unit shift when
/// compensating), averaged with k_o. No extra compensation.
Point flip_average(const Point& k_o, const Point& k_o_flip, const PipelineConfig& cfg);

/// Subtracts the residual 1 / (2s) from x under SnoopPlusEc; identity otherwise.
Point extra_compensation(const Point& k, const PipelineConfig& cfg);

/// extra_compensation(flip_average(...)).
Point flip_combine(const Point& k_o, const Point& k_o_flip, const PipelineConfig& cfg);

/// Heatmap counterpart of the one-unit shift: dst(x) = src(x - 1), zero fill.
ImageGrid shift_heatmap_x(const ImageGrid& h, double dx = 1.0);

/// Upsamples an output-space heatmap to the input resolution.
ImageGrid rno_upsample(const ImageGrid& h, const PipelineConfig& cfg);

/// Exchanges the listed index pairs. Throws std::out_of_range on a bad index.
std::vector<Point> swap_flip_pairs(std::vector<Point> points,
                                   const std::vector<std::pair<int, int>>& pairs);

/// COCO left/right joint pairs (17-joint layout).
std::vector<std::pair<int, int>> coco_flip_pairs();

// Names used in config files and on the command line.
std::string to_string(Convention v);
std::string to_string(Compensation v);
std::string to_string(CodecKind v);
std::string to_string(Combine v);
Convention parse_convention(const std::string& s);
Compensation parse_compensation(const std::string& s);
CodecKind parse_codec(const std::string& s);
Combine parse_combine(const std::string& s);

/// Short human-readable summary, e.g. "ucst=1 ft=1 snoop=0 ec=0 codec=cf rno=0 192x256->48x64".
std::string describe(const PipelineConfig& cfg);

// Flat key=value config file. '#' starts a comment; unknown keys are errors.
void write_config(std::ostream& out, const PipelineConfig& cfg);
PipelineConfig read_config(std::istream& in);
PipelineConfig read_config_file(const std::string& path);

}  // namespace keycal
