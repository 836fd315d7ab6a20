#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "keycal/biaslab.hpp"
#include "keycal/geometry.hpp"

namespace keycal {

struct Keypoint {
    Point p = Point::Zero();
    int visibility = 0;  // COCO: 0 not labeled, 1 occluded, 2 visible
};

struct Instance {
    std::int64_t annotation_id = 0;
    std::int64_t image_id = 0;
    PlaneSize image_size{2, 2};
    std::array<double, 4> bbox{};  // x, y, w, h with (x, y) the top-left corner
    std::vector<Keypoint> keypoints;
};

struct CocoKeypoints {
    std::vector<Instance> instances;
    std::int64_t skipped = 0;
    int joint_count = 0;
};

/// Parses a COCO keypoint file. Annotations without any labeled keypoint or
/// with a degenerate box are skipped and counted. Throws ParseError (with
/// byte offset) on malformed JSON and ReferentialIntegrityError when an
/// annotation names a missing image.
CocoKeypoints load_coco_keypoints(const std::string& path);
CocoKeypoints parse_coco_keypoints(const std::string& text);

/// Box -> ROI: keeps the center, grows the relatively shorter side until
/// w / h == target_aspect, then scales both sides by padding.
Roi bbox_to_roi(const std::array<double, 4>& bbox, double target_aspect, double padding = 1.25);

/// ROIs and labeled (v > 0) keypoints of every instance, ready for sampling.
KeypointSampler sampler_from_instances(const std::vector<Instance>& instances, double target_aspect,
                                       double padding = 1.25);

enum class ReportFormat { Csv, Json };

ReportFormat parse_report_format(const std::string& s);

/// Column order: label, n_trials, n_skipped, n_failed, mean_abs_x, mean_abs_y,
/// var_abs_x, var_abs_y, mean_abs_x_source, mean_abs_y_source. Reals are
/// printed with 9 significant digits.
void write_report(std::ostream& out, const std::vector<ErrorStats>& stats, ReportFormat format);
void write_report(const std::string& path, const std::vector<ErrorStats>& stats, ReportFormat format);

std::vector<ErrorStats> read_report(std::istream& in, ReportFormat format);

}  // namespace keycal
