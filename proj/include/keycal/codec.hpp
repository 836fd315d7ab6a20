#pragma once

// Keypoint <-> heatmap codecs.
//
// Two unbiased formats are provided: the combined classification/regression
// format (a binary disc plus per-node offsets to the keypoint) and the
// Gaussian classification format decoded by a one-step Newton refinement in
// log space. The biased quarter-shift decoder is kept for comparison.

#include <Eigen/Dense>

#include "keycal/geometry.hpp"
#include "keycal/raster.hpp"

namespace keycal {

/// Classification disc plus x/y offset maps. Also used for predictions.
struct CcrfMaps {
    ImageGrid c;
    ImageGrid x_off;
    ImageGrid y_off;
    double radius = 0.0;
};

struct GaussianTarget {
    ImageGrid c;
    double sigma = 0.0;
};

struct DecodeResult {
    Point k = Point::Zero();
    Eigen::Vector2i argmax = Eigen::Vector2i::Zero();
    bool degenerate = false;
};

inline constexpr double kDefaultSigma = 2.0;
inline constexpr double kDefaultRadiusFraction = 0.0625;

/// Default disc radius for an output plane: 0.0625 * wp.
inline double default_ccrf_radius(const PlaneSize& output) {
    return kDefaultRadiusFraction * output.width_px();
}

/// Throws OutOfBoundsError if k is outside [0, w] x [0, h].
CcrfMaps encode_ccrf(const Point& k, const PlaneSize& dims, double radius);

/// argmax(c) plus the offsets stored there. Throws NoDetectionError if c has
/// no positive value.
DecodeResult decode_ccrf(const CcrfMaps& pred);

/// Mirror of a CCRF prediction about the vertical axis; x offsets change sign.
CcrfMaps flip_ccrf(const CcrfMaps& maps);

/// 3-channel (c, x_off, y_off) view for serialization.
ImageGrid ccrf_to_grid(const CcrfMaps& maps);
CcrfMaps ccrf_from_grid(const ImageGrid& grid, double radius = 0.0);

/// Full-map Gaussian, no truncation. Throws OutOfBoundsError outside the plane.
GaussianTarget encode_gaussian(const Point& k, const PlaneSize& dims, double sigma = kDefaultSigma);

/// First maximum in row-major scan order (channel 0).
Eigen::Vector2i argmax_node(const ImageGrid& c);

DecodeResult decode_argmax(const ImageGrid& c);

/// Central-difference derivatives of log(c) at an interior node.
struct LogDerivatives {
    Eigen::Vector2d gradient;
    Eigen::Matrix2d hessian;
};

/// Returns false if any stencil sample is outside the grid or non-positive.
bool log_derivatives(const ImageGrid& c, const Eigen::Vector2i& node, LogDerivatives& out);

/// k = k_h - H^-1 g on log(c). Falls back to argmax (degenerate = true) when
/// the stencil leaves the grid, |det H| < 1e-12 or H is not negative definite.
DecodeResult decode_dark(const ImageGrid& c);

/// k = k_h + 0.25 * sign(dc) per axis, sign(0) = +1, central differences
/// (one-sided at the border).
DecodeResult decode_biased_quarter(const ImageGrid& c);

/// ||C - C'|| + ||C * (X - X')|| + ||C * (Y - Y')||, L2 norms, C the target
/// mask. Throws std::invalid_argument on a size mismatch.
double loss_ccrf(const CcrfMaps& pred, const CcrfMaps& target);

/// ||C - C'||.
double loss_mse(const ImageGrid& pred, const ImageGrid& target);

}  // namespace keycal
