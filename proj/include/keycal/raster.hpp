#pragma once

// Discrete sampling of the continuous image plane. Sample (x, y) of a grid
// sits at integer position (x, y) in unit-length coordinates, so a grid of
// wp x hp pixels covers [0, wp - 1] x [0, hp - 1].

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "keycal/geometry.hpp"

namespace keycal {

enum class BorderPolicy { ZeroFill, ClampToEdge };

/// Row-major, channel-interleaved grid of finite reals.
class ImageGrid {
public:
    using ChannelArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using ChannelStride = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
    using ChannelMap = Eigen::Map<ChannelArray, 0, ChannelStride>;
    using ConstChannelMap = Eigen::Map<const ChannelArray, 0, ChannelStride>;

    ImageGrid(PlaneSize size, int channels);
    ImageGrid(PlaneSize size, int channels, std::vector<double> data);

    /// Single-channel grid from a (height x width) array.
    static ImageGrid from_array(const ChannelArray& values);

    const PlaneSize& size() const { return size_; }
    int width() const { return size_.width_px(); }
    int height() const { return size_.height_px(); }
    int channels() const { return channels_; }

    double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
    double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    /// (height x width) view of one channel.
    ConstChannelMap channel(int c) const;
    ChannelMap channel(int c);

    /// New single-channel grid holding a copy of channel c.
    ImageGrid extract_channel(int c) const;

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * size_.width_px() + x) * channels_ + c;
    }

    PlaneSize size_;
    int channels_;
    std::vector<double> data_;
};

/// Stacks single-channel grids of equal size into one multi-channel grid.
ImageGrid stack_channels(std::span<const ImageGrid> planes);

Eigen::VectorXd bilinear_sample(const ImageGrid& grid, const Point& p,
                                BorderPolicy policy = BorderPolicy::ZeroFill);

/// Inverse-warp resampling: dst(p) = src(invert(t) * p) for every destination
/// node p, bilinear on the source. Throws SingularTransformError.
ImageGrid warp(const ImageGrid& src, const Transform2D& t, const PlaneSize& dst_size,
               BorderPolicy policy = BorderPolicy::ZeroFill);

/// Column reversal, i.e. warp by t_flip(w) specialised to an index permutation.
ImageGrid flip_heatmap(const ImageGrid& grid);

// Plain PGM. Binary (P5) output supports maxval up to 65535; values are
// rounded and clamped to [0, maxval] on write.
ImageGrid read_pgm(const std::string& path);
void write_pgm(const std::string& path, const ImageGrid& grid, int maxval = 255, bool binary = true);

// Text grid: header "rows cols channels" followed by rows*cols*channels
// whitespace-separated reals in row-major, channel-interleaved order.
ImageGrid read_grid(std::istream& in);
void write_grid(std::ostream& out, const ImageGrid& grid);
ImageGrid read_grid_file(const std::string& path);
void write_grid_file(const std::string& path, const ImageGrid& grid);

}  // namespace keycal
