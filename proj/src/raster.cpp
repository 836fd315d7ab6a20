#include "keycal/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace keycal {

ImageGrid::ImageGrid(PlaneSize size, int channels)
    : size_(size), channels_(channels) {
    if (channels < 1) {
        throw std::invalid_argument("ImageGrid: channels must be positive");
    }
    data_.assign(static_cast<std::size_t>(size.width_px()) * size.height_px() * channels, 0.0);
}

ImageGrid::ImageGrid(PlaneSize size, int channels, std::vector<double> data)
    : size_(size), channels_(channels), data_(std::move(data)) {
    if (channels < 1) {
        throw std::invalid_argument("ImageGrid: channels must be positive");
    }
    const auto expected = static_cast<std::size_t>(size.width_px()) * size.height_px() * channels;
    if (data_.size() != expected) {
        throw std::invalid_argument("ImageGrid: data length " + std::to_string(data_.size()) +
                                    " does not match " + std::to_string(expected));
    }
    if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
        throw std::invalid_argument("ImageGrid: values must be finite");
    }
}

ImageGrid ImageGrid::from_array(const ChannelArray& values) {
    ImageGrid g(PlaneSize(static_cast<int>(values.cols()), static_cast<int>(values.rows())), 1);
    g.channel(0) = values;
    return g;
}

ImageGrid::ConstChannelMap ImageGrid::channel(int c) const {
    return ConstChannelMap(data_.data() + c, height(), width(),
                           ChannelStride(static_cast<Eigen::Index>(width()) * channels_, channels_));
}

ImageGrid::ChannelMap ImageGrid::channel(int c) {
    return ChannelMap(data_.data() + c, height(), width(),
                      ChannelStride(static_cast<Eigen::Index>(width()) * channels_, channels_));
}

ImageGrid ImageGrid::extract_channel(int c) const {
    if (c < 0 || c >= channels_) {
        throw std::out_of_range("ImageGrid: channel index out of range");
    }
    ImageGrid out(size_, 1);
    out.channel(0) = channel(c);
    return out;
}

ImageGrid stack_channels(std::span<const ImageGrid> planes) {
    if (planes.empty()) {
        throw std::invalid_argument("stack_channels: no planes");
    }
    ImageGrid out(planes.front().size(), static_cast<int>(planes.size()));
    for (std::size_t i = 0; i < planes.size(); ++i) {
        if (planes[i].size() != out.size() || planes[i].channels() != 1) {
            throw std::invalid_argument("stack_channels: planes must be single-channel and equal-sized");
        }
        out.channel(static_cast<int>(i)) = planes[i].channel(0);
    }
    return out;
}

namespace {

// Resolves an integer node to an in-bounds index, or -1 when it contributes 0.
inline int resolve(int i, int n, BorderPolicy policy) {
    if (i >= 0 && i < n) return i;
    if (policy == BorderPolicy::ClampToEdge) return std::clamp(i, 0, n - 1);
    return -1;
}

// Accumulates the bilinear sample at p into out[0 .. channels).
void sample_into(const ImageGrid& grid, const Point& p, BorderPolicy policy, double* out) {
    const int channels = grid.channels();
    std::fill(out, out + channels, 0.0);

    const double fx0 = std::floor(p.x());
    const double fy0 = std::floor(p.y());
    // Points far outside the grid cannot be represented as int; they only
    // ever see border values.
    const double lim = static_cast<double>(std::numeric_limits<int>::max() / 2);
    const int x0 = static_cast<int>(std::clamp(fx0, -lim, lim));
    const int y0 = static_cast<int>(std::clamp(fy0, -lim, lim));
    const double ax = p.x() - fx0;
    const double ay = p.y() - fy0;

    const int xs[2] = {resolve(x0, grid.width(), policy), resolve(x0 + 1, grid.width(), policy)};
    const int ys[2] = {resolve(y0, grid.height(), policy), resolve(y0 + 1, grid.height(), policy)};
    const double wx[2] = {1.0 - ax, ax};
    const double wy[2] = {1.0 - ay, ay};

    for (int j = 0; j < 2; ++j) {
        if (ys[j] < 0 || wy[j] == 0.0) continue;
        for (int i = 0; i < 2; ++i) {
            if (xs[i] < 0 || wx[i] == 0.0) continue;
            const double w = wx[i] * wy[j];
            for (int c = 0; c < channels; ++c) {
                out[c] += w * grid.at(xs[i], ys[j], c);
            }
        }
    }
}

}  // namespace

Eigen::VectorXd bilinear_sample(const ImageGrid& grid, const Point& p, BorderPolicy policy) {
    if (!p.allFinite()) {
        throw std::invalid_argument("bilinear_sample: point must be finite");
    }
    Eigen::VectorXd out(grid.channels());
    sample_into(grid, p, policy, out.data());
    return out;
}

ImageGrid warp(const ImageGrid& src, const Transform2D& t, const PlaneSize& dst_size,
               BorderPolicy policy) {
    const Transform2D back = invert(t);
    ImageGrid dst(dst_size, src.channels());
    double* out = dst.data().data();
    for (int y = 0; y < dst_size.height_px(); ++y) {
        for (int x = 0; x < dst_size.width_px(); ++x, out += src.channels()) {
            sample_into(src, apply_point(back, Point(x, y)), policy, out);
        }
    }
    return dst;
}

ImageGrid flip_heatmap(const ImageGrid& grid) {
    ImageGrid out(grid.size(), grid.channels());
    for (int c = 0; c < grid.channels(); ++c) {
        out.channel(c) = grid.channel(c).rowwise().reverse();
    }
    return out;
}

// ---------------------------------------------------------------------------
// PGM

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw IoError("PGM: truncated header");
    return tok;
}

int pgm_int(std::istream& in) {
    const std::string tok = pgm_token(in);
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw IoError("PGM: bad header value '" + tok + "'");
    }
}

}  // namespace

ImageGrid read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    const std::string magic = pgm_token(in);
    if (magic != "P2" && magic != "P5") {
        throw IoError("PGM: unsupported magic '" + magic + "' in " + path);
    }
    const int w = pgm_int(in);
    const int h = pgm_int(in);
    const int maxval = pgm_int(in);
    if (maxval < 1 || maxval > 65535) throw IoError("PGM: maxval out of range");

    ImageGrid grid(PlaneSize(w, h), 1);
    auto data = grid.data();
    if (magic == "P2") {
        for (auto& v : data) {
            int x;
            if (!(in >> x)) throw IoError("PGM: truncated pixel data in " + path);
            v = x;
        }
    } else {
        const bool wide = maxval > 255;
        for (auto& v : data) {
            const int hi = in.get();
            if (hi == EOF) throw IoError("PGM: truncated pixel data in " + path);
            if (wide) {
                const int lo = in.get();
                if (lo == EOF) throw IoError("PGM: truncated pixel data in " + path);
                v = (hi << 8) | lo;
            } else {
                v = hi;
            }
        }
    }
    return grid;
}

void write_pgm(const std::string& path, const ImageGrid& grid, int maxval, bool binary) {
    if (grid.channels() != 1) throw std::invalid_argument("write_pgm: grid must be single-channel");
    if (maxval < 1 || maxval > 65535) throw std::invalid_argument("write_pgm: maxval out of range");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);

    out << (binary ? "P5" : "P2") << '\n' << grid.width() << ' ' << grid.height() << '\n' << maxval << '\n';
    const auto quantize = [maxval](double v) {
        return static_cast<int>(std::clamp(std::lround(v), 0L, static_cast<long>(maxval)));
    };
    int col = 0;
    for (double v : grid.data()) {
        const int q = quantize(v);
        if (binary) {
            if (maxval > 255) out.put(static_cast<char>((q >> 8) & 0xff));
            out.put(static_cast<char>(q & 0xff));
        } else {
            out << q << (++col % grid.width() == 0 ? '\n' : ' ');
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Text grid

ImageGrid read_grid(std::istream& in) {
    int rows = 0, cols = 0, channels = 0;
    if (!(in >> rows >> cols >> channels)) throw IoError("grid: missing 'rows cols channels' header");
    const auto n = static_cast<std::size_t>(rows) * cols * channels;
    if (rows < 2 || cols < 2 || channels < 1) throw IoError("grid: bad dimensions");
    std::vector<double> data(n);
    for (auto& v : data) {
        if (!(in >> v)) throw IoError("grid: expected " + std::to_string(n) + " values");
    }
    return ImageGrid(PlaneSize(cols, rows), channels, std::move(data));
}

void write_grid(std::ostream& out, const ImageGrid& grid) {
    out << grid.height() << ' ' << grid.width() << ' ' << grid.channels() << '\n';
    const auto old_prec = out.precision(std::numeric_limits<double>::max_digits10);
    const std::size_t row_len = static_cast<std::size_t>(grid.width()) * grid.channels();
    const auto data = grid.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data[i] << ((i + 1) % row_len == 0 ? '\n' : ' ');
    }
    out.precision(old_prec);
}

ImageGrid read_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_grid(in);
}

void write_grid_file(const std::string& path, const ImageGrid& grid) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_grid(out, grid);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace keycal
