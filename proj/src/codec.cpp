#include "keycal/codec.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace keycal {

namespace {

void require_inside(const Point& k, const PlaneSize& dims, const char* who) {
    if (!k.allFinite() || !dims.contains(k)) {
        throw OutOfBoundsError(std::string(who) + ": keypoint outside the plane");
    }
}

void require_same_size(const ImageGrid& a, const ImageGrid& b, const char* who) {
    if (a.size() != b.size() || a.channels() != b.channels()) {
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    }
}

}  // namespace

CcrfMaps encode_ccrf(const Point& k, const PlaneSize& dims, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("encode_ccrf: radius must be positive");
    require_inside(k, dims, "encode_ccrf");

    CcrfMaps t{ImageGrid(dims, 1), ImageGrid(dims, 1), ImageGrid(dims, 1), radius};
    const double r2 = radius * radius;
    for (int y = 0; y < dims.height_px(); ++y) {
        for (int x = 0; x < dims.width_px(); ++x) {
            const double dx = k.x() - x;
            const double dy = k.y() - y;
            if (dx * dx + dy * dy < r2) {
                t.c.at(x, y) = 1.0;
                t.x_off.at(x, y) = dx;
                t.y_off.at(x, y) = dy;
            }
        }
    }
    return t;
}

DecodeResult decode_ccrf(const CcrfMaps& pred) {
    require_same_size(pred.c, pred.x_off, "decode_ccrf");
    require_same_size(pred.c, pred.y_off, "decode_ccrf");
    const Eigen::Vector2i h = argmax_node(pred.c);
    if (!(pred.c.at(h.x(), h.y()) > 0.0)) {
        throw NoDetectionError("decode_ccrf: classification map has no positive response");
    }
    DecodeResult r;
    r.argmax = h;
    r.k = Point(h.x() + pred.x_off.at(h.x(), h.y()), h.y() + pred.y_off.at(h.x(), h.y()));
    return r;
}

CcrfMaps flip_ccrf(const CcrfMaps& maps) {
    CcrfMaps out{flip_heatmap(maps.c), flip_heatmap(maps.x_off), flip_heatmap(maps.y_off), maps.radius};
    out.x_off.channel(0) = -out.x_off.channel(0);
    return out;
}

ImageGrid ccrf_to_grid(const CcrfMaps& maps) {
    const ImageGrid planes[] = {maps.c, maps.x_off, maps.y_off};
    return stack_channels(planes);
}

CcrfMaps ccrf_from_grid(const ImageGrid& grid, double radius) {
    if (grid.channels() != 3) {
        throw std::invalid_argument("ccrf_from_grid: expected 3 channels (c, x_off, y_off)");
    }
    return CcrfMaps{grid.extract_channel(0), grid.extract_channel(1), grid.extract_channel(2), radius};
}

GaussianTarget encode_gaussian(const Point& k, const PlaneSize& dims, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("encode_gaussian: sigma must be positive");
    require_inside(k, dims, "encode_gaussian");

    GaussianTarget t{ImageGrid(dims, 1), sigma};
    const double denom = 2.0 * sigma * sigma;
    for (int y = 0; y < dims.height_px(); ++y) {
        const double dy = y - k.y();
        for (int x = 0; x < dims.width_px(); ++x) {
            const double dx = x - k.x();
            t.c.at(x, y) = std::exp(-(dx * dx + dy * dy) / denom);
        }
    }
    return t;
}

Eigen::Vector2i argmax_node(const ImageGrid& c) {
    Eigen::Index row = 0, col = 0;
    // Eigen's maxCoeff visits column-major; scan explicitly to get the first
    // maximum in row-major order.
    const auto m = c.channel(0);
    double best = m(0, 0);
    for (Eigen::Index y = 0; y < m.rows(); ++y) {
        for (Eigen::Index x = 0; x < m.cols(); ++x) {
            if (m(y, x) > best) {
                best = m(y, x);
                row = y;
                col = x;
            }
        }
    }
    return {static_cast<int>(col), static_cast<int>(row)};
}

DecodeResult decode_argmax(const ImageGrid& c) {
    DecodeResult r;
    r.argmax = argmax_node(c);
    r.k = r.argmax.cast<double>();
    return r;
}

bool log_derivatives(const ImageGrid& c, const Eigen::Vector2i& node, LogDerivatives& out) {
    const int x = node.x();
    const int y = node.y();
    if (x < 1 || y < 1 || x + 1 >= c.width() || y + 1 >= c.height()) return false;

    double l[3][3];
    for (int j = -1; j <= 1; ++j) {
        for (int i = -1; i <= 1; ++i) {
            const double v = c.at(x + i, y + j);
            if (!(v > 0.0)) return false;
            l[j + 1][i + 1] = std::log(v);
        }
    }
    out.gradient = {0.5 * (l[1][2] - l[1][0]), 0.5 * (l[2][1] - l[0][1])};
    const double dxx = l[1][2] - 2.0 * l[1][1] + l[1][0];
    const double dyy = l[2][1] - 2.0 * l[1][1] + l[0][1];
    const double dxy = 0.25 * (l[2][2] - l[0][2] - l[2][0] + l[0][0]);
    out.hessian << dxx, dxy, dxy, dyy;
    return true;
}

DecodeResult decode_dark(const ImageGrid& c) {
    DecodeResult r = decode_argmax(c);
    LogDerivatives d;
    if (!log_derivatives(c, r.argmax, d)) {
        r.degenerate = true;
        return r;
    }
    const double det = d.hessian.determinant();
    const bool negative_definite = d.hessian(0, 0) < 0.0 && det > 0.0;
    if (std::abs(det) < 1e-12 || !negative_definite) {
        r.degenerate = true;
        return r;
    }
    r.k -= d.hessian.inverse() * d.gradient;
    return r;
}

DecodeResult decode_biased_quarter(const ImageGrid& c) {
    DecodeResult r = decode_argmax(c);
    const int x = r.argmax.x();
    const int y = r.argmax.y();

    const auto diff = [](double hi, double lo) { return hi - lo >= 0.0 ? 1.0 : -1.0; };
    const double sx = diff(c.at(std::min(x + 1, c.width() - 1), y), c.at(std::max(x - 1, 0), y));
    const double sy = diff(c.at(x, std::min(y + 1, c.height() - 1)), c.at(x, std::max(y - 1, 0)));
    r.k += 0.25 * Point(sx, sy);
    return r;
}

double loss_ccrf(const CcrfMaps& pred, const CcrfMaps& target) {
    for (const ImageGrid* g : {&pred.c, &pred.x_off, &pred.y_off, &target.x_off, &target.y_off}) {
        require_same_size(*g, target.c, "loss_ccrf");
    }
    const auto mask = target.c.channel(0);
    const double cls = (target.c.channel(0) - pred.c.channel(0)).matrix().norm();
    const double reg_x = (mask * (target.x_off.channel(0) - pred.x_off.channel(0))).matrix().norm();
    const double reg_y = (mask * (target.y_off.channel(0) - pred.y_off.channel(0))).matrix().norm();
    return cls + reg_x + reg_y;
}

double loss_mse(const ImageGrid& pred, const ImageGrid& target) {
    require_same_size(pred, target, "loss_mse");
    double acc = 0.0;
    const auto a = pred.data();
    const auto b = target.data();
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

}  // namespace keycal
