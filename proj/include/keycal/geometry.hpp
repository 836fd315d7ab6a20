#pragma once

// Homogeneous 2D coordinate-system transforms in continuous unit-length space.
//
// A plane of wp pixels spans wp - 1 unit lengths: sample points sit on the
// integer positions 0 .. wp - 1 and the image extent is measured between the
// first and last sample. Every transform here acts on column points
// (x, y, 1) and composes right-to-left, so compose(a, b) applies b first.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "keycal/errors.hpp"

namespace keycal {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;
using Point = Point2<double>;

/// Image extent, in pixel counts and in unit lengths (units = px - 1).
class PlaneSize {
public:
    PlaneSize(int width_px, int height_px) : width_px_(width_px), height_px_(height_px) {
        if (width_px < 2 || height_px < 2) {
            throw std::invalid_argument("PlaneSize: each axis needs at least 2 pixels, got " +
                                        std::to_string(width_px) + "x" + std::to_string(height_px));
        }
    }

    int width_px() const { return width_px_; }
    int height_px() const { return height_px_; }
    double width_units() const { return static_cast<double>(width_px_ - 1); }
    double height_units() const { return static_cast<double>(height_px_ - 1); }

    /// True if p lies in the closed rectangle [0, w] x [0, h].
    bool contains(const Point& p) const {
        return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= width_units() && p.y() <= height_units();
    }

    friend bool operator==(const PlaneSize&, const PlaneSize&) = default;

private:
    int width_px_;
    int height_px_;
};

/// Region of interest given by its center and extent, in source units.
struct Roi {
    double cx = 0.0;
    double cy = 0.0;
    double w = 1.0;
    double h = 1.0;

    static Roi make(double cx, double cy, double w, double h) {
        Roi r{cx, cy, w, h};
        r.validate();
        return r;
    }

    void validate() const {
        if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(cx) || !std::isfinite(cy) ||
            !std::isfinite(w) || !std::isfinite(h)) {
            throw std::invalid_argument("Roi: extents must be positive and finite");
        }
    }
};

/// 3x3 homogeneous affine matrix whose bottom row is exactly (0, 0, 1).
template <typename Scalar>
class Transform2 {
public:
    using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
    using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
    using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

    Transform2() : m_(Matrix3::Identity()) {}

    Transform2(const Matrix2& linear, const Vector2& translation) : m_(Matrix3::Identity()) {
        m_.template topLeftCorner<2, 2>() = linear;
        m_.template topRightCorner<2, 1>() = translation;
    }

    /// Rejects matrices whose bottom row is not exactly (0, 0, 1).
    explicit Transform2(const Matrix3& m) : m_(m) {
        if (m(2, 0) != Scalar(0) || m(2, 1) != Scalar(0) || m(2, 2) != Scalar(1)) {
            throw std::invalid_argument("Transform2: bottom row must be (0, 0, 1)");
        }
    }

    static Transform2 identity() { return Transform2(); }

    const Matrix3& matrix() const { return m_; }
    Matrix2 linear() const { return m_.template topLeftCorner<2, 2>(); }
    Vector2 translation() const { return m_.template topRightCorner<2, 1>(); }
    Scalar operator()(int r, int c) const { return m_(r, c); }

    template <typename NewScalar>
    Transform2<NewScalar> cast() const {
        return Transform2<NewScalar>(linear().template cast<NewScalar>(),
                                     translation().template cast<NewScalar>());
    }

private:
    Matrix3 m_;
};

using Transform2D = Transform2<double>;

template <typename Scalar>
Transform2<Scalar> compose(const Transform2<Scalar>& outer, const Transform2<Scalar>& inner) {
    return Transform2<Scalar>(outer.linear() * inner.linear(),
                              outer.linear() * inner.translation() + outer.translation());
}

template <typename Scalar>
Transform2<Scalar> operator*(const Transform2<Scalar>& outer, const Transform2<Scalar>& inner) {
    return compose(outer, inner);
}

template <typename Scalar>
Point2<Scalar> apply_point(const Transform2<Scalar>& t, const Point2<Scalar>& p) {
    return t.linear() * p + t.translation();
}

template <typename Scalar>
Transform2<Scalar> invert(const Transform2<Scalar>& t) {
    const auto a = t.linear();
    const Scalar det = a.determinant();
    const Scalar scale = a.cwiseAbs().maxCoeff();
    if (!std::isfinite(det) ||
        std::abs(det) <= std::numeric_limits<Scalar>::epsilon() * scale * scale) {
        throw SingularTransformError("invert: transform is singular");
    }
    typename Transform2<Scalar>::Matrix2 inv;
    inv << a(1, 1) / det, -a(0, 1) / det, -a(1, 0) / det, a(0, 0) / det;
    return Transform2<Scalar>(inv, -(inv * t.translation()));
}

template <typename Scalar>
Transform2<Scalar> t_translate(Scalar dx, Scalar dy) {
    return Transform2<Scalar>(Eigen::Matrix<Scalar, 2, 2>::Identity(),
                              Eigen::Matrix<Scalar, 2, 1>(dx, dy));
}

/// Moves the origin to the top-left corner of the ROI.
template <typename Scalar = double>
Transform2<Scalar> t_crop(const Roi& roi) {
    roi.validate();
    return t_translate<Scalar>(Scalar(-roi.cx + 0.5 * roi.w), Scalar(-roi.cy + 0.5 * roi.h));
}

/// Changes the unit length so that an extent of (src_w, src_h) becomes
/// (dst_w, dst_h). Whether callers pass unit lengths or pixel counts decides
/// whether corners stay aligned.
template <typename Scalar>
Transform2<Scalar> t_resize(Scalar src_w, Scalar src_h, Scalar dst_w, Scalar dst_h) {
    if (!(src_w > 0) || !(src_h > 0) || !(dst_w > 0) || !(dst_h > 0)) {
        throw std::invalid_argument("t_resize: extents must be positive");
    }
    return Transform2<Scalar>(Eigen::DiagonalMatrix<Scalar, 2>(dst_w / src_w, dst_h / src_h).toDenseMatrix(),
                              Eigen::Matrix<Scalar, 2, 1>::Zero());
}

/// Rotation by theta (radians) about center; center is a fixed point.
template <typename Scalar>
Transform2<Scalar> t_rotate(Scalar theta, const Point2<Scalar>& center) {
    using std::cos;
    using std::sin;
    // Quarter turns come out of sin/cos with ~1e-17 residue from the rounded
    // angle; zero it so they stay exact node permutations.
    const auto snap = [](Scalar v) {
        return std::abs(v) < std::numeric_limits<Scalar>::epsilon() ? Scalar(0) : v;
    };
    const Scalar c = snap(cos(theta));
    const Scalar s = snap(sin(theta));
    Eigen::Matrix<Scalar, 2, 2> r;
    r << c, -s, s, c;
    return Transform2<Scalar>(r, center - r * center);
}

/// Horizontal mirror of a plane `width` units wide.
template <typename Scalar>
Transform2<Scalar> t_flip(Scalar width) {
    if (!(width > 0)) {
        throw std::invalid_argument("t_flip: width must be positive");
    }
    Eigen::Matrix<Scalar, 2, 2> f;
    f << Scalar(-1), Scalar(0), Scalar(0), Scalar(1);
    return Transform2<Scalar>(f, Eigen::Matrix<Scalar, 2, 1>(width, Scalar(0)));
}

template <typename Scalar>
Scalar max_abs_diff(const Transform2<Scalar>& a, const Transform2<Scalar>& b) {
    return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace keycal
