#include "keycal/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "keycal/codec.hpp"

namespace keycal {

Combine PipelineConfig::effective_combine() const {
    if (combine) return *combine;
    return codec == CodecKind::Ccrf ? Combine::AverageCoords : Combine::AverageHeatmaps;
}

double PipelineConfig::effective_radius() const {
    return radius.value_or(default_ccrf_radius(output));
}

void PipelineConfig::validate() const {
    if (compensation != Compensation::None && !flip_test) {
        throw std::invalid_argument("compensation requires flip testing");
    }
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (radius && !(*radius > 0.0)) throw std::invalid_argument("radius must be positive");
    for (const auto& [a, b] : flip_pairs) {
        if (a < 0 || b < 0) throw std::invalid_argument("flip pair indices must be non-negative");
    }
}

Eigen::Vector2d plane_extent(const PlaneSize& size, Convention convention) {
    if (convention == Convention::UnitLength) return {size.width_units(), size.height_units()};
    return {static_cast<double>(size.width_px()), static_cast<double>(size.height_px())};
}

Transform2D train_transform(const Roi& roi, double theta, bool flipped, const PipelineConfig& cfg) {
    roi.validate();
    const Eigen::Vector2d in = plane_extent(cfg.input, cfg.convention);
    Transform2D t = t_resize(roi.w, roi.h, in.x(), in.y()) * t_crop(roi);
    if (theta != 0.0) t = t_rotate(theta, Point(0.5 * in)) * t;
    if (flipped) t = t_flip(cfg.input.width_units()) * t;
    return t;
}

Transform2D test_transform(const Roi& roi, const PipelineConfig& cfg) {
    return train_transform(roi, 0.0, false, cfg);
}

Transform2D input_to_output(const PipelineConfig& cfg) {
    const Eigen::Vector2d in = plane_extent(cfg.input, cfg.convention);
    const Eigen::Vector2d out = plane_extent(cfg.output, cfg.convention);
    return t_resize(in.x(), in.y(), out.x(), out.y());
}

Transform2D output_to_source(const Roi& roi, const PipelineConfig& cfg) {
    roi.validate();
    const Eigen::Vector2d out = plane_extent(cfg.output, cfg.convention);
    return t_translate(roi.cx - 0.5 * roi.w, roi.cy - 0.5 * roi.h) *
           t_resize(out.x(), out.y(), roi.w, roi.h);
}

Point flip_average(const Point& k_o, const Point& k_o_flip, const PipelineConfig& cfg) {
    Point back = apply_point(t_flip(cfg.output.width_units()), k_o_flip);
    if (cfg.compensation != Compensation::None) back.x() += 1.0;
    return 0.5 * (k_o + back);
}

Point extra_compensation(const Point& k, const PipelineConfig& cfg) {
    if (cfg.compensation != Compensation::SnoopPlusEc) return k;
    return Point(k.x() - 1.0 / (2.0 * cfg.stride()), k.y());
}

Point flip_combine(const Point& k_o, const Point& k_o_flip, const PipelineConfig& cfg) {
    return extra_compensation(flip_average(k_o, k_o_flip, cfg), cfg);
}

ImageGrid shift_heatmap_x(const ImageGrid& h, double dx) {
    return warp(h, t_translate(dx, 0.0), h.size(), BorderPolicy::ZeroFill);
}

ImageGrid rno_upsample(const ImageGrid& h, const PipelineConfig& cfg) {
    return warp(h, invert(input_to_output(cfg)), cfg.input, BorderPolicy::ZeroFill);
}

std::vector<Point> swap_flip_pairs(std::vector<Point> points,
                                   const std::vector<std::pair<int, int>>& pairs) {
    const auto n = static_cast<int>(points.size());
    for (const auto& [a, b] : pairs) {
        if (a < 0 || b < 0 || a >= n || b >= n) {
            throw std::out_of_range("swap_flip_pairs: index out of range");
        }
        std::swap(points[a], points[b]);
    }
    return points;
}

std::vector<std::pair<int, int>> coco_flip_pairs() {
    return {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}};
}

// ---------------------------------------------------------------------------
// Names

std::string to_string(Convention v) { return v == Convention::UnitLength ? "unit" : "pixel"; }

std::string to_string(Compensation v) {
    switch (v) {
        case Compensation::None: return "none";
        case Compensation::Snoop: return "snoop";
        case Compensation::SnoopPlusEc: return "snoop+ec";
    }
    return "?";
}

std::string to_string(CodecKind v) {
    switch (v) {
        case CodecKind::Ccrf: return "ccrf";
        case CodecKind::Cf: return "cf";
        case CodecKind::CfBiasedDecode: return "cf-biased";
        case CodecKind::ArgmaxOnly: return "argmax";
    }
    return "?";
}

std::string to_string(Combine v) { return v == Combine::AverageCoords ? "coords" : "heatmaps"; }

Convention parse_convention(const std::string& s) {
    if (s == "unit") return Convention::UnitLength;
    if (s == "pixel") return Convention::PixelCount;
    throw std::invalid_argument("unknown convention '" + s + "' (unit|pixel)");
}

Compensation parse_compensation(const std::string& s) {
    if (s == "none") return Compensation::None;
    if (s == "snoop") return Compensation::Snoop;
    if (s == "snoop+ec") return Compensation::SnoopPlusEc;
    throw std::invalid_argument("unknown compensation '" + s + "' (none|snoop|snoop+ec)");
}

CodecKind parse_codec(const std::string& s) {
    if (s == "ccrf") return CodecKind::Ccrf;
    if (s == "cf") return CodecKind::Cf;
    if (s == "cf-biased") return CodecKind::CfBiasedDecode;
    if (s == "argmax") return CodecKind::ArgmaxOnly;
    throw std::invalid_argument("unknown codec '" + s + "' (ccrf|cf|cf-biased|argmax)");
}

Combine parse_combine(const std::string& s) {
    if (s == "coords") return Combine::AverageCoords;
    if (s == "heatmaps") return Combine::AverageHeatmaps;
    throw std::invalid_argument("unknown combine '" + s + "' (coords|heatmaps)");
}

std::string describe(const PipelineConfig& cfg) {
    std::ostringstream os;
    os << "ucst=" << (cfg.convention == Convention::UnitLength) << " ft=" << cfg.flip_test
       << " snoop=" << (cfg.compensation != Compensation::None)
       << " ec=" << (cfg.compensation == Compensation::SnoopPlusEc) << " codec=" << to_string(cfg.codec)
       << " rno=" << cfg.rno << ' ' << cfg.input.width_px() << 'x' << cfg.input.height_px() << "->"
       << cfg.output.width_px() << 'x' << cfg.output.height_px();
    return os.str();
}

// ---------------------------------------------------------------------------
// key=value config

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

double parse_real(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("expected a number, got '" + s + "'");
    return v;
}

PlaneSize parse_size(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw std::invalid_argument("expected WxH, got '" + s + "'");
    return PlaneSize(std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1)));
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& s) {
    std::vector<std::pair<int, int>> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto c = item.find(':');
        if (c == std::string::npos) throw std::invalid_argument("expected a:b pair, got '" + item + "'");
        out.emplace_back(std::stoi(item.substr(0, c)), std::stoi(item.substr(c + 1)));
    }
    return out;
}

}  // namespace

void write_config(std::ostream& out, const PipelineConfig& cfg) {
    const auto old_prec = out.precision(std::numeric_limits<double>::max_digits10);
    out << "convention=" << to_string(cfg.convention) << '\n'
        << "input=" << cfg.input.width_px() << 'x' << cfg.input.height_px() << '\n'
        << "output=" << cfg.output.width_px() << 'x' << cfg.output.height_px() << '\n'
        << "stride=" << cfg.stride() << '\n'
        << "flip_test=" << (cfg.flip_test ? "true" : "false") << '\n'
        << "compensation=" << to_string(cfg.compensation) << '\n'
        << "codec=" << to_string(cfg.codec) << '\n';
    if (cfg.combine) out << "combine=" << to_string(*cfg.combine) << '\n';
    out << "rno=" << (cfg.rno ? "true" : "false") << '\n' << "sigma=" << cfg.sigma << '\n';
    if (cfg.radius) out << "radius=" << *cfg.radius << '\n';
    out << "flip_pairs=";
    for (std::size_t i = 0; i < cfg.flip_pairs.size(); ++i) {
        out << (i ? "," : "") << cfg.flip_pairs[i].first << ':' << cfg.flip_pairs[i].second;
    }
    out << '\n';
    out.precision(old_prec);
}

PipelineConfig read_config(std::istream& in) {
    PipelineConfig cfg;
    std::optional<double> stride;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "convention") cfg.convention = parse_convention(value);
            else if (key == "input") cfg.input = parse_size(value);
            else if (key == "output") cfg.output = parse_size(value);
            else if (key == "stride") stride = parse_real(value);
            else if (key == "flip_test") cfg.flip_test = parse_bool(value);
            else if (key == "compensation") cfg.compensation = parse_compensation(value);
            else if (key == "codec") cfg.codec = parse_codec(value);
            else if (key == "combine") cfg.combine = parse_combine(value);
            else if (key == "rno") cfg.rno = parse_bool(value);
            else if (key == "sigma") cfg.sigma = parse_real(value);
            else if (key == "radius") cfg.radius = parse_real(value);
            else if (key == "flip_pairs") cfg.flip_pairs = parse_pairs(value);
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (stride && std::abs(*stride - cfg.stride()) > 1e-9) {
        throw std::invalid_argument("config: stride does not match input/output widths");
    }
    cfg.validate();
    return cfg;
}

PipelineConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_config(in);
}

}  // namespace keycal
