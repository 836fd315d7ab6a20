#include "keycal/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace keycal {

using nlohmann::json;

CocoKeypoints parse_coco_keypoints(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("COCO: malformed JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("images") || !doc.contains("annotations") ||
        !doc["images"].is_array() || !doc["annotations"].is_array()) {
        throw ParseError("COCO: expected top-level 'images' and 'annotations' arrays", 0);
    }

    std::unordered_map<std::int64_t, PlaneSize> images;
    for (const auto& img : doc["images"]) {
        try {
            images.emplace(img.at("id").get<std::int64_t>(),
                           PlaneSize(img.at("width").get<int>(), img.at("height").get<int>()));
        } catch (const json::exception& e) {
            throw ParseError(std::string("COCO: bad image entry: ") + e.what(), 0);
        }
    }

    CocoKeypoints out;
    if (doc.contains("categories") && doc["categories"].is_array()) {
        for (const auto& cat : doc["categories"]) {
            if (cat.contains("keypoints") && cat["keypoints"].is_array()) {
                out.joint_count = static_cast<int>(cat["keypoints"].size());
                break;
            }
        }
    }

    for (const auto& ann : doc["annotations"]) {
        std::int64_t id = 0;
        std::int64_t image_id = 0;
        std::vector<double> kps;
        std::vector<double> bbox;
        try {
            id = ann.at("id").get<std::int64_t>();
            image_id = ann.at("image_id").get<std::int64_t>();
            kps = ann.at("keypoints").get<std::vector<double>>();
            bbox = ann.at("bbox").get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw ParseError(std::string("COCO: bad annotation entry: ") + e.what(), 0);
        }

        const auto img = images.find(image_id);
        if (img == images.end()) {
            throw ReferentialIntegrityError("COCO: annotation " + std::to_string(id) +
                                            " references missing image " + std::to_string(image_id));
        }
        if (out.joint_count == 0) out.joint_count = static_cast<int>(kps.size() / 3);
        if (kps.size() != static_cast<std::size_t>(out.joint_count) * 3 || bbox.size() != 4) {
            throw ParseError("COCO: annotation " + std::to_string(id) + " has a malformed keypoint or bbox array", 0);
        }

        Instance inst;
        inst.annotation_id = id;
        inst.image_id = image_id;
        inst.image_size = img->second;
        std::copy(bbox.begin(), bbox.end(), inst.bbox.begin());
        int labeled = 0;
        for (std::size_t j = 0; j < kps.size(); j += 3) {
            const int v = static_cast<int>(kps[j + 2]);
            if (v < 0 || v > 2) {
                throw ParseError("COCO: annotation " + std::to_string(id) + " has visibility outside {0,1,2}", 0);
            }
            labeled += v > 0;
            inst.keypoints.push_back({Point(kps[j], kps[j + 1]), v});
        }
        if (labeled == 0 || !(inst.bbox[2] > 0.0) || !(inst.bbox[3] > 0.0)) {
            ++out.skipped;
            continue;
        }
        out.instances.push_back(std::move(inst));
    }
    return out;
}

CocoKeypoints load_coco_keypoints(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_coco_keypoints(text);
}

Roi bbox_to_roi(const std::array<double, 4>& bbox, double target_aspect, double padding) {
    const auto [x, y, w0, h0] = bbox;
    if (!(w0 > 0.0) || !(h0 > 0.0)) throw std::invalid_argument("bbox_to_roi: box extents must be positive");
    if (!(target_aspect > 0.0) || !(padding > 0.0)) {
        throw std::invalid_argument("bbox_to_roi: aspect and padding must be positive");
    }
    double w = w0;
    double h = h0;
    if (w > target_aspect * h) {
        h = w / target_aspect;
    } else if (w < target_aspect * h) {
        w = h * target_aspect;
    }
    return Roi::make(x + 0.5 * w0, y + 0.5 * h0, w * padding, h * padding);
}

KeypointSampler sampler_from_instances(const std::vector<Instance>& instances, double target_aspect,
                                       double padding) {
    KeypointSampler s;
    s.rois.clear();
    for (const auto& inst : instances) {
        s.rois.push_back(bbox_to_roi(inst.bbox, target_aspect, padding));
        for (const auto& kp : inst.keypoints) {
            if (kp.visibility > 0) s.source_keypoints.emplace_back(s.rois.size() - 1, kp.p);
        }
    }
    if (s.rois.empty()) throw std::invalid_argument("sampler_from_instances: no instances");
    return s;
}

ReportFormat parse_report_format(const std::string& s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw std::invalid_argument("unknown report format '" + s + "' (csv|json)");
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fmt9(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

double round9(double v) { return std::isnan(v) ? v : std::strtod(fmt9(v).c_str(), nullptr); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

constexpr const char* kColumns[] = {"label",      "n_trials",   "n_skipped",         "n_failed",
                                    "mean_abs_x", "mean_abs_y", "var_abs_x",         "var_abs_y",
                                    "mean_abs_x_source",        "mean_abs_y_source"};

double* real_fields(ErrorStats& s, int i) {
    double* f[] = {&s.mean_abs_x, &s.mean_abs_y, &s.var_abs_x, &s.var_abs_y, &s.mean_abs_x_source,
                   &s.mean_abs_y_source};
    return f[i];
}

double parse_real(const std::string& s) {
    if (s == "nan" || s == "null") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

}  // namespace

void write_report(std::ostream& out, const std::vector<ErrorStats>& stats, ReportFormat format) {
    if (format == ReportFormat::Csv) {
        for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
        out << '\n';
        for (auto s : stats) {
            out << csv_field(s.label) << ',' << s.n_trials << ',' << s.n_skipped << ',' << s.n_failed;
            for (int i = 0; i < 6; ++i) out << ',' << fmt9(*real_fields(s, i));
            out << '\n';
        }
        return;
    }
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (auto s : stats) {
        nlohmann::ordered_json row = nlohmann::ordered_json::object();
        row["label"] = s.label;
        row["n_trials"] = s.n_trials;
        row["n_skipped"] = s.n_skipped;
        row["n_failed"] = s.n_failed;
        for (int i = 0; i < 6; ++i) {
            const double v = *real_fields(s, i);
            row[kColumns[4 + i]] = std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(round9(v));
        }
        rows.push_back(std::move(row));
    }
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    doc["stats"] = std::move(rows);
    out << doc.dump(2) << '\n';
}

void write_report(const std::string& path, const std::vector<ErrorStats>& stats, ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_report(out, stats, format);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

std::vector<ErrorStats> read_report(std::istream& in, ReportFormat format) {
    std::vector<ErrorStats> out;
    if (format == ReportFormat::Csv) {
        std::string line;
        if (!std::getline(in, line)) throw ParseError("report: empty CSV", 0);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = split_csv(line);
            if (f.size() != std::size(kColumns)) throw ParseError("report: wrong column count", 0);
            ErrorStats s;
            s.label = f[0];
            s.n_trials = std::stoll(f[1]);
            s.n_skipped = std::stoll(f[2]);
            s.n_failed = std::stoll(f[3]);
            for (int i = 0; i < 6; ++i) *real_fields(s, i) = parse_real(f[4 + i]);
            out.push_back(std::move(s));
        }
        return out;
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("report: malformed JSON: ") + e.what(), e.byte);
    }
    for (const auto& row : doc.at("stats")) {
        ErrorStats s;
        s.label = row.at("label").get<std::string>();
        s.n_trials = row.at("n_trials").get<std::int64_t>();
        s.n_skipped = row.at("n_skipped").get<std::int64_t>();
        s.n_failed = row.at("n_failed").get<std::int64_t>();
        for (int i = 0; i < 6; ++i) {
            const auto& v = row.at(kColumns[4 + i]);
            *real_fields(s, i) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace keycal
