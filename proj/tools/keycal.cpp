// keycal command-line frontend.
//
// Exit codes: 0 success, 1 verification failure or runtime error, 2 usage error.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "keycal/biaslab.hpp"
#include "keycal/codec.hpp"
#include "keycal/experiments.hpp"
#include "keycal/geometry.hpp"
#include "keycal/io.hpp"
#include "keycal/pipeline.hpp"
#include "keycal/raster.hpp"

namespace {

using nlohmann::ordered_json;
using namespace keycal;

// Thrown for flag combinations that parse but make no sense together.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

PlaneSize parse_plane(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw UsageError("expected WxH, got '" + s + "'");
    try {
        return PlaneSize(std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1)));
    } catch (const std::invalid_argument& e) {
        throw UsageError("bad size '" + s + "': " + e.what());
    }
}

ordered_json to_json(const Transform2D& t) {
    ordered_json m = ordered_json::array();
    for (int r = 0; r < 3; ++r) m.push_back({t(r, 0), t(r, 1), t(r, 2)});
    return m;
}

ordered_json to_json(const Point& p) { return ordered_json::array({p.x(), p.y()}); }

bool is_pgm(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0;
}

ImageGrid read_any(const std::string& path) { return is_pgm(path) ? read_pgm(path) : read_grid_file(path); }

// ---------------------------------------------------------------------------

struct TransformArgs {
    std::vector<double> roi;
    std::string input = "192x256";
    std::string output = "48x64";
    std::string convention = "unit";
    double theta_deg = 0.0;
    bool flip = false;
    std::vector<double> point;
};

int cmd_transform(const TransformArgs& a) {
    PipelineConfig cfg;
    cfg.input = parse_plane(a.input);
    cfg.output = parse_plane(a.output);
    cfg.convention = parse_convention(a.convention);
    const Roi roi = Roi::make(a.roi[0], a.roi[1], a.roi[2], a.roi[3]);

    const Transform2D train = train_transform(roi, deg_to_rad(a.theta_deg), a.flip, cfg);
    const Transform2D test = test_transform(roi, cfg);
    const Transform2D io = input_to_output(cfg);
    const Transform2D os = output_to_source(roi, cfg);

    ordered_json out;
    out["source_to_input_train"] = to_json(train);
    out["source_to_input_test"] = to_json(test);
    out["input_to_output"] = to_json(io);
    out["output_to_source"] = to_json(os);
    if (!a.point.empty()) {
        const Point ps(a.point[0], a.point[1]);
        const Point pi = apply_point(train, ps);
        const Point po = apply_point(io, pi);
        out["point"] = {{"source", to_json(ps)},
                        {"input", to_json(pi)},
                        {"output", to_json(po)},
                        {"back_to_source", to_json(apply_point(os, apply_point(io, apply_point(test, ps))))}};
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

struct WarpArgs {
    std::string in, out, size;
    std::vector<double> matrix;
    std::vector<double> roi;
    double theta_deg = 0.0;
    bool flip = false;
    std::string convention = "unit";
    std::string border = "zero";
    int maxval = 255;
};

int cmd_warp(const WarpArgs& a) {
    if (a.matrix.empty() == a.roi.empty()) throw UsageError("warp: give exactly one of --matrix or --roi");
    const PlaneSize dst = parse_plane(a.size);
    Transform2D t;
    if (!a.matrix.empty()) {
        Eigen::Matrix2d lin;
        lin << a.matrix[0], a.matrix[1], a.matrix[3], a.matrix[4];
        t = Transform2D(lin, Eigen::Vector2d(a.matrix[2], a.matrix[5]));
    } else {
        PipelineConfig cfg;
        cfg.input = dst;
        cfg.convention = parse_convention(a.convention);
        t = train_transform(Roi::make(a.roi[0], a.roi[1], a.roi[2], a.roi[3]), deg_to_rad(a.theta_deg), a.flip, cfg);
    }
    BorderPolicy policy;
    if (a.border == "zero") policy = BorderPolicy::ZeroFill;
    else if (a.border == "clamp") policy = BorderPolicy::ClampToEdge;
    else throw UsageError("unknown border policy '" + a.border + "' (zero|clamp)");

    const ImageGrid result = warp(read_any(a.in), t, dst, policy);
    if (is_pgm(a.out)) write_pgm(a.out, result, a.maxval);
    else write_grid_file(a.out, result);

    ordered_json out;
    out["transform"] = to_json(t);
    out["size"] = {dst.width_px(), dst.height_px()};
    out["channels"] = result.channels();
    std::cout << out.dump(2) << '\n';
    return 0;
}

struct CodecArgs {
    std::string codec = "cf";
    std::vector<double> point;
    std::string size = "48x64";
    double sigma = kDefaultSigma;
    std::optional<double> radius;
    std::string in, out;
};

int cmd_encode(const CodecArgs& a) {
    const CodecKind codec = parse_codec(a.codec);
    const PlaneSize dims = parse_plane(a.size);
    const Point k(a.point[0], a.point[1]);
    ordered_json out;
    out["codec"] = a.codec;
    out["point"] = to_json(k);
    out["size"] = {dims.width_px(), dims.height_px()};
    if (codec == CodecKind::Ccrf) {
        const double r = a.radius.value_or(default_ccrf_radius(dims));
        write_grid_file(a.out, ccrf_to_grid(encode_ccrf(k, dims, r)));
        out["radius"] = r;
        out["channels"] = 3;
    } else {
        write_grid_file(a.out, encode_gaussian(k, dims, a.sigma).c);
        out["sigma"] = a.sigma;
        out["channels"] = 1;
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_decode(const CodecArgs& a) {
    const CodecKind codec = parse_codec(a.codec);
    const ImageGrid grid = read_any(a.in);
    DecodeResult r;
    switch (codec) {
        case CodecKind::Ccrf: r = decode_ccrf(ccrf_from_grid(grid)); break;
        case CodecKind::Cf: r = decode_dark(grid.extract_channel(0)); break;
        case CodecKind::CfBiasedDecode: r = decode_biased_quarter(grid.extract_channel(0)); break;
        case CodecKind::ArgmaxOnly: r = decode_argmax(grid.extract_channel(0)); break;
    }
    ordered_json out;
    out["codec"] = a.codec;
    out["k"] = to_json(r.k);
    out["argmax"] = {r.argmax.x(), r.argmax.y()};
    out["degenerate"] = r.degenerate;
    std::cout << out.dump(2) << '\n';
    return 0;
}

struct SimArgs {
    std::string config;
    bool ucst = false, ft = false, snoop = false, ec = false, rno = false;
    std::string codec, combine, input, output;
    std::optional<double> sigma, radius;
    std::string mode = "analytic";
    std::int64_t n = 100000;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string coco;
    double padding = 1.25;
    std::vector<double> roi;
    std::string report;
    std::string format = "csv";
    std::string preset;
};

PipelineConfig build_config(const SimArgs& a) {
    PipelineConfig cfg;
    if (!a.config.empty()) {
        cfg = read_config_file(a.config);
    } else {
        cfg.convention = Convention::PixelCount;
    }
    if (a.ucst) cfg.convention = Convention::UnitLength;
    if (a.ft) cfg.flip_test = true;
    if (a.ec && !a.snoop) throw UsageError("--ec requires --snoop");
    if (a.snoop) cfg.compensation = a.ec ? Compensation::SnoopPlusEc : Compensation::Snoop;
    if (a.rno) cfg.rno = true;
    if (!a.codec.empty()) cfg.codec = parse_codec(a.codec);
    if (!a.combine.empty()) cfg.combine = parse_combine(a.combine);
    if (!a.input.empty()) cfg.input = parse_plane(a.input);
    if (!a.output.empty()) cfg.output = parse_plane(a.output);
    if (a.sigma) cfg.sigma = *a.sigma;
    if (a.radius) cfg.radius = *a.radius;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

void emit(const std::vector<ErrorStats>& stats, const SimArgs& a) {
    const ReportFormat fmt = parse_report_format(a.format);
    write_report(std::cout, stats, fmt);
    if (!a.report.empty()) write_report(a.report, stats, fmt);
}

int cmd_simulate(const SimArgs& a) {
    const PipelineConfig cfg = build_config(a);
    const OracleMode mode = parse_oracle_mode(a.mode);
    KeypointSampler sampler;
    const double aspect = static_cast<double>(cfg.input.width_px()) / cfg.input.height_px();
    if (!a.coco.empty()) {
        const CocoKeypoints coco = load_coco_keypoints(a.coco);
        std::cerr << "loaded " << coco.instances.size() << " instances, skipped " << coco.skipped << '\n';
        sampler = sampler_from_instances(coco.instances, aspect, a.padding);
    } else if (!a.roi.empty()) {
        sampler.rois = {Roi::make(a.roi[0], a.roi[1], a.roi[2], a.roi[3])};
    }
    emit({monte_carlo(cfg, mode, a.n, a.seed, sampler, a.jobs)}, a);
    return 0;
}

int cmd_ablate(const SimArgs& a) {
    const OracleMode mode = parse_oracle_mode(a.mode);
    std::vector<ErrorStats> rows;
    for (const AblationRow& row : ablation_preset(a.preset)) {
        KeypointSampler sampler;
        sampler.rois = {row.roi};
        ErrorStats st = monte_carlo(row.config, mode, a.n, a.seed, sampler, a.jobs);
        st.label = a.preset + " " + row.id + ": " + st.label;
        rows.push_back(std::move(st));
    }
    emit(rows, a);
    return 0;
}

int cmd_verify(std::int64_t n, std::uint64_t seed, int jobs) {
    bool all = true;
    for (const CheckResult& c : run_verification(n, seed, jobs)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        all = all && c.passed;
    }
    std::cout << (all ? "all checks passed" : "verification FAILED") << '\n';
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unbiased keypoint data-processing calculus and bias simulator"};
    app.require_subcommand(1);

    TransformArgs ta;
    auto* transform = app.add_subcommand("transform", "Print the pipeline transforms for a ROI and map a point");
    transform->add_option("--roi", ta.roi, "ROI center and extent: cx cy w h")->expected(4)->required();
    transform->add_option("--input", ta.input, "Network input size WxH")->capture_default_str();
    transform->add_option("--output", ta.output, "Network output size WxH")->capture_default_str();
    transform->add_option("--convention", ta.convention, "unit | pixel")->capture_default_str();
    transform->add_option("--theta", ta.theta_deg, "Training rotation in degrees")->capture_default_str();
    transform->add_flag("--flip", ta.flip, "Include the training flip");
    transform->add_option("--point", ta.point, "Source point x y to map")->expected(2);

    WarpArgs wa;
    auto* warp_cmd = app.add_subcommand("warp", "Inverse-warp an image (PGM or text grid) with bilinear sampling");
    warp_cmd->add_option("--in", wa.in, "Source image (.pgm or text grid)")->required()->check(CLI::ExistingFile);
    warp_cmd->add_option("--out", wa.out, "Destination image (.pgm or text grid)")->required();
    warp_cmd->add_option("--size", wa.size, "Destination size WxH")->required();
    warp_cmd->add_option("--matrix", wa.matrix, "Affine rows m00 m01 m02 m10 m11 m12")->expected(6);
    warp_cmd->add_option("--roi", wa.roi, "Build the training transform from ROI cx cy w h")->expected(4);
    warp_cmd->add_option("--theta", wa.theta_deg, "Rotation in degrees (with --roi)")->capture_default_str();
    warp_cmd->add_flag("--flip", wa.flip, "Flip (with --roi)");
    warp_cmd->add_option("--convention", wa.convention, "unit | pixel (with --roi)")->capture_default_str();
    warp_cmd->add_option("--border", wa.border, "zero | clamp")->capture_default_str();
    warp_cmd->add_option("--maxval", wa.maxval, "PGM output maxval")->capture_default_str();

    CodecArgs ea;
    auto* encode = app.add_subcommand("encode", "Encode a keypoint into a heatmap target (text grid)");
    encode->add_option("--codec", ea.codec, "ccrf | cf | cf-biased | argmax")->capture_default_str();
    encode->add_option("--point", ea.point, "Keypoint x y in output units")->expected(2)->required();
    encode->add_option("--size", ea.size, "Heatmap size WxH")->capture_default_str();
    encode->add_option("--sigma", ea.sigma, "Gaussian sigma")->capture_default_str();
    encode->add_option("--radius", ea.radius, "CCRF disc radius (default 0.0625 * width)");
    encode->add_option("--out", ea.out, "Output text grid")->required();

    CodecArgs da;
    auto* decode = app.add_subcommand("decode", "Decode a heatmap (text grid or PGM) to a sub-pixel keypoint");
    decode->add_option("--codec", da.codec, "ccrf | cf | cf-biased | argmax")->capture_default_str();
    decode->add_option("--in", da.in, "Heatmap file")->required()->check(CLI::ExistingFile);

    SimArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo error statistics for one pipeline configuration");
    simulate->add_option("--config", sa.config, "key=value config file (flags override it)")->check(CLI::ExistingFile);
    simulate->add_flag("--ucst", sa.ucst, "Unit-length coordinate convention (otherwise pixel counts)");
    simulate->add_flag("--ft", sa.ft, "Flip testing");
    simulate->add_flag("--snoop", sa.snoop, "Shift the flipped result by one output unit");
    simulate->add_flag("--ec", sa.ec, "Extra compensation of the residual after --snoop");
    simulate->add_flag("--rno", sa.rno, "Resize network output to input resolution before decoding");
    simulate->add_option("--codec", sa.codec, "ccrf | cf | cf-biased | argmax");
    simulate->add_option("--combine", sa.combine, "coords | heatmaps");
    simulate->add_option("--input", sa.input, "Network input size WxH");
    simulate->add_option("--output", sa.output, "Network output size WxH");
    simulate->add_option("--sigma", sa.sigma, "Gaussian sigma");
    simulate->add_option("--radius", sa.radius, "CCRF radius");
    simulate->add_option("--mode", sa.mode, "analytic | full")->capture_default_str();
    simulate->add_option("-n,--trials", sa.n, "Number of trials")->capture_default_str();
    simulate->add_option("--seed", sa.seed, "PRNG seed")->required();
    simulate->add_option("--jobs", sa.jobs, "Worker threads")->capture_default_str();
    simulate->add_option("--coco", sa.coco, "Sample ROIs and keypoints from a COCO keypoint file")
        ->check(CLI::ExistingFile);
    simulate->add_option("--padding", sa.padding, "ROI padding for --coco boxes")->capture_default_str();
    simulate->add_option("--roi", sa.roi, "Fixed ROI cx cy w h")->expected(4);
    simulate->add_option("--report", sa.report, "Also write the report to this path");
    simulate->add_option("--format", sa.format, "csv | json")->capture_default_str();

    SimArgs aa;
    aa.n = 2000;
    aa.mode = "full";
    auto* ablate = app.add_subcommand("ablate", "Run an ablation configuration grid");
    ablate->add_option("--preset", aa.preset, "topdown | bottomup")->required();
    ablate->add_option("--mode", aa.mode, "analytic | full")->capture_default_str();
    ablate->add_option("-n,--trials", aa.n, "Trials per configuration")->capture_default_str();
    ablate->add_option("--seed", aa.seed, "PRNG seed")->required();
    ablate->add_option("--jobs", aa.jobs, "Worker threads")->capture_default_str();
    ablate->add_option("--report", aa.report, "Also write the report to this path");
    ablate->add_option("--format", aa.format, "csv | json")->capture_default_str();

    std::int64_t verify_n = 20000;
    std::uint64_t verify_seed = 20200720;
    int verify_jobs = 1;
    auto* verify = app.add_subcommand("verify", "Check the transform identities and closed-form error values");
    verify->add_option("-n,--trials", verify_n, "Trials per Monte Carlo check")->capture_default_str();
    verify->add_option("--seed", verify_seed, "PRNG seed")->capture_default_str();
    verify->add_option("--jobs", verify_jobs, "Worker threads")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*transform) return cmd_transform(ta);
        if (*warp_cmd) return cmd_warp(wa);
        if (*encode) return cmd_encode(ea);
        if (*decode) return cmd_decode(da);
        if (*simulate) return cmd_simulate(sa);
        if (*ablate) return cmd_ablate(aa);
        if (*verify) return cmd_verify(verify_n, verify_seed, verify_jobs);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
