// Command-line front end for the glenoid bone-loss pipeline.
//
// Subcommands:
//   measure      mask + rim -> bone-loss report JSON
//   eval         prediction/truth CSVs -> reliability report + plot CSVs
//   phantom      generate synthetic plates with known truth
//   tune-ratio   sweep the diameter/height ratio grid against truth
//   awing-check  finite-difference audit of the Adaptive Wing gradient
//   rim-gt       landmark -> tube -> skeleton -> heatmap ground-truth chain
//
// Exit codes: 0 ok, 1 usage, 2 pipeline stage failure, 3 I/O.

#include "glenoid/awing.hpp"
#include "glenoid/geometry.hpp"
#include "glenoid/metrics.hpp"
#include "glenoid/phantom.hpp"
#include "glenoid/report.hpp"
#include "glenoid/rim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace glenoid;

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_input(const std::string& path, const std::string& stage) {
    fs::path p(path);
    if (fs::exists(p)) return;
    // mask paths may be given without the .json suffix
    if (p.extension() != ".json" && fs::exists(p.string() + ".json")) return;
    throw PipelineError(stage, "file not found");
}

void write_text_atomic(const std::string& text, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + path);
        out << text;
    }
    std::rename(tmp.c_str(), path.c_str());
}

// Reads (id, value) pairs from the first two CSV columns; a non-numeric
// second field on the first row is treated as a header.
std::map<std::string, double> read_csv_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::map<std::string, double> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id, value;
        std::getline(ss, id, ',');
        std::getline(ss, value, ',');
        try {
            rows[id] = std::stod(value);
        } catch (const std::exception&) {
            if (!first) throw IoError("malformed CSV row in " + path + ": " + line);
        }
        first = false;
    }
    if (rows.empty()) throw IoError("no data rows in " + path);
    return rows;
}

void run_parallel(int n, int jobs, const std::function<void(int)>& body) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::string case_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "case_%03d", i);
    return buf;
}

// --- measure -------------------------------------------------------------

int cmd_measure(const std::string& mask_path, const std::string& rim_path,
                bool rim_is_heatmap, RunConfig config, const std::string& out_path,
                const std::string& intermediates_dir) {
    require_input(mask_path, "mask");
    require_input(rim_path, "rim");

    const auto t0 = std::chrono::steady_clock::now();
    VoxelMask mask = read_mask(mask_path);
    PointSet3 rim;
    if (rim_is_heatmap) {
        RimHeatmap h;
        h.grid = read_mask(rim_path);
        h.sigma_mm = config.sigma_mm;
        rim = skeletonize(binarize_heatmap(h, config.heatmap_threshold));
    } else {
        rim = read_point_set(rim_path);
    }
    if (config.laterality == "Right") {
        rim = flip_sagittal_points(rim, mask);
        mask = flip_sagittal(mask);
    } else if (config.laterality != "Left") {
        throw CLI::ValidationError("laterality must be Left or Right");
    }

    MeasurementReport report = measure_bone_loss(mask, rim, config.measure_config());

    if (!intermediates_dir.empty()) {
        fs::create_directories(intermediates_dir);
        const EnFacePlane plane = fit_plane(rim);
        json pj;
        pj["origin_mm"] = {plane.origin.x(), plane.origin.y(), plane.origin.z()};
        pj["normal"] = {plane.normal.x(), plane.normal.y(), plane.normal.z()};
        pj["basis_u"] = {plane.basis_u.x(), plane.basis_u.y(), plane.basis_u.z()};
        pj["basis_v"] = {plane.basis_v.x(), plane.basis_v.y(), plane.basis_v.z()};
        report.plane_path = (fs::path(intermediates_dir) / "plane.json").string();
        write_json_atomic(pj, report.plane_path);

        const Raster2 raster = project_mask(mask, plane);
        json rj;
        rj["nx"] = raster.nx;
        rj["ny"] = raster.ny;
        rj["cell_mm"] = raster.cell_mm;
        rj["origin_mm"] = {raster.origin_u, raster.origin_v};
        std::string cells;
        cells.reserve(raster.data.size());
        for (std::uint8_t v : raster.data) cells.push_back(v ? '1' : '0');
        rj["cells"] = cells;
        report.projected_mask_path =
            (fs::path(intermediates_dir) / "projected_mask.json").string();
        write_json_atomic(rj, report.projected_mask_path);

        json uv = json::array();
        for (const auto& p : project(rim, plane)) uv.push_back({p.x(), p.y()});
        json rimj;
        rimj["points_uv_mm"] = std::move(uv);
        report.projected_rim_path =
            (fs::path(intermediates_dir) / "projected_rim.json").string();
        write_json_atomic(rimj, report.projected_rim_path);
    }

    const double elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    const json j = to_json(report, config, elapsed_ms);
    if (out_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_json_atomic(j, out_path);
    return 0;
}

// --- eval ----------------------------------------------------------------

json band_report(const PairedMeasurements& pairs) {
    json j;
    if (pairs.size() >= 5) {
        j = to_json(reliability(pairs));
        j["n"] = pairs.size();
    } else {
        j["n"] = pairs.size();
        j["status"] = "insufficient n";
    }
    return j;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path,
             const RunConfig& config, const std::string& out_path,
             const std::string& plots_dir) {
    const auto pred = read_csv_pairs(pred_path);
    const auto truth = read_csv_pairs(truth_path);
    if (pred.size() != truth.size())
        throw IoError("prediction and truth case ids do not match");

    PairedMeasurements pairs; // rater_a = prediction, rater_b = truth
    for (const auto& [id, value] : pred) {
        auto it = truth.find(id);
        if (it == truth.end())
            throw IoError("prediction and truth case ids do not match");
        pairs.case_ids.push_back(id);
        pairs.rater_a.push_back(value);
        pairs.rater_b.push_back(it->second);
    }

    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["n"] = pairs.size();
    j["overall"] = to_json(reliability(pairs));
    const ConfusionMatrix cm = confusion_matrix(pairs.rater_a, pairs.rater_b,
                                                config.cutoff_low_pct,
                                                config.cutoff_high_pct);
    j["confusion"] = to_json(cm);

    const char* band_names[3] = {"Low", "Moderate", "High"};
    json bands;
    for (int b = 0; b < 3; ++b) {
        PairedMeasurements sub;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const Severity s = classify_severity(pairs.rater_b[i], config.cutoff_low_pct,
                                                 config.cutoff_high_pct);
            if (static_cast<int>(s) != b) continue;
            sub.case_ids.push_back(pairs.case_ids[i]);
            sub.rater_a.push_back(pairs.rater_a[i]);
            sub.rater_b.push_back(pairs.rater_b[i]);
        }
        bands[band_names[b]] = band_report(sub);
    }
    j["by_band"] = std::move(bands);
    j["config"] = to_json(config);

    if (!plots_dir.empty()) {
        fs::create_directories(plots_dir);
        const BlandAltman ba = bland_altman(pairs);
        std::ostringstream bap;
        bap << "case_id,mean,diff\n";
        for (std::size_t i = 0; i < pairs.size(); ++i)
            bap << pairs.case_ids[i] << ","
                << 0.5 * (pairs.rater_a[i] + pairs.rater_b[i]) << ","
                << pairs.rater_a[i] - pairs.rater_b[i] << "\n";
        bap << "# bias=" << ba.bias << " loa_low=" << ba.loa_low
            << " loa_high=" << ba.loa_high << "\n";
        write_text_atomic(bap.str(), (fs::path(plots_dir) / "bland_altman.csv").string());

        std::ostringstream sc;
        sc << "case_id,pred,truth\n";
        for (std::size_t i = 0; i < pairs.size(); ++i)
            sc << pairs.case_ids[i] << "," << pairs.rater_a[i] << ","
               << pairs.rater_b[i] << "\n";
        write_text_atomic(sc.str(), (fs::path(plots_dir) / "scatter.csv").string());

        std::ostringstream cf;
        cf << "truth_band,pred_low,pred_moderate,pred_high\n";
        for (int t = 0; t < 3; ++t)
            cf << band_names[t] << "," << cm.counts[t][0] << "," << cm.counts[t][1]
               << "," << cm.counts[t][2] << "\n";
        write_text_atomic(cf.str(), (fs::path(plots_dir) / "confusion.csv").string());
    }

    if (out_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_json_atomic(j, out_path);
    return 0;
}

// --- phantom -------------------------------------------------------------

int cmd_phantom(const RandomPhantomOptions& opts, const std::string& out_dir, int jobs) {
    fs::create_directories(out_dir);
    const auto specs = random_specs(opts);
    std::vector<PhantomCase> cases(specs.size());
    run_parallel(static_cast<int>(specs.size()), jobs,
                 [&](int i) { cases[i] = generate(specs[i]); });

    std::ostringstream csv;
    csv << "case_id,bone_loss_truth_pct,height_truth_mm,normal_x,normal_y,normal_z\n";
    csv.precision(17);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string name = case_name(static_cast<int>(i));
        write_mask(cases[i].mask, (fs::path(out_dir) / name).string());
        write_point_set(cases[i].rim_truth,
                        (fs::path(out_dir) / (name + "_rim.json")).string());
        const Eigen::Vector3d& n = cases[i].normal_truth;
        csv << name << "," << cases[i].bone_loss_truth_pct << ","
            << cases[i].height_truth_mm << "," << n.x() << "," << n.y() << ","
            << n.z() << "\n";
    }
    write_text_atomic(csv.str(), (fs::path(out_dir) / "truth.csv").string());
    std::cout << "wrote " << cases.size() << " phantoms to " << out_dir << "\n";
    return 0;
}

// --- tune-ratio ----------------------------------------------------------

int cmd_tune_ratio(const std::string& cases_dir, RunConfig config,
                   const std::string& out_path, int jobs) {
    const std::string truth_path = (fs::path(cases_dir) / "truth.csv").string();
    require_input(truth_path, "truth");
    const auto truth = read_csv_pairs(truth_path);

    std::vector<std::string> ids;
    for (const auto& [id, value] : truth) ids.push_back(id);
    std::vector<VoxelMask> masks(ids.size());
    std::vector<PointSet3> rims(ids.size());
    run_parallel(static_cast<int>(ids.size()), jobs, [&](int i) {
        masks[i] = read_mask((fs::path(cases_dir) / ids[i]).string());
        rims[i] = read_point_set((fs::path(cases_dir) / (ids[i] + "_rim.json")).string());
    });
    std::vector<TuneCase> tune_cases;
    for (std::size_t i = 0; i < ids.size(); ++i)
        tune_cases.push_back({&masks[i], &rims[i], truth.at(ids[i])});

    const TuneResult result =
        tune_diameter_ratio(tune_cases, default_ratio_grid(), config.measure_config());

    std::ostringstream csv;
    csv << "ratio,mae_pct\n";
    for (const auto& [ratio, mae] : result.mae_curve)
        csv << ratio << "," << mae << "\n";
    std::cout << csv.str() << "best_ratio," << result.best_ratio << "\n";
    if (!out_path.empty()) {
        json j;
        j["schema_version"] = kReportSchemaVersion;
        j["best_ratio"] = result.best_ratio;
        json curve = json::array();
        for (const auto& [ratio, mae] : result.mae_curve)
            curve.push_back({{"ratio", ratio}, {"mae_pct", mae}});
        j["mae_curve"] = std::move(curve);
        j["config"] = to_json(config);
        write_json_atomic(j, out_path);
    }
    return 0;
}

// --- awing-check ---------------------------------------------------------

int cmd_awing_check(int samples, std::uint64_t seed) {
    const AWingParams params;
    std::uint64_t state = seed;
    auto uniform = [&state] {
        return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    };

    double max_rel = 0.0;
    const double h = 1e-6;
    for (int i = 0; i < samples; ++i) {
        const double y = uniform();
        double d = 2.0 * uniform() - 1.0;
        if (std::abs(d) < 1e-4) d = std::copysign(1e-4, d == 0.0 ? 1.0 : d);
        const double yhat = y + d;
        const double g = awing_grad(y, yhat, params);
        const double fd =
            (awing_loss(y, yhat + h, params) - awing_loss(y, yhat - h, params)) / (2.0 * h);
        const double rel = std::abs(g - fd) / std::max(std::abs(fd), 1e-12);
        max_rel = std::max(max_rel, rel);
    }

    std::cout << "y,loss_at_theta_minus,loss_at_theta_plus,branch_gap\n";
    for (int i = 0; i <= 10; ++i) {
        const double y = i / 10.0;
        const double lo = awing_loss(y, y + params.theta - 1e-9, params);
        const double hi = awing_loss(y, y + params.theta + 1e-9, params);
        std::cout << y << "," << lo << "," << hi << "," << std::abs(hi - lo) << "\n";
    }
    std::cout << "max_grad_rel_error," << max_rel << "\n";
    std::cout << "loss_at_zero_error," << awing_loss(0.37, 0.37, params) << "\n";
    return max_rel < 1e-5 ? 0 : 2;
}

// --- rim-gt --------------------------------------------------------------

int cmd_rim_gt(const std::string& landmarks_path, const std::string& grid_path,
               const RunConfig& config, const std::string& out_base) {
    require_input(landmarks_path, "landmarks");
    require_input(grid_path, "grid");
    const PointSet3 landmarks = read_point_set(landmarks_path);
    const VoxelMask grid = read_mask(grid_path);

    const PointSet3 resampled = resample_polyline(landmarks, config.resample_n);
    const VoxelMask tube = spline_tube(resampled, config.tube_radius_mm, grid);
    const PointSet3 skeleton = skeletonize(tube);
    const RimHeatmap heatmap = gaussian_heatmap(skeleton, config.sigma_mm, grid);
    const PointSet3 recovered =
        skeletonize(binarize_heatmap(heatmap, config.heatmap_threshold));

    write_mask(heatmap.grid, out_base + "_heatmap");
    write_point_set(skeleton, out_base + "_skeleton.json");
    write_point_set(recovered, out_base + "_recovered.json");
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["landmarks"] = landmarks.size();
    j["skeleton_points"] = skeleton.size();
    j["recovered_points"] = recovered.size();
    j["chamfer_mm"] = chamfer_distance(skeleton, recovered);
    j["config"] = to_json(config);
    write_json_atomic(j, out_base + "_report.json");
    std::cout << j.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Glenoid bone-loss measurement pipeline"};
    app.require_subcommand(1);

    RunConfig config;
    std::string mask_path, rim_path, out_path, intermediates_dir, plots_dir;
    std::string pred_path, truth_path, cases_dir, landmarks_path, grid_path, out_base;
    bool rim_is_heatmap = false;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
    RandomPhantomOptions phantom_opts;
    int awing_samples = 1000;
    std::uint64_t awing_seed = 7;

    auto add_cutoffs = [&config](CLI::App* cmd) {
        cmd->add_option("--cutoff-low", config.cutoff_low_pct, "Low/Moderate cutoff (%)");
        cmd->add_option("--cutoff-high", config.cutoff_high_pct, "Moderate/High cutoff (%)");
    };

    CLI::App* measure = app.add_subcommand("measure", "Measure bone loss for one case");
    measure->add_option("--mask", mask_path, "Binary mask (JSON header path)")->required();
    measure->add_option("--rim", rim_path, "Rim landmarks point set, or heatmap with --rim-heatmap")
        ->required();
    measure->add_flag("--rim-heatmap", rim_is_heatmap,
                      "Treat --rim as a heatmap grid: binarize then skeletonize");
    measure->add_option("--laterality", config.laterality, "Left or Right")
        ->check(CLI::IsMember({"Left", "Right"}));
    measure->add_option("--ratio", config.diameter_ratio, "Fitted diameter / glenoid height");
    measure->add_flag("!--unconstrained", config.constrained, "Free-radius circle fit");
    measure->add_option("--angular-step", config.angular_step_deg, "Defect scan step (deg)");
    measure->add_option("--threshold", config.heatmap_threshold, "Heatmap binarization level");
    add_cutoffs(measure);
    measure->add_option("--out", out_path, "Report JSON path (default: stdout)");
    measure->add_option("--intermediates", intermediates_dir,
                        "Directory for plane/projection artifacts");

    CLI::App* eval = app.add_subcommand("eval", "Agreement statistics between two CSVs");
    eval->add_option("--pred", pred_path, "CSV: case_id,value")->required();
    eval->add_option("--truth", truth_path, "CSV: case_id,value")->required();
    add_cutoffs(eval);
    eval->add_option("--out", out_path, "Report JSON path (default: stdout)");
    eval->add_option("--plots", plots_dir, "Directory for plot CSVs");

    CLI::App* phantom = app.add_subcommand("phantom", "Generate synthetic plates");
    phantom->add_option("--n", phantom_opts.count, "Number of cases")
        ->check(CLI::PositiveNumber);
    phantom->add_option("--seed", phantom_opts.seed, "Master RNG seed");
    phantom->add_option("--spacing", phantom_opts.spacing_mm, "Voxel spacing (mm)")
        ->check(CLI::PositiveNumber);
    phantom->add_option("--defect-min", phantom_opts.defect_min_pct, "Minimum defect (%)");
    phantom->add_option("--defect-max", phantom_opts.defect_max_pct, "Maximum defect (%)");
    phantom->add_option("--cup-depth", phantom_opts.cup_depth_mm,
                        "Carve an offset articular cup of this depth (mm)");
    phantom->add_option("--height-ratio", phantom_opts.height_ratio,
                        "Circle diameter / total height used by the generator");
    phantom->add_option("--out", out_path, "Output directory")->required();
    phantom->add_option("--jobs", jobs, "Concurrent cases")->check(CLI::PositiveNumber);

    CLI::App* tune = app.add_subcommand("tune-ratio", "Sweep the ratio grid against truth");
    tune->add_option("--cases", cases_dir, "Directory from `phantom` (with truth.csv)")
        ->required();
    tune->add_option("--out", out_path, "Curve JSON path");
    tune->add_option("--jobs", jobs, "Concurrent case loads")->check(CLI::PositiveNumber);

    CLI::App* awing = app.add_subcommand("awing-check", "Audit the loss gradient");
    awing->add_option("--samples", awing_samples, "Finite-difference sample count")
        ->check(CLI::PositiveNumber);
    awing->add_option("--seed", awing_seed, "Sample RNG seed");

    CLI::App* rimgt = app.add_subcommand("rim-gt", "Landmark to heatmap ground-truth chain");
    rimgt->add_option("--landmarks", landmarks_path, "Ordered rim landmarks")->required();
    rimgt->add_option("--grid", grid_path, "Grid template mask")->required();
    rimgt->add_option("--sigma", config.sigma_mm, "Heatmap sigma (mm)");
    rimgt->add_option("--tube-radius", config.tube_radius_mm, "Tube radius (mm)");
    rimgt->add_option("--resample-n", config.resample_n, "Resampled landmark count");
    rimgt->add_option("--threshold", config.heatmap_threshold, "Binarization level");
    rimgt->add_option("--out", out_base, "Output base path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (measure->parsed())
            return cmd_measure(mask_path, rim_path, rim_is_heatmap, config, out_path,
                               intermediates_dir);
        if (eval->parsed())
            return cmd_eval(pred_path, truth_path, config, out_path, plots_dir);
        if (phantom->parsed()) return cmd_phantom(phantom_opts, out_path, jobs);
        if (tune->parsed()) return cmd_tune_ratio(cases_dir, config, out_path, jobs);
        if (awing->parsed()) return cmd_awing_check(awing_samples, awing_seed);
        if (rimgt->parsed())
            return cmd_rim_gt(landmarks_path, grid_path, config, out_base);
    } catch (const PipelineError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
    return 1;
}
