#include "endogeo/cli.hpp"

#include "endogeo/geometry.hpp"
#include "endogeo/io.hpp"
#include "endogeo/losses.hpp"
#include "endogeo/metrics.hpp"
#include "endogeo/refine.hpp"
#include "endogeo/sdf.hpp"
#include "endogeo/synth.hpp"

#include <CLI11.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace endogeo::cli {

namespace {

struct CameraFlags {
  std::optional<double> fx, fy, cx, cy;

  void attach(CLI::App* app) {
    app->add_option("--fx", fx, "Focal length in x (pixels); default width/2");
    app->add_option("--fy", fy, "Focal length in y (pixels); default width/2");
    app->add_option("--cx", cx, "Principal point x; default width/2");
    app->add_option("--cy", cy, "Principal point y; default height/2");
  }

  CameraIntrinsics resolve(Index width, Index height) const {
    CameraIntrinsics cam = CameraIntrinsics::default_for(width, height);
    if (fx) cam.fx = *fx;
    if (fy) cam.fy = *fy;
    if (cx) cam.cx = *cx;
    if (cy) cam.cy = *cy;
    cam.validate();
    return cam;
  }
};

struct GridFlags {
  std::vector<int> resolution;
  std::vector<double> lower, upper;

  void attach(CLI::App* app) {
    app->add_option("--grid", resolution, "Grid resolution RX,RY,RZ (default 16,16,16)")
        ->delimiter(',')
        ->expected(3);
    app->add_option("--lower", lower, "Grid lower corner x,y,z (default: fitted to the cloud)")
        ->delimiter(',')
        ->expected(3);
    app->add_option("--upper", upper, "Grid upper corner x,y,z")->delimiter(',')->expected(3);
  }

  SdfGridSpec resolve(const DepthMap& depth, const CameraIntrinsics& cam) const {
    if (lower.empty() != upper.empty())
      throw Error(ErrorCode::InvalidArgument, "--lower and --upper must be given together");
    SdfGridSpec spec = auto_grid_spec(depth, cam, 16);
    if (!lower.empty()) {
      spec.lower = Eigen::Vector3d(lower[0], lower[1], lower[2]);
      spec.upper = Eigen::Vector3d(upper[0], upper[1], upper[2]);
    }
    if (!resolution.empty()) {
      spec.rx = resolution[0];
      spec.ry = resolution[1];
      spec.rz = resolution[2];
    }
    spec.validate();
    return spec;
  }
};

void print(std::ostream& out, std::string_view key, double value) {
  out << key << '=' << format_double(value) << '\n';
}

void print(std::ostream& out, const std::vector<std::pair<std::string, double>>& fields) {
  for (const auto& [k, v] : fields) print(out, k, v);
}

void require_same_size(const DepthMap& a, const DepthMap& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::ShapeMismatch, "prediction is " + std::to_string(a.width()) + "x" +
                                              std::to_string(a.height()) + " but ground truth is " +
                                              std::to_string(b.width()) + "x" + std::to_string(b.height()));
}

std::vector<Preset> resolve_presets(const std::vector<std::string>& names) {
  std::vector<Preset> out;
  for (const std::string& n : names) {
    if (n == "all") {
      out.insert(out.end(), {Preset::stomach, Preset::colon, Preset::duodenum});
    } else {
      out.push_back(parse_preset(n));
    }
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometry-aware depth toolkit for endoscopic scenes", "endogeo"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "Render a synthetic RGB-depth dataset");
  std::vector<std::string> synth_presets{"colon"};
  DatasetConfig synth_cfg;
  std::string synth_out;
  std::string synth_regenerate;
  synth->add_option("--preset", synth_presets, "stomach, colon, duodenum or all (cycled over frames)")
      ->delimiter(',');
  synth->add_option("--count", synth_cfg.count, "Number of frames")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_cfg.seed, "Dataset seed");
  synth->add_option("--width", synth_cfg.width, "Frame width")->check(CLI::PositiveNumber);
  synth->add_option("--height", synth_cfg.height, "Frame height")->check(CLI::PositiveNumber);
  synth->add_option("--intensity-min", synth_cfg.intensity_min, "Lowest light intensity");
  synth->add_option("--intensity-max", synth_cfg.intensity_max, "Highest light intensity");
  synth->add_option("--regenerate", synth_regenerate, "Re-render the frames listed in this manifest")
      ->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->callback([&] {
    action = [&] {
      std::filesystem::path manifest;
      std::size_t frames = 0;
      if (!synth_regenerate.empty()) {
        manifest = regenerate_dataset(synth_regenerate, synth_out);
      } else {
        synth_cfg.presets = resolve_presets(synth_presets);
        manifest = generate_dataset(synth_cfg, synth_out);
      }
      frames = read_manifest(manifest).size();
      out << "manifest=" << manifest.string() << '\n';
      out << "frames=" << frames << '\n';
    };
  });

  // loss
  auto* loss = app.add_subcommand("loss", "Evaluate every loss term of a prediction");
  std::string loss_pred, loss_gt, loss_image, loss_json;
  LossWeights loss_weights;
  CameraFlags loss_cam;
  GridFlags loss_grid;
  loss->add_option("--pred", loss_pred, "Predicted depth (PFM)")->required()->check(CLI::ExistingFile);
  loss->add_option("--gt", loss_gt, "Ground-truth depth (PFM)")->required()->check(CLI::ExistingFile);
  loss->add_option("--image", loss_image, "RGB image (PPM)")->required()->check(CLI::ExistingFile);
  loss->add_option("--lambda1", loss_weights.lambda1, "Weight of depth + smoothness");
  loss->add_option("--lambda2", loss_weights.lambda2, "Weight of gradient + normal");
  loss->add_option("--lambda3", loss_weights.lambda3, "Weight of the SDF term");
  loss->add_option("--json", loss_json, "Also write the breakdown as JSON");
  loss_cam.attach(loss);
  loss_grid.attach(loss);
  loss->callback([&] {
    action = [&] {
      const DepthMap pred = read_depth_pfm(loss_pred);
      const DepthMap gt = read_depth_pfm(loss_gt);
      const RgbImage image = read_rgb_ppm(loss_image);
      require_same_size(pred, gt);
      const CameraIntrinsics cam = loss_cam.resolve(gt.width(), gt.height());
      LossConfig cfg;
      cfg.weights = loss_weights;
      cfg.sdf_spec = loss_grid.resolve(gt, cam);
      cfg.with_gradient = false;
      const LossBreakdown b = loss_total(pred, gt, image, cam, cfg);
      print(out, report_fields(b));
      if (!loss_json.empty()) write_report_json(report_fields(b), loss_json);
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Standard depth metrics");
  std::string eval_pred, eval_gt, eval_json;
  bool eval_median = false;
  eval->add_option("--pred", eval_pred, "Predicted depth (PFM)")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_gt, "Ground-truth depth (PFM)")->required()->check(CLI::ExistingFile);
  eval->add_flag("--median-scale", eval_median, "Rescale the prediction by median(gt) / median(pred)");
  eval->add_option("--json", eval_json, "Also write the report as JSON");
  eval->callback([&] {
    action = [&] {
      const DepthMap pred = read_depth_pfm(eval_pred);
      const DepthMap gt = read_depth_pfm(eval_gt);
      require_same_size(pred, gt);
      auto fields = report_fields(compute_metrics(pred, gt, eval_median));
      if (eval_median) fields.emplace_back("scale", median_scale_factor(pred, gt));
      print(out, fields);
      if (!eval_json.empty()) write_report_json(fields, eval_json);
    };
  });

  // refine
  auto* refine = app.add_subcommand("refine", "Recover a corrupted depth map by minimizing the total loss");
  std::string refine_gt, refine_image, refine_trace, refine_out, refine_case = "4";
  RefineConfig refine_cfg;
  CameraFlags refine_cam;
  refine->add_option("--gt", refine_gt, "Ground-truth depth (PFM)")->required()->check(CLI::ExistingFile);
  refine->add_option("--image", refine_image, "RGB image (PPM)")->required()->check(CLI::ExistingFile);
  refine->add_option("--case", refine_case, "Ablation case 1..4");
  refine->add_option("--iters", refine_cfg.iterations, "Iterations");
  refine->add_option("--seed", refine_cfg.seed, "Noise seed");
  refine->add_option("--noise", refine_cfg.noise_sigma, "Multiplicative noise sigma");
  refine->add_option("--lr", refine_cfg.learning_rate, "Learning rate");
  refine->add_option("--lambda1", refine_cfg.weights.lambda1, "Weight of depth + smoothness");
  refine->add_option("--lambda2", refine_cfg.weights.lambda2, "Weight of gradient + normal");
  refine->add_option("--lambda3", refine_cfg.weights.lambda3, "Weight of the SDF term");
  refine->add_option("--trace", refine_trace, "Write the per-iteration trace as CSV");
  refine->add_option("--out", refine_out, "Write the refined depth (PFM)");
  refine_cam.attach(refine);
  refine->callback([&] {
    action = [&] {
      const DepthMap gt = read_depth_pfm(refine_gt);
      const RgbImage image = read_rgb_ppm(refine_image);
      refine_cfg.ablation_case = parse_ablation_case(refine_case);
      const RefineResult r = refine_depth(gt, image, refine_cam.resolve(gt.width(), gt.height()), refine_cfg);
      if (!refine_trace.empty()) r.trace.write_csv(refine_trace);
      if (!refine_out.empty()) write_depth_pfm(r.depth, refine_out);
      const TraceRow& last = r.trace.rows.back();
      out << "case=" << to_string(refine_cfg.ablation_case) << '\n';
      out << "iterations=" << refine_cfg.iterations << '\n';
      print(out, "initial_rmse", r.trace.initial.rmse);
      print(out, "final_rmse", r.trace.final.rmse);
      print(out, "rmse_ratio", r.trace.initial.rmse > 0.0 ? r.trace.final.rmse / r.trace.initial.rmse : 0.0);
      print(out, "final_abs_rel", r.trace.final.abs_rel);
      print(out, "final_total", last.losses.total);
      print(out, "non_increasing_fraction", r.trace.non_increasing_fraction());
    };
  });

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Four-case loss ablation over a rendered dataset");
  std::string ablate_dir;
  int ablate_seeds = 5;
  RefineConfig ablate_cfg;
  ablate->add_option("--fixtures", ablate_dir, "Dataset directory holding manifest.txt")
      ->required()
      ->check(CLI::ExistingDirectory);
  ablate->add_option("--seeds", ablate_seeds, "Noise seeds per fixture")->check(CLI::PositiveNumber);
  ablate->add_option("--iters", ablate_cfg.iterations, "Iterations per run");
  ablate->add_option("--noise", ablate_cfg.noise_sigma, "Multiplicative noise sigma");
  ablate->callback([&] {
    action = [&] {
      const AblationTable table = run_ablation(load_fixtures(ablate_dir), ablate_cfg, ablate_seeds);
      for (std::size_t c = 0; c < table.rows.size(); ++c)
        for (std::size_t k = 0; k < kAblationColumns.size(); ++k)
          print(out, std::string(to_string(kAblationCases[c])) + "." + std::string(kAblationColumns[k]),
                table.rows[c][k]);
      const auto [wins, total] = table.case4_wins();
      out << "case4_wins=" << wins << '\n' << "comparisons=" << total << '\n';
    };
  });

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  std::string gc_loss = "total";
  std::vector<Index> gc_size{8, 8};
  std::uint64_t gc_seed = 0;
  double gc_h = 1e-5;
  gradcheck->add_option("--loss", gc_loss, "depth, smooth, grad, normal, sdf or total");
  gradcheck->add_option("--size", gc_size, "Map size H,W")->delimiter(',')->expected(2);
  gradcheck->add_option("--seed", gc_seed, "Fixture seed");
  gradcheck->add_option("--step", gc_h, "Finite-difference step");
  int gradcheck_status = kExitOk;
  gradcheck->callback([&] {
    action = [&] {
      const LossKind kind = parse_loss_kind(gc_loss);
      const GradCheckFixture fx = make_grad_check_fixture(gc_seed, gc_size[0], gc_size[1]);
      const GradCheckResult r = grad_check(kind, fx.pred, fx.context, gc_h);
      const double tol = grad_check_tolerance(kind);
      const bool pass = r.max_relative_error < tol;
      out << "loss=" << to_string(kind) << '\n';
      print(out, "max_rel_error", r.max_relative_error);
      print(out, "tolerance", tol);
      out << "pass=" << (pass ? 1 : 0) << '\n';
      if (!pass) gradcheck_status = kExitDomainError;
    };
  });

  // sdf
  auto* sdf = app.add_subcommand("sdf", "Sample the signed distance to a depth surface on a grid");
  std::string sdf_depth, sdf_out;
  CameraFlags sdf_cam;
  GridFlags sdf_grid;
  sdf->add_option("--depth", sdf_depth, "Depth map (PFM)")->required()->check(CLI::ExistingFile);
  sdf->add_option("--out", sdf_out, "Output PLY of included samples with an sdf property")->required();
  sdf_cam.attach(sdf);
  sdf_grid.attach(sdf);
  sdf->callback([&] {
    action = [&] {
      const DepthMap depth = read_depth_pfm(sdf_depth);
      const CameraIntrinsics cam = sdf_cam.resolve(depth.width(), depth.height());
      const SdfGridSpec spec = sdf_grid.resolve(depth, cam);
      const std::vector<Eigen::Vector3d> points = sample_grid(spec);
      const DepthSurface<double> surface(depth, cam);
      const SdfField<double> field = sdf_field(points, surface);
      PointCloud kept;
      std::vector<double> values;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (!field.included[i]) continue;
        kept.points.push_back(points[i]);
        values.push_back(field.values[i]);
      }
      write_cloud_ply(kept, sdf_out, values, "sdf");
      out << "samples=" << points.size() << '\n';
      out << "included=" << kept.size() << '\n';
      out << "excluded=" << field.excluded_count << '\n';
    };
  });

  // cloud
  auto* cloud = app.add_subcommand("cloud", "Back-project a depth map to a point cloud");
  std::string cloud_depth, cloud_out;
  CameraFlags cloud_cam;
  cloud->add_option("--depth", cloud_depth, "Depth map (PFM)")->required()->check(CLI::ExistingFile);
  cloud->add_option("--out", cloud_out, "Output PLY")->required();
  cloud_cam.attach(cloud);
  cloud->callback([&] {
    action = [&] {
      const DepthMap depth = read_depth_pfm(cloud_depth);
      const PointCloud pc = depth_to_cloud(depth, cloud_cam.resolve(depth.width(), depth.height()));
      write_cloud_ply(pc, cloud_out);
      out << "points=" << pc.size() << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsageError;
  }

  try {
    action();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainError;
  }
  return gradcheck_status;
}

}  // namespace endogeo::cli
