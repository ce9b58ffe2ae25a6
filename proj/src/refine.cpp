#include "endogeo/refine.hpp"

#include "endogeo/io.hpp"
#include "endogeo/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace endogeo {

std::string_view to_string(AblationCase c) {
  switch (c) {
    case AblationCase::case1: return "case1";
    case AblationCase::case2: return "case2";
    case AblationCase::case3: return "case3";
    case AblationCase::case4: return "case4";
  }
  return "unknown";
}

AblationCase parse_ablation_case(std::string_view text) {
  if (text.starts_with("case")) text.remove_prefix(4);
  if (text.size() == 1 && text[0] >= '1' && text[0] <= '4') return static_cast<AblationCase>(text[0] - '0');
  throw Error(ErrorCode::InvalidArgument, "ablation case must be 1..4");
}

LossWeights case_weights(AblationCase c, const LossWeights& base) {
  LossWeights w = base;
  if (c == AblationCase::case1 || c == AblationCase::case3) w.lambda2 = 0.0;
  if (c == AblationCase::case1 || c == AblationCase::case2) w.lambda3 = 0.0;
  return w;
}

void RefineConfig::validate() const {
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw Error(ErrorCode::InvalidArgument, "betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw Error(ErrorCode::InvalidArgument, "noise sigma must be non-negative");
  if (max_backtracks < 0) throw Error(ErrorCode::InvalidArgument, "max_backtracks must be >= 0");
  if (snapshot_every < 1) throw Error(ErrorCode::InvalidArgument, "snapshot interval must be >= 1");
  weights.validate();
  if (grid) grid->validate();
}

double RefineTrace::non_increasing_fraction() const {
  if (rows.size() < 2) return 1.0;
  std::size_t ok = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].losses.total <= rows[i - 1].losses.total) ++ok;
  return static_cast<double>(ok) / static_cast<double>(rows.size() - 1);
}

std::string RefineTrace::csv() const {
  std::ostringstream out;
  out << "iteration,depth,smooth,grad,normal,sdf,total,rmse\n";
  for (const TraceRow& r : rows) {
    out << r.iteration;
    for (double v : {r.losses.depth, r.losses.smooth, r.losses.grad, r.losses.normal, r.losses.sdf, r.losses.total,
                     r.rmse})
      out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

void RefineTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out << csv();
  if (!out.flush()) throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
}

DepthMap corrupt_depth(const DepthMap& gt, double sigma, std::uint64_t seed) {
  SeededRng rng(seed);
  GridD values = gt.values();
  for (Index i = 0; i < values.size(); ++i) {
    if (!gt.mask()(i)) continue;
    values(i) = std::max(values(i) * (1.0 + rng.normal(0.0, sigma)), kRefineMinDepth);
  }
  return DepthMap(std::move(values), gt.mask());
}

namespace {

LossBreakdown evaluate(const DepthMap& pred, const LossReference<double>& ref, const LossWeights& w, int iteration) {
  LossBreakdown loss = loss_total(pred, ref, w, true);
  if (!std::isfinite(loss.total))
    throw Error(ErrorCode::DivergedLoss, "total loss is not finite at iteration " + std::to_string(iteration));
  return loss;
}

}  // namespace

RefineResult refine_depth(const DepthMap& gt, const RgbImage& image, const CameraIntrinsics& cam,
                          const RefineConfig& cfg) {
  validate_depth_map(gt);
  cfg.validate();
  cam.validate();

  LossConfig loss_cfg;
  loss_cfg.weights = case_weights(cfg.ablation_case, cfg.weights);
  loss_cfg.sdf_spec = cfg.grid;
  loss_cfg.auto_resolution = cfg.auto_resolution;
  const LossReference<double> ref(gt, image, cam, loss_cfg);

  DepthMap pred = corrupt_depth(gt, cfg.noise_sigma, cfg.seed);
  GridD values = pred.values();
  const Mask& mask = gt.mask();
  GridD m = GridD::Zero(gt.height(), gt.width());
  GridD v = GridD::Zero(gt.height(), gt.width());

  RefineResult result;
  RefineTrace& trace = result.trace;
  trace.initial = compute_metrics(pred, gt, false);

  LossBreakdown loss = evaluate(pred, ref, loss_cfg.weights, 0);
  double b1t = 1.0, b2t = 1.0;
  double scale = 1.0;
  for (int it = 0;; ++it) {
    const MetricsReport metrics = compute_metrics(pred, gt, false);
    GridD g = std::move(*loss.gradient);
    loss.gradient.reset();
    trace.rows.push_back({it, loss, metrics.rmse});
    const bool last = it == cfg.iterations;
    if (it % cfg.snapshot_every == 0 || last) trace.snapshots.push_back({it, loss, metrics});
    if (last) {
      trace.final = metrics;
      break;
    }

    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    const GridD step = cfg.learning_rate * (m / (1.0 - b1t)) / ((v / (1.0 - b2t)).sqrt() + cfg.epsilon);

    // A step that raises the total is halved and retried; after the last
    // retry it is taken anyway.
    for (int attempt = 0;; ++attempt) {
      GridD candidate = mask.select((values - scale * step).max(kRefineMinDepth), values);
      DepthMap next(candidate, mask);
      LossBreakdown next_loss = evaluate(next, ref, loss_cfg.weights, it + 1);
      if (next_loss.total <= loss.total || attempt == cfg.max_backtracks) {
        values = std::move(candidate);
        pred = std::move(next);
        loss = std::move(next_loss);
        break;
      }
      scale *= 0.5;
    }
    scale = std::min(1.0, scale * 1.25);
  }
  result.depth = std::move(pred);
  return result;
}

RefineFixture make_refine_fixture(std::uint64_t seed, Index size) {
  DatasetConfig config;
  config.count = 1;
  config.presets = {Preset::colon};
  config.seed = seed;
  config.width = size;
  config.height = size;
  FrameSpec spec = plan_dataset(config).front();
  // Turned toward the wall so depths stay within a few units.
  spec.yaw = 0.9;
  spec.pitch = 0.0;
  FramePair frame = spec.render();
  return {"colon-" + std::to_string(seed), std::move(frame.depth), std::move(frame.rgb), spec.cam};
}

std::vector<RefineFixture> load_fixtures(const std::filesystem::path& dir) {
  std::vector<RefineFixture> out;
  for (const ManifestRecord& record : read_manifest(dir / "manifest.txt")) {
    const FrameSpec spec = FrameSpec::from_record(record);
    RefineFixture f{spec.depth_file, read_depth_pfm(dir / spec.depth_file), read_rgb_ppm(dir / spec.rgb_file),
                    spec.cam};
    if (f.gt.width() != f.image.width() || f.gt.height() != f.image.height())
      throw Error(ErrorCode::ShapeMismatch, "fixture '" + f.name + "' has mismatched depth and image");
    out.push_back(std::move(f));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "manifest in '" + dir.string() + "' lists no frames");
  return out;
}

std::pair<int, int> AblationTable::case4_wins() const {
  int wins = 0, total = 0;
  for (const AblationRun& a : runs) {
    if (a.ablation_case != AblationCase::case1) continue;
    for (const AblationRun& b : runs) {
      if (b.ablation_case != AblationCase::case4 || b.fixture != a.fixture || b.seed != a.seed) continue;
      ++total;
      if (b.final.rmse <= a.final.rmse) ++wins;
    }
  }
  return {wins, total};
}

std::string AblationTable::format() const {
  std::string out = "case  ";
  char cell[32];
  for (std::string_view name : kAblationColumns) {
    std::snprintf(cell, sizeof cell, " %10.*s", static_cast<int>(name.size()), name.data());
    out += cell;
  }
  out += '\n';
  for (std::size_t c = 0; c < rows.size(); ++c) {
    out += to_string(kAblationCases[c]);
    out += ' ';
    for (double v : rows[c]) {
      std::snprintf(cell, sizeof cell, " %10.6f", v);
      out += cell;
    }
    out += '\n';
  }
  return out;
}

AblationTable run_ablation(const std::vector<RefineFixture>& fixtures, const RefineConfig& base, int seeds) {
  if (fixtures.empty()) throw Error(ErrorCode::InvalidArgument, "ablation needs at least one fixture");
  if (seeds < 1) throw Error(ErrorCode::InvalidArgument, "ablation needs at least one seed");
  AblationTable table;
  for (std::size_t c = 0; c < kAblationCases.size(); ++c) {
    std::array<double, 7> sum{};
    for (std::size_t f = 0; f < fixtures.size(); ++f) {
      for (int s = 0; s < seeds; ++s) {
        RefineConfig cfg = base;
        cfg.ablation_case = kAblationCases[c];
        cfg.seed = static_cast<std::uint64_t>(s);
        const RefineFixture& fx = fixtures[f];
        const RefineResult r = refine_depth(fx.gt, fx.image, fx.cam, cfg);
        table.runs.push_back({cfg.ablation_case, f, cfg.seed, r.trace.initial, r.trace.final});
        const auto named = r.trace.final.named();
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += named[k].second;
      }
    }
    const double n = static_cast<double>(fixtures.size()) * seeds;
    for (std::size_t k = 0; k < sum.size(); ++k) table.rows[c][k] = sum[k] / n;
  }
  return table;
}

}  // namespace endogeo
