#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <map>
#include <sstream>

#include "occkit/error.hpp"
#include "occkit/flow.hpp"
#include "occkit/gmm.hpp"
#include "occkit/io.hpp"
#include "occkit/metrics.hpp"
#include "occkit/objects.hpp"
#include "occkit/tracking.hpp"

namespace fs = std::filesystem;
using namespace occkit;

namespace {

struct Scenario {
  ScenarioManifest manifest;
  std::vector<FrameBundle> frames;
};

Scenario load_scenario(const fs::path& dir) {
  Scenario s;
  s.manifest = read_manifest(dir);
  for (int i = 0; i < s.manifest.frames; ++i) {
    FrameBundle b = read_bundle(frame_path(dir, i));
    if (!b.grid) throw Error(ErrorCode::InvariantViolation, frame_path(dir, i).string() + " has no SEMG chunk");
    if (!(b.grid->spec == s.manifest.spec)) {
      throw Error(ErrorCode::SpecMismatch, frame_path(dir, i).string() + " disagrees with the manifest grid");
    }
    s.frames.push_back(std::move(b));
  }
  return s;
}

void save_scenario(const fs::path& dir, const Scenario& s) {
  write_manifest(dir, s.manifest);
  for (std::size_t i = 0; i < s.frames.size(); ++i) write_bundle(frame_path(dir, static_cast<int>(i)), s.frames[i]);
}

// Comma-separated names or numeric IDs; empty means the dynamic classes.
std::set<ClassId> parse_classes(const std::string& list, const LabelTaxonomy& tax) {
  if (list.empty()) return {tax.dynamic_ids.begin(), tax.dynamic_ids.end()};
  std::set<ClassId> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    if (std::isdigit(static_cast<unsigned char>(item[0])) != 0) {
      const int id = std::stoi(item);
      if (!tax.contains(id)) throw Error(ErrorCode::UnknownLabel, "class id " + item + " not in " + tax.name);
      out.insert(static_cast<ClassId>(id));
    } else {
      out.insert(tax.id_of(item));
    }
  }
  return out;
}

nlohmann::json box_json(const OrientedBox& b) {
  return {{"center", {b.center.x(), b.center.y(), b.center.z()}},
          {"yaw", b.yaw},
          {"length", b.length},
          {"width", b.width},
          {"height", b.height}};
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
}

std::vector<Track> run_tracker(const Scenario& s, const std::set<ClassId>& classes, double max_dist,
                               std::vector<std::vector<ObjectInstance>>* instances_out = nullptr) {
  std::vector<TrackingFrame> frames;
  for (const auto& b : s.frames) {
    TrackingFrame f;
    f.timestamp = b.grid->timestamp;
    f.instances = identify_objects(*b.grid, classes);
    f.flow = b.flow(FlowDirection::Forward);
    frames.push_back(std::move(f));
  }
  auto tracks = track_sequence(frames, s.manifest.spec, TrackerOptions{max_dist});
  if (instances_out) {
    instances_out->clear();
    for (auto& f : frames) instances_out->push_back(std::move(f.instances));
  }
  return tracks;
}

int cmd_segment(const std::string& in, const std::string& classes, const std::string& out) {
  std::vector<FrameBundle> bundles;
  if (fs::is_directory(in)) {
    bundles = load_scenario(in).frames;
  } else {
    bundles.push_back(read_bundle(in));
    if (!bundles.back().grid) throw Error(ErrorCode::InvariantViolation, in + " has no SEMG chunk");
  }
  std::string text;
  for (const auto& b : bundles) {
    const LabelTaxonomy& tax = taxonomy_of(*b.grid);
    for (const auto& obj : identify_objects(*b.grid, parse_classes(classes, tax))) {
      nlohmann::json j;
      j["timestamp"] = b.grid->timestamp;
      j["object_id"] = obj.object_id;
      j["category"] = obj.category;
      j["voxels"] = obj.voxels.size();
      j["box"] = box_json(obj.box);
      text += j.dump() + "\n";
    }
  }
  emit(text, out);
  return 0;
}

int cmd_track(const std::string& in, const std::string& classes, double max_dist, const std::string& out) {
  const Scenario s = load_scenario(in);
  const auto tracks = run_tracker(s, parse_classes(classes, builtin_taxonomy(s.manifest.taxonomy)), max_dist);
  emit(format_track_records(tracks), out);
  return 0;
}

int cmd_flow(const std::string& in, const std::string& direction, const std::string& out) {
  Scenario s = load_scenario(in);
  const FlowDirection dir = direction == "fwd" ? FlowDirection::Forward : FlowDirection::Backward;
  const int n = static_cast<int>(s.frames.size());
  std::vector<FlowField> computed(n);
  std::vector<char> have(n, 0);
  FlowStats stats;
  for (int t = 0; t + 1 < n; ++t) {
    const FrameBundle& a = s.frames[t];
    const FrameBundle& b = s.frames[t + 1];
    if (!a.ego_pose || !b.ego_pose) throw Error(ErrorCode::InvariantViolation, "flow needs POSE in every frame");
    FramePair pair{*a.grid, *b.grid, *a.ego_pose, *b.ego_pose, a.annotations.value_or(std::vector<ObjectAnnotation>{}),
                   b.annotations.value_or(std::vector<ObjectAnnotation>{})};
    if (dir == FlowDirection::Forward) {
      computed[t] = forward_flow(pair, &stats);
      have[t] = 1;
    } else {
      computed[t + 1] = backward_flow(pair, &stats);
      have[t + 1] = 1;
    }
  }
  for (int t = 0; t < n; ++t) {
    auto& flows = s.frames[t].flows;
    std::erase_if(flows, [&](const FlowField& f) { return f.direction == dir; });
    if (have[t]) flows.push_back(std::move(computed[t]));
  }
  save_scenario(out.empty() ? fs::path(in) : fs::path(out), s);
  std::cerr << "flow: " << stats.unattributed << " unattributed and " << stats.vanished
            << " vanished dynamic voxels\n";
  return 0;
}

struct EvalOptions {
  std::set<std::string> metrics;
  std::string gmm;
  double rho = kDefaultRho;
  double max_dist = 3.0;
  std::string report;
  bool json = false;
};

Pose pose_of(const FrameBundle& pred, const FrameBundle& gt, int t) {
  if (pred.ego_pose) return *pred.ego_pose;
  if (gt.ego_pose) return *gt.ego_pose;
  throw Error(ErrorCode::InvariantViolation, "frame " + std::to_string(t) + " has no POSE for background consistency");
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const EvalOptions& o) {
  const Scenario pred = load_scenario(pred_dir);
  const Scenario gt = load_scenario(gt_dir);
  if (pred.frames.size() != gt.frames.size()) throw Error(ErrorCode::SpecMismatch, "pred and gt frame counts differ");
  if (!(pred.manifest.spec == gt.manifest.spec)) throw Error(ErrorCode::SpecMismatch, "pred and gt grids differ");
  if (pred.frames.empty()) throw Error(ErrorCode::EmptyInput, "scenario has no frames");
  const LabelTaxonomy& tax = builtin_taxonomy(gt.manifest.taxonomy);
  const std::size_t n = pred.frames.size();
  MetricReport report;
  report.rho = o.rho;

  if (o.metrics.contains("iou")) {
    OverlapCounts total;
    for (std::size_t t = 0; t < n; ++t) {
      const auto c = occupancy_overlap(*pred.frames[t].grid, *gt.frames[t].grid);
      total.intersection += c.intersection;
      total.union_ += c.union_;
    }
    report.iou_geo = total.iou();
  }
  if (o.metrics.contains("miou")) {
    std::vector<OverlapCounts> total(256);
    for (std::size_t t = 0; t < n; ++t) {
      const auto c = class_overlap(*pred.frames[t].grid, *gt.frames[t].grid);
      for (int k = 0; k < 256; ++k) {
        total[k].intersection += c[k].intersection;
        total[k].union_ += c[k].union_;
      }
    }
    double sum = 0.0;
    for (ClassId c : tax.occupied_ids()) {
      if (total[c].union_ == 0) continue;
      report.per_class_iou[c] = total[c].iou();
      sum += total[c].iou();
    }
    if (report.per_class_iou.empty()) throw Error(ErrorCode::NoEvaluableClass, "no class occurs in either scenario");
    report.miou_geo = sum / static_cast<double>(report.per_class_iou.size());
  }
  if (o.metrics.contains("bg")) {
    if (n < 2) throw Error(ErrorCode::InsufficientData, "background consistency needs two frames");
    const std::set<ClassId> statics = builtin_taxonomy(pred.manifest.taxonomy).static_ids();
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < n; ++t) {
      sum += background_consistency(*pred.frames[t].grid, *pred.frames[t + 1].grid,
                                    pose_of(pred.frames[t], gt.frames[t], static_cast<int>(t)),
                                    pose_of(pred.frames[t + 1], gt.frames[t + 1], static_cast<int>(t + 1)), statics)
                 .iou;
    }
    report.iou_bg = sum / static_cast<double>(n - 1);
  }
  const LabelTaxonomy& pred_tax = builtin_taxonomy(pred.manifest.taxonomy);
  const std::set<ClassId> dynamic(pred_tax.dynamic_ids.begin(), pred_tax.dynamic_ids.end());
  if (o.metrics.contains("shape")) {
    std::vector<std::vector<ObjectInstance>> instances;
    const auto tracks = run_tracker(pred, dynamic, o.max_dist, &instances);
    std::map<std::int64_t, std::size_t> frame_of;
    for (std::size_t t = 0; t < n; ++t) frame_of[pred.frames[t].grid->timestamp] = t;
    std::map<ClassId, std::pair<double, int>> acc;
    for (const auto& tr : tracks) {
      if (tr.frames.size() < 2) continue;
      std::vector<std::vector<Vec3>> shapes;
      for (const auto& p : tr.frames) {
        const auto& inst = instances[frame_of.at(p.timestamp)][p.object_id - 1];
        std::vector<Vec3> pts;
        for (const auto& v : inst.voxels) pts.push_back(voxel_to_ego(pred.manifest.spec, v));
        shapes.push_back(std::move(pts));
      }
      const auto sc = track_shape_consistency(shapes, pred.manifest.spec.resolution);
      acc[tr.category].first += sc.mean;
      acc[tr.category].second += 1;
    }
    for (const auto& [c, v] : acc) report.iou_object[c] = v.first / v.second;
  }
  if (o.metrics.contains("dim")) {
    const FrameBundle model_file = read_bundle(o.gmm);
    std::map<ClassId, const GmmModel*> models;
    for (const auto& g : model_file.gmms) models[g.category] = &g;
    std::map<ClassId, std::pair<double, std::size_t>> prob;
    std::map<ClassId, std::size_t> pass;
    for (const auto& b : pred.frames) {
      for (const auto& obj : identify_objects(*b.grid, dynamic)) {
        auto it = models.find(obj.category);
        if (it == models.end()) continue;
        const double p = dim_probability({obj.box.length, obj.box.width, obj.box.height}, *it->second);
        prob[obj.category].first += p;
        prob[obj.category].second += 1;
        pass[obj.category] += is_plausible(p, o.rho) ? 1 : 0;
      }
    }
    for (const auto& [c, v] : prob) {
      report.dimension[c] = {c, v.first / static_cast<double>(v.second),
                             static_cast<double>(pass[c]) / static_cast<double>(v.second), v.second};
    }
  }

  const std::string text = o.json ? report.to_json(tax) + "\n" : report.to_text(tax);
  std::cout << text;
  if (!o.report.empty()) write_text_file(o.report, text);
  return 0;
}

int cmd_synth(const std::string& script_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
  const ScenarioScript script = load_script(script_path, seed);
  Scenario s;
  s.manifest = {script.taxonomy, script.spec, script.duration};
  for (int t = 0; t < script.duration; ++t) {
    RenderedFrame fr = render_frame(script, t);
    FrameBundle b;
    b.spec = script.spec;
    b.grid = std::move(fr.grid);
    b.ego_pose = fr.ego;
    b.annotations = std::move(fr.annotations);
    s.frames.push_back(std::move(b));
  }
  save_scenario(out_dir, s);
  write_text_file(fs::path(out_dir) / "ground_truth_tracks.jsonl", format_track_records(ground_truth_tracks(script)));
  return 0;
}

int cmd_fit_gmm(const std::string& boxes, const std::string& taxonomy, int kmax, const std::string& out,
                std::uint64_t seed) {
  const LabelTaxonomy& tax = builtin_taxonomy(taxonomy);
  std::map<ClassId, std::vector<Vec3>> by_class;
  for (const auto& b : parse_box_samples(read_text_file(boxes), tax)) by_class[b.category].push_back(b.dims);
  if (by_class.empty()) throw Error(ErrorCode::EmptyInput, "no box samples in " + boxes);
  FrameBundle bundle;
  EmOptions opts;
  opts.seed = seed;
  for (const auto& [c, samples] : by_class) {
    GmmModel m = fit_gmm(samples, kmax, opts);
    m.category = c;
    std::cerr << "fit-gmm: " << tax.name_of(c) << " K=" << m.k() << " from " << samples.size() << " samples\n";
    bundle.gmms.push_back(std::move(m));
  }
  write_bundle(out, bundle);
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"occkit: semantic occupancy grids, flow, tracking and metrics"};
  app.require_subcommand(1);

  std::string in, in2, out, classes, direction = "fwd", metrics = "iou,miou", gmm, report, taxonomy = "unified";
  double max_dist = 3.0, rho = kDefaultRho;
  int kmax = 5;
  bool json = false;
  std::optional<std::uint64_t> seed;

  auto* seg = app.add_subcommand("segment", "Connected components and boxes of a frame file or scenario dir");
  seg->add_option("in", in, "Frame file (.uocc) or scenario directory")->required()->check(CLI::ExistingPath);
  seg->add_option("--classes", classes, "Comma-separated class names or IDs (default: dynamic classes)");
  seg->add_option("--out", out, "Output JSON-lines file (default: stdout)");

  auto* trk = app.add_subcommand("track", "Flow-propagated tracking over a scenario directory");
  trk->add_option("in", in, "Scenario directory")->required()->check(CLI::ExistingDirectory);
  trk->add_option("--max-dist", max_dist, "Association gate in meters")->check(CLI::PositiveNumber);
  trk->add_option("--classes", classes, "Comma-separated class names or IDs (default: dynamic classes)");
  trk->add_option("--out", out, "Output JSON-lines file (default: stdout)");

  auto* flw = app.add_subcommand("flow", "Per-voxel flow from poses and annotations");
  flw->add_option("in", in, "Scenario directory")->required()->check(CLI::ExistingDirectory);
  flw->add_option("--direction", direction, "fwd or bwd")->check(CLI::IsMember({"fwd", "bwd"}));
  flw->add_option("--out", out, "Output scenario directory (default: rewrite the input)");

  auto* evl = app.add_subcommand("eval", "Label-based and ground-truth-free metrics");
  evl->add_option("pred", in, "Predicted scenario directory")->required()->check(CLI::ExistingDirectory);
  evl->add_option("gt", in2, "Ground-truth scenario directory")->required()->check(CLI::ExistingDirectory);
  evl->add_option("--metrics", metrics, "Any of iou,miou,bg,shape,dim");
  evl->add_option("--gmm", gmm, "GMM container written by fit-gmm (needed for dim)")->check(CLI::ExistingFile);
  evl->add_option("--rho", rho, "Plausibility threshold")->check(CLI::Range(0.0, 1.0));
  evl->add_option("--max-dist", max_dist, "Tracking gate for the shape metric")->check(CLI::PositiveNumber);
  evl->add_option("--report", report, "Also write the report to this path");
  evl->add_flag("--json", json, "JSON report instead of key = value lines");

  auto* syn = app.add_subcommand("synth", "Render a scenario script into a scenario directory");
  syn->add_option("script", in, "Scenario script")->required()->check(CLI::ExistingFile);
  syn->add_option("--out-dir", out, "Output directory")->required();
  syn->add_option("--seed", seed, "Overrides the script seed");

  auto* fit = app.add_subcommand("fit-gmm", "Fit per-category box-dimension mixtures");
  fit->add_option("boxes", in, "Lines of `category length width height`")->required()->check(CLI::ExistingFile);
  fit->add_option("--kmax", kmax, "Largest component count tried")->check(CLI::Range(1, 32));
  fit->add_option("--taxonomy", taxonomy, "Taxonomy used to resolve category names");
  fit->add_option("--out", out, "Output container")->required();
  fit->add_option("--seed", seed, "EM seeding");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  try {
    if (*seg) return cmd_segment(in, classes, out);
    if (*trk) return cmd_track(in, classes, max_dist, out);
    if (*flw) return cmd_flow(in, direction, out);
    if (*evl) {
      EvalOptions o;
      std::stringstream ss(metrics);
      for (std::string m; std::getline(ss, m, ',');) {
        if (m.empty()) continue;
        if (m != "iou" && m != "miou" && m != "bg" && m != "shape" && m != "dim") {
          std::cerr << "error: unknown metric '" << m << "'\n" << evl->help();
          return 1;
        }
        o.metrics.insert(m);
      }
      if (o.metrics.contains("dim") && gmm.empty()) {
        std::cerr << "error: --metrics dim needs --gmm\n" << evl->help();
        return 1;
      }
      o.gmm = gmm;
      o.rho = rho;
      o.max_dist = max_dist;
      o.report = report;
      o.json = json;
      return cmd_eval(in, in2, o);
    }
    if (*syn) return cmd_synth(in, out, seed);
    if (*fit) return cmd_fit_gmm(in, taxonomy, kmax, out, seed.value_or(0));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
