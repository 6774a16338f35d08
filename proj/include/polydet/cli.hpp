#pragma once

#include <chrono>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polydet/config.hpp"
#include "polydet/dataset.hpp"
#include "polydet/detections_io.hpp"
#include "polydet/model_io.hpp"
#include "polydet/parallel.hpp"
#include "polydet/post_learning.hpp"
#include "polydet/report_io.hpp"

namespace polydet::cli {

// Exit codes: 0 success, 1 internal error, 2 configuration error,
// 3 missing/unreadable file, 4 inconsistent data.
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFile = 3;
inline constexpr int kExitData = 4;

namespace detail {

inline std::vector<std::string> provenance(const RunConfig& cfg) {
  return {std::string("polydet ") + kVersion, "config " + config_hash_hex(cfg),
          "seed " + std::to_string(cfg.seed)};
}

inline std::vector<std::string> provenance(const ModelMeta& meta) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(meta.config_hash));
  return {std::string("polydet ") + kVersion, std::string("config ") + hash,
          "seed " + std::to_string(meta.seed)};
}

inline RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

inline DatasetKind kind_from_name(const std::string& name) {
  if (name == "still") return DatasetKind::still;
  if (name == "video") return DatasetKind::video;
  throw ConfigError("dataset kind must be 'still' or 'video'");
}

}  // namespace detail

struct CommonArgs {
  std::string config;
  std::string input;
  std::string output;
  std::string model;
  std::string records;
  std::string detections;
  std::string timing;
  std::string strategy;
  std::string kind = "still";
  std::vector<std::string> inputs;
  double fps = 0.0;           // 0 = take from config
  std::int64_t seed = -1;     // <0 = take from config
};

inline int cmd_augment(const CommonArgs& a) {
  RunConfig cfg = detail::config_or_default(a.config);
  if (!a.strategy.empty()) cfg.augmentation.name = strategy_from_name(a.strategy);
  const auto ds = load_dataset(a.input, DatasetKind::still);
  std::size_t written = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const AnnotatedFrame f = load_frame(ds, i);
    for (const auto& out : apply_strategy(f, cfg.augmentation)) {
      write_frame(a.output, out);
      ++written;
    }
  }
  std::ofstream prov(std::filesystem::path(a.output) / "provenance.txt");
  for (const auto& line : detail::provenance(cfg)) prov << "# " << line << "\n";
  prov << "strategy " << strategy_name(cfg.augmentation.name) << "\n";
  std::cout << ds.size() << " frames in, " << written << " frames out ("
            << strategy_name(cfg.augmentation.name) << ")\n";
  return 0;
}

inline int cmd_train(const CommonArgs& a) {
  RunConfig cfg = detail::config_or_default(a.config);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  const auto ds = load_dataset(a.input, DatasetKind::still);
  const auto frames = load_all_frames(ds);
  ExemplarModel model = train_positive(cfg.make_model(), frames, cfg.seeded_sampling());
  save_model(a.output, model, {kVersion, config_hash(cfg), cfg.seed});
  std::cout << "trained on " << frames.size() << " frames: "
            << model.positive_exemplars.size() << " positive / "
            << model.negative_exemplars.size() << " negative exemplars\n";
  return 0;
}

inline int cmd_detect(const CommonArgs& a) {
  const LoadedModel lm = load_model(a.model);
  const auto ds = load_dataset(a.input, DatasetKind::still);

  std::vector<std::vector<Detection>> dets(ds.size());
  std::vector<double> seconds(ds.size(), 0.0);
  parallel_for(ds.size(), [&](std::size_t i) {
    const AnnotatedFrame f = load_frame(ds, i);
    const auto t0 = std::chrono::steady_clock::now();
    dets[i] = detect(lm.model, f.image);
    const auto t1 = std::chrono::steady_clock::now();
    seconds[i] = std::chrono::duration<double>(t1 - t0).count();
  });

  std::vector<DetectionRecord> records;
  std::vector<std::pair<std::string, double>> times;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const auto& d : dets[i]) records.push_back({ds.frames[i].frame_id, d.box, d.score});
    times.emplace_back(ds.frames[i].frame_id, seconds[i]);
  }
  const auto header = detail::provenance(lm.meta);
  write_detections(a.output, records, header);
  if (!a.timing.empty()) write_timings(a.timing, times, header);
  std::cout << records.size() << " detections over " << ds.size() << " frames\n";
  return 0;
}

inline int cmd_eval(const CommonArgs& a) {
  RunConfig cfg = detail::config_or_default(a.config);
  if (a.fps > 0.0) cfg.evaluation.fps = a.fps;
  const auto kind = detail::kind_from_name(a.kind);
  const auto ds = load_dataset(a.input, kind, cfg.evaluation.fps);

  std::map<std::string, std::vector<Detection>> by_frame;
  for (const auto& r : read_detections(a.detections))
    by_frame[r.frame_id].emplace_back(r.box, r.score);
  for (const auto& [id, _] : by_frame) {
    const bool known = std::any_of(ds.frames.begin(), ds.frames.end(),
                                   [&](const DatasetEntry& e) { return e.frame_id == id; });
    if (!known) throw DataError("detections reference unknown frame " + id);
  }

  std::vector<FrameResult> results(ds.size());
  std::optional<std::size_t> first_polyp;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const AnnotatedFrame f = load_frame(ds, i);
    std::vector<BinaryMask> masks;
    for (const auto& ann : f.annotations) masks.push_back(ann.mask);
    if (!masks.empty() && !first_polyp) first_polyp = i;
    const auto it = by_frame.find(f.frame_id);
    results[i] = classify_frame(it == by_frame.end() ? std::vector<Detection>{} : it->second,
                                masks, cfg.evaluation.duplicates_as_fp);
    results[i].frame_id = f.frame_id;
  }

  MetricReport report = aggregate(results);
  if (kind == DatasetKind::video && first_polyp) {
    const VideoMetrics vm = video_metrics(results, *first_polyp, cfg.evaluation.eval_config());
    report.pdr = vm.pdr;
    report.rt_frames = vm.rt_frames;
    report.rt_seconds = vm.rt_seconds;
  }
  if (!a.timing.empty()) {
    std::vector<double> times;
    for (const auto& [_, t] : read_timings(a.timing)) times.push_back(t);
    report.mpt = measure_mpt(times);
  }
  write_report(a.output, report, detail::provenance(cfg));
  std::cout << render_table(report);
  return 0;
}

inline int cmd_fp_learn(const CommonArgs& a) {
  RunConfig cfg = detail::config_or_default(a.config);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  const LoadedModel lm = load_model(a.model);
  const auto frames = load_all_frames(load_dataset(a.input, DatasetKind::video));
  FpLearnResult<ExemplarModel> result = fp_learn(lm.model, frames, cfg.post_learning);
  save_model(a.output, result.model, {kVersion, config_hash(cfg), cfg.seed});
  std::vector<DetectionRecord> records;
  for (const auto& r : result.records) records.push_back({r.frame_id, r.box, r.score});
  if (!a.records.empty()) write_detections(a.records, records, detail::provenance(cfg));
  std::cout << "collected " << result.records.size() << " false positives; model now has "
            << result.model.negative_exemplars.size() << " negative exemplars\n";
  return 0;
}

inline int cmd_offline_learn(const CommonArgs& a) {
  RunConfig cfg = detail::config_or_default(a.config);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  const LoadedModel lm = load_model(a.model);
  const auto frames = load_all_frames(load_dataset(a.input, DatasetKind::video));
  OfflineLearnResult<ExemplarModel> result =
      offline_learn(lm.model, frames, cfg.post_learning, cfg.seeded_sampling());
  save_model(a.output, result.model, {kVersion, config_hash(cfg), cfg.seed});
  std::vector<DetectionRecord> records;
  for (const auto& r : result.reliable_regions)
    records.push_back({r.frame_id, r.box, r.score});
  if (!a.records.empty()) write_detections(a.records, records, detail::provenance(cfg));
  std::cout << "collected " << result.reliable_regions.size()
            << " reliable regions; model now has " << result.model.positive_exemplars.size()
            << " positive exemplars\n";
  return 0;
}

inline int cmd_report(const CommonArgs& a) {
  std::vector<MetricReport> reports;
  for (const auto& path : a.inputs) reports.push_back(read_report(path));
  const MetricReport merged = merge_reports(reports);
  write_report(a.output, merged,
               {std::string("polydet ") + kVersion,
                "merged " + std::to_string(reports.size()) + " reports"});
  std::cout << render_table(merged);
  return 0;
}

/// Parse and run one toolkit invocation. args excludes the program name.
/// Returns a process exit status; diagnostics go to stderr.
inline int run_command(const std::vector<std::string>& args) {
  CLI::App app{"region-based detection pipeline toolkit"};
  app.require_subcommand(1);
  CommonArgs a;

  auto* augment = app.add_subcommand("augment", "expand a dataset with an augmentation strategy");
  augment->add_option("-i,--input", a.input, "dataset root")->required();
  augment->add_option("-o,--output", a.output, "output dataset root")->required();
  augment->add_option("-c,--config", a.config, "config file");
  augment->add_option("-s,--strategy", a.strategy, "none|rot|aug-i|aug-ii (overrides config)");

  auto* train = app.add_subcommand("train", "train a detector on an annotated dataset");
  train->add_option("-i,--input", a.input, "dataset root")->required();
  train->add_option("-o,--output", a.output, "model file")->required();
  train->add_option("-c,--config", a.config, "config file");
  train->add_option("--seed", a.seed, "rng seed (overrides config)");

  auto* det = app.add_subcommand("detect", "run a model over a dataset");
  det->add_option("-m,--model", a.model, "model file")->required();
  det->add_option("-i,--input", a.input, "dataset root")->required();
  det->add_option("-o,--output", a.output, "detections file")->required();
  det->add_option("-t,--timing", a.timing, "per-frame timing file");

  auto* eval = app.add_subcommand("eval", "score detections against ground truth");
  eval->add_option("-d,--detections", a.detections, "detections file")->required();
  eval->add_option("-i,--input", a.input, "dataset root")->required();
  eval->add_option("-o,--output", a.output, "report file")->required();
  eval->add_option("-k,--kind", a.kind, "still|video");
  eval->add_option("--fps", a.fps, "frame rate for video metrics");
  eval->add_option("-t,--timing", a.timing, "timing file for MPT");
  eval->add_option("-c,--config", a.config, "config file");

  auto* fpl = app.add_subcommand("fp-learn", "retrain on false positives from polyp-free video");
  fpl->add_option("-m,--model", a.model, "model file")->required();
  fpl->add_option("-n,--negatives", a.input, "polyp-free dataset root")->required();
  fpl->add_option("-o,--output", a.output, "retrained model file")->required();
  fpl->add_option("-r,--records", a.records, "collected FP record file");
  fpl->add_option("-c,--config", a.config, "config file");
  fpl->add_option("--seed", a.seed, "rng seed (overrides config)");

  auto* ofl = app.add_subcommand("offline-learn", "video-specific self-training pass");
  ofl->add_option("-m,--model", a.model, "model file")->required();
  ofl->add_option("-v,--video", a.input, "video dataset root")->required();
  ofl->add_option("-o,--output", a.output, "retrained model file")->required();
  ofl->add_option("-r,--records", a.records, "reliable-region record file");
  ofl->add_option("-c,--config", a.config, "config file");
  ofl->add_option("--seed", a.seed, "rng seed (overrides config)");

  auto* rep = app.add_subcommand("report", "merge metric reports into one table");
  rep->add_option("-i,--inputs", a.inputs, "report files")->required();
  rep->add_option("-o,--output", a.output, "merged report file")->required();

  try {
    std::vector<const char*> argv;
    argv.push_back("polydet");
    for (const auto& s : args) argv.push_back(s.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());

    if (augment->parsed()) return cmd_augment(a);
    if (train->parsed()) return cmd_train(a);
    if (det->parsed()) return cmd_detect(a);
    if (eval->parsed()) return cmd_eval(a);
    if (fpl->parsed()) return cmd_fp_learn(a);
    if (ofl->parsed()) return cmd_offline_learn(a);
    if (rep->parsed()) return cmd_report(a);
    return kExitInternal;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FileError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kExitFile;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace polydet::cli
