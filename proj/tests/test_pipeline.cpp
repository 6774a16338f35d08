#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "corpus.hpp"
#include "polydet/polydet.hpp"

using namespace polydet;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("polydet_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Dataset with zero-padded ids 000..n-1; mask_ids get a full-frame-centred
// 20x20 polyp texture and matching mask.
void build_dataset(const fs::path& root, int n, const std::vector<int>& mask_ids) {
  const Image tex = corpus::make_texture(20, 20, 77);
  for (int i = 0; i < n; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "%03d", i);
    const bool positive =
        std::find(mask_ids.begin(), mask_ids.end(), i) != mask_ids.end();
    AnnotatedFrame f =
        positive ? corpus::make_polyp_frame(id, 64, 64, tex, 22, 22)
                 : AnnotatedFrame{id, corpus::make_background(64, 64, 90), {}};
    write_frame(root, f);
  }
}

}  // namespace

TEST_CASE("png round trip") {
  TempDir tmp("png");
  const Image img = corpus::make_texture(13, 9, 5);
  write_png((tmp.path / "x.png").string(), img);
  CHECK(read_png((tmp.path / "x.png").string()) == img);

  Image gray(5, 4, 1);
  for (std::size_t i = 0; i < gray.pixels.size(); ++i)
    gray.pixels[i] = static_cast<std::uint8_t>(13 * i);
  write_png((tmp.path / "g.png").string(), gray);
  CHECK(read_png((tmp.path / "g.png").string()) == gray);

  CHECK_THROWS_AS(read_png((tmp.path / "missing.png").string()), FileError);
  std::ofstream(tmp.path / "junk.png") << "not a png";
  CHECK_THROWS_AS(read_png((tmp.path / "junk.png").string()), FileError);
}

TEST_CASE("bmp reading") {
  TempDir tmp("bmp");
  // Hand-assembled 2x2 24-bit bottom-up BMP: rows are padded to 8 bytes.
  const unsigned char bmp[] = {
      'B', 'M', 70, 0, 0, 0, 0, 0, 0, 0, 54, 0, 0, 0,      // file header
      40, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 1, 0, 24, 0,    // dib header
      0, 0, 0, 0, 16, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
      // bottom row: blue, green; padding
      255, 0, 0, 0, 255, 0, 0, 0,
      // top row: red, white; padding
      0, 0, 255, 255, 255, 255, 0, 0};
  std::ofstream(tmp.path / "t.bmp", std::ios::binary)
      .write(reinterpret_cast<const char*>(bmp), sizeof bmp);
  const Image img = read_bmp((tmp.path / "t.bmp").string());
  REQUIRE(img.width == 2);
  REQUIRE(img.height == 2);
  REQUIRE(img.channels == 3);
  CHECK(int(img.at(0, 0, 0)) == 255);  // top-left red
  CHECK(int(img.at(1, 0, 0)) == 255);  // top-right white
  CHECK(int(img.at(1, 0, 2)) == 255);
  CHECK(int(img.at(0, 1, 2)) == 255);  // bottom-left blue
  CHECK(int(img.at(1, 1, 1)) == 255);  // bottom-right green

  std::ofstream(tmp.path / "bad.bmp") << "BMgarbage";
  CHECK_THROWS_AS(read_bmp((tmp.path / "bad.bmp").string()), FileError);
}

TEST_CASE("dataset loading") {
  SECTION("frames pair with masks by stem in lexicographic order") {
    TempDir tmp("ds1");
    build_dataset(tmp.path, 10, {3, 4});
    const auto ds = load_dataset(tmp.path, DatasetKind::still);
    REQUIRE(ds.size() == 10);
    CHECK(ds.frames[0].frame_id == "000");
    CHECK(ds.frames[9].frame_id == "009");
    int positives = 0;
    for (const auto& e : ds.frames) positives += e.mask_path.has_value();
    CHECK(positives == 2);
    CHECK(ds.frames[3].mask_path.has_value());
    CHECK(ds.frames[4].mask_path.has_value());

    const auto f3 = load_frame(ds, 3);
    REQUIRE(f3.annotations.size() == 1);
    CHECK(f3.annotations[0].box == BoundingBox{22, 22, 20, 20});
  }
  SECTION("an empty directory has no frames") {
    TempDir tmp("ds2");
    fs::create_directories(tmp.path / "frames");
    CHECK_THROWS_AS(load_dataset(tmp.path, DatasetKind::still), FileError);
    CHECK_THROWS_WITH(load_dataset(tmp.path / "nowhere", DatasetKind::still),
                      Catch::Matchers::StartsWith("no frames found"));
  }
  SECTION("mask dimension mismatches are rejected") {
    TempDir tmp("ds3");
    write_frame(tmp.path, {"000", corpus::make_background(100, 100, 10), {}});
    fs::create_directories(tmp.path / "masks");
    write_png((tmp.path / "masks" / "000.png").string(),
              mask_to_image(corpus::rect_mask(50, 50, 10, 10, 5, 5)));
    const auto ds = load_dataset(tmp.path, DatasetKind::still);
    CHECK_THROWS_WITH(load_frame(ds, 0),
                      Catch::Matchers::StartsWith("dimension mismatch"));
  }
  SECTION("duplicate stems are rejected") {
    TempDir tmp("ds4");
    write_frame(tmp.path, {"000", corpus::make_background(8, 8, 10), {}});
    std::ofstream(tmp.path / "frames" / "000.bmp") << "";
    CHECK_THROWS_WITH(load_dataset(tmp.path, DatasetKind::still),
                      Catch::Matchers::StartsWith("duplicate stems"));
  }
  SECTION("an all-zero mask file is an empty annotation") {
    TempDir tmp("ds5");
    write_frame(tmp.path, {"000", corpus::make_background(8, 8, 10), {}});
    fs::create_directories(tmp.path / "masks");
    write_png((tmp.path / "masks" / "000.png").string(), Image(8, 8, 1, 0));
    const auto ds = load_dataset(tmp.path, DatasetKind::still);
    CHECK_THROWS_WITH(load_frame(ds, 0), Catch::Matchers::StartsWith("empty annotation"));
  }
  SECTION("connected mask components become separate annotations") {
    TempDir tmp("ds6");
    BinaryMask two(32, 32);
    for (int y = 2; y < 6; ++y)
      for (int x = 2; x < 6; ++x) two.set(x, y);
    for (int y = 20; y < 26; ++y)
      for (int x = 10; x < 14; ++x) two.set(x, y);
    write_frame(tmp.path, {"000", corpus::make_background(32, 32, 10), {}});
    fs::create_directories(tmp.path / "masks");
    write_png((tmp.path / "masks" / "000.png").string(), mask_to_image(two));
    const auto f = load_frame(load_dataset(tmp.path, DatasetKind::still), 0);
    REQUIRE(f.annotations.size() == 2);
    CHECK(f.annotations[0].box == BoundingBox{2, 2, 4, 4});
    CHECK(f.annotations[1].box == BoundingBox{10, 20, 4, 6});
  }
}

TEST_CASE("detection file round trip") {
  TempDir tmp("dets");
  const auto path = tmp.path / "d.txt";

  SECTION("random records survive write/read within printed precision") {
    std::mt19937 rng(91);
    std::uniform_real_distribution<double> pos(-20.0, 500.0), side(0.01, 300.0),
        score(0.0, 1.0);
    std::vector<DetectionRecord> records;
    for (int i = 0; i < 1000; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "f%04d", static_cast<int>(rng() % 50));
      records.push_back({id, BoundingBox{pos(rng), pos(rng), side(rng), side(rng)},
                         score(rng)});
    }
    write_detections(path, records, {"polydet test", "seed 0"});
    const auto back = read_detections(path);
    REQUIRE(back.size() == records.size());
    // Output is sorted; boxes round-trip exactly, scores to 1e-6.
    for (std::size_t i = 0; i + 1 < back.size(); ++i) {
      CHECK(back[i].frame_id <= back[i + 1].frame_id);
      if (back[i].frame_id == back[i + 1].frame_id)
        CHECK(back[i].score >= back[i + 1].score - 1e-6);
    }
    std::size_t matched = 0;
    for (const auto& r : records)
      for (const auto& b : back)
        if (b.frame_id == r.frame_id && b.box == r.box &&
            std::fabs(b.score - r.score) <= 5e-7)
          ++matched;
    CHECK(matched >= records.size());
  }
  SECTION("empty record lists round trip") {
    write_detections(path, {});
    CHECK(read_detections(path).empty());
  }
  SECTION("malformed lines name their line number") {
    std::ofstream(path) << "# header\nf0 1 2 3 4 0.5\nf1 1 2 3\n";
    CHECK_THROWS_WITH(read_detections(path), Catch::Matchers::ContainsSubstring("line 3"));
  }
  SECTION("invalid boxes and scores are rejected") {
    std::ofstream(path) << "f0 1 2 0 4 0.5\n";
    CHECK_THROWS_AS(read_detections(path), DataError);
    std::ofstream(path) << "f0 1 2 3 4 1.5\n";
    CHECK_THROWS_AS(read_detections(path), DataError);
  }
}

TEST_CASE("config parsing") {
  SECTION("defaults validate and hash deterministically") {
    const RunConfig a, b;
    a.validate();
    CHECK(config_hash_hex(a) == config_hash_hex(b));
    RunConfig c;
    c.seed = 9;
    CHECK(config_hash_hex(a) != config_hash_hex(c));
  }
  SECTION("full document round trip") {
    RunConfig c;
    c.seed = 1234;
    c.augmentation.name = StrategyKind::aug_ii;
    c.sampling.pos_iou = 0.7;
    c.roi = {16, 12};
    c.detector.detect_threshold = 0.42;
    const auto parsed = parse_config(to_json(c));
    CHECK(parsed.seed == 1234);
    CHECK(parsed.augmentation.name == StrategyKind::aug_ii);
    CHECK(parsed.sampling.pos_iou == 0.7);
    CHECK(parsed.roi.out_w == 12);
    CHECK(parsed.detector.detect_threshold == 0.42);
    CHECK(config_hash_hex(parsed) == config_hash_hex(c));
  }
  SECTION("unknown keys are rejected") {
    CHECK_THROWS_WITH(parse_config(nlohmann::json{{"sede", 1}}),
                      Catch::Matchers::ContainsSubstring("unknown config key"));
    CHECK_THROWS_WITH(
        parse_config(nlohmann::json{{"sampling", {{"pos_iuo", 0.6}}}}),
        Catch::Matchers::ContainsSubstring("sampling.pos_iuo"));
  }
  SECTION("invariant violations are rejected") {
    CHECK_THROWS_AS(parse_config(nlohmann::json{{"sampling", {{"neg_iou", 0.9}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json{{"evaluation", {{"fps", -1}}}}),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config(nlohmann::json{{"augmentation", {{"strategy", "mixup"}}}}),
        ConfigError);
  }
  SECTION("optimizer provenance fields are recorded") {
    const auto c = parse_config(
        nlohmann::json{{"optimizer", {{"momentum", 0.95}, {"max_epochs", 10}}}});
    CHECK(c.optimizer.momentum == 0.95);
    CHECK(c.optimizer.max_epochs == 10);
  }
  SECTION("files that do not parse are config errors") {
    TempDir tmp("cfg");
    std::ofstream(tmp.path / "c.json") << "{ not json";
    CHECK_THROWS_AS(load_config(tmp.path / "c.json"), ConfigError);
    CHECK_THROWS_AS(load_config(tmp.path / "missing.json"), FileError);
  }
}

TEST_CASE("report file round trip and merging") {
  TempDir tmp("rep");
  MetricReport m = metrics_from_counts(167, 26, 41, 0);
  m.pdr = 100.0;
  m.rt_frames = 6.0;
  m.rt_seconds = 0.24;
  write_report(tmp.path / "a.txt", m, {"polydet test"});
  const auto back = read_report(tmp.path / "a.txt");
  CHECK(back.tp == 167);
  CHECK_THAT(back.pre, WithinAbs(m.pre, 1e-9));
  CHECK(back.pdr == 100.0);
  CHECK_THAT(*back.rt_frames, WithinAbs(6.0, 1e-9));

  MetricReport other = metrics_from_counts(33, 4, 9, 0);
  other.pdr = 0.0;
  const auto merged = merge_reports({back, other});
  CHECK(merged.tp == 200);
  CHECK(merged.fp == 30);
  CHECK(*merged.pdr == 50.0);
  CHECK_THAT(*merged.rt_frames, WithinAbs(6.0, 1e-9));
}

TEST_CASE("cli pipeline end to end") {
  TempDir tmp("cli");
  const Image tex = corpus::make_texture(32, 32, 111);
  const fs::path train_dir = tmp.path / "train";
  const fs::path test_dir = tmp.path / "test";
  for (int i = 0; i < 2; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "%03d", i);
    write_frame(train_dir, corpus::make_polyp_frame(id, 128, 128, tex,
                                                    corpus::aligned_pos(2 + i),
                                                    corpus::aligned_pos(2)));
    write_frame(test_dir, corpus::make_polyp_frame(id, 128, 128, tex,
                                                   corpus::aligned_pos(4),
                                                   corpus::aligned_pos(1 + i)));
  }
  // One polyp-free frame in the test set.
  write_frame(test_dir, {"002", corpus::make_background(128, 128, 90), {}});

  const fs::path cfg_path = tmp.path / "config.json";
  std::ofstream(cfg_path) << R"({
    "seed": 7,
    "anchors": {"base_size": 32, "scales": [1.0], "aspect_ratios": [1.0], "stride": 16},
    "sampling": {"minibatch_size": 8, "positive_fraction": 0.5},
    "roi": {"out_h": 8, "out_w": 8},
    "detector": {"detect_threshold": 0.9}
  })";

  const auto run = [](std::vector<std::string> args) {
    return cli::run_command(args);
  };

  SECTION("train, detect, eval") {
    const fs::path model = tmp.path / "model.bin";
    const fs::path dets = tmp.path / "dets.txt";
    const fs::path timing = tmp.path / "timing.txt";
    const fs::path report = tmp.path / "report.txt";
    REQUIRE(run({"train", "-i", train_dir.string(), "-o", model.string(), "-c",
                 cfg_path.string()}) == 0);
    REQUIRE(fs::exists(model));
    REQUIRE(run({"detect", "-m", model.string(), "-i", test_dir.string(), "-o",
                 dets.string(), "-t", timing.string()}) == 0);
    const auto records = read_detections(dets);
    CHECK_FALSE(records.empty());
    REQUIRE(run({"eval", "-d", dets.string(), "-i", test_dir.string(), "-o",
                 report.string(), "-t", timing.string(), "-c", cfg_path.string()}) == 0);
    const auto m = read_report(report);
    CHECK(m.tp == 2);
    CHECK(m.fn == 0);
    CHECK(m.tn == 1);  // the polyp-free frame stays clean
    CHECK(m.mpt);

    SECTION("detection output is byte-identical across runs and thread counts") {
      const fs::path dets2 = tmp.path / "dets2.txt";
      ::setenv("POLYDET_THREADS", "3", 1);
      REQUIRE(run({"detect", "-m", model.string(), "-i", test_dir.string(), "-o",
                   dets2.string()}) == 0);
      ::unsetenv("POLYDET_THREADS");
      CHECK(read_file(dets) == read_file(dets2));
    }
    SECTION("report merges per-dataset reports") {
      const fs::path merged = tmp.path / "merged.txt";
      REQUIRE(run({"report", "-i", report.string(), report.string(), "-o",
                   merged.string()}) == 0);
      const auto m2 = read_report(merged);
      CHECK(m2.tp == 4);  // counts sum across the two copies
      CHECK(m2.tn == 2);
    }
  }
  SECTION("augment writes a reloadable dataset") {
    const fs::path out = tmp.path / "aug";
    REQUIRE(run({"augment", "-i", train_dir.string(), "-o", out.string(), "-s",
                 "rot"}) == 0);
    const auto ds = load_dataset(out, DatasetKind::still);
    CHECK(ds.size() == 12);  // 2 frames x 6
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto f = load_frame(ds, i);
      REQUIRE(f.annotations.size() == 1);
      CHECK(mask_bbox(f.annotations[0].mask) == f.annotations[0].box);
    }
  }
  SECTION("error paths use distinct exit codes") {
    CHECK(run({"detect", "-m", (tmp.path / "none.bin").string(), "-i",
               test_dir.string(), "-o", (tmp.path / "x.txt").string()}) == cli::kExitFile);
    std::ofstream(tmp.path / "bad.json") << R"({"seed": "zebra"})";
    CHECK(run({"train", "-i", train_dir.string(), "-o", (tmp.path / "m.bin").string(),
               "-c", (tmp.path / "bad.json").string()}) == cli::kExitConfig);
    CHECK(run({"eval", "-d", (tmp.path / "nope.txt").string(), "-i", test_dir.string(),
               "-o", (tmp.path / "r.txt").string()}) == cli::kExitFile);
    std::ofstream(tmp.path / "stray.txt") << "ghost 1 2 3 4 0.5\n";
    CHECK(run({"eval", "-d", (tmp.path / "stray.txt").string(), "-i", test_dir.string(),
               "-o", (tmp.path / "r.txt").string()}) == cli::kExitData);
  }
}
