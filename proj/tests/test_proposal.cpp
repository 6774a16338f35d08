#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "polydet/proposal.hpp"

using namespace polydet;
using Catch::Matchers::WithinAbs;

namespace {

// Reference NMS that rescans the whole list for the maximum each round;
// structurally independent of the sorted greedy implementation.
std::vector<Detection> nms_reference(const std::vector<Detection>& dets, double thr) {
  std::vector<bool> alive(dets.size(), true);
  std::vector<Detection> kept;
  for (;;) {
    int best = -1;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (!alive[i]) continue;
      if (best < 0) {
        best = static_cast<int>(i);
        continue;
      }
      const Detection& a = dets[i];
      const Detection& b = dets[best];
      bool better = false;
      if (a.score != b.score) better = a.score > b.score;
      else if (a.box.x != b.box.x) better = a.box.x < b.box.x;
      else if (a.box.y != b.box.y) better = a.box.y < b.box.y;
      else if (a.box.w != b.box.w) better = a.box.w < b.box.w;
      else better = a.box.h < b.box.h;
      if (better) best = static_cast<int>(i);
    }
    if (best < 0) break;
    alive[best] = false;
    kept.push_back(dets[best]);
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (alive[i] && iou(dets[best].box, dets[i].box) > thr) alive[i] = false;
  }
  return kept;
}

std::vector<Detection> random_detections(std::mt19937& rng, std::size_t max_n) {
  const std::size_t n = rng() % (max_n + 1);
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < n; ++i) {
    // Integer coordinates and quantized scores so exact ties occur.
    const double x = static_cast<double>(rng() % 50);
    const double y = static_cast<double>(rng() % 50);
    const double w = 1.0 + static_cast<double>(rng() % 30);
    const double h = 1.0 + static_cast<double>(rng() % 30);
    const double score = static_cast<double>(rng() % 11) / 10.0;
    dets.emplace_back(BoundingBox{x, y, w, h}, score);
  }
  return dets;
}

std::vector<AnchorLabel> make_labels(std::size_t n_pos, std::size_t n_neg,
                                     std::size_t n_ignore = 0) {
  std::vector<AnchorLabel> labels;
  for (std::size_t i = 0; i < n_pos; ++i)
    labels.push_back({AnchorLabelKind::positive, 0});
  for (std::size_t i = 0; i < n_neg; ++i)
    labels.push_back({AnchorLabelKind::negative, std::nullopt});
  for (std::size_t i = 0; i < n_ignore; ++i)
    labels.push_back({AnchorLabelKind::ignore, std::nullopt});
  return labels;
}

}  // namespace

TEST_CASE("anchor generation") {
  SECTION("default config yields positions times k") {
    AnchorConfig cfg;
    const auto anchors = generate_anchors(4, 4, cfg);
    CHECK(anchors.size() == 192);  // 16 positions x 12
  }
  SECTION("single centered anchor") {
    AnchorConfig cfg;
    cfg.base_size = 128;
    cfg.scales = {1.0};
    cfg.aspect_ratios = {1.0};
    cfg.stride = 16;
    const auto anchors = generate_anchors(1, 1, cfg);
    REQUIRE(anchors.size() == 1);
    CHECK_THAT(anchors[0].x, WithinAbs(-56.0, 1e-12));
    CHECK_THAT(anchors[0].y, WithinAbs(-56.0, 1e-12));
    CHECK_THAT(anchors[0].w, WithinAbs(128.0, 1e-12));
    CHECK_THAT(anchors[0].h, WithinAbs(128.0, 1e-12));
  }
  SECTION("aspect ratios preserve area") {
    AnchorConfig cfg;
    cfg.base_size = 128;
    cfg.scales = {1.0};
    cfg.aspect_ratios = {2.0};
    cfg.stride = 16;
    const auto anchors = generate_anchors(1, 1, cfg);
    REQUIRE(anchors.size() == 1);
    CHECK_THAT(anchors[0].w, WithinAbs(128.0 / std::sqrt(2.0), 1e-9));
    CHECK_THAT(anchors[0].h, WithinAbs(128.0 * std::sqrt(2.0), 1e-9));
    CHECK_THAT(anchors[0].area(), WithinAbs(128.0 * 128.0, 1e-6));
  }
  SECTION("count property across configs") {
    std::mt19937 rng(3);
    for (int i = 0; i < 20; ++i) {
      AnchorConfig cfg;
      cfg.scales.assign(1 + rng() % 4, 1.0);
      cfg.aspect_ratios.assign(1 + rng() % 3, 1.0);
      const int fh = 1 + static_cast<int>(rng() % 6);
      const int fw = 1 + static_cast<int>(rng() % 6);
      CHECK(generate_anchors(fh, fw, cfg).size() ==
            static_cast<std::size_t>(fh) * fw * cfg.k());
    }
  }
}

TEST_CASE("label assignment examples") {
  SamplingConfig cfg;  // 0.6 / 0.3 defaults

  SECTION("anchor equal to gt is positive") {
    const auto labels = assign_labels({{0, 0, 10, 10}}, {{0, 0, 10, 10}}, cfg);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].kind == AnchorLabelKind::positive);
    CHECK(labels[0].matched_gt == 0);
  }
  SECTION("low overlap is negative when another anchor matches better") {
    const auto labels =
        assign_labels({{0, 0, 10, 10}, {5, 5, 10, 10}}, {{5, 5, 10, 10}}, cfg);
    CHECK(labels[0].kind == AnchorLabelKind::negative);  // IoU ~0.143
    CHECK(labels[1].kind == AnchorLabelKind::positive);
  }
  SECTION("intermediate overlap is ignored") {
    const auto labels =
        assign_labels({{0, 0, 10, 10}, {0, 0, 10, 25}}, {{0, 0, 10, 25}}, cfg);
    CHECK(labels[0].kind == AnchorLabelKind::ignore);  // IoU = 0.4
    CHECK(labels[1].kind == AnchorLabelKind::positive);
  }
  SECTION("no gt boxes labels everything negative") {
    const auto labels = assign_labels({{0, 0, 10, 10}, {5, 5, 10, 10}}, {}, cfg);
    for (const auto& l : labels) CHECK(l.kind == AnchorLabelKind::negative);
  }
  SECTION("argmax rule promotes the best anchor below threshold") {
    // Single anchor with IoU 0.4 against the only gt: ignored by the
    // threshold rule, positive via the argmax rule.
    const auto labels = assign_labels({{0, 0, 10, 10}}, {{0, 0, 10, 25}}, cfg);
    CHECK(labels[0].kind == AnchorLabelKind::positive);
    CHECK(labels[0].matched_gt == 0);

    SamplingConfig off = cfg;
    off.per_gt_argmax = false;
    const auto plain = assign_labels({{0, 0, 10, 10}}, {{0, 0, 10, 25}}, off);
    CHECK(plain[0].kind == AnchorLabelKind::ignore);
  }
}

TEST_CASE("label assignment properties under the default thresholds") {
  SamplingConfig cfg;
  std::mt19937 rng(29);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<BoundingBox> anchors;
    for (int i = 0; i < 80; ++i) {
      anchors.emplace_back(static_cast<double>(rng() % 100),
                           static_cast<double>(rng() % 100),
                           5.0 + static_cast<double>(rng() % 40),
                           5.0 + static_cast<double>(rng() % 40));
    }
    std::vector<BoundingBox> gts;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 4); ++i) {
      gts.emplace_back(static_cast<double>(rng() % 100),
                       static_cast<double>(rng() % 100),
                       5.0 + static_cast<double>(rng() % 40),
                       5.0 + static_cast<double>(rng() % 40));
    }
    const auto labels = assign_labels(anchors, gts, cfg);

    // Every gt has at least one positive anchor.
    for (std::size_t j = 0; j < gts.size(); ++j) {
      bool has_positive = false;
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (labels[i].kind != AnchorLabelKind::positive) continue;
        double best = 0.0;
        for (std::size_t k = 0; k < anchors.size(); ++k)
          best = std::max(best, iou(anchors[k], gts[j]));
        if (iou(anchors[i], gts[j]) == best) has_positive = true;
      }
      CHECK(has_positive);
    }
    // No negative overlaps any gt above neg_iou; positives carry a match.
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      if (labels[i].kind == AnchorLabelKind::negative) {
        for (const auto& gt : gts) CHECK(iou(anchors[i], gt) <= cfg.neg_iou);
        CHECK_FALSE(labels[i].matched_gt.has_value());
      }
      if (labels[i].kind == AnchorLabelKind::positive)
        CHECK(labels[i].matched_gt.has_value());
    }
  }
}

TEST_CASE("minibatch sampling") {
  SamplingConfig cfg;  // 256 at 1:1

  SECTION("plenty of both pools") {
    const auto mb = sample_minibatch(make_labels(200, 300), cfg);
    CHECK(mb.positives.size() == 128);
    CHECK(mb.negatives.size() == 128);
    CHECK_FALSE(mb.undersized);
  }
  SECTION("positive shortfall padded with negatives") {
    const auto mb = sample_minibatch(make_labels(50, 500), cfg);
    CHECK(mb.positives.size() == 50);
    CHECK(mb.negatives.size() == 206);
    CHECK_FALSE(mb.undersized);
  }
  SECTION("degenerate all-negative fill") {
    const auto mb = sample_minibatch(make_labels(0, 500), cfg);
    CHECK(mb.positives.empty());
    CHECK(mb.negatives.size() == 256);
  }
  SECTION("undersized flag when both pools are short") {
    const auto mb = sample_minibatch(make_labels(10, 20), cfg);
    CHECK(mb.positives.size() == 10);
    CHECK(mb.negatives.size() == 20);
    CHECK(mb.undersized);
  }
  SECTION("nothing to sample") {
    CHECK_THROWS_WITH(sample_minibatch(make_labels(0, 0, 5), cfg), "nothing to sample");
  }
  SECTION("ignored anchors are never sampled") {
    const auto labels = make_labels(10, 10, 100);
    const auto mb = sample_minibatch(labels, cfg);
    for (auto i : mb.positives) CHECK(labels[i].kind == AnchorLabelKind::positive);
    for (auto i : mb.negatives) CHECK(labels[i].kind == AnchorLabelKind::negative);
  }
  SECTION("seeded determinism") {
    cfg.rng_seed = 41;
    const auto labels = make_labels(500, 800);
    const auto a = sample_minibatch(labels, cfg);
    const auto b = sample_minibatch(labels, cfg);
    CHECK(a.positives == b.positives);
    CHECK(a.negatives == b.negatives);
    cfg.rng_seed = 42;
    const auto c = sample_minibatch(labels, cfg);
    CHECK(a.positives != c.positives);
  }
}

TEST_CASE("nms examples") {
  SECTION("single detection") {
    const std::vector<Detection> one{{{0, 0, 10, 10}, 0.5}};
    CHECK(nms(one, 0.5) == one);
  }
  SECTION("overlapping pair keeps the higher score") {
    const std::vector<Detection> pair{{{0, 0, 10, 10}, 0.9}, {{1, 1, 10, 10}, 0.8}};
    const auto kept = nms(pair, 0.6);  // pair IoU = 81/119 ~ 0.681
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].score == 0.9);
  }
  SECTION("disjoint boxes always survive") {
    const std::vector<Detection> two{{{0, 0, 10, 10}, 0.2}, {{50, 50, 10, 10}, 0.9}};
    for (double thr : {0.1, 0.5, 0.9}) CHECK(nms(two, thr).size() == 2);
  }
}

TEST_CASE("nms equals the rescanning reference on random inputs") {
  std::mt19937 rng(31);
  for (int rep = 0; rep < 300; ++rep) {
    const auto dets = random_detections(rng, 100);
    const double thr = 0.1 + 0.8 * (rng() % 100) / 100.0;
    const auto fast = nms(dets, thr);
    const auto ref = nms_reference(dets, thr);
    CHECK(fast == ref);

    // Postconditions: sorted by score, pairwise IoU below threshold.
    for (std::size_t i = 0; i + 1 < fast.size(); ++i)
      CHECK(fast[i].score >= fast[i + 1].score);
    for (std::size_t i = 0; i < fast.size(); ++i)
      for (std::size_t j = i + 1; j < fast.size(); ++j)
        CHECK(iou(fast[i].box, fast[j].box) <= thr);
  }
}

TEST_CASE("proposal selection") {
  ProposalConfig cfg;  // 0.7 train / 0.6 test / 300 cap

  SECTION("caps the proposal count at 300") {
    std::vector<Detection> dets;
    for (int i = 0; i < 500; ++i) {
      const double score = (i % 1000) / 1000.0;
      dets.emplace_back(BoundingBox{(i % 100) * 40.0, (i / 100) * 40.0, 20, 20}, score);
    }
    const auto kept = select_proposals(dets, cfg, ProposalMode::test, 4000, 4000);
    CHECK(kept.size() == 300);
    // Highest scoring survive the cap.
    double min_kept = 1.0;
    for (const auto& d : kept) min_kept = std::min(min_kept, d.score);
    std::vector<double> scores;
    for (const auto& d : dets) scores.push_back(d.score);
    std::sort(scores.rbegin(), scores.rend());
    CHECK(min_kept >= scores[299]);
  }
  SECTION("empty input") {
    CHECK(select_proposals({}, cfg, ProposalMode::test, 100, 100).empty());
  }
  SECTION("boxes are clipped to the frame") {
    const std::vector<Detection> dets{{{90, 90, 20, 20}, 0.9}, {{-500, 0, 10, 10}, 0.5}};
    const auto kept = select_proposals(dets, cfg, ProposalMode::test, 100, 100);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].box == BoundingBox{90, 90, 10, 10});
  }
  SECTION("train and test modes use their own thresholds") {
    // IoU of the pair is 2/3: suppressed at 0.6 (test), kept at 0.7 (train).
    const std::vector<Detection> dets{{{0, 0, 20, 10}, 0.9}, {{4, 0, 20, 10}, 0.8}};
    REQUIRE_THAT(iou(dets[0].box, dets[1].box), WithinAbs(2.0 / 3.0, 1e-9));
    CHECK(select_proposals(dets, cfg, ProposalMode::test, 100, 100).size() == 1);
    CHECK(select_proposals(dets, cfg, ProposalMode::train, 100, 100).size() == 2);
  }
}

TEST_CASE("crop_and_resize") {
  SECTION("full-image box at native size is the identity") {
    Plane img(7, 5);
    std::mt19937 rng(37);
    for (auto& v : img.values) v = static_cast<double>(rng() % 256);
    const auto out = crop_and_resize(img, {0, 0, 7, 5}, {5, 7});
    CHECK(out.values == img.values);
  }
  SECTION("constant image crops to a constant") {
    Plane img(20, 20, 3.25);
    const auto out = crop_and_resize(img, {2.3, 4.7, 9.1, 6.2}, {4, 4});
    for (double v : out.values) CHECK_THAT(v, WithinAbs(3.25, 1e-12));
  }
  SECTION("bilinear sampling reproduces affine images exactly") {
    Plane img(40, 30);
    const double a = 2.0, b = 0.75, c = -1.25;
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 40; ++x) img.at(x, y) = a + b * x + c * y;
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> ux(0.0, 20.0), uy(0.0, 15.0);
    std::uniform_real_distribution<double> uw(2.0, 19.0), uh(2.0, 14.0);
    for (int rep = 0; rep < 100; ++rep) {
      const BoundingBox box{ux(rng), uy(rng), uw(rng), uh(rng)};
      const RoiConfig roi{3 + static_cast<int>(rng() % 6), 3 + static_cast<int>(rng() % 6)};
      const auto out = crop_and_resize(img, box, roi);
      for (int i = 0; i < roi.out_h; ++i) {
        const double sy = box.y + i * (box.h - 1.0) / (roi.out_h - 1.0);
        for (int j = 0; j < roi.out_w; ++j) {
          const double sx = box.x + j * (box.w - 1.0) / (roi.out_w - 1.0);
          CHECK_THAT(out.at(j, i), WithinAbs(a + b * sx + c * sy, 1e-6));
        }
      }
    }
  }
  SECTION("zero-overlap box is an error") {
    Plane img(10, 10, 0.0);
    CHECK_THROWS_WITH(crop_and_resize(img, {20, 20, 5, 5}, {4, 4}), "empty crop");
  }
  SECTION("out-of-frame samples replicate edges") {
    Plane img(4, 4);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) img.at(x, y) = x;
    const auto out = crop_and_resize(img, {-2, 0, 8, 4}, {4, 4});
    CHECK_THAT(out.at(0, 0), WithinAbs(0.0, 1e-12));   // clamped left
    CHECK_THAT(out.at(3, 0), WithinAbs(3.0, 1e-12));   // clamped right
  }
}

TEST_CASE("config invariants are enforced") {
  CHECK_THROWS_AS(
      [] {
        SamplingConfig c;
        c.neg_iou = 0.7;
        c.validate();
      }(),
      ConfigError);
  CHECK_THROWS_AS(
      [] {
        ProposalConfig c;
        c.max_proposals = 0;
        c.validate();
      }(),
      ConfigError);
  CHECK_THROWS_AS(
      [] {
        RoiConfig c;
        c.out_h = 1;
        c.validate();
      }(),
      ConfigError);
  CHECK_THROWS_AS(
      [] {
        AnchorConfig c;
        c.scales = {};
        c.validate();
      }(),
      ConfigError);
}
