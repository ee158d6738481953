#include <doctest.h>

#include <algorithm>
#include <random>

#include "lordpx/error.hpp"
#include "lordpx/paradox.hpp"
#include "lordpx/reference.hpp"

using namespace lordpx;

namespace {

EffectEstimate est(double g, EstimateKind kind = EstimateKind::PostDIM) {
  return {kind, g, 0.1, g - 0.196, g + 0.196, false};
}

ComparisonRecord record(std::string label, double gp, double gg, double ttp, double ttg, double imb) {
  ComparisonRecord r;
  r.label = std::move(label);
  r.gP = est(gp);
  r.gG = est(gg, EstimateKind::GainDIM);
  r.ttP = est(ttp, EstimateKind::MlmPostAncova);
  r.ttG = est(ttg, EstimateKind::MlmGainAnova);
  r.pret_imb = imb;
  return r;
}

}  // namespace

TEST_CASE("simple-pair verdicts on published rows") {
  const auto ttsm = classify(record("ttsm", -0.23, 0.27, 0.08, 0.15, -0.41));
  CHECK(ttsm.category == VerdictCategory::Reversal);
  CHECK(ttsm.imbalance_flag == ImbalanceFlag::Substantial);

  const auto sar = classify(record("sar", 0.12, 0.11, 0.0, 0.0, 0.00));
  CHECK(sar.category == VerdictCategory::Consistent);
  CHECK(sar.imbalance_flag == ImbalanceFlag::Balanced);

  const auto shine = classify(record("shine", -1.66, -0.02, 0.14, -0.02, -2.64));
  CHECK(shine.category == VerdictCategory::BorderlineReversal);
  CHECK(shine.near_zero);
  CHECK(shine.divergence == doctest::Approx(1.64));
  CHECK(shine.imbalance_flag == ImbalanceFlag::Substantial);

  const auto tfl = classify(record("tfl", 0.35, 0.11, 0.0, 0.0, 0.25));
  CHECK(tfl.category == VerdictCategory::MagnitudeDivergent);
  CHECK(tfl.imbalance_flag == ImbalanceFlag::Substantial);
}

TEST_CASE("multilevel-pair verdicts on published rows") {
  const auto ttsm = classify_mlm(record("ttsm", -0.23, 0.27, 0.08, 0.15, -0.41));
  CHECK(ttsm.category == VerdictCategory::Consistent);
  CHECK(ttsm.divergence == doctest::Approx(0.07));

  const auto shine = classify_mlm(record("shine", -1.66, -0.02, 0.14, -0.02, -2.64));
  CHECK(shine.category == VerdictCategory::BorderlineReversal);
  CHECK(shine.divergence == doctest::Approx(0.16));

  const auto fs = classify_mlm(record("fs", 0, 0, 0.07, 0.24, -0.36));
  CHECK(fs.category == VerdictCategory::MagnitudeDivergent);
}

TEST_CASE("thresholds at two-decimal boundaries") {
  CHECK(classify_pair(0.22, 0.12, 0.0).category == VerdictCategory::MagnitudeDivergent);
  CHECK(classify_pair(0.21, 0.12, 0.0).category == VerdictCategory::Consistent);
  CHECK(imbalance_flag(0.20) == ImbalanceFlag::Notable);
  CHECK(imbalance_flag(-0.21) == ImbalanceFlag::Substantial);
  CHECK(imbalance_flag(0.10) == ImbalanceFlag::Balanced);
  CHECK(imbalance_flag(0.11) == ImbalanceFlag::Notable);
  CHECK(classify_pair(0.3, 0.05, 0.0).near_zero == false);
  CHECK(classify_pair(0.3, 0.04, 0.0).near_zero);
}

TEST_CASE("zero never partners a reversal") {
  const auto v = classify_pair(0.0, 0.4, 0.0);
  CHECK(v.near_zero);
  CHECK(v.category == VerdictCategory::BorderlineReversal);
  CHECK(classify_pair(-0.0, 0.4, 0.0).category == VerdictCategory::BorderlineReversal);
}

TEST_CASE("categories are exclusive, exhaustive and relabel-symmetric") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int i = 0; i < 20000; ++i) {
    const double a = u(rng), b = u(rng), imb = u(rng);
    const ParadoxVerdict v = classify_pair(a, b, imb);
    const ParadoxVerdict w = classify_pair(-a, -b, -imb);
    CHECK(v == w);
    switch (v.category) {
      case VerdictCategory::Consistent:
        CHECK(v.divergence < 0.1);
        break;
      case VerdictCategory::BorderlineReversal:
        CHECK(v.divergence >= 0.1 - 1e-9);
        CHECK(v.near_zero);
        break;
      case VerdictCategory::Reversal:
        CHECK(v.divergence >= 0.1 - 1e-9);
        CHECK_FALSE(v.near_zero);
        CHECK((a < 0) != (b < 0));
        break;
      case VerdictCategory::MagnitudeDivergent:
        CHECK(v.divergence >= 0.1 - 1e-9);
        CHECK_FALSE(v.near_zero);
        CHECK((a < 0) == (b < 0));
        break;
    }
    const double m = std::abs(imb);
    CHECK((v.imbalance_flag == ImbalanceFlag::Substantial) == (m > 0.2 + kThresholdSlack));
    CHECK((v.imbalance_flag == ImbalanceFlag::Notable) == (m > 0.1 + kThresholdSlack && m <= 0.2 + kThresholdSlack));
  }
}

TEST_CASE("custom thresholds") {
  const Thresholds t = Thresholds::parse("d=0.3,nz=0.01");
  CHECK(t.divergence == 0.3);
  CHECK(t.near_zero == 0.01);
  CHECK(t.substantial == 0.2);
  CHECK(classify_pair(0.22, 0.02, 0.0, t).category == VerdictCategory::Consistent);
  CHECK(classify_pair(0.32, 0.02, 0.0, t).category == VerdictCategory::MagnitudeDivergent);
  CHECK_THROWS_AS(Thresholds::parse("d"), Error);
  CHECK_THROWS_AS(Thresholds::parse("q=1"), Error);
  CHECK_THROWS_AS(Thresholds::parse("d=x"), Error);
}

TEST_CASE("missing estimates") {
  ComparisonRecord r = record("p", 0.1, 0.2, 0.3, 0.4, 0.0);
  r.gG.reset();
  CHECK_THROWS_AS(classify(r), Error);
  CHECK_NOTHROW(classify_mlm(r));
  r.pret_imb.reset();
  CHECK_THROWS_AS(classify_mlm(r), Error);

  ComparisonRecord empty;
  empty.label = "empty";
  const BatchSummary s = batch_classify({record("a", 0.1, 0.2, 0.3, 0.4, 0.0), r, empty});
  REQUIRE(s.items.size() == 3);
  CHECK_FALSE(s.items[0].partial);
  CHECK(s.items[1].partial);
  CHECK_FALSE(s.items[1].simple);
  CHECK_FALSE(s.items[1].mlm);
  CHECK(s.items[2].partial);
  CHECK(s.partial_count == 2);
}

TEST_CASE("reference table aggregates") {
  const auto records = reference_comparison_records();
  const BatchSummary s = batch_classify(records);
  CHECK(s.items.size() == 50);
  CHECK(s.imbalance_counts[static_cast<int>(ImbalanceFlag::Substantial)] == 8);
  const SignedCount above_01 = count_imbalance_above(records, 0.10);
  CHECK(above_01.negative == 10);
  CHECK(above_01.positive == 10);
  const SignedCount above_03 = count_imbalance_above(records, 0.3);
  std::vector<std::string> labels = above_03.labels;
  std::sort(labels.begin(), labels.end());
  CHECK(labels == std::vector<std::string>{"cmtm", "fs", "shine", "ttsm"});
  CHECK(*median_divergence(records, EstimatorPair::Mlm) < *median_divergence(records, EstimatorPair::Simple));
}
