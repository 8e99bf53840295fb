#include <gtest/gtest.h>

#include <cmath>

#include "acis/errors.hpp"
#include "acis/summary.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace acis {
namespace {

using testing::TempDir;
using oracle::full_stack_reference;
using oracle::similarity_reference;

TEST(StatSummary, ConstantSeries) {
    const auto series = ImageSeries::from_frames(std::vector<Frame>(10, Frame(3, 4, 7)));
    const auto mean = stat_summary(series, SummaryKind::mean);
    const auto sd = stat_summary(series, SummaryKind::std);
    for (double v : mean.values().values()) EXPECT_EQ(v, 7.0);
    for (double v : sd.values().values()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(mean.provenance().frame_count, 10);
    EXPECT_EQ(mean.kind(), SummaryKind::mean);
}

TEST(StatSummary, TwoFrameTrace) {
    const auto series = ImageSeries::from_frames({Frame(1, 1, 0), Frame(1, 1, 10)});
    EXPECT_EQ(stat_summary(series, SummaryKind::mean).values()(0, 0), 5.0);
    EXPECT_EQ(stat_summary(series, SummaryKind::max).values()(0, 0), 10.0);
    EXPECT_EQ(stat_summary(series, SummaryKind::min).values()(0, 0), 0.0);
    EXPECT_EQ(stat_summary(series, SummaryKind::std).values()(0, 0), 5.0);
}

TEST(StatSummary, StdNeedsTwoFrames) {
    const auto series = ImageSeries::from_frames({Frame(2, 2, 1)});
    EXPECT_THROW(stat_summary(series, SummaryKind::std), ValidationError);
    EXPECT_NO_THROW(stat_summary(series, SummaryKind::mean));
    EXPECT_THROW(stat_summary(series, SummaryKind::corr), ValidationError);
}

TEST(StatSummary, StreamingMatchesFullStackForAnyChunking) {
    std::mt19937_64 rng(1234);
    const auto frames = testing::random_frames(rng, 50, 16, 16);
    const auto series = ImageSeries::from_frames(frames);
    for (auto kind : {SummaryKind::mean, SummaryKind::max, SummaryKind::min, SummaryKind::std}) {
        const auto reference = full_stack_reference(frames, kind);
        Grid<double> first;
        for (int chunk : {1, 7, 50, 1000}) {
            const auto summary = stat_summary(series, kind, chunk);
            for (std::size_t i = 0; i < reference.size(); ++i) {
                const double want = reference.values()[i];
                EXPECT_NEAR(summary.values().values()[i], want, 1e-6 * std::max(1.0, std::abs(want)));
            }
            if (first.empty()) {
                first = summary.values();
            } else {
                EXPECT_EQ(summary.values(), first) << "chunk " << chunk;
            }
        }
    }
}

TEST(StatSummary, MeanLiesBetweenMinAndMax) {
    std::mt19937_64 rng(8);
    const auto series = ImageSeries::from_frames(testing::random_frames(rng, 9, 8, 8));
    const auto mean = stat_summary(series, SummaryKind::mean).values();
    const auto lo = stat_summary(series, SummaryKind::min).values();
    const auto hi = stat_summary(series, SummaryKind::max).values();
    for (std::size_t i = 0; i < mean.size(); ++i) {
        EXPECT_LE(lo.values()[i], mean.values()[i]);
        EXPECT_LE(mean.values()[i], hi.values()[i]);
    }
}

TEST(NeighborhoodSimilarity, IdenticalTracesCorrelatePerfectly) {
    std::vector<Frame> frames;
    for (int t = 0; t < 6; ++t) frames.emplace_back(5, 5, static_cast<std::uint16_t>(100 + 37 * (t % 3)));
    const auto series = ImageSeries::from_frames(frames);
    for (auto metric : {SimilarityMetric::correlation, SimilarityMetric::cosine}) {
        const auto s = neighborhood_similarity_summary(series, metric, 1);
        for (double v : s.values().values()) EXPECT_NEAR(v, 1.0, 1e-12);
    }
}

TEST(NeighborhoodSimilarity, IndependentTracesAreNearZero) {
    std::mt19937_64 rng(42);
    const auto series = ImageSeries::from_frames(testing::random_frames(rng, 200, 10, 10, 4000));
    const auto s = neighborhood_similarity_summary(series, SimilarityMetric::correlation, 1);
    for (int r = 1; r < 9; ++r) {
        for (int c = 1; c < 9; ++c) {
            EXPECT_LT(std::abs(s.values()(r, c)), 0.1);
        }
    }
}

TEST(NeighborhoodSimilarity, MatchesPerPairBruteForce) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        auto frames = testing::random_frames(rng, 200, 4, 4);
        // A constant pixel exercises the zero-variance rule.
        for (auto& f : frames) f(0, 3) = 500;
        const auto series = ImageSeries::from_frames(frames);
        for (auto metric : {SimilarityMetric::correlation, SimilarityMetric::cosine}) {
            for (int radius : {1, 2}) {
                const auto got = neighborhood_similarity_summary(series, metric, radius, 13).values();
                const auto want = similarity_reference(frames, metric, radius);
                for (std::size_t i = 0; i < want.size(); ++i) {
                    EXPECT_NEAR(got.values()[i], want.values()[i], 1e-12);
                    EXPECT_GE(got.values()[i], -1.0);
                    EXPECT_LE(got.values()[i], 1.0);
                }
            }
        }
    }
}

TEST(NeighborhoodSimilarity, Preconditions) {
    const auto one = ImageSeries::from_frames({Frame(3, 3, 1)});
    EXPECT_THROW(neighborhood_similarity_summary(one, SimilarityMetric::correlation, 1), ValidationError);
    const auto two = ImageSeries::from_frames({Frame(3, 3, 1), Frame(3, 3, 2)});
    EXPECT_THROW(neighborhood_similarity_summary(two, SimilarityMetric::cosine, 0), ValidationError);
}

TEST(Normalize, WorkedExample) {
    const auto out = normalize(Grid<double>(2, 2, {1, 3, 1, 3}));
    EXPECT_EQ(out.values(), Grid<double>(2, 2, {-1, 1, -1, 1}));
}

TEST(Normalize, ConstantImageBecomesZeros) {
    const auto out = normalize(Grid<double>(3, 3, 42.0));
    for (double v : out.values().values()) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, ZeroMeanUnitStdAndIdempotent) {
    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> dist(5.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Grid<double> g(17, 23);
        for (auto& v : g.values()) v = dist(rng);
        const auto once = normalize(g);
        double mean = 0, sq = 0;
        for (double v : once.values().values()) mean += v;
        mean /= static_cast<double>(g.size());
        for (double v : once.values().values()) sq += (v - mean) * (v - mean);
        const double sd = std::sqrt(sq / static_cast<double>(g.size()));
        EXPECT_LT(std::abs(mean), 1e-5 * sd);
        EXPECT_NEAR(sd, 1.0, 1e-5);
        const auto twice = normalize(once.values());
        for (std::size_t i = 0; i < g.size(); ++i) {
            EXPECT_NEAR(twice.values().values()[i], once.values().values()[i], 1e-5);
        }
    }
}

TEST(SummaryImage, InvariantsAreEnforced) {
    EXPECT_THROW(SummaryImage(Grid<double>(1, 1, -1.0), SummaryKind::std, {}), ValidationError);
    EXPECT_THROW(SummaryImage(Grid<double>(1, 1, 70000.0), SummaryKind::mean, {}), ValidationError);
    EXPECT_THROW(SummaryImage(Grid<double>(1, 1, NAN), SummaryKind::max, {}), ValidationError);
    EXPECT_THROW(SummaryImage(Grid<double>(1, 1, 1.5), SummaryKind::corr, {}), ValidationError);
    EXPECT_EQ(parse_summary_kind("cosine"), SummaryKind::cosine);
    EXPECT_THROW(parse_summary_kind("median"), ValidationError);
}

TEST(SummaryImage, SaveLoadRoundTripIsLossless) {
    TempDir dir;
    std::mt19937_64 rng(6);
    const auto series = ImageSeries::from_frames(testing::random_frames(rng, 7, 9, 11), "ds");
    const auto summary = stat_summary(series, SummaryKind::std);
    save_summary(summary, dir / "s.npy");
    const auto loaded = load_summary(dir / "s.npy");
    EXPECT_EQ(loaded.values(), summary.values());
    EXPECT_EQ(loaded.kind(), SummaryKind::std);
    EXPECT_EQ(loaded.provenance().dataset, "ds");
    EXPECT_EQ(loaded.provenance().frame_count, 7);
}

}  // namespace
}  // namespace acis
