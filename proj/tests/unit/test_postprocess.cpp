#include <gtest/gtest.h>

#include "acis/errors.hpp"
#include "acis/overlay.hpp"
#include "acis/postprocess.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace acis {
namespace {

TEST(Binarize, StrictThreshold) {
    const ProbabilityMap map(1, 3, {0.4, 0.6, 0.5});
    EXPECT_EQ(binarize(map, 0.5), BinaryMask(1, 3, {0, 1, 0}));
    EXPECT_THROW(binarize(map, 0.0), ValidationError);
    EXPECT_THROW(binarize(map, 1.0), ValidationError);
}

TEST(Binarize, RaisingThresholdNeverAddsPixels) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        ProbabilityMap map(12, 12);
        for (auto& v : map.values()) v = u(rng);
        const double lo = 0.05 + 0.9 * u(rng);
        const double hi = lo + (0.999 - lo) * u(rng);
        const auto a = binarize(map, lo);
        const auto b = binarize(map, hi);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(b.values()[i], a.values()[i]);
    }
}

TEST(ExtractRegions, DiagonalPixelsFormOneRegion) {
    const BinaryMask mask(2, 2, {1, 0, 0, 1});
    const auto regions = extract_regions(mask, 1);
    ASSERT_EQ(regions.size(), 1u);
    EXPECT_EQ(regions[0].size(), 2u);
}

TEST(ExtractRegions, EmptyMaskAndMinSize) {
    EXPECT_TRUE(extract_regions(BinaryMask(5, 5, 0)).empty());
    const BinaryMask mask(1, 5, {1, 1, 0, 1, 0});
    EXPECT_EQ(extract_regions(mask, 2).size(), 1u);
    EXPECT_EQ(extract_regions(mask, 0).size(), 2u);
    EXPECT_TRUE(extract_regions(mask, kDefaultMinRegionSize).empty());
    EXPECT_THROW(extract_regions(mask, -1), ValidationError);
}

TEST(ExtractRegions, MatchesUnionFindOracleOnRandomMasks) {
    std::mt19937_64 rng(8);
    std::bernoulli_distribution coin(0.35);
    for (int trial = 0; trial < 100; ++trial) {
        BinaryMask mask(15, 13);
        for (auto& v : mask.values()) v = coin(rng);
        const int min_size = trial % 4;
        const auto regions = extract_regions(mask, min_size);

        std::set<std::set<Pixel>> want;
        for (auto& comp : oracle::components_by_union(mask)) {
            if (static_cast<int>(comp.size()) >= min_size) want.insert(comp);
        }
        std::set<std::set<Pixel>> got;
        BinaryMask covered(15, 13, 0);
        Pixel previous_first{-1, -1};
        for (const auto& region : regions) {
            const auto px = testing::pixel_set(region);
            EXPECT_TRUE(got.insert(px).second);
            EXPECT_LT(previous_first, *px.begin());
            previous_first = *px.begin();
            for (const auto& p : px) {
                EXPECT_EQ(covered(p.row, p.col), 0) << "regions overlap";
                covered(p.row, p.col) = 1;
            }
        }
        EXPECT_EQ(got, want);
    }
}

TEST(Overlay, DimensionsAndColours) {
    Grid<double> background(10, 12, 0.0);
    background(0, 0) = 4.0;
    const RegionList gt = {NeuronRegion({{2, 2}, {2, 3}, {3, 2}, {3, 3}})};
    const RegionList pred = {NeuronRegion({{6, 6}, {6, 7}, {7, 6}, {7, 7}, {8, 7}})};
    const auto image = render_overlay(background, &gt, pred);
    EXPECT_EQ(image.rows(), 10);
    EXPECT_EQ(image.cols(), 12);
    EXPECT_EQ(image(0, 0), (Rgb{255, 255, 255}));
    EXPECT_EQ(image(2, 2), kGroundTruthColor);
    EXPECT_EQ(image(6, 6), kPredictionColor);

    const auto no_gt = render_overlay(background, nullptr, pred);
    for (const auto& px : no_gt.values()) EXPECT_NE(px, kGroundTruthColor);
}

TEST(Overlay, OutlinePixelsAreRegionBoundaries) {
    // 5×5 filled square: its 16 border pixels are the boundary, the 3×3 core is not.
    std::vector<Pixel> square;
    for (int r = 3; r < 8; ++r)
        for (int c = 3; c < 8; ++c) square.push_back({r, c});
    const NeuronRegion region(square);
    const auto boundary = region_boundary(region);
    EXPECT_EQ(boundary.size(), 16u);
    const auto image = render_overlay(Grid<double>(12, 12, 0.0), nullptr, {region});
    std::set<Pixel> red;
    for (int r = 0; r < 12; ++r)
        for (int c = 0; c < 12; ++c)
            if (image(r, c) == kPredictionColor) red.insert({r, c});
    EXPECT_EQ(red, std::set<Pixel>(boundary.begin(), boundary.end()));
}

TEST(Overlay, PngRoundTrip) {
    testing::TempDir dir;
    std::mt19937_64 rng(1);
    Grid<double> background(9, 7);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& v : background.values()) v = u(rng);
    const auto image = render_overlay(background, nullptr, {NeuronRegion({{1, 1}})});
    write_png(dir / "o.png", image);
    EXPECT_EQ(read_png(dir / "o.png"), image);
}

}  // namespace
}  // namespace acis
