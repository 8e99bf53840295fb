#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "acis/errors.hpp"
#include "acis/file_util.hpp"
#include "acis/imaging_io.hpp"
#include "acis/manifest.hpp"
#include "acis/tiff.hpp"
#include "test_support.hpp"

namespace acis {
namespace {

using testing::TempDir;

Frame constant_frame(int rows, int cols, std::uint16_t value) { return Frame(rows, cols, value); }

TEST(LoadSeries, DirectoryOfFramesGivesCountAndShape) {
    TempDir dir;
    for (int i = 0; i < 4; ++i) {
        const Frame f = constant_frame(512, 512, static_cast<std::uint16_t>(i));
        write_tiff(dir / ("frame" + std::to_string(i) + ".tif"), std::span(&f, 1));
    }
    const auto series = load_series(dir.path());
    EXPECT_EQ(series.frame_count(), 4);
    EXPECT_EQ(series.height(), 512);
    EXPECT_EQ(series.width(), 512);
}

TEST(LoadSeries, DirectoryFramesAreReadInLexicographicOrder) {
    TempDir dir;
    const std::map<std::string, std::uint16_t> files = {{"b.tif", 2}, {"a.tif", 1}, {"c.tiff", 3}, {"a0.tif", 7}};
    for (const auto& [name, value] : files) {
        const Frame f = constant_frame(8, 6, value);
        write_tiff(dir / name, std::span(&f, 1));
    }
    std::ofstream(dir / "notes.txt") << "ignored";
    const auto series = load_series(dir.path());
    ASSERT_EQ(series.frame_count(), 4);
    std::vector<std::uint16_t> seen;
    series.for_each_frame([&](int, const Frame& frame) { seen.push_back(frame(0, 0)); }, 3);
    EXPECT_EQ(seen, (std::vector<std::uint16_t>{1, 7, 2, 3}));
    EXPECT_EQ(series.sources()[1].file.filename(), "a0.tif");
}

TEST(LoadSeries, MultiPageTiffPreservesValuesAndPageOrder) {
    TempDir dir;
    std::mt19937_64 rng(11);
    const auto frames = testing::random_frames(rng, 5, 16, 12);
    write_tiff(dir / "stack.tif", frames);
    const auto series = load_series(dir / "stack.tif");
    ASSERT_EQ(series.frame_count(), 5);
    for (int chunk : {1, 2, 5, 64}) {
        std::vector<int> order;
        series.for_each_frame(
            [&](int index, const Frame& frame) {
                order.push_back(index);
                EXPECT_EQ(frame, frames[static_cast<std::size_t>(index)]) << "chunk " << chunk;
            },
            chunk);
        EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
    }
    EXPECT_EQ(series.read_frame(3), frames[3]);
}

TEST(LoadSeries, MixedDimensionsNameTheOffendingFrame) {
    TempDir dir;
    const Frame a = constant_frame(8, 8, 1);
    const Frame b = constant_frame(8, 9, 1);
    write_tiff(dir / "0.tif", std::span(&a, 1));
    write_tiff(dir / "1.tif", std::span(&b, 1));
    try {
        load_series(dir.path());
        FAIL() << "expected a dimension mismatch";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("dimension mismatch"), std::string::npos) << e.what();
    }
}

TEST(LoadSeries, EightBitFramesAreRejected) {
    TempDir dir;
    const Frame a = constant_frame(4, 4, 1);
    write_tiff(dir / "0.tif", std::span(&a, 1));
    cv::imwrite((dir / "1.tif").string(), cv::Mat(4, 4, CV_8UC1, cv::Scalar(3)));
    try {
        load_series(dir.path());
        FAIL() << "expected an unsupported-format error";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("8-bit"), std::string::npos) << e.what();
    }
}

TEST(LoadSeries, MissingPathAndNonTiffFail) {
    TempDir dir;
    EXPECT_THROW(load_series(dir / "nope"), IoError);
    EXPECT_THROW(load_series(dir.path()), IoError);  // empty directory
    std::ofstream(dir / "x.tif") << "definitely not a tiff";
    EXPECT_THROW(load_series(dir / "x.tif"), FormatError);
}

TEST(TiffHeader, ReadsBigEndianFiles) {
    // Hand-built big-endian classic TIFF header with one IFD of three entries.
    TempDir dir;
    const unsigned char bytes[] = {
        'M', 'M', 0, 42, 0, 0, 0, 8,              // header, IFD at 8
        0, 3,                                     // 3 entries
        0x01, 0x00, 0, 3, 0, 0, 0, 1, 0, 5, 0, 0,  // width = 5 (SHORT)
        0x01, 0x01, 0, 4, 0, 0, 0, 1, 0, 0, 0, 7,  // height = 7 (LONG)
        0x01, 0x02, 0, 3, 0, 0, 0, 1, 0, 16, 0, 0,  // 16 bits
        0, 0, 0, 0};                              // no next IFD
    std::ofstream(dir / "be.tif", std::ios::binary).write(reinterpret_cast<const char*>(bytes), sizeof bytes);
    const auto pages = tiff::read_pages(dir / "be.tif");
    ASSERT_EQ(pages.size(), 1u);
    EXPECT_EQ(pages[0].width, 5u);
    EXPECT_EQ(pages[0].height, 7u);
    EXPECT_EQ(pages[0].bits_per_sample, 16);
}

TEST(ImageSeries, InMemoryVisitsEveryFrameOnce) {
    std::mt19937_64 rng(3);
    auto frames = testing::random_frames(rng, 7, 3, 4);
    const auto series = ImageSeries::from_frames(frames);
    std::vector<int> visits(7, 0);
    series.for_each_frame([&](int i, const Frame& f) {
        ++visits[static_cast<std::size_t>(i)];
        EXPECT_EQ(f, frames[static_cast<std::size_t>(i)]);
    }, 3);
    EXPECT_EQ(visits, std::vector<int>(7, 1));
    frames.push_back(Frame(3, 5));
    EXPECT_THROW(ImageSeries::from_frames(frames), ValidationError);
    EXPECT_THROW(ImageSeries::from_frames({}), ValidationError);
}

// ---------------------------------------------------------------------------

TEST(Regions, LoadSimpleDocument) {
    const auto regions = regions_from_json(R"([{"coordinates": [[0,0],[0,1]]}])");
    ASSERT_EQ(regions.size(), 1u);
    EXPECT_EQ(regions[0].size(), 2u);
    EXPECT_EQ(regions[0].coordinates()[1], (Pixel{0, 1}));
    EXPECT_TRUE(regions_from_json("[]").empty());
}

TEST(Regions, RejectsMalformedInput) {
    EXPECT_THROW(regions_from_json("[{"), FormatError);
    EXPECT_THROW(regions_from_json(R"({"coordinates": []})"), FormatError);
    EXPECT_THROW(regions_from_json(R"([{"coords": [[1,2]]}])"), FormatError);
    EXPECT_THROW(regions_from_json(R"([{"coordinates": [[1,2,3]]}])"), FormatError);
    EXPECT_THROW(regions_from_json(R"([{"coordinates": [[1.5,2]]}])"), FormatError);
    EXPECT_THROW(regions_from_json(R"([{"coordinates": []}])"), ValidationError);
    EXPECT_THROW(regions_from_json(R"([{"coordinates": [[1,2],[1,2]]}])"), ValidationError);
}

TEST(Regions, WriteProducesReferenceFormat) {
    EXPECT_EQ(regions_to_json({}), "[]");
    EXPECT_EQ(regions_to_json({NeuronRegion({{3, 4}})}), R"([{"coordinates":[[3,4]]}])");
}

TEST(Regions, FileRoundTripIsIdentityOnRandomSets) {
    TempDir dir;
    std::mt19937_64 rng(20170714);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> count(0, 12);
        const auto regions = testing::random_regions(rng, count(rng), 64, 48);
        write_regions(regions, dir / "r.json");
        EXPECT_EQ(load_regions(dir / "r.json"), regions);
    }
    EXPECT_THROW(write_regions({}, "/proc/forbidden/r.json"), IoError);
}

// ---------------------------------------------------------------------------

TEST(Rasterize, SingleRegion) {
    const auto mask = rasterize_regions({NeuronRegion({{0, 0}})}, 2, 2);
    EXPECT_EQ(mask, LabeledMask(2, 2, {1, 0, 0, 0}));
}

TEST(Rasterize, OverlapIsMarked) {
    const auto mask = rasterize_regions({NeuronRegion({{0, 0}}), NeuronRegion({{0, 0}, {0, 1}})}, 2, 2);
    EXPECT_EQ(mask(0, 0), kOverlapLabel);
    EXPECT_EQ(mask(0, 1), 2);
    EXPECT_EQ(mask(1, 0), 0);
}

TEST(Rasterize, OutOfBoundsNamesRegionAndCoordinate) {
    try {
        rasterize_regions({NeuronRegion({{0, 0}}), NeuronRegion({{1, 5}})}, 2, 2);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("region 1 coordinate (1, 5)"), std::string::npos) << e.what();
    }
}

TEST(Rasterize, DisjointRegionsGetDistinctLabels) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        RegionList disjoint;
        std::set<Pixel> used;
        for (const auto& region : testing::random_regions(rng, 8, 20, 20)) {
            const auto px = testing::pixel_set(region);
            if (std::none_of(px.begin(), px.end(), [&](const Pixel& p) { return used.count(p) > 0; })) {
                used.insert(px.begin(), px.end());
                disjoint.push_back(region);
            }
        }
        const auto mask = rasterize_regions(disjoint, 20, 20);
        std::set<std::int32_t> labels(mask.values().begin(), mask.values().end());
        labels.erase(0);
        EXPECT_EQ(labels.size(), disjoint.size());
        EXPECT_EQ(labels.count(kOverlapLabel), 0u);
    }
}

TEST(MergeToBinary, IsolatedRegionKeepsAllPixels) {
    const NeuronRegion region({{1, 1}, {1, 2}, {2, 1}});
    const auto merged = merge_to_binary(rasterize_regions({region}, 4, 4));
    EXPECT_EQ(merged, union_mask({region}, 4, 4));
}

TEST(MergeToBinary, AbuttingRegionsAreSeparated) {
    // Columns 0-1 belong to region 1 and columns 2-3 to region 2.
    const NeuronRegion left({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}, {2, 1}});
    const NeuronRegion right({{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 2}, {2, 3}});
    const auto merged = merge_to_binary(rasterize_regions({left, right}, 3, 4));
    for (int r = 0; r < 3; ++r) {
        EXPECT_EQ(merged(r, 0), 1);
        EXPECT_EQ(merged(r, 1), 0);
        EXPECT_EQ(merged(r, 2), 0);
        EXPECT_EQ(merged(r, 3), 1);
    }
}

TEST(MergeToBinary, OverlapPixelsAreRemoved) {
    const NeuronRegion a({{0, 0}, {0, 1}});
    const NeuronRegion b({{0, 1}, {0, 2}});
    const auto merged = merge_to_binary(rasterize_regions({a, b}, 1, 3));
    EXPECT_EQ(merged(0, 1), 0);
}

TEST(MergeToBinary, NeverAddsPixelsAndSeparatesLabels) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto regions = testing::random_regions(rng, 10, 24, 24, 4);
        const auto labeled = rasterize_regions(regions, 24, 24);
        const auto merged = merge_to_binary(labeled);
        const auto all = union_mask(regions, 24, 24);
        for (std::size_t i = 0; i < merged.size(); ++i) {
            EXPECT_LE(merged.values()[i], all.values()[i]);
        }
        for (int r = 0; r < 24; ++r) {
            for (int c = 0; c < 24; ++c) {
                if (merged(r, c) == 0) continue;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (merged.contains(r + dr, c + dc) && merged(r + dr, c + dc) == 1) {
                            EXPECT_EQ(labeled(r, c), labeled(r + dr, c + dc));
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------

TEST(DatasetStatistics, ConstantSeriesMean) {
    std::vector<Frame> frames(5, constant_frame(6, 7, 100));
    const DatasetBundle bundle{"const", ImageSeries::from_frames(frames), std::nullopt, {}};
    const auto stats = dataset_statistics(bundle);
    EXPECT_DOUBLE_EQ(stats.mean_pixel_value, 100.0);
    EXPECT_FALSE(stats.neuron_fraction.has_value());
}

TEST(DatasetStatistics, NeuronFractionOfOneRegion) {
    std::vector<Pixel> block;
    for (int r = 100; r < 116; ++r) {
        for (int c = 200; c < 232; ++c) {
            block.push_back({r, c});
        }
    }
    ASSERT_EQ(block.size(), 512u);
    const DatasetBundle bundle{"one", ImageSeries::from_frames({constant_frame(512, 512, 3)}),
                               RegionList{NeuronRegion(block)}, {}};
    const auto stats = dataset_statistics(bundle);
    EXPECT_DOUBLE_EQ(*stats.neuron_fraction, 512.0 / 262144.0);
    EXPECT_EQ(*stats.region_count, 1u);
}

TEST(DatasetBundle, ValidateRejectsRegionsOutsideFrames) {
    const DatasetBundle bundle{"d", ImageSeries::from_frames({constant_frame(4, 4, 0)}),
                               RegionList{NeuronRegion({{4, 0}})}, {}};
    EXPECT_THROW(bundle.validate(), ValidationError);
}

TEST(Manifest, ResolvesRelativePathsAndOpensDatasets) {
    TempDir dir;
    const Frame f = constant_frame(8, 8, 9);
    write_tiff(dir / "d1" / "images" / "0.tif", std::span(&f, 1));
    write_regions({NeuronRegion({{1, 1}})}, dir / "d1" / "regions.json");
    write_file_atomic(dir / "manifest.json", R"({"datasets": [
        {"name": "d1", "series": "d1/images", "regions": "d1/regions.json", "role": "train", "tags": {"lab": "x"}},
        {"name": "d2", "series": "/abs/images", "role": "test"}]})");
    const auto manifest = Manifest::load(dir / "manifest.json");
    ASSERT_EQ(manifest.datasets.size(), 2u);
    EXPECT_EQ(manifest.find("d1").series, dir / "d1/images");
    EXPECT_EQ(manifest.find("d2").series, "/abs/images");
    EXPECT_EQ(manifest.find("d1").tags.at("lab"), "x");
    EXPECT_THROW(manifest.find("d3"), ValidationError);
    EXPECT_EQ(manifest.select({"d2"}).front().name, "d2");

    const auto bundle = open_dataset(manifest.find("d1"));
    EXPECT_EQ(bundle.series.frame_count(), 1);
    EXPECT_EQ(bundle.regions->size(), 1u);

    const auto rooted = Manifest::load(dir / "manifest.json", std::filesystem::path("/data"));
    EXPECT_EQ(rooted.find("d1").series, std::filesystem::path("/data/d1/images"));

    write_file_atomic(dir / "bad.json", R"({"datasets": [{"name": "x", "series": "s", "role": "dev"}]})");
    EXPECT_THROW(Manifest::load(dir / "bad.json"), FormatError);
}

// Checks against the public Neurofinder training corpus; skipped unless a manifest is provided.
TEST(NeurofinderCorpus, SeriesLengthsAndStatistics) {
    const char* manifest_path = std::getenv("ACIS_NEUROFINDER_MANIFEST");
    if (manifest_path == nullptr) {
        GTEST_SKIP() << "set ACIS_NEUROFINDER_MANIFEST to run corpus checks";
    }
    const auto manifest = Manifest::load(manifest_path);
    double fraction_sum = 0.0;
    int with_regions = 0;
    for (const auto& entry : manifest.datasets) {
        const auto bundle = open_dataset(entry);
        EXPECT_GE(bundle.series.frame_count(), 1800) << entry.name;
        EXPECT_LE(bundle.series.frame_count(), 8000) << entry.name;
        const auto stats = dataset_statistics(bundle);
        EXPECT_GE(stats.mean_pixel_value, 57.0 - 0.5) << entry.name;
        EXPECT_LE(stats.mean_pixel_value, 2998.0 + 0.5) << entry.name;
        if (stats.neuron_fraction) {
            fraction_sum += *stats.neuron_fraction;
            ++with_regions;
        }
    }
    if (with_regions > 0) {
        EXPECT_NEAR(fraction_sum / with_regions, 0.12, 0.02);
    }
}

}  // namespace
}  // namespace acis
