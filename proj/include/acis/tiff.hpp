#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace acis::tiff {

struct PageInfo {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint16_t bits_per_sample = 1;
    std::uint16_t samples_per_pixel = 1;
    std::uint16_t sample_format = 1;  // 1 unsigned, 2 signed, 3 float
};

/// Walks the IFD chain of a classic or BigTIFF file and returns one entry per page.
/// Pixel data is not touched. Throws FormatError on anything that is not TIFF.
std::vector<PageInfo> read_pages(const std::filesystem::path& path);

}  // namespace acis::tiff
