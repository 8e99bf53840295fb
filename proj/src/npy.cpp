#include "acis/npy.hpp"

#include <bit>
#include <cstring>
#include <regex>
#include <string>

#include "acis/errors.hpp"
#include "acis/file_util.hpp"

namespace acis::npy {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicSize = 6;

static_assert(std::endian::native == std::endian::little, "npy I/O assumes a little-endian host");

}  // namespace

void write(const std::filesystem::path& path, const Grid<double>& values) {
    std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                         std::to_string(values.rows()) + ", " + std::to_string(values.cols()) + "), }";
    // magic(6) + version(2) + length(2) + header, padded with spaces to a multiple of 64.
    const std::size_t unpadded = kMagicSize + 4 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');

    std::string out(kMagic, kMagicSize);
    out.push_back('\x01');
    out.push_back('\x00');
    const auto len = static_cast<std::uint16_t>(header.size());
    out.push_back(static_cast<char>(len & 0xFF));
    out.push_back(static_cast<char>(len >> 8));
    out += header;
    const auto* bytes = reinterpret_cast<const char*>(values.data());
    out.append(bytes, values.size() * sizeof(double));
    write_file_atomic(path, out);
}

Grid<double> read(const std::filesystem::path& path) {
    const auto blob = read_text_file(path);
    if (blob.size() < kMagicSize + 4 || blob.compare(0, kMagicSize, kMagic, kMagicSize) != 0) {
        throw FormatError(path.string() + ": not a .npy file");
    }
    const auto major = static_cast<unsigned char>(blob[kMagicSize]);
    std::size_t header_len = 0;
    std::size_t offset = 0;
    if (major == 1) {
        header_len = static_cast<unsigned char>(blob[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(blob[9])) << 8);
        offset = 10;
    } else if (major == 2 || major == 3) {
        for (int i = 3; i >= 0; --i) {
            header_len = (header_len << 8) | static_cast<unsigned char>(blob[8 + static_cast<std::size_t>(i)]);
        }
        offset = 12;
    } else {
        throw FormatError(path.string() + ": unsupported .npy version");
    }
    if (blob.size() < offset + header_len) {
        throw FormatError(path.string() + ": truncated header");
    }
    const std::string header = blob.substr(offset, header_len);
    std::smatch m;
    if (!std::regex_search(header, m, std::regex(R"('descr':\s*'<f8')"))) {
        throw FormatError(path.string() + ": only little-endian float64 arrays are supported");
    }
    if (std::regex_search(header, m, std::regex(R"('fortran_order':\s*True)"))) {
        throw FormatError(path.string() + ": Fortran-ordered arrays are not supported");
    }
    if (!std::regex_search(header, m, std::regex(R"('shape':\s*\(\s*(\d+)\s*,\s*(\d+)\s*\))"))) {
        throw FormatError(path.string() + ": expected a 2D shape");
    }
    const int rows = std::stoi(m[1].str());
    const int cols = std::stoi(m[2].str());
    const std::size_t bytes = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * sizeof(double);
    if (blob.size() != offset + header_len + bytes) {
        throw FormatError(path.string() + ": data size does not match shape");
    }
    Grid<double> values(rows, cols);
    std::memcpy(values.data(), blob.data() + offset + header_len, bytes);
    return values;
}

}  // namespace acis::npy
