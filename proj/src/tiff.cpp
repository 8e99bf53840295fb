#include "acis/tiff.hpp"

#include <array>
#include <fstream>
#include <set>

#include "acis/errors.hpp"

namespace acis::tiff {
namespace {

constexpr std::uint16_t kTagImageWidth = 256;
constexpr std::uint16_t kTagImageLength = 257;
constexpr std::uint16_t kTagBitsPerSample = 258;
constexpr std::uint16_t kTagSamplesPerPixel = 277;
constexpr std::uint16_t kTagSampleFormat = 339;

constexpr std::uint16_t kTypeByte = 1;
constexpr std::uint16_t kTypeShort = 3;
constexpr std::uint16_t kTypeLong = 4;
constexpr std::uint16_t kTypeLong8 = 16;

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) {
            throw IoError("cannot open TIFF file " + path.string());
        }
    }

    void seek(std::uint64_t offset) {
        in_.clear();
        in_.seekg(static_cast<std::streamoff>(offset));
        if (!in_) {
            fail("offset beyond end of file");
        }
    }

    std::uint64_t read_uint(int bytes) {
        std::array<unsigned char, 8> buf{};
        in_.read(reinterpret_cast<char*>(buf.data()), bytes);
        if (in_.gcount() != bytes) {
            fail("truncated file");
        }
        std::uint64_t value = 0;
        for (int i = 0; i < bytes; ++i) {
            const int shift = little_endian_ ? 8 * i : 8 * (bytes - 1 - i);
            value |= static_cast<std::uint64_t>(buf[static_cast<std::size_t>(i)]) << shift;
        }
        return value;
    }

    void set_little_endian(bool little) { little_endian_ = little; }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError("TIFF " + path_.string() + ": " + what);
    }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    bool little_endian_ = true;
};

int type_size(std::uint16_t type) {
    switch (type) {
        case kTypeByte: return 1;
        case kTypeShort: return 2;
        case kTypeLong: return 4;
        case kTypeLong8: return 8;
        default: return 0;
    }
}

}  // namespace

std::vector<PageInfo> read_pages(const std::filesystem::path& path) {
    Reader reader(path);
    const auto order = reader.read_uint(2);
    if (order == 0x4949) {
        reader.set_little_endian(true);
    } else if (order == 0x4D4D) {
        reader.set_little_endian(false);
    } else {
        reader.fail("bad byte-order mark");
    }
    const auto magic = reader.read_uint(2);
    bool big = false;
    if (magic == 43) {
        big = true;
        if (reader.read_uint(2) != 8 || reader.read_uint(2) != 0) {
            reader.fail("unsupported BigTIFF offset size");
        }
    } else if (magic != 42) {
        reader.fail("bad magic number");
    }
    const int offset_bytes = big ? 8 : 4;
    const int count_bytes = big ? 8 : 2;
    const int entry_count_bytes = big ? 8 : 4;  // width of the count field inside an entry

    std::vector<PageInfo> pages;
    std::set<std::uint64_t> visited;
    std::uint64_t ifd = reader.read_uint(offset_bytes);
    while (ifd != 0) {
        if (!visited.insert(ifd).second) {
            reader.fail("IFD chain loops");
        }
        reader.seek(ifd);
        const auto entries = reader.read_uint(count_bytes);
        PageInfo page;
        for (std::uint64_t e = 0; e < entries; ++e) {
            const auto tag = static_cast<std::uint16_t>(reader.read_uint(2));
            const auto type = static_cast<std::uint16_t>(reader.read_uint(2));
            const auto count = reader.read_uint(entry_count_bytes);
            const int size = type_size(type);
            // Only the first value of each tag we care about is needed.
            std::uint64_t value = 0;
            if (size == 0 || count == 0) {
                reader.read_uint(offset_bytes);
                continue;
            }
            if (static_cast<std::uint64_t>(size) * count <= static_cast<std::uint64_t>(offset_bytes)) {
                value = reader.read_uint(size);
                const int rest = offset_bytes - size;
                if (rest > 0) {
                    reader.read_uint(rest);
                }
            } else {
                const auto where = reader.read_uint(offset_bytes);
                const bool wanted = tag == kTagBitsPerSample || tag == kTagSampleFormat ||
                                    tag == kTagImageWidth || tag == kTagImageLength ||
                                    tag == kTagSamplesPerPixel;
                if (wanted) {
                    // Remember the entry position, read the out-of-line value, come back.
                    const std::uint64_t next_entry =
                        ifd + static_cast<std::uint64_t>(count_bytes) +
                        (e + 1) * static_cast<std::uint64_t>(4 + entry_count_bytes + offset_bytes);
                    reader.seek(where);
                    value = reader.read_uint(size);
                    reader.seek(next_entry);
                }
            }
            switch (tag) {
                case kTagImageWidth: page.width = static_cast<std::uint32_t>(value); break;
                case kTagImageLength: page.height = static_cast<std::uint32_t>(value); break;
                case kTagBitsPerSample: page.bits_per_sample = static_cast<std::uint16_t>(value); break;
                case kTagSamplesPerPixel: page.samples_per_pixel = static_cast<std::uint16_t>(value); break;
                case kTagSampleFormat: page.sample_format = static_cast<std::uint16_t>(value); break;
                default: break;
            }
        }
        if (page.width == 0 || page.height == 0) {
            reader.fail("page " + std::to_string(pages.size()) + " lacks image dimensions");
        }
        pages.push_back(page);
        ifd = reader.read_uint(offset_bytes);
    }
    if (pages.empty()) {
        reader.fail("no pages");
    }
    return pages;
}

}  // namespace acis::tiff
