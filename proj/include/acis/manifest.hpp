#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acis/imaging_io.hpp"

namespace acis {

/// Environment variable that overrides the directory relative manifest paths resolve against.
inline constexpr const char* kDataRootEnv = "ACIS_DATA_ROOT";

struct ManifestEntry {
    std::string name;
    std::filesystem::path series;
    std::optional<std::filesystem::path> regions;
    std::string role = "train";  // "train" or "test"
    std::map<std::string, std::string> tags;
};

/// Dataset manifest, a JSON file of the form
///   {"datasets": [{"name": "00.00", "series": "00.00/images",
///                  "regions": "00.00/regions/regions.json", "role": "train",
///                  "tags": {"lab": "..."}}]}
/// Relative paths are resolved against `data_root` when given, else $ACIS_DATA_ROOT, else
/// the manifest's own directory.
struct Manifest {
    std::vector<ManifestEntry> datasets;

    static Manifest load(const std::filesystem::path& path,
                         std::optional<std::filesystem::path> data_root = std::nullopt);
    void save(const std::filesystem::path& path) const;

    const ManifestEntry& find(const std::string& name) const;

    /// Entries named in `names`, in that order (all entries in manifest order when empty).
    std::vector<ManifestEntry> select(const std::vector<std::string>& names) const;
};

/// Opens the series and, if present, the regions of one manifest entry and validates them.
DatasetBundle open_dataset(const ManifestEntry& entry);

}  // namespace acis
