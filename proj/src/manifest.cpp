#include "acis/manifest.hpp"

#include <algorithm>
#include <cstdlib>

#include <json.hpp>

#include "acis/errors.hpp"
#include "acis/file_util.hpp"

namespace acis {

Manifest Manifest::load(const std::filesystem::path& path, std::optional<std::filesystem::path> data_root) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest " + path.string() + ": " + e.what());
    }
    if (!data_root) {
        if (const char* env = std::getenv(kDataRootEnv); env != nullptr && *env != '\0') {
            data_root = env;
        } else {
            data_root = path.parent_path();
        }
    }
    auto resolve = [&](const std::string& p) {
        std::filesystem::path candidate(p);
        return candidate.is_absolute() ? candidate : *data_root / candidate;
    };

    if (!doc.contains("datasets") || !doc["datasets"].is_array()) {
        throw FormatError("manifest " + path.string() + ": missing \"datasets\" array");
    }
    Manifest manifest;
    for (const auto& item : doc["datasets"]) {
        ManifestEntry entry;
        try {
            entry.name = item.at("name").get<std::string>();
            entry.series = resolve(item.at("series").get<std::string>());
            if (item.contains("regions") && !item["regions"].is_null()) {
                entry.regions = resolve(item["regions"].get<std::string>());
            }
            entry.role = item.value("role", std::string("train"));
            if (item.contains("tags")) {
                entry.tags = item["tags"].get<std::map<std::string, std::string>>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("manifest " + path.string() + ": " + e.what());
        }
        if (entry.role != "train" && entry.role != "test") {
            throw FormatError("manifest " + path.string() + ": dataset " + entry.name +
                              " has unknown role '" + entry.role + "'");
        }
        manifest.datasets.push_back(std::move(entry));
    }
    return manifest;
}

void Manifest::save(const std::filesystem::path& path) const {
    auto items = nlohmann::json::array();
    for (const auto& entry : datasets) {
        nlohmann::json item = {{"name", entry.name}, {"series", entry.series.string()}, {"role", entry.role}};
        if (entry.regions) {
            item["regions"] = entry.regions->string();
        }
        if (!entry.tags.empty()) {
            item["tags"] = entry.tags;
        }
        items.push_back(std::move(item));
    }
    write_file_atomic(path, nlohmann::json{{"datasets", items}}.dump(2));
}

const ManifestEntry& Manifest::find(const std::string& name) const {
    const auto it = std::find_if(datasets.begin(), datasets.end(),
                                 [&](const ManifestEntry& e) { return e.name == name; });
    if (it == datasets.end()) {
        throw ValidationError("dataset '" + name + "' is not in the manifest");
    }
    return *it;
}

std::vector<ManifestEntry> Manifest::select(const std::vector<std::string>& names) const {
    if (names.empty()) {
        return datasets;
    }
    std::vector<ManifestEntry> out;
    for (const auto& name : names) {
        out.push_back(find(name));
    }
    return out;
}

DatasetBundle open_dataset(const ManifestEntry& entry) {
    DatasetBundle bundle{entry.name, load_series(entry.series), std::nullopt, entry.tags};
    if (entry.regions) {
        bundle.regions = load_regions(*entry.regions);
    }
    bundle.validate();
    return bundle;
}

}  // namespace acis
