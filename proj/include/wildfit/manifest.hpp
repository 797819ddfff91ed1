#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wildfit/image.hpp"

namespace wildfit {

enum class Domain { source, target };
enum class Split { train, valid, test };
enum class RegionSource { ground_truth, detected };

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
};

struct ItemRegion {
    Box box;
    std::optional<std::string> mask_path; // PGM aligned to box, (h, w)
    std::optional<std::string> category;
    RegionSource source_kind = RegionSource::ground_truth;

    std::optional<Mask8> mask; // loaded lazily with the image
};

// One multi-item person image from the source domain, or (with an empty
// person_id disallowed) never. Pixels are loaded on demand.
struct RegionedImage {
    std::string image_id;
    std::string path;
    std::string person_id;
    std::vector<ItemRegion> regions;
};

// One single-item catalog image from the target domain. The region
// defaults to the full image when the manifest omits it.
struct CatalogImage {
    std::string image_id;
    std::string path;
    ItemRegion item_region;
    bool region_explicit = false;
};

struct DatasetManifest {
    Domain domain = Domain::source;
    Split split = Split::train;
    std::vector<RegionedImage> source_entries;  // when domain == source
    std::vector<CatalogImage> target_entries;   // when domain == target
    std::string base_dir;                       // directory of the manifest file

    size_t size() const {
        return domain == Domain::source ? source_entries.size() : target_entries.size();
    }
};

const char* to_string(Domain d);
const char* to_string(Split s);
const char* to_string(RegionSource s);

// Parse and validate a manifest. Every region must lie inside its image,
// every referenced file must exist, image_ids must be unique. Errors name
// the offending entry index.
DatasetManifest load_manifest(const std::string& path);

// Canonical serialization; load followed by save is content-identical.
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// Source images usable for positive-pair construction: exactly those with
// at least two regions. Images with fewer are kept in the manifest but
// never paired.
std::vector<const RegionedImage*> filter_pairable(const DatasetManifest& manifest);

// Pixel access with the manifest's base directory applied; validates the
// region-in-bounds invariants against the actual image dimensions.
Image8 load_image(const DatasetManifest& manifest, const RegionedImage& entry);
Image8 load_image(const DatasetManifest& manifest, const CatalogImage& entry);
Mask8 load_region_mask(const DatasetManifest& manifest, const ItemRegion& region);
std::string resolve_path(const DatasetManifest& manifest, const std::string& rel);

} // namespace wildfit
