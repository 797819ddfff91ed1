#include "wildfit/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace wildfit {

const char* to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        default: return "test";
    }
}

const char* to_string(RegionSource s) {
    return s == RegionSource::ground_truth ? "ground_truth" : "detected";
}

namespace {

Domain parse_domain(const std::string& s) {
    if (s == "source") return Domain::source;
    if (s == "target") return Domain::target;
    throw DataError("manifest: unknown domain '" + s + "'");
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "valid") return Split::valid;
    if (s == "test") return Split::test;
    throw DataError("manifest: unknown split '" + s + "'");
}

RegionSource parse_source_kind(const std::string& s, size_t entry) {
    if (s == "ground_truth") return RegionSource::ground_truth;
    if (s == "detected") return RegionSource::detected;
    throw DataError("manifest entry " + std::to_string(entry) + ": unknown source_kind '" + s + "'");
}

ItemRegion parse_region(const ordered_json& j, size_t entry) {
    ItemRegion region;
    const auto& box = j.at("box");
    if (!box.is_array() || box.size() != 4)
        throw DataError("manifest entry " + std::to_string(entry) + ": box must be [x,y,w,h]");
    region.box.x = box[0].get<int>();
    region.box.y = box[1].get<int>();
    region.box.w = box[2].get<int>();
    region.box.h = box[3].get<int>();
    if (region.box.w < 1 || region.box.h < 1 || region.box.x < 0 || region.box.y < 0)
        throw DataError("manifest entry " + std::to_string(entry) +
                        ": region box out of bounds (x=" + std::to_string(region.box.x) +
                        ", y=" + std::to_string(region.box.y) +
                        ", w=" + std::to_string(region.box.w) +
                        ", h=" + std::to_string(region.box.h) + ")");
    if (j.contains("mask_path") && !j.at("mask_path").is_null())
        region.mask_path = j.at("mask_path").get<std::string>();
    if (j.contains("category") && !j.at("category").is_null())
        region.category = j.at("category").get<std::string>();
    region.source_kind = parse_source_kind(j.at("source_kind").get<std::string>(), entry);
    return region;
}

ordered_json region_to_json(const ItemRegion& region) {
    ordered_json j;
    j["box"] = {region.box.x, region.box.y, region.box.w, region.box.h};
    j["mask_path"] = region.mask_path ? ordered_json(*region.mask_path) : ordered_json(nullptr);
    j["category"] = region.category ? ordered_json(*region.category) : ordered_json(nullptr);
    j["source_kind"] = to_string(region.source_kind);
    return j;
}

void require_file(const DatasetManifest& m, const std::string& rel, size_t entry) {
    std::string full = resolve_path(m, rel);
    if (!fs::exists(full))
        throw DataError("manifest entry " + std::to_string(entry) + ": missing file " + full);
}

} // namespace

std::string resolve_path(const DatasetManifest& manifest, const std::string& rel) {
    if (rel.empty()) throw DataError("empty path in manifest");
    fs::path p(rel);
    if (p.is_absolute() || manifest.base_dir.empty()) return rel;
    return (fs::path(manifest.base_dir) / p).string();
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw DataError("manifest parse failure in " + path + ": " + e.what());
    }

    DatasetManifest m;
    m.base_dir = fs::path(path).parent_path().string();
    try {
        m.domain = parse_domain(doc.at("domain").get<std::string>());
        m.split = parse_split(doc.at("split").get<std::string>());
    } catch (const ordered_json::exception& e) {
        throw DataError("manifest " + path + ": " + e.what());
    }

    const auto& entries = doc.at("entries");
    if (!entries.is_array()) throw DataError("manifest " + path + ": entries must be an array");

    std::set<std::string> seen_ids;
    for (size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        try {
            std::string image_id = e.at("image_id").get<std::string>();
            if (!seen_ids.insert(image_id).second)
                throw DataError("manifest entry " + std::to_string(i) + ": duplicate image_id '" +
                                image_id + "'");
            std::string img_path = e.at("path").get<std::string>();

            if (m.domain == Domain::source) {
                RegionedImage img;
                img.image_id = image_id;
                img.path = img_path;
                img.person_id = e.at("person_id").get<std::string>();
                if (img.person_id.empty())
                    throw DataError("manifest entry " + std::to_string(i) + ": empty person_id");
                for (const auto& rj : e.at("regions")) img.regions.push_back(parse_region(rj, i));
                m.source_entries.push_back(std::move(img));
            } else {
                CatalogImage img;
                img.image_id = image_id;
                img.path = img_path;
                const auto& regions = e.at("regions");
                if (regions.size() > 1)
                    throw DataError("manifest entry " + std::to_string(i) +
                                    ": target entries carry at most one region");
                if (regions.size() == 1) {
                    img.item_region = parse_region(regions[0], i);
                    img.region_explicit = true;
                }
                m.target_entries.push_back(std::move(img));
            }
        } catch (const ordered_json::exception& je) {
            throw DataError("manifest entry " + std::to_string(i) + ": " + je.what());
        }
    }

    // referenced files must exist at load time
    if (m.domain == Domain::source) {
        for (size_t i = 0; i < m.source_entries.size(); ++i) {
            const auto& img = m.source_entries[i];
            require_file(m, img.path, i);
            for (const auto& r : img.regions)
                if (r.mask_path) require_file(m, *r.mask_path, i);
        }
    } else {
        for (size_t i = 0; i < m.target_entries.size(); ++i) {
            require_file(m, m.target_entries[i].path, i);
            const auto& r = m.target_entries[i].item_region;
            if (r.mask_path) require_file(m, *r.mask_path, i);
        }
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    ordered_json doc;
    doc["domain"] = to_string(manifest.domain);
    doc["split"] = to_string(manifest.split);
    doc["entries"] = ordered_json::array();
    if (manifest.domain == Domain::source) {
        for (const auto& img : manifest.source_entries) {
            ordered_json e;
            e["image_id"] = img.image_id;
            e["path"] = img.path;
            e["person_id"] = img.person_id;
            e["regions"] = ordered_json::array();
            for (const auto& r : img.regions) e["regions"].push_back(region_to_json(r));
            doc["entries"].push_back(std::move(e));
        }
    } else {
        for (const auto& img : manifest.target_entries) {
            ordered_json e;
            e["image_id"] = img.image_id;
            e["path"] = img.path;
            e["regions"] = ordered_json::array();
            if (img.region_explicit) e["regions"].push_back(region_to_json(img.item_region));
            doc["entries"].push_back(std::move(e));
        }
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << doc.dump(2) << "\n";
}

std::vector<const RegionedImage*> filter_pairable(const DatasetManifest& manifest) {
    if (manifest.domain != Domain::source)
        throw DataError("filter_pairable expects a source manifest");
    std::vector<const RegionedImage*> out;
    for (const auto& img : manifest.source_entries)
        if (img.regions.size() >= 2) out.push_back(&img);
    return out;
}

namespace {

void check_region_bounds(const Image8& img, const ItemRegion& r, const std::string& image_id) {
    if (r.box.x < 0 || r.box.y < 0 || r.box.w < 1 || r.box.h < 1 ||
        r.box.x + r.box.w > img.width || r.box.y + r.box.h > img.height)
        throw DataError("image '" + image_id + "': region (" + std::to_string(r.box.x) + "," +
                        std::to_string(r.box.y) + "," + std::to_string(r.box.w) + "," +
                        std::to_string(r.box.h) + ") exceeds " + std::to_string(img.width) + "x" +
                        std::to_string(img.height));
}

} // namespace

Image8 load_image(const DatasetManifest& manifest, const RegionedImage& entry) {
    Image8 img = read_ppm(resolve_path(manifest, entry.path));
    for (const auto& r : entry.regions) check_region_bounds(img, r, entry.image_id);
    return img;
}

Image8 load_image(const DatasetManifest& manifest, const CatalogImage& entry) {
    Image8 img = read_ppm(resolve_path(manifest, entry.path));
    if (entry.region_explicit) check_region_bounds(img, entry.item_region, entry.image_id);
    return img;
}

Mask8 load_region_mask(const DatasetManifest& manifest, const ItemRegion& region) {
    if (!region.mask_path) throw DataError("region has no mask");
    Mask8 mask = read_pgm(resolve_path(manifest, *region.mask_path));
    if (mask.width != region.box.w || mask.height != region.box.h)
        throw DataError("mask " + *region.mask_path + " dimensions do not match its box");
    return mask;
}

} // namespace wildfit
