#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "wildfit/manifest.hpp"

namespace wildfit {

// Reference to one item: a region of a manifest image, serialized as
// "image_id:region_index".
struct ItemRef {
    std::string image_id;
    int region_index = 0;

    std::string str() const { return image_id + ":" + std::to_string(region_index); }
    static ItemRef parse(const std::string& s);
    bool operator==(const ItemRef&) const = default;
    auto operator<=>(const ItemRef&) const = default;
};

struct Outfit {
    std::vector<ItemRef> items; // length >= 2
    std::optional<bool> label;  // compatible / not; required for COMP scoring
};

struct FitbQuestion {
    std::vector<ItemRef> query_items;  // the outfit minus the removed item
    std::array<ItemRef, 4> candidates;
    int answer_index = 0;
};

// JSON schemas:
//   outfits:   {"outfits": [{"items": [ref...], "label": bool}]}
//   questions: {"questions": [{"query_items": [...], "candidates": [4 refs],
//               "answer_index": int}]}
std::vector<Outfit> load_outfits(const std::string& path);
void save_outfits(const std::vector<Outfit>& outfits, const std::string& path);
std::vector<FitbQuestion> load_fitb_questions(const std::string& path);
void save_fitb_questions(const std::vector<FitbQuestion>& questions, const std::string& path);

// Resolves refs against a source manifest; throws DataError on dangling refs.
struct ItemResolver {
    explicit ItemResolver(const DatasetManifest& manifest);

    const DatasetManifest& manifest;
    std::vector<std::pair<const RegionedImage*, int>> resolve(const std::vector<ItemRef>& refs) const;
    std::pair<const RegionedImage*, int> resolve(const ItemRef& ref) const;

private:
    std::unordered_map<std::string, const RegionedImage*> by_id_;
};

} // namespace wildfit
