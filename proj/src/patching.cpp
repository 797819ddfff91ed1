#include "wildfit/patching.hpp"

#include <algorithm>
#include <cmath>

namespace wildfit {

int patch_side(int w, int h, double r) {
    int side = int(std::floor(r * std::min(w, h)));
    side = std::min(side, 30);
    return std::max(side, 1);
}

double draw_crop_ratio(Rng& rng, double r_min, double r_max) {
    return rng.uniform(r_min, r_max);
}

namespace {

PatchSpec draw_spec(const ItemRegion& region, const std::string& image_id, int region_index,
                    Rng& rng, const PatchConfig& config) {
    PatchSpec spec;
    spec.image_id = image_id;
    spec.region_index = region_index;
    spec.ratio = draw_crop_ratio(rng, config.r_min, config.r_max);
    spec.side = patch_side(region.box.w, region.box.h, spec.ratio);
    spec.px = region.box.x + int(rng.uniform_index(uint64_t(region.box.w - spec.side + 1)));
    spec.py = region.box.y + int(rng.uniform_index(uint64_t(region.box.h - spec.side + 1)));
    return spec;
}

} // namespace

double mask_coverage(const ItemRegion& region, const PatchSpec& spec) {
    if (!region.mask) return 1.0;
    const Mask8& mask = *region.mask;
    int covered = 0;
    for (int y = 0; y < spec.side; ++y) {
        int my = spec.py - region.box.y + y;
        for (int x = 0; x < spec.side; ++x) {
            int mx = spec.px - region.box.x + x;
            if (mask.at(mx, my) != 0) ++covered;
        }
    }
    return double(covered) / double(spec.side * spec.side);
}

PatchSpec sample_patch_spec(const ItemRegion& region, const std::string& image_id,
                            int region_index, Rng& rng, const PatchConfig& config) {
    if (region.box.w < 1 || region.box.h < 1) throw DataError("degenerate region box");
    PatchSpec spec = draw_spec(region, image_id, region_index, rng, config);
    if (region.mask) {
        for (int attempt = 1; attempt < config.mask_max_tries &&
                              mask_coverage(region, spec) < config.mask_min_coverage;
             ++attempt) {
            spec = draw_spec(region, image_id, region_index, rng, config);
        }
    }
    return spec;
}

Patch extract_patch(const Image8& image, const PatchSpec& spec, int out_resolution) {
    Patch patch;
    patch.spec = spec;
    patch.pixels = crop_resize_to_unit(image, spec.px, spec.py, spec.side, out_resolution);
    return patch;
}

std::vector<Patch> sample_patches_for_item(const Image8& image, const ItemRegion& region,
                                           const std::string& image_id, int region_index, int n,
                                           Rng& rng, const PatchConfig& config) {
    std::vector<Patch> patches;
    patches.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        PatchSpec spec = sample_patch_spec(region, image_id, region_index, rng, config);
        patches.push_back(extract_patch(image, spec, config.out_resolution));
    }
    return patches;
}

} // namespace wildfit
