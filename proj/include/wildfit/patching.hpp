#pragma once

#include <string>
#include <vector>

#include "wildfit/manifest.hpp"
#include "wildfit/rng.hpp"

namespace wildfit {

struct PatchConfig {
    double r_min = 0.1;
    double r_max = 0.25;
    int out_resolution = 32;      // network input resolution after resize
    double mask_min_coverage = 0.6;
    int mask_max_tries = 10;
};

// A sampled square crop location. `ratio` is the r drawn at sampling
// time, kept so the side rule stays checkable after the fact.
struct PatchSpec {
    std::string image_id;
    int region_index = 0;
    int px = 0; // top-left, image coordinates
    int py = 0;
    int side = 1;
    double ratio = 0.0;
};

struct Patch {
    PatchSpec spec;
    std::vector<double> pixels; // [3][res][res], values in [0, 1]
};

// side = min(30, floor(r * min(w, h))), clamped to >= 1
int patch_side(int w, int h, double r);

double draw_crop_ratio(Rng& rng, double r_min, double r_max);

// Uniform square crop inside the region box. With a mask present,
// resamples up to mask_max_tries times for mask_min_coverage, then
// accepts the last draw.
PatchSpec sample_patch_spec(const ItemRegion& region, const std::string& image_id,
                            int region_index, Rng& rng, const PatchConfig& config);

// Fraction of the patch square covered by the region mask.
double mask_coverage(const ItemRegion& region, const PatchSpec& spec);

Patch extract_patch(const Image8& image, const PatchSpec& spec, int out_resolution);

std::vector<Patch> sample_patches_for_item(const Image8& image, const ItemRegion& region,
                                           const std::string& image_id, int region_index, int n,
                                           Rng& rng, const PatchConfig& config);

} // namespace wildfit
