#pragma once

#include <map>
#include <string>
#include <vector>

#include "wildfit/evaldata.hpp"
#include "wildfit/manifest.hpp"

namespace wildfit {

// Synthetic two-domain dataset: multi-item "person" images whose item
// pixel statistics (base color plus stripe frequency) come from a style
// cluster, and single-item "catalog" images with a fixed brightness and
// background shift. Generation is a pure function of (config, seed).
struct SynthConfig {
    int n_styles = 4;
    int persons_per_style = 50;        // train split
    int valid_persons_per_style = 10;
    int test_persons_per_style = 34;
    int items_per_person = 3;
    int image_size = 128;              // source images, square
    int target_image_size = 96;
    int targets_per_style = 50;        // per split scale factor applies
    double person_color_noise = 12.0;  // 8-bit units, person around style base
    double item_color_noise = 8.0;     // item around person
    double stripe_amplitude = 18.0;
    double target_brightness_shift = 45.0; // fixed global offset on catalog images
    int comp_outfits_per_class_valid = 60;
    int comp_outfits_per_class_test = 200;
    int outfit_items = 3;

    void validate() const;
};

struct StyleLabels {
    std::map<std::string, int> person_style; // person_id -> style index
    std::map<std::string, int> target_style; // target image_id -> style index
};

struct SynthDataset {
    DatasetManifest source_train, source_valid, source_test;
    DatasetManifest target_train, target_valid, target_test;
    StyleLabels labels;
};

// Writes images/masks under out_dir and returns in-memory manifests with
// base_dir set. Same (config, seed) produces a byte-identical tree.
SynthDataset generate_synthetic_dataset(const SynthConfig& config, uint64_t seed,
                                        const std::string& out_dir);

// Style base color (RGB in [0,255]); evenly spaced hues at matched
// value so the catalog brightness shift stays orthogonal to style.
std::array<double, 3> style_base_color(int style, int n_styles);
int style_stripe_period(int style);

void save_style_labels(const StyleLabels& labels, const std::string& path);
StyleLabels load_style_labels(const std::string& path);

// Evaluation sets built from a source manifest plus ground-truth styles.
// Compatible outfits draw all items from one style; incompatible outfits
// mix at least two styles.
std::vector<Outfit> make_comp_outfits(const DatasetManifest& source, const StyleLabels& labels,
                                      int per_class, int items_per_outfit, uint64_t seed);

// One question per (image, removed item): the query is the person's other
// items, the right answer is the removed item, distractors come from
// other styles.
std::vector<FitbQuestion> make_fitb_questions(const DatasetManifest& source,
                                              const StyleLabels& labels, uint64_t seed);

} // namespace wildfit
