#include "wildfit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "wildfit/rng.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace wildfit {

void SynthConfig::validate() const {
    if (n_styles < 2) throw DataError("synth config: n_styles must be >= 2");
    if (persons_per_style < 1) throw DataError("synth config: persons_per_style must be >= 1");
    if (items_per_person < 2) throw DataError("synth config: items_per_person must be >= 2");
    if (image_size < 24 * items_per_person)
        throw DataError("synth config: image_size too small for " +
                        std::to_string(items_per_person) + " items (need >= " +
                        std::to_string(24 * items_per_person) + ")");
    if (target_image_size < 48) throw DataError("synth config: target_image_size must be >= 48");
    if (outfit_items < 2) throw DataError("synth config: outfit_items must be >= 2");
}

std::array<double, 3> style_base_color(int style, int n_styles) {
    // HSV wheel, s=0.62 v=0.72; hues evenly spaced
    double h = 6.0 * double(style) / double(n_styles);
    double s = 0.62, v = 0.72 * 255.0;
    int i = int(std::floor(h)) % 6;
    double f = h - std::floor(h);
    double p = v * (1.0 - s);
    double q = v * (1.0 - s * f);
    double t = v * (1.0 - s * (1.0 - f));
    switch (i) {
        case 0: return {v, t, p};
        case 1: return {q, v, p};
        case 2: return {p, v, t};
        case 3: return {p, q, v};
        case 4: return {t, p, v};
        default: return {v, p, q};
    }
}

int style_stripe_period(int style) { return 4 + 2 * (style % 6); }

namespace {

uint8_t to_u8(double v) { return uint8_t(std::clamp(v, 0.0, 255.0)); }

struct ItemPaint {
    std::array<double, 3> color;
    int stripe_period;
    bool stripes_vertical;
    int stripe_phase;
};

void paint_rect(Image8& img, const Box& box, const ItemPaint& paint, double amplitude) {
    for (int y = box.y; y < box.y + box.h; ++y) {
        for (int x = box.x; x < box.x + box.w; ++x) {
            int coord = paint.stripes_vertical ? x : y;
            double bump = ((coord + paint.stripe_phase) % paint.stripe_period) * 2 <
                                  paint.stripe_period
                              ? amplitude
                              : -amplitude;
            uint8_t* px = img.at(x, y);
            for (int c = 0; c < 3; ++c) px[c] = to_u8(paint.color[size_t(c)] + bump);
        }
    }
}

Mask8 ellipse_mask(int w, int h) {
    Mask8 mask(w, h, 0);
    double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    double rx = w / 2.0, ry = h / 2.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double dx = (x - cx) / rx, dy = (y - cy) / ry;
            if (dx * dx + dy * dy <= 1.0) mask.set(x, y, 255);
        }
    return mask;
}

void fill_background(Image8& img, double base, Rng& rng) {
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
        double noise = rng.uniform(-6.0, 6.0);
        for (int c = 0; c < 3; ++c) img.pixels[i + size_t(c)] = to_u8(base + noise);
    }
}

struct SplitPlan {
    Split split;
    const char* tag;
    int persons_per_style;
    double target_scale; // fraction of targets_per_style for this split
};

std::array<double, 3> draw_person_color(int style, int n_styles, double noise, Rng& rng) {
    auto base = style_base_color(style, n_styles);
    for (auto& c : base) c += rng.gaussian() * noise;
    return base;
}

} // namespace

SynthDataset generate_synthetic_dataset(const SynthConfig& config, uint64_t seed,
                                        const std::string& out_dir) {
    config.validate();
    fs::create_directories(fs::path(out_dir) / "images");
    fs::create_directories(fs::path(out_dir) / "masks");

    SynthDataset ds;
    const std::array<SplitPlan, 3> plans{{
        {Split::train, "train", config.persons_per_style, 1.0},
        {Split::valid, "valid", config.valid_persons_per_style, 0.5},
        {Split::test, "test", config.test_persons_per_style, 1.0},
    }};

    auto manifest_for = [&](Domain d, Split s) -> DatasetManifest* {
        if (d == Domain::source)
            return s == Split::train   ? &ds.source_train
                   : s == Split::valid ? &ds.source_valid
                                       : &ds.source_test;
        return s == Split::train   ? &ds.target_train
               : s == Split::valid ? &ds.target_valid
                                   : &ds.target_test;
    };

    for (const auto& plan : plans) {
        DatasetManifest* src = manifest_for(Domain::source, plan.split);
        src->domain = Domain::source;
        src->split = plan.split;
        src->base_dir = out_dir;

        const int S = config.image_size;
        const int band = S / config.items_per_person;
        for (int style = 0; style < config.n_styles; ++style) {
            for (int p = 0; p < plan.persons_per_style; ++p) {
                std::string person_id =
                    std::string("p_") + plan.tag + "_" + std::to_string(style) + "_" + std::to_string(p);
                std::string image_id =
                    std::string("src_") + plan.tag + "_" + std::to_string(style) + "_" + std::to_string(p);
                Rng rng(derive_seed(seed, "src", image_id, 0, 0));

                Image8 img(S, S);
                fill_background(img, 120.0, rng);

                auto person_color =
                    draw_person_color(style, config.n_styles, config.person_color_noise, rng);

                RegionedImage entry;
                entry.image_id = image_id;
                entry.person_id = person_id;
                entry.path = "images/" + image_id + ".ppm";

                for (int item = 0; item < config.items_per_person; ++item) {
                    Box box;
                    box.h = int(rng.uniform_int(std::min(28, band - 8), band - 6));
                    box.w = int(rng.uniform_int(36, std::min(64, S - 8)));
                    box.y = item * band + int(rng.uniform_index(uint64_t(band - box.h + 1)));
                    box.x = int(rng.uniform_index(uint64_t(S - box.w + 1)));

                    ItemPaint paint;
                    paint.color = person_color;
                    for (auto& c : paint.color) c += rng.gaussian() * config.item_color_noise;
                    paint.stripe_period = style_stripe_period(style);
                    paint.stripes_vertical = (style % 2) == 0;
                    paint.stripe_phase = int(rng.uniform_index(uint64_t(paint.stripe_period)));
                    paint_rect(img, box, paint, config.stripe_amplitude);

                    ItemRegion region;
                    region.box = box;
                    region.source_kind = RegionSource::ground_truth;
                    if ((p + item) % 2 == 0) {
                        Mask8 mask = ellipse_mask(box.w, box.h);
                        std::string mask_rel = "masks/" + image_id + "_r" + std::to_string(item) + ".pgm";
                        write_pgm((fs::path(out_dir) / mask_rel).string(), mask);
                        region.mask_path = mask_rel;
                    }
                    entry.regions.push_back(std::move(region));
                }
                write_ppm((fs::path(out_dir) / entry.path).string(), img);
                ds.labels.person_style[person_id] = style;
                src->source_entries.push_back(std::move(entry));
            }
        }

        DatasetManifest* tgt = manifest_for(Domain::target, plan.split);
        tgt->domain = Domain::target;
        tgt->split = plan.split;
        tgt->base_dir = out_dir;

        const int T = config.target_image_size;
        int per_style = std::max(1, int(std::lround(config.targets_per_style * plan.target_scale)));
        for (int style = 0; style < config.n_styles; ++style) {
            for (int t = 0; t < per_style; ++t) {
                std::string image_id =
                    std::string("tgt_") + plan.tag + "_" + std::to_string(style) + "_" + std::to_string(t);
                Rng rng(derive_seed(seed, "tgt", image_id, 0, 0));

                Image8 img(T, T);
                fill_background(img, 225.0, rng);

                ItemPaint paint;
                paint.color =
                    draw_person_color(style, config.n_styles, config.person_color_noise, rng);
                for (auto& c : paint.color) c += rng.gaussian() * config.item_color_noise;
                paint.stripe_period = style_stripe_period(style);
                paint.stripes_vertical = (style % 2) == 0;
                paint.stripe_phase = int(rng.uniform_index(uint64_t(paint.stripe_period)));

                Box box;
                box.w = int(rng.uniform_int(T * 5 / 8, T * 3 / 4));
                box.h = int(rng.uniform_int(T * 5 / 8, T * 3 / 4));
                box.x = (T - box.w) / 2;
                box.y = (T - box.h) / 2;
                paint_rect(img, box, paint, config.stripe_amplitude);

                // fixed global brightness offset: the catalog domain shift
                for (auto& px : img.pixels)
                    px = to_u8(double(px) + config.target_brightness_shift);

                CatalogImage entry;
                entry.image_id = image_id;
                entry.path = "images/" + image_id + ".ppm";
                entry.item_region.box = box;
                entry.item_region.source_kind = RegionSource::ground_truth;
                entry.region_explicit = true;
                write_ppm((fs::path(out_dir) / entry.path).string(), img);
                ds.labels.target_style[image_id] = style;
                tgt->target_entries.push_back(std::move(entry));
            }
        }
    }
    return ds;
}

void save_style_labels(const StyleLabels& labels, const std::string& path) {
    ordered_json doc;
    doc["person_style"] = ordered_json::object();
    for (const auto& [k, v] : labels.person_style) doc["person_style"][k] = v;
    doc["target_style"] = ordered_json::object();
    for (const auto& [k, v] : labels.target_style) doc["target_style"][k] = v;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write style labels: " + path);
    out << doc.dump(2) << "\n";
}

StyleLabels load_style_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open style labels: " + path);
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw DataError("style labels parse failure in " + path + ": " + e.what());
    }
    StyleLabels labels;
    for (const auto& [k, v] : doc.at("person_style").items()) labels.person_style[k] = v.get<int>();
    for (const auto& [k, v] : doc.at("target_style").items()) labels.target_style[k] = v.get<int>();
    return labels;
}

namespace {

// items of one style, gathered as refs
std::vector<std::vector<ItemRef>> items_by_style(const DatasetManifest& source,
                                                 const StyleLabels& labels, int n_styles) {
    std::vector<std::vector<ItemRef>> out(size_t(n_styles));
    for (const auto& img : source.source_entries) {
        auto it = labels.person_style.find(img.person_id);
        if (it == labels.person_style.end())
            throw DataError("no style label for person '" + img.person_id + "'");
        for (size_t r = 0; r < img.regions.size(); ++r)
            out[size_t(it->second)].push_back({img.image_id, int(r)});
    }
    return out;
}

int max_style(const StyleLabels& labels) {
    int n = 0;
    for (const auto& [_, s] : labels.person_style) n = std::max(n, s + 1);
    return n;
}

} // namespace

std::vector<Outfit> make_comp_outfits(const DatasetManifest& source, const StyleLabels& labels,
                                      int per_class, int items_per_outfit, uint64_t seed) {
    int n_styles = max_style(labels);
    auto pools = items_by_style(source, labels, n_styles);
    for (int s = 0; s < n_styles; ++s)
        if (int(pools[size_t(s)].size()) < items_per_outfit)
            throw DataError("style " + std::to_string(s) + " has too few items for outfits");

    Rng rng(derive_seed(seed, "comp_outfits"));
    std::vector<Outfit> outfits;
    auto sample_distinct = [&](const std::vector<ItemRef>& pool, int n, std::vector<ItemRef>& out) {
        std::vector<size_t> idx;
        while (int(idx.size()) < n) {
            size_t c = rng.uniform_index(pool.size());
            if (std::find(idx.begin(), idx.end(), c) == idx.end()) idx.push_back(c);
        }
        for (size_t i : idx) out.push_back(pool[i]);
    };

    for (int i = 0; i < per_class; ++i) {
        Outfit o;
        o.label = true;
        int style = int(rng.uniform_index(uint64_t(n_styles)));
        sample_distinct(pools[size_t(style)], items_per_outfit, o.items);
        outfits.push_back(std::move(o));
    }
    for (int i = 0; i < per_class; ++i) {
        Outfit o;
        o.label = false;
        // at least two distinct styles
        int s1 = int(rng.uniform_index(uint64_t(n_styles)));
        int s2 = (s1 + 1 + int(rng.uniform_index(uint64_t(n_styles - 1)))) % n_styles;
        sample_distinct(pools[size_t(s1)], 1, o.items);
        sample_distinct(pools[size_t(s2)], 1, o.items);
        for (int k = 2; k < items_per_outfit; ++k) {
            int s = int(rng.uniform_index(uint64_t(n_styles)));
            sample_distinct(pools[size_t(s)], 1, o.items);
        }
        outfits.push_back(std::move(o));
    }
    return outfits;
}

std::vector<FitbQuestion> make_fitb_questions(const DatasetManifest& source,
                                              const StyleLabels& labels, uint64_t seed) {
    int n_styles = max_style(labels);
    if (n_styles < 2) throw DataError("FITB generation needs >= 2 styles");
    auto pools = items_by_style(source, labels, n_styles);

    Rng rng(derive_seed(seed, "fitb"));
    std::vector<FitbQuestion> questions;
    for (const auto& img : source.source_entries) {
        if (img.regions.size() < 3) continue; // query must keep >= 2 items
        int style = labels.person_style.at(img.person_id);
        for (size_t removed = 0; removed < img.regions.size(); ++removed) {
            FitbQuestion q;
            for (size_t r = 0; r < img.regions.size(); ++r)
                if (r != removed) q.query_items.push_back({img.image_id, int(r)});

            ItemRef correct{img.image_id, int(removed)};
            std::array<ItemRef, 3> distractors;
            for (auto& d : distractors) {
                int s = (style + 1 + int(rng.uniform_index(uint64_t(n_styles - 1)))) % n_styles;
                const auto& pool = pools[size_t(s)];
                d = pool[rng.uniform_index(pool.size())];
            }
            q.answer_index = int(rng.uniform_index(4));
            int di = 0;
            for (int c = 0; c < 4; ++c)
                q.candidates[size_t(c)] = (c == q.answer_index) ? correct : distractors[size_t(di++)];
            questions.push_back(std::move(q));
        }
    }
    return questions;
}

} // namespace wildfit
