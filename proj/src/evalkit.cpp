#include "wildfit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "wildfit/losses.hpp"

using ordered_json = nlohmann::ordered_json;

namespace wildfit {

namespace {

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double cosine_guarded(const std::vector<double>& a, const std::vector<double>& b) {
    double na = std::max(vec_norm(a), kNormFloor);
    double nb = std::max(vec_norm(b), kNormFloor);
    return dot(a, b) / (na * nb);
}

} // namespace

ItemEmbedding embed_item(const ModelState& state, const Image8& image, const ItemRegion& region,
                         const ItemRef& ref, int n_patches, Rng& rng,
                         const PatchConfig& patch_config) {
    if (n_patches < 1) throw EvalError("embed_item: n_patches must be >= 1");
    ItemEmbedding out;
    out.item_ref = ref;
    out.per_patch.reserve(size_t(n_patches));

    const int dim = state.config.embed_out;
    out.mean.assign(size_t(dim), 0.0);
    out.mean_unit.assign(size_t(dim), 0.0);

    GenActs gacts;
    EmbActs eacts;
    resize_acts(state, gacts);
    resize_acts(state, eacts);
    for (int p = 0; p < n_patches; ++p) {
        PatchSpec spec =
            sample_patch_spec(region, ref.image_id, ref.region_index, rng, patch_config);
        Patch patch = extract_patch(image, spec, patch_config.out_resolution);
        std::copy(patch.pixels.begin(), patch.pixels.end(), gacts.input.begin());
        gen_forward(state.gen, gacts);
        emb_forward(state.emb, gacts.feature.data(), eacts);
        out.per_patch.push_back(eacts.out);

        double n = std::max(vec_norm(eacts.out), kNormFloor);
        for (int d = 0; d < dim; ++d) {
            out.mean[size_t(d)] += eacts.out[size_t(d)] / n_patches;
            out.mean_unit[size_t(d)] += eacts.out[size_t(d)] / (n * n_patches);
        }
    }
    return out;
}

EmbeddingIndex::EmbeddingIndex(const ModelState& state, const DatasetManifest& manifest,
                               const std::vector<ItemRef>& refs, int n_patches, uint64_t seed,
                               const PatchConfig& patch_config, ExecMode mode) {
    std::vector<ItemRef> distinct;
    for (const auto& r : refs)
        if (lookup_.emplace(r, 0).second) distinct.push_back(r);
    std::sort(distinct.begin(), distinct.end());
    for (size_t i = 0; i < distinct.size(); ++i) lookup_[distinct[i]] = i;
    items_.resize(distinct.size());

    ItemResolver resolver(manifest);
    // decode each referenced image once, shared read-only across lanes
    std::unordered_map<std::string, Image8> images;
    std::vector<std::pair<const RegionedImage*, int>> resolved(distinct.size());
    for (size_t i = 0; i < distinct.size(); ++i) {
        resolved[i] = resolver.resolve(distinct[i]);
        const auto* img = resolved[i].first;
        if (!images.count(img->image_id)) images.emplace(img->image_id, load_image(manifest, *img));
    }
    // masks loaded once per region copy
    std::vector<ItemRegion> regions(distinct.size());
    for (size_t i = 0; i < distinct.size(); ++i) {
        regions[i] = resolved[i].first->regions[size_t(resolved[i].second)];
        if (regions[i].mask_path && !regions[i].mask)
            regions[i].mask = load_region_mask(manifest, regions[i]);
    }

    par::for_index(mode, int64_t(distinct.size()), [&](int64_t i) {
        const auto& ref = distinct[size_t(i)];
        Rng rng(derive_seed(seed, "embed", ref.str(), 0, 0));
        const Image8& image = images.at(ref.image_id);
        items_[size_t(i)] =
            embed_item(state, image, regions[size_t(i)], ref, n_patches, rng, patch_config);
    });
}

const ItemEmbedding& EmbeddingIndex::at(const ItemRef& ref) const {
    auto it = lookup_.find(ref);
    if (it == lookup_.end()) throw EvalError("embedding index: unknown item " + ref.str());
    return items_[it->second];
}

FitbAnswer fitb_answer(const EmbeddingIndex& index, const FitbQuestion& question) {
    if (question.query_items.empty()) throw EvalError("FITB question with empty query");
    const auto& first = index.at(question.query_items.front());
    std::vector<double> outfit_mean(first.mean.size(), 0.0);
    for (const auto& ref : question.query_items) {
        const auto& item = index.at(ref);
        for (size_t d = 0; d < outfit_mean.size(); ++d)
            outfit_mean[d] += item.mean[d] / double(question.query_items.size());
    }

    FitbAnswer answer;
    for (int c = 0; c < 4; ++c) {
        const auto& cand = index.at(question.candidates[size_t(c)]);
        double score = 0.0;
        for (const auto& pe : cand.per_patch)
            score += cosine_guarded(outfit_mean, pe) / double(cand.per_patch.size());
        answer.scores[size_t(c)] = score;
    }
    answer.chosen_index = 0;
    for (int c = 1; c < 4; ++c)
        if (answer.scores[size_t(c)] > answer.scores[size_t(answer.chosen_index)])
            answer.chosen_index = c;
    return answer;
}

double outfit_compatibility_score(const EmbeddingIndex& index, const Outfit& outfit) {
    if (outfit.items.size() < 2) throw EvalError("outfit needs >= 2 items");
    // mean over patch-pair cosines equals the dot of the mean unit vectors
    double dist_sum = 0.0;
    int n_pairs = 0;
    for (size_t a = 0; a + 1 < outfit.items.size(); ++a) {
        const auto& ia = index.at(outfit.items[a]);
        for (size_t b = a + 1; b < outfit.items.size(); ++b) {
            const auto& ib = index.at(outfit.items[b]);
            dist_sum += 1.0 - dot(ia.mean_unit, ib.mean_unit);
            ++n_pairs;
        }
    }
    return -dist_sum / n_pairs;
}

double auc_pair_counting(const std::vector<double>& scores, const std::vector<bool>& labels) {
    double wins = 0.0;
    size_t n_pos = 0, n_neg = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        ++n_pos;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    for (bool l : labels)
        if (!l) ++n_neg;
    if (n_pos == 0 || n_neg == 0) throw EvalError("auc: need both positive and negative labels");
    return wins / (double(n_pos) * double(n_neg));
}

double auc_rank_formula(const std::vector<double>& scores, const std::vector<bool>& labels) {
    const size_t n = scores.size();
    size_t n_pos = 0;
    for (bool l : labels)
        if (l) ++n_pos;
    size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw EvalError("auc: need both positive and negative labels");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // average ranks for ties, 1-based
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg = (double(i + 1) + double(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (size_t k = 0; k < n; ++k)
        if (labels[k]) rank_sum_pos += rank[k];
    double u = rank_sum_pos - double(n_pos) * double(n_pos + 1) / 2.0;
    return u / (double(n_pos) * double(n_neg));
}

double auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw EvalError("auc: scores/labels size mismatch");
    if (scores.size() <= kAucPairCountLimit) return auc_pair_counting(scores, labels);
    return auc_rank_formula(scores, labels);
}

EvalMetrics evaluate(const ModelState& state, const DatasetManifest& manifest,
                     const std::vector<Outfit>& comp_outfits,
                     const std::vector<FitbQuestion>& fitb_questions, int n_patches,
                     uint64_t seed, const PatchConfig& patch_config, ExecMode mode) {
    std::vector<ItemRef> refs;
    for (const auto& o : comp_outfits) refs.insert(refs.end(), o.items.begin(), o.items.end());
    for (const auto& q : fitb_questions) {
        refs.insert(refs.end(), q.query_items.begin(), q.query_items.end());
        refs.insert(refs.end(), q.candidates.begin(), q.candidates.end());
    }
    EmbeddingIndex index(state, manifest, refs, n_patches, seed, patch_config, mode);

    EvalMetrics metrics;
    if (!fitb_questions.empty()) {
        int correct = 0;
        for (const auto& q : fitb_questions)
            if (fitb_answer(index, q).chosen_index == q.answer_index) ++correct;
        metrics.fitb_acc = double(correct) / double(fitb_questions.size());
    }
    if (!comp_outfits.empty()) {
        std::vector<double> scores;
        std::vector<bool> labels;
        for (const auto& o : comp_outfits) {
            if (!o.label) throw EvalError("COMP outfit without label");
            scores.push_back(outfit_compatibility_score(index, o));
            labels.push_back(*o.label);
        }
        metrics.comp_auc = auc(scores, labels);
    }
    return metrics;
}

// ---- PCA / silhouette / export ----

namespace {

// Jacobi eigensolver for small symmetric matrices; returns eigenvalues
// ascending with matching eigenvectors in columns.
void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& eigvals,
                  std::vector<double>& eigvecs) {
    eigvecs.assign(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) eigvecs[size_t(i) * n + i] = 1.0;
    auto A = [&](int r, int c) -> double& { return a[size_t(r) * n + c]; };
    auto V = [&](int r, int c) -> double& { return eigvecs[size_t(r) * n + c]; };

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(A(p, q)) < 1e-300) continue;
                double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eigvals.resize(size_t(n));
    for (int i = 0; i < n; ++i) eigvals[size_t(i)] = A(i, i);
}

} // namespace

std::vector<std::array<double, 2>> pca_project_2d(const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty()) return {};
    const int dim = int(vectors.front().size());
    const size_t n = vectors.size();

    std::vector<double> mean(size_t(dim), 0.0);
    for (const auto& v : vectors)
        for (int d = 0; d < dim; ++d) mean[size_t(d)] += v[size_t(d)] / double(n);

    std::vector<double> cov(size_t(dim) * dim, 0.0);
    for (const auto& v : vectors)
        for (int r = 0; r < dim; ++r) {
            double dr = v[size_t(r)] - mean[size_t(r)];
            for (int c = r; c < dim; ++c)
                cov[size_t(r) * dim + c] += dr * (v[size_t(c)] - mean[size_t(c)]) / double(n);
        }
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < r; ++c) cov[size_t(r) * dim + c] = cov[size_t(c) * dim + r];

    std::vector<double> eigvals, eigvecs;
    jacobi_eigen(cov, dim, eigvals, eigvecs);

    // top-2 columns by eigenvalue
    std::vector<int> order(size_t(dim));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return eigvals[size_t(a)] > eigvals[size_t(b)]; });

    std::array<std::vector<double>, 2> axes;
    for (int k = 0; k < 2; ++k) {
        axes[size_t(k)].resize(size_t(dim));
        int col = order[size_t(std::min(k, dim - 1))];
        for (int d = 0; d < dim; ++d) axes[size_t(k)][size_t(d)] = eigvecs[size_t(d) * dim + col];
        // sign convention: largest-magnitude loading positive
        int arg = 0;
        for (int d = 1; d < dim; ++d)
            if (std::abs(axes[size_t(k)][size_t(d)]) > std::abs(axes[size_t(k)][size_t(arg)])) arg = d;
        if (axes[size_t(k)][size_t(arg)] < 0.0)
            for (auto& x : axes[size_t(k)]) x = -x;
    }

    std::vector<std::array<double, 2>> out(n);
    for (size_t i = 0; i < n; ++i)
        for (int k = 0; k < 2; ++k) {
            double s = 0.0;
            for (int d = 0; d < dim; ++d)
                s += (vectors[i][size_t(d)] - mean[size_t(d)]) * axes[size_t(k)][size_t(d)];
            out[i][size_t(k)] = s;
        }
    return out;
}

double silhouette_2d(const std::vector<std::array<double, 2>>& points,
                     const std::vector<int>& labels) {
    if (points.size() != labels.size() || points.size() < 3)
        throw EvalError("silhouette: bad input");
    std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) throw EvalError("silhouette: need >= 2 clusters");

    auto dist = [&](size_t i, size_t j) {
        double dx = points[i][0] - points[j][0];
        double dy = points[i][1] - points[j][1];
        return std::sqrt(dx * dx + dy * dy);
    };

    double total = 0.0;
    for (size_t i = 0; i < points.size(); ++i) {
        std::map<int, std::pair<double, int>> per_cluster; // label -> (sum, count)
        for (size_t j = 0; j < points.size(); ++j) {
            if (j == i) continue;
            auto& [sum, count] = per_cluster[labels[j]];
            sum += dist(i, j);
            ++count;
        }
        double a = 0.0;
        bool has_own = false;
        double b = 1e300;
        for (const auto& [label, sc] : per_cluster) {
            double mean = sc.first / sc.second;
            if (label == labels[i]) {
                a = mean;
                has_own = true;
            } else {
                b = std::min(b, mean);
            }
        }
        double s = has_own && std::max(a, b) > 0.0 ? (b - a) / std::max(a, b) : 0.0;
        total += s;
    }
    return total / double(points.size());
}

std::vector<ItemRef> all_items(const DatasetManifest& manifest) {
    if (manifest.domain != Domain::source) throw EvalError("all_items expects a source manifest");
    std::vector<ItemRef> refs;
    for (const auto& img : manifest.source_entries)
        for (size_t r = 0; r < img.regions.size(); ++r) refs.push_back({img.image_id, int(r)});
    return refs;
}

namespace {

const char* kPalette[8] = {"#c23b3b", "#3ba04d", "#3b55c2", "#c2963b",
                           "#8a3bc2", "#3bbcc2", "#c23b8f", "#6b705c"};

} // namespace

void export_embeddings(const ModelState& state, const DatasetManifest& manifest,
                       const std::vector<ItemRef>& items, const ExportOptions& options,
                       const PatchConfig& patch_config, const std::string& jsonl_path,
                       const std::string& svg_path, ExecMode mode) {
    EmbeddingIndex index(state, manifest, items, options.n_patches, options.seed, patch_config,
                         mode);
    ItemResolver resolver(manifest);

    std::ofstream out(jsonl_path);
    if (!out) throw EvalError("cannot write embeddings file: " + jsonl_path);

    std::vector<std::vector<double>> means;
    std::vector<int> labels;
    for (const auto& ref : items) {
        const auto& item = index.at(ref);
        auto [img, region_index] = resolver.resolve(ref);

        int label = 0;
        auto it = options.item_labels.find(ref.str());
        if (it != options.item_labels.end()) label = it->second;
        else label = int(hash_str(1469598103934665603ULL, img->person_id) % 8);

        ordered_json line;
        line["item_ref"] = ref.str();
        line["mean_embedding"] = item.mean;
        line["person_id"] = img->person_id;
        const auto& region = img->regions[size_t(region_index)];
        line["category"] = region.category ? ordered_json(*region.category) : ordered_json(nullptr);
        line["label"] = label;
        out << line.dump() << "\n";

        means.push_back(item.mean);
        labels.push_back(label);
    }
    out.close();

    auto projected = pca_project_2d(means);

    double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
    for (const auto& p : projected) {
        min_x = std::min(min_x, p[0]);
        max_x = std::max(max_x, p[0]);
        min_y = std::min(min_y, p[1]);
        max_y = std::max(max_y, p[1]);
    }
    if (projected.empty()) min_x = max_x = min_y = max_y = 0.0;
    double span_x = std::max(max_x - min_x, 1e-9);
    double span_y = std::max(max_y - min_y, 1e-9);

    const int W = 720, H = 720, pad = 36;
    std::ofstream svg(svg_path);
    if (!svg) throw EvalError("cannot write plot: " + svg_path);
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<!-- projection: " << options.projection << "; n_patches: " << options.n_patches
        << "; seed: " << options.seed << " -->\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"#fbfaf7\"/>\n";
    for (size_t i = 0; i < projected.size(); ++i) {
        double x = pad + (projected[i][0] - min_x) / span_x * (W - 2 * pad);
        double y = H - pad - (projected[i][1] - min_y) / span_y * (H - 2 * pad);
        svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3.5\" fill=\""
            << kPalette[size_t(labels[i] % 8)] << "\" fill-opacity=\"0.8\"/>\n";
    }
    svg << "</svg>\n";
}

// ---- domain probe ----

std::vector<std::vector<double>> sample_domain_features(const ModelState& state,
                                                        const DatasetManifest& manifest,
                                                        int n_patches_total, uint64_t seed,
                                                        const PatchConfig& patch_config,
                                                        ExecMode mode) {
    struct Slot {
        const Image8* image;
        const ItemRegion* region;
        std::string image_id;
        int region_index;
    };
    std::unordered_map<std::string, Image8> images;
    std::vector<Slot> slots;
    if (manifest.domain == Domain::source) {
        for (const auto& img : manifest.source_entries) {
            if (img.regions.empty()) continue;
            if (!images.count(img.image_id)) images.emplace(img.image_id, load_image(manifest, img));
            for (size_t r = 0; r < img.regions.size(); ++r)
                slots.push_back({nullptr, &img.regions[r], img.image_id, int(r)});
        }
    } else {
        for (const auto& img : manifest.target_entries) {
            if (!images.count(img.image_id)) images.emplace(img.image_id, load_image(manifest, img));
            slots.push_back({nullptr, &img.item_region, img.image_id, 0});
        }
    }
    if (slots.empty()) throw EvalError("sample_domain_features: empty manifest");
    for (auto& s : slots) s.image = &images.at(s.image_id);

    // target entries without an explicit region use the full image
    std::vector<ItemRegion> full_regions(slots.size());
    if (manifest.domain == Domain::target) {
        for (size_t i = 0; i < slots.size(); ++i) {
            const auto& img = *slots[i].image;
            if (slots[i].region->box.w < 1 || slots[i].region->box.h < 1) {
                full_regions[i].box = {0, 0, img.width, img.height};
                slots[i].region = &full_regions[i];
            }
        }
    }

    std::vector<std::vector<double>> features(size_t(n_patches_total));
    par::for_index(mode, n_patches_total, [&](int64_t i) {
        Rng rng(derive_seed(seed, "probe_feat", uint64_t(i)));
        const Slot& slot = slots[rng.uniform_index(slots.size())];
        PatchSpec spec =
            sample_patch_spec(*slot.region, slot.image_id, slot.region_index, rng, patch_config);
        Patch patch = extract_patch(*slot.image, spec, patch_config.out_resolution);
        GenActs acts;
        resize_acts(state, acts);
        std::copy(patch.pixels.begin(), patch.pixels.end(), acts.input.begin());
        gen_forward(state.gen, acts);
        features[size_t(i)] = acts.feature;
    });
    return features;
}

double domain_probe_accuracy(const std::vector<std::vector<double>>& features_source,
                             const std::vector<std::vector<double>>& features_target,
                             uint64_t seed) {
    if (features_source.empty() || features_target.empty())
        throw EvalError("probe: empty feature sets");
    const int dim = int(features_source.front().size());

    struct Example {
        const std::vector<double>* x;
        double y;
    };
    std::vector<Example> all;
    for (const auto& f : features_source) all.push_back({&f, 0.0});
    for (const auto& f : features_target) all.push_back({&f, 1.0});

    // deterministic shuffle, even indices train / odd test
    Rng rng(derive_seed(seed, "probe"));
    for (size_t i = all.size(); i > 1; --i)
        std::swap(all[i - 1], all[rng.uniform_index(i)]);

    std::vector<Example> train, test;
    for (size_t i = 0; i < all.size(); ++i) (i % 2 == 0 ? train : test).push_back(all[i]);

    // standardize on the train split
    std::vector<double> mean(size_t(dim), 0.0), stdev(size_t(dim), 0.0);
    for (const auto& e : train)
        for (int d = 0; d < dim; ++d) mean[size_t(d)] += (*e.x)[size_t(d)] / double(train.size());
    for (const auto& e : train)
        for (int d = 0; d < dim; ++d) {
            double v = (*e.x)[size_t(d)] - mean[size_t(d)];
            stdev[size_t(d)] += v * v / double(train.size());
        }
    for (auto& s : stdev) s = std::max(std::sqrt(s), 1e-9);

    std::vector<double> w(size_t(dim), 0.0);
    double b = 0.0;
    auto margin = [&](const std::vector<double>& x) {
        double m = b;
        for (int d = 0; d < dim; ++d)
            m += w[size_t(d)] * ((x[size_t(d)] - mean[size_t(d)]) / stdev[size_t(d)]);
        return m;
    };

    const double lr = 0.5;
    for (int epoch = 0; epoch < 400; ++epoch) {
        std::vector<double> gw(size_t(dim), 0.0);
        double gb = 0.0;
        for (const auto& e : train) {
            double p = 1.0 / (1.0 + std::exp(-margin(*e.x)));
            double g = (p - e.y) / double(train.size());
            gb += g;
            for (int d = 0; d < dim; ++d)
                gw[size_t(d)] += g * (((*e.x)[size_t(d)] - mean[size_t(d)]) / stdev[size_t(d)]);
        }
        for (int d = 0; d < dim; ++d) w[size_t(d)] -= lr * (gw[size_t(d)] + 1e-4 * w[size_t(d)]);
        b -= lr * gb;
    }

    int correct = 0;
    for (const auto& e : test) {
        double pred = margin(*e.x) > 0.0 ? 1.0 : 0.0;
        if (pred == e.y) ++correct;
    }
    return double(correct) / double(test.size());
}

} // namespace wildfit
