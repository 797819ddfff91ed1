#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wildfit/evaldata.hpp"
#include "wildfit/netcore.hpp"
#include "wildfit/patching.hpp"

namespace wildfit {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ItemEmbedding {
    ItemRef item_ref;
    std::vector<std::vector<double>> per_patch; // n_patches vectors
    std::vector<double> mean;                   // mean of per_patch
    std::vector<double> mean_unit;              // mean of unit-normalized per_patch
};

ItemEmbedding embed_item(const ModelState& state, const Image8& image, const ItemRegion& region,
                         const ItemRef& ref, int n_patches, Rng& rng,
                         const PatchConfig& patch_config);

// Embeds every distinct item referenced by the evaluation sets once.
// Per-item rng streams derive from (seed, item_ref): schedule-independent.
class EmbeddingIndex {
public:
    EmbeddingIndex(const ModelState& state, const DatasetManifest& manifest,
                   const std::vector<ItemRef>& refs, int n_patches, uint64_t seed,
                   const PatchConfig& patch_config, ExecMode mode = ExecMode::openmp);

    const ItemEmbedding& at(const ItemRef& ref) const;
    size_t size() const { return items_.size(); }

private:
    std::map<ItemRef, size_t> lookup_;
    std::vector<ItemEmbedding> items_;
};

struct FitbAnswer {
    int chosen_index = 0;
    std::array<double, 4> scores{};
};

// Outfit embedding is the mean of the query items' mean-patch embeddings;
// each candidate scores the average cosine between that mean and its
// patch embeddings. Ties break to the lowest index.
FitbAnswer fitb_answer(const EmbeddingIndex& index, const FitbQuestion& question);

// Negated mean pairwise distance, distance = 1 - average patch-pair
// cosine; higher = more compatible.
double outfit_compatibility_score(const EmbeddingIndex& index, const Outfit& outfit);

// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(equal). Exact pair
// counting up to kAucPairCountLimit scores, tie-aware rank formula above.
inline constexpr size_t kAucPairCountLimit = 10000;
double auc(const std::vector<double>& scores, const std::vector<bool>& labels);
double auc_pair_counting(const std::vector<double>& scores, const std::vector<bool>& labels);
double auc_rank_formula(const std::vector<double>& scores, const std::vector<bool>& labels);

struct EvalMetrics {
    double comp_auc = 0.0;
    double fitb_acc = 0.0;
};

EvalMetrics evaluate(const ModelState& state, const DatasetManifest& manifest,
                     const std::vector<Outfit>& comp_outfits,
                     const std::vector<FitbQuestion>& fitb_questions, int n_patches,
                     uint64_t seed, const PatchConfig& patch_config,
                     ExecMode mode = ExecMode::openmp);

// ---- embedding export + 2-D projection ----

struct ProjectedPoint {
    double x = 0.0;
    double y = 0.0;
    int label = 0; // color group
};

// Top-2 principal components (Jacobi eigensolver on the covariance).
// Deterministic sign convention: each axis's largest-magnitude loading
// is positive.
std::vector<std::array<double, 2>> pca_project_2d(const std::vector<std::vector<double>>& vectors);

double silhouette_2d(const std::vector<std::array<double, 2>>& points,
                     const std::vector<int>& labels);

struct ExportOptions {
    int n_patches = 20;
    uint64_t seed = 0;
    std::string projection = "pca";
    // optional label per item (e.g. synthetic style); falls back to a
    // person-id hash for coloring
    std::map<std::string, int> item_labels;
};

// JSONL with one line per item plus a companion SVG scatter of the 2-D
// projection; the SVG header records the projection method and seed.
void export_embeddings(const ModelState& state, const DatasetManifest& manifest,
                       const std::vector<ItemRef>& items, const ExportOptions& options,
                       const PatchConfig& patch_config, const std::string& jsonl_path,
                       const std::string& svg_path, ExecMode mode = ExecMode::openmp);

// All items of a source manifest, in manifest order.
std::vector<ItemRef> all_items(const DatasetManifest& manifest);

// ---- domain probe (adaptation effect measurement) ----

// Trains a logistic probe on frozen generator features to separate
// source from target patches; returns held-out accuracy. Low accuracy
// means the domains are aligned in feature space.
double domain_probe_accuracy(const std::vector<std::vector<double>>& features_source,
                             const std::vector<std::vector<double>>& features_target,
                             uint64_t seed);

// Generator features for randomly patched items of each domain.
std::vector<std::vector<double>> sample_domain_features(const ModelState& state,
                                                        const DatasetManifest& manifest,
                                                        int n_patches_total, uint64_t seed,
                                                        const PatchConfig& patch_config,
                                                        ExecMode mode = ExecMode::openmp);

} // namespace wildfit
