#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wildfit/evaldata.hpp"
#include "wildfit/losses.hpp"
#include "wildfit/manifest.hpp"
#include "wildfit/netcore.hpp"
#include "wildfit/patching.hpp"

namespace wildfit {

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// "decayed by a factor of 0.015" read as multiply by (1 - 0.015); the
// literal reading is kept selectable because it collapses the rate within
// a couple thousand steps.
enum class LrDecay { one_minus_factor, multiply_by_factor };

struct TrainConfig {
    int batch_size_source = 32;
    int batch_size_target = 32;
    int persons_per_batch = 16;
    int patches_per_person = 2;
    double lr0 = 5e-5;
    double decay_factor = 0.015;
    int decay_every = 500;
    LrDecay decay_interpretation = LrDecay::one_minus_factor;
    double momentum = 0.9;
    int64_t max_steps = 1000;
    int early_stop_patience = 5; // validation evaluations without improvement
    int eval_every = 100;        // steps
    uint64_t seed = 1;
    bool pair_both_directions = true; // ordered pairs both ways (sum as printed)
    bool update_discriminator = true; // off detaches D entirely (ablation hook)
    ExecMode exec = ExecMode::openmp;

    void validate() const;
};

struct TrainBatch {
    std::vector<Patch> source_patches;
    std::vector<std::string> source_person; // per source slot, for invariants
    PairIndex pair_index;
    std::vector<Patch> target_patches;
};

struct StepMetrics {
    int64_t step = 0;
    double l_c = 0.0;
    double loss_g = 0.0;
    double loss_d = 0.0;
    double d_src_mean = 0.0;
    double d_tgt_mean = 0.0;
    double lr = 0.0;
};

struct EvalRecord {
    int64_t step = 0;
    double comp_auc = 0.0;
    double fitb_acc = 0.0;
};

struct TrainLog {
    std::vector<StepMetrics> steps;
    std::vector<EvalRecord> evals;
};

// Decoded images for fast batch assembly; manifests reference files.
struct ImageCache {
    std::unordered_map<std::string, Image8> images;
    // regions with masks get them loaded in place on the manifest copy
};

// Person-grouped view over the pairable source pool.
struct SourcePool {
    struct PersonGroup {
        std::string person_id;
        std::vector<const RegionedImage*> images; // each with >= 2 regions
    };
    std::vector<PersonGroup> persons;
    const DatasetManifest* manifest = nullptr;
};

SourcePool build_source_pool(const DatasetManifest& manifest);

// lr0 * (1 - decay_factor)^floor(step / decay_every) under the default
// interpretation; lr0 * decay_factor^floor(...) under the literal one.
double lr_at(int64_t step, const TrainConfig& config);

// Samples persons_per_batch distinct persons, two (or patches_per_person)
// patches each from different regions, plus a uniform target batch.
// Batch content is a pure function of (config.seed, step).
TrainBatch build_batch(const SourcePool& source_pool, const DatasetManifest& target_manifest,
                       const ImageCache& source_cache, const ImageCache& target_cache,
                       const TrainConfig& config, const PatchConfig& patch_config, int64_t step);

ImageCache preload_images(const DatasetManifest& manifest);
// loads masks onto the manifest's regions so patch sampling can use them
void preload_masks(DatasetManifest& manifest);

struct TrainerWorkspace; // reusable per-item gradient buffers

// One alternation: phase D updates phi on frozen (theta, omega); phase G
// updates (theta, omega) on frozen phi, on the same batch. Throws
// TrainError with diagnostics if any loss goes non-finite.
StepMetrics train_step(ModelState& state, OptimizerState& opt, const TrainBatch& batch,
                       const TrainConfig& config, const LossConfig& loss_config,
                       TrainerWorkspace& ws);
StepMetrics train_step(ModelState& state, OptimizerState& opt, const TrainBatch& batch,
                       const TrainConfig& config, const LossConfig& loss_config);

struct TrainerWorkspace {
    std::vector<GenActs> gen_acts;        // source then target
    std::vector<GeneratorNet> gen_grads;  // per item
    std::vector<EmbeddingNet> emb_grads;
    std::vector<DiscriminatorNet> disc_grads;
    bool ready = false;
};

OptimizerState make_optimizer(const ModelState& state);

struct ValidationSet {
    const DatasetManifest* manifest = nullptr;
    std::vector<Outfit> outfits;
    std::vector<FitbQuestion> questions;
    int n_patches = 8;
    uint64_t seed = 0;
};

struct TrainResult {
    ModelState best_state;
    OptimizerState best_opt;
    TrainLog log;
    int64_t best_eval_step = -1;
    double best_comp_auc = 0.0;
    int64_t steps_run = 0;
};

struct TrainSession {
    ModelState state;           // starting point (fresh or resumed)
    OptimizerState opt;
    PatchConfig patch_config;
    std::optional<std::string> checkpoint_dir; // written at every evaluation + best
};

TrainResult train(TrainSession session, const DatasetManifest& source_manifest,
                  const DatasetManifest& target_manifest, const ValidationSet& valid,
                  const TrainConfig& config, const LossConfig& loss_config);

// Training log JSONL: one record per step and per evaluation.
void write_train_log(const TrainLog& log, const std::string& path);

} // namespace wildfit
