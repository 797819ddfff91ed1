#pragma once

#include <optional>
#include <string>

#include "wildfit/losses.hpp"
#include "wildfit/netcore.hpp"
#include "wildfit/patching.hpp"
#include "wildfit/synth.hpp"
#include "wildfit/trainer.hpp"

namespace wildfit::cli {

// exit codes shared by every subcommand
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

struct Paths {
    std::string data_dir; // default location for the synth layout below
    std::string source_manifest;
    std::string target_manifest;
    std::string valid_manifest;
    std::string valid_outfits;
    std::string valid_fitb;
    std::string eval_manifest;
    std::string eval_outfits;
    std::string eval_fitb;
    std::string style_labels;
    std::string embed_manifest;

    // resolves an explicit key or falls back to data_dir/<fallback>
    std::string resolve(const std::string& explicit_path, const std::string& fallback) const;
};

struct RunConfig {
    uint64_t seed = 1;
    std::string out_dir = "out";
    ModelConfig model;
    PatchConfig patch;
    LossConfig loss;
    TrainConfig train;
    SynthConfig synth;
    int eval_n_patches = 20;
    int valid_n_patches = 8;
    Paths paths;

    void validate() const; // cross-field constraints
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json_text(const std::string& text);
std::string run_config_to_json(const RunConfig& config);
void write_config_snapshot(const RunConfig& config, const std::string& out_dir);

struct CommonFlags {
    std::optional<std::string> config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> resume;      // train
    std::optional<std::string> checkpoint;  // eval / embed
    std::optional<int> n_patches;           // eval / embed
};

RunConfig make_effective_config(const CommonFlags& flags);

int cmd_synth(const RunConfig& config);
int cmd_train(const RunConfig& config, const std::optional<std::string>& resume);
int cmd_eval(const RunConfig& config, const std::string& checkpoint_path);
int cmd_embed(const RunConfig& config, const std::string& checkpoint_path);

// content hash recorded in metrics for provenance
std::string file_fingerprint(const std::string& path);

} // namespace wildfit::cli
