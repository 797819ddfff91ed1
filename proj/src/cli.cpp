#include "wildfit/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "wildfit/evalkit.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace wildfit::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string Paths::resolve(const std::string& explicit_path, const std::string& fallback) const {
    if (!explicit_path.empty()) return explicit_path;
    if (!data_dir.empty()) return (fs::path(data_dir) / fallback).string();
    throw ConfigError("config: neither an explicit path nor paths.data_dir given for " + fallback);
}

void RunConfig::validate() const {
    model.validate();
    train.validate();
    synth.validate();
    if (loss.tau <= 0.0) throw ConfigError("config: loss.tau must be positive");
    if (loss.lambda1 < 0.0 || loss.lambda2 < 0.0)
        throw ConfigError("config: loss lambdas must be >= 0");
    if (patch.r_min <= 0.0 || patch.r_max < patch.r_min)
        throw ConfigError("config: bad patch r range");
    if (patch.out_resolution != model.input_resolution)
        throw ConfigError("config: patch.out_resolution must equal model.input_resolution");
    if (eval_n_patches < 1 || valid_n_patches < 1)
        throw ConfigError("config: n_patches values must be >= 1");
}

namespace {

template <typename T>
void maybe(const ordered_json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

Backbone backbone_from(const std::string& s) {
    if (s == "tiny_cnn") return Backbone::tiny_cnn;
    if (s == "pluggable_large") return Backbone::pluggable_large;
    throw ConfigError("config: unknown backbone '" + s + "'");
}

Eq2Variant eq2_from(const std::string& s) {
    if (s == "as_written") return Eq2Variant::as_written;
    if (s == "second_term_on_target") return Eq2Variant::second_term_on_target;
    throw ConfigError("config: unknown eq2_variant '" + s + "'");
}

LrDecay lr_decay_from(const std::string& s) {
    if (s == "one_minus_factor") return LrDecay::one_minus_factor;
    if (s == "multiply_by_factor") return LrDecay::multiply_by_factor;
    throw ConfigError("config: unknown lr_decay '" + s + "'");
}

ExecMode exec_from(const std::string& s) {
    if (s == "serial") return ExecMode::serial;
    if (s == "openmp") return ExecMode::openmp;
    throw ConfigError("config: unknown exec mode '" + s + "'");
}

} // namespace

RunConfig run_config_from_json_text(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }

    RunConfig c;
    maybe(doc, "seed", c.seed);
    maybe(doc, "out_dir", c.out_dir);
    maybe(doc, "eval_n_patches", c.eval_n_patches);
    maybe(doc, "valid_n_patches", c.valid_n_patches);

    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        std::string backbone = "tiny_cnn";
        maybe(m, "backbone", backbone);
        c.model.backbone = backbone_from(backbone);
        if (c.model.backbone == Backbone::pluggable_large) c.model.feature_dim = 128;
        maybe(m, "feature_dim", c.model.feature_dim);
        maybe(m, "embed_hidden", c.model.embed_hidden);
        maybe(m, "embed_out", c.model.embed_out);
        maybe(m, "disc_hidden", c.model.disc_hidden);
        maybe(m, "input_resolution", c.model.input_resolution);
    }
    if (doc.contains("patch")) {
        const auto& p = doc.at("patch");
        maybe(p, "r_min", c.patch.r_min);
        maybe(p, "r_max", c.patch.r_max);
        maybe(p, "out_resolution", c.patch.out_resolution);
        maybe(p, "mask_min_coverage", c.patch.mask_min_coverage);
        maybe(p, "mask_max_tries", c.patch.mask_max_tries);
    } else {
        c.patch.out_resolution = c.model.input_resolution;
    }
    if (doc.contains("loss")) {
        const auto& l = doc.at("loss");
        maybe(l, "tau", c.loss.tau);
        maybe(l, "lambda1", c.loss.lambda1);
        maybe(l, "lambda2", c.loss.lambda2);
        std::string variant = "as_written";
        maybe(l, "eq2_variant", variant);
        c.loss.eq2_variant = eq2_from(variant);
    }
    if (doc.contains("train")) {
        const auto& t = doc.at("train");
        maybe(t, "batch_size_source", c.train.batch_size_source);
        maybe(t, "batch_size_target", c.train.batch_size_target);
        maybe(t, "persons_per_batch", c.train.persons_per_batch);
        maybe(t, "patches_per_person", c.train.patches_per_person);
        maybe(t, "lr0", c.train.lr0);
        maybe(t, "decay_factor", c.train.decay_factor);
        maybe(t, "decay_every", c.train.decay_every);
        std::string decay = "one_minus_factor";
        maybe(t, "lr_decay", decay);
        c.train.decay_interpretation = lr_decay_from(decay);
        maybe(t, "momentum", c.train.momentum);
        maybe(t, "max_steps", c.train.max_steps);
        maybe(t, "early_stop_patience", c.train.early_stop_patience);
        maybe(t, "eval_every", c.train.eval_every);
        maybe(t, "pair_both_directions", c.train.pair_both_directions);
        maybe(t, "update_discriminator", c.train.update_discriminator);
        std::string exec = "openmp";
        maybe(t, "exec", exec);
        c.train.exec = exec_from(exec);
    }
    if (doc.contains("synth")) {
        const auto& s = doc.at("synth");
        maybe(s, "n_styles", c.synth.n_styles);
        maybe(s, "persons_per_style", c.synth.persons_per_style);
        maybe(s, "valid_persons_per_style", c.synth.valid_persons_per_style);
        maybe(s, "test_persons_per_style", c.synth.test_persons_per_style);
        maybe(s, "items_per_person", c.synth.items_per_person);
        maybe(s, "image_size", c.synth.image_size);
        maybe(s, "target_image_size", c.synth.target_image_size);
        maybe(s, "targets_per_style", c.synth.targets_per_style);
        maybe(s, "person_color_noise", c.synth.person_color_noise);
        maybe(s, "item_color_noise", c.synth.item_color_noise);
        maybe(s, "stripe_amplitude", c.synth.stripe_amplitude);
        maybe(s, "target_brightness_shift", c.synth.target_brightness_shift);
        maybe(s, "comp_outfits_per_class_valid", c.synth.comp_outfits_per_class_valid);
        maybe(s, "comp_outfits_per_class_test", c.synth.comp_outfits_per_class_test);
        maybe(s, "outfit_items", c.synth.outfit_items);
    }
    if (doc.contains("paths")) {
        const auto& p = doc.at("paths");
        maybe(p, "data_dir", c.paths.data_dir);
        maybe(p, "source_manifest", c.paths.source_manifest);
        maybe(p, "target_manifest", c.paths.target_manifest);
        maybe(p, "valid_manifest", c.paths.valid_manifest);
        maybe(p, "valid_outfits", c.paths.valid_outfits);
        maybe(p, "valid_fitb", c.paths.valid_fitb);
        maybe(p, "eval_manifest", c.paths.eval_manifest);
        maybe(p, "eval_outfits", c.paths.eval_outfits);
        maybe(p, "eval_fitb", c.paths.eval_fitb);
        maybe(p, "style_labels", c.paths.style_labels);
        maybe(p, "embed_manifest", c.paths.embed_manifest);
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return run_config_from_json_text(text);
}

std::string run_config_to_json(const RunConfig& c) {
    ordered_json doc;
    doc["seed"] = c.seed;
    doc["out_dir"] = c.out_dir;
    doc["eval_n_patches"] = c.eval_n_patches;
    doc["valid_n_patches"] = c.valid_n_patches;
    doc["model"] = {
        {"backbone", c.model.backbone == Backbone::tiny_cnn ? "tiny_cnn" : "pluggable_large"},
        {"feature_dim", c.model.feature_dim},
        {"embed_hidden", c.model.embed_hidden},
        {"embed_out", c.model.embed_out},
        {"disc_hidden", c.model.disc_hidden},
        {"input_resolution", c.model.input_resolution},
    };
    doc["patch"] = {
        {"r_min", c.patch.r_min},
        {"r_max", c.patch.r_max},
        {"out_resolution", c.patch.out_resolution},
        {"mask_min_coverage", c.patch.mask_min_coverage},
        {"mask_max_tries", c.patch.mask_max_tries},
    };
    doc["loss"] = {
        {"tau", c.loss.tau},
        {"lambda1", c.loss.lambda1},
        {"lambda2", c.loss.lambda2},
        {"eq2_variant", c.loss.eq2_variant == Eq2Variant::as_written ? "as_written"
                                                                     : "second_term_on_target"},
    };
    doc["train"] = {
        {"batch_size_source", c.train.batch_size_source},
        {"batch_size_target", c.train.batch_size_target},
        {"persons_per_batch", c.train.persons_per_batch},
        {"patches_per_person", c.train.patches_per_person},
        {"lr0", c.train.lr0},
        {"decay_factor", c.train.decay_factor},
        {"decay_every", c.train.decay_every},
        {"lr_decay", c.train.decay_interpretation == LrDecay::one_minus_factor
                         ? "one_minus_factor"
                         : "multiply_by_factor"},
        {"momentum", c.train.momentum},
        {"max_steps", c.train.max_steps},
        {"early_stop_patience", c.train.early_stop_patience},
        {"eval_every", c.train.eval_every},
        {"pair_both_directions", c.train.pair_both_directions},
        {"update_discriminator", c.train.update_discriminator},
        {"exec", c.train.exec == ExecMode::openmp ? "openmp" : "serial"},
    };
    doc["synth"] = {
        {"n_styles", c.synth.n_styles},
        {"persons_per_style", c.synth.persons_per_style},
        {"valid_persons_per_style", c.synth.valid_persons_per_style},
        {"test_persons_per_style", c.synth.test_persons_per_style},
        {"items_per_person", c.synth.items_per_person},
        {"image_size", c.synth.image_size},
        {"target_image_size", c.synth.target_image_size},
        {"targets_per_style", c.synth.targets_per_style},
        {"person_color_noise", c.synth.person_color_noise},
        {"item_color_noise", c.synth.item_color_noise},
        {"stripe_amplitude", c.synth.stripe_amplitude},
        {"target_brightness_shift", c.synth.target_brightness_shift},
        {"comp_outfits_per_class_valid", c.synth.comp_outfits_per_class_valid},
        {"comp_outfits_per_class_test", c.synth.comp_outfits_per_class_test},
        {"outfit_items", c.synth.outfit_items},
    };
    doc["paths"] = {
        {"data_dir", c.paths.data_dir},
        {"source_manifest", c.paths.source_manifest},
        {"target_manifest", c.paths.target_manifest},
        {"valid_manifest", c.paths.valid_manifest},
        {"valid_outfits", c.paths.valid_outfits},
        {"valid_fitb", c.paths.valid_fitb},
        {"eval_manifest", c.paths.eval_manifest},
        {"eval_outfits", c.paths.eval_outfits},
        {"eval_fitb", c.paths.eval_fitb},
        {"style_labels", c.paths.style_labels},
        {"embed_manifest", c.paths.embed_manifest},
    };
    return doc.dump(2) + "\n";
}

void write_config_snapshot(const RunConfig& config, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "config_snapshot.json");
    if (!out) throw ConfigError("cannot write config snapshot under " + out_dir);
    out << run_config_to_json(config);
}

RunConfig make_effective_config(const CommonFlags& flags) {
    RunConfig config = flags.config_path ? load_run_config(*flags.config_path) : RunConfig{};
    // flags win over the config file
    if (flags.seed) {
        config.seed = *flags.seed;
        config.train.seed = *flags.seed;
    } else {
        config.train.seed = config.seed;
    }
    if (flags.out_dir) config.out_dir = *flags.out_dir;
    if (flags.n_patches) config.eval_n_patches = *flags.n_patches;
    return config;
}

std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for fingerprint: " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= uint8_t(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", (unsigned long long)h);
    return hex;
}

int cmd_synth(const RunConfig& config) {
    try {
        config.synth.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        fs::create_directories(config.out_dir);
        SynthDataset ds = generate_synthetic_dataset(config.synth, config.seed, config.out_dir);

        auto p = [&](const char* name) { return (fs::path(config.out_dir) / name).string(); };
        save_manifest(ds.source_train, p("source_train.json"));
        save_manifest(ds.source_valid, p("source_valid.json"));
        save_manifest(ds.source_test, p("source_test.json"));
        save_manifest(ds.target_train, p("target_train.json"));
        save_manifest(ds.target_valid, p("target_valid.json"));
        save_manifest(ds.target_test, p("target_test.json"));
        save_style_labels(ds.labels, p("style_labels.json"));

        save_outfits(make_comp_outfits(ds.source_valid, ds.labels,
                                       config.synth.comp_outfits_per_class_valid,
                                       config.synth.outfit_items, derive_seed(config.seed, "ov")),
                     p("outfits_valid.json"));
        save_outfits(make_comp_outfits(ds.source_test, ds.labels,
                                       config.synth.comp_outfits_per_class_test,
                                       config.synth.outfit_items, derive_seed(config.seed, "ot")),
                     p("outfits_test.json"));
        save_fitb_questions(make_fitb_questions(ds.source_valid, ds.labels,
                                                derive_seed(config.seed, "qv")),
                            p("fitb_valid.json"));
        save_fitb_questions(make_fitb_questions(ds.source_test, ds.labels,
                                                derive_seed(config.seed, "qt")),
                            p("fitb_test.json"));

        write_config_snapshot(config, config.out_dir);
        std::cout << "synth: " << ds.source_train.size() << " train persons, "
                  << ds.source_valid.size() << " valid, " << ds.source_test.size()
                  << " test; target train " << ds.target_train.size() << "\n";
        return kExitOk;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_train(const RunConfig& config, const std::optional<std::string>& resume) {
    try {
        config.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        DatasetManifest source =
            load_manifest(config.paths.resolve(config.paths.source_manifest, "source_train.json"));
        DatasetManifest target =
            load_manifest(config.paths.resolve(config.paths.target_manifest, "target_train.json"));
        DatasetManifest valid_manifest =
            load_manifest(config.paths.resolve(config.paths.valid_manifest, "source_valid.json"));

        ValidationSet valid;
        valid.manifest = &valid_manifest;
        valid.outfits =
            load_outfits(config.paths.resolve(config.paths.valid_outfits, "outfits_valid.json"));
        valid.questions =
            load_fitb_questions(config.paths.resolve(config.paths.valid_fitb, "fitb_valid.json"));
        valid.n_patches = config.valid_n_patches;
        valid.seed = derive_seed(config.seed, "valid_eval");

        TrainSession session;
        if (resume) {
            Checkpoint ckpt = load_checkpoint(*resume);
            session.state = std::move(ckpt.state);
            session.opt = ckpt.has_optimizer ? std::move(ckpt.opt) : make_optimizer(session.state);
        } else {
            session.state = init_model(config.model, derive_seed(config.seed, "model"));
            session.opt = make_optimizer(session.state);
        }
        session.patch_config = config.patch;
        fs::create_directories(fs::path(config.out_dir) / "checkpoints");
        session.checkpoint_dir = (fs::path(config.out_dir) / "checkpoints").string();

        TrainConfig train_config = config.train;
        train_config.seed = config.seed;

        TrainResult result = train(std::move(session), source, target, valid, train_config,
                                   config.loss);

        write_train_log(result.log, (fs::path(config.out_dir) / "train_log.jsonl").string());
        write_config_snapshot(config, config.out_dir);
        std::cout << "train: ran " << result.steps_run << " steps; best comp_auc "
                  << result.best_comp_auc << " at step " << result.best_eval_step << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_eval(const RunConfig& config, const std::string& checkpoint_path) {
    try {
        if (checkpoint_path.empty()) throw ConfigError("eval: --checkpoint is required");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        Checkpoint ckpt = load_checkpoint(checkpoint_path);
        DatasetManifest manifest =
            load_manifest(config.paths.resolve(config.paths.eval_manifest, "source_test.json"));
        auto outfits =
            load_outfits(config.paths.resolve(config.paths.eval_outfits, "outfits_test.json"));
        auto questions =
            load_fitb_questions(config.paths.resolve(config.paths.eval_fitb, "fitb_test.json"));

        EvalMetrics metrics =
            evaluate(ckpt.state, manifest, outfits, questions, config.eval_n_patches,
                     derive_seed(config.seed, "eval"), config.patch, config.train.exec);

        fs::create_directories(config.out_dir);
        ordered_json out;
        out["comp_auc"] = metrics.comp_auc;
        out["fitb_acc"] = metrics.fitb_acc;
        out["n_patches"] = config.eval_n_patches;
        out["seed"] = config.seed;
        out["checkpoint_id"] =
            file_fingerprint(checkpoint_path) + ":" + std::to_string(ckpt.state.step);
        std::ofstream f(fs::path(config.out_dir) / "metrics.json");
        f << out.dump(2) << "\n";
        std::cout << out.dump(2) << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ModelError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_embed(const RunConfig& config, const std::string& checkpoint_path) {
    try {
        if (checkpoint_path.empty()) throw ConfigError("embed: --checkpoint is required");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        Checkpoint ckpt = load_checkpoint(checkpoint_path);
        DatasetManifest manifest =
            load_manifest(config.paths.resolve(config.paths.embed_manifest, "source_test.json"));

        ExportOptions options;
        options.n_patches = config.eval_n_patches;
        options.seed = derive_seed(config.seed, "embed_cmd");
        std::string labels_path;
        try {
            labels_path = config.paths.resolve(config.paths.style_labels, "style_labels.json");
        } catch (const std::exception&) {
            labels_path.clear();
        }
        if (!labels_path.empty() && fs::exists(labels_path)) {
            StyleLabels labels = load_style_labels(labels_path);
            for (const auto& img : manifest.source_entries) {
                auto it = labels.person_style.find(img.person_id);
                if (it == labels.person_style.end()) continue;
                for (size_t r = 0; r < img.regions.size(); ++r)
                    options.item_labels[ItemRef{img.image_id, int(r)}.str()] = it->second;
            }
        }

        fs::create_directories(config.out_dir);
        export_embeddings(ckpt.state, manifest, all_items(manifest), options, config.patch,
                          (fs::path(config.out_dir) / "embeddings.jsonl").string(),
                          (fs::path(config.out_dir) / "embeddings.svg").string(),
                          config.train.exec);
        std::cout << "embed: wrote " << all_items(manifest).size() << " items\n";
        return kExitOk;
    } catch (const ModelError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace wildfit::cli
