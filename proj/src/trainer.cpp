#include "wildfit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "wildfit/evalkit.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace wildfit {

void TrainConfig::validate() const {
    if (persons_per_batch < 1 || patches_per_person < 1 || batch_size_source < 1 ||
        batch_size_target < 1)
        throw TrainError("train config: batch structure fields must be positive");
    if (persons_per_batch * patches_per_person != batch_size_source)
        throw TrainError("train config: persons_per_batch * patches_per_person must equal "
                         "batch_size_source (" +
                         std::to_string(persons_per_batch) + " * " +
                         std::to_string(patches_per_person) +
                         " != " + std::to_string(batch_size_source) + ")");
    if (lr0 <= 0.0 || decay_every < 1) throw TrainError("train config: bad learning rate schedule");
    if (max_steps < 0) throw TrainError("train config: max_steps must be >= 0");
    if (eval_every < 1) throw TrainError("train config: eval_every must be >= 1");
}

double lr_at(int64_t step, const TrainConfig& config) {
    if (step < 0) throw TrainError("lr_at: negative step");
    double base = config.decay_interpretation == LrDecay::one_minus_factor
                      ? 1.0 - config.decay_factor
                      : config.decay_factor;
    return config.lr0 * std::pow(base, double(step / config.decay_every));
}

SourcePool build_source_pool(const DatasetManifest& manifest) {
    auto pairable = filter_pairable(manifest);
    SourcePool pool;
    pool.manifest = &manifest;
    std::unordered_map<std::string, size_t> index;
    for (const auto* img : pairable) {
        auto [it, fresh] = index.emplace(img->person_id, pool.persons.size());
        if (fresh) pool.persons.push_back({img->person_id, {}});
        pool.persons[it->second].images.push_back(img);
    }
    return pool;
}

ImageCache preload_images(const DatasetManifest& manifest) {
    ImageCache cache;
    if (manifest.domain == Domain::source) {
        for (const auto& img : manifest.source_entries)
            cache.images.emplace(img.image_id, load_image(manifest, img));
    } else {
        for (const auto& img : manifest.target_entries)
            cache.images.emplace(img.image_id, load_image(manifest, img));
    }
    return cache;
}

void preload_masks(DatasetManifest& manifest) {
    if (manifest.domain == Domain::source) {
        for (auto& img : manifest.source_entries)
            for (auto& region : img.regions)
                if (region.mask_path && !region.mask)
                    region.mask = load_region_mask(manifest, region);
    } else {
        for (auto& img : manifest.target_entries) {
            auto& region = img.item_region;
            if (region.mask_path && !region.mask)
                region.mask = load_region_mask(manifest, region);
        }
    }
}

TrainBatch build_batch(const SourcePool& source_pool, const DatasetManifest& target_manifest,
                       const ImageCache& source_cache, const ImageCache& target_cache,
                       const TrainConfig& config, const PatchConfig& patch_config, int64_t step) {
    if (source_pool.persons.empty()) throw TrainError("build_batch: empty source pool");
    if (target_manifest.target_entries.empty()) throw TrainError("build_batch: empty target pool");
    if (int(source_pool.persons.size()) < config.persons_per_batch)
        throw TrainError("build_batch: only " + std::to_string(source_pool.persons.size()) +
                         " distinct pairable persons, need " +
                         std::to_string(config.persons_per_batch));

    Rng rng(derive_seed(config.seed, "batch", uint64_t(step)));

    // distinct persons via partial Fisher-Yates over an index vector
    std::vector<size_t> person_idx(source_pool.persons.size());
    for (size_t i = 0; i < person_idx.size(); ++i) person_idx[i] = i;
    for (int k = 0; k < config.persons_per_batch; ++k) {
        size_t j = size_t(k) + rng.uniform_index(person_idx.size() - size_t(k));
        std::swap(person_idx[size_t(k)], person_idx[j]);
    }

    struct SlotPlan {
        const RegionedImage* image;
        int region_index;
        std::string person_id;
    };
    std::vector<SlotPlan> plans;
    TrainBatch batch;

    for (int k = 0; k < config.persons_per_batch; ++k) {
        const auto& person = source_pool.persons[person_idx[size_t(k)]];
        const RegionedImage* image = person.images[rng.uniform_index(person.images.size())];

        // shuffled region order; patches walk it round-robin so any two
        // consecutive draws land on different regions
        std::vector<int> regions(image->regions.size());
        for (size_t r = 0; r < regions.size(); ++r) regions[r] = int(r);
        for (size_t i = regions.size(); i > 1; --i)
            std::swap(regions[i - 1], regions[rng.uniform_index(i)]);

        int base = int(plans.size());
        for (int m = 0; m < config.patches_per_person; ++m)
            plans.push_back({image, regions[size_t(m) % regions.size()], person.person_id});

        for (int a = 0; a < config.patches_per_person; ++a) {
            for (int b = config.pair_both_directions ? 0 : a + 1; b < config.patches_per_person;
                 ++b) {
                if (a == b) continue;
                if (plans[size_t(base + a)].region_index == plans[size_t(base + b)].region_index)
                    continue;
                batch.pair_index.pairs.emplace_back(base + a, base + b);
            }
        }
    }

    batch.source_patches.resize(plans.size());
    batch.source_person.resize(plans.size());
    par::for_index(config.exec, int64_t(plans.size()), [&](int64_t i) {
        const auto& plan = plans[size_t(i)];
        uint64_t lane = derive_seed(config.seed, "patch", plan.image->image_id,
                                    uint64_t(plan.region_index),
                                    uint64_t(step) * uint64_t(config.batch_size_source) + uint64_t(i));
        Rng lane_rng(lane);
        const Image8& image = source_cache.images.at(plan.image->image_id);
        const ItemRegion& region = plan.image->regions[size_t(plan.region_index)];
        PatchSpec spec = sample_patch_spec(region, plan.image->image_id, plan.region_index,
                                           lane_rng, patch_config);
        batch.source_patches[size_t(i)] = extract_patch(image, spec, patch_config.out_resolution);
        batch.source_person[size_t(i)] = plan.person_id;
    });

    // uniform target batch
    struct TargetPlan {
        const CatalogImage* image;
    };
    std::vector<TargetPlan> tplans(size_t(config.batch_size_target));
    for (auto& tp : tplans)
        tp.image = &target_manifest.target_entries[rng.uniform_index(
            target_manifest.target_entries.size())];

    batch.target_patches.resize(tplans.size());
    par::for_index(config.exec, int64_t(tplans.size()), [&](int64_t i) {
        const auto& plan = tplans[size_t(i)];
        uint64_t lane = derive_seed(config.seed, "tpatch", plan.image->image_id, 0,
                                    uint64_t(step) * uint64_t(config.batch_size_target) + uint64_t(i));
        Rng lane_rng(lane);
        const Image8& image = target_cache.images.at(plan.image->image_id);
        ItemRegion region = plan.image->item_region;
        if (!plan.image->region_explicit || region.box.w < 1 || region.box.h < 1)
            region.box = {0, 0, image.width, image.height};
        PatchSpec spec = sample_patch_spec(region, plan.image->image_id, 0, lane_rng, patch_config);
        batch.target_patches[size_t(i)] = extract_patch(image, spec, patch_config.out_resolution);
    });

    return batch;
}

OptimizerState make_optimizer(const ModelState& state) {
    OptimizerState opt;
    opt.v_gen.assign(param_count(state.gen), 0.0);
    opt.v_emb.assign(param_count(state.emb), 0.0);
    opt.v_disc.assign(param_count(state.disc), 0.0);
    return opt;
}

namespace {

template <typename Net>
void reduce_grads(std::vector<Net>& per_item, int n, Net& total) {
    // fixed item order; independent of scheduling
    std::vector<std::vector<double>*> slots;
    for_each_array(total, "", [&](const std::string&, std::vector<double>& a) {
        std::fill(a.begin(), a.end(), 0.0);
        slots.push_back(&a);
    });
    for (int i = 0; i < n; ++i) {
        size_t s = 0;
        for_each_array(per_item[size_t(i)], "", [&](const std::string&, std::vector<double>& a) {
            auto& dst = *slots[s++];
            for (size_t k = 0; k < a.size(); ++k) dst[k] += a[k];
        });
    }
}

template <typename Net>
void sgd_momentum_update(Net& net, Net& grad, std::vector<double>& velocity, double lr,
                         double momentum) {
    std::vector<std::vector<double>*> params, grads;
    for_each_array(net, "", [&](const std::string&, std::vector<double>& a) { params.push_back(&a); });
    for_each_array(grad, "", [&](const std::string&, std::vector<double>& a) { grads.push_back(&a); });
    size_t off = 0;
    for (size_t t = 0; t < params.size(); ++t) {
        auto& p = *params[t];
        auto& g = *grads[t];
        for (size_t k = 0; k < p.size(); ++k) {
            double v = momentum * velocity[off + k] + g[k];
            velocity[off + k] = v;
            p[k] -= lr * v;
        }
        off += p.size();
    }
}

template <typename Net>
double grad_norm(Net& grad) {
    double s = 0.0;
    for_each_array(grad, "", [&](const std::string&, std::vector<double>& a) {
        for (double v : a) s += v * v;
    });
    return std::sqrt(s);
}

void prepare_workspace(const ModelState& state, const TrainBatch& batch, TrainerWorkspace& ws) {
    size_t total = batch.source_patches.size() + batch.target_patches.size();
    if (ws.ready && ws.gen_acts.size() == total) return;
    ws.gen_acts.resize(total);
    for (auto& a : ws.gen_acts) resize_acts(state, a);
    ws.gen_grads.assign(total, zeros_like(state.gen));
    ws.emb_grads.assign(batch.source_patches.size(), zeros_like(state.emb));
    ws.disc_grads.assign(total, zeros_like(state.disc));
    ws.ready = true;
}

} // namespace

StepMetrics train_step(ModelState& state, OptimizerState& opt, const TrainBatch& batch,
                       const TrainConfig& config, const LossConfig& loss_config,
                       TrainerWorkspace& ws) {
    const int n_src = int(batch.source_patches.size());
    const int n_tgt = int(batch.target_patches.size());
    if (n_src < 2) throw TrainError("train_step: need >= 2 source patches");
    const int fd = state.gen.feature_dim;
    const double lr = lr_at(state.step, config);
    const ExecMode mode = config.exec;

    prepare_workspace(state, batch, ws);

    // backbone forward for the whole batch; theta is frozen through phase
    // D, so these activations serve both phases
    par::for_index(mode, n_src + n_tgt, [&](int64_t i) {
        GenActs& acts = ws.gen_acts[size_t(i)];
        const auto& patch = i < n_src ? batch.source_patches[size_t(i)]
                                      : batch.target_patches[size_t(i - n_src)];
        std::copy(patch.pixels.begin(), patch.pixels.end(), acts.input.begin());
        gen_forward(state.gen, acts);
    });

    StepMetrics metrics;
    metrics.step = state.step;
    metrics.lr = lr;

    // ---- phase D: update phi on frozen (theta, omega) ----
    std::vector<DiscActs> disc_acts(size_t(n_src + n_tgt));
    for (auto& a : disc_acts) resize_acts(state, a);
    par::for_index(mode, n_src + n_tgt, [&](int64_t i) {
        disc_forward(state.disc, ws.gen_acts[size_t(i)].feature.data(), disc_acts[size_t(i)]);
    });

    std::vector<double> d_src(size_t(n_src)), d_tgt(size_t(n_tgt));
    for (int i = 0; i < n_src; ++i) d_src[size_t(i)] = disc_acts[size_t(i)].prob;
    for (int j = 0; j < n_tgt; ++j) d_tgt[size_t(j)] = disc_acts[size_t(n_src + j)].prob;
    metrics.d_src_mean = std::accumulate(d_src.begin(), d_src.end(), 0.0) / std::max(n_src, 1);
    metrics.d_tgt_mean = std::accumulate(d_tgt.begin(), d_tgt.end(), 0.0) / std::max(n_tgt, 1);

    metrics.loss_d = discriminator_loss(d_tgt, d_src);

    DiscriminatorNet disc_total = zeros_like(state.disc);
    if (config.update_discriminator) {
        std::vector<double> gd_tgt, gd_src;
        discriminator_prob_grads(d_tgt, d_src, gd_tgt, gd_src);
        par::for_index(mode, n_src + n_tgt, [&](int64_t i) {
            auto& grad = ws.disc_grads[size_t(i)];
            for_each_array(grad, "", [](const std::string&, std::vector<double>& a) {
                std::fill(a.begin(), a.end(), 0.0);
            });
            double dprob = i < n_src ? gd_src[size_t(i)] : gd_tgt[size_t(i - n_src)];
            disc_backward(state.disc, ws.gen_acts[size_t(i)].feature.data(), disc_acts[size_t(i)],
                          dprob, &grad, nullptr);
        });
        reduce_grads(ws.disc_grads, n_src + n_tgt, disc_total);
        sgd_momentum_update(state.disc, disc_total, opt.v_disc, lr, config.momentum);
    }

    // ---- phase G: update (theta, omega) on frozen phi ----
    std::vector<EmbActs> emb_acts(size_t(n_src));
    for (auto& a : emb_acts) resize_acts(state, a);
    par::for_index(mode, n_src, [&](int64_t i) {
        emb_forward(state.emb, ws.gen_acts[size_t(i)].feature.data(), emb_acts[size_t(i)]);
    });
    const int ed = state.config.embed_out;
    std::vector<double> embeddings(size_t(n_src) * ed);
    for (int i = 0; i < n_src; ++i)
        std::copy(emb_acts[size_t(i)].out.begin(), emb_acts[size_t(i)].out.end(),
                  embeddings.begin() + size_t(i) * ed);

    std::vector<double> demb;
    metrics.l_c = compatibility_loss_grad(embeddings, n_src, ed, batch.pair_index,
                                          loss_config.tau, demb);

    // adversarial terms see the post-update discriminator
    const bool needs_target = loss_config.eq2_variant == Eq2Variant::second_term_on_target &&
                              loss_config.lambda2 != 0.0;
    std::vector<DiscActs> disc_acts2(size_t(n_src + n_tgt));
    for (auto& a : disc_acts2) resize_acts(state, a);
    par::for_index(mode, n_src + (needs_target ? n_tgt : 0), [&](int64_t i) {
        disc_forward(state.disc, ws.gen_acts[size_t(i)].feature.data(), disc_acts2[size_t(i)]);
    });
    std::vector<double> d_src2(size_t(n_src)), d_tgt2;
    for (int i = 0; i < n_src; ++i) d_src2[size_t(i)] = disc_acts2[size_t(i)].prob;
    if (needs_target) {
        d_tgt2.resize(size_t(n_tgt));
        for (int j = 0; j < n_tgt; ++j) d_tgt2[size_t(j)] = disc_acts2[size_t(n_src + j)].prob;
    }

    metrics.loss_g = generator_loss(metrics.l_c, d_src2, d_tgt2, loss_config);

    std::vector<double> adv_dsrc, adv_dtgt;
    generator_adv_prob_grads(d_src2, d_tgt2, loss_config, adv_dsrc, adv_dtgt);

    // per-item feature gradients: embedding-head path plus adversarial path
    EmbeddingNet emb_total = zeros_like(state.emb);
    GeneratorNet gen_total = zeros_like(state.gen);
    par::for_index(mode, n_src + n_tgt, [&](int64_t i) {
        auto& ggrad = ws.gen_grads[size_t(i)];
        for_each_array(ggrad, "", [](const std::string&, std::vector<double>& a) {
            std::fill(a.begin(), a.end(), 0.0);
        });
        std::vector<double> dfeat(size_t(fd), 0.0);
        bool touched = false;
        if (i < n_src) {
            auto& egrad = ws.emb_grads[size_t(i)];
            for_each_array(egrad, "", [](const std::string&, std::vector<double>& a) {
                std::fill(a.begin(), a.end(), 0.0);
            });
            emb_backward(state.emb, ws.gen_acts[size_t(i)].feature.data(), emb_acts[size_t(i)],
                         demb.data() + size_t(i) * ed, egrad, dfeat.data());
            touched = true;
            if (adv_dsrc[size_t(i)] != 0.0) {
                std::vector<double> dfeat_adv(size_t(fd), 0.0);
                disc_backward(state.disc, ws.gen_acts[size_t(i)].feature.data(),
                              disc_acts2[size_t(i)], adv_dsrc[size_t(i)], nullptr,
                              dfeat_adv.data());
                for (int d = 0; d < fd; ++d) dfeat[size_t(d)] += dfeat_adv[size_t(d)];
            }
        } else if (needs_target && adv_dtgt[size_t(i - n_src)] != 0.0) {
            disc_backward(state.disc, ws.gen_acts[size_t(i)].feature.data(), disc_acts2[size_t(i)],
                          adv_dtgt[size_t(i - n_src)], nullptr, dfeat.data());
            touched = true;
        }
        if (touched) gen_backward(state.gen, ws.gen_acts[size_t(i)], dfeat.data(), ggrad);
    });

    reduce_grads(ws.emb_grads, n_src, emb_total);
    reduce_grads(ws.gen_grads, n_src + n_tgt, gen_total);

    if (!std::isfinite(metrics.l_c) || !std::isfinite(metrics.loss_g) ||
        !std::isfinite(metrics.loss_d)) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "non-finite loss at step %lld: l_c=%g L_G=%g L_D=%g |dtheta|=%g |domega|=%g "
                      "|dphi|=%g",
                      (long long)state.step, metrics.l_c, metrics.loss_g, metrics.loss_d,
                      grad_norm(gen_total), grad_norm(emb_total), grad_norm(disc_total));
        throw TrainError(buf);
    }

    sgd_momentum_update(state.gen, gen_total, opt.v_gen, lr, config.momentum);
    sgd_momentum_update(state.emb, emb_total, opt.v_emb, lr, config.momentum);

    state.step += 1;
    return metrics;
}

StepMetrics train_step(ModelState& state, OptimizerState& opt, const TrainBatch& batch,
                       const TrainConfig& config, const LossConfig& loss_config) {
    TrainerWorkspace ws;
    return train_step(state, opt, batch, config, loss_config, ws);
}

TrainResult train(TrainSession session, const DatasetManifest& source_manifest,
                  const DatasetManifest& target_manifest, const ValidationSet& valid,
                  const TrainConfig& config, const LossConfig& loss_config) {
    config.validate();

    DatasetManifest source = source_manifest; // local copy carries loaded masks
    preload_masks(source);
    SourcePool pool = build_source_pool(source);
    ImageCache source_cache = preload_images(source);
    ImageCache target_cache = preload_images(target_manifest);

    TrainResult result;
    result.best_state = session.state;
    result.best_opt = session.opt;

    ModelState& state = session.state;
    OptimizerState& opt = session.opt;
    TrainerWorkspace ws;

    const bool has_valid = valid.manifest != nullptr &&
                           (!valid.outfits.empty() || !valid.questions.empty());
    int evals_since_best = 0;
    bool stopped_early = false;

    auto checkpoint_path = [&](const std::string& name) {
        return (fs::path(*session.checkpoint_dir) / name).string();
    };
    auto write_ckpt = [&](const std::string& name) {
        if (!session.checkpoint_dir) return;
        Checkpoint ckpt;
        ckpt.state = state;
        ckpt.opt = opt;
        ckpt.has_optimizer = true;
        save_checkpoint(checkpoint_path(name), ckpt);
    };

    while (state.step < config.max_steps && !stopped_early) {
        TrainBatch batch = build_batch(pool, target_manifest, source_cache, target_cache, config,
                                       session.patch_config, state.step);
        StepMetrics metrics = train_step(state, opt, batch, config, loss_config, ws);
        result.log.steps.push_back(metrics);
        result.steps_run += 1;

        if (has_valid && state.step % config.eval_every == 0) {
            EvalMetrics em = evaluate(state, *valid.manifest, valid.outfits, valid.questions,
                                      valid.n_patches, valid.seed, session.patch_config,
                                      config.exec);
            EvalRecord record{state.step, em.comp_auc, em.fitb_acc};
            result.log.evals.push_back(record);

            char name[64];
            std::snprintf(name, sizeof(name), "ckpt_%08lld.bin", (long long)state.step);
            write_ckpt(name);

            if (record.comp_auc > result.best_comp_auc || result.best_eval_step < 0) {
                result.best_comp_auc = record.comp_auc;
                result.best_eval_step = state.step;
                result.best_state = state;
                result.best_opt = opt;
                evals_since_best = 0;
                write_ckpt("best.bin");
            } else {
                evals_since_best += 1;
                if (evals_since_best >= config.early_stop_patience) stopped_early = true;
            }
        }
    }

    if (!has_valid || result.best_eval_step < 0) {
        // no validation signal: the final state is the best we know
        result.best_state = state;
        result.best_opt = opt;
        result.best_eval_step = state.step;
        if (session.checkpoint_dir) write_ckpt("best.bin");
    }
    return result;
}

void write_train_log(const TrainLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw TrainError("cannot write training log: " + path);
    size_t next_eval = 0;
    auto emit_eval = [&](const EvalRecord& e) {
        ordered_json j;
        j["step"] = e.step;
        j["comp_auc"] = e.comp_auc;
        j["fitb_acc"] = e.fitb_acc;
        out << j.dump() << "\n";
    };
    for (const auto& s : log.steps) {
        ordered_json j;
        j["step"] = s.step;
        j["l_c"] = s.l_c;
        j["L_G"] = s.loss_g;
        j["L_D"] = s.loss_d;
        j["d_src_mean"] = s.d_src_mean;
        j["d_tgt_mean"] = s.d_tgt_mean;
        j["lr"] = s.lr;
        out << j.dump() << "\n";
        // evaluations interleave right after the step that triggered them
        while (next_eval < log.evals.size() && log.evals[next_eval].step <= s.step + 1)
            emit_eval(log.evals[next_eval++]);
    }
    while (next_eval < log.evals.size()) emit_eval(log.evals[next_eval++]);
}

} // namespace wildfit
