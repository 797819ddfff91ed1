#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wildfit/parallel.hpp"
#include "wildfit/rng.hpp"

namespace wildfit {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Backbone { tiny_cnn, pluggable_large };

struct ModelConfig {
    Backbone backbone = Backbone::tiny_cnn;
    int feature_dim = 64;  // backbone output width; must match the channel plan
    int embed_hidden = 64;
    int embed_out = 64;
    int disc_hidden = 64;
    int input_resolution = 32;

    void validate() const;
    std::array<int, 3> channels() const; // conv channel plan for the backbone
};

// 3x3 convolution, stride 2, pad 1, followed by a rectifier.
struct ConvLayer {
    int in_c = 0;
    int out_c = 0;
    std::vector<double> w; // [out_c][in_c][3][3]
    std::vector<double> b; // [out_c]
};

struct LinearLayer {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> w; // [out_dim][in_dim]
    std::vector<double> b; // [out_dim]
};

// Generator backbone g(.;theta): three stride-2 conv blocks and a global
// average pool. Output width equals the last block's channel count.
struct GeneratorNet {
    std::array<ConvLayer, 3> convs;
    int input_res = 0;
    int feature_dim = 0;
    std::array<int, 4> spatial; // resolutions: input, after conv1..conv3
};

// Embedding head f(.;omega): two affine layers, rectifier between.
struct EmbeddingNet {
    LinearLayer fc1, fc2;
};

// Discriminator D(.;phi): two affine layers, rectifier between, sigmoid out.
struct DiscriminatorNet {
    LinearLayer fc1, fc2; // fc2.out_dim == 1
};

struct ModelState {
    ModelConfig config;
    GeneratorNet gen;
    EmbeddingNet emb;
    DiscriminatorNet disc;
    int64_t step = 0;
};

// ---- forward workspaces (per item; reused across steps) ----

struct GenActs {
    std::vector<double> input;                 // [3][R][R]
    std::array<std::vector<double>, 3> conv;   // post-rectifier activations
    std::vector<double> feature;               // [feature_dim]
};

struct EmbActs {
    std::vector<double> hidden;
    std::vector<double> out;
};

struct DiscActs {
    std::vector<double> hidden;
    double prob = 0.0;
};

void resize_acts(const ModelState& state, GenActs& acts);
void resize_acts(const ModelState& state, EmbActs& acts);
void resize_acts(const ModelState& state, DiscActs& acts);

// ---- single-item kernels ----

void gen_forward(const GeneratorNet& net, GenActs& acts); // reads acts.input
// dfeature: d(loss)/d(feature); accumulates into grad
void gen_backward(const GeneratorNet& net, const GenActs& acts, const double* dfeature,
                  GeneratorNet& grad);

void emb_forward(const EmbeddingNet& net, const double* feature, EmbActs& acts);
// accumulates into grad; writes d(loss)/d(feature) into dfeature if non-null
void emb_backward(const EmbeddingNet& net, const double* feature, const EmbActs& acts,
                  const double* dout, EmbeddingNet& grad, double* dfeature);

void disc_forward(const DiscriminatorNet& net, const double* feature, DiscActs& acts);
// dprob: d(loss)/d(output probability); grad may be null (input-only backward)
void disc_backward(const DiscriminatorNet& net, const double* feature, const DiscActs& acts,
                   double dprob, DiscriminatorNet* grad, double* dfeature);

// ---- batch operations (parallel over items, deterministic) ----

// patches: B pointers to [3][R][R] inputs
std::vector<double> forward_generator(const ModelState& state,
                                      const std::vector<const double*>& patches,
                                      ExecMode mode = ExecMode::openmp);
std::vector<double> forward_embedding(const ModelState& state, const std::vector<double>& features,
                                      int batch, ExecMode mode = ExecMode::openmp);
std::vector<double> forward_discriminator(const ModelState& state,
                                          const std::vector<double>& features, int batch,
                                          ExecMode mode = ExecMode::openmp);

// ---- construction / parameters ----

ModelState init_model(const ModelConfig& config, uint64_t seed);

GeneratorNet zeros_like(const GeneratorNet& net);
EmbeddingNet zeros_like(const EmbeddingNet& net);
DiscriminatorNet zeros_like(const DiscriminatorNet& net);

// Named-array visitors; names are stable and used by the checkpoint codec.
using ArrayVisitor = std::function<void(const std::string&, std::vector<double>&)>;
void for_each_array(GeneratorNet& net, const std::string& prefix, const ArrayVisitor& fn);
void for_each_array(EmbeddingNet& net, const std::string& prefix, const ArrayVisitor& fn);
void for_each_array(DiscriminatorNet& net, const std::string& prefix, const ArrayVisitor& fn);
void for_each_array(ModelState& state, const ArrayVisitor& fn);

size_t param_count(const GeneratorNet& net);
size_t param_count(const EmbeddingNet& net);
size_t param_count(const DiscriminatorNet& net);
size_t param_count(const ModelState& state);

template <typename Net>
std::vector<double> flatten(Net& net) {
    std::vector<double> flat;
    for_each_array(net, "", [&](const std::string&, std::vector<double>& a) {
        flat.insert(flat.end(), a.begin(), a.end());
    });
    return flat;
}

template <typename Net>
void unflatten(Net& net, const std::vector<double>& flat) {
    size_t off = 0;
    for_each_array(net, "", [&](const std::string&, std::vector<double>& a) {
        std::copy(flat.begin() + off, flat.begin() + off + a.size(), a.begin());
        off += a.size();
    });
    if (off != flat.size()) throw ModelError("unflatten: size mismatch");
}

// ---- checkpoint container ----

struct OptimizerState {
    std::vector<double> v_gen, v_emb, v_disc; // momentum buffers, flat layout
};

struct Checkpoint {
    ModelState state;
    OptimizerState opt;
    std::array<uint64_t, 4> rng_state{};
    bool has_optimizer = false;
};

inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path); // rejects version mismatch

} // namespace wildfit
