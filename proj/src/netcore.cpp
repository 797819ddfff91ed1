#include "wildfit/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace wildfit {

void ModelConfig::validate() const {
    if (feature_dim < 1 || embed_hidden < 1 || embed_out < 1 || disc_hidden < 1)
        throw ModelError("model config: all dims must be >= 1");
    if (input_resolution < 4) throw ModelError("model config: input_resolution must be >= 4");
    if (feature_dim != channels()[2])
        throw ModelError("model config: feature_dim " + std::to_string(feature_dim) +
                         " does not match backbone output width " + std::to_string(channels()[2]));
}

std::array<int, 3> ModelConfig::channels() const {
    return backbone == Backbone::tiny_cnn ? std::array<int, 3>{16, 32, 64}
                                          : std::array<int, 3>{32, 64, 128};
}

namespace {

inline int conv_out_res(int in_res) { return (in_res - 1) / 2 + 1; } // k=3, s=2, p=1

void conv_forward(const ConvLayer& layer, const double* in, int in_res, double* out,
                  int out_res) {
    const int ksz = 3, stride = 2, pad = 1;
    for (int oc = 0; oc < layer.out_c; ++oc) {
        double* out_plane = out + size_t(oc) * out_res * out_res;
        for (int oy = 0; oy < out_res; ++oy) {
            for (int ox = 0; ox < out_res; ++ox) {
                double acc = layer.b[oc];
                for (int ic = 0; ic < layer.in_c; ++ic) {
                    const double* in_plane = in + size_t(ic) * in_res * in_res;
                    const double* w = layer.w.data() + (size_t(oc) * layer.in_c + ic) * ksz * ksz;
                    for (int ky = 0; ky < ksz; ++ky) {
                        int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= in_res) continue;
                        for (int kx = 0; kx < ksz; ++kx) {
                            int ix = ox * stride + kx - pad;
                            if (ix < 0 || ix >= in_res) continue;
                            acc += w[ky * ksz + kx] * in_plane[iy * in_res + ix];
                        }
                    }
                }
                out_plane[oy * out_res + ox] = acc > 0.0 ? acc : 0.0; // fused rectifier
            }
        }
    }
}

// dout is d(loss)/d(post-rectifier activation); the rectifier mask comes
// from the stored activations. Accumulates dW/db; writes din if non-null.
void conv_backward(const ConvLayer& layer, const double* in, int in_res, const double* act,
                   const double* dout, int out_res, ConvLayer& grad, double* din) {
    const int ksz = 3, stride = 2, pad = 1;
    if (din) std::memset(din, 0, sizeof(double) * size_t(layer.in_c) * in_res * in_res);
    for (int oc = 0; oc < layer.out_c; ++oc) {
        const double* act_plane = act + size_t(oc) * out_res * out_res;
        const double* dout_plane = dout + size_t(oc) * out_res * out_res;
        for (int oy = 0; oy < out_res; ++oy) {
            for (int ox = 0; ox < out_res; ++ox) {
                if (act_plane[oy * out_res + ox] <= 0.0) continue;
                double g = dout_plane[oy * out_res + ox];
                grad.b[oc] += g;
                for (int ic = 0; ic < layer.in_c; ++ic) {
                    const double* in_plane = in + size_t(ic) * in_res * in_res;
                    const size_t wbase = (size_t(oc) * layer.in_c + ic) * ksz * ksz;
                    double* din_plane = din ? din + size_t(ic) * in_res * in_res : nullptr;
                    for (int ky = 0; ky < ksz; ++ky) {
                        int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= in_res) continue;
                        for (int kx = 0; kx < ksz; ++kx) {
                            int ix = ox * stride + kx - pad;
                            if (ix < 0 || ix >= in_res) continue;
                            grad.w[wbase + ky * ksz + kx] += g * in_plane[iy * in_res + ix];
                            if (din_plane)
                                din_plane[iy * in_res + ix] += g * layer.w[wbase + ky * ksz + kx];
                        }
                    }
                }
            }
        }
    }
}

void linear_forward(const LinearLayer& layer, const double* in, double* out) {
    for (int o = 0; o < layer.out_dim; ++o) {
        double acc = layer.b[o];
        const double* w = layer.w.data() + size_t(o) * layer.in_dim;
        for (int i = 0; i < layer.in_dim; ++i) acc += w[i] * in[i];
        out[o] = acc;
    }
}

void linear_backward(const LinearLayer& layer, const double* in, const double* dout,
                     LinearLayer& grad, double* din) {
    if (din) std::memset(din, 0, sizeof(double) * size_t(layer.in_dim));
    for (int o = 0; o < layer.out_dim; ++o) {
        double g = dout[o];
        if (g == 0.0) continue;
        grad.b[o] += g;
        double* gw = grad.w.data() + size_t(o) * layer.in_dim;
        const double* w = layer.w.data() + size_t(o) * layer.in_dim;
        for (int i = 0; i < layer.in_dim; ++i) {
            gw[i] += g * in[i];
            if (din) din[i] += g * w[i];
        }
    }
}

} // namespace

void resize_acts(const ModelState& state, GenActs& acts) {
    const auto& gen = state.gen;
    acts.input.resize(size_t(3) * gen.input_res * gen.input_res);
    for (int i = 0; i < 3; ++i) {
        int res = gen.spatial[i + 1];
        acts.conv[i].resize(size_t(gen.convs[i].out_c) * res * res);
    }
    acts.feature.resize(size_t(gen.feature_dim));
}

void resize_acts(const ModelState& state, EmbActs& acts) {
    acts.hidden.resize(size_t(state.config.embed_hidden));
    acts.out.resize(size_t(state.config.embed_out));
}

void resize_acts(const ModelState& state, DiscActs& acts) {
    acts.hidden.resize(size_t(state.config.disc_hidden));
}

void gen_forward(const GeneratorNet& net, GenActs& acts) {
    const double* in = acts.input.data();
    for (int i = 0; i < 3; ++i) {
        conv_forward(net.convs[i], in, net.spatial[i], acts.conv[i].data(), net.spatial[i + 1]);
        in = acts.conv[i].data();
    }
    // global average pool over the last block
    int res = net.spatial[3];
    double inv = 1.0 / double(res * res);
    for (int c = 0; c < net.feature_dim; ++c) {
        const double* plane = acts.conv[2].data() + size_t(c) * res * res;
        double acc = 0.0;
        for (int i = 0; i < res * res; ++i) acc += plane[i];
        acts.feature[c] = acc * inv;
    }
}

void gen_backward(const GeneratorNet& net, const GenActs& acts, const double* dfeature,
                  GeneratorNet& grad) {
    int res3 = net.spatial[3];
    double inv = 1.0 / double(res3 * res3);
    std::vector<double> d3(acts.conv[2].size());
    for (int c = 0; c < net.feature_dim; ++c) {
        double g = dfeature[c] * inv;
        double* plane = d3.data() + size_t(c) * res3 * res3;
        for (int i = 0; i < res3 * res3; ++i) plane[i] = g;
    }
    std::vector<double> d2(acts.conv[1].size());
    conv_backward(net.convs[2], acts.conv[1].data(), net.spatial[2], acts.conv[2].data(),
                  d3.data(), net.spatial[3], grad.convs[2], d2.data());
    std::vector<double> d1(acts.conv[0].size());
    conv_backward(net.convs[1], acts.conv[0].data(), net.spatial[1], acts.conv[1].data(),
                  d2.data(), net.spatial[2], grad.convs[1], d1.data());
    conv_backward(net.convs[0], acts.input.data(), net.spatial[0], acts.conv[0].data(), d1.data(),
                  net.spatial[1], grad.convs[0], nullptr);
}

void emb_forward(const EmbeddingNet& net, const double* feature, EmbActs& acts) {
    linear_forward(net.fc1, feature, acts.hidden.data());
    for (auto& v : acts.hidden) v = v > 0.0 ? v : 0.0;
    linear_forward(net.fc2, acts.hidden.data(), acts.out.data());
}

void emb_backward(const EmbeddingNet& net, const double* feature, const EmbActs& acts,
                  const double* dout, EmbeddingNet& grad, double* dfeature) {
    std::vector<double> dhidden(acts.hidden.size());
    linear_backward(net.fc2, acts.hidden.data(), dout, grad.fc2, dhidden.data());
    for (size_t i = 0; i < dhidden.size(); ++i)
        if (acts.hidden[i] <= 0.0) dhidden[i] = 0.0;
    linear_backward(net.fc1, feature, dhidden.data(), grad.fc1, dfeature);
}

void disc_forward(const DiscriminatorNet& net, const double* feature, DiscActs& acts) {
    linear_forward(net.fc1, feature, acts.hidden.data());
    for (auto& v : acts.hidden) v = v > 0.0 ? v : 0.0;
    double logit;
    linear_forward(net.fc2, acts.hidden.data(), &logit);
    acts.prob = 1.0 / (1.0 + std::exp(-logit));
}

void disc_backward(const DiscriminatorNet& net, const double* feature, const DiscActs& acts,
                   double dprob, DiscriminatorNet* grad, double* dfeature) {
    double dlogit = dprob * acts.prob * (1.0 - acts.prob);
    std::vector<double> dhidden(acts.hidden.size());
    DiscriminatorNet scratch;
    DiscriminatorNet* g = grad;
    if (!g) {
        scratch = zeros_like(net); // input-only backward still needs a sink
        g = &scratch;
    }
    linear_backward(net.fc2, acts.hidden.data(), &dlogit, g->fc2, dhidden.data());
    for (size_t i = 0; i < dhidden.size(); ++i)
        if (acts.hidden[i] <= 0.0) dhidden[i] = 0.0;
    linear_backward(net.fc1, feature, dhidden.data(), g->fc1, dfeature);
}

std::vector<double> forward_generator(const ModelState& state,
                                      const std::vector<const double*>& patches, ExecMode mode) {
    if (patches.empty()) throw ModelError("forward_generator: empty batch");
    const int fd = state.gen.feature_dim;
    std::vector<double> features(patches.size() * size_t(fd));
    par::for_index(mode, int64_t(patches.size()), [&](int64_t i) {
        GenActs acts;
        resize_acts(state, acts);
        std::copy(patches[i], patches[i] + acts.input.size(), acts.input.begin());
        gen_forward(state.gen, acts);
        std::copy(acts.feature.begin(), acts.feature.end(), features.begin() + i * fd);
    });
    return features;
}

std::vector<double> forward_embedding(const ModelState& state, const std::vector<double>& features,
                                      int batch, ExecMode mode) {
    if (batch < 1) throw ModelError("forward_embedding: empty batch");
    const int fd = state.gen.feature_dim;
    if (features.size() != size_t(batch) * fd)
        throw ModelError("forward_embedding: feature shape mismatch");
    const int ed = state.config.embed_out;
    std::vector<double> out(size_t(batch) * ed);
    par::for_index(mode, batch, [&](int64_t i) {
        EmbActs acts;
        resize_acts(state, acts);
        emb_forward(state.emb, features.data() + i * fd, acts);
        std::copy(acts.out.begin(), acts.out.end(), out.begin() + i * ed);
    });
    return out;
}

std::vector<double> forward_discriminator(const ModelState& state,
                                          const std::vector<double>& features, int batch,
                                          ExecMode mode) {
    if (batch < 1) throw ModelError("forward_discriminator: empty batch");
    const int fd = state.gen.feature_dim;
    if (features.size() != size_t(batch) * fd)
        throw ModelError("forward_discriminator: feature shape mismatch");
    std::vector<double> probs(size_t(batch));
    par::for_index(mode, batch, [&](int64_t i) {
        DiscActs acts;
        resize_acts(state, acts);
        disc_forward(state.disc, features.data() + i * fd, acts);
        probs[i] = acts.prob;
    });
    return probs;
}

namespace {

ConvLayer make_conv(int in_c, int out_c) {
    ConvLayer layer;
    layer.in_c = in_c;
    layer.out_c = out_c;
    layer.w.assign(size_t(out_c) * in_c * 9, 0.0);
    layer.b.assign(size_t(out_c), 0.0);
    return layer;
}

LinearLayer make_linear(int in_dim, int out_dim) {
    LinearLayer layer;
    layer.in_dim = in_dim;
    layer.out_dim = out_dim;
    layer.w.assign(size_t(out_dim) * in_dim, 0.0);
    layer.b.assign(size_t(out_dim), 0.0);
    return layer;
}

// fan-in scaled gaussian init; hidden layers use the rectifier gain
void fill_fan_in(std::vector<double>& w, int fan_in, double gain, Rng& rng) {
    double stddev = std::sqrt(gain / double(fan_in));
    for (auto& v : w) v = rng.gaussian() * stddev;
}

} // namespace

ModelState init_model(const ModelConfig& config, uint64_t seed) {
    config.validate();
    ModelState state;
    state.config = config;
    state.step = 0;

    auto ch = config.channels();
    state.gen.input_res = config.input_resolution;
    state.gen.feature_dim = config.feature_dim;
    state.gen.spatial[0] = config.input_resolution;
    int in_c = 3;
    for (int i = 0; i < 3; ++i) {
        state.gen.convs[i] = make_conv(in_c, ch[i]);
        state.gen.spatial[i + 1] = conv_out_res(state.gen.spatial[i]);
        in_c = ch[i];
    }
    state.emb.fc1 = make_linear(config.feature_dim, config.embed_hidden);
    state.emb.fc2 = make_linear(config.embed_hidden, config.embed_out);
    state.disc.fc1 = make_linear(config.feature_dim, config.disc_hidden);
    state.disc.fc2 = make_linear(config.disc_hidden, 1);

    int tensor_index = 0;
    auto init_tensor = [&](std::vector<double>& w, int fan_in, double gain) {
        Rng rng(derive_seed(seed, "init", uint64_t(tensor_index++)));
        fill_fan_in(w, fan_in, gain, rng);
    };
    for (auto& conv : state.gen.convs) init_tensor(conv.w, conv.in_c * 9, 2.0);
    init_tensor(state.emb.fc1.w, state.emb.fc1.in_dim, 2.0);
    init_tensor(state.emb.fc2.w, state.emb.fc2.in_dim, 1.0);
    init_tensor(state.disc.fc1.w, state.disc.fc1.in_dim, 2.0);
    init_tensor(state.disc.fc2.w, state.disc.fc2.in_dim, 1.0);
    return state;
}

GeneratorNet zeros_like(const GeneratorNet& net) {
    GeneratorNet z = net;
    for (auto& conv : z.convs) {
        std::fill(conv.w.begin(), conv.w.end(), 0.0);
        std::fill(conv.b.begin(), conv.b.end(), 0.0);
    }
    return z;
}

EmbeddingNet zeros_like(const EmbeddingNet& net) {
    EmbeddingNet z = net;
    std::fill(z.fc1.w.begin(), z.fc1.w.end(), 0.0);
    std::fill(z.fc1.b.begin(), z.fc1.b.end(), 0.0);
    std::fill(z.fc2.w.begin(), z.fc2.w.end(), 0.0);
    std::fill(z.fc2.b.begin(), z.fc2.b.end(), 0.0);
    return z;
}

DiscriminatorNet zeros_like(const DiscriminatorNet& net) {
    DiscriminatorNet z = net;
    std::fill(z.fc1.w.begin(), z.fc1.w.end(), 0.0);
    std::fill(z.fc1.b.begin(), z.fc1.b.end(), 0.0);
    std::fill(z.fc2.w.begin(), z.fc2.w.end(), 0.0);
    std::fill(z.fc2.b.begin(), z.fc2.b.end(), 0.0);
    return z;
}

void for_each_array(GeneratorNet& net, const std::string& prefix, const ArrayVisitor& fn) {
    for (int i = 0; i < 3; ++i) {
        std::string name = prefix + "conv" + std::to_string(i + 1);
        fn(name + ".w", net.convs[i].w);
        fn(name + ".b", net.convs[i].b);
    }
}

void for_each_array(EmbeddingNet& net, const std::string& prefix, const ArrayVisitor& fn) {
    fn(prefix + "fc1.w", net.fc1.w);
    fn(prefix + "fc1.b", net.fc1.b);
    fn(prefix + "fc2.w", net.fc2.w);
    fn(prefix + "fc2.b", net.fc2.b);
}

void for_each_array(DiscriminatorNet& net, const std::string& prefix, const ArrayVisitor& fn) {
    fn(prefix + "fc1.w", net.fc1.w);
    fn(prefix + "fc1.b", net.fc1.b);
    fn(prefix + "fc2.w", net.fc2.w);
    fn(prefix + "fc2.b", net.fc2.b);
}

void for_each_array(ModelState& state, const ArrayVisitor& fn) {
    for_each_array(state.gen, "gen.", fn);
    for_each_array(state.emb, "emb.", fn);
    for_each_array(state.disc, "disc.", fn);
}

namespace {

template <typename Net>
size_t count_params(Net& net) {
    size_t n = 0;
    for_each_array(net, "", [&](const std::string&, std::vector<double>& a) { n += a.size(); });
    return n;
}

} // namespace

size_t param_count(const GeneratorNet& net) { return count_params(const_cast<GeneratorNet&>(net)); }
size_t param_count(const EmbeddingNet& net) { return count_params(const_cast<EmbeddingNet&>(net)); }
size_t param_count(const DiscriminatorNet& net) {
    return count_params(const_cast<DiscriminatorNet&>(net));
}
size_t param_count(const ModelState& state) {
    return param_count(state.gen) + param_count(state.emb) + param_count(state.disc);
}

// ---- checkpoint codec ----

namespace {

constexpr char kMagic[8] = {'W', 'F', 'C', 'K', 'P', 'T', '0', '\n'};

void write_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); }
void write_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<char*>(&v), 8); }

uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void write_array(std::ostream& out, const std::string& name, const std::vector<double>& a) {
    write_u32(out, uint32_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    write_u64(out, a.size());
    out.write(reinterpret_cast<const char*>(a.data()), std::streamsize(a.size() * 8));
}

std::string backbone_name(Backbone b) {
    return b == Backbone::tiny_cnn ? "tiny_cnn" : "pluggable_large";
}

Backbone backbone_from(const std::string& s) {
    if (s == "tiny_cnn") return Backbone::tiny_cnn;
    if (s == "pluggable_large") return Backbone::pluggable_large;
    throw ModelError("checkpoint: unknown backbone '" + s + "'");
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    write_u32(out, kCheckpointVersion);

    nlohmann::json header;
    const auto& c = ckpt.state.config;
    header["backbone"] = backbone_name(c.backbone);
    header["feature_dim"] = c.feature_dim;
    header["embed_hidden"] = c.embed_hidden;
    header["embed_out"] = c.embed_out;
    header["disc_hidden"] = c.disc_hidden;
    header["input_resolution"] = c.input_resolution;
    header["step"] = ckpt.state.step;
    header["has_optimizer"] = ckpt.has_optimizer;
    std::string hs = header.dump();
    write_u32(out, uint32_t(hs.size()));
    out.write(hs.data(), std::streamsize(hs.size()));

    std::vector<std::pair<std::string, const std::vector<double>*>> arrays;
    for_each_array(const_cast<ModelState&>(ckpt.state),
                   [&](const std::string& name, std::vector<double>& a) {
                       arrays.emplace_back(name, &a);
                   });
    if (ckpt.has_optimizer) {
        arrays.emplace_back("opt.v_gen", &ckpt.opt.v_gen);
        arrays.emplace_back("opt.v_emb", &ckpt.opt.v_emb);
        arrays.emplace_back("opt.v_disc", &ckpt.opt.v_disc);
    }
    write_u32(out, uint32_t(arrays.size()));
    for (const auto& [name, a] : arrays) write_array(out, name, *a);
    for (uint64_t s : ckpt.rng_state) write_u64(out, s);
    if (!out) throw ModelError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw ModelError("not a checkpoint file: " + path);
    uint32_t version = read_u32(in);
    if (version != kCheckpointVersion)
        throw ModelError("checkpoint version mismatch in " + path + ": have " +
                         std::to_string(version) + ", expected " +
                         std::to_string(kCheckpointVersion));

    uint32_t hlen = read_u32(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    nlohmann::json header = nlohmann::json::parse(hs);

    ModelConfig config;
    config.backbone = backbone_from(header.at("backbone").get<std::string>());
    config.feature_dim = header.at("feature_dim").get<int>();
    config.embed_hidden = header.at("embed_hidden").get<int>();
    config.embed_out = header.at("embed_out").get<int>();
    config.disc_hidden = header.at("disc_hidden").get<int>();
    config.input_resolution = header.at("input_resolution").get<int>();

    Checkpoint ckpt;
    ckpt.state = init_model(config, 0);
    ckpt.state.step = header.at("step").get<int64_t>();
    ckpt.has_optimizer = header.at("has_optimizer").get<bool>();

    std::unordered_map<std::string, std::vector<double>*> slots;
    for_each_array(ckpt.state, [&](const std::string& name, std::vector<double>& a) {
        slots[name] = &a;
    });
    if (ckpt.has_optimizer) {
        ckpt.opt.v_gen.resize(param_count(ckpt.state.gen));
        ckpt.opt.v_emb.resize(param_count(ckpt.state.emb));
        ckpt.opt.v_disc.resize(param_count(ckpt.state.disc));
        slots["opt.v_gen"] = &ckpt.opt.v_gen;
        slots["opt.v_emb"] = &ckpt.opt.v_emb;
        slots["opt.v_disc"] = &ckpt.opt.v_disc;
    }

    uint32_t n_arrays = read_u32(in);
    for (uint32_t i = 0; i < n_arrays; ++i) {
        uint32_t nlen = read_u32(in);
        std::string name(nlen, '\0');
        in.read(name.data(), nlen);
        uint64_t count = read_u64(in);
        auto it = slots.find(name);
        if (it == slots.end() || it->second->size() != count)
            throw ModelError("checkpoint array '" + name + "' does not match the model layout");
        in.read(reinterpret_cast<char*>(it->second->data()), std::streamsize(count * 8));
    }
    for (auto& s : ckpt.rng_state) s = read_u64(in);
    if (!in) throw ModelError("truncated checkpoint: " + path);
    return ckpt;
}

} // namespace wildfit
