#include "wildfit/losses.hpp"

#include <algorithm>
#include <cmath>

namespace wildfit {

void PairIndex::validate(int batch) const {
    for (const auto& [i, j] : pairs) {
        if (i == j) throw LossError("pair index: i == j");
        if (i < 0 || j < 0 || i >= batch || j >= batch)
            throw LossError("pair index out of range for batch " + std::to_string(batch));
    }
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw LossError("cosine: dimension mismatch");
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
        uv += u[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw LossError("cosine: zero-norm input");
    return uv / (std::sqrt(uu) * std::sqrt(vv));
}

namespace {

struct CosineGram {
    std::vector<double> norm;   // [B]
    std::vector<double> unit;   // [B][dim], embeddings scaled to unit norm
    std::vector<double> sim;    // [B][B]
};

CosineGram build_gram(const std::vector<double>& embeddings, int batch, int dim) {
    CosineGram g;
    g.norm.resize(size_t(batch));
    g.unit.resize(size_t(batch) * dim);
    g.sim.assign(size_t(batch) * batch, 0.0);
    for (int i = 0; i < batch; ++i) {
        double sq = 0.0;
        const double* e = embeddings.data() + size_t(i) * dim;
        for (int d = 0; d < dim; ++d) sq += e[d] * e[d];
        g.norm[i] = std::max(std::sqrt(sq), kNormFloor);
        for (int d = 0; d < dim; ++d) g.unit[size_t(i) * dim + d] = e[d] / g.norm[i];
    }
    for (int i = 0; i < batch; ++i)
        for (int k = 0; k < batch; ++k) {
            double s = 0.0;
            const double* ui = g.unit.data() + size_t(i) * dim;
            const double* uk = g.unit.data() + size_t(k) * dim;
            for (int d = 0; d < dim; ++d) s += ui[d] * uk[d];
            g.sim[size_t(i) * batch + k] = s;
        }
    return g;
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

// derivative of log(clamp(p)) w.r.t. p; zero where the clamp is active
double dlog_clamped(double p) {
    return (p > kProbClamp && p < 1.0 - kProbClamp) ? 1.0 / p : 0.0;
}

double dlog1m_clamped(double p) {
    return (p > kProbClamp && p < 1.0 - kProbClamp) ? -1.0 / (1.0 - p) : 0.0;
}

} // namespace

double compatibility_loss(const std::vector<double>& embeddings, int batch, int dim,
                          const PairIndex& pairs, double tau) {
    std::vector<double> unused;
    return compatibility_loss_grad(embeddings, batch, dim, pairs, tau, unused);
}

double compatibility_loss_grad(const std::vector<double>& embeddings, int batch, int dim,
                               const PairIndex& pairs, double tau, std::vector<double>& grad) {
    if (pairs.pairs.empty()) throw LossError("compatibility loss: empty pair index");
    if (batch < 2) throw LossError("compatibility loss: batch must have >= 2 elements");
    if (tau <= 0.0) throw LossError("compatibility loss: tau must be positive");
    pairs.validate(batch);

    CosineGram g = build_gram(embeddings, batch, dim);

    // per-row log-sum-exp over k != i and softmax weights
    std::vector<int> row_use(size_t(batch), 0);
    for (const auto& [i, j] : pairs.pairs) ++row_use[size_t(i)];

    std::vector<double> lse(size_t(batch), 0.0);
    std::vector<double> soft(size_t(batch) * batch, 0.0);
    for (int i = 0; i < batch; ++i) {
        if (row_use[size_t(i)] == 0) continue;
        const double* simrow = g.sim.data() + size_t(i) * batch;
        double maxv = -1e300;
        for (int k = 0; k < batch; ++k)
            if (k != i) maxv = std::max(maxv, simrow[k] / tau);
        double sum = 0.0;
        for (int k = 0; k < batch; ++k)
            if (k != i) sum += std::exp(simrow[k] / tau - maxv);
        lse[size_t(i)] = maxv + std::log(sum);
        for (int k = 0; k < batch; ++k)
            if (k != i) soft[size_t(i) * batch + k] = std::exp(simrow[k] / tau - maxv) / sum;
    }

    double loss = 0.0;
    // dL/dS, scaled by 1/tau at the end
    std::vector<double> dsim(size_t(batch) * batch, 0.0);
    for (int i = 0; i < batch; ++i) {
        if (row_use[size_t(i)] == 0) continue;
        for (int k = 0; k < batch; ++k)
            if (k != i) dsim[size_t(i) * batch + k] += row_use[size_t(i)] * soft[size_t(i) * batch + k];
    }
    for (const auto& [i, j] : pairs.pairs) {
        loss += lse[size_t(i)] - g.sim[size_t(i) * batch + j] / tau;
        dsim[size_t(i) * batch + j] -= 1.0;
    }

    grad.assign(size_t(batch) * dim, 0.0);
    for (int i = 0; i < batch; ++i) {
        for (int k = 0; k < batch; ++k) {
            double gs = dsim[size_t(i) * batch + k];
            if (gs == 0.0) continue;
            gs /= tau;
            double s = g.sim[size_t(i) * batch + k];
            const double* ui = g.unit.data() + size_t(i) * dim;
            const double* uk = g.unit.data() + size_t(k) * dim;
            double* gi = grad.data() + size_t(i) * dim;
            double* gk = grad.data() + size_t(k) * dim;
            for (int d = 0; d < dim; ++d) {
                gi[d] += gs * (uk[d] - s * ui[d]) / g.norm[i];
                gk[d] += gs * (ui[d] - s * uk[d]) / g.norm[k];
            }
        }
    }
    return loss;
}

double generator_loss(double comp_loss, const std::vector<double>& disc_out_source,
                      const std::vector<double>& disc_out_target, const LossConfig& config) {
    double adv = 0.0;
    for (double p : disc_out_source) adv -= config.lambda1 * std::log(clamp_prob(p));
    const auto& second = config.eq2_variant == Eq2Variant::as_written ? disc_out_source
                                                                      : disc_out_target;
    for (double p : second) adv -= config.lambda2 * std::log(1.0 - clamp_prob(p));
    return comp_loss + adv;
}

void generator_adv_prob_grads(const std::vector<double>& disc_out_source,
                              const std::vector<double>& disc_out_target,
                              const LossConfig& config, std::vector<double>& d_src,
                              std::vector<double>& d_tgt) {
    d_src.assign(disc_out_source.size(), 0.0);
    d_tgt.assign(disc_out_target.size(), 0.0);
    for (size_t i = 0; i < disc_out_source.size(); ++i)
        d_src[i] -= config.lambda1 * dlog_clamped(disc_out_source[i]);
    if (config.eq2_variant == Eq2Variant::as_written) {
        for (size_t i = 0; i < disc_out_source.size(); ++i)
            d_src[i] -= config.lambda2 * dlog1m_clamped(disc_out_source[i]);
    } else {
        for (size_t i = 0; i < disc_out_target.size(); ++i)
            d_tgt[i] -= config.lambda2 * dlog1m_clamped(disc_out_target[i]);
    }
}

double discriminator_loss(const std::vector<double>& disc_out_target,
                          const std::vector<double>& disc_out_source) {
    double loss = 0.0;
    for (double p : disc_out_target) loss -= std::log(clamp_prob(p));
    for (double p : disc_out_source) loss -= std::log(1.0 - clamp_prob(p));
    return loss;
}

void discriminator_prob_grads(const std::vector<double>& disc_out_target,
                              const std::vector<double>& disc_out_source,
                              std::vector<double>& d_tgt, std::vector<double>& d_src) {
    d_tgt.resize(disc_out_target.size());
    d_src.resize(disc_out_source.size());
    for (size_t i = 0; i < disc_out_target.size(); ++i)
        d_tgt[i] = -dlog_clamped(disc_out_target[i]);
    for (size_t i = 0; i < disc_out_source.size(); ++i)
        d_src[i] = -dlog1m_clamped(disc_out_source[i]);
}

} // namespace wildfit
