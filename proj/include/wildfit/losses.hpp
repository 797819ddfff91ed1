#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wildfit {

struct LossError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Positive pairs (i, j) into a source batch, i != j, both patches from
// the same person. Both orders (i, j) and (j, i) are listed when the
// batch builder runs in its default both-directions mode.
struct PairIndex {
    std::vector<std::pair<int, int>> pairs;

    void validate(int batch) const;
};

enum class Eq2Variant {
    as_written,            // both adversarial terms over source outputs, as printed
    second_term_on_target, // standard non-saturating form; second term over target
};

struct LossConfig {
    double tau = 0.2;
    double lambda1 = 0.05;
    double lambda2 = 0.05;
    Eq2Variant eq2_variant = Eq2Variant::as_written;
};

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-7;
// Norm floor used inside the contrastive loss; the standalone cosine op
// rejects zero-norm inputs instead.
inline constexpr double kNormFloor = 1e-12;

double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Contrastive compatibility loss: sum over positive pairs of
// -log( exp(S(e_i, e_j)/tau) / sum_{k != i} exp(S(e_i, e_k)/tau) ).
// The denominator ranges over every other batch element, including j.
double compatibility_loss(const std::vector<double>& embeddings, int batch, int dim,
                          const PairIndex& pairs, double tau);

// Same value; also writes d(loss)/d(embeddings) into grad (resized).
double compatibility_loss_grad(const std::vector<double>& embeddings, int batch, int dim,
                               const PairIndex& pairs, double tau, std::vector<double>& grad);

// L_G = l_c - lambda1 * sum log(D(src)) - lambda2 * sum log(1 - D(x))
// where x is the source batch as printed, or the target batch under the
// second_term_on_target variant.
double generator_loss(double comp_loss, const std::vector<double>& disc_out_source,
                      const std::vector<double>& disc_out_target, const LossConfig& config);

// Gradients of the adversarial part of L_G w.r.t. the discriminator
// probabilities (the compatibility part flows through the embeddings).
void generator_adv_prob_grads(const std::vector<double>& disc_out_source,
                              const std::vector<double>& disc_out_target,
                              const LossConfig& config, std::vector<double>& d_src,
                              std::vector<double>& d_tgt);

// L_D = -sum log(D(tgt)) - sum log(1 - D(src)); sum form, source label 0,
// target label 1.
double discriminator_loss(const std::vector<double>& disc_out_target,
                          const std::vector<double>& disc_out_source);

void discriminator_prob_grads(const std::vector<double>& disc_out_target,
                              const std::vector<double>& disc_out_source,
                              std::vector<double>& d_tgt, std::vector<double>& d_src);

} // namespace wildfit
