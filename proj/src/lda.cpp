#include "actiongraph/lda.hpp"

#include "actiongraph/errors.hpp"
#include "actiongraph/rng.hpp"

namespace ag {

GeneModel lda_fit(const std::vector<std::vector<int>>& docs, int vocab, int topics, double alpha,
                  double beta, int iters, std::uint64_t seed) {
  if (docs.empty()) throw DataError("lda_fit: empty corpus");
  if (topics < 1) throw UsageError("lda_fit: topics must be >= 1");
  if (vocab < 1) throw UsageError("lda_fit: vocab must be >= 1");
  if (alpha < 0) alpha = 50.0 / topics;

  const int D = static_cast<int>(docs.size());
  std::vector<std::vector<int>> z(docs.size());
  std::vector<int> doc_topic(static_cast<std::size_t>(D) * topics, 0);
  std::vector<int> topic_word(static_cast<std::size_t>(topics) * vocab, 0);
  std::vector<int> topic_total(static_cast<std::size_t>(topics), 0);

  Rng rng(splitmix64(seed ^ 0x1da));
  for (int d = 0; d < D; ++d) {
    z[static_cast<std::size_t>(d)].resize(docs[static_cast<std::size_t>(d)].size());
    for (std::size_t i = 0; i < docs[static_cast<std::size_t>(d)].size(); ++i) {
      const int w = docs[static_cast<std::size_t>(d)][i];
      if (w < 0 || w >= vocab) throw DataError("lda_fit: token outside vocabulary");
      const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(topics)));
      z[static_cast<std::size_t>(d)][i] = k;
      ++doc_topic[static_cast<std::size_t>(d) * topics + k];
      ++topic_word[static_cast<std::size_t>(k) * vocab + w];
      ++topic_total[static_cast<std::size_t>(k)];
    }
  }

  const double vbeta = vocab * beta;
  std::vector<double> weights(static_cast<std::size_t>(topics));
  for (int it = 0; it < iters; ++it) {
    for (int d = 0; d < D; ++d) {
      const auto& doc = docs[static_cast<std::size_t>(d)];
      auto& zd = z[static_cast<std::size_t>(d)];
      int* dt = &doc_topic[static_cast<std::size_t>(d) * topics];
      for (std::size_t i = 0; i < doc.size(); ++i) {
        const int w = doc[i];
        const int old = zd[i];
        --dt[old];
        --topic_word[static_cast<std::size_t>(old) * vocab + w];
        --topic_total[static_cast<std::size_t>(old)];
        for (int k = 0; k < topics; ++k) {
          weights[static_cast<std::size_t>(k)] =
              (dt[k] + alpha) *
              (topic_word[static_cast<std::size_t>(k) * vocab + w] + beta) /
              (topic_total[static_cast<std::size_t>(k)] + vbeta);
        }
        const int k = rng.categorical(weights.data(), topics);
        zd[i] = k;
        ++dt[k];
        ++topic_word[static_cast<std::size_t>(k) * vocab + w];
        ++topic_total[static_cast<std::size_t>(k)];
      }
    }
  }

  GeneModel model;
  model.topics = topics;
  model.vocab = vocab;
  model.alpha = alpha;
  model.beta = beta;
  model.seed = seed;
  model.phi.resize(static_cast<std::size_t>(topics) * vocab);
  for (int k = 0; k < topics; ++k) {
    const double denom = topic_total[static_cast<std::size_t>(k)] + vbeta;
    for (int w = 0; w < vocab; ++w) {
      model.phi[static_cast<std::size_t>(k) * vocab + w] =
          (topic_word[static_cast<std::size_t>(k) * vocab + w] + beta) / denom;
    }
  }
  return model;
}

std::vector<double> gene_mixture(const std::vector<int>& doc, const GeneModel& model,
                                 int infer_iters, std::uint64_t seed) {
  if (doc.empty()) throw DataError("gene_mixture: empty document");
  const int K = model.topics;
  Rng rng(splitmix64(seed ^ 0x9e7e));
  std::vector<int> z(doc.size());
  std::vector<int> counts(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    z[i] = k;
    ++counts[static_cast<std::size_t>(k)];
  }

  std::vector<double> weights(static_cast<std::size_t>(K));
  std::vector<double> theta_acc(static_cast<std::size_t>(K), 0.0);
  const double denom = static_cast<double>(doc.size()) + K * model.alpha;
  int samples = 0;
  if (infer_iters < 1) infer_iters = 1;
  for (int it = 0; it < infer_iters; ++it) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const int w = doc[i];
      const int old = z[i];
      --counts[static_cast<std::size_t>(old)];
      for (int k = 0; k < K; ++k) {
        weights[static_cast<std::size_t>(k)] =
            (counts[static_cast<std::size_t>(k)] + model.alpha) * model.phi_at(k, w);
      }
      const int k = rng.categorical(weights.data(), K);
      z[i] = k;
      ++counts[static_cast<std::size_t>(k)];
    }
    if (it >= infer_iters / 2) {
      for (int k = 0; k < K; ++k) {
        theta_acc[static_cast<std::size_t>(k)] +=
            (counts[static_cast<std::size_t>(k)] + model.alpha) / denom;
      }
      ++samples;
    }
  }
  for (double& v : theta_acc) v /= samples;
  return theta_acc;
}

std::vector<double> user_gene_profile(const std::vector<std::vector<int>>& docs,
                                      const GeneModel& model, int infer_iters,
                                      std::uint64_t seed) {
  if (docs.empty()) throw DataError("user_gene_profile: no documents");
  std::vector<double> mean(static_cast<std::size_t>(model.topics), 0.0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto theta = gene_mixture(docs[i], model, infer_iters, splitmix64(seed ^ (i + 1)));
    for (int k = 0; k < model.topics; ++k) mean[static_cast<std::size_t>(k)] += theta[static_cast<std::size_t>(k)];
  }
  for (double& v : mean) v /= static_cast<double>(docs.size());
  return mean;
}

}  // namespace ag
