#pragma once

#include <cstdint>
#include <vector>

namespace ag {

/// Topic model over sessions-as-documents with actions-as-words. phi is the
/// K x vocab topic-word matrix estimated from the final Gibbs counts with beta
/// smoothing.
struct GeneModel {
  int topics = 0;
  int vocab = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> phi;  // topics x vocab, row-major

  double phi_at(int k, int w) const { return phi[static_cast<std::size_t>(k) * vocab + w]; }
};

/// Collapsed Gibbs sampler. alpha < 0 selects the 50/K default; iters is the
/// number of full sweeps. Deterministic for a fixed seed.
GeneModel lda_fit(const std::vector<std::vector<int>>& docs, int vocab, int topics = 5,
                  double alpha = -1.0, double beta = 0.01, int iters = 500,
                  std::uint64_t seed = 0);

/// Per-document topic mixture under a frozen model: Gibbs sweeps over the
/// document's assignments with phi fixed, theta averaged over the second half
/// of the sweeps with alpha smoothing.
std::vector<double> gene_mixture(const std::vector<int>& doc, const GeneModel& model,
                                 int infer_iters = 100, std::uint64_t seed = 0);

/// Mean of the documents' mixtures.
std::vector<double> user_gene_profile(const std::vector<std::vector<int>>& docs,
                                      const GeneModel& model, int infer_iters = 100,
                                      std::uint64_t seed = 0);

}  // namespace ag
