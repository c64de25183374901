#include "replykit/scoring.hpp"

#include <cmath>

#include "replykit/errors.hpp"
#include "replykit/rng.hpp"

namespace replykit {

double score_response(const ScorerModel& model,
                      std::span<const TokenId> original,
                      std::span<const TokenId> response) {
  if (response.empty()) {
    throw Error(Error::Code::kEmptyResponse, "cannot score an empty response");
  }
  ScorerModel::Decode d = model.start_state(original);
  double total = 0.0;
  for (TokenId tok : response) {
    total += d.log_probs[tok];
    d = model.step(d.state, tok);
  }
  total += d.log_probs[model.vocab().specials().eom];
  return total;
}

std::vector<TokenId> sample_response(const ScorerModel& model,
                                     std::span<const TokenId> original,
                                     std::uint64_t rng_seed,
                                     std::size_t max_len) {
  Rng rng(rng_seed);
  const TokenId eom = model.vocab().specials().eom;
  std::vector<TokenId> out;
  ScorerModel::Decode d = model.start_state(original);
  for (std::size_t step = 0; step < max_len; ++step) {
    double u = rng.uniform();
    double cum = 0.0;
    TokenId chosen = static_cast<TokenId>(d.log_probs.size() - 1);
    for (Eigen::Index k = 0; k < d.log_probs.size(); ++k) {
      cum += std::exp(d.log_probs[k]);
      if (u < cum) {
        chosen = static_cast<TokenId>(k);
        break;
      }
    }
    if (chosen == eom) break;
    out.push_back(chosen);
    d = model.step(d.state, chosen);
  }
  return out;
}

namespace {
struct EmptyState : ScorerModel::State {};
}  // namespace

UniformScorer::UniformScorer(const Vocabulary& vocab) : vocab_(vocab) {
  log_probs_ = Eigen::VectorXd::Constant(
      static_cast<Eigen::Index>(vocab_.size()),
      -std::log(static_cast<double>(vocab_.size())));
}

ScorerModel::Decode UniformScorer::start_state(
    std::span<const TokenId> original) const {
  (void)original;
  return {log_probs_, std::make_shared<EmptyState>()};
}

ScorerModel::Decode UniformScorer::step(const StatePtr& state,
                                        TokenId token) const {
  (void)token;
  return {log_probs_, state};
}

}  // namespace replykit
