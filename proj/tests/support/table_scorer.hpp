#pragma once

// A stepwise scorer whose response distribution is given by a weight table:
// P(sequence) is proportional to the sequence's weight, with a tiny floor
// everywhere else so every step emits a proper distribution. Lets tests pin
// exact rankings while exercising the real beam/diversity machinery.

#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "replykit/scoring.hpp"

namespace replykit::testsupport {

class TableScorer : public ScorerModel {
 public:
  struct WeightedResponse {
    std::vector<TokenId> tokens;
    double weight;  // relative probability mass
  };

  TableScorer(Vocabulary vocab, const std::vector<WeightedResponse>& table)
      : vocab_(std::move(vocab)) {
    nodes_.push_back({});
    for (const auto& r : table) {
      int node = 0;
      nodes_[node].total += r.weight;
      for (TokenId tok : r.tokens) {
        auto it = nodes_[node].children.find(tok);
        if (it == nodes_[node].children.end()) {
          int child = static_cast<int>(nodes_.size());
          nodes_.push_back({});
          nodes_[node].children.emplace(tok, child);
          node = child;
        } else {
          node = it->second;
        }
        nodes_[node].total += r.weight;
      }
      nodes_[node].terminal += r.weight;
    }
  }

  const Vocabulary& vocab() const override { return vocab_; }

  Decode start_state(std::span<const TokenId>) const override {
    return {distribution(0), std::make_shared<NodeState>(0)};
  }

  Decode step(const StatePtr& state, TokenId token) const override {
    const auto& s = dynamic_cast<const NodeState&>(*state);
    int next = -1;
    if (s.node >= 0) {
      auto it = nodes_[s.node].children.find(token);
      if (it != nodes_[s.node].children.end()) next = it->second;
    }
    return {distribution(next), std::make_shared<NodeState>(next)};
  }

  std::string kind() const override { return "table"; }

 private:
  struct NodeState : State {
    explicit NodeState(int n) : node(n) {}
    int node;
  };
  struct Node {
    std::map<TokenId, int> children;
    double total = 0.0;
    double terminal = 0.0;
  };

  Eigen::VectorXd distribution(int node) const {
    const Eigen::Index V = static_cast<Eigen::Index>(vocab_.size());
    Eigen::VectorXd probs;
    if (node < 0 || nodes_[node].total <= 0.0) {
      probs = Eigen::VectorXd::Constant(V, 1.0 / static_cast<double>(V));
      return probs.array().log();
    }
    const Node& n = nodes_[node];
    double denom = n.total + kFloor * static_cast<double>(V);
    probs = Eigen::VectorXd::Constant(V, kFloor / denom);
    for (const auto& [tok, child] : n.children) {
      probs[tok] = (nodes_[child].total + kFloor) / denom;
    }
    probs[vocab_.specials().eom] = (n.terminal + kFloor) / denom;
    return probs.array().log();
  }

  static constexpr double kFloor = 1e-9;
  Vocabulary vocab_;
  std::vector<Node> nodes_;
};

}  // namespace replykit::testsupport
