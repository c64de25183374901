#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "replykit/corpus_ingest.hpp"
#include "replykit/vocab.hpp"

namespace replykit {

// ---------------------------------------------------------------------------
// Canonicalization

// Content-word normal form: punctuation and modifier/stopword tokens dropped,
// inflection variants mapped to a shared form, order preserved. Throws
// Error(kCanonicalEmpty) when nothing survives; try_canonicalize returns
// nullopt instead.
TokenList canonicalize(const TokenList& sentence);
std::optional<TokenList> try_canonicalize(const TokenList& sentence);

struct CanonicalResponse {
  TokenList surface;
  TokenList canonical;
  std::uint64_t frequency = 0;
};

// Distinct responses with frequency >= min_count and length <= max_tokens,
// sorted by descending frequency then lexicographic surface order. Responses
// whose canonical form is empty are dropped.
std::vector<CanonicalResponse> collect_frequent_responses(
    const std::vector<MessagePair>& pairs, std::uint64_t min_count,
    std::size_t max_tokens);

// Same, over plain token lists (e.g. the response side of a pairs file).
std::vector<CanonicalResponse> collect_frequent_responses(
    const std::vector<TokenList>& responses, std::uint64_t min_count,
    std::size_t max_tokens);

// ---------------------------------------------------------------------------
// Intent graph

enum class NodeKind { kResponse, kSeed, kFeature };

struct GraphEdge {
  std::int32_t to;
  double weight;
};

struct GraphNode {
  NodeKind kind;
  std::string text;       // surface text (responses/seeds) or feature key
  TokenList canonical;    // responses/seeds only
  int seed_label = -1;    // label index for seed nodes
  std::uint64_t frequency = 0;
  std::vector<GraphEdge> edges;
};

// Bipartite response/feature graph plus seed nodes and optional
// response-response message edges. Node indices are stable; sweeps and
// sampling iterate them in insertion order.
struct IntentGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::int32_t> response_nodes;
  std::vector<std::int32_t> seed_nodes;
  std::vector<std::int32_t> feature_nodes;
  std::vector<std::string> labels;  // seed cluster labels

  std::size_t edge_count() const;  // undirected
};

struct GraphOptions {
  // Feature-node edge weights are occurrence counts by default.
  bool binary_features = false;
  double message_edge_weight = 1.0;
};

struct SeedSet {
  // cluster label -> example response texts
  std::map<std::string, std::vector<std::string>> clusters;
};

SeedSet read_seeds_json(const std::string& path);
void write_seeds_json(const std::string& path, const SeedSet& seeds);

// n-grams (n <= 3) and one-gap skip-grams over canonical tokens.
std::vector<std::string> lexical_features(const TokenList& canonical);

struct PairLink {
  std::size_t a;  // indices into the response list
  std::size_t b;
};

// Throws Error(kDuplicateSeedLabel) on duplicate labels; seed examples that
// fail to canonicalize are recorded as warnings, not errors.
struct GraphBuildResult {
  IntentGraph graph;
  std::vector<std::string> warnings;
};
GraphBuildResult build_intent_graph(
    const std::vector<CanonicalResponse>& responses, const SeedSet& seeds,
    const std::vector<PairLink>& pair_links, const GraphOptions& opts = {});

void dump_graph_tsv(const IntentGraph& graph, const std::string& path);

// ---------------------------------------------------------------------------
// Label propagation

struct PropagationParams {
  double mu_np = 1.0;        // neighbor disagreement penalty
  double mu_pp = 0.1;        // prior (uniform) penalty
  int label_iters = 5;       // Gauss-Seidel sweeps per phase
  int sample_size = 100;     // new-cluster samples per phase
  int max_phases = 20;
  double score_floor = 0.0;  // <= 0 means the default 1.5 / |labels|
};

// Extra seed assignments layered on top of the graph's own seed nodes
// (cluster discovery turns sampled response nodes into seeds).
struct ExtraSeed {
  std::int32_t node;
  int label;
};

struct PropagationResult {
  // One score vector per node, dimension = label count.
  std::vector<Eigen::VectorXd> scores;
  std::vector<double> objective_per_sweep;  // after each sweep
  double objective = 0.0;                   // final value
  int sweeps_run = 0;
};

// Gauss-Seidel sweeps; every node update is the exact coordinate minimizer of
// the summed quadratic objective, so the objective is non-increasing sweep to
// sweep. Stops after params.label_iters sweeps or when the largest per-entry
// change falls below 1e-6. Throws Error(kNoSeeds) without any seed.
PropagationResult propagate_labels(const IntentGraph& graph,
                                   const PropagationParams& params,
                                   std::size_t num_labels,
                                   const std::vector<ExtraSeed>& extra_seeds = {});

// The quadratic objective evaluated at the given scores: seed and prior terms
// summed over nodes plus mu_np-weighted disagreement summed once per edge.
double propagation_objective(const IntentGraph& graph,
                             const PropagationParams& params,
                             std::size_t num_labels,
                             const std::vector<ExtraSeed>& extra_seeds,
                             const std::vector<Eigen::VectorXd>& scores);

// ---------------------------------------------------------------------------
// Cluster discovery

struct DiscoveryResult {
  std::vector<std::string> labels;  // seed labels plus discovered clusters
  // Per graph node: assigned label index or -1; only response nodes are
  // assigned.
  std::vector<int> assignment;
  // argmax score backing each assignment (0 where unassigned).
  std::vector<double> assignment_score;
  bool converged = false;
  int phases_run = 0;
};

// Repeated phases: propagate, assign argmax labels above the score floor,
// sample unlabeled responses as new single-node clusters, repeat until no new
// clusters appear and assignments stop changing (or max_phases is hit, which
// returns converged = false). Deterministic for a fixed rng_seed.
DiscoveryResult discover_clusters(const IntentGraph& graph,
                                  const PropagationParams& params,
                                  std::uint64_t rng_seed);

// Up to k responses assigned to `cluster`, by descending assignment score,
// ties broken lexicographically by surface text. Throws kUnknownCluster.
std::vector<std::int32_t> extract_top_members(const IntentGraph& graph,
                                              const DiscoveryResult& discovery,
                                              const std::string& cluster,
                                              std::size_t k);

// ---------------------------------------------------------------------------
// Response set

enum class Polarity { kPositive, kNegative, kNeutral };

const char* polarity_name(Polarity p);
Polarity polarity_from_name(const std::string& name);

struct ResponseEntry {
  TokenList text;
  std::string intent_id;
  Polarity polarity = Polarity::kNeutral;
  double prior_logp = 0.0;
  bool validated = false;
  std::uint64_t frequency = 0;  // not serialized; prior_logp carries it
};

struct ResponseSet {
  std::vector<ResponseEntry> entries;

  std::string to_json() const;
  static ResponseSet from_json(const std::string& text);
  void save(const std::string& path) const;
  static ResponseSet load(const std::string& path);
};

struct ResponseSetOptions {
  std::size_t members_per_cluster = 25;
  // With strict validation, entries without a "yes" rating are dropped.
  bool strict_validation = false;
};

// Assemble the draft set from discovery output: top members per cluster with
// prior log-probabilities from response frequencies.
ResponseSet assemble_response_set(const IntentGraph& graph,
                                  const DiscoveryResult& discovery,
                                  const ResponseSetOptions& opts = {});

// Ratings file: response_text<TAB>cluster_label<TAB>yes|no.
struct Rating {
  std::string response_text;
  std::string cluster_label;
  bool accepted = false;
};
std::vector<Rating> read_ratings_tsv(const std::string& path);

struct ValidationReport {
  std::size_t removed = 0;
  std::size_t validated = 0;
  std::vector<std::string> warnings;  // ratings with no matching entry
};

// "no" removes the entry, "yes" marks it validated; unrated entries are kept
// unvalidated unless strict mode drops them. Malformed lines throw
// Error(kMalformedRating) with their line number.
ValidationReport apply_validation(ResponseSet& set,
                                  const std::vector<Rating>& ratings,
                                  bool strict);

// Lexicon polarity per entry, then every member of a cluster takes the
// cluster's plurality polarity (ties fall back to neutral).
void tag_polarity(ResponseSet& set);

Polarity raw_polarity(const TokenList& tokens);

}  // namespace replykit
