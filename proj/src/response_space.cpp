#include "replykit/response_space.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "replykit/errors.hpp"
#include "replykit/rng.hpp"

namespace replykit {

namespace {

bool has_alnum(const std::string& t) {
  for (char c : t) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
        (c >= '0' && c <= '9') || static_cast<unsigned char>(c) >= 0x80) {
      return true;
    }
  }
  return false;
}

// Determiners, pronouns, politeness words, intensifiers and loose
// prepositions: the parts a dependency parse would leave unattached.
const std::unordered_set<std::string>& modifier_lexicon() {
  static const std::unordered_set<std::string> kSet = {
      "a",    "an",   "the",  "this", "that",  "these", "those", "some",
      "any",  "each", "every", "i",   "you",   "we",    "he",    "she",
      "it",   "they", "me",   "him",  "her",   "us",    "them",  "my",
      "your", "our",  "his",  "its",  "their", "mine",  "yours", "please",
      "kindly", "kind", "very", "really", "quite", "just", "so",  "too",
      "pretty", "oh", "well", "um",   "uh",    "hey",   "for",   "to",
      "of",   "in",   "on",   "at",   "by",    "with",  "from",  "and",
      "or",   "but",  "do",   "does", "did",   "'s",
  };
  return kSet;
}

const std::unordered_map<std::string, std::string>& variant_table() {
  static const std::unordered_map<std::string, std::string> kTable = {
      {"thank", "thanks"},   {"thanx", "thanks"},  {"thx", "thanks"},
      {"updating", "update"}, {"updates", "update"}, {"updated", "update"},
      {"'ll", "will"},       {"'re", "are"},       {"'ve", "have"},
      {"'m", "am"},          {"'d", "would"},      {"n't", "not"},
      {"ca", "can"},         {"wo", "will"},       {"sha", "shall"},
      {"okay", "ok"},        {"yeah", "yes"},      {"yep", "yes"},
      {"yup", "yes"},        {"meetings", "meeting"}, {"sounds", "sound"},
      {"works", "work"},     {"coming", "come"},   {"comes", "come"},
      {"going", "go"},       {"goes", "go"},       {"gets", "get"},
      {"looks", "look"},     {"looking", "look"},  {"calls", "call"},
      {"calling", "call"},
  };
  return kTable;
}

// Feature keys: tokens joined with 0x1f; a skipped position is "*".
constexpr char kFeatureSep = '\x1f';

std::string feature_key(std::initializer_list<const std::string*> parts) {
  std::string key;
  bool first = true;
  for (const std::string* p : parts) {
    if (!first) key.push_back(kFeatureSep);
    key += *p;
    first = false;
  }
  return key;
}

std::string label_for_node(const TokenList& canonical) {
  std::string name;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    if (i) name.push_back('_');
    name += canonical[i];
  }
  return name;
}

}  // namespace

// ---------------------------------------------------------------------------
// Canonicalization

std::optional<TokenList> try_canonicalize(const TokenList& sentence) {
  TokenList out;
  const auto& drop = modifier_lexicon();
  const auto& variants = variant_table();
  for (const auto& tok : sentence) {
    if (!has_alnum(tok) && variants.count(tok) == 0) continue;
    if (drop.count(tok) > 0) continue;
    auto it = variants.find(tok);
    out.push_back(it == variants.end() ? tok : it->second);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

TokenList canonicalize(const TokenList& sentence) {
  auto out = try_canonicalize(sentence);
  if (!out) {
    throw Error(Error::Code::kCanonicalEmpty,
                "no content tokens in: " + join_tokens(sentence));
  }
  return *out;
}

std::vector<CanonicalResponse> collect_frequent_responses(
    const std::vector<TokenList>& responses, std::uint64_t min_count,
    std::size_t max_tokens) {
  if (min_count < 1) {
    throw Error(Error::Code::kMalformedInput, "min_count must be >= 1");
  }
  std::unordered_map<std::string, std::pair<TokenList, std::uint64_t>> counts;
  for (const auto& tokens : responses) {
    if (tokens.empty() || tokens.size() > max_tokens) continue;
    auto& slot = counts[join_tokens(tokens)];
    if (slot.second == 0) slot.first = tokens;
    ++slot.second;
  }
  std::vector<CanonicalResponse> out;
  for (auto& [text, slot] : counts) {
    if (slot.second < min_count) continue;
    auto canonical = try_canonicalize(slot.first);
    if (!canonical) continue;
    CanonicalResponse r;
    r.surface = std::move(slot.first);
    r.canonical = std::move(*canonical);
    r.frequency = slot.second;
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const CanonicalResponse& a, const CanonicalResponse& b) {
              if (a.frequency != b.frequency) return a.frequency > b.frequency;
              return a.surface < b.surface;
            });
  return out;
}

std::vector<CanonicalResponse> collect_frequent_responses(
    const std::vector<MessagePair>& pairs, std::uint64_t min_count,
    std::size_t max_tokens) {
  std::vector<TokenList> responses;
  responses.reserve(pairs.size());
  for (const auto& p : pairs) responses.push_back(p.response_tokens);
  return collect_frequent_responses(responses, min_count, max_tokens);
}

// ---------------------------------------------------------------------------
// Graph construction

std::vector<std::string> lexical_features(const TokenList& canonical) {
  static const std::string kGap = "*";
  std::vector<std::string> feats;
  const std::size_t n = canonical.size();
  for (std::size_t i = 0; i < n; ++i) {
    feats.push_back(feature_key({&canonical[i]}));
    if (i + 1 < n) feats.push_back(feature_key({&canonical[i], &canonical[i + 1]}));
    if (i + 2 < n) {
      feats.push_back(
          feature_key({&canonical[i], &canonical[i + 1], &canonical[i + 2]}));
      feats.push_back(feature_key({&canonical[i], &kGap, &canonical[i + 2]}));
    }
  }
  return feats;
}

std::size_t IntentGraph::edge_count() const {
  std::size_t directed = 0;
  for (const auto& n : nodes) directed += n.edges.size();
  return directed / 2;
}

namespace {

std::int32_t intern_feature(IntentGraph& g,
                            std::unordered_map<std::string, std::int32_t>& index,
                            const std::string& key) {
  auto it = index.find(key);
  if (it != index.end()) return it->second;
  std::int32_t id = static_cast<std::int32_t>(g.nodes.size());
  GraphNode node;
  node.kind = NodeKind::kFeature;
  node.text = key;
  g.nodes.push_back(std::move(node));
  g.feature_nodes.push_back(id);
  index.emplace(key, id);
  return id;
}

void add_undirected_edge(IntentGraph& g, std::int32_t u, std::int32_t v,
                         double w) {
  g.nodes[u].edges.push_back({v, w});
  g.nodes[v].edges.push_back({u, w});
}

void connect_features(IntentGraph& g,
                      std::unordered_map<std::string, std::int32_t>& index,
                      std::int32_t node, const GraphOptions& opts) {
  std::map<std::string, double> counts;
  for (const auto& f : lexical_features(g.nodes[node].canonical)) {
    counts[f] += 1.0;
  }
  for (const auto& [key, count] : counts) {
    std::int32_t feat = intern_feature(g, index, key);
    add_undirected_edge(g, node, feat,
                        opts.binary_features ? 1.0 : count);
  }
}

}  // namespace

GraphBuildResult build_intent_graph(
    const std::vector<CanonicalResponse>& responses, const SeedSet& seeds,
    const std::vector<PairLink>& pair_links, const GraphOptions& opts) {
  GraphBuildResult result;
  IntentGraph& g = result.graph;
  std::unordered_map<std::string, std::int32_t> feature_index;

  for (const auto& r : responses) {
    std::int32_t id = static_cast<std::int32_t>(g.nodes.size());
    GraphNode node;
    node.kind = NodeKind::kResponse;
    node.text = join_tokens(r.surface);
    node.canonical = r.canonical;
    node.frequency = r.frequency;
    g.nodes.push_back(std::move(node));
    g.response_nodes.push_back(id);
    connect_features(g, feature_index, id, opts);
  }

  std::unordered_set<std::string> seen_labels;
  for (const auto& [label, examples] : seeds.clusters) {
    if (!seen_labels.insert(label).second) {
      throw Error(Error::Code::kDuplicateSeedLabel,
                  "duplicate seed label: " + label);
    }
    int label_idx = static_cast<int>(g.labels.size());
    g.labels.push_back(label);
    for (const auto& example : examples) {
      TokenList tokens = tokenize(example);
      auto canonical = try_canonicalize(tokens);
      if (!canonical) {
        result.warnings.push_back("seed example for '" + label +
                                  "' has no content tokens: " + example);
        continue;
      }
      std::int32_t id = static_cast<std::int32_t>(g.nodes.size());
      GraphNode node;
      node.kind = NodeKind::kSeed;
      node.text = join_tokens(tokens);
      node.canonical = std::move(*canonical);
      node.seed_label = label_idx;
      g.nodes.push_back(std::move(node));
      g.seed_nodes.push_back(id);
      connect_features(g, feature_index, id, opts);
    }
  }

  for (const auto& link : pair_links) {
    if (link.a >= responses.size() || link.b >= responses.size()) {
      throw Error(Error::Code::kMalformedInput, "pair link out of range");
    }
    add_undirected_edge(g, g.response_nodes[link.a], g.response_nodes[link.b],
                        opts.message_edge_weight);
  }
  return result;
}

SeedSet read_seeds_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Code::kIo, "could not open for read: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Code::kMalformedInput,
                std::string("seeds file: ") + e.what());
  }
  if (!j.is_object()) {
    throw Error(Error::Code::kMalformedInput,
                "seeds file must be an object of label -> examples");
  }
  SeedSet seeds;
  for (auto it = j.begin(); it != j.end(); ++it) {
    seeds.clusters[it.key()] = it.value().get<std::vector<std::string>>();
  }
  return seeds;
}

void write_seeds_json(const std::string& path, const SeedSet& seeds) {
  nlohmann::ordered_json j;
  for (const auto& [label, examples] : seeds.clusters) j[label] = examples;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Code::kIo, "could not open for write: " + path);
  out << j.dump(2) << "\n";
}

void dump_graph_tsv(const IntentGraph& graph, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Code::kIo, "could not open for write: " + path);
  auto kind_name = [](NodeKind k) {
    switch (k) {
      case NodeKind::kResponse: return "response";
      case NodeKind::kSeed: return "seed";
      case NodeKind::kFeature: return "feature";
    }
    return "?";
  };
  for (std::size_t u = 0; u < graph.nodes.size(); ++u) {
    for (const auto& e : graph.nodes[u].edges) {
      if (e.to < static_cast<std::int32_t>(u)) continue;
      std::string left = graph.nodes[u].text;
      std::string right = graph.nodes[e.to].text;
      std::replace(left.begin(), left.end(), kFeatureSep, ' ');
      std::replace(right.begin(), right.end(), kFeatureSep, ' ');
      out << kind_name(graph.nodes[u].kind) << '\t' << left << '\t'
          << kind_name(graph.nodes[e.to].kind) << '\t' << right << '\t'
          << e.weight << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Propagation

namespace {

struct SeedInfo {
  std::vector<int> label;  // per node, -1 if not a seed
};

SeedInfo collect_seeds(const IntentGraph& graph,
                       const std::vector<ExtraSeed>& extra_seeds) {
  SeedInfo info;
  info.label.assign(graph.nodes.size(), -1);
  for (std::int32_t n : graph.seed_nodes) {
    info.label[n] = graph.nodes[n].seed_label;
  }
  for (const auto& s : extra_seeds) {
    info.label.at(s.node) = s.label;
  }
  return info;
}

std::vector<std::int32_t> sweep_order(const IntentGraph& graph) {
  std::vector<std::int32_t> order;
  order.reserve(graph.nodes.size());
  order.insert(order.end(), graph.seed_nodes.begin(), graph.seed_nodes.end());
  order.insert(order.end(), graph.response_nodes.begin(),
               graph.response_nodes.end());
  order.insert(order.end(), graph.feature_nodes.begin(),
               graph.feature_nodes.end());
  return order;
}

}  // namespace

double propagation_objective(const IntentGraph& graph,
                             const PropagationParams& params,
                             std::size_t num_labels,
                             const std::vector<ExtraSeed>& extra_seeds,
                             const std::vector<Eigen::VectorXd>& scores) {
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(
      static_cast<Eigen::Index>(num_labels), 1.0 / static_cast<double>(num_labels));
  SeedInfo seeds = collect_seeds(graph, extra_seeds);
  double obj = 0.0;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    if (seeds.label[i] >= 0) {
      Eigen::VectorXd target = Eigen::VectorXd::Zero(uniform.size());
      target[seeds.label[i]] = 1.0;
      obj += (scores[i] - target).squaredNorm();
    }
    obj += params.mu_pp * (scores[i] - uniform).squaredNorm();
    for (const auto& e : graph.nodes[i].edges) {
      if (e.to <= static_cast<std::int32_t>(i)) continue;  // count each edge once
      obj += params.mu_np * e.weight * (scores[i] - scores[e.to]).squaredNorm();
    }
  }
  return obj;
}

PropagationResult propagate_labels(const IntentGraph& graph,
                                   const PropagationParams& params,
                                   std::size_t num_labels,
                                   const std::vector<ExtraSeed>& extra_seeds) {
  if (graph.seed_nodes.empty() && extra_seeds.empty()) {
    throw Error(Error::Code::kNoSeeds, "propagation needs at least one seed");
  }
  if (num_labels == 0) {
    throw Error(Error::Code::kNoSeeds, "propagation needs a non-empty label set");
  }
  if (params.mu_pp <= 0.0 || params.mu_np < 0.0 || params.label_iters < 1) {
    throw Error(Error::Code::kBadConfig, "invalid propagation parameters");
  }

  const Eigen::Index dim = static_cast<Eigen::Index>(num_labels);
  const Eigen::VectorXd uniform =
      Eigen::VectorXd::Constant(dim, 1.0 / static_cast<double>(num_labels));
  SeedInfo seeds = collect_seeds(graph, extra_seeds);

  PropagationResult res;
  res.scores.assign(graph.nodes.size(), uniform);

  const std::vector<std::int32_t> order = sweep_order(graph);
  constexpr double kTol = 1e-6;
  for (int sweep = 0; sweep < params.label_iters; ++sweep) {
    double max_change = 0.0;
    for (std::int32_t i : order) {
      const GraphNode& node = graph.nodes[i];
      double s_i = seeds.label[i] >= 0 ? 1.0 : 0.0;
      Eigen::VectorXd acc = params.mu_pp * uniform;
      if (s_i > 0.0) acc[seeds.label[i]] += 1.0;
      double weight_sum = 0.0;
      for (const auto& e : node.edges) {
        acc.noalias() += params.mu_np * e.weight * res.scores[e.to];
        weight_sum += e.weight;
      }
      double denom = s_i + params.mu_pp + params.mu_np * weight_sum;
      Eigen::VectorXd updated = acc / denom;
      max_change =
          std::max(max_change, (updated - res.scores[i]).cwiseAbs().maxCoeff());
      res.scores[i] = std::move(updated);
    }
    res.objective_per_sweep.push_back(propagation_objective(
        graph, params, num_labels, extra_seeds, res.scores));
    res.sweeps_run = sweep + 1;
    if (max_change < kTol) break;
  }
  res.objective = res.objective_per_sweep.back();
  return res;
}

// ---------------------------------------------------------------------------
// Cluster discovery

DiscoveryResult discover_clusters(const IntentGraph& graph,
                                  const PropagationParams& params,
                                  std::uint64_t rng_seed) {
  DiscoveryResult out;
  out.labels = graph.labels;
  out.assignment.assign(graph.nodes.size(), -1);
  out.assignment_score.assign(graph.nodes.size(), 0.0);

  std::vector<ExtraSeed> extra;
  std::unordered_set<std::string> label_names(out.labels.begin(),
                                              out.labels.end());
  Rng rng(rng_seed);

  for (int phase = 0; phase < params.max_phases; ++phase) {
    PropagationResult prop =
        propagate_labels(graph, params, out.labels.size(), extra);
    double floor = params.score_floor > 0.0
                       ? params.score_floor
                       : 1.5 / static_cast<double>(out.labels.size());

    std::vector<int> assignment(graph.nodes.size(), -1);
    std::vector<double> score(graph.nodes.size(), 0.0);
    bool changed = false;
    std::vector<std::int32_t> unlabeled;
    for (std::int32_t n : graph.response_nodes) {
      const Eigen::VectorXd& v = prop.scores[n];
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < v.size(); ++k) {
        if (v[k] > v[best]) best = k;
      }
      if (v[best] >= floor) {
        assignment[n] = static_cast<int>(best);
        score[n] = v[best];
      } else {
        unlabeled.push_back(n);
      }
      if (assignment[n] != out.assignment[n]) changed = true;
    }

    std::size_t k = std::min<std::size_t>(
        params.sample_size < 0 ? 0 : static_cast<std::size_t>(params.sample_size),
        unlabeled.size());
    std::vector<std::int32_t> sampled = rng.sample(unlabeled, k);
    for (std::int32_t n : sampled) {
      std::string name = label_for_node(graph.nodes[n].canonical);
      if (!label_names.insert(name).second) {
        int suffix = 2;
        std::string candidate;
        do {
          candidate = name + "_" + std::to_string(suffix++);
        } while (!label_names.insert(candidate).second);
        name = candidate;
      }
      int label_idx = static_cast<int>(out.labels.size());
      out.labels.push_back(name);
      extra.push_back({n, label_idx});
    }

    out.assignment = std::move(assignment);
    out.assignment_score = std::move(score);
    out.phases_run = phase + 1;
    if (sampled.empty() && !changed) {
      out.converged = true;
      break;
    }
  }
  return out;
}

std::vector<std::int32_t> extract_top_members(const IntentGraph& graph,
                                              const DiscoveryResult& discovery,
                                              const std::string& cluster,
                                              std::size_t k) {
  auto it = std::find(discovery.labels.begin(), discovery.labels.end(), cluster);
  if (it == discovery.labels.end()) {
    throw Error(Error::Code::kUnknownCluster, "unknown cluster: " + cluster);
  }
  int label_idx = static_cast<int>(it - discovery.labels.begin());
  std::vector<std::int32_t> members;
  for (std::int32_t n : graph.response_nodes) {
    if (discovery.assignment[n] == label_idx) members.push_back(n);
  }
  std::sort(members.begin(), members.end(),
            [&](std::int32_t a, std::int32_t b) {
              double sa = discovery.assignment_score[a];
              double sb = discovery.assignment_score[b];
              if (sa != sb) return sa > sb;
              return graph.nodes[a].text < graph.nodes[b].text;
            });
  if (members.size() > k) members.resize(k);
  return members;
}

// ---------------------------------------------------------------------------
// Response set

const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::kPositive: return "positive";
    case Polarity::kNegative: return "negative";
    case Polarity::kNeutral: return "neutral";
  }
  return "?";
}

Polarity polarity_from_name(const std::string& name) {
  if (name == "positive") return Polarity::kPositive;
  if (name == "negative") return Polarity::kNegative;
  if (name == "neutral") return Polarity::kNeutral;
  throw Error(Error::Code::kMalformedInput, "unknown polarity: " + name);
}

ResponseSet assemble_response_set(const IntentGraph& graph,
                                  const DiscoveryResult& discovery,
                                  const ResponseSetOptions& opts) {
  ResponseSet set;
  for (const auto& label : discovery.labels) {
    for (std::int32_t n :
         extract_top_members(graph, discovery, label, opts.members_per_cluster)) {
      ResponseEntry e;
      e.text = split_tokens(graph.nodes[n].text);
      e.intent_id = label;
      e.frequency = graph.nodes[n].frequency;
      set.entries.push_back(std::move(e));
    }
  }
  double total = 0.0;
  for (const auto& e : set.entries) total += static_cast<double>(e.frequency);
  for (auto& e : set.entries) {
    e.prior_logp =
        total > 0.0 && e.frequency > 0
            ? std::log(static_cast<double>(e.frequency) / total)
            : 0.0;
  }
  return set;
}

std::vector<Rating> read_ratings_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Code::kIo, "could not open for read: " + path);
  std::vector<Rating> ratings;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 3 || (fields[2] != "yes" && fields[2] != "no")) {
      throw Error(Error::Code::kMalformedRating,
                  "ratings line " + std::to_string(line_no) +
                      ": expected response<TAB>cluster<TAB>yes|no");
    }
    ratings.push_back({fields[0], fields[1], fields[2] == "yes"});
  }
  return ratings;
}

ValidationReport apply_validation(ResponseSet& set,
                                  const std::vector<Rating>& ratings,
                                  bool strict) {
  ValidationReport report;
  std::map<std::pair<std::string, std::string>, bool> verdict;
  for (const auto& r : ratings) {
    verdict[{r.response_text, r.cluster_label}] = r.accepted;
  }
  std::unordered_set<const Rating*> matched;
  std::vector<ResponseEntry> kept;
  kept.reserve(set.entries.size());
  std::map<std::pair<std::string, std::string>, int> used;
  for (auto& e : set.entries) {
    auto key = std::make_pair(join_tokens(e.text), e.intent_id);
    auto it = verdict.find(key);
    if (it == verdict.end()) {
      if (!strict) kept.push_back(std::move(e));
      else ++report.removed;
      continue;
    }
    ++used[key];
    if (it->second) {
      e.validated = true;
      ++report.validated;
      kept.push_back(std::move(e));
    } else {
      ++report.removed;
    }
  }
  for (const auto& r : ratings) {
    if (used.find({r.response_text, r.cluster_label}) == used.end()) {
      report.warnings.push_back("rating refers to no entry: " +
                                r.response_text + " / " + r.cluster_label);
    }
  }
  set.entries = std::move(kept);
  return report;
}

Polarity raw_polarity(const TokenList& tokens) {
  if (tokens.empty()) return Polarity::kNeutral;
  static const std::unordered_set<std::string> kPositiveStarts = {
      "yes", "sure", "yeah", "yep", "absolutely", "definitely"};
  if (kPositiveStarts.count(tokens[0]) > 0) return Polarity::kPositive;
  if (tokens.size() >= 2 && tokens[0] == "of" && tokens[1] == "course") {
    return Polarity::kPositive;
  }
  static const std::unordered_set<std::string> kNegativeHits = {
      "n't", "cannot", "unfortunately", "unable", "not", "no"};
  for (const auto& t : tokens) {
    if (kNegativeHits.count(t) > 0) return Polarity::kNegative;
  }
  return Polarity::kNeutral;
}

void tag_polarity(ResponseSet& set) {
  for (auto& e : set.entries) e.polarity = raw_polarity(e.text);

  // Cluster-plurality smoothing; a tie falls back to neutral.
  std::map<std::string, std::array<int, 3>> counts;
  for (const auto& e : set.entries) {
    ++counts[e.intent_id][static_cast<int>(e.polarity)];
  }
  for (auto& e : set.entries) {
    const auto& c = counts[e.intent_id];
    int pos = c[static_cast<int>(Polarity::kPositive)];
    int neg = c[static_cast<int>(Polarity::kNegative)];
    int neu = c[static_cast<int>(Polarity::kNeutral)];
    Polarity majority = Polarity::kNeutral;
    if (pos > neg && pos > neu) majority = Polarity::kPositive;
    else if (neg > pos && neg > neu) majority = Polarity::kNegative;
    e.polarity = majority;
  }
}

std::string ResponseSet::to_json() const {
  nlohmann::ordered_json j;
  j["version"] = "v1";
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json je;
    je["text"] = e.text;
    je["intent_id"] = e.intent_id;
    je["polarity"] = polarity_name(e.polarity);
    je["prior_logp"] = e.prior_logp;
    je["validated"] = e.validated;
    arr.push_back(std::move(je));
  }
  j["entries"] = std::move(arr);
  return j.dump(2) + "\n";
}

ResponseSet ResponseSet::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Code::kMalformedInput,
                std::string("response set is not valid JSON: ") + e.what());
  }
  if (!j.contains("version") || j["version"] != "v1") {
    throw Error(Error::Code::kMalformedInput,
                "response set: unsupported or missing version");
  }
  ResponseSet set;
  for (const auto& je : j.at("entries")) {
    ResponseEntry e;
    e.text = je.at("text").get<TokenList>();
    e.intent_id = je.at("intent_id").get<std::string>();
    e.polarity = polarity_from_name(je.at("polarity").get<std::string>());
    e.prior_logp = je.at("prior_logp").get<double>();
    e.validated = je.at("validated").get<bool>();
    set.entries.push_back(std::move(e));
  }
  return set;
}

void ResponseSet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Code::kIo, "could not open for write: " + path);
  out << to_json();
}

ResponseSet ResponseSet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Code::kIo, "could not open for read: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace replykit
