#include <cmath>
#include <cstring>

#include "json.hpp"
#include "replykit/errors.hpp"
#include "replykit/model_io.hpp"
#include "replykit/rng.hpp"
#include "replykit/scoring.hpp"

namespace replykit {

namespace {

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

const char* kGateNames[4] = {"g", "i", "f", "o"};

}  // namespace

struct RecurrentScorer::CellState : ScorerModel::State {
  Eigen::VectorXd cell;        // hidden_dim
  Eigen::VectorXd projection;  // projection_dim
};

RecurrentScorer::RecurrentScorer(Vocabulary vocab, RecurrentConfig config)
    : vocab_(std::move(vocab)), config_(config) {
  if (config_.embed_dim < 1 || config_.hidden_dim < 1 ||
      config_.projection_dim < 1 || config_.clip_value <= 0.0) {
    throw Error(Error::Code::kBadConfig, "invalid recurrent configuration");
  }
  const Eigen::Index V = static_cast<Eigen::Index>(vocab_.size());
  const Eigen::Index e = config_.embed_dim;
  const Eigen::Index h = config_.hidden_dim;
  const Eigen::Index p = config_.projection_dim;
  params_.add("embed", e, V);
  for (const char* g : kGateNames) {
    params_.add(std::string("w_") + g, h, e);
    params_.add(std::string("r_") + g, h, p);
    params_.add(std::string("b_") + g, h, 1);
  }
  params_.add("proj", p, h);
  params_.add("out_w", V, p);
  params_.add("out_b", V, 1);
}

ScorerModel::Decode RecurrentScorer::advance(const Eigen::VectorXd& c_prev,
                                             const Eigen::VectorXd& p_prev,
                                             TokenId token) const {
  Eigen::VectorXd x = params_.mat("embed").col(token);
  auto gate_pre = [&](const char* g) {
    return (params_.mat(std::string("w_") + g) * x +
            params_.mat(std::string("r_") + g) * p_prev +
            params_.vec(std::string("b_") + g))
        .eval();
  };
  Eigen::ArrayXd g = gate_pre("g").array().tanh();
  Eigen::ArrayXd i = sigmoid(gate_pre("i").array());
  Eigen::ArrayXd f = sigmoid(gate_pre("f").array());
  Eigen::ArrayXd o = sigmoid(gate_pre("o").array());

  auto state = std::make_shared<CellState>();
  state->cell = f * c_prev.array() + i * g;
  Eigen::ArrayXd hidden = o * state->cell.array().tanh();
  state->projection = params_.mat("proj") * hidden.matrix();

  Eigen::VectorXd logits =
      params_.mat("out_w") * state->projection + params_.vec("out_b");
  Decode out;
  out.log_probs = logits.array() - log_sum_exp(logits);
  out.state = std::move(state);
  return out;
}

ScorerModel::Decode RecurrentScorer::start_state(
    std::span<const TokenId> original) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(config_.hidden_dim);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(config_.projection_dim);
  Decode d;
  for (TokenId tok : original) {
    d = advance(c, p, tok);
    const auto& s = static_cast<const CellState&>(*d.state);
    c = s.cell;
    p = s.projection;
  }
  return advance(c, p, vocab_.specials().eom);
}

ScorerModel::Decode RecurrentScorer::step(const StatePtr& state,
                                          TokenId token) const {
  const auto& s = dynamic_cast<const CellState&>(*state);
  return advance(s.cell, s.projection, token);
}

double RecurrentScorer::pair_loss(std::span<const TokenId> original,
                                  std::span<const TokenId> response,
                                  TensorPack* grad) const {
  if (response.empty()) {
    throw Error(Error::Code::kEmptyResponse, "cannot train on empty response");
  }
  const TokenId eom = vocab_.specials().eom;
  const Eigen::Index h = config_.hidden_dim;
  const Eigen::Index p = config_.projection_dim;

  // Inputs: original, EOM, response tokens. The steps fed with EOM and the
  // response predict the response tokens and the final EOM.
  std::vector<TokenId> inputs(original.begin(), original.end());
  inputs.push_back(eom);
  inputs.insert(inputs.end(), response.begin(), response.end());
  const std::size_t T = inputs.size();
  const std::size_t first_target = original.size();
  auto target_of = [&](std::size_t t) -> TokenId {
    std::size_t j = t - first_target;
    return j < response.size() ? response[j] : eom;
  };

  struct StepCache {
    Eigen::ArrayXd g, i, f, o, c, th;
    Eigen::VectorXd c_prev, p_prev, pp, hidden;
    Eigen::VectorXd probs;  // target steps only
  };
  std::vector<StepCache> cache(T);

  const auto embed = params_.mat("embed");
  const auto proj = params_.mat("proj");
  const auto out_w = params_.mat("out_w");
  const auto out_b = params_.vec("out_b");
  Eigen::Map<const Eigen::MatrixXd> w[4] = {
      params_.mat("w_g"), params_.mat("w_i"), params_.mat("w_f"),
      params_.mat("w_o")};
  Eigen::Map<const Eigen::MatrixXd> r[4] = {
      params_.mat("r_g"), params_.mat("r_i"), params_.mat("r_f"),
      params_.mat("r_o")};
  Eigen::Map<const Eigen::VectorXd> b[4] = {
      params_.vec("b_g"), params_.vec("b_i"), params_.vec("b_f"),
      params_.vec("b_o")};

  double loss = 0.0;
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd p_prev = Eigen::VectorXd::Zero(p);
  for (std::size_t t = 0; t < T; ++t) {
    StepCache& s = cache[t];
    s.c_prev = c_prev;
    s.p_prev = p_prev;
    Eigen::VectorXd x = embed.col(inputs[t]);
    Eigen::VectorXd pre[4];
    for (int k = 0; k < 4; ++k) pre[k] = w[k] * x + r[k] * p_prev + b[k];
    s.g = pre[0].array().tanh();
    s.i = sigmoid(pre[1].array());
    s.f = sigmoid(pre[2].array());
    s.o = sigmoid(pre[3].array());
    s.c = s.f * c_prev.array() + s.i * s.g;
    s.th = s.c.tanh();
    s.hidden = (s.o * s.th).matrix();
    s.pp = proj * s.hidden;
    if (t >= first_target) {
      Eigen::VectorXd logits = out_w * s.pp + out_b;
      double lse = log_sum_exp(logits);
      loss -= logits[target_of(t)] - lse;
      s.probs = (logits.array() - lse).exp();
    }
    c_prev = s.c.matrix();
    p_prev = s.pp;
  }

  if (grad != nullptr) {
    auto g_embed = grad->mat("embed");
    auto g_proj = grad->mat("proj");
    auto g_out_w = grad->mat("out_w");
    auto g_out_b = grad->vec("out_b");
    Eigen::Map<Eigen::MatrixXd> gw[4] = {grad->mat("w_g"), grad->mat("w_i"),
                                         grad->mat("w_f"), grad->mat("w_o")};
    Eigen::Map<Eigen::MatrixXd> gr[4] = {grad->mat("r_g"), grad->mat("r_i"),
                                         grad->mat("r_f"), grad->mat("r_o")};
    Eigen::Map<Eigen::VectorXd> gb[4] = {grad->vec("b_g"), grad->vec("b_i"),
                                         grad->vec("b_f"), grad->vec("b_o")};

    Eigen::VectorXd d_pp_next = Eigen::VectorXd::Zero(p);
    Eigen::ArrayXd d_c_next = Eigen::ArrayXd::Zero(h);
    for (std::size_t ti = T; ti-- > 0;) {
      const StepCache& s = cache[ti];
      Eigen::VectorXd d_pp = d_pp_next;
      if (ti >= first_target) {
        Eigen::VectorXd d_logits = s.probs;
        d_logits[target_of(ti)] -= 1.0;
        g_out_w.noalias() += d_logits * s.pp.transpose();
        g_out_b.noalias() += d_logits;
        d_pp.noalias() += out_w.transpose() * d_logits;
      }
      g_proj.noalias() += d_pp * s.hidden.transpose();
      Eigen::ArrayXd d_hidden = (proj.transpose() * d_pp).array();
      Eigen::ArrayXd d_o = d_hidden * s.th;
      Eigen::ArrayXd d_th = d_hidden * s.o;
      Eigen::ArrayXd d_c = d_th * (1.0 - s.th.square()) + d_c_next;
      Eigen::ArrayXd d_f = d_c * s.c_prev.array();
      Eigen::ArrayXd d_i = d_c * s.g;
      Eigen::ArrayXd d_g = d_c * s.i;
      d_c_next = d_c * s.f;

      Eigen::VectorXd d_pre[4];
      d_pre[0] = (d_g * (1.0 - s.g.square())).matrix();
      d_pre[1] = (d_i * s.i * (1.0 - s.i)).matrix();
      d_pre[2] = (d_f * s.f * (1.0 - s.f)).matrix();
      d_pre[3] = (d_o * s.o * (1.0 - s.o)).matrix();

      Eigen::VectorXd x = embed.col(inputs[ti]);
      Eigen::VectorXd d_x = Eigen::VectorXd::Zero(x.size());
      d_pp_next.setZero();
      for (int k = 0; k < 4; ++k) {
        gw[k].noalias() += d_pre[k] * x.transpose();
        gr[k].noalias() += d_pre[k] * s.p_prev.transpose();
        gb[k].noalias() += d_pre[k];
        d_x.noalias() += w[k].transpose() * d_pre[k];
        d_pp_next.noalias() += r[k].transpose() * d_pre[k];
      }
      g_embed.col(inputs[ti]) += d_x;
    }
  }
  return loss;
}

TrainedRecurrent train_recurrent(const std::vector<TokenizedPair>& pairs,
                                 const Vocabulary& vocab,
                                 const RecurrentConfig& config) {
  if (pairs.empty()) {
    throw Error(Error::Code::kEmptyCorpus, "no training pairs");
  }
  TrainedRecurrent out;
  out.model = std::make_unique<RecurrentScorer>(vocab, config);

  Rng rng(config.rng_seed);
  Eigen::VectorXd& flat = out.model->params().flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    flat[i] = rng.uniform(-0.08, 0.08);
  }

  AdaGrad opt(flat.size(), config.learning_rate, config.clip_value);
  TensorPack grad = out.model->params().zeros_like();
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double total_loss = 0.0;
    std::size_t total_tokens = 0;
    for (std::size_t idx : order) {
      const TokenizedPair& pair = pairs[idx];
      if (pair.response_ids.empty()) continue;
      grad.flat().setZero();
      total_loss +=
          out.model->pair_loss(pair.original_ids, pair.response_ids, &grad);
      total_tokens += pair.response_ids.size() + 1;
      double norm = opt.apply(flat, grad.flat());
      out.stats.max_post_clip_norm =
          std::max(out.stats.max_post_clip_norm, norm);
    }
    double epoch_loss =
        total_tokens > 0 ? total_loss / static_cast<double>(total_tokens) : 0.0;
    if (!std::isfinite(epoch_loss)) {
      throw Error(Error::Code::kDivergedLoss,
                  "training loss diverged at epoch " + std::to_string(epoch));
    }
    out.stats.epoch_token_loss.push_back(epoch_loss);
  }
  return out;
}

void RecurrentScorer::save(const std::string& path) const {
  ModelFile file;
  file.kind = "recurrent";
  file.vocab_fingerprint = vocab_.fingerprint();
  nlohmann::ordered_json meta;
  meta["embed_dim"] = config_.embed_dim;
  meta["hidden_dim"] = config_.hidden_dim;
  meta["projection_dim"] = config_.projection_dim;
  meta["epochs"] = config_.epochs;
  meta["learning_rate"] = config_.learning_rate;
  meta["clip_value"] = config_.clip_value;
  meta["rng_seed"] = config_.rng_seed;
  file.meta_json = meta.dump();
  for (const auto& spec : params_.specs()) {
    TensorBlob blob;
    blob.name = spec.name;
    blob.shape = {static_cast<std::uint64_t>(spec.rows),
                  static_cast<std::uint64_t>(spec.cols)};
    auto m = params_.mat(spec.name);
    blob.data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index row = 0; row < m.rows(); ++row) {
      for (Eigen::Index col = 0; col < m.cols(); ++col) {
        blob.data.push_back(static_cast<float>(m(row, col)));
      }
    }
    file.tensors.push_back(std::move(blob));
  }
  write_model_file(path, file);
}

std::unique_ptr<RecurrentScorer> RecurrentScorer::load(
    const std::string& path, const Vocabulary& vocab) {
  ModelFile file = read_model_file(path);
  check_model_header(file, "recurrent", vocab.fingerprint());
  nlohmann::json meta = nlohmann::json::parse(file.meta_json);
  RecurrentConfig config;
  config.embed_dim = meta.at("embed_dim").get<int>();
  config.hidden_dim = meta.at("hidden_dim").get<int>();
  config.projection_dim = meta.at("projection_dim").get<int>();
  config.epochs = meta.at("epochs").get<int>();
  config.learning_rate = meta.at("learning_rate").get<double>();
  config.clip_value = meta.at("clip_value").get<double>();
  config.rng_seed = meta.at("rng_seed").get<std::uint64_t>();

  auto model = std::make_unique<RecurrentScorer>(vocab, config);
  for (const auto& spec : model->params_.specs()) {
    const TensorBlob& blob = file.tensor(spec.name);
    if (blob.shape.size() != 2 ||
        blob.shape[0] != static_cast<std::uint64_t>(spec.rows) ||
        blob.shape[1] != static_cast<std::uint64_t>(spec.cols)) {
      throw Error(Error::Code::kBadModelFile,
                  "tensor " + spec.name + " has unexpected shape");
    }
    auto m = model->params_.mat(spec.name);
    std::size_t k = 0;
    for (Eigen::Index row = 0; row < m.rows(); ++row) {
      for (Eigen::Index col = 0; col < m.cols(); ++col) {
        m(row, col) = static_cast<double>(blob.data[k++]);
      }
    }
  }
  return model;
}

}  // namespace replykit
