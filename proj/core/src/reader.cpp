// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ctxk/reader.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "ctxk/errors.hpp"
#include "ctxk/io.hpp"

namespace ctxk {

using nlohmann::json;

Vocab::Vocab(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  tokens_ = std::move(tokens);
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<int>(i) + 1);
  }
}

namespace {

void collect_tokens(const McInstance& inst, TokenizerMode mode,
                    std::set<std::string>& out) {
  for (auto& t : tokenize(inst.document, mode)) out.insert(std::move(t));
  for (auto& t : tokenize(inst.question, mode)) out.insert(std::move(t));
  for (const auto& o : inst.options) {
    for (auto& t : tokenize(o, mode)) out.insert(std::move(t));
  }
}

}  // namespace

Vocab Vocab::build(std::span<const McInstance> instances, TokenizerMode mode) {
  std::set<std::string> all;
  for (const auto& inst : instances) collect_tokens(inst, mode, all);
  return Vocab(std::vector<std::string>(all.begin(), all.end()));
}

Vocab Vocab::build(std::span<const std::vector<McInstance>> sets,
                   TokenizerMode mode) {
  std::set<std::string> all;
  for (const auto& set : sets) {
    for (const auto& inst : set) collect_tokens(inst, mode, all);
  }
  return Vocab(std::vector<std::string>(all.begin(), all.end()));
}

int Vocab::row(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

ReaderParams init_params(Vocab vocab, int dim, double scale, std::uint64_t seed,
                         TokenizerMode mode) {
  if (dim <= 0) throw std::invalid_argument("embedding dimension must be > 0");
  ReaderParams p;
  p.mode = mode;
  p.E.resize(static_cast<Eigen::Index>(vocab.rows()), dim);
  p.B.resize(dim, dim);
  p.vocab = std::move(vocab);
  GenRng rng(seed);
  for (Eigen::Index r = 0; r < p.E.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.E.cols(); ++c) p.E(r, c) = rng.uniform(-scale, scale);
  }
  for (Eigen::Index r = 0; r < p.B.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.B.cols(); ++c) p.B(r, c) = rng.uniform(-scale, scale);
  }
  p.bias = 0.0;
  return p;
}

ReaderParams zero_params(Vocab vocab, int dim, TokenizerMode mode) {
  if (dim <= 0) throw std::invalid_argument("embedding dimension must be > 0");
  ReaderParams p;
  p.mode = mode;
  p.E = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab.rows()), dim);
  p.B = Eigen::MatrixXd::Zero(dim, dim);
  p.vocab = std::move(vocab);
  return p;
}

namespace {

std::vector<int> rows_of(std::string_view text, const ReaderParams& params) {
  std::vector<int> rows;
  for (const auto& t : tokenize(text, params.mode)) rows.push_back(params.vocab.row(t));
  return rows;
}

}  // namespace

EncodedInstance encode_instance(const McInstance& inst, const ReaderParams& params) {
  if (inst.options.size() < 2) {
    throw std::invalid_argument("instance " + inst.id + " has fewer than two options");
  }
  EncodedInstance enc;
  enc.doc = rows_of(inst.document, params);
  const std::vector<int> q = rows_of(inst.question, params);
  for (const auto& option : inst.options) {
    std::vector<int> qo = q;
    const std::vector<int> o = rows_of(option, params);
    qo.insert(qo.end(), o.begin(), o.end());
    enc.question_option.push_back(std::move(qo));
  }
  enc.gold = inst.gold;
  return enc;
}

std::vector<EncodedInstance> encode_all(std::span<const McInstance> instances,
                                        const ReaderParams& params) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(encode_instance(inst, params));
  return out;
}

Eigen::VectorXd encode(std::span<const int> rows, const ReaderParams& params) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(params.dim());
  if (rows.empty()) return v;
  for (int r : rows) v += params.E.row(r).transpose();
  return v / static_cast<double>(rows.size());
}

Eigen::VectorXd encode(const std::vector<std::string>& tokens,
                       const ReaderParams& params) {
  std::vector<int> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) rows.push_back(params.vocab.row(t));
  return encode(std::span<const int>(rows), params);
}

void check_finite(const EncodedInstance& inst, const ReaderParams& params) {
  auto check_row = [&params](int r) {
    for (Eigen::Index c = 0; c < params.E.cols(); ++c) {
      if (!std::isfinite(params.E(r, c))) {
        throw NumericFault("non-finite parameter E[" + std::to_string(r) + "][" +
                           std::to_string(c) + "]");
      }
    }
  };
  for (int r : inst.doc) check_row(r);
  for (const auto& qo : inst.question_option) {
    for (int r : qo) check_row(r);
  }
  for (Eigen::Index r = 0; r < params.B.rows(); ++r) {
    for (Eigen::Index c = 0; c < params.B.cols(); ++c) {
      if (!std::isfinite(params.B(r, c))) {
        throw NumericFault("non-finite parameter B[" + std::to_string(r) + "][" +
                           std::to_string(c) + "]");
      }
    }
  }
  if (!std::isfinite(params.bias)) throw NumericFault("non-finite parameter bias");
}

std::vector<double> option_scores(const EncodedInstance& inst,
                                  const ReaderParams& params) {
  const Eigen::VectorXd u = encode(std::span<const int>(inst.doc), params);
  const Eigen::VectorXd btu = params.B.transpose() * u;
  std::vector<double> scores;
  scores.reserve(inst.options());
  for (const auto& qo : inst.question_option) {
    scores.push_back(btu.dot(encode(std::span<const int>(qo), params)) + params.bias);
  }
  return scores;
}

std::vector<double> softmax(std::span<const double> scores) {
  const double max = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    p[k] = std::exp(scores[k] - max);
    z += p[k];
  }
  for (double& x : p) x /= z;
  return p;
}

std::vector<double> option_probs(const EncodedInstance& inst,
                                 const ReaderParams& params) {
  check_finite(inst, params);
  const auto scores = option_scores(inst, params);
  return softmax(scores);
}

std::vector<double> option_probs(const McInstance& inst, const ReaderParams& params) {
  return option_probs(encode_instance(inst, params), params);
}

LabelVector LabelVector::hard(std::size_t options, std::size_t gold) {
  LabelVector h;
  h.values.assign(options, 0.0);
  h.values.at(gold) = 1.0;
  return h;
}

bool LabelVector::valid() const {
  if (values.empty()) return false;
  double sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

double cross_entropy(std::span<const double> probs, const LabelVector& labels) {
  if (probs.size() != labels.values.size()) {
    throw std::invalid_argument("label vector length does not match options");
  }
  double loss = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (labels.values[k] != 0.0) loss -= labels.values[k] * std::log(probs[k]);
  }
  return loss;
}

double loss_hard(const EncodedInstance& inst, const ReaderParams& params) {
  return loss_soft(inst, LabelVector::hard(inst.options(), inst.gold), params);
}

double loss_soft(const EncodedInstance& inst, const LabelVector& s,
                 const ReaderParams& params) {
  return cross_entropy(option_probs(inst, params), s);
}

std::vector<double> score_gradient(std::span<const double> probs,
                                   const LabelVector& labels) {
  std::vector<double> g(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) g[k] = probs[k] - labels.values[k];
  return g;
}

double Gradient::embedding(int row, int col) const {
  const auto it = std::lower_bound(rows.begin(), rows.end(), row);
  if (it == rows.end() || *it != row) return 0.0;
  return dE(it - rows.begin(), col);
}

Gradient gradient(std::span<const EncodedInstance> batch,
                  std::span<const LabelVector> labels,
                  const ReaderParams& params) {
  if (batch.size() != labels.size()) {
    throw std::invalid_argument("gradient: batch and labels differ in size");
  }
  const int d = params.dim();
  Gradient g;
  {
    std::vector<int> rows;
    for (const auto& inst : batch) {
      rows.insert(rows.end(), inst.doc.begin(), inst.doc.end());
      for (const auto& qo : inst.question_option) rows.insert(rows.end(), qo.begin(), qo.end());
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    g.rows = std::move(rows);
  }
  auto slot = [&g](int row) {
    return std::lower_bound(g.rows.begin(), g.rows.end(), row) - g.rows.begin();
  };
  g.dE = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.rows.size()), d);
  g.dB = Eigen::MatrixXd::Zero(d, d);
  if (batch.empty()) return g;

  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const EncodedInstance& inst = batch[i];
    const std::size_t m = inst.options();
    const Eigen::VectorXd u = encode(std::span<const int>(inst.doc), params);
    Eigen::MatrixXd w(d, static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
      w.col(static_cast<Eigen::Index>(k)) =
          encode(std::span<const int>(inst.question_option[k]), params);
    }
    const Eigen::VectorXd btu = params.B.transpose() * u;
    std::vector<double> scores(m);
    for (std::size_t k = 0; k < m; ++k) {
      scores[k] = btu.dot(w.col(static_cast<Eigen::Index>(k))) + params.bias;
    }
    const auto p = softmax(scores);
    const double loss = cross_entropy(p, labels[i]);
    if (!std::isfinite(loss)) {
      throw NumericFault("non-finite loss at batch position " + std::to_string(i));
    }
    g.loss += loss * scale;
    const auto ds = score_gradient(p, labels[i]);
    Eigen::VectorXd dsv(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) dsv(static_cast<Eigen::Index>(k)) = ds[k] * scale;

    const Eigen::VectorXd wg = w * dsv;  // sum_k ds_k w_k
    g.dB.noalias() += u * wg.transpose();
    g.dbias += dsv.sum();
    if (!inst.doc.empty()) {
      const Eigen::RowVectorXd du =
          (params.B * wg).transpose() / static_cast<double>(inst.doc.size());
      for (int r : inst.doc) g.dE.row(slot(r)) += du;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const auto& qo = inst.question_option[k];
      if (qo.empty()) continue;
      const Eigen::RowVectorXd dw =
          (dsv(static_cast<Eigen::Index>(k)) / static_cast<double>(qo.size())) *
          btu.transpose();
      for (int r : qo) g.dE.row(slot(r)) += dw;
    }
  }
  return g;
}

double batch_loss(std::span<const EncodedInstance> batch,
                  std::span<const LabelVector> labels,
                  const ReaderParams& params) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += cross_entropy(softmax(option_scores(batch[i], params)), labels[i]);
  }
  return total / static_cast<double>(batch.size());
}

void apply_gradient(ReaderParams& params, const Gradient& grad, double lr) {
  for (std::size_t i = 0; i < grad.rows.size(); ++i) {
    params.E.row(grad.rows[i]) -= lr * grad.dE.row(static_cast<Eigen::Index>(i));
  }
  params.B -= lr * grad.dB;
  params.bias -= lr * grad.dbias;
}

std::string GradCheckReport::describe() const {
  std::ostringstream os;
  os << (passed ? "pass" : "FAIL") << " checked=" << checked
     << " max_rel_error=" << max_rel_error << " worst=" << worst.param << "["
     << worst.row << "][" << worst.col << "] analytic=" << worst.analytic
     << " numeric=" << worst.numeric;
  return os.str();
}

GradCheckReport check_gradients(const ReaderParams& params,
                                std::span<const EncodedInstance> batch,
                                std::span<const LabelVector> labels,
                                const Gradient& analytic,
                                const GradCheckOptions& opt) {
  if (!(opt.eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  struct Coord {
    int kind;  // 0 = E, 1 = B, 2 = bias
    int row;
    int col;
  };
  std::vector<Coord> coords;
  for (int r : analytic.rows) {
    for (int c = 0; c < params.dim(); ++c) coords.push_back({0, r, c});
  }
  for (int r = 0; r < params.dim(); ++r) {
    for (int c = 0; c < params.dim(); ++c) coords.push_back({1, r, c});
  }
  coords.push_back({2, 0, 0});
  if (opt.max_coords > 0 && coords.size() > opt.max_coords) {
    GenRng rng(opt.seed);
    std::vector<Coord> picked;
    for (std::size_t idx : rng.sample_indices(coords.size(), opt.max_coords)) {
      picked.push_back(coords[idx]);
    }
    coords = std::move(picked);
  }

  ReaderParams work = params;
  auto ref = [&work](const Coord& c) -> double& {
    if (c.kind == 0) return work.E(c.row, c.col);
    if (c.kind == 1) return work.B(c.row, c.col);
    return work.bias;
  };
  GradCheckReport report;
  report.passed = true;
  for (const Coord& c : coords) {
    double& x = ref(c);
    const double saved = x;
    x = saved + opt.eps;
    const double up = batch_loss(batch, labels, work);
    x = saved - opt.eps;
    const double down = batch_loss(batch, labels, work);
    x = saved;
    const double numeric = (up - down) / (2.0 * opt.eps);
    const double a = c.kind == 0   ? analytic.embedding(c.row, c.col)
                     : c.kind == 1 ? analytic.dB(c.row, c.col)
                                   : analytic.dbias;
    const double denom = std::max({std::abs(a), std::abs(numeric), opt.floor});
    const double rel = std::abs(a - numeric) / denom;
    ++report.checked;
    if (rel > report.max_rel_error || report.checked == 1) {
      report.max_rel_error = rel;
      report.worst = {c.kind == 0 ? "E" : c.kind == 1 ? "B" : "bias", c.row, c.col,
                      a, numeric, rel};
    }
  }
  report.passed = report.max_rel_error < opt.tol;
  return report;
}

GradCheckReport check_gradients(const ReaderParams& params,
                                std::span<const EncodedInstance> batch,
                                std::span<const LabelVector> labels,
                                const GradCheckOptions& opt) {
  return check_gradients(params, batch, labels, gradient(batch, labels, params), opt);
}

namespace {

constexpr const char* kCheckpointFormat = "ctxk.reader";

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                 const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw FormatError(std::string("checkpoint: bad row count for ") + name);
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw FormatError(std::string("checkpoint: bad column count for ") + name);
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string checkpoint_to_json(const ReaderParams& params,
                               const std::string& config_hash) {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = io::kSchemaVersion;
  j["config_hash"] = config_hash;
  j["tokenizer"] = std::string(to_string(params.mode));
  j["d"] = params.dim();
  j["bias"] = params.bias;
  j["vocab"] = params.vocab.tokens();
  j["E"] = matrix_to_json(params.E);
  j["B"] = matrix_to_json(params.B);
  return j.dump();
}

ReaderParams checkpoint_from_json(std::string_view text, std::string* config_hash) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw FormatError("not a reader checkpoint");
    }
    if (j.at("version").get<int>() != io::kSchemaVersion) {
      throw FormatError("unsupported checkpoint version");
    }
    ReaderParams p;
    const auto mode = parse_tokenizer_mode(j.at("tokenizer").get<std::string>());
    if (!mode) throw FormatError("checkpoint: unknown tokenizer");
    p.mode = *mode;
    p.vocab = Vocab(j.at("vocab").get<std::vector<std::string>>());
    const int d = j.at("d").get<int>();
    if (d <= 0) throw FormatError("checkpoint: d must be > 0");
    p.E = matrix_from_json(j.at("E"), static_cast<Eigen::Index>(p.vocab.rows()), d, "E");
    p.B = matrix_from_json(j.at("B"), d, d, "B");
    p.bias = j.at("bias").get<double>();
    if (config_hash != nullptr) *config_hash = j.value("config_hash", std::string());
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const ReaderParams& params,
                     const std::string& config_hash) {
  io::write_file(path, checkpoint_to_json(params, config_hash) + "\n");
}

ReaderParams load_checkpoint(const std::string& path, std::string* config_hash) {
  return checkpoint_from_json(io::read_file(path), config_hash);
}

}  // namespace ctxk
