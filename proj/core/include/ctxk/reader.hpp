// Copyright 2026 The ctxk Authors.
// SPDX-License-Identifier: Apache-2.0

// A small multiple-choice reader.
//
//   u   = mean embedding of the document tokens
//   w_k = mean embedding of the question tokens followed by option k
//   score_k = u^T B w_k + bias
//   p(k|t)  = softmax(score)_k
//
// Unknown tokens map to embedding row 0. An empty token list encodes to the
// zero vector.

#ifndef CTXK_READER_HPP_
#define CTXK_READER_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxk/instances.hpp"
#include "ctxk/tokenize.hpp"

namespace ctxk {

class Vocab {
 public:
  Vocab() = default;
  // Tokens are deduplicated and sorted, so the index assignment depends only
  // on the token set.
  explicit Vocab(std::vector<std::string> tokens);

  static Vocab build(std::span<const McInstance> instances, TokenizerMode mode);
  static Vocab build(std::span<const std::vector<McInstance>> sets,
                     TokenizerMode mode);

  // Embedding row of a token; 0 when unknown.
  int row(const std::string& token) const;
  // Number of embedding rows (known tokens + the unknown row).
  std::size_t rows() const { return tokens_.size() + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct ReaderParams {
  Vocab vocab;
  TokenizerMode mode = TokenizerMode::kUnicodeWords;
  Eigen::MatrixXd E;  // rows() x d
  Eigen::MatrixXd B;  // d x d
  double bias = 0.0;

  int dim() const { return static_cast<int>(B.rows()); }
};

// E and B uniform in (-scale, scale), bias 0.
ReaderParams init_params(Vocab vocab, int dim, double scale, std::uint64_t seed,
                         TokenizerMode mode = TokenizerMode::kUnicodeWords);
ReaderParams zero_params(Vocab vocab, int dim,
                         TokenizerMode mode = TokenizerMode::kUnicodeWords);

// Token rows of an instance, computed once per (instance, vocab).
struct EncodedInstance {
  std::vector<int> doc;
  std::vector<std::vector<int>> question_option;
  std::size_t gold = 0;
  std::size_t options() const { return question_option.size(); }
};

EncodedInstance encode_instance(const McInstance& inst,
                                const ReaderParams& params);
std::vector<EncodedInstance> encode_all(std::span<const McInstance> instances,
                                        const ReaderParams& params);

Eigen::VectorXd encode(std::span<const int> rows, const ReaderParams& params);
Eigen::VectorXd encode(const std::vector<std::string>& tokens,
                       const ReaderParams& params);

// Throws NumericFault naming the first non-finite entry the instance reads.
void check_finite(const EncodedInstance& inst, const ReaderParams& params);

std::vector<double> option_scores(const EncodedInstance& inst,
                                  const ReaderParams& params);
// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> scores);
std::vector<double> option_probs(const EncodedInstance& inst,
                                 const ReaderParams& params);
std::vector<double> option_probs(const McInstance& inst,
                                 const ReaderParams& params);

struct LabelVector {
  std::vector<double> values;

  static LabelVector hard(std::size_t options, std::size_t gold);
  // Non-negative, sums to 1 within 1e-9.
  bool valid() const;
};

// Cross-entropy against a label vector: -sum_k s_k log p_k.
double cross_entropy(std::span<const double> probs, const LabelVector& labels);
// -log p(gold).
double loss_hard(const EncodedInstance& inst, const ReaderParams& params);
double loss_soft(const EncodedInstance& inst, const LabelVector& s,
                 const ReaderParams& params);

// dL/dscore for softmax cross-entropy: p - s.
std::vector<double> score_gradient(std::span<const double> probs,
                                   const LabelVector& labels);

struct Gradient {
  // Embedding rows the batch reads, ascending; dE row i belongs to rows[i].
  std::vector<int> rows;
  Eigen::MatrixXd dE;
  Eigen::MatrixXd dB;
  double dbias = 0.0;
  double loss = 0.0;

  // Gradient entry of E(row, col); 0 for rows outside `rows`.
  double embedding(int row, int col) const;
};

// Mean loss over the batch and its analytic gradient. Instances are
// accumulated in index order.
Gradient gradient(std::span<const EncodedInstance> batch,
                  std::span<const LabelVector> labels,
                  const ReaderParams& params);

double batch_loss(std::span<const EncodedInstance> batch,
                  std::span<const LabelVector> labels,
                  const ReaderParams& params);

// params -= lr * grad. Only touched embedding rows are updated.
void apply_gradient(ReaderParams& params, const Gradient& grad, double lr);

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  // Upper bound on checked coordinates; 0 checks every coordinate the batch
  // touches.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCoordinate {
  std::string param;  // "E", "B" or "bias"
  int row = 0;
  int col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  bool passed = false;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  GradCoordinate worst;

  std::string describe() const;
};

// Compares `analytic` against central differences of batch_loss.
GradCheckReport check_gradients(const ReaderParams& params,
                                std::span<const EncodedInstance> batch,
                                std::span<const LabelVector> labels,
                                const Gradient& analytic,
                                const GradCheckOptions& opt = {});
GradCheckReport check_gradients(const ReaderParams& params,
                                std::span<const EncodedInstance> batch,
                                std::span<const LabelVector> labels,
                                const GradCheckOptions& opt = {});

// Checkpoint: JSON with format tag, version, vocab, d, E, B, bias,
// tokenizer and config hash.
std::string checkpoint_to_json(const ReaderParams& params,
                               const std::string& config_hash);
ReaderParams checkpoint_from_json(std::string_view text,
                                  std::string* config_hash = nullptr);
void save_checkpoint(const std::string& path, const ReaderParams& params,
                     const std::string& config_hash);
ReaderParams load_checkpoint(const std::string& path,
                             std::string* config_hash = nullptr);

}  // namespace ctxk

#endif  // CTXK_READER_HPP_
