#pragma once

#include "accelpred/model.hpp"

namespace acp {

// Attention-enhanced LSTM encoder / decoder producing the whole horizon in
// one pass. The encoder's final (masked) hidden state queries attention to
// build the decoder's initial hidden state; every decoding step re-queries
// attention with the current decoder state and consumes [previous output;
// context].
class Seq2SeqModel final : public Model {
 public:
  Seq2SeqModel(const ModelConfig& config, const Normalizer& norm, Rng init);
  ForwardPlan make_plan(Rng& rng, bool training) const override;
  double train_sample(const PredictionTask& task, std::span<const double> target,
                      const ForwardPlan& plan) override;

 protected:
  std::vector<double> forward_normalized(const PredictionTask& task,
                                         std::span<const double> target_norm,
                                         const ForwardPlan& plan) const override;
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names) override;

 private:
  struct Trace;
  std::vector<double> forward(const PredictionTask& task,
                              std::span<const double> target_norm,
                              const ForwardPlan& plan, Trace* trace) const;

  LstmParams encoder_;
  AttentionParams attention_;
  LstmParams decoder_;
  LinearParams out_;
};

// Vanilla recurrent encoder; FC head emits all horizon values at once.
class RnnModel final : public Model {
 public:
  RnnModel(const ModelConfig& config, const Normalizer& norm, Rng init);
  ForwardPlan make_plan(Rng& rng, bool training) const override;
  double train_sample(const PredictionTask& task, std::span<const double> target,
                      const ForwardPlan& plan) override;

 protected:
  std::vector<double> forward_normalized(const PredictionTask& task,
                                         std::span<const double> target_norm,
                                         const ForwardPlan& plan) const override;
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names) override;

 private:
  struct Trace;
  std::vector<double> forward(const PredictionTask& task, const ForwardPlan& plan,
                              Trace* trace) const;

  RnnParams rnn_;
  LinearParams head_;
};

// MLP over the flattened input sequence.
class AnnModel final : public Model {
 public:
  AnnModel(const ModelConfig& config, const Normalizer& norm, Rng init);
  ForwardPlan make_plan(Rng& rng, bool training) const override;
  double train_sample(const PredictionTask& task, std::span<const double> target,
                      const ForwardPlan& plan) override;

 protected:
  std::vector<double> forward_normalized(const PredictionTask& task,
                                         std::span<const double> target_norm,
                                         const ForwardPlan& plan) const override;
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names) override;

 private:
  struct Trace;
  std::vector<double> forward(const PredictionTask& task, const ForwardPlan& plan,
                              Trace* trace) const;

  LinearParams fc1_, fc2_, head_;
};

// Two valid-padding 1-D convolutions with tanh, flattened into an FC head.
class CnnModel final : public Model {
 public:
  CnnModel(const ModelConfig& config, const Normalizer& norm, Rng init);
  ForwardPlan make_plan(Rng& rng, bool training) const override;
  double train_sample(const PredictionTask& task, std::span<const double> target,
                      const ForwardPlan& plan) override;

 protected:
  std::vector<double> forward_normalized(const PredictionTask& task,
                                         std::span<const double> target_norm,
                                         const ForwardPlan& plan) const override;
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names) override;

 private:
  struct Trace;
  std::vector<double> forward(const PredictionTask& task, const ForwardPlan& plan,
                              Trace* trace) const;
  std::size_t flat_size() const;

  Conv1dParams conv1_, conv2_;
  LinearParams head_;
};

// Bidirectional LSTM encoder; FC head on the concatenated final states.
class BiLstmModel final : public Model {
 public:
  BiLstmModel(const ModelConfig& config, const Normalizer& norm, Rng init);
  ForwardPlan make_plan(Rng& rng, bool training) const override;
  double train_sample(const PredictionTask& task, std::span<const double> target,
                      const ForwardPlan& plan) override;

 protected:
  std::vector<double> forward_normalized(const PredictionTask& task,
                                         std::span<const double> target_norm,
                                         const ForwardPlan& plan) const override;
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names) override;

 private:
  struct Trace;
  std::vector<double> forward(const PredictionTask& task, const ForwardPlan& plan,
                              Trace* trace) const;

  LstmParams fwd_, bwd_;
  LinearParams head_;
};

}  // namespace acp
