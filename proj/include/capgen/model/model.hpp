// Copyright 2026 The capgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "capgen/diff/checkpoint.hpp"
#include "capgen/diff/graph.hpp"
#include "capgen/diff/optim.hpp"
#include "capgen/diff/rng.hpp"
#include "capgen/diff/tensor.hpp"
#include "capgen/rewards/rewards.hpp"
#include "capgen/signal/signal.hpp"

namespace capgen::model {

/// Which modality streams feed the decoders.
enum class FusionMode { bimodal, audio_only, vision_only };

struct ModelConfig {
  int d_latent = 128;
  int d_audio_in = 16;
  int d_video_in = 32;
  int d_text = 24;
  int heads = 4;
  int layers = 2;
  int d_goal = 16;
  int vocab_size = 0;
  int max_len = 16;
  double sigma_rel = 0.1;  // exploration noise std, relative to each goal entry
  FusionMode fusion = FusionMode::bimodal;
  uint64_t seed = 1;

  void validate() const;
};

/// Reserved token ids shared by the model and the dataset format.
struct SpecialTokens {
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int count = 3;
};

/// One training example: feature sequences plus the content token ids of the
/// caption (no specials) and the clause boundaries over those positions.
struct TrainSample {
  diff::Tensor audio;
  diff::Tensor video;
  std::vector<int> caption;
  rewards::SegmentBoundaries bounds;
};

struct TrainStats {
  double loss = 0.0;
  double mean_reward = 0.0;
  double token_accuracy = 0.0;
};

enum class HrlLoss { biased, weighted };

/// Sequence captioner with per-modality self-attention encoders, bimodal
/// cross-attention, twin decoders fused by a learned sigmoid gate, a
/// goal-generating head held constant within critic segments, and a
/// goal-attending classification head.
class CaptionModel {
 public:
  CaptionModel(const ModelConfig& cfg, std::vector<std::string> vocab,
               rewards::CriticRule critic);

  const ModelConfig& config() const { return cfg_; }
  diff::ParamStore& params() { return store_; }
  const diff::ParamStore& params() const { return store_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const rewards::CriticRule& critic() const { return critic_; }

  /// One forward pass: the graph plus the lazily bound parameter leaves.
  struct Forward {
    diff::Graph g;
    std::vector<diff::Var> bound;
  };
  Forward make_forward() const;

  struct Encoded {
    diff::Var video_att_audio;  // [L_V x d_latent] (bimodal mode)
    diff::Var audio_att_video;  // [L_A x d_latent] (bimodal mode)
    diff::Var mono;             // single-modality modes
  };
  Encoded encode(Forward& f, const diff::Tensor& audio, const diff::Tensor& video) const;

  struct Decoded {
    diff::Var features;   // [T x d_latent]
    diff::Var caption_va; // last layer's video-stream features (bimodal)
    diff::Var caption_av; // last layer's audio-stream features (bimodal)
    diff::Var fused;      // last layer's gated combination of the two streams
    double gate = 0.5;    // sigmoid(k) of this decoder
  };
  Decoded decode_worker(Forward& f, const Encoded& enc, const std::vector<int>& input_ids) const;
  Decoded decode_manager(Forward& f, const Encoded& enc, const std::vector<int>& input_ids) const;

  struct Goals {
    diff::Var rows;               // [T x d_goal], constant within segments
    std::vector<int> start_rows;  // row index each position copies from
  };
  /// start_of_position maps every decoder position to its segment start row.
  Goals generate_goals(Forward& f, diff::Var manager_features,
                       const std::vector<int>& start_of_position, bool explore,
                       diff::Rng* rng) const;

  struct WorkerOutput {
    diff::Var log_probs;        // [T x vocab]
    diff::Var fused_with_goal;  // [T x (d_latent + d_goal)]
  };
  WorkerOutput classify(Forward& f, diff::Var worker_features, const Goals& goals) const;

  /// Full teacher-forced pipeline over content ids; input is
  /// [bos, y_0..y_{n-1}], targets are [y_0..y_{n-1}, eos].
  struct PipelineOutput {
    WorkerOutput worker;
    std::vector<int> targets;
  };
  PipelineOutput forward_teacher_forced(Forward& f, const TrainSample& sample, bool explore,
                                        diff::Rng* rng) const;

  /// Argmax decoding from the start token until the end token or max_len.
  std::vector<int> greedy_decode(const diff::Tensor& audio, const diff::Tensor& video,
                                 int max_len) const;

  TrainStats warmstart_step(const std::vector<TrainSample>& batch, const signal::SignalConfig& cfg,
                            diff::Sgd& opt);
  TrainStats train_worker_step(const std::vector<TrainSample>& batch,
                               const signal::SignalConfig& cfg, double gamma_worker,
                               diff::Sgd& opt, diff::Rng& rng, HrlLoss loss_kind = HrlLoss::biased,
                               double norm_const = 1.0);
  TrainStats train_manager_step(const std::vector<TrainSample>& batch,
                                const signal::SignalConfig& cfg, double gamma_manager,
                                diff::Sgd& opt, diff::Rng& rng,
                                HrlLoss loss_kind = HrlLoss::biased, double norm_const = 1.0);

  /// Parameter partition used by the freeze-alternation protocol.
  static bool is_manager_side(const std::string& name);
  static bool is_baseline(const std::string& name);

  diff::NamedTensors snapshot() const;
  void restore(const diff::NamedTensors& tensors);

 private:
  struct Attn {
    int wq, wk, wv, wo;
  };
  struct Block {
    Attn attn;
    int ln1_g, ln1_b;
    int ff1_w, ff1_b, ff2_w, ff2_b;
    int ln2_g, ln2_b;
  };
  struct DecoderLayer {
    Attn self_attn;
    int ln1_g, ln1_b;
    Attn cross_va, cross_av, cross_mono;
    int ln2_g, ln2_b;
    int ff1_w, ff1_b, ff2_w, ff2_b;
    int ln3_g, ln3_b;
  };
  struct Decoder {
    std::vector<DecoderLayer> layers;
    int gate_k = -1;
  };

  diff::Var p(Forward& f, int id) const;
  diff::Var mha(Forward& f, diff::Var q_in, diff::Var kv_in, const Attn& a, bool causal) const;
  diff::Var feed_forward(Forward& f, diff::Var x, int w1, int b1, int w2, int b2) const;
  diff::Var self_block(Forward& f, diff::Var x, const Block& b, bool causal) const;
  diff::Var cross_block(Forward& f, diff::Var q, diff::Var kv, const Block& b) const;
  Decoded run_decoder(Forward& f, const Decoder& dec, const Encoded& enc,
                      const std::vector<int>& input_ids) const;
  diff::Var caption_input(Forward& f, const std::vector<int>& input_ids) const;
  void accumulate_grads(Forward& f, double scale);
  signal::Baseline baseline_view() const;
  void baseline_store(const signal::Baseline& b);
  TrainStats hrl_step(const std::vector<TrainSample>& batch, const signal::SignalConfig& cfg,
                      bool manager_phase, double gamma, diff::Sgd& opt, diff::Rng& rng,
                      HrlLoss loss_kind, double norm_const);
  std::vector<int> start_rows_for(const rewards::SegmentBoundaries& bounds, int positions) const;

  int add_param(const std::string& name, std::vector<int> shape, double init_scale);
  int add_const_param(const std::string& name, std::vector<int> shape, double fill);
  Attn add_attn(const std::string& prefix, int d_q_in, int d_kv_in, int d_model);
  Block add_block(const std::string& prefix, int d_model);
  DecoderLayer add_decoder_layer(const std::string& prefix);
  Decoder add_decoder(const std::string& prefix);

  ModelConfig cfg_;
  std::vector<std::string> vocab_;
  rewards::CriticRule critic_;
  diff::ParamStore store_;
  diff::Rng init_rng_;

  int embed_table_ = -1, embed_proj_w_ = -1, embed_proj_b_ = -1;
  int audio_in_w_ = -1, audio_in_b_ = -1, video_in_w_ = -1, video_in_b_ = -1;
  std::vector<Block> audio_layers_, video_layers_;
  Block cross_va_, cross_av_;
  Decoder worker_dec_, manager_dec_;
  int goal_w_, goal_b_;
  int goal_attn_wq_, goal_attn_wk_, goal_attn_wv_;
  int head_w_, head_b_;
  int baseline_w_, baseline_b_;
};

}  // namespace capgen::model
