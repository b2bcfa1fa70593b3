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

#include "capgen/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "capgen/signal/loss_graph.hpp"

namespace capgen::model {

using diff::Graph;
using diff::Rng;
using diff::Tensor;
using diff::Var;

void ModelConfig::validate() const {
  if (d_latent < 1 || d_text < 1 || d_goal < 1 || heads < 1 || layers < 1)
    throw std::invalid_argument("ModelConfig: dimensions must be positive");
  if (d_latent % heads != 0)
    throw std::invalid_argument("ModelConfig: d_latent must be divisible by heads");
  if (vocab_size < SpecialTokens::count + 1)
    throw std::invalid_argument("ModelConfig: vocab_size must cover specials plus content");
  if (max_len < 2) throw std::invalid_argument("ModelConfig: max_len must be at least 2");
  if (sigma_rel < 0.0) throw std::invalid_argument("ModelConfig: sigma_rel must be >= 0");
  if (fusion != FusionMode::audio_only && d_video_in < 1)
    throw std::invalid_argument("ModelConfig: d_video_in must be positive");
  if (fusion != FusionMode::vision_only && d_audio_in < 1)
    throw std::invalid_argument("ModelConfig: d_audio_in must be positive");
}

CaptionModel::CaptionModel(const ModelConfig& cfg, std::vector<std::string> vocab,
                           rewards::CriticRule critic)
    : cfg_(cfg), vocab_(std::move(vocab)), critic_(std::move(critic)), init_rng_(cfg.seed) {
  cfg_.validate();
  if (static_cast<int>(vocab_.size()) != cfg_.vocab_size)
    throw std::invalid_argument("CaptionModel: vocabulary size does not match config");

  const int d = cfg_.d_latent;
  embed_table_ = add_param("embed.table", {cfg_.vocab_size, cfg_.d_text},
                           1.0 / std::sqrt(static_cast<double>(cfg_.d_text)));
  embed_proj_w_ = add_param("embed.proj.w", {cfg_.d_text, d},
                            1.0 / std::sqrt(static_cast<double>(cfg_.d_text)));
  embed_proj_b_ = add_const_param("embed.proj.b", {d}, 0.0);

  if (cfg_.fusion != FusionMode::vision_only) {
    audio_in_w_ = add_param("enc.audio.in.w", {cfg_.d_audio_in, d},
                            1.0 / std::sqrt(static_cast<double>(cfg_.d_audio_in)));
    audio_in_b_ = add_const_param("enc.audio.in.b", {d}, 0.0);
    for (int l = 0; l < cfg_.layers; ++l)
      audio_layers_.push_back(add_block("enc.audio.l" + std::to_string(l), d));
  }
  if (cfg_.fusion != FusionMode::audio_only) {
    video_in_w_ = add_param("enc.video.in.w", {cfg_.d_video_in, d},
                            1.0 / std::sqrt(static_cast<double>(cfg_.d_video_in)));
    video_in_b_ = add_const_param("enc.video.in.b", {d}, 0.0);
    for (int l = 0; l < cfg_.layers; ++l)
      video_layers_.push_back(add_block("enc.video.l" + std::to_string(l), d));
  }
  if (cfg_.fusion == FusionMode::bimodal) {
    cross_va_ = add_block("enc.cross.va", d);
    cross_av_ = add_block("enc.cross.av", d);
  }

  worker_dec_ = add_decoder("dec.worker");
  manager_dec_ = add_decoder("dec.manager");

  goal_w_ = add_param("goal_head.w", {d, cfg_.d_goal}, 1.0 / std::sqrt(static_cast<double>(d)));
  goal_b_ = add_const_param("goal_head.b", {cfg_.d_goal}, 0.0);
  goal_attn_wq_ = add_param("goal_attn.wq", {cfg_.d_goal, cfg_.d_goal},
                            1.0 / std::sqrt(static_cast<double>(cfg_.d_goal)));
  goal_attn_wk_ = add_param("goal_attn.wk", {d, cfg_.d_goal},
                            1.0 / std::sqrt(static_cast<double>(d)));
  goal_attn_wv_ = add_param("goal_attn.wv", {d, cfg_.d_goal},
                            1.0 / std::sqrt(static_cast<double>(d)));

  const int d_fused = d + cfg_.d_goal;
  head_w_ = add_param("worker_head.w", {d_fused, cfg_.vocab_size},
                      1.0 / std::sqrt(static_cast<double>(d_fused)));
  head_b_ = add_const_param("worker_head.b", {cfg_.vocab_size}, 0.0);

  baseline_w_ = add_const_param("baseline.w", {d_fused}, 0.0);
  baseline_b_ = add_const_param("baseline.b", {1}, 0.0);
}

int CaptionModel::add_param(const std::string& name, std::vector<int> shape, double init_scale) {
  Tensor t(shape);
  for (size_t i = 0; i < t.size(); ++i) t[i] = init_rng_.uniform(-init_scale, init_scale);
  return store_.add(name, std::move(t));
}

int CaptionModel::add_const_param(const std::string& name, std::vector<int> shape, double fill) {
  Tensor t(std::move(shape));
  t.fill(fill);
  return store_.add(name, std::move(t));
}

CaptionModel::Attn CaptionModel::add_attn(const std::string& prefix, int d_q_in, int d_kv_in,
                                          int d_model) {
  Attn a;
  a.wq = add_param(prefix + ".wq", {d_q_in, d_model}, 1.0 / std::sqrt(static_cast<double>(d_q_in)));
  a.wk = add_param(prefix + ".wk", {d_kv_in, d_model}, 1.0 / std::sqrt(static_cast<double>(d_kv_in)));
  a.wv = add_param(prefix + ".wv", {d_kv_in, d_model}, 1.0 / std::sqrt(static_cast<double>(d_kv_in)));
  a.wo = add_param(prefix + ".wo", {d_model, d_model}, 1.0 / std::sqrt(static_cast<double>(d_model)));
  return a;
}

CaptionModel::Block CaptionModel::add_block(const std::string& prefix, int d_model) {
  Block b;
  b.attn = add_attn(prefix + ".att", d_model, d_model, d_model);
  b.ln1_g = add_const_param(prefix + ".ln1.g", {d_model}, 1.0);
  b.ln1_b = add_const_param(prefix + ".ln1.b", {d_model}, 0.0);
  const int d_ff = 2 * d_model;
  b.ff1_w = add_param(prefix + ".ff1.w", {d_model, d_ff}, 1.0 / std::sqrt(static_cast<double>(d_model)));
  b.ff1_b = add_const_param(prefix + ".ff1.b", {d_ff}, 0.0);
  b.ff2_w = add_param(prefix + ".ff2.w", {d_ff, d_model}, 1.0 / std::sqrt(static_cast<double>(d_ff)));
  b.ff2_b = add_const_param(prefix + ".ff2.b", {d_model}, 0.0);
  b.ln2_g = add_const_param(prefix + ".ln2.g", {d_model}, 1.0);
  b.ln2_b = add_const_param(prefix + ".ln2.b", {d_model}, 0.0);
  return b;
}

CaptionModel::DecoderLayer CaptionModel::add_decoder_layer(const std::string& prefix) {
  DecoderLayer l;
  const int d = cfg_.d_latent;
  l.self_attn = add_attn(prefix + ".self", d, d, d);
  l.ln1_g = add_const_param(prefix + ".ln1.g", {d}, 1.0);
  l.ln1_b = add_const_param(prefix + ".ln1.b", {d}, 0.0);
  if (cfg_.fusion == FusionMode::bimodal) {
    l.cross_va = add_attn(prefix + ".cross_va", d, d, d);
    l.cross_av = add_attn(prefix + ".cross_av", d, d, d);
  } else {
    l.cross_mono = add_attn(prefix + ".cross", d, d, d);
  }
  l.ln2_g = add_const_param(prefix + ".ln2.g", {d}, 1.0);
  l.ln2_b = add_const_param(prefix + ".ln2.b", {d}, 0.0);
  const int d_ff = 2 * d;
  l.ff1_w = add_param(prefix + ".ff1.w", {d, d_ff}, 1.0 / std::sqrt(static_cast<double>(d)));
  l.ff1_b = add_const_param(prefix + ".ff1.b", {d_ff}, 0.0);
  l.ff2_w = add_param(prefix + ".ff2.w", {d_ff, d}, 1.0 / std::sqrt(static_cast<double>(d_ff)));
  l.ff2_b = add_const_param(prefix + ".ff2.b", {d}, 0.0);
  l.ln3_g = add_const_param(prefix + ".ln3.g", {d}, 1.0);
  l.ln3_b = add_const_param(prefix + ".ln3.b", {d}, 0.0);
  return l;
}

CaptionModel::Decoder CaptionModel::add_decoder(const std::string& prefix) {
  Decoder dec;
  for (int l = 0; l < cfg_.layers; ++l)
    dec.layers.push_back(add_decoder_layer(prefix + ".l" + std::to_string(l)));
  if (cfg_.fusion == FusionMode::bimodal)
    dec.gate_k = add_const_param(prefix + ".gate_k", {1}, 0.0);
  return dec;
}

CaptionModel::Forward CaptionModel::make_forward() const {
  Forward f;
  f.bound.assign(static_cast<size_t>(store_.size()), Var{});
  return f;
}

Var CaptionModel::p(Forward& f, int id) const {
  Var& v = f.bound[static_cast<size_t>(id)];
  if (!v.valid()) v = f.g.leaf(store_.at(id).value, true);
  return v;
}

Var CaptionModel::mha(Forward& f, Var q_in, Var kv_in, const Attn& a, bool causal) const {
  Graph& g = f.g;
  const Var q = g.matmul(q_in, p(f, a.wq));
  const Var k = g.matmul(kv_in, p(f, a.wk));
  const Var v = g.matmul(kv_in, p(f, a.wv));
  const int dk = cfg_.d_latent / cfg_.heads;
  std::vector<Var> heads;
  heads.reserve(static_cast<size_t>(cfg_.heads));
  for (int h = 0; h < cfg_.heads; ++h) {
    const int c0 = h * dk, c1 = (h + 1) * dk;
    heads.push_back(g.attention(g.slice_cols(q, c0, c1), g.slice_cols(k, c0, c1),
                                g.slice_cols(v, c0, c1), causal));
  }
  return g.matmul(g.concat_cols(heads), p(f, a.wo));
}

Var CaptionModel::feed_forward(Forward& f, Var x, int w1, int b1, int w2, int b2) const {
  Graph& g = f.g;
  return g.linear(g.relu(g.linear(x, p(f, w1), p(f, b1))), p(f, w2), p(f, b2));
}

Var CaptionModel::self_block(Forward& f, Var x, const Block& b, bool causal) const {
  Graph& g = f.g;
  x = g.layer_norm(g.add(x, mha(f, x, x, b.attn, causal)), p(f, b.ln1_g), p(f, b.ln1_b));
  x = g.layer_norm(g.add(x, feed_forward(f, x, b.ff1_w, b.ff1_b, b.ff2_w, b.ff2_b)),
                   p(f, b.ln2_g), p(f, b.ln2_b));
  return x;
}

Var CaptionModel::cross_block(Forward& f, Var q, Var kv, const Block& b) const {
  Graph& g = f.g;
  Var x = g.layer_norm(g.add(q, mha(f, q, kv, b.attn, false)), p(f, b.ln1_g), p(f, b.ln1_b));
  x = g.layer_norm(g.add(x, feed_forward(f, x, b.ff1_w, b.ff1_b, b.ff2_w, b.ff2_b)),
                   p(f, b.ln2_g), p(f, b.ln2_b));
  return x;
}

CaptionModel::Encoded CaptionModel::encode(Forward& f, const Tensor& audio,
                                           const Tensor& video) const {
  Graph& g = f.g;
  Encoded enc;
  Var a{}, v{};
  if (cfg_.fusion != FusionMode::vision_only) {
    if (audio.rows() < 1 || audio.cols() != cfg_.d_audio_in)
      throw std::invalid_argument("encode: audio features must be [L_A x d_audio_in]");
    a = g.positional_encoding_add(
        g.linear(g.constant(audio), p(f, audio_in_w_), p(f, audio_in_b_)));
    for (const Block& b : audio_layers_) a = self_block(f, a, b, false);
  }
  if (cfg_.fusion != FusionMode::audio_only) {
    if (video.rows() < 1 || video.cols() != cfg_.d_video_in)
      throw std::invalid_argument("encode: video features must be [L_V x d_video_in]");
    v = g.positional_encoding_add(
        g.linear(g.constant(video), p(f, video_in_w_), p(f, video_in_b_)));
    for (const Block& b : video_layers_) v = self_block(f, v, b, false);
  }
  switch (cfg_.fusion) {
    case FusionMode::bimodal:
      enc.video_att_audio = cross_block(f, v, a, cross_va_);
      enc.audio_att_video = cross_block(f, a, v, cross_av_);
      break;
    case FusionMode::audio_only:
      enc.mono = a;
      break;
    case FusionMode::vision_only:
      enc.mono = v;
      break;
  }
  return enc;
}

Var CaptionModel::caption_input(Forward& f, const std::vector<int>& input_ids) const {
  Graph& g = f.g;
  for (int id : input_ids)
    if (id < 0 || id >= cfg_.vocab_size)
      throw std::invalid_argument("caption_input: token id out of range");
  const Var emb = g.embedding(p(f, embed_table_), input_ids);
  return g.positional_encoding_add(g.linear(emb, p(f, embed_proj_w_), p(f, embed_proj_b_)));
}

CaptionModel::Decoded CaptionModel::run_decoder(Forward& f, const Decoder& dec,
                                                const Encoded& enc,
                                                const std::vector<int>& input_ids) const {
  Graph& g = f.g;
  Var c = caption_input(f, input_ids);
  Decoded out;
  for (const DecoderLayer& l : dec.layers) {
    c = g.layer_norm(g.add(c, mha(f, c, c, l.self_attn, true)), p(f, l.ln1_g), p(f, l.ln1_b));
    Var fused{};
    if (cfg_.fusion == FusionMode::bimodal) {
      const Var cva = mha(f, c, enc.video_att_audio, l.cross_va, false);
      const Var cav = mha(f, c, enc.audio_att_video, l.cross_av, false);
      const Var gate = g.sigmoid(p(f, dec.gate_k));
      const Var one_minus = g.add_scalar(g.scale(gate, -1.0), 1.0);
      fused = g.add(g.mul_by(cva, gate), g.mul_by(cav, one_minus));
      out.caption_va = cva;
      out.caption_av = cav;
      out.gate = g.value(gate)[0];
    } else {
      fused = mha(f, c, enc.mono, l.cross_mono, false);
    }
    out.fused = fused;
    c = g.layer_norm(g.add(c, fused), p(f, l.ln2_g), p(f, l.ln2_b));
    c = g.layer_norm(g.add(c, feed_forward(f, c, l.ff1_w, l.ff1_b, l.ff2_w, l.ff2_b)),
                     p(f, l.ln3_g), p(f, l.ln3_b));
  }
  out.features = c;
  return out;
}

CaptionModel::Decoded CaptionModel::decode_worker(Forward& f, const Encoded& enc,
                                                  const std::vector<int>& input_ids) const {
  return run_decoder(f, worker_dec_, enc, input_ids);
}

CaptionModel::Decoded CaptionModel::decode_manager(Forward& f, const Encoded& enc,
                                                   const std::vector<int>& input_ids) const {
  return run_decoder(f, manager_dec_, enc, input_ids);
}

CaptionModel::Goals CaptionModel::generate_goals(Forward& f, Var manager_features,
                                                 const std::vector<int>& start_of_position,
                                                 bool explore, Rng* rng) const {
  Graph& g = f.g;
  const int positions = g.value(manager_features).rows();
  if (static_cast<int>(start_of_position.size()) != positions)
    throw std::invalid_argument("generate_goals: position map length mismatch");
  const Var goal_all = g.linear(manager_features, p(f, goal_w_), p(f, goal_b_));
  Goals out;
  out.start_rows = start_of_position;
  out.rows = g.select_rows(goal_all, start_of_position);
  if (explore && cfg_.sigma_rel > 0.0) {
    if (!rng) throw std::invalid_argument("generate_goals: exploration needs an Rng");
    // Zero-mean noise with std sigma_rel * |g_i|; computed from the current
    // values so the policy stays deterministic in expectation.
    const Tensor& vals = g.value(out.rows);
    Tensor noise(vals.shape());
    for (size_t i = 0; i < noise.size(); ++i)
      noise[i] = cfg_.sigma_rel * std::fabs(vals[i]) * rng->normal();
    out.rows = g.add(out.rows, g.constant(std::move(noise)));
  }
  return out;
}

CaptionModel::WorkerOutput CaptionModel::classify(Forward& f, Var worker_features,
                                                  const Goals& goals) const {
  Graph& g = f.g;
  if (g.value(worker_features).rows() != g.value(goals.rows).rows())
    throw std::invalid_argument("classify: feature/goal length mismatch");
  const Var q = g.matmul(goals.rows, p(f, goal_attn_wq_));
  const Var k = g.matmul(worker_features, p(f, goal_attn_wk_));
  const Var v = g.matmul(worker_features, p(f, goal_attn_wv_));
  const Var att = g.attention(q, k, v, true);
  WorkerOutput out;
  out.fused_with_goal = g.concat_cols({worker_features, att});
  out.log_probs = g.log_softmax_rows(g.linear(out.fused_with_goal, p(f, head_w_), p(f, head_b_)));
  return out;
}

std::vector<int> CaptionModel::start_rows_for(const rewards::SegmentBoundaries& bounds,
                                              int positions) const {
  std::vector<int> rows(static_cast<size_t>(positions), 0);
  int cur = 0;
  size_t next = 0;
  for (int t = 0; t < positions; ++t) {
    while (next < bounds.starts.size() && bounds.starts[next] <= t) cur = bounds.starts[next++];
    rows[static_cast<size_t>(t)] = cur;
  }
  return rows;
}

CaptionModel::PipelineOutput CaptionModel::forward_teacher_forced(Forward& f,
                                                                  const TrainSample& sample,
                                                                  bool explore, Rng* rng) const {
  if (sample.caption.empty())
    throw std::invalid_argument("forward_teacher_forced: empty caption");
  sample.bounds.validate(static_cast<int>(sample.caption.size()));
  std::vector<int> input_ids;
  input_ids.reserve(sample.caption.size() + 1);
  input_ids.push_back(SpecialTokens::kBos);
  input_ids.insert(input_ids.end(), sample.caption.begin(), sample.caption.end());

  PipelineOutput out;
  out.targets = sample.caption;
  out.targets.push_back(SpecialTokens::kEos);

  const Encoded enc = encode(f, sample.audio, sample.video);
  const Decoded wdec = decode_worker(f, enc, input_ids);
  const Decoded mdec = decode_manager(f, enc, input_ids);
  const auto srows = start_rows_for(sample.bounds, static_cast<int>(input_ids.size()));
  const Goals goals = generate_goals(f, mdec.features, srows, explore, rng);
  out.worker = classify(f, wdec.features, goals);
  return out;
}

std::vector<int> CaptionModel::greedy_decode(const Tensor& audio, const Tensor& video,
                                             int max_len) const {
  // The encoder depends only on the features; run it once and reuse the
  // values as constants for every decode step.
  Tensor va_vals, av_vals, mono_vals;
  {
    Forward f = make_forward();
    const Encoded enc = encode(f, audio, video);
    if (cfg_.fusion == FusionMode::bimodal) {
      va_vals = f.g.value(enc.video_att_audio);
      av_vals = f.g.value(enc.audio_att_video);
    } else {
      mono_vals = f.g.value(enc.mono);
    }
  }

  std::vector<int> generated;
  for (int step = 0; step < max_len; ++step) {
    Forward f = make_forward();
    Encoded enc;
    if (cfg_.fusion == FusionMode::bimodal) {
      enc.video_att_audio = f.g.constant(va_vals);
      enc.audio_att_video = f.g.constant(av_vals);
    } else {
      enc.mono = f.g.constant(mono_vals);
    }
    std::vector<int> input_ids;
    input_ids.push_back(SpecialTokens::kBos);
    input_ids.insert(input_ids.end(), generated.begin(), generated.end());

    const Decoded wdec = run_decoder(f, worker_dec_, enc, input_ids);
    const Decoded mdec = run_decoder(f, manager_dec_, enc, input_ids);

    // A new goal opens right after every generated delimiter token.
    std::vector<int> srows(input_ids.size(), 0);
    int cur = 0;
    for (size_t t = 1; t < input_ids.size(); ++t) {
      if (critic_.is_delimiter(vocab_[static_cast<size_t>(generated[t - 1])]))
        cur = static_cast<int>(t);
      srows[t] = cur;
    }
    const Goals goals = generate_goals(f, mdec.features, srows, false, nullptr);
    const WorkerOutput out = classify(f, wdec.features, goals);

    const Tensor& lp = f.g.value(out.log_probs);
    const int last = lp.rows() - 1;
    int best = SpecialTokens::kEos;
    double best_lp = -1e300;
    for (int w = 0; w < cfg_.vocab_size; ++w) {
      if (w == SpecialTokens::kPad || w == SpecialTokens::kBos) continue;
      if (lp.at(last, w) > best_lp) {
        best_lp = lp.at(last, w);
        best = w;
      }
    }
    if (best == SpecialTokens::kEos) break;
    generated.push_back(best);
  }
  return generated;
}

bool CaptionModel::is_manager_side(const std::string& name) {
  return name.rfind("dec.manager.", 0) == 0 || name.rfind("goal_head.", 0) == 0;
}

bool CaptionModel::is_baseline(const std::string& name) {
  return name.rfind("baseline.", 0) == 0;
}

void CaptionModel::accumulate_grads(Forward& f, double scale) {
  for (int id = 0; id < store_.size(); ++id) {
    const Var v = f.bound[static_cast<size_t>(id)];
    if (!v.valid()) continue;
    const Tensor& grad = f.g.grad(v);
    if (grad.size() == 0) continue;
    Tensor& acc = store_.at(id).grad;
    for (size_t i = 0; i < grad.size(); ++i) acc[i] += scale * grad[i];
  }
}

signal::Baseline CaptionModel::baseline_view() const {
  signal::Baseline b;
  const Tensor& w = store_.at(baseline_w_).value;
  b.weights.assign(w.data(), w.data() + w.size());
  b.bias = store_.at(baseline_b_).value[0];
  b.learning_rate = 0.01;
  return b;
}

void CaptionModel::baseline_store(const signal::Baseline& b) {
  Tensor& w = store_.at(baseline_w_).value;
  for (size_t i = 0; i < w.size(); ++i) w[i] = b.weights[i];
  store_.at(baseline_b_).value[0] = b.bias;
}

namespace {

double accuracy_of(const Tensor& log_probs, const std::vector<int>& targets) {
  int hits = 0;
  for (size_t t = 0; t < targets.size(); ++t) {
    int best = 0;
    double best_lp = -1e300;
    for (int w = 0; w < log_probs.cols(); ++w)
      if (log_probs.at(static_cast<int>(t), w) > best_lp) {
        best_lp = log_probs.at(static_cast<int>(t), w);
        best = w;
      }
    if (best == targets[t]) ++hits;
  }
  return targets.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(targets.size());
}

}  // namespace

TrainStats CaptionModel::warmstart_step(const std::vector<TrainSample>& batch,
                                        const signal::SignalConfig& cfg, diff::Sgd& opt) {
  if (batch.empty()) throw std::invalid_argument("warmstart_step: empty batch");
  store_.zero_grad();
  TrainStats stats;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (const TrainSample& sample : batch) {
    Forward f = make_forward();
    const PipelineOutput out = forward_teacher_forced(f, sample, false, nullptr);
    signal::SignalConfig cfg_t = cfg;
    cfg_t.length_scale = static_cast<int>(sample.caption.size());
    const Var loss =
        f.g.scale(signal::label_smoothed_kl_node(f.g, out.worker.log_probs, out.targets, cfg_t),
                  inv_batch);
    f.g.backward(loss);
    accumulate_grads(f, 1.0);
    stats.loss += f.g.scalar_value(loss);
    stats.token_accuracy += inv_batch * accuracy_of(f.g.value(out.worker.log_probs), out.targets);
  }
  opt.step(store_, [](const std::string& name) { return !is_baseline(name); });
  return stats;
}

TrainStats CaptionModel::hrl_step(const std::vector<TrainSample>& batch,
                                  const signal::SignalConfig& cfg, bool manager_phase,
                                  double gamma, diff::Sgd& opt, Rng& rng, HrlLoss loss_kind,
                                  double norm_const) {
  if (batch.empty()) throw std::invalid_argument("hrl_step: empty batch");
  store_.zero_grad();
  TrainStats stats;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (const TrainSample& sample : batch) {
    Forward f = make_forward();
    const PipelineOutput out =
        forward_teacher_forced(f, sample, /*explore=*/manager_phase, &rng);
    const Tensor& lp = f.g.value(out.worker.log_probs);
    const int steps = lp.rows();
    const int content = static_cast<int>(sample.caption.size());

    // Sample one token per timestep from the worker's distribution.
    std::vector<int> sampled(static_cast<size_t>(steps));
    std::vector<double> row(static_cast<size_t>(cfg_.vocab_size));
    for (int t = 0; t < steps; ++t) {
      for (int w = 0; w < cfg_.vocab_size; ++w) row[static_cast<size_t>(w)] = std::exp(lp.at(t, w));
      sampled[static_cast<size_t>(t)] = rng.categorical(row);
    }

    // Reward trace over the content positions of the sampled prediction.
    std::vector<metrics::Token> pred_tokens, ref_tokens;
    for (int t = 0; t < content; ++t)
      pred_tokens.push_back(vocab_[static_cast<size_t>(sampled[static_cast<size_t>(t)])]);
    for (int id : sample.caption) ref_tokens.push_back(vocab_[static_cast<size_t>(id)]);
    const auto trace = rewards::delta_meteor_trace(pred_tokens, ref_tokens);
    const std::vector<double> content_rewards =
        manager_phase ? rewards::manager_rewards(trace, sample.bounds, gamma)
                      : rewards::worker_rewards(trace, gamma);
    std::vector<double> reward_vec(static_cast<size_t>(steps), 0.0);
    for (int t = 0; t < content; ++t) reward_vec[static_cast<size_t>(t)] = content_rewards[static_cast<size_t>(t)];

    // Baseline values on the goal-fused features (treated as constants in
    // the loss; the head itself trains on its own MSE).
    const Tensor& feats = f.g.value(out.worker.fused_with_goal);
    signal::Baseline baseline = baseline_view();
    std::vector<std::vector<double>> feat_rows(static_cast<size_t>(steps));
    std::vector<double> baseline_vec(static_cast<size_t>(steps));
    for (int t = 0; t < steps; ++t) {
      feat_rows[static_cast<size_t>(t)].assign(feats.data() + static_cast<size_t>(t) * feats.cols(),
                                               feats.data() + static_cast<size_t>(t + 1) * feats.cols());
      baseline_vec[static_cast<size_t>(t)] = baseline.value(feat_rows[static_cast<size_t>(t)]);
    }

    signal::SignalConfig cfg_t = cfg;
    cfg_t.length_scale = content;
    const Var loss_node =
        loss_kind == HrlLoss::biased
            ? signal::biased_loss_node(f.g, out.worker.log_probs, out.targets, sampled, reward_vec,
                                       baseline_vec, cfg_t)
            : signal::weighted_loss_node(f.g, out.worker.log_probs, out.targets, sampled,
                                         reward_vec, baseline_vec, cfg_t, norm_const);
    const Var loss = f.g.scale(loss_node, inv_batch);
    f.g.backward(loss);
    accumulate_grads(f, 1.0);

    signal::baseline_update(baseline, feat_rows, reward_vec);
    baseline_store(baseline);

    stats.loss += f.g.scalar_value(loss);
    stats.token_accuracy += inv_batch * accuracy_of(f.g.value(out.worker.log_probs), out.targets);
    double reward_sum = 0.0;
    for (double r : reward_vec) reward_sum += r;
    stats.mean_reward += inv_batch * reward_sum / static_cast<double>(steps);
  }
  if (manager_phase)
    opt.step(store_, [](const std::string& name) { return is_manager_side(name); });
  else
    opt.step(store_, [](const std::string& name) {
      return !is_manager_side(name) && !is_baseline(name);
    });
  return stats;
}

TrainStats CaptionModel::train_worker_step(const std::vector<TrainSample>& batch,
                                           const signal::SignalConfig& cfg, double gamma_worker,
                                           diff::Sgd& opt, Rng& rng, HrlLoss loss_kind,
                                           double norm_const) {
  return hrl_step(batch, cfg, false, gamma_worker, opt, rng, loss_kind, norm_const);
}

TrainStats CaptionModel::train_manager_step(const std::vector<TrainSample>& batch,
                                            const signal::SignalConfig& cfg, double gamma_manager,
                                            diff::Sgd& opt, Rng& rng, HrlLoss loss_kind,
                                            double norm_const) {
  return hrl_step(batch, cfg, true, gamma_manager, opt, rng, loss_kind, norm_const);
}

diff::NamedTensors CaptionModel::snapshot() const {
  diff::NamedTensors out;
  for (const auto& param : store_.all()) out.emplace_back(param.name, param.value);
  return out;
}

void CaptionModel::restore(const diff::NamedTensors& tensors) {
  for (const auto& [name, value] : tensors) {
    const int id = store_.find(name);
    if (id < 0) throw std::invalid_argument("restore: unknown parameter " + name);
    if (!store_.at(id).value.same_shape(value))
      throw std::invalid_argument("restore: shape mismatch for " + name);
    store_.at(id).value = value;
  }
}

}  // namespace capgen::model
