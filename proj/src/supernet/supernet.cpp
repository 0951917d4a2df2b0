// Copyright 2026 The pimnas Authors.
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


#include "pimnas/supernet/supernet.hpp"

#include <cmath>

#include "pimnas/nn/checkpoint.hpp"

namespace pimnas::supernet {

using space::BlockType;

Supernet::Supernet(space::SearchSpace s, std::uint64_t seed) : space_(std::move(s)) {
  Rng rng(derive_seed(seed, "supernet-init"));
  params_ = init_supernet_params(space_, rng);
}

Supernet::Supernet(space::SearchSpace s, ParamStore<float> params)
    : space_(std::move(s)), params_(std::move(params)) {}

Supernet::StepResult Supernet::train_step(const nn::Batch& batch, Rng& rng, nn::Optimizer<float>& opt) {
  StepResult r;
  r.arch = space::sample_arch(space_, rng);
  r.loss = train_step(batch, r.arch, opt);
  return r;
}

double Supernet::train_step(const nn::Batch& batch, const space::ArchGenome& arch, nn::Optimizer<float>& opt) {
  return train_arch_step(params_, space_, arch, batch, opt);
}

ParamStore<float> Supernet::extract(const space::ArchGenome& arch) const {
  return extract_subnet(params_, space_, arch);
}

void Supernet::save(const std::filesystem::path& path, const nlohmann::json& extra) const {
  nn::Checkpoint ck;
  ck.header = extra.is_object() ? extra : nlohmann::json::object();
  ck.header["kind"] = "supernet";
  ck.header["space"] = space_;
  ck.put_params(params_);
  ck.save(path);
}

Supernet Supernet::load(const std::filesystem::path& path, const space::SearchSpace& expected) {
  nn::Checkpoint ck = nn::Checkpoint::load(path);
  if (ck.header.value("kind", "") != "supernet" || !ck.header.contains("space")) {
    throw nn::EngineError(path.string() + ": not a supernet checkpoint");
  }
  const space::SearchSpace recorded = ck.header.at("space").get<space::SearchSpace>();
  if (!(recorded == expected)) {
    throw nn::EngineError(path.string() + ": supernet configuration mismatch; checkpoint has " +
                          nlohmann::json(recorded).dump() + ", expected " + nlohmann::json(expected).dump());
  }
  ParamStore<float> params;
  ck.get_params(params);
  return Supernet(recorded, std::move(params));
}

std::vector<std::pair<std::string, std::vector<int>>> arch_param_extents(const space::SearchSpace& s,
                                                                         const space::ArchGenome& arch) {
  std::vector<std::pair<std::string, std::vector<int>>> out;
  auto bn = [&](const std::string& p, int c) {
    for (const char* suffix : {".gamma", ".beta", ".mean", ".var"}) out.push_back({p + suffix, {c}});
  };
  int in_ch = s.image_channels;
  for (int slot = 0; slot < arch.depth(); ++slot) {
    const space::BlockGene& g = arch.blocks[slot];
    const BlockParamNames n = block_param_names(slot, g.type);
    const int c = g.out_channels;
    out.push_back({n.conv1 + ".w", {c, in_ch, 3, 3}});
    bn(n.bn1, c);
    out.push_back({n.conv2 + ".w", {c, c, 3, 3}});
    bn(n.bn2, c);
    if (g.type == BlockType::kRes) {
      out.push_back({n.shortcut + ".w", {c, in_ch, 1, 1}});
      bn(n.bnsc, c);
    }
    in_ch = c;
  }
  out.push_back({kHeadWeight, {s.num_classes, in_ch * s.head_pool * s.head_pool}});
  out.push_back({kHeadBias, {s.num_classes}});
  return out;
}

ParamStore<float> extract_subnet(const ParamStore<float>& supernet, const space::SearchSpace& s,
                                 const space::ArchGenome& arch) {
  space::check(space::Genome{arch, {}, {}}, s);
  ParamStore<float> out;
  for (const auto& [name, extent] : arch_param_extents(s, arch)) {
    const nn::Param<float>& src = supernet.get(name);
    auto& dst = out.add(name, extent, src.trainable);
    dst.value = nn::slice_prefix(src.value, src.shape, extent);
  }
  return out;
}

double train_arch_step(ParamStore<float>& store, const space::SearchSpace& s, const space::ArchGenome& arch,
                       const nn::Batch& batch, nn::Optimizer<float>& opt, const space::QuantGenome* quant,
                       quant::QuantState* state) {
  store.clear_grads();
  Network<float> net(s, arch, store);
  net.set_quant(quant, state);
  Tensor<float> logits = net.forward(batch.x, Mode::kTrain);
  Tensor<float> grad;
  const double loss = nn::softmax_cross_entropy(logits, batch.y, &grad);
  if (!std::isfinite(loss)) {
    std::string what = space::encode(arch);
    if (quant) what += "; quant=" + space::encode(*quant);
    throw nn::EngineError("non-finite training loss on path '" + what + "'");
  }
  net.backward(grad);
  opt.step(store);
  return loss;
}

void recalibrate_bn(ParamStore<float>& store, const space::SearchSpace& s, const space::ArchGenome& arch,
                    const nn::ImageSet& data, int batch_size, int n_batches, const space::QuantGenome* quant,
                    quant::QuantState* state) {
  if (n_batches < 1) throw nn::EngineError("batch-norm recalibration needs at least one batch");
  if (data.size() == 0) throw nn::EngineError("batch-norm recalibration on an empty data set");
  Network<float> net(s, arch, store);
  net.set_quant(quant, state);
  nn::BatchPlan plan(data.size(), static_cast<std::size_t>(batch_size), nullptr);
  net.begin_bn_calibration();
  for (int b = 0; b < n_batches; ++b) {
    nn::Batch batch = plan.make(data, static_cast<std::size_t>(b) % plan.batches());
    net.forward(batch.x, Mode::kCalibrate);
  }
  net.finish_bn_calibration();
}

std::vector<int> predict(ParamStore<float>& store, const space::SearchSpace& s, const space::ArchGenome& arch,
                         const nn::ImageSet& data, int batch_size, const space::QuantGenome* quant,
                         quant::QuantState* state) {
  Network<float> net(s, arch, store);
  net.set_quant(quant, state);
  nn::BatchPlan plan(data.size(), static_cast<std::size_t>(batch_size), nullptr);
  std::vector<int> out;
  out.reserve(data.size());
  for (std::size_t b = 0; b < plan.batches(); ++b) {
    nn::Batch batch = plan.make(data, b);
    for (int p : nn::argmax_rows(net.forward(batch.x, Mode::kEval))) out.push_back(p);
  }
  return out;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw nn::EngineError("prediction and label counts differ");
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double evaluate_accuracy(ParamStore<float>& store, const space::SearchSpace& s, const space::ArchGenome& arch,
                         const nn::ImageSet& data, int batch_size, const space::QuantGenome* quant,
                         quant::QuantState* state) {
  return accuracy(predict(store, s, arch, data, batch_size, quant, state), data.labels);
}

}  // namespace pimnas::supernet
