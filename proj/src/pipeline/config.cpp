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


#include "pimnas/pipeline/config.hpp"

#include <fstream>
#include <sstream>

namespace pimnas::pipeline {

namespace {

nlohmann::json schedule_json(const TrainSchedule& s) {
  return {{"epochs", s.epochs},       {"batch_size", s.batch_size},     {"lr", s.lr},
          {"optimizer", s.optimizer}, {"momentum", s.momentum},         {"weight_decay", s.weight_decay},
          {"factor", s.factor},       {"milestones", s.milestones},     {"period", s.period},
          {"period_fraction", s.period_fraction}};
}

TrainSchedule schedule_from(const nlohmann::json& j) {
  TrainSchedule s;
  s.epochs = j.at("epochs").get<int>();
  s.batch_size = j.at("batch_size").get<int>();
  s.lr = j.at("lr").get<double>();
  s.optimizer = j.at("optimizer").get<std::string>();
  s.momentum = j.at("momentum").get<double>();
  s.weight_decay = j.at("weight_decay").get<double>();
  s.factor = j.at("factor").get<double>();
  s.milestones = j.at("milestones").get<std::vector<int>>();
  s.period = j.at("period").get<int>();
  s.period_fraction = j.at("period_fraction").get<double>();
  return s;
}

nlohmann::json search_json(const SearchSettings& s) {
  return {{"evolution", s.evolution},
          {"bn_batches", s.bn_batches},
          {"bn_batch_size", s.bn_batch_size},
          {"eval_size", s.eval_size}};
}

SearchSettings search_from(const nlohmann::json& j) {
  SearchSettings s;
  s.evolution = j.at("evolution").get<evo::EvolutionConfig>();
  s.bn_batches = j.at("bn_batches").get<int>();
  s.bn_batch_size = j.at("bn_batch_size").get<int>();
  s.eval_size = j.at("eval_size").get<int>();
  return s;
}

void reject_unknown(const nlohmann::json& user, const nlohmann::json& known, const std::string& path) {
  if (!user.is_object() || !known.is_object()) return;
  for (const auto& [k, v] : user.items()) {
    const std::string here = path.empty() ? k : path + "." + k;
    if (!known.contains(k)) throw ConfigError("unknown configuration key '" + here + "'");
    reject_unknown(v, known.at(k), here);
  }
}

void set_path(nlohmann::json& j, const std::string& dotted, const nlohmann::json& value) {
  nlohmann::json* cur = &j;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ConfigError("empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    nlohmann::json& next = (*cur)[parts[i]];
    if (next.is_null()) next = nlohmann::json::object();
    cur = &next;
  }
  (*cur)[parts.back()] = value;
}

// Fills derived defaults the user did not state: profile-specific space
// fields, synthetic images shaped like the space input, and an even
// crossover/mutation split of a changed population.
nlohmann::json defaults_for(const nlohmann::json& user) {
  RunConfig base;
  if (user.contains("space")) base.space = user["space"].get<space::SearchSpace>();
  base.dataset.synthetic.image_size = base.space.image_size;
  base.dataset.synthetic.channels = base.space.image_channels;
  base.dataset.synthetic.num_classes = base.space.num_classes;
  nlohmann::json d = to_json_value(base);
  for (const char* phase : {"arch_search", "quant_search"}) {
    if (!user.contains(phase) || !user[phase].contains("evolution")) continue;
    const nlohmann::json& e = user[phase]["evolution"];
    if (e.contains("population")) {
      const int p = e["population"].get<int>();
      d[phase]["evolution"]["crossover"] = p / 2;
      d[phase]["evolution"]["mutation"] = p - p / 2;
    }
  }
  return d;
}

}  // namespace

void RunConfig::validate() const {
  space.validate();
  auto sched = [](const TrainSchedule& s, const std::string& name) {
    if (s.epochs < 0 || s.batch_size < 1 || !(s.lr > 0.0) || !(s.factor > 0.0) || s.period < 0 ||
        s.period_fraction < 0.0 || s.weight_decay < 0.0) {
      throw ConfigError("schedule '" + name + "' has non-positive or negative values");
    }
    if (s.optimizer != "sgd" && s.optimizer != "adam") {
      throw ConfigError("schedule '" + name + "': optimizer must be sgd or adam");
    }
  };
  sched(supernet, "supernet");
  sched(pretrain, "pretrain");
  sched(quant_train, "quant_train");
  sched(finetune, "finetune");
  for (const SearchSettings* s : {&arch_search, &quant_search}) {
    s->evolution.validate();
    if (s->bn_batches < 1 || s->bn_batch_size < 1 || s->eval_size < 0) throw ConfigError("bad search settings");
  }
  for (double w : w_acc) {
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("w_acc values must lie in [0, 1]");
  }
  if (dataset.kind != "synthetic" && dataset.kind != "cifar10") {
    throw ConfigError("dataset.kind must be synthetic or cifar10");
  }
  if (dataset.kind == "cifar10" && !std::filesystem::is_directory(dataset.cifar10_dir)) {
    throw ConfigError("dataset.cifar10_dir '" + dataset.cifar10_dir + "' is not a directory");
  }
  if (dataset.kind == "synthetic") {
    if (dataset.synthetic.image_size != space.image_size || dataset.synthetic.channels != space.image_channels ||
        dataset.synthetic.num_classes != space.num_classes) {
      throw ConfigError("synthetic data geometry does not match the search space input");
    }
  }
  if (!hardware.empty() && !std::filesystem::exists(hardware)) {
    throw ConfigError("hardware table '" + hardware + "' does not exist");
  }
  if (ema_momentum < 0.0 || ema_momentum > 1.0) throw ConfigError("ema_momentum must lie in [0, 1]");
}

pim::HardwareParams RunConfig::hardware_params() const {
  return hardware.empty() ? pim::HardwareParams{} : pim::HardwareParams::load(hardware);
}

nlohmann::json to_json_value(const RunConfig& c) {
  return {{"seed", c.seed},
          {"output_dir", c.output_dir},
          {"space", c.space},
          {"dataset",
           {{"kind", c.dataset.kind},
            {"synthetic", c.dataset.synthetic},
            {"cifar10_dir", c.dataset.cifar10_dir},
            {"val_size", c.dataset.val_size}}},
          {"hardware", c.hardware},
          {"w_acc", c.w_acc},
          {"supernet", schedule_json(c.supernet)},
          {"arch_search", search_json(c.arch_search)},
          {"pretrain", schedule_json(c.pretrain)},
          {"quant_train", schedule_json(c.quant_train)},
          {"ema_momentum", c.ema_momentum},
          {"quant_search", search_json(c.quant_search)},
          {"finetune", schedule_json(c.finetune)},
          {"phase1_wb", c.phase1_wb},
          {"phase1_ab", c.phase1_ab},
          {"phase1_pim", space::encode(c.phase1_pim)}};
}

RunConfig from_json_value(const nlohmann::json& user) {
  nlohmann::json j = defaults_for(user);
  reject_unknown(user, j, "");
  j.merge_patch(user);
  RunConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.space = j.at("space").get<space::SearchSpace>();
    const auto& d = j.at("dataset");
    c.dataset.kind = d.at("kind").get<std::string>();
    c.dataset.synthetic = d.at("synthetic").get<SyntheticParams>();
    c.dataset.cifar10_dir = d.at("cifar10_dir").get<std::string>();
    c.dataset.val_size = d.at("val_size").get<int>();
    c.hardware = j.at("hardware").get<std::string>();
    c.w_acc = j.at("w_acc").get<std::vector<double>>();
    c.supernet = schedule_from(j.at("supernet"));
    c.arch_search = search_from(j.at("arch_search"));
    c.pretrain = schedule_from(j.at("pretrain"));
    c.quant_train = schedule_from(j.at("quant_train"));
    c.ema_momentum = j.at("ema_momentum").get<double>();
    c.quant_search = search_from(j.at("quant_search"));
    c.finetune = schedule_from(j.at("finetune"));
    c.phase1_wb = j.at("phase1_wb").get<int>();
    c.phase1_ab = j.at("phase1_ab").get<int>();
    const space::Genome pg = space::decode("n=0; blocks=; pim=" + j.at("phase1_pim").get<std::string>());
    c.phase1_pim = *pg.pim;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  nlohmann::json user = nlohmann::json::object();
  if (!file.empty()) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open config " + file.string());
    try {
      user = nlohmann::json::parse(is, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(file.string() + ": " + e.what());
    }
  }
  for (const std::string& o : overrides) {
    const std::size_t eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' must be key=value");
    const std::string key = o.substr(0, eq), raw = o.substr(eq + 1);
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
      value = raw;
    }
    set_path(user, key, value);
  }
  RunConfig c = from_json_value(user);
  c.validate();
  return c;
}

double schedule_lr(const TrainSchedule& s, int epoch) {
  int drops = 0;
  for (int m : s.milestones) drops += epoch >= m;
  if (s.period > 0) drops += epoch / s.period;
  if (s.period_fraction > 0.0) {
    const int p = std::max(1, static_cast<int>(s.period_fraction * s.epochs));
    drops += epoch / p;
  }
  double lr = s.lr;
  for (int i = 0; i < drops; ++i) lr *= s.factor;
  return lr;
}

}  // namespace pimnas::pipeline
