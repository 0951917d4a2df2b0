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


#include "pimnas/pipeline/pipeline.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pimnas/evo/domains.hpp"
#include "pimnas/nn/checkpoint.hpp"
#include "pimnas/pim/crossbar.hpp"
#include "pimnas/quant/qat.hpp"
#include "pimnas/supernet/supernet.hpp"

namespace pimnas::pipeline {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw PipelineError("cannot write " + path.string());
    os << text;
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PipelineError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw PipelineError(path.string() + ": " + e.what());
  }
}

void strip_wallclock(nlohmann::json& j) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end();) {
      if (it.key().find("wallclock") != std::string::npos) {
        it = j.erase(it);
      } else {
        strip_wallclock(*it);
        ++it;
      }
    }
  } else if (j.is_array()) {
    for (auto& v : j) strip_wallclock(v);
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

nn::Optimizer<float> make_optimizer(const TrainSchedule& s) {
  nn::OptimizerConfig oc;
  oc.kind = s.optimizer == "adam" ? nn::OptimizerKind::kAdam : nn::OptimizerKind::kSgd;
  oc.learning_rate = s.lr;
  oc.momentum = s.momentum;
  oc.weight_decay = s.weight_decay;
  return nn::Optimizer<float>(oc);
}

}  // namespace

const std::vector<std::string>& step_names() {
  static const std::vector<std::string> steps{"train-supernet",       "search-arch",      "pretrain-fp",
                                              "train-quant-supernet", "search-quant-pim", "finetune"};
  return steps;
}

std::string weight_tag(double w_acc) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "w%.2f", w_acc);
  return buf;
}

std::string git_blob_sha1(std::string_view content) {
  const std::string head = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, head.data(), head.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string canonical_content(const fs::path& path) {
  const std::string text = read_text(path);
  const std::string ext = path.extension().string();
  if (ext == ".json") {
    nlohmann::json j = nlohmann::json::parse(text);
    strip_wallclock(j);
    return j.dump(2) + "\n";
  }
  if (ext == ".jsonl") {
    std::istringstream is(text);
    std::string line, out;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      strip_wallclock(j);
      out += j.dump() + "\n";
    }
    return out;
  }
  if (ext == ".csv") {
    std::istringstream is(text);
    std::string line, out;
    std::vector<bool> keep;
    bool header = true;
    while (std::getline(is, line)) {
      const auto fields = split_csv_line(line);
      if (header) {
        for (const auto& f : fields) keep.push_back(f.find("wallclock") == std::string::npos);
        header = false;
      }
      std::string row;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i < keep.size() && !keep[i]) continue;
        row += (row.empty() ? "" : ",") + csv_field(fields[i]);
      }
      out += row + "\n";
    }
    return out;
  }
  return text;
}

evo::Evaluation cost_evaluation(const space::Genome& g, const space::SearchSpace& s, const pim::HardwareParams& hw,
                                const pim::HardwareReport& reference) {
  if (!g.quant || !g.pim) throw PipelineError("cost evaluation needs a complete genome");
  const pim::HardwareReport r = pim::estimate_network(g.arch, *g.quant, *g.pim, s, hw);
  evo::Evaluation e;
  e.energy = r.energy;
  e.latency = r.latency;
  e.edp = r.edp;
  e.edp_norm = r.penalized_edp() / reference.edp;
  return e;
}

nlohmann::json cost_report(const std::string& genome, const space::SearchSpace& s, const pim::HardwareParams& hw,
                           const space::PimGenome& default_pim) {
  space::Genome g = space::decode(genome);
  if (!g.quant) g.quant = pim::uniform_quant(g.arch, s, 9, 9);
  if (!g.pim) g.pim = default_pim;
  space::check(g, s);
  const pim::HardwareReport r = pim::estimate_network(g.arch, *g.quant, *g.pim, s, hw);
  const pim::HardwareReport ref = pim::reference_report(s, hw);
  nlohmann::json j = pim::to_json(r);
  j["genome"] = space::encode(g);
  j["edp_norm"] = r.penalized_edp() / ref.edp;
  j["reference_genome"] = space::encode(pim::reference_genome(s));
  j["reference_edp"] = ref.edp;
  return j;
}

void save_subnet(const fs::path& path, const nn::ParamStore<float>& params, const space::SearchSpace& s,
                 const space::ArchGenome& arch, nlohmann::json extra) {
  nn::Checkpoint ck;
  ck.header = std::move(extra);
  ck.header["kind"] = "subnet";
  ck.header["space"] = s;
  ck.header["arch"] = space::encode(arch);
  ck.put_params(params);
  ck.save(path);
}

SubnetCheckpoint load_subnet(const fs::path& path, const space::SearchSpace& s) {
  nn::Checkpoint ck = nn::Checkpoint::load(path);
  if (ck.header.value("kind", "") != "subnet") throw PipelineError(path.string() + ": not a subnet checkpoint");
  if (!(ck.header.at("space").get<space::SearchSpace>() == s)) {
    throw PipelineError(path.string() + ": checkpoint was written for a different search space");
  }
  SubnetCheckpoint out;
  out.arch = space::decode(ck.header.at("arch").get<std::string>()).arch;
  ck.get_params(out.params);
  out.header = ck.header;
  return out;
}

// ---------------------------------------------------------------- Pipeline

Pipeline::Pipeline(RunConfig config, std::ostream* progress)
    : config_(std::move(config)), out_(config_.output_dir), progress_(progress) {
  config_.validate();
  hw_ = config_.hardware_params();
  fs::create_directories(out_);
  const fs::path cfg = out_ / "config.json";
  const nlohmann::json echo = to_json_value(config_);
  if (fs::exists(cfg) && read_json(cfg) != echo) {
    throw PipelineError(cfg.string() + " holds a different configuration; use a fresh output directory");
  }
  write_text(cfg, echo.dump(2) + "\n");
  const fs::path steps = out_ / "steps.json";
  steps_ = fs::exists(steps) ? read_json(steps) : nlohmann::json::object();
}

const Dataset& Pipeline::data() {
  if (!data_) {
    const auto& d = config_.dataset;
    data_ = std::make_unique<Dataset>(d.kind == "cifar10"
                                          ? load_cifar10(d.cifar10_dir, d.val_size, config_.seed)
                                          : make_synthetic(d.synthetic, derive_seed(config_.seed, "dataset")));
    if (data_->num_classes != config_.space.num_classes) {
      throw PipelineError("dataset class count does not match the search space");
    }
  }
  return *data_;
}

void Pipeline::log(const std::string& msg) {
  if (progress_) *progress_ << "[pimnas] " << msg << std::endl;
}

fs::path Pipeline::wdir(double w) const { return out_ / weight_tag(w); }

fs::path Pipeline::require(const fs::path& p) const {
  if (!fs::exists(p)) throw PipelineError("missing artifact " + p.string());
  return p;
}

bool Pipeline::step_done(const std::string& step) const { return steps_.contains(step); }

void Pipeline::mark_done(const std::string& step, double seconds) {
  steps_[step] = {{"wallclock_s", seconds}};
  write_text(out_ / "steps.json", steps_.dump(2) + "\n");
  write_manifest();
}

space::ArchGenome Pipeline::best_arch(double w) const {
  const nlohmann::json j = read_json(require(wdir(w) / "arch_search.json"));
  return space::decode(j.at("best").at("genome").get<std::string>()).arch;
}

space::Genome Pipeline::best_genome(double w) const {
  const nlohmann::json j = read_json(require(wdir(w) / "quant_search.json"));
  return space::decode(j.at("best").at("genome").get<std::string>());
}

nn::ImageSet Pipeline::eval_subset(int n) const {
  return n > 0 ? data_->val.head(static_cast<std::size_t>(n)) : data_->val;
}

void Pipeline::run_step(const std::string& step) {
  const auto t0 = Clock::now();
  data();
  if (step == "train-supernet") {
    train_supernet();
  } else {
    for (double w : config_.w_acc) {
      fs::create_directories(wdir(w));
      if (step == "search-arch") search_arch(w);
      else if (step == "pretrain-fp") pretrain_fp(w);
      else if (step == "train-quant-supernet") train_quant_supernet(w);
      else if (step == "search-quant-pim") search_quant_pim(w);
      else if (step == "finetune") finetune(w);
      else throw PipelineError("unknown step '" + step + "'");
    }
  }
  mark_done(step, seconds_since(t0));
}

void Pipeline::run_all(const std::string& until) {
  const auto& steps = step_names();
  if (!until.empty() && std::find(steps.begin(), steps.end(), until) == steps.end()) {
    throw PipelineError("unknown step '" + until + "'");
  }
  for (const std::string& step : steps) {
    if (step_done(step)) {
      log("step " + step + " already complete; skipping");
    } else {
      log("step " + step);
      run_step(step);
    }
    if (step == until) return;
  }
  report();
  write_manifest();
}

void Pipeline::train_epochs(nn::ParamStore<float>& store, const space::ArchGenome& arch, const TrainSchedule& sched,
                            std::uint64_t seed, const space::QuantGenome* fixed_quant, quant::QuantState* state,
                            bool sample_bits, const std::string& label) {
  nn::Optimizer<float> opt = make_optimizer(sched);
  Rng rng(seed);
  const space::SearchSpace& s = config_.space;
  for (int ep = 0; ep < sched.epochs; ++ep) {
    opt.set_learning_rate(schedule_lr(sched, ep));
    nn::BatchPlan plan(data_->train.size(), static_cast<std::size_t>(sched.batch_size), &rng);
    double total = 0.0;
    for (std::size_t b = 0; b < plan.batches(); ++b) {
      const nn::Batch batch = plan.make(data_->train, b);
      total += sample_bits ? quant::quant_supernet_train_step(store, s, arch, *state, batch, rng, opt).loss
                           : supernet::train_arch_step(store, s, arch, batch, opt, fixed_quant, state);
    }
    log(label + " epoch " + std::to_string(ep + 1) + "/" + std::to_string(sched.epochs) + " loss " +
        num(total / static_cast<double>(plan.batches())));
  }
}

void Pipeline::train_supernet() {
  const space::SearchSpace& s = config_.space;
  const std::uint64_t seed = derive_seed(config_.seed, "train-supernet");
  supernet::Supernet net(s, seed);
  nn::Optimizer<float> opt = make_optimizer(config_.supernet);
  Rng rng(derive_seed(seed, "steps"));
  for (int ep = 0; ep < config_.supernet.epochs; ++ep) {
    opt.set_learning_rate(schedule_lr(config_.supernet, ep));
    nn::BatchPlan plan(data_->train.size(), static_cast<std::size_t>(config_.supernet.batch_size), &rng);
    double total = 0.0;
    for (std::size_t b = 0; b < plan.batches(); ++b) total += net.train_step(plan.make(data_->train, b), rng, opt).loss;
    log("supernet epoch " + std::to_string(ep + 1) + "/" + std::to_string(config_.supernet.epochs) + " loss " +
        num(total / static_cast<double>(plan.batches())));
  }
  net.save(out_ / "supernet.ckpt", {{"epochs", config_.supernet.epochs}});
}

void Pipeline::search_arch(double w) {
  const space::SearchSpace& s = config_.space;
  const auto t0 = Clock::now();
  supernet::Supernet net = supernet::Supernet::load(require(out_ / "supernet.ckpt"), s);
  const SearchSettings& ss = config_.arch_search;
  const nn::ImageSet val = eval_subset(ss.eval_size);
  const pim::HardwareReport ref = pim::reference_report(s, hw_);

  evo::EvolutionConfig ec = ss.evolution;
  ec.w_acc = w;
  ec.seed = derive_seed(config_.seed, "search-arch");
  evo::ArchDomain domain(s);
  evo::Evaluator<space::ArchGenome> evaluate = [&](const space::ArchGenome& arch, std::uint64_t) {
    const space::Genome g{arch, pim::uniform_quant(arch, s, config_.phase1_wb, config_.phase1_ab),
                          config_.phase1_pim};
    evo::Evaluation e = cost_evaluation(g, s, hw_, ref);
    if (w > 0.0) {
      const std::string key = "arch|" + space::encode(arch);
      auto it = accuracy_memo_.find(key);
      if (it == accuracy_memo_.end()) {
        nn::ParamStore<float> sub = net.extract(arch);
        supernet::recalibrate_bn(sub, s, arch, data_->train, ss.bn_batch_size, ss.bn_batches);
        it = accuracy_memo_.emplace(key, supernet::evaluate_accuracy(sub, s, arch, val)).first;
      }
      e.accuracy = it->second;
    }
    return e;
  };
  std::ofstream logf(wdir(w) / "arch_search.jsonl");
  const evo::EvolutionResult r = evo::run_evolution(domain, evaluate, ec, &logf);
  logf.close();
  nlohmann::json summary{{"w_acc", w},
                         {"best", evo::to_json(r.best)},
                         {"evolution", ec},
                         {"requests", r.requests},
                         {"evaluations", r.evaluations},
                         {"cache_hits", r.cache_hits},
                         {"best_per_cycle", r.best_per_cycle},
                         {"search_wallclock_s", seconds_since(t0)}};
  write_text(wdir(w) / "arch_search.json", summary.dump(2) + "\n");
  write_text(wdir(w) / "arch.txt", r.best.genome + "\n");
  log(weight_tag(w) + " architecture " + r.best.genome + " fitness " + num(r.best.fitness));
}

void Pipeline::pretrain_fp(double w) {
  const space::SearchSpace& s = config_.space;
  const space::ArchGenome arch = best_arch(w);
  supernet::Supernet net = supernet::Supernet::load(require(out_ / "supernet.ckpt"), s);
  nn::ParamStore<float> store = net.extract(arch);
  const std::uint64_t seed = derive_seed(config_.seed, "pretrain-fp|" + space::encode(arch));
  train_epochs(store, arch, config_.pretrain, seed, nullptr, nullptr, false, weight_tag(w) + " fp");
  supernet::recalibrate_bn(store, s, arch, data_->train, config_.arch_search.bn_batch_size,
                           config_.arch_search.bn_batches);
  const double acc = supernet::evaluate_accuracy(store, s, arch, data_->val);
  save_subnet(wdir(w) / "fp.ckpt", store, s, arch, {{"val_accuracy", acc}});
  log(weight_tag(w) + " floating-point validation accuracy " + num(acc));
}

void Pipeline::train_quant_supernet(double w) {
  const space::SearchSpace& s = config_.space;
  SubnetCheckpoint ck = load_subnet(require(wdir(w) / "fp.ckpt"), s);
  quant::QuantState state(config_.ema_momentum);
  const std::uint64_t seed = derive_seed(config_.seed, "train-quant-supernet|" + space::encode(ck.arch));
  train_epochs(ck.params, ck.arch, config_.quant_train, seed, nullptr, &state, true, weight_tag(w) + " qat");
  save_subnet(wdir(w) / "quant_supernet.ckpt", ck.params, s, ck.arch, {{"quant_state", state.to_json()}});
}

void Pipeline::search_quant_pim(double w) {
  const space::SearchSpace& s = config_.space;
  const auto t0 = Clock::now();
  const SubnetCheckpoint ck = load_subnet(require(wdir(w) / "quant_supernet.ckpt"), s);
  const quant::QuantState base_state = quant::QuantState::from_json(ck.header.at("quant_state"));
  const SearchSettings& ss = config_.quant_search;
  const nn::ImageSet val = eval_subset(ss.eval_size);
  const pim::HardwareReport ref = pim::reference_report(s, hw_);

  evo::EvolutionConfig ec = ss.evolution;
  ec.w_acc = w;
  ec.seed = derive_seed(config_.seed, "search-quant-pim|" + space::encode(ck.arch));
  evo::QuantPimDomain domain(s, ck.arch);
  evo::Evaluator<space::Genome> evaluate = [&](const space::Genome& g, std::uint64_t) {
    evo::Evaluation e = cost_evaluation(g, s, hw_, ref);
    if (w > 0.0) {
      const std::string key = "quant|" + space::encode(g);
      auto it = accuracy_memo_.find(key);
      if (it == accuracy_memo_.end()) {
        nn::ParamStore<float> store = ck.params;
        quant::QuantState state = base_state;
        supernet::recalibrate_bn(store, s, g.arch, data_->train, ss.bn_batch_size, ss.bn_batches, &*g.quant,
                                 &state);
        const std::vector<int> pred = pim::pim_inference(s, g.arch, store, *g.quant, state, *g.pim, val);
        it = accuracy_memo_.emplace(key, supernet::accuracy(pred, val.labels)).first;
      }
      e.accuracy = it->second;
    }
    return e;
  };
  std::ofstream logf(wdir(w) / "quant_search.jsonl");
  const evo::EvolutionResult r = evo::run_evolution(domain, evaluate, ec, &logf);
  logf.close();
  nlohmann::json summary{{"w_acc", w},
                         {"best", evo::to_json(r.best)},
                         {"evolution", ec},
                         {"requests", r.requests},
                         {"evaluations", r.evaluations},
                         {"cache_hits", r.cache_hits},
                         {"best_per_cycle", r.best_per_cycle},
                         {"search_wallclock_s", seconds_since(t0)}};
  write_text(wdir(w) / "quant_search.json", summary.dump(2) + "\n");
  write_text(wdir(w) / "genome.txt", r.best.genome + "\n");
  log(weight_tag(w) + " genome " + r.best.genome + " fitness " + num(r.best.fitness));
}

void Pipeline::finetune(double w) {
  const space::SearchSpace& s = config_.space;
  const space::Genome g = best_genome(w);
  SubnetCheckpoint ck = load_subnet(require(wdir(w) / "quant_supernet.ckpt"), s);
  if (!(ck.arch == g.arch)) throw PipelineError("selected genome does not match the quantized supernet");
  quant::QuantState state = quant::QuantState::from_json(ck.header.at("quant_state"));
  const std::uint64_t seed = derive_seed(config_.seed, "finetune|" + space::encode(g));
  train_epochs(ck.params, g.arch, config_.finetune, seed, &*g.quant, &state, false, weight_tag(w) + " finetune");
  supernet::recalibrate_bn(ck.params, s, g.arch, data_->train, config_.quant_search.bn_batch_size,
                           config_.quant_search.bn_batches, &*g.quant, &state);

  const std::vector<int> test_pred = pim::pim_inference(s, g.arch, ck.params, *g.quant, state, *g.pim, data_->test);
  const std::vector<int> val_pred = pim::pim_inference(s, g.arch, ck.params, *g.quant, state, *g.pim, data_->val);
  const double test_acc = supernet::accuracy(test_pred, data_->test.labels);
  const double val_acc = supernet::accuracy(val_pred, data_->val.labels);

  std::string csv = "index,label,prediction\n";
  for (std::size_t i = 0; i < test_pred.size(); ++i) {
    csv += std::to_string(i) + "," + std::to_string(data_->test.labels[i]) + "," + std::to_string(test_pred[i]) + "\n";
  }
  write_text(wdir(w) / "predictions.csv", csv);

  const pim::HardwareReport hw = pim::estimate_network(g.arch, *g.quant, *g.pim, s, hw_);
  const pim::HardwareReport ref = pim::reference_report(s, hw_);
  nlohmann::json hj = pim::to_json(hw);
  hj["genome"] = space::encode(g);
  hj["edp_norm"] = hw.penalized_edp() / ref.edp;
  hj["reference_edp"] = ref.edp;
  write_text(wdir(w) / "hardware.json", hj.dump(2) + "\n");

  save_subnet(wdir(w) / "final.ckpt", ck.params, s, g.arch,
              {{"quant_state", state.to_json()}, {"genome", space::encode(g)}});
  const nlohmann::json fin{{"w_acc", w},
                           {"genome", space::encode(g)},
                           {"test_accuracy", test_acc},
                           {"val_accuracy", val_acc},
                           {"edp_norm", hj["edp_norm"]}};
  write_text(wdir(w) / "final.json", fin.dump(2) + "\n");
  log(weight_tag(w) + " final PIM test accuracy " + num(test_acc) + " EDP " + num(hw.edp));
}

nlohmann::json Pipeline::report() {
  std::string csv =
      "w_acc,genome,accuracy,val_accuracy,energy_mj,latency_ms,edp,edp_norm,area_mm2,fitness,search_wallclock_s\n";
  nlohmann::json rows = nlohmann::json::array();
  for (double w : config_.w_acc) {
    const fs::path d = wdir(w);
    const nlohmann::json fin = read_json(require(d / "final.json"));
    const nlohmann::json hw = read_json(require(d / "hardware.json"));
    const nlohmann::json a = read_json(require(d / "arch_search.json"));
    const nlohmann::json q = read_json(require(d / "quant_search.json"));
    require(d / "predictions.csv");
    const double acc = fin.at("test_accuracy").get<double>();
    const double edp_n = hw.at("edp_norm").get<double>();
    const double wall = a.at("search_wallclock_s").get<double>() + q.at("search_wallclock_s").get<double>();
    nlohmann::json row{{"w_acc", w},
                       {"genome", fin.at("genome")},
                       {"accuracy", acc},
                       {"val_accuracy", fin.at("val_accuracy")},
                       {"energy_mj", hw.at("energy_mj")},
                       {"latency_ms", hw.at("latency_ms")},
                       {"edp", hw.at("edp")},
                       {"edp_norm", edp_n},
                       {"area_mm2", hw.at("area_mm2")},
                       {"fitness", evo::fitness(acc, edp_n, w)},
                       {"search_wallclock_s", wall}};
    csv += num(w) + "," + csv_field(row["genome"].get<std::string>()) + "," + num(acc) + "," +
           num(row["val_accuracy"].get<double>()) + "," + num(row["energy_mj"].get<double>()) + "," +
           num(row["latency_ms"].get<double>()) + "," + num(row["edp"].get<double>()) + "," + num(edp_n) + "," +
           num(row["area_mm2"].get<double>()) + "," + num(row["fitness"].get<double>()) + "," + num(wall) + "\n";
    rows.push_back(row);
  }
  write_text(out_ / "pareto.csv", csv);
  const nlohmann::json summary{{"rows", rows},
                               {"reference_genome", space::encode(pim::reference_genome(config_.space))},
                               {"reference_edp", pim::reference_report(config_.space, hw_).edp},
                               {"config", to_json_value(config_)}};
  write_text(out_ / "summary.json", summary.dump(2) + "\n");
  return summary;
}

nlohmann::json Pipeline::write_manifest() {
  nlohmann::json artifacts = nlohmann::json::array();
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(out_)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), out_);
    if (rel == "manifest.json" || rel.extension() == ".tmp") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& rel : files) {
    artifacts.push_back({{"path", rel.generic_string()}, {"sha1", git_blob_sha1(canonical_content(out_ / rel))}});
  }
  nlohmann::json inputs = nlohmann::json::array();
  if (!config_.hardware.empty()) {
    inputs.push_back({{"path", config_.hardware}, {"sha1", git_blob_sha1(read_text(config_.hardware))}});
  }
  if (config_.dataset.kind == "cifar10") {
    for (const char* f : {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin",
                          "data_batch_5.bin", "test_batch.bin"}) {
      const fs::path p = fs::path(config_.dataset.cifar10_dir) / f;
      if (fs::exists(p)) inputs.push_back({{"path", p.string()}, {"sha1", git_blob_sha1(read_text(p))}});
    }
  }
  const nlohmann::json m{{"config", to_json_value(config_)},
                         {"steps", steps_},
                         {"artifacts", artifacts},
                         {"inputs", inputs}};
  write_text(out_ / "manifest.json", m.dump(2) + "\n");
  return m;
}

}  // namespace pimnas::pipeline
