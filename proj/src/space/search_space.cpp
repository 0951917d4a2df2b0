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


#include "pimnas/space/search_space.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <sstream>

namespace pimnas::space {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      break;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

int parse_int(std::string_view s, std::string_view what) {
  s = trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw GenomeError("invalid integer '" + std::string(s) + "' for " + std::string(what));
  }
  return v;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

LayerDesc conv_desc(std::string name, LayerKind kind, int in_ch, int out_ch, int stride, int size) {
  LayerDesc d;
  d.name = std::move(name);
  d.kind = kind;
  d.in_channels = in_ch;
  d.out_channels = out_ch;
  d.kernel = kind == LayerKind::kConv3x3 ? 3 : 1;
  d.pad = kind == LayerKind::kConv3x3 ? 1 : 0;
  d.stride = stride;
  d.in_h = d.in_w = size;
  d.out_h = d.out_w = (size + 2 * d.pad - d.kernel) / stride + 1;
  return d;
}

}  // namespace

std::string_view block_type_name(BlockType t) {
  switch (t) {
    case BlockType::kVgg:
      return "VGG";
    case BlockType::kMvgg:
      return "MVGG";
    case BlockType::kRes:
      return "RES";
  }
  return "?";
}

BlockType parse_block_type(std::string_view s) {
  s = trim(s);
  std::string up(s);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "VGG") return BlockType::kVgg;
  if (up == "MVGG") return BlockType::kMvgg;
  if (up == "RES") return BlockType::kRes;
  throw GenomeError("unknown block type '" + std::string(s) + "'");
}

std::string path_tag(BlockType t) {
  switch (t) {
    case BlockType::kVgg:
      return "vgg";
    case BlockType::kMvgg:
      return "mvgg";
    case BlockType::kRes:
      return "res";
  }
  return "?";
}

std::string block_prefix(int slot, BlockType t) { return "b" + std::to_string(slot) + "." + path_tag(t); }

// ----------------------------------------------------------- SearchSpace

SearchSpace SearchSpace::table1() { return SearchSpace{}; }

SearchSpace SearchSpace::desk() {
  SearchSpace s;
  s.name = "desk";
  s.d_max = 3;
  s.channel_choices = {8, 16, 32};
  s.image_size = 16;
  return s;
}

SearchSpace SearchSpace::by_name(std::string_view name) {
  if (name == "table1") return table1();
  if (name == "table1-stride2") {
    SearchSpace s = table1();
    s.name = "table1-stride2";
    s.res_stride2 = true;
    return s;
  }
  if (name == "desk") return desk();
  throw GenomeError("unknown search space profile '" + std::string(name) + "'");
}

int SearchSpace::max_channels() const {
  return *std::max_element(channel_choices.begin(), channel_choices.end());
}

int SearchSpace::choices_per_block() const {
  int per_channel = 0;
  for (BlockType t : block_types) per_channel += (t == BlockType::kRes && res_stride2) ? 2 : 1;
  return per_channel * static_cast<int>(channel_choices.size());
}

void SearchSpace::validate() const {
  auto fail = [&](const std::string& m) { throw GenomeError("search space " + name + ": " + m); };
  if (d_max < 1) fail("d_max must be >= 1");
  if (block_types.empty() || channel_choices.empty()) fail("empty architecture domain");
  if (!std::is_sorted(channel_choices.begin(), channel_choices.end())) fail("channel choices must ascend");
  for (int c : channel_choices) {
    if (c < 1) fail("channel count below 1");
  }
  if (image_size < 1 || image_channels < 1) fail("bad input geometry");
  if (num_classes < 2) fail("need at least two classes");
  if (head_pool < 1) fail("head pool extent below 1");
  if (weight_bits.empty() || act_bits.empty() || xbar_sizes.empty() || adc_bits.empty() ||
      dac_bits.empty()) {
    fail("empty quantization or circuit domain");
  }
  for (int b : weight_bits) {
    if (b < 2) fail("weight bit width below 2");
  }
  for (int b : act_bits) {
    if (b < 2) fail("activation bit width below 2");
  }
}

void to_json(nlohmann::json& j, const SearchSpace& s) {
  std::vector<std::string> types;
  for (BlockType t : s.block_types) types.emplace_back(block_type_name(t));
  j = nlohmann::json{{"name", s.name},
                     {"d_max", s.d_max},
                     {"block_types", types},
                     {"channel_choices", s.channel_choices},
                     {"res_stride2", s.res_stride2},
                     {"image_size", s.image_size},
                     {"image_channels", s.image_channels},
                     {"num_classes", s.num_classes},
                     {"head_pool", s.head_pool},
                     {"head_bits", s.head_bits},
                     {"weight_bits", s.weight_bits},
                     {"act_bits", s.act_bits},
                     {"xbar_sizes", s.xbar_sizes},
                     {"adc_bits", s.adc_bits},
                     {"dac_bits", s.dac_bits}};
}

void from_json(const nlohmann::json& j, SearchSpace& s) {
  static const char* const kFields[] = {"d_max",      "block_types", "channel_choices", "res_stride2",
                                        "image_size", "image_channels", "num_classes",   "head_pool",
                                        "head_bits",  "weight_bits", "act_bits",        "xbar_sizes",
                                        "adc_bits",   "dac_bits"};
  SearchSpace b;
  if (j.contains("name")) {
    const std::string name = j.at("name").get<std::string>();
    // a fully specified space may carry any name; otherwise the name picks a profile
    const bool complete = std::all_of(std::begin(kFields), std::end(kFields),
                                      [&](const char* k) { return j.contains(k); });
    if (complete) {
      b.name = name;
    } else {
      b = SearchSpace::by_name(name);
    }
  }
  b.d_max = j.value("d_max", b.d_max);
  if (j.contains("block_types")) {
    b.block_types.clear();
    for (const auto& t : j.at("block_types")) b.block_types.push_back(parse_block_type(t.get<std::string>()));
  }
  b.channel_choices = j.value("channel_choices", b.channel_choices);
  b.res_stride2 = j.value("res_stride2", b.res_stride2);
  b.image_size = j.value("image_size", b.image_size);
  b.image_channels = j.value("image_channels", b.image_channels);
  b.num_classes = j.value("num_classes", b.num_classes);
  b.head_pool = j.value("head_pool", b.head_pool);
  b.head_bits = j.value("head_bits", b.head_bits);
  b.weight_bits = j.value("weight_bits", b.weight_bits);
  b.act_bits = j.value("act_bits", b.act_bits);
  b.xbar_sizes = j.value("xbar_sizes", b.xbar_sizes);
  b.adc_bits = j.value("adc_bits", b.adc_bits);
  b.dac_bits = j.value("dac_bits", b.dac_bits);
  s = std::move(b);
}

// ------------------------------------------------------------ text format

std::string encode(const ArchGenome& g) {
  std::ostringstream os;
  os << "n=" << g.depth() << "; blocks=";
  for (std::size_t i = 0; i < g.blocks.size(); ++i) {
    const BlockGene& b = g.blocks[i];
    os << (i ? "," : "") << block_type_name(b.type) << "/" << b.out_channels << "/" << b.stride;
  }
  return os.str();
}

std::string encode(const QuantGenome& q) {
  std::ostringstream os;
  for (std::size_t i = 0; i < q.layers.size(); ++i) {
    os << (i ? "," : "") << q.layers[i].weight_bits << ":" << q.layers[i].act_bits;
  }
  return os.str();
}

std::string encode(const PimGenome& p) {
  return std::to_string(p.xbar) + "/" + std::to_string(p.adc_bits) + "/" + std::to_string(p.dac_bits);
}

std::string encode(const Genome& g) {
  std::string s = encode(g.arch);
  if (g.quant) s += "; quant=" + encode(*g.quant);
  if (g.pim) s += "; pim=" + encode(*g.pim);
  return s;
}

Genome decode(std::string_view text) {
  Genome g;
  std::optional<int> n;
  bool saw_blocks = false;
  for (std::string_view field : split(text, ';')) {
    if (field.empty()) continue;
    const std::size_t eq = field.find('=');
    if (eq == std::string_view::npos) throw GenomeError("genome field '" + std::string(field) + "' lacks '='");
    const std::string_view key = trim(field.substr(0, eq));
    const std::string_view value = trim(field.substr(eq + 1));
    if (key == "n") {
      n = parse_int(value, "n");
    } else if (key == "blocks") {
      saw_blocks = true;
      if (value.empty()) continue;
      for (std::string_view item : split(value, ',')) {
        const auto parts = split(item, '/');
        if (parts.size() != 3) throw GenomeError("block '" + std::string(item) + "' must be TYPE/CHANNELS/STRIDE");
        g.arch.blocks.push_back(
            {parse_block_type(parts[0]), parse_int(parts[1], "channels"), parse_int(parts[2], "stride")});
      }
    } else if (key == "quant") {
      QuantGenome q;
      if (!value.empty()) {
        for (std::string_view item : split(value, ',')) {
          const auto parts = split(item, ':');
          if (parts.size() != 2) throw GenomeError("quant entry '" + std::string(item) + "' must be WB:AB");
          q.layers.push_back({parse_int(parts[0], "weight bits"), parse_int(parts[1], "activation bits")});
        }
      }
      g.quant = std::move(q);
    } else if (key == "pim") {
      const auto parts = split(value, '/');
      if (parts.size() != 3) throw GenomeError("pim '" + std::string(value) + "' must be XBAR/ADC/DAC");
      g.pim = PimGenome{parse_int(parts[0], "xbar"), parse_int(parts[1], "adc"), parse_int(parts[2], "dac")};
    } else {
      throw GenomeError("unknown genome field '" + std::string(key) + "'");
    }
  }
  if (!n) throw GenomeError("genome lacks n=");
  if (!saw_blocks) throw GenomeError("genome lacks blocks=");
  if (*n != g.arch.depth()) {
    throw GenomeError("genome declares n=" + std::to_string(*n) + " but lists " +
                      std::to_string(g.arch.depth()) + " blocks");
  }
  return g;
}

// ------------------------------------------------------------- validation

std::string arch_violation(const ArchGenome& g, const SearchSpace& s) {
  if (g.depth() < 1 || g.depth() > s.d_max) {
    return "depth " + std::to_string(g.depth()) + " outside 1.." + std::to_string(s.d_max);
  }
  int size = s.image_size;
  for (int i = 0; i < g.depth(); ++i) {
    const BlockGene& b = g.blocks[i];
    const std::string where = "block " + std::to_string(i + 1) + ": ";
    if (std::find(s.block_types.begin(), s.block_types.end(), b.type) == s.block_types.end()) {
      return where + "block type " + std::string(block_type_name(b.type)) + " not in domain";
    }
    if (!contains(s.channel_choices, b.out_channels)) {
      return where + "channel count " + std::to_string(b.out_channels) + " not in {" +
             join_ints(s.channel_choices) + "}";
    }
    const bool stride2_ok = b.type == BlockType::kRes && s.res_stride2;
    if (b.stride != 1 && !(b.stride == 2 && stride2_ok)) {
      return where + "stride " + std::to_string(b.stride) + " not allowed for " +
             std::string(block_type_name(b.type));
    }
    if (b.type == BlockType::kVgg) {
      if (size < 2) return where + "max-pool would shrink the feature map below 1x1";
      size /= 2;
    } else if (b.stride == 2) {
      size = (size - 1) / 2 + 1;
    }
  }
  return {};
}

bool is_feasible(const ArchGenome& g, const SearchSpace& s) { return arch_violation(g, s).empty(); }

std::string quant_violation(const QuantGenome& q, const ArchGenome& g, const SearchSpace& s) {
  const std::size_t expected = quantizable_layers(g, s).size();
  if (q.layers.size() != expected) {
    return "bit-width map has " + std::to_string(q.layers.size()) + " entries, architecture has " +
           std::to_string(expected) + " quantizable layers";
  }
  for (std::size_t i = 0; i < q.layers.size(); ++i) {
    if (!contains(s.weight_bits, q.layers[i].weight_bits) || !contains(s.act_bits, q.layers[i].act_bits)) {
      return "layer " + std::to_string(i) + " bit widths " + std::to_string(q.layers[i].weight_bits) + ":" +
             std::to_string(q.layers[i].act_bits) + " not in domain";
    }
  }
  return {};
}

std::string pim_violation(const PimGenome& p, const SearchSpace& s) {
  if (!contains(s.xbar_sizes, p.xbar)) return "crossbar size " + std::to_string(p.xbar) + " not in domain";
  if (!contains(s.adc_bits, p.adc_bits)) return "ADC resolution " + std::to_string(p.adc_bits) + " not in domain";
  if (!contains(s.dac_bits, p.dac_bits)) return "DAC resolution " + std::to_string(p.dac_bits) + " not in domain";
  return {};
}

void check(const Genome& g, const SearchSpace& s) {
  std::string msg = arch_violation(g.arch, s);
  if (msg.empty() && g.quant) msg = quant_violation(*g.quant, g.arch, s);
  if (msg.empty() && g.pim) msg = pim_violation(*g.pim, s);
  if (!msg.empty()) throw GenomeError("invalid genome '" + encode(g) + "': " + msg);
}

// --------------------------------------------------------------- sampling

ArchGenome sample_arch(const SearchSpace& s, Rng& rng, int max_retries) {
  std::uniform_int_distribution<int> depth(1, s.d_max);
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    ArchGenome g;
    const int n = depth(rng);
    for (int i = 0; i < n; ++i) {
      BlockGene b;
      b.type = pick(s.block_types, rng);
      b.out_channels = pick(s.channel_choices, rng);
      if (b.type == BlockType::kRes && s.res_stride2) b.stride = std::uniform_int_distribution<int>(1, 2)(rng);
      g.blocks.push_back(b);
    }
    if (is_feasible(g, s)) return g;
  }
  throw GenomeError("no feasible architecture after " + std::to_string(max_retries) + " retries");
}

QuantGenome sample_quant(int num_layers, const SearchSpace& s, Rng& rng) {
  QuantGenome q;
  for (int i = 0; i < num_layers; ++i) {
    LayerBits b;
    b.weight_bits = pick(s.weight_bits, rng);
    b.act_bits = pick(s.act_bits, rng);
    q.layers.push_back(b);
  }
  return q;
}

PimGenome sample_pim(const SearchSpace& s, Rng& rng) {
  PimGenome p;
  p.xbar = pick(s.xbar_sizes, rng);
  p.adc_bits = pick(s.adc_bits, rng);
  p.dac_bits = pick(s.dac_bits, rng);
  return p;
}

std::uint64_t space_size(const SearchSpace& s) {
  const auto c = static_cast<std::uint64_t>(s.choices_per_block());
  std::uint64_t total = 0, term = 1;
  for (int n = 1; n <= s.d_max; ++n) {
    if (term > std::numeric_limits<std::uint64_t>::max() / c) throw GenomeError("search space size overflows");
    term *= c;
    total += term;
  }
  return total;
}

std::vector<ArchGenome> enumerate_archs(const SearchSpace& s) {
  std::vector<BlockGene> genes;
  for (BlockType t : s.block_types) {
    for (int ch : s.channel_choices) {
      genes.push_back({t, ch, 1});
      if (t == BlockType::kRes && s.res_stride2) genes.push_back({t, ch, 2});
    }
  }
  std::vector<ArchGenome> out;
  std::vector<ArchGenome> frontier{ArchGenome{}};
  for (int n = 1; n <= s.d_max; ++n) {
    std::vector<ArchGenome> next;
    next.reserve(frontier.size() * genes.size());
    for (const ArchGenome& g : frontier) {
      for (const BlockGene& b : genes) {
        ArchGenome h = g;
        h.blocks.push_back(b);
        next.push_back(std::move(h));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// ----------------------------------------------------------- layer shapes

std::string_view layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv3x3:
      return "conv3x3";
    case LayerKind::kConv1x1:
      return "conv1x1";
    case LayerKind::kFc:
      return "fc";
  }
  return "?";
}

std::vector<LayerDesc> quantizable_layers(const ArchGenome& g, const SearchSpace& s) {
  const std::string bad = arch_violation(g, s);
  if (!bad.empty()) throw GenomeError("infeasible architecture '" + encode(g) + "': " + bad);
  std::vector<LayerDesc> layers;
  int in_ch = s.image_channels;
  int size = s.image_size;
  for (int i = 0; i < g.depth(); ++i) {
    const BlockGene& b = g.blocks[i];
    const std::string p = block_prefix(i, b.type);
    const int c = b.out_channels;
    if (b.type == BlockType::kRes) {
      LayerDesc c1 = conv_desc(p + ".conv1", LayerKind::kConv3x3, in_ch, c, b.stride, size);
      const int out = c1.out_h;
      LayerDesc c2 = conv_desc(p + ".conv2", LayerKind::kConv3x3, c, c, 1, out);
      LayerDesc sc = conv_desc(p + ".shortcut", LayerKind::kConv1x1, in_ch, c, b.stride, size);
      sc.residual_elements = c * out * out;
      layers.push_back(std::move(c1));
      layers.push_back(std::move(c2));
      layers.push_back(std::move(sc));
      size = out;
    } else {
      layers.push_back(conv_desc(p + ".conv1", LayerKind::kConv3x3, in_ch, c, 1, size));
      LayerDesc c2 = conv_desc(p + ".conv2", LayerKind::kConv3x3, c, c, 1, size);
      if (b.type == BlockType::kVgg) {
        c2.pooled_elements = c * size * size;
        size /= 2;
      }
      layers.push_back(std::move(c2));
    }
    in_ch = c;
  }
  return layers;
}

std::vector<LayerDesc> network_layers(const ArchGenome& g, const SearchSpace& s) {
  std::vector<LayerDesc> layers = quantizable_layers(g, s);
  const int last_c = g.blocks.back().out_channels;
  int size = s.image_size;
  for (const BlockGene& b : g.blocks) {
    if (b.type == BlockType::kVgg) size /= 2;
    else if (b.stride == 2) size = (size - 1) / 2 + 1;
  }
  LayerDesc fc;
  fc.name = "head.fc";
  fc.kind = LayerKind::kFc;
  fc.in_channels = last_c * s.head_pool * s.head_pool;
  fc.out_channels = s.num_classes;
  fc.kernel = 1;
  fc.stride = 1;
  fc.pad = 0;
  fc.in_h = fc.in_w = fc.out_h = fc.out_w = 1;
  fc.quantizable = false;
  fc.pooled_elements = last_c * size * size;
  layers.push_back(std::move(fc));
  return layers;
}

}  // namespace pimnas::space
