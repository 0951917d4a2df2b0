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

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pimnas/rng.hpp"

namespace pimnas::space {

class GenomeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BlockType { kVgg, kMvgg, kRes };

std::string_view block_type_name(BlockType t);  // "VGG", "MVGG", "RES"
BlockType parse_block_type(std::string_view s);

struct BlockGene {
  BlockType type = BlockType::kVgg;
  int out_channels = 32;
  int stride = 1;
  bool operator==(const BlockGene&) const = default;
};

struct ArchGenome {
  std::vector<BlockGene> blocks;
  int depth() const { return static_cast<int>(blocks.size()); }
  bool operator==(const ArchGenome&) const = default;
};

struct LayerBits {
  int weight_bits = 9;
  int act_bits = 9;
  bool operator==(const LayerBits&) const = default;
};

/// Per quantizable layer bit widths, in quantizable_layers() order.
struct QuantGenome {
  std::vector<LayerBits> layers;
  bool operator==(const QuantGenome&) const = default;
};

/// One global circuit configuration per candidate.
struct PimGenome {
  int xbar = 256;
  int adc_bits = 8;
  int dac_bits = 2;
  bool operator==(const PimGenome&) const = default;
};

/// Full candidate as it appears in logs and seed files.
struct Genome {
  ArchGenome arch;
  std::optional<QuantGenome> quant;
  std::optional<PimGenome> pim;
  bool operator==(const Genome&) const = default;
};

/// Legal domains of every gene plus the input/head geometry they act on.
struct SearchSpace {
  std::string name = "table1";
  int d_max = 8;
  std::vector<BlockType> block_types{BlockType::kVgg, BlockType::kMvgg, BlockType::kRes};
  std::vector<int> channel_choices{32, 64, 128};
  bool res_stride2 = false;  // RES blocks may use stride 2
  int image_size = 32;
  int image_channels = 3;
  int num_classes = 10;
  int head_pool = 4;   // adaptive average pool output extent
  int head_bits = 9;   // fixed head weight/activation precision
  std::vector<int> weight_bits{5, 7, 9};
  std::vector<int> act_bits{5, 7, 9};
  std::vector<int> xbar_sizes{32, 64, 128, 256};
  std::vector<int> adc_bits{4, 6, 8, 10};
  std::vector<int> dac_bits{1, 2};

  /// Architecture domains of the published search space (32x32 inputs).
  static SearchSpace table1();
  /// Desk-scale profile: 16x16 inputs, depth <= 3, channels {8, 16, 32}.
  static SearchSpace desk();
  static SearchSpace by_name(std::string_view name);

  int max_channels() const;
  /// Number of distinct block genes, counting the stride gene where legal.
  int choices_per_block() const;
  void validate() const;
  bool operator==(const SearchSpace&) const = default;
};

void to_json(nlohmann::json& j, const SearchSpace& s);
void from_json(const nlohmann::json& j, SearchSpace& s);

// ------------------------------------------------------------- text format

std::string encode(const ArchGenome& g);
std::string encode(const Genome& g);
std::string encode(const QuantGenome& q);
std::string encode(const PimGenome& p);
/// Parses `n=K; blocks=T/C/S,...[; quant=W:A,...][; pim=X/A/D]`.
Genome decode(std::string_view text);

// ------------------------------------------------------------- validation

/// Empty when `g` is legal in `s`, otherwise a description of the first violation.
std::string arch_violation(const ArchGenome& g, const SearchSpace& s);
bool is_feasible(const ArchGenome& g, const SearchSpace& s);
std::string quant_violation(const QuantGenome& q, const ArchGenome& g, const SearchSpace& s);
std::string pim_violation(const PimGenome& p, const SearchSpace& s);
/// Throws GenomeError describing every invalid part of `g`.
void check(const Genome& g, const SearchSpace& s);

// ---------------------------------------------------------------- sampling

/// Uniform genome; infeasible draws are redrawn up to `max_retries` times.
ArchGenome sample_arch(const SearchSpace& s, Rng& rng, int max_retries = 1000);
QuantGenome sample_quant(int num_layers, const SearchSpace& s, Rng& rng);
PimGenome sample_pim(const SearchSpace& s, Rng& rng);

/// Count of raw genomes: sum over n = 1..d_max of choices_per_block^n.
std::uint64_t space_size(const SearchSpace& s);
/// Every raw genome (feasible or not), depth-major. Intended for small spaces.
std::vector<ArchGenome> enumerate_archs(const SearchSpace& s);

// ------------------------------------------------------------ layer shapes

enum class LayerKind { kConv3x3, kConv1x1, kFc };
std::string_view layer_kind_name(LayerKind k);

struct LayerDesc {
  std::string name;
  LayerKind kind = LayerKind::kConv3x3;
  int in_channels = 0;   // fc: input features
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int in_h = 0, in_w = 0;
  int out_h = 0, out_w = 0;
  bool quantizable = true;
  int pooled_elements = 0;   // max-pool input elements consumed after this layer
  int residual_elements = 0; // elementwise additions after this layer

  int rows() const { return in_channels * kernel * kernel; }
  int output_pixels() const { return out_h * out_w; }
};

/// Conv layers whose bit widths are searched, in genome order:
/// conv1, conv2 per VGG/MVGG block; conv1, conv2, shortcut per RES block.
std::vector<LayerDesc> quantizable_layers(const ArchGenome& g, const SearchSpace& s);
/// quantizable_layers() followed by the fixed-precision fc head.
std::vector<LayerDesc> network_layers(const ArchGenome& g, const SearchSpace& s);

/// Lower-case path tag used in parameter names: "vgg", "mvgg", "res".
std::string path_tag(BlockType t);
/// Parameter-name prefix of a block: "b<slot>.<path>".
std::string block_prefix(int slot, BlockType t);

}  // namespace pimnas::space
