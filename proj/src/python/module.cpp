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


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pimnas/evo/evolution.hpp"
#include "pimnas/pim/crossbar.hpp"
#include "pimnas/pipeline/pipeline.hpp"
#include "pimnas/quant/quantizer.hpp"
#include "pimnas/space/search_space.hpp"

namespace py = pybind11;
using namespace pimnas;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

pim::HardwareParams hardware_from(const std::string& path) {
  return path.empty() ? pim::HardwareParams{} : pim::HardwareParams::load(path);
}

Array quantize_array(const Array& x, double alpha, int bits) {
  Array out(x.request().shape);
  quant::quantize_tensor<double>(std::span<const double>(x.data(), x.size()),
                                 std::span<double>(out.mutable_data(), out.size()), alpha, bits);
  return out;
}

std::int64_t dot(const std::vector<std::int32_t>& w, const std::vector<std::int32_t>& x, int wb, int ab, int xbar,
                 int adc_bits, int dac_bits) {
  return pim::crossbar_dot(w, x, wb, ab, space::PimGenome{xbar, adc_bits, dac_bits});
}

std::string run(const std::string& config, const std::vector<std::string>& overrides, const std::string& until) {
  pipeline::Pipeline p(pipeline::load_config(config, overrides));
  try {
    p.run_all(until);
  } catch (...) {
    p.write_manifest();
    throw;
  }
  return p.out().string();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "pimnas native core";

  py::register_exception<space::GenomeError>(m, "GenomeError", PyExc_ValueError);
  py::register_exception<quant::QuantError>(m, "QuantError", PyExc_ValueError);
  py::register_exception<pim::HardwareError>(m, "HardwareError", PyExc_ValueError);
  py::register_exception<pipeline::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("theta", &quant::theta_for_bits, py::arg("bits"));
  m.def("quantize", &quantize_array, py::arg("x"), py::arg("alpha"), py::arg("bits"));
  m.def("update_activation_alpha", &quant::update_activation_alpha, py::arg("alpha"), py::arg("momentum"),
        py::arg("mean"), py::arg("stddev"));

  m.def(
      "canonical_genome", [](const std::string& g) { return space::encode(space::decode(g)); }, py::arg("genome"));
  m.def(
      "space_size", [](const std::string& profile, int d_max) {
        space::SearchSpace s = space::SearchSpace::by_name(profile);
        if (d_max > 0) s.d_max = d_max;
        return space::space_size(s);
      },
      py::arg("profile") = "table1", py::arg("d_max") = 0);
  m.def(
      "sample_arch", [](const std::string& profile, std::uint64_t seed) {
        Rng rng(seed);
        return space::encode(space::sample_arch(space::SearchSpace::by_name(profile), rng));
      },
      py::arg("profile") = "table1", py::arg("seed") = 0);
  m.def(
      "quantizable_layers", [](const std::string& genome, const std::string& profile) {
        std::vector<std::string> names;
        for (const auto& L : space::quantizable_layers(space::decode(genome).arch, space::SearchSpace::by_name(profile))) {
          names.push_back(L.name);
        }
        return names;
      },
      py::arg("genome"), py::arg("profile") = "table1");

  m.def(
      "cost_json", [](const std::string& genome, const std::string& profile, const std::string& hardware) {
        return pipeline::cost_report(genome, space::SearchSpace::by_name(profile), hardware_from(hardware)).dump();
      },
      py::arg("genome"), py::arg("profile") = "table1", py::arg("hardware") = "");
  m.def("crossbar_dot", &dot, py::arg("w"), py::arg("x"), py::arg("wb"), py::arg("ab"), py::arg("xbar"),
        py::arg("adc_bits"), py::arg("dac_bits"));
  m.attr("IDEAL_ADC") = pim::kIdealAdc;

  m.def("fitness", &evo::fitness, py::arg("accuracy"), py::arg("edp_norm"), py::arg("w_acc"));
  m.def("git_blob_sha1", [](const py::bytes& b) { return pipeline::git_blob_sha1(std::string(b)); }, py::arg("data"));

  m.def("run_pipeline", &run, py::arg("config") = "", py::arg("overrides") = std::vector<std::string>{},
        py::arg("until") = "", py::call_guard<py::gil_scoped_release>());
}
