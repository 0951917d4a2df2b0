# Copyright 2026 The pimnas Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Python bindings for the pimnas native core."""

import json

from ._core import (
    ConfigError,
    GenomeError,
    HardwareError,
    IDEAL_ADC,
    QuantError,
    canonical_genome,
    cost_json,
    crossbar_dot,
    fitness,
    git_blob_sha1,
    quantizable_layers,
    quantize,
    run_pipeline,
    sample_arch,
    space_size,
    theta,
    update_activation_alpha,
)


def cost(genome, profile="table1", hardware=""):
    """Hardware report of one genome as a dict (energy_mj, latency_ms, edp, ...)."""
    return json.loads(cost_json(genome, profile, hardware))

__all__ = [
    "ConfigError",
    "GenomeError",
    "HardwareError",
    "IDEAL_ADC",
    "QuantError",
    "canonical_genome",
    "cost",
    "crossbar_dot",
    "fitness",
    "git_blob_sha1",
    "quantizable_layers",
    "quantize",
    "run_pipeline",
    "sample_arch",
    "space_size",
    "theta",
    "update_activation_alpha",
]
