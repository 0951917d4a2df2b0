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


import json
import os
import subprocess

import numpy as np
import pytest

import pimnas


def test_quantize_matches_hand_values():
    assert pimnas.theta(5) == 15
    assert pimnas.theta(9) == 255
    y = pimnas.quantize(np.array([0.5, -0.5, 3.0]), 1.0, 3)
    np.testing.assert_allclose(y, [2 / 3, -2 / 3, 1.0])
    with pytest.raises(ValueError):
        pimnas.quantize(np.zeros(2), 0.0, 5)


def test_quantize_keeps_shape_and_level_count():
    x = np.random.default_rng(0).normal(size=(4, 5, 6))
    y = pimnas.quantize(x, 2.0, 5)
    assert y.shape == x.shape
    assert len(np.unique(y)) <= 31


def test_activation_scale_update():
    assert pimnas.update_activation_alpha(1.0, 0.9, 0.0, 0.5) == pytest.approx(1.05)


def test_space_helpers():
    assert pimnas.space_size("table1") == 48427560
    assert pimnas.space_size("table1", d_max=3) == 819
    g = pimnas.sample_arch("desk", seed=3)
    assert pimnas.canonical_genome(g) == g
    assert len(pimnas.quantizable_layers("n=2; blocks=RES/64/1,VGG/32/1")) == 5
    with pytest.raises(ValueError):
        pimnas.canonical_genome("n=2; blocks=VGG/32/1")


def test_cost_report_and_fitness():
    r = pimnas.cost("n=1; blocks=VGG/32/1; quant=5:5,5:5; pim=256/4/2", profile="desk")
    assert r["edp"] == pytest.approx(r["energy_mj"] * r["latency_ms"], rel=1e-12)
    assert 0 < r["edp_norm"] < 1
    assert pimnas.fitness(0.9, 0.5, 0.8) == pytest.approx(0.62)


def test_crossbar_dot_hand_trace():
    assert pimnas.crossbar_dot([3, -2], [1, 2], 3, 3, 32, pimnas.IDEAL_ADC, 1) == -1
    assert pimnas.crossbar_dot([3, -2], [1, 2], 3, 3, 32, 1, 1) == 28


def test_blob_hash():
    assert pimnas.git_blob_sha1(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_cli_cost_agrees_with_binding(tmp_path):
    cli = os.environ.get("PIMNAS_CLI")
    if not cli:
        pytest.skip("command-line tool location not provided")
    g = "n=2; blocks=VGG/32/1,MVGG/64/1; quant=5:7,7:5,9:9,5:5; pim=64/6/1"
    out = tmp_path / "c.json"
    subprocess.run([cli, "cost", "-g", g, "-o", str(out)], check=True)
    assert json.loads(out.read_text())["edp"] == pytest.approx(pimnas.cost(g)["edp"], rel=1e-12)
