# Copyright 2026 The OrdCon Authors. All Rights Reserved.
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

import math

import numpy as np
import pytest

import ordcon


def small_config(mode=None, **extra):
    settings = dict(
        data__n_samples=160,
        data__n_identities=10,
        data__age_lo=20,
        data__age_hi=34,
        data__input_dim=6,
        model__hidden_dims=[12],
        model__d_age=6,
        train__epochs_pretrain=2,
        train__epochs_finetune=2,
        train__batch_size=32,
    )
    settings.update(extra)
    return ordcon.config(mode=mode, **settings)


def test_progressive_closed_form():
    z = np.array([[0.0], [1.0]])
    proxies = np.arange(19, 32, dtype=float).reshape(-1, 1)
    value, dz, dp = ordcon.loss("progressive", z, [20, 30], proxies, 19, ordcon.loss_config(tau=1.0))
    assert abs(value + 2.0) < 1e-10
    assert dz.shape == (2, 1)
    assert dp.shape == proxies.shape


def test_loss_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(5, 3))
    proxies = rng.normal(size=(7, 3))
    labels = [20, 21, 22, 23, 21]
    cfg = ordcon.loss_config(tau=0.5)
    _, dz, _ = ordcon.loss("contrast", z, labels, proxies, 19, cfg)
    eps = 1e-6
    for i, k in [(0, 0), (2, 1), (4, 2)]:
        zp, zm = z.copy(), z.copy()
        zp[i, k] += eps
        zm[i, k] -= eps
        fd = (ordcon.loss("contrast", zp, labels, proxies, 19, cfg)[0]
              - ordcon.loss("contrast", zm, labels, proxies, 19, cfg)[0]) / (2 * eps)
        assert abs(fd - dz[i, k]) <= 1e-5 * max(1.0, abs(fd))


def test_grl_lambda():
    assert ordcon.grl_lambda(0.0) == 0.0
    assert math.isclose(ordcon.grl_lambda(1.0, 10.0), 2 / (1 + math.exp(-10)) - 1, abs_tol=1e-12)


def test_config_errors():
    with pytest.raises(ordcon.ConfigError):
        ordcon.config(train__no_such_key=1)
    with pytest.raises(ordcon.ConfigError):
        ordcon.config(data__age_lo=50, data__age_hi=40)
    with pytest.raises(ordcon.DomainError):
        ordcon.loss("order", np.array([[0.0], [1.0]]), [1, 5], np.arange(3.0).reshape(3, 1), 0)


def test_generate_is_deterministic():
    cfg = small_config()
    a, b = ordcon.generate(cfg), ordcon.generate(cfg)
    assert len(a) == 160
    assert a.x.shape == (160, 6)
    assert np.array_equal(a.x, b.x)
    assert min(a.y_age) >= 20 and max(a.y_age) <= 34


def test_age_pipeline(tmp_path):
    cfg = small_config()
    train, test = ordcon.split(ordcon.generate(cfg), cfg)
    ck, trace = ordcon.pretrain_age(train, cfg)
    assert len(trace) == 2 and trace[0]["stage"] == "pretrain"
    ft, _ = ordcon.finetune_age(ck, train, cfg)
    m = ordcon.evaluate(ft, test, cfg)
    assert m["mae"] > 0 and 0 <= m["order_consistency"] <= 1
    path = str(tmp_path / "ck.json")
    ft.save(path)
    back = ordcon.load_checkpoint(path)
    assert np.array_equal(back.encode(test.x)[0], ft.encode(test.x)[0])
    assert ordcon.evaluate(back, test, cfg) == m


def test_aifr_pipeline():
    cfg = small_config(mode="aifr", train__batch_size=4, train__grl_start_epoch=1, model__d_id=4,
                       groups__granularity=5, groups__origin=20, train__lr=1e-5)
    train, test = ordcon.split(ordcon.generate(cfg), cfg)
    ck, trace = ordcon.train_aifr(train, cfg)
    assert ck.mode == "aifr"
    assert trace[0]["grl_lambda"] == 0.0
    m = ordcon.evaluate(ck, test, cfg)
    assert 0 <= m["rank1"] <= 1 and 0 <= m["age_probe_acc"] <= 1
    z_age, z_id = ck.encode(test.x)
    assert z_id.shape == (len(test), 4)


def test_metrics():
    assert ordcon.mae([20, 30], [22, 27]) == 2.5
    g = np.eye(3)
    assert ordcon.rank1_accuracy(g, [0, 1, 2], 2 * g, [0, 1, 2]) == 1.0
    pts = np.outer(np.arange(10.0), [1.0, 2.0])
    proj, ratio, _ = ordcon.pca_project(pts, 1)
    assert abs(ratio[0] - 1.0) < 1e-12
    assert abs(proj.mean()) < 1e-12
    assert ordcon.spearman([1, 2, 3], [2, 4, 9]) == pytest.approx(1.0)


def test_gradcheck_suite():
    report = ordcon.gradcheck(seeds=1)
    assert report and all(r["passed"] for r in report)
