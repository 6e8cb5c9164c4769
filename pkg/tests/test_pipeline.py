import dataclasses
import json

import numpy as np
import pytest

from hybrid_sindy import pipeline
from hybrid_sindy.artifacts import write_json
from hybrid_sindy.config import ConfigError
from hybrid_sindy.dynamics import Hopper


def small(cfg, **kw):
    """A single-trajectory hopper problem that runs in a couple of seconds."""
    base = dict(train_ics=[[0.8, -0.1]], validation_ics=[[0.84, -0.11], [0.77, -0.12]])
    base.update(kw)
    return dataclasses.replace(cfg, **base)


def true_signatures(library):
    truth = Hopper().true_coefficients(library)
    return {r: tuple((int(a), int(b)) for a, b in zip(*np.nonzero(xi))) for r, xi in truth.items()}


def test_split_counts(hopper_config, sir_config):
    train, val = pipeline.split(hopper_config)
    assert (train.m, val.m) == (456, 912)
    train, val = pipeline.split(sir_config)
    assert (train.m, val.m) == (1825, 1825) and train.n == 2


def test_split_rejects_empty(hopper_config):
    with pytest.raises(ValueError):
        pipeline.split(dataclasses.replace(hopper_config, validation_ics=[]))


def test_overlap_warns(hopper_config, caplog):
    cfg = small(hopper_config, validation_ics=[[0.8, -0.1]])
    pipeline.split(cfg)
    assert "shared" in caplog.text


def test_one_anchor_per_sample(hopper_result):
    assert len(hopper_result.anchors) == hopper_result.train.m == 456
    assert len(hopper_result.regimes) == 456


def test_small_K_hits_degeneracy(hopper_config):
    result = pipeline.run(small(hopper_config, K=5))
    assert all(s.aicc == np.inf for a in result.anchors for s in a.scored if s.model.k >= 3)
    assert all(len(e.signature) <= 2 for e in result.catalog.rank_by_frequency())


def test_K_larger_than_data(hopper_config):
    with pytest.raises(ConfigError):
        pipeline.run(small(hopper_config, K=10_000))


def test_jobs_do_not_change_results(hopper_config, tmp_path):
    cfg = small(hopper_config)
    a = pipeline.run(cfg, jobs=1)
    b = pipeline.run(cfg, jobs=2)
    pa = write_json(tmp_path / "a.json", a.catalog.to_dict())
    pb = write_json(tmp_path / "b.json", b.catalog.to_dict())
    assert pa.read_bytes() == pb.read_bytes()
    assert a.scoreboard_rows() == b.scoreboard_rows()


def test_noise_free_is_no_worse(hopper_config):
    def recovery(eps):
        cfg = small(hopper_config, noise=eps)
        result = pipeline.run(cfg)
        sigs = true_signatures(result.library)
        train = result.train
        ok = [r.signature == sigs[train.labels[r.anchor_index]] for r in result.regimes]
        return np.mean(ok)

    assert recovery(0.0) >= recovery(1e-2)


def test_regime_rows(hopper_result):
    rows = hopper_result.regime_rows()
    assert len(rows) == 456
    assert {"anchor_index", "status", "signature", "aicc", "true_label", "xi[1][v']"} <= set(rows[0])
    json.dumps(rows[0], default=float)
