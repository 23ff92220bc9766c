"""ScalingLab: config wiring, caching and stage errors."""
import json

import numpy as np
import pytest

from scldpc import ScalingLab, StageError
from scldpc.util_deps.scaling_law import published_scaling_params


def test_lab_reads_config_dir(tmp_path):
    config_dir = tmp_path / "cfg"
    config_dir.mkdir()
    (config_dir / "config.json").write_text(json.dumps({"simulation": {"trials": 33}}))

    lab = ScalingLab(config_dir=str(config_dir))

    assert lab.config.simulation.trials == 33, "directory config applied"


def test_sample_graph_uses_base_seed(lab, tiny_spec):
    a = lab.sample_graph(tiny_spec)
    b = lab.sample_graph(tiny_spec)

    assert a.seed == lab.config.simulation.base_seed, "default seed from config"
    assert np.array_equal(a.var_checks, b.var_checks), "same seed, same graph"


def test_simulate_uses_configured_trials(lab, tiny_spec):
    result = lab.simulate(tiny_spec, 0.9, workers=1)

    assert result.trials == 20, "trials from config overrides"
    assert result.failures == 20, "eps=0.9 always fails"


def test_threshold_is_cached(lab, tiny_spec, tmp_path, monkeypatch):
    eps_th = lab.threshold(tiny_spec)
    cached = list((tmp_path / "cache").glob("*.json"))

    def boom(*args, **kwargs):
        raise AssertionError("threshold recomputed")

    monkeypatch.setattr("scldpc.core.threshold", boom)
    again = lab.threshold(tiny_spec.with_M(60))

    assert len(cached) == 1, "one cache record"
    assert again == eps_th, "M-independent key served from the cache"


def test_disabled_cache_recomputes(tmp_path, tiny_spec, monkeypatch):
    config_dir = tmp_path / "cfg"
    config_dir.mkdir()
    lab = ScalingLab(config_dir=str(config_dir),
                     overrides={"cache": {"enabled": False, "directory": str(tmp_path / "cache")}})
    calls = []

    def fake(spec, config=None):
        calls.append(spec)
        return 0.5

    monkeypatch.setattr("scldpc.core.threshold", fake)
    lab.threshold(tiny_spec)
    lab.threshold(tiny_spec)

    assert len(calls) == 2, "no caching when disabled"


def test_scaling_params_wraps_stage_failures(lab, small_spec, monkeypatch):
    def broken(spec):
        raise RuntimeError("integration diverged")

    monkeypatch.setattr(lab, "threshold", broken)

    with pytest.raises(StageError) as exc:
        lab.scaling_params(small_spec)

    assert exc.value.stage == "threshold", "failing stage named"
    assert isinstance(exc.value.cause, RuntimeError), "cause kept"


def test_predict_delegates(lab):
    params = published_scaling_params(3, 6, 50)

    curve = lab.predict(params, 50, 1000, [0.45, 0.46])

    assert len(curve.p_b) == 2, "one value per epsilon"
    assert curve.L == 50 and curve.M == 1000, "geometry recorded"


def test_init_config(tmp_path):
    path = ScalingLab.init_config(str(tmp_path / "cfg"))

    assert (path / "config.json").exists(), "default config written"
