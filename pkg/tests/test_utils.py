"""Public utility surface."""
from scldpc import utils
from scldpc.util_deps import mean_evolution, scaling_law


def test_every_exported_name_resolves():
    missing = [name for name in utils.__all__ if not hasattr(utils, name)]

    assert not missing, f"unresolved exports: {missing}"


def test_reexports_are_the_implementations():
    assert utils.threshold is mean_evolution.threshold, "threshold re-exported"
    assert utils.predict_curve is scaling_law.predict_curve, "predict_curve re-exported"
    assert utils.PUBLISHED_THRESHOLD[(3, 6)] == 0.4881, "published table available"
