import pytest
from rose import set_log_dir

from pathhjb.coefficients import load_family, load_sequence
from pathhjb.paths import SampledPath, TimedPath


@pytest.fixture(autouse=True)
def _logs(tmp_path_factory):
    set_log_dir(tmp_path_factory.mktemp("logs"))
    yield


def start_at(x: float = 0.0, t: float = 0.0, horizon: float = 1.0) -> TimedPath:
    return TimedPath(t, SampledPath.constant([x], horizon))


def random_g(b=(0.0, 0.0), a=(1.0, 1.0), terminal="state", **params):
    return load_family(
        {
            "family": "random_g",
            "params": {"b_lo": b[0], "b_hi": b[1], "a_lo": a[0], "a_hi": a[1], **params},
            "terminal": terminal,
        }
    )


def variance_sequence(scale: float = 1.0):
    return load_sequence(
        {
            "base": {
                "family": "random_g",
                "params": {"b_lo": 0, "b_hi": 0, "a_lo": 1, "a_hi": 2, "bound_C": 4},
                "terminal": "state_square",
            },
            "perturbation": {"kind": "a_hi_shift", "scale": scale},
        }
    )
