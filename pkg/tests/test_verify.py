import dataclasses

import pytest

from airsopt.config import ExperimentConfig
from airsopt.verify import CHECK_NAMES, QUICK_CHECKS, run_checks

CFG = ExperimentConfig()


@pytest.mark.parametrize("name", [n for n, _ in QUICK_CHECKS if n != "small_distance_gap"])
def test_quick_check_passes(name):
    (result,) = run_checks(CFG, only=[name])
    assert result.passed, result.detail


def test_small_distance_gap_at_default_config():
    # at 200 m the tilt-limited schemes sit about 3 dB under the bound, so the default fails
    (result,) = run_checks(CFG, only=["small_distance_gap"])
    assert not result.passed and result.value == pytest.approx(3.0103, abs=1e-3)
    near = dataclasses.replace(CFG, verify=dataclasses.replace(CFG.verify, small_d_distance=50.0,
                                                               small_d_gap_db=0.5))
    (result,) = run_checks(near, only=["small_distance_gap"])
    assert result.passed


def test_corrupted_tolerance_is_named():
    bad = dataclasses.replace(CFG, verify=dataclasses.replace(CFG.verify, sca_brute_ratio=1.5))
    (result,) = run_checks(bad, only=["sca_solver"])
    assert not result.passed and result.name == "sca_solver"


def test_unknown_check():
    with pytest.raises(ValueError):
        run_checks(CFG, only=["nope"])
    assert len(CHECK_NAMES) == len(set(CHECK_NAMES)) == 11
