from __future__ import annotations

import os
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from tracegrowth.field import Field
from tracegrowth.matgroup import ExactMat2, GroupSpec

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).parent / "data"
Q = Field("rational")


def m(a, b, c, d) -> ExactMat2:
    return ExactMat2(*(Fraction(x) for x in (a, b, c, d)))


S = m(0, -1, 1, 0)
T = m(1, 1, 0, 1)


@pytest.fixture
def sl2z() -> GroupSpec:
    return GroupSpec(Q, (S, T))


@pytest.fixture(autouse=True)
def _isolated_sieve_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("TRACEGROWTH_SIEVE_CACHE", str(tmp_path / "sieve"))
