import math

import pytest
from hypothesis import given, strategies as st

from voltstab.perunit import InvalidBaseError, from_pu, make_base, to_pu


def test_transmission_bases():
    b = make_base(100e3, 100e6)
    assert b.z_base == 100.0
    assert b.i_base == 1000.0


def test_identity_base():
    b = make_base(1.0, 1.0)
    assert (b.z_base, b.i_base) == (1.0, 1.0)


@pytest.mark.parametrize("v, s", [(0, 1), (1, 0), (-1, 1), (1, -5)])
def test_invalid_base(v, s):
    with pytest.raises(InvalidBaseError):
        make_base(v, s)


def test_to_pu_examples():
    b = make_base(100e3, 100e6)
    assert to_pu(40.0, b, "impedance") == pytest.approx(0.4, abs=1e-15)
    assert to_pu(100e3, b, "voltage") == 1.0
    assert to_pu(0.0, b, "power") == 0.0


def test_unknown_kind():
    with pytest.raises(ValueError):
        to_pu(1.0, make_base(1, 1), "frequency")


positive = st.floats(1e-3, 1e9, allow_nan=False, allow_infinity=False)


@given(positive, positive, st.floats(-1e9, 1e9), st.sampled_from(["voltage", "power", "current", "impedance"]))
def test_round_trip(v, s, x, kind):
    b = make_base(v, s)
    assert from_pu(to_pu(x, b, kind), b, kind) == pytest.approx(x, rel=1e-14, abs=1e-300)


@given(positive, positive)
def test_base_identities(v, s):
    b = make_base(v, s)
    assert math.isclose(b.z_base * b.i_base, b.v_base, rel_tol=1e-14)
    assert math.isclose(b.v_base * b.i_base, b.s_base, rel_tol=1e-14)
