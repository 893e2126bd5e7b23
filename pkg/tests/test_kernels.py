import numpy as np
import pytest

from voltstab import kernels
from voltstab.loadmodel import preset
from voltstab.network import NetworkParams, pack, state_from_voltage

BOTH = len(kernels.available()) == 2
needs_both = pytest.mark.skipif(not BOTH, reason="compiled kernels not built")


def _lp(name="aircon"):
    return pack(NetworkParams(1.0, 0.4), preset(name))


def test_python_always_available():
    assert "python" in kernels.available()


def test_use_restores():
    prev = kernels.use("python")
    assert kernels.active_name() == "python"
    kernels.use(prev)
    assert kernels.active_name() == prev


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get("fortran")


def test_lu_solve_matches_numpy(backend):
    rng = np.random.default_rng(2)
    for _ in range(20):
        A = rng.normal(size=(12, 12))
        b = rng.normal(size=12)
        x, ok = kernels.lu_solve(A, b)
        assert ok
        np.testing.assert_allclose(x, np.linalg.solve(A, b), rtol=1e-9, atol=1e-12)


def test_lu_solve_flags_singular(backend):
    A = np.ones((12, 12))
    _, ok = kernels.lu_solve(A, np.ones(12))
    assert not ok


@needs_both
@pytest.mark.parametrize("name", ["aircon", "inductive_095", "constant_power_095"])
def test_residual_and_jacobian_agree(name):
    c, p = kernels.get("compiled"), kernels.get("python")
    rng = np.random.default_rng(9)
    lp = _lp(name)
    for _ in range(25):
        z = rng.normal(size=12)
        z[5] += 1.0
        a, n = rng.uniform(0, 2), rng.uniform(0.8, 1.2)
        np.testing.assert_allclose(c.residual(z, a, n, lp), p.residual(z, a, n, lp), atol=1e-14)
        Jc, dc = c.jacobian(z, a, n, lp)
        Jp, dp = p.jacobian(z, a, n, lp)
        np.testing.assert_allclose(Jc, Jp, atol=1e-13)
        np.testing.assert_allclose(dc, dp, atol=1e-14)


@needs_both
def test_newton_agrees():
    c, p = kernels.get("compiled"), kernels.get("python")
    net, load = NetworkParams(1.0, 0.4), preset("aircon")
    lp = pack(net, load)
    z0 = state_from_voltage(0.93, 1.0, 1.0, net, load).to_vector()
    zc, sc, _, _ = c.newton(z0, 1.05, 1.02, lp)
    zp, sp, _, _ = p.newton(z0, 1.05, 1.02, lp)
    assert sc == sp == kernels.OK
    np.testing.assert_allclose(zc, zp, atol=1e-11)


@needs_both
def test_rk4_agrees():
    c, p = kernels.get("compiled"), kernels.get("python")
    net, load = NetworkParams(1.0, 0.4), preset("inductive_095")
    lp = pack(net, load)
    z0 = state_from_voltage(0.85, 0.7, 1.0, net, load)
    args = (0.7, 10.0, 0.86, 0.1, 300, lp, 1e-10, 50)
    outc = c.rk4_oltc(z0.to_vector(), 1.0, *args)
    outp = p.rk4_oltc(z0.to_vector(), 1.0, *args)
    for a, b in zip(outc[:5], outp[:5]):
        np.testing.assert_allclose(a, b, atol=1e-10)
    assert outc[5] == outp[5]
