import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from trigmon import kernels

backends = [pytest.param(kernels.numpy_kernels, id="numpy")]
if kernels.numba_kernels is not None:
    backends.append(pytest.param(kernels.numba_kernels, id="numba"))

values = arrays(np.float64, st.integers(2, 60), elements=st.integers(-3, 3).map(float))
wide = arrays(np.float64, st.integers(1, 60), elements=st.floats(-1e3, 1e3))


@pytest.mark.parametrize("k", backends)
def test_rank_ties_small(k):
    ranks, ties = k["rank_ties"](np.array([7.0, 3.0, 7.0, 1.0]))
    assert ranks.tolist() == [3.5, 2.0, 3.5, 1.0]
    assert ties == 6.0


@pytest.mark.parametrize("k", backends)
def test_split_profile_constant(k):
    assert np.all(k["split_profile"](np.ones(10), 2) == 0)


@given(values)
def test_backends_agree_on_ranks(x):
    if kernels.numba_kernels is None:
        pytest.skip("numba unavailable")
    r_np, t_np = kernels.numpy_kernels["rank_ties"](x)
    r_nb, t_nb = kernels.numba_kernels["rank_ties"](x)
    assert np.array_equal(r_np, r_nb) and t_np == t_nb


@given(values, values)
def test_backends_agree_on_u(a, b):
    if kernels.numba_kernels is None:
        pytest.skip("numba unavailable")
    u1, v1 = kernels.numpy_kernels["u_and_variance"](a, b)
    u2, v2 = kernels.numba_kernels["u_and_variance"](a, b)
    assert u1 == pytest.approx(u2) and v1 == pytest.approx(v2)


@given(values, st.integers(2, 10))
def test_backends_agree_on_split_profile(x, min_seg):
    if kernels.numba_kernels is None:
        pytest.skip("numba unavailable")
    if x.size < 2 * min_seg:
        return
    z1 = kernels.numpy_kernels["split_profile"](x, min_seg)
    z2 = kernels.numba_kernels["split_profile"](x, min_seg)
    np.testing.assert_allclose(z1, z2, atol=1e-9)


@given(wide, wide)
def test_backends_agree_on_ks(a, b):
    if kernels.numba_kernels is None:
        pytest.skip("numba unavailable")
    a, b = np.sort(a), np.sort(b)
    assert kernels.numpy_kernels["ks_sorted"](a, b) == pytest.approx(kernels.numba_kernels["ks_sorted"](a, b))


def test_env_flag_selects_numpy():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from trigmon import kernels; print(kernels.BACKEND)"],
        env={"TRIGMON_DISABLE_NUMBA": "1", "PATH": ""}, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
