"""The numba lane and the pure-numpy lane must agree, and the env flag must
pick the lane."""

import os
import subprocess
import sys

import numpy as np
import pytest

from nlsthermo import _kernels as k

RNG = np.random.default_rng(2718)


def make_case(n=12):
    t = RNG.uniform(size=(n, n))
    t /= t.sum(axis=0)
    p = RNG.uniform(0.05, 1.0, size=n)
    p /= p.sum()
    p0 = RNG.uniform(0.05, 1.0, size=n)
    p0 /= p0.sum()
    pt = RNG.uniform(0.05, 1.0, size=n)
    pt /= pt.sum()
    e = RNG.normal(size=n)
    return t, p, p0, pt, e


class TestLaneAgreement:
    def test_scalar_reductions(self):
        t, p, p0, pt, e = make_case()
        joint = t * p[None, :]
        d = np.ones_like(p)
        assert k.expectation_sum(joint, t) == \
            pytest.approx(k.expectation_sum_np(joint, t), rel=1e-13)
        assert k.entropy_sum(p, d) == \
            pytest.approx(k.entropy_sum_np(p, d), rel=1e-13)
        assert k.kl_sum(p, p0) == \
            pytest.approx(k.kl_sum_np(p, p0), rel=1e-13)
        assert k.j_heat_sum(t, np.log(p), e, 1.7) == \
            pytest.approx(k.j_heat_sum_np(t, np.log(p), e, 1.7), rel=1e-13)
        assert k.general_j_sum(t, p, p0, pt, t @ p0) == \
            pytest.approx(k.general_j_sum_np(t, p, p0, pt, t @ p0), rel=1e-13)
        assert k.slope_direct_sum(t, p0, e) == \
            pytest.approx(k.slope_direct_sum_np(t, p0, e), rel=1e-12, abs=1e-13)
        assert k.slope_symmetrized_sum(t, p0, e) == \
            pytest.approx(k.slope_symmetrized_sum_np(t, p0, e), rel=1e-13)

    def test_kl_infinity_sentinel_on_both_lanes(self):
        q = np.array([0.5, 0.5])
        p = np.array([1.0, 0.0])
        assert k.kl_sum(q, p) == np.inf
        assert k.kl_sum_np(q, p) == np.inf

    def test_zero_probability_pairs_skip_nonfinite_values(self):
        joint = np.array([[0.5, 0.0], [0.0, 0.5]])
        values = np.array([[1.0, np.inf], [np.inf, 1.0]])
        assert k.expectation_sum(joint, np.where(joint > 0, values, 0.0)) == 1.0
        assert k.expectation_sum_np(joint, values) == 1.0

    def test_projector_mixture(self):
        h = RNG.normal(size=(5, 5))
        h = 0.5 * (h + h.T)
        _, vecs = np.linalg.eigh(h)
        a = k.projector_mixture(vecs)
        b = k.projector_mixture_np(vecs)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)
        np.testing.assert_allclose(a.sum(axis=0), 1.0, rtol=0, atol=1e-12)

    def test_lerch_series(self):
        for z, s, a in ((0.5, 2.0, 1.5), (-0.8, 1.2, 0.3), (0.99, 3.0, 2.0)):
            assert k.lerch_series(z, s, a) == \
                pytest.approx(k.lerch_series_np(z, s, a), rel=1e-15)


class TestBackendSelection:
    def _probe(self, env_value):
        env = dict(os.environ)
        if env_value is None:
            env.pop("NLSTHERMO_BACKEND", None)
        else:
            env["NLSTHERMO_BACKEND"] = env_value
        return subprocess.run(
            [sys.executable, "-c",
             "from nlsthermo._kernels import BACKEND; print(BACKEND)"],
            capture_output=True, text=True, env=env)

    def test_numpy_lane_can_be_forced(self):
        result = self._probe("numpy")
        assert result.returncode == 0
        assert result.stdout.strip() == "numpy"

    def test_numba_lane_when_requested(self):
        pytest.importorskip("numba")
        result = self._probe("numba")
        assert result.returncode == 0
        assert result.stdout.strip() == "numba"

    def test_invalid_value_fails_loudly(self):
        result = self._probe("cuda")
        assert result.returncode != 0
        assert "NLSTHERMO_BACKEND" in result.stderr

    def test_numpy_lane_passes_a_representative_computation(self):
        env = dict(os.environ, NLSTHERMO_BACKEND="numpy")
        code = (
            "import nlsthermo as nt\n"
            "G = nt.spin1_gibbs_matrix(1.0)\n"
            "assert abs(nt.j_heat_expectation(G, 2.0) - 1.0) <= 1e-10\n"
            "b = nt.slope_bundle(G)\n"
            "print('ok')\n"
        )
        result = subprocess.run([sys.executable, "-c", code],
                                capture_output=True, text=True, env=env)
        assert result.returncode == 0, result.stderr
        assert result.stdout.strip() == "ok"
