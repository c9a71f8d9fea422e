"""Record generators checked against their exact target distributions."""

import numpy as np
import pytest
from scipy import stats

from qtomo.errors import TruncationError, UsageError
from qtomo.estimators import EstimatorConfig
from qtomo.operators import Operator
from qtomo.sampler import (
    RngStream,
    sample_displaced_parity,
    sample_homodyne,
    sample_kerr_phase,
    sample_spin,
)
from qtomo.states import DensityMatrix, StateSpec, make_state

P_FLOOR = 0.001  # goodness-of-fit threshold shared by all distribution tests


def outcomes(records):
    return np.array([r.outcome[0] for r in records])


def settings(records, k=0):
    return np.array([r.setting.coords[k] for r in records])


class TestHomodyne:
    def test_vacuum_variance(self):
        dim = 8
        rho = make_state(StateSpec(kind="fock", dim=dim, n=0))
        q = outcomes(sample_homodyne(rho, 100_000, RngStream(501), EstimatorConfig(dim=dim)))
        s2 = q.var(ddof=1)
        se = s2 * np.sqrt(2.0 / (q.size - 1))  # Gaussian variance-of-variance
        assert abs(s2 - 0.25) <= 5 * se

    def test_first_fock_node_at_origin(self):
        dim = 8
        rho = make_state(StateSpec(kind="fock", dim=dim, n=1))
        q = outcomes(sample_homodyne(rho, 100_000, RngStream(502), EstimatorConfig(dim=dim)))
        width = 0.1
        density = np.count_nonzero(np.abs(q) < width / 2) / (q.size * width)
        assert density < 0.02

    def test_coherent_pinned_phase_mean(self):
        dim = 10
        rho = make_state(StateSpec(kind="coherent", dim=dim, beta=0.5))
        shots = 100_000
        records = sample_homodyne(rho, shots, RngStream(503), EstimatorConfig(dim=dim),
                                  phases_fixed=np.zeros(shots))
        q = outcomes(records)
        se = q.std(ddof=1) / np.sqrt(q.size)
        assert abs(q.mean() - 0.5) <= 5 * se

    def test_phase_range(self):
        dim = 6
        rho = make_state(StateSpec(kind="fock", dim=dim, n=0))
        phis = settings(sample_homodyne(rho, 5000, RngStream(504), EstimatorConfig(dim=dim)))
        assert phis.min() >= 0.0 and phis.max() < np.pi

    def test_leaking_state_rejected(self):
        rho = DensityMatrix(Operator(np.eye(4, dtype=complex) / 4.0))
        with pytest.raises(TruncationError):
            sample_homodyne(rho, 100, RngStream(505), EstimatorConfig(dim=4))

    def test_determinism(self):
        dim = 8
        rho = make_state(StateSpec(kind="coherent", dim=dim, beta=0.3))
        a = sample_homodyne(rho, 3000, RngStream(506), EstimatorConfig(dim=dim))
        b = sample_homodyne(rho, 3000, RngStream(506), EstimatorConfig(dim=dim))
        assert a == b

    def test_worker_count_invariance(self, monkeypatch):
        # chunking is keyed by shot index, so the thread cap cannot leak
        # into the stream; 2 chunks force the pool path
        dim = 8
        rho = make_state(StateSpec(kind="coherent", dim=dim, beta=0.3))
        shots = (1 << 16) + 17
        cfg = EstimatorConfig(dim=dim)
        monkeypatch.setenv("QTOMO_THREADS", "1")
        a = sample_homodyne(rho, shots, RngStream(507), cfg)
        monkeypatch.setenv("QTOMO_THREADS", "4")
        b = sample_homodyne(rho, shots, RngStream(507), cfg)
        assert a == b


class TestSpin:
    def test_maximally_mixed_uniform_outcomes(self):
        twice_s = 3
        rho = DensityMatrix(Operator(np.eye(4, dtype=complex) / 4.0))
        ms = outcomes(sample_spin(rho, twice_s, 100_000, RngStream(511)))
        counts = [np.count_nonzero(ms == m) for m in (-1.5, -0.5, 0.5, 1.5)]
        assert sum(counts) == ms.size
        assert stats.chisquare(counts).pvalue > P_FLOOR

    def test_forced_axis_eigenstate(self):
        rho = make_state(StateSpec(kind="spin_pure", dim=2, twice_s=1, direction=(0, 0, 1)))
        shots = 2000
        dirs = np.tile([0.0, 0.0, 1.0], (shots, 1))
        ms = outcomes(sample_spin(rho, 1, shots, RngStream(512), directions=dirs))
        assert np.all(ms == 0.5)

    def test_cosine_moment(self):
        # E[m | n] = <S.n>, and E[n_z n_i] = delta_zi / 3 over the uniform
        # sphere, so 3 m n_z is unbiased for <S_z> = 1/2 in the up state
        rho = make_state(StateSpec(kind="spin_pure", dim=2, twice_s=1, direction=(0, 0, 1)))
        records = sample_spin(rho, 1, 100_000, RngStream(513))
        vals = 3.0 * outcomes(records) * settings(records, 2)
        se = vals.std(ddof=1) / np.sqrt(vals.size)
        assert abs(vals.mean() - 0.5) <= 5 * se


class TestParity:
    def test_vacuum_at_origin(self):
        dim = 8
        rho = make_state(StateSpec(kind="fock", dim=dim, n=0))
        shots = 2000
        recs = sample_displaced_parity(rho, shots, RngStream(521), EstimatorConfig(dim=dim),
                                       betas=np.zeros(shots, dtype=complex))
        assert np.all(outcomes(recs) == 1.0)

    def test_first_fock_at_origin(self):
        dim = 8
        rho = make_state(StateSpec(kind="fock", dim=dim, n=1))
        shots = 2000
        recs = sample_displaced_parity(rho, shots, RngStream(522), EstimatorConfig(dim=dim),
                                       betas=np.zeros(shots, dtype=complex))
        assert np.all(outcomes(recs) == -1.0)

    def test_coherent_parity_mean(self):
        dim = 8
        rho = make_state(StateSpec(kind="coherent", dim=dim, beta=0.5))
        shots = 100_000
        recs = sample_displaced_parity(rho, shots, RngStream(523), EstimatorConfig(dim=dim),
                                       betas=np.zeros(shots, dtype=complex))
        s = outcomes(recs)
        se = s.std(ddof=1) / np.sqrt(s.size)
        direct = np.trace(np.diag((-1.0) ** np.arange(dim)) @ rho.mat).real
        assert abs(direct - np.exp(-0.5)) <= 1e-9
        assert abs(s.mean() - direct) <= 5 * se


class TestKerrPhase:
    def test_fock_phase_invariance(self):
        dim = 6
        rho = make_state(StateSpec(kind="fock", dim=dim, n=2))
        recs = sample_kerr_phase(rho, 100_000, RngStream(531), EstimatorConfig(dim=dim))
        phi = outcomes(recs)
        assert stats.kstest(phi / (2.0 * np.pi), "uniform").pvalue > P_FLOOR

    def test_two_level_superposition_density(self):
        dim = 6
        v = np.zeros(dim, dtype=complex)
        v[0] = v[1] = 1.0 / np.sqrt(2.0)
        rho = DensityMatrix(Operator(np.outer(v, v.conj())))
        shots = 100_000
        recs = sample_kerr_phase(rho, shots, RngStream(532), EstimatorConfig(dim=dim),
                                 psis=np.zeros(shots))
        phi = outcomes(recs)
        bins = np.linspace(0.0, 2.0 * np.pi, 33)
        observed, _ = np.histogram(phi, bins=bins)
        centers = 0.5 * (bins[1:] + bins[:-1])
        # p(phi) = (1 + cos phi) / 2pi for the equal two-level superposition
        density = (1.0 + np.cos(centers)) / (2.0 * np.pi)
        expected = shots * density * np.diff(bins)
        expected *= observed.sum() / expected.sum()
        assert stats.chisquare(observed, expected).pvalue > P_FLOOR

    def test_conditional_density_normalized(self):
        from qtomo.estimators import kerr_sideband_coefficients

        dim = 6
        rho = make_state(StateSpec(kind="coherent", dim=dim, beta=0.6))
        g = 4 * dim
        phi = 2.0 * np.pi * np.arange(g) / g
        for psi in (0.0, 1.1, 4.4):
            c = kerr_sideband_coefficients(rho, psi)[0]
            p = (1.0 + 2.0 * np.sum(
                (c[1:, None] * np.exp(1j * np.outer(np.arange(1, dim), phi))).real, axis=0
            )) / (2.0 * np.pi)
            total = np.sum(p) * (2.0 * np.pi / g)  # exact for a trig polynomial
            assert abs(total - 1.0) <= 1e-10
            assert abs(c[0] - 1.0) <= 1e-12

    def test_shot_validation(self):
        dim = 6
        rho = make_state(StateSpec(kind="fock", dim=dim, n=0))
        with pytest.raises(UsageError):
            sample_kerr_phase(rho, 0, RngStream(533), EstimatorConfig(dim=dim))
