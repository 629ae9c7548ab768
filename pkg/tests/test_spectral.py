import numpy as np
import pytest
import scipy.linalg

import oracles
from tightwin import (
    InvalidParamsError,
    build_q,
    concentration_ratio,
    sidelobe_energy,
    slepian,
    spectrum,
)


class TestBuildQ:
    def test_closed_form_entry(self):
        Q = build_q(0.25, 4)
        assert Q[0, 3] == pytest.approx(np.sin(0.75 * np.pi) / (3 * np.pi), rel=1e-15)
        assert Q[0, 3] == pytest.approx(0.0750264, abs=1e-7)

    @pytest.mark.parametrize("p", [0.01, 0.3, 0.77])
    def test_structure(self, p):
        Q = build_q(p, 40)
        assert np.all(np.diag(Q) == p)
        assert np.array_equal(Q, Q.T)
        # Toeplitz: entries depend only on |l - l'|
        assert np.array_equal(Q, scipy.linalg.toeplitz(Q[:, 0]))
        # tiny eigenvalues sit below rounding for larger K, so eigenvalues
        # are only checked against that level here
        assert np.linalg.eigvalsh(Q)[0] > -1e-14

    @pytest.mark.parametrize("p,K", [(0.3, 8), (0.77, 8), (0.5, 12)])
    def test_cholesky_succeeds(self, p, K):
        scipy.linalg.cholesky(build_q(p, K))

    def test_matches_mpmath(self):
        Q = build_q(0.37, 12)
        ref = oracles.sinc_matrix_mp(0.37, 12)
        assert np.allclose(Q, np.array(ref.tolist(), dtype=float), rtol=1e-14, atol=1e-16)

    @pytest.mark.parametrize("p", [0, -0.1, 1.5, float("nan")])
    def test_domain(self, p):
        with pytest.raises(InvalidParamsError):
            build_q(p, 8)

    def test_extended_precision(self):
        Q = build_q(0.3, 16, dtype=np.longdouble)
        assert Q.dtype == np.longdouble
        # p * k may round to an integer in double but not in extended precision,
        # giving an exact zero in one and ~1e-17 in the other
        assert np.allclose(Q.astype(float), build_q(0.3, 16), rtol=1e-14, atol=1e-16)


class TestSlepian:
    @pytest.mark.parametrize("p,K", [(0.05, 64), (10 / 512, 512), (0.3, 33)])
    def test_eigenvector(self, p, K):
        Q = build_q(p, K)
        w = slepian(p, K)
        rho = w @ Q @ w
        assert np.linalg.norm(Q @ w - rho * w) <= 1e-10
        assert np.isclose(np.linalg.norm(w), 1.0, rtol=1e-15)
        assert w.sum() > 0
        assert np.max(np.abs(w - w[::-1])) <= 1e-8 * np.max(np.abs(w))

    def test_matches_dense_eigh(self):
        Q = build_q(0.2, 16)
        _, V = np.linalg.eigh(Q)
        ref = V[:, -1]
        w = slepian(0.2, 16)
        assert min(np.max(np.abs(w - ref)), np.max(np.abs(w + ref))) <= 1e-9

    def test_dense_method_agrees_when_well_separated(self):
        assert np.allclose(slepian(0.1, 16, method="dense"), slepian(0.1, 16), atol=1e-12)

    def test_ratio_is_top_eigenvalue(self):
        Q = build_q(0.15, 24)
        assert concentration_ratio(slepian(0.15, 24), Q) == pytest.approx(
            np.linalg.eigvalsh(Q)[-1], rel=1e-14
        )

    def test_concentration_increases_with_p(self):
        ratios = [concentration_ratio(slepian(n / 512, 512), build_q(n / 512, 512))
                  for n in (1, 5, 20)]
        assert ratios[0] < ratios[1] < ratios[2]

    def test_rejects_p_one(self):
        with pytest.raises(InvalidParamsError):
            slepian(1.0, 8)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            slepian(0.1, 8, method="power")


class TestConcentration:
    def test_p_one(self, rng):
        w = rng.standard_normal(10)
        assert concentration_ratio(w, build_q(1, 10)) == pytest.approx(1.0, rel=1e-15)

    def test_matches_quadrature(self, rng):
        w = rng.standard_normal(16)
        for p in (0.1, 0.35):
            ref = oracles.dtft_band_energy(w, p)
            assert concentration_ratio(w, build_q(p, 16)) == pytest.approx(ref, rel=1e-6)

    def test_monotone_in_p(self, rng):
        w = rng.standard_normal(20)
        vals = [concentration_ratio(w, build_q(p, 20)) for p in np.linspace(0.05, 1, 20)]
        assert np.all(np.diff(vals) >= -1e-15)

    def test_zero_window(self):
        with pytest.raises(ValueError):
            concentration_ratio(np.zeros(4), build_q(0.5, 4))

    def test_sidelobe_resolves_below_epsilon(self):
        w = slepian(20 / 512, 512)
        s = sidelobe_energy(w, build_q(20 / 512, 512, dtype=np.longdouble))
        assert abs(s) < 1e-17


class TestSpectrum:
    def test_impulse_is_flat(self):
        w = np.zeros(8)
        w[3] = 1
        sp = spectrum(w)
        assert np.allclose(sp.magnitudes_db, 0.0, atol=1e-12)

    def test_dirichlet_first_null(self):
        sp = spectrum(np.ones(8), num_points=64)
        k = np.argmin(np.abs(sp.freqs - 1 / 8))
        assert sp.freqs[k] == 1 / 8
        assert sp.magnitudes_db[k] < -250
        assert sp.magnitudes_db[np.argmin(np.abs(sp.freqs))] == 0.0

    def test_matches_direct_sum(self, rng):
        K = 12
        w = rng.standard_normal(K)
        sp = spectrum(w, num_points=K)
        f = np.arange(K) / K - 0.5
        mag = np.abs(np.exp(-2j * np.pi * np.outer(f, np.arange(K))) @ w)
        assert np.allclose(sp.freqs, f)
        assert np.allclose(sp.magnitudes_db, 20 * np.log10(mag / mag.max()), atol=1e-9)

    def test_frequency_columns(self):
        sp = spectrum(np.hanning(16))
        assert len(sp.freqs) == 256
        assert sp.freqs[0] == -0.5 and sp.freqs[-1] < 0.5
        assert np.array_equal(sp.freqs_nyquist, 2 * sp.freqs)

    def test_too_few_points(self):
        with pytest.raises(InvalidParamsError):
            spectrum(np.ones(16), num_points=8)
