import math

import numpy as np
import pytest
from scipy import integrate, stats

from rascodes.channel import (
    ERASED,
    LLR_CAP,
    ChannelError,
    ChannelModel,
    Kind,
    biawgn_capacity_snr_db,
    channel_capacity,
    ebn0_db_from_snr_db,
    expect0,
    llr,
    prior_llr,
    sigma_from_snr_db,
    snr_db_from_ebn0_db,
    transmit,
)


def h2(p):
    return 0.0 if p in (0, 1) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def awgn_capacity_quad(sigma):
    """Uniform-input BI-AWGN mutual information straight from the densities."""
    def f(y):
        l0 = stats.norm.logpdf(y, 1.0, sigma)
        l1 = stats.norm.logpdf(y, -1.0, sigma)
        ly = np.logaddexp(l0, l1) - math.log(2)
        return 0.5 * (math.exp(l0) * (l0 - ly) + math.exp(l1) * (l1 - ly)) / math.log(2)
    lim = 1 + 40 * sigma
    return integrate.quad(f, -lim, lim, limit=400, epsabs=1e-13)[0]


class TestModel:
    @pytest.mark.parametrize("bad", [
        lambda: ChannelModel.bsc(0.6), lambda: ChannelModel.bsc(-0.1),
        lambda: ChannelModel.bec(1.5), lambda: ChannelModel.biawgn(0.0),
        lambda: ChannelModel.biawgn(float("inf")),
    ])
    def test_validation(self, bad):
        with pytest.raises(ChannelError):
            bad()

    def test_snr_conversions(self):
        assert sigma_from_snr_db(0.0) == 1.0
        ch = ChannelModel.biawgn_snr_db(3.0)
        assert ch.snr_db == pytest.approx(3.0)
        assert snr_db_from_ebn0_db(1.0, 0.5) == pytest.approx(1.0)
        assert snr_db_from_ebn0_db(1.0, 1.0) == pytest.approx(1.0 + 10 * math.log10(2))
        assert ebn0_db_from_snr_db(snr_db_from_ebn0_db(0.3, 1.25, 0.6), 1.25, 0.6) == pytest.approx(0.3)

    def test_sigma_only_for_awgn(self):
        with pytest.raises(ChannelError):
            ChannelModel.bsc(0.1).sigma

    def test_symmetry_map_awgn(self):
        s = 0.8
        ch = ChannelModel.biawgn(s)
        y = np.linspace(-3, 3, 13)
        assert np.allclose(stats.norm.pdf(y, -1, s), stats.norm.pdf(ch.symmetry_map(y), 1, s))

    def test_symmetry_map_discrete(self):
        ch = ChannelModel.bec(0.3)
        assert list(ch.symmetry_map(np.array([0, 1, ERASED]))) == [1, 0, ERASED]


class TestCapacity:
    @pytest.mark.parametrize("eps", [0.0, 0.02, 0.11, 0.5])
    def test_bsc(self, eps):
        assert channel_capacity(ChannelModel.bsc(eps)) == pytest.approx(1 - h2(eps), abs=1e-15)

    def test_bsc_011_half_rate(self):
        # 1 - h(0.11), the classical rate-1/2 BSC threshold
        assert channel_capacity(ChannelModel.bsc(0.11)) == pytest.approx(0.500084042, abs=1e-9)

    def test_bec_and_trivial(self):
        assert channel_capacity(ChannelModel.bec(0.3)) == pytest.approx(0.7)
        assert channel_capacity(ChannelModel.noiseless()) == 1.0
        assert channel_capacity(ChannelModel.totally_erased()) == 0.0

    @pytest.mark.parametrize("sigma", [0.3, 0.7, 1.0, 1.5, 3.0])
    def test_awgn_vs_quadrature(self, sigma):
        ours = channel_capacity(ChannelModel.biawgn(sigma))
        assert ours == pytest.approx(awgn_capacity_quad(sigma), abs=1e-9)

    def test_awgn_unit_sigma_frozen(self):
        # frozen from the quadrature oracle above
        assert biawgn_capacity_snr_db(0.0) == pytest.approx(0.4859441541, abs=1e-9)

    def test_awgn_monotone_in_snr(self):
        caps = [biawgn_capacity_snr_db(s) for s in np.arange(-10, 10, 0.5)]
        assert all(b > a for a, b in zip(caps, caps[1:]))

    @pytest.mark.parametrize("snr", [-25.0, 20.0])
    def test_awgn_extremes(self, snr):
        c = biawgn_capacity_snr_db(snr)
        assert 0.0 <= c <= 1.0
        assert np.isfinite(c)


class TestTransmit:
    def test_bsc_flip_rate(self, rng):
        n = 200000
        y = transmit(np.zeros(n, dtype=np.uint8), ChannelModel.bsc(0.1), rng).values
        assert abs(y.mean() - 0.1) < 3 * math.sqrt(0.09 / n)

    def test_bec_erasure_rate(self, rng):
        n = 200000
        x = rng.integers(0, 2, n).astype(np.uint8)
        y = transmit(x, ChannelModel.bec(0.25), rng).values
        er = y == ERASED
        assert abs(er.mean() - 0.25) < 3 * math.sqrt(0.25 * 0.75 / n)
        assert np.array_equal(y[~er], x[~er])

    def test_awgn_moments(self, rng):
        n = 200000
        y = transmit(np.ones(n, dtype=np.uint8), ChannelModel.biawgn(0.5), rng).values
        assert abs(y.mean() + 1) < 3 * 0.5 / math.sqrt(n)
        assert y.std() == pytest.approx(0.5, rel=0.01)

    def test_noiseless_and_erased(self, rng):
        x = np.array([0, 1, 1], dtype=np.uint8)
        assert np.array_equal(transmit(x, ChannelModel.noiseless(), rng).values, x)
        assert (transmit(x, ChannelModel.totally_erased(), rng).values == ERASED).all()


class TestLLR:
    def test_bsc(self):
        ch = ChannelModel.bsc(0.1)
        out = llr(ch, np.array([0, 1]))
        assert out[0] == pytest.approx(math.log(9)) and out[1] == pytest.approx(-math.log(9))

    def test_awgn(self):
        ch = ChannelModel.biawgn(0.5)
        assert np.allclose(llr(ch, np.array([0.3, -1.0])), [2.4, -8.0])

    def test_awgn_llr_is_density_ratio(self):
        s = 0.9
        y = np.linspace(-2, 2, 9)
        ratio = np.log(stats.norm.pdf(y, 1, s) / stats.norm.pdf(y, -1, s))
        assert np.allclose(llr(ChannelModel.biawgn(s), y), ratio)

    def test_bec_and_noiseless(self):
        out = llr(ChannelModel.bec(0.5), np.array([0, 1, ERASED]))
        assert list(out) == [LLR_CAP, -LLR_CAP, 0.0]
        assert list(llr(ChannelModel.noiseless(), np.array([1, 0]))) == [-LLR_CAP, LLR_CAP]

    def test_erased_requires_prior(self):
        with pytest.raises(ChannelError):
            llr(ChannelModel.totally_erased(), np.array([ERASED]))
        out = llr(ChannelModel.totally_erased(), np.array([ERASED, ERASED]), source_prior=0.2)
        assert np.allclose(out, math.log(4))

    def test_prior(self):
        assert prior_llr(0.5) == 0.0
        assert prior_llr(0.0) == LLR_CAP and prior_llr(1.0) == -LLR_CAP
        assert prior_llr(1e-30) == LLR_CAP


class TestExpect0:
    def test_awgn_llr_mean(self):
        s = 1.2
        assert expect0(ChannelModel.biawgn(s), lambda L: L) == pytest.approx(2 / s**2)

    def test_awgn_monte_carlo(self, rng):
        ch = ChannelModel.biawgn(0.8)
        f = lambda L: np.tanh(L / 2)  # noqa: E731
        y = transmit(np.zeros(400000, dtype=np.uint8), ch, rng)
        mc = f(llr(ch, y))
        assert abs(expect0(ch, f) - mc.mean()) < 4 * mc.std() / math.sqrt(mc.size)

    def test_bsc_atoms(self):
        ch = ChannelModel.bsc(0.2)
        assert expect0(ch, lambda L: np.sign(L)) == pytest.approx(0.6)
        assert ch.kind is Kind.BSC
