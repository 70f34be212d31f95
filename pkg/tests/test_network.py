import numpy as np
import pytest
from numpy.testing import assert_allclose

from coupled_ris import (
    ChannelTriple,
    CouplingMatrix,
    LoadKind,
    LoadMatrix,
    ReferenceImpedance,
    Representation,
    cayley,
    cayley_inv,
    channel_y,
    channel_z,
    decouple_load,
    effective_channels,
    recover_load,
    scattering_channel,
    to_scattering,
    z_to_y,
)
from coupled_ris.errors import (
    CayleyPole,
    DimensionError,
    RepresentationError,
    SingularSystem,
)

from conftest import Z0, random_channels, random_coupling, random_symmetric


def scalar_chan(direct, ri, it, rep=Representation.IMPEDANCE):
    return ChannelTriple(direct, [ri], [it], rep)


class TestChannelModels:
    def test_channel_z_scalar(self):
        # h = (1/100)(0 - 100 * 100 / 50) = -2
        chan = scalar_chan(0.0, 100.0, 100.0)
        h = channel_z(chan, LoadMatrix.zeros(LoadKind.REACTANCE, 1),
                      CouplingMatrix([[50.0]]), Z0)
        assert_allclose(h, -2.0, rtol=1e-14)

    def test_channel_z_no_ris_path(self, rng):
        chan = ChannelTriple(3.0 - 4.0j, np.zeros(4), rng.standard_normal(4) + 0j)
        h = channel_z(chan, LoadMatrix.zeros(LoadKind.REACTANCE, 4),
                      random_coupling(rng, 4), Z0)
        assert_allclose(h, (3.0 - 4.0j) / 100.0, rtol=1e-14)

    def test_channel_y_scalar(self):
        # (1/0.04)(-0.08 + 0.04 * 0.04 / 0.02) = 0; the open-circuit load
        # (B = 0 <-> X infinite) nulls the converted scalar instance
        chan = scalar_chan(0.08, -0.04, -0.04, Representation.ADMITTANCE)
        h = channel_y(chan, LoadMatrix.zeros(LoadKind.SUSCEPTANCE, 1),
                      CouplingMatrix([[0.02]], Representation.ADMITTANCE), Z0)
        assert_allclose(h, 0.0, atol=1e-16)

    def test_channel_y_no_ris_path(self, rng):
        chan = ChannelTriple(0.01j, np.zeros(3), rng.standard_normal(3) + 0j,
                             Representation.ADMITTANCE)
        h = channel_y(chan, LoadMatrix.zeros(LoadKind.SUSCEPTANCE, 3),
                      CouplingMatrix(np.eye(3) / 50.0, Representation.ADMITTANCE), Z0)
        assert_allclose(h, -0.01j / (2.0 * Z0.y0), rtol=1e-14)

    def test_direct_term_linearity(self, rng):
        coupling = random_coupling(rng, 5)
        load = LoadMatrix(LoadKind.REACTANCE, random_symmetric(rng, 5, 30.0))
        base = random_channels(rng, 5, direct=False)
        h0 = channel_z(base, load, coupling, Z0)
        for psi in (0.3, 1.7, -2.2):
            z_rt = 4.0 * np.exp(1j * psi)
            chan = ChannelTriple(z_rt, base.ris_to_rx, base.tx_to_ris)
            h = channel_z(chan, load, coupling, Z0)
            assert_allclose(h - h0, z_rt / (2.0 * Z0.z0), rtol=1e-12)

    def test_singular_load_plus_coupling(self):
        chan = ChannelTriple(0.0, [1.0, 1.0], [1.0, 1.0])
        coupling = CouplingMatrix([[50.0, 50.0], [50.0, 50.0]])  # rank one
        load = LoadMatrix.zeros(LoadKind.REACTANCE, 2)
        with pytest.raises(SingularSystem):
            channel_z(chan, load, coupling, Z0)

    def test_dimension_mismatch(self, rng):
        chan = random_channels(rng, 4)
        with pytest.raises(DimensionError):
            channel_z(chan, LoadMatrix.zeros(LoadKind.REACTANCE, 3),
                      random_coupling(rng, 4), Z0)

    def test_representation_mismatch(self, rng):
        chan = random_channels(rng, 4)
        with pytest.raises(RepresentationError):
            channel_y(chan, LoadMatrix.zeros(LoadKind.SUSCEPTANCE, 4),
                      random_coupling(rng, 4).to_admittance(), Z0)


class TestConversion:
    def test_scalar_values(self):
        chan = scalar_chan(0.0, 100.0, 100.0)
        converted, y_ii = z_to_y(chan, CouplingMatrix([[50.0]]), Z0)
        assert_allclose(converted.ris_to_rx[0], -0.04, rtol=1e-14)
        assert_allclose(converted.tx_to_ris[0], -0.04, rtol=1e-14)
        assert_allclose(converted.direct, 0.08, rtol=1e-14)
        assert_allclose(y_ii.values, [[0.02]], rtol=1e-14)

    @pytest.mark.parametrize("n", [1, 4, 8])
    def test_channel_equivalence(self, rng, n):
        # the Y-parameter model with B = -X^{-1} reproduces the Z-parameter
        # channel; this is the cross-representation oracle for both models
        for _ in range(25):
            chan = random_channels(rng, n)
            coupling = random_coupling(rng, n)
            x = random_symmetric(rng, n, 30.0) + 60.0 * np.eye(n)
            load = LoadMatrix(LoadKind.REACTANCE, x)
            h_z = channel_z(chan, load, coupling, Z0)
            chan_y, y_ii = z_to_y(chan, coupling, Z0)
            b = -np.linalg.inv(load.values)
            h_y = channel_y(chan_y, LoadMatrix(LoadKind.SUSCEPTANCE, 0.5 * (b + b.T)),
                            y_ii, Z0)
            assert abs(h_z - h_y) <= 1e-11 * abs(h_z)

    def test_singular_coupling_rejected(self):
        chan = ChannelTriple(0.0, [1.0, 1.0], [1.0, 1.0])
        with pytest.raises(SingularSystem):
            z_to_y(chan, CouplingMatrix([[50.0, 50.0], [50.0, 50.0]]), Z0)


class TestEffectiveChannels:
    def test_identity_real_part_is_noop(self, rng):
        chan = random_channels(rng, 6)
        coupling = CouplingMatrix.no_coupling(6, Z0.z0)
        eff = effective_channels(chan, coupling, Z0)
        assert_allclose(eff.ris_to_rx, chan.ris_to_rx, rtol=1e-14)
        assert_allclose(eff.tx_to_ris, chan.tx_to_ris, rtol=1e-14)

    def test_scaled_identity_halves(self, rng):
        chan = random_channels(rng, 6)
        coupling = CouplingMatrix.no_coupling(6, 4.0 * Z0.z0)
        eff = effective_channels(chan, coupling, Z0)
        assert_allclose(eff.ris_to_rx, chan.ris_to_rx / 2.0, rtol=1e-14)

    def test_norm_identity(self, rng):
        # ||z_ri Re^{-1/2}||^2 sqrt-free check against z_ri Re^{-1} z_ri^H
        for _ in range(10):
            chan = random_channels(rng, 8)
            coupling = random_coupling(rng, 8)
            eff = effective_channels(chan, coupling, Z0)
            lhs = np.linalg.norm(eff.ris_to_rx) ** 2
            rhs = Z0.z0 * (chan.ris_to_rx @ coupling.re_inv @ chan.ris_to_rx.conj()).real
            assert_allclose(lhs, rhs, rtol=1e-12)

    def test_representation_mismatch(self, rng):
        chan = random_channels(rng, 4)
        with pytest.raises(RepresentationError):
            effective_channels(chan, random_coupling(rng, 4).to_admittance(), Z0)


class TestScattering:
    def test_scalar_mapping(self):
        chan = scalar_chan(0.0, 100.0, 100.0)
        scat = to_scattering(chan, Z0)
        assert_allclose(scat.s_ri[0], 1.0, rtol=1e-14)
        assert_allclose(scat.s_it[0], 1.0, rtol=1e-14)
        assert_allclose(scat.s_rt, -1.0, rtol=1e-14)

    @pytest.mark.parametrize("rep", list(Representation))
    def test_matches_channel_for_any_load(self, rng, rep):
        # s_rt + s_ri theta s_it equals the parameter-domain channel exactly
        for _ in range(10):
            n = 6
            coupling = random_coupling(rng, n)
            chan = random_channels(rng, n)
            if rep is Representation.ADMITTANCE:
                chan, coupling = z_to_y(chan, coupling, Z0)
            kind = (LoadKind.REACTANCE if rep is Representation.IMPEDANCE
                    else LoadKind.SUSCEPTANCE)
            scale = 30.0 if kind is LoadKind.REACTANCE else 30.0 * Z0.y0**2
            barred = LoadMatrix(kind, random_symmetric(rng, n, scale))
            load = recover_load(barred, coupling, Z0)
            evaluate = channel_z if rep is Representation.IMPEDANCE else channel_y
            h_direct = evaluate(chan, load, coupling, Z0)
            scat = to_scattering(effective_channels(chan, coupling, Z0), Z0)
            h_scat = scattering_channel(scat, cayley(barred, Z0))
            assert abs(h_scat - h_direct) <= 1e-11 * abs(h_direct)


class TestCayley:
    def test_zero_reactance(self):
        theta = cayley(LoadMatrix.zeros(LoadKind.REACTANCE, 5), Z0)
        assert_allclose(theta, -np.eye(5), atol=1e-15)

    def test_zero_susceptance(self):
        theta = cayley(LoadMatrix.zeros(LoadKind.SUSCEPTANCE, 3), Z0)
        assert_allclose(theta, np.eye(3), atol=1e-15)

    def test_scalar_reactance_z0(self):
        theta = cayley(LoadMatrix(LoadKind.REACTANCE, [[Z0.z0]]), Z0)
        assert_allclose(theta, [[1.0j]], atol=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 4, 8, 16, 32])
    def test_unitary_symmetric(self, rng, n):
        for _ in range(20):
            load = LoadMatrix(LoadKind.REACTANCE, random_symmetric(rng, n, 80.0))
            theta = cayley(load, Z0)
            assert np.abs(theta.conj().T @ theta - np.eye(n)).max() <= 1e-10
            assert np.abs(theta - theta.T).max() <= 1e-12

    @pytest.mark.parametrize("kind", list(LoadKind))
    def test_round_trip(self, rng, kind):
        scale = 80.0 if kind is LoadKind.REACTANCE else 80.0 * Z0.y0**2
        for n in (1, 4, 8):
            load = LoadMatrix(kind, random_symmetric(rng, n, scale))
            back = cayley_inv(cayley(load, Z0), Z0, kind)
            assert np.abs(back.values - load.values).max() <= 1e-9 * max(
                1.0, np.abs(load.values).max())

    def test_scalar_inverse(self):
        back = cayley_inv(np.array([[1.0j]]), Z0, LoadKind.REACTANCE)
        assert_allclose(back.values, [[Z0.z0]], rtol=1e-12)

    def test_pole_detection(self):
        with pytest.raises(CayleyPole):
            cayley_inv(np.eye(3, dtype=complex), Z0, LoadKind.REACTANCE)
        with pytest.raises(CayleyPole):
            cayley_inv(-np.eye(3, dtype=complex), Z0, LoadKind.SUSCEPTANCE)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            cayley_inv(0.5 * np.eye(2, dtype=complex), Z0, LoadKind.REACTANCE)


class TestLoadTransforms:
    def test_identity_coupling_keeps_barred(self, rng):
        barred = LoadMatrix(LoadKind.REACTANCE, random_symmetric(rng, 5, 40.0))
        load = recover_load(barred, CouplingMatrix.no_coupling(5, Z0.z0), Z0)
        assert_allclose(load.values, barred.values, rtol=1e-12)

    def test_zero_barred_gives_negative_imag(self, rng):
        coupling = random_coupling(rng, 5)
        load = recover_load(LoadMatrix.zeros(LoadKind.REACTANCE, 5), coupling, Z0)
        assert_allclose(load.values, -coupling.im, atol=1e-12)

    @pytest.mark.parametrize("kind", list(LoadKind))
    def test_round_trip(self, rng, kind):
        for _ in range(10):
            coupling = random_coupling(rng, 6)
            if kind is LoadKind.SUSCEPTANCE:
                coupling = coupling.to_admittance()
            scale = 40.0 if kind is LoadKind.REACTANCE else 40.0 * Z0.y0**2
            barred = LoadMatrix(kind, random_symmetric(rng, 6, scale))
            load = recover_load(barred, coupling, Z0)
            again = decouple_load(load, coupling, Z0)
            assert np.abs(again.values - barred.values).max() <= 1e-10 * max(
                1.0, np.abs(barred.values).max())

    def test_kind_coupling_mismatch(self, rng):
        barred = LoadMatrix.zeros(LoadKind.SUSCEPTANCE, 4)
        with pytest.raises(RepresentationError):
            recover_load(barred, random_coupling(rng, 4), Z0)


class TestLoadMatrix:
    def test_upper_triangle_is_authoritative(self):
        values = np.array([[1.0, 2.0], [999.0, 3.0]])
        load = LoadMatrix(LoadKind.REACTANCE, values)
        assert_allclose(load.values, [[1.0, 2.0], [2.0, 3.0]])
        assert load.values.flags.writeable is False

    def test_patterns(self):
        diag = LoadMatrix.from_diagonal(LoadKind.REACTANCE, [1.0, 2.0, 3.0])
        assert diag.matches_pattern("diagonal")
        assert diag.matches_pattern("tridiagonal")
        tri = LoadMatrix(LoadKind.REACTANCE,
                         np.diag([1.0, 2.0, 3.0]) + np.diag([4.0, 5.0], k=1))
        assert tri.matches_pattern("tridiagonal")
        assert not tri.matches_pattern("diagonal")

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            LoadMatrix(LoadKind.REACTANCE, [[np.nan]])


class TestChannelTriple:
    def test_rejects_length_mismatch(self):
        with pytest.raises(DimensionError):
            ChannelTriple(0.0, [1.0, 2.0], [1.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            ChannelTriple(np.inf, [1.0], [1.0])

    def test_reference_impedance_consistency(self):
        ref = ReferenceImpedance(50.0)
        assert ref.y0 * ref.z0 == 1.0
        with pytest.raises(ValueError):
            ReferenceImpedance(-1.0)
