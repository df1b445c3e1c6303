import math

import numpy as np
import pytest

from qctraj.errors import (
    AmplitudeDenominatorSmall,
    DomainTooSmall,
    SingularMatrix,
    ToleranceNotMet,
)
from qctraj.model import PolynomialPotential, eval_potential
from qctraj.oracle import (
    SpatialGrid,
    dense_prefactor,
    ehrenfest,
    init_gaussian,
    propagate,
    propagate_series,
    quad_adaptive,
    quantum_averages,
)


class TestQuadrature:
    def test_sine_integral(self):
        assert quad_adaptive(math.sin, 0.0, math.pi, 1e-12) == pytest.approx(2.0, abs=1e-12)

    def test_orientation_and_degenerate_interval(self):
        assert quad_adaptive(math.sin, math.pi, 0.0, 1e-12) == pytest.approx(-2.0, abs=1e-12)
        assert quad_adaptive(math.sin, 1.0, 1.0, 1e-12) == 0.0

    def test_oscillatory_integrand(self):
        val = quad_adaptive(lambda t: math.sin(17 * t) * math.exp(-t), 0.0, 3.0, 1e-13)
        exact = 17 / (1 + 17**2) * (1 - math.exp(-3) * (math.cos(51) + math.sin(51) / 17))
        assert val == pytest.approx(exact, rel=1e-10)

    def test_tolerance_not_met(self):
        with pytest.raises(ToleranceNotMet):
            quad_adaptive(lambda t: abs(t) ** 0.01 if t != 0 else 0.0, -1.0, 1.0, 1e-300)


class TestTridiagonal:
    def test_discrete_laplacian_determinant(self):
        # Tri(-1, 2, -1) of size n has determinant n + 1; this is the free
        # Jacobi-field identity Q_N = dt * det(2 dt H) = N dt
        for n in (1, 4, 31, 63):
            det = dense_prefactor(np.full(n, 2.0), np.full(n - 1, -1.0))
            assert det == pytest.approx(n + 1, rel=1e-12)

    def test_scaled_free_hessian(self):
        n_steps, dt = 16, 0.125
        diag = np.full(n_steps - 1, 1.0 / dt)
        off = np.full(n_steps - 2, -0.5 / dt)
        q_n = dt * dense_prefactor(2 * dt * diag, 2 * dt * off)
        assert q_n == pytest.approx(n_steps * dt, rel=1e-12)

    def test_against_numpy(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            n = int(rng.integers(2, 12))
            d = rng.uniform(1, 3, size=n)
            e = rng.uniform(-1, 1, size=n - 1)
            full = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
            assert dense_prefactor(d, e) == pytest.approx(
                float(np.linalg.det(full)), rel=1e-10
            )

    def test_singular_matrix(self):
        with pytest.raises(SingularMatrix):
            dense_prefactor([0.0, 1.0], [1.0])


class TestEhrenfest:
    def test_driven_harmonic_closed_form(self):
        pot = PolynomialPotential(
            mass=1.3, harmonic_freq=2.1, linear_bias=0.7, drive_amp=0.9, drive_freq=3.3
        )
        m, w, b, amp, om = 1.3, 2.1, 0.7, 0.9, 3.3
        t_grid = np.linspace(0.2, 3.0, 15)
        xs = ehrenfest(pot, 0.0, 0.0, t_grid, dt=2e-4)
        for t, x in zip(t_grid, xs):
            closed = b / (m * w * w) * (1 - math.cos(w * t)) + amp * (
                w * math.sin(om * t) - om * math.sin(w * t)
            ) / (m * w * (w * w - om * om))
            assert x == pytest.approx(closed, abs=1e-9)

    def test_rest_at_origin_stays(self):
        pot = PolynomialPotential(mass=1.0, harmonic_freq=2.0, coeffs={3: 0.4})
        xs = ehrenfest(pot, 0.0, 0.0, [0.5, 1.0, 2.0])
        np.testing.assert_array_equal(xs, 0.0)

    def test_fourth_order_convergence(self):
        pot = PolynomialPotential(mass=1.0, harmonic_freq=2.0, coeffs={3: 0.1},
                                  linear_bias=0.3)
        ref = ehrenfest(pot, 0.5, 0.0, [3.0], dt=1e-5)[0]
        e1 = abs(ehrenfest(pot, 0.5, 0.0, [3.0], dt=4e-3)[0] - ref)
        e2 = abs(ehrenfest(pot, 0.5, 0.0, [3.0], dt=2e-3)[0] - ref)
        assert 12.0 < e1 / e2 < 20.0

    def test_energy_conservation(self):
        # with A = 0 the energy m v^2/2 + V(x) is conserved; the velocity is
        # reconstructed by central differences of two offset runs
        pot = PolynomialPotential(mass=1.0, harmonic_freq=2.0, coeffs={3: 0.1},
                                  linear_bias=0.3)
        m = pot.mass
        t_grid = np.linspace(0.5, 5.0, 10)
        dt = 1e-4
        xs = ehrenfest(pot, 0.5, 0.0, t_grid, dt=dt)
        x_plus = ehrenfest(pot, 0.5, 0.0, t_grid + dt, dt=dt)
        x_minus = ehrenfest(pot, 0.5, 0.0, t_grid - dt, dt=dt)
        energies = [
            0.5 * m * ((xp - xm) / (2 * dt)) ** 2 + eval_potential(pot, x, 0.0)
            for x, xp, xm in zip(xs, x_plus, x_minus)
        ]
        for energy in energies:
            assert energy == pytest.approx(energies[0], abs=1e-8 * max(1, abs(energies[0])))


GRID = SpatialGrid(half_width=12.0, points=2048)


class TestWavePacket:
    def test_initial_moments(self):
        st = init_gaussian(0.4, 0.5, 0.01, GRID)
        assert st.norm_sq() == pytest.approx(1.0, abs=1e-12)
        assert st.density_average() == pytest.approx(0.4, abs=1e-10)
        assert st.position_variance() == pytest.approx(0.01 / (4 * 0.5), rel=1e-8)

    def test_even_packet_zero_averages(self):
        st = init_gaussian(0.0, 0.5, 0.01, GRID)
        series = quantum_averages([st])
        assert series.dens_avg[0] == pytest.approx(0.0, abs=1e-12)
        assert abs(series.amp_avg[0]) < 1e-10

    def test_domain_too_small(self):
        small = SpatialGrid(half_width=1.0, points=256)
        with pytest.raises(DomainTooSmall):
            init_gaussian(0.9, 0.5, 0.01, small)

    def test_free_packet_spreading(self):
        st = init_gaussian(0.0, 0.5, 0.1, SpatialGrid(half_width=20.0, points=2048))
        pot = PolynomialPotential(mass=1.0, harmonic_freq=0.0)
        out = propagate(st, pot, 1e-3, 2000)
        s0_sq = 0.1 / (4 * 0.5)
        expect = s0_sq + (0.1 * 2.0) ** 2 / (4 * 1.0**2 * s0_sq)
        assert out.position_variance() == pytest.approx(expect, rel=1e-6)
        assert out.time == pytest.approx(2.0)

    def test_norm_conserved(self):
        pot = PolynomialPotential(mass=1.0, harmonic_freq=2.0, coeffs={3: 0.2})
        st = init_gaussian(0.3, 0.5, 0.01, GRID)
        out = propagate(st, pot, 2e-4, 5000)
        assert abs(out.norm_sq() - 1.0) < 1e-8

    def test_harmonic_center_oscillates(self):
        pot = PolynomialPotential(mass=1.0, harmonic_freq=2.0)
        st = init_gaussian(1.0, 0.5, 0.01, GRID)
        series = propagate_series(st, pot, 2e-4, np.linspace(0.1, 2.0, 10))
        for t, dens in zip(series.times, series.dens_avg):
            assert dens == pytest.approx(math.cos(2.0 * t), abs=1e-5)

    def test_second_order_in_dt(self):
        pot = PolynomialPotential(mass=1.0, harmonic_freq=2.0, coeffs={3: 0.2},
                                  linear_bias=0.5)
        st = init_gaussian(0.3, 0.5, 0.01, GRID)
        ref = propagate(st, pot, 2.5e-5, 16000).density_average()
        e1 = abs(propagate(st, pot, 4e-4, 1000).density_average() - ref)
        e2 = abs(propagate(st, pot, 2e-4, 2000).density_average() - ref)
        assert 3.0 < e1 / e2 < 5.0

    def test_amplitude_average_finite_width_formula(self):
        # harmonic evolution keeps the packet Gaussian; the amplitude-weighted
        # center is x0 / (cos wt + i m w sin(wt) / (2 eta)) for data at rest
        m, w, eta, hbar = 1.0, 2.0, 0.5, 0.01
        pot = PolynomialPotential(mass=m, harmonic_freq=w)
        st = init_gaussian(1.0, eta, hbar, GRID)
        # early times, before the amplitude denominator collapses
        series = propagate_series(st, pot, 2e-4, [0.05, 0.1, 0.15])
        for t, amp, flagged in zip(series.times, series.amp_avg, series.amp_flagged):
            assert not flagged
            pred = 1.0 / (math.cos(w * t) + 1j * m * w * math.sin(w * t) / (2 * eta))
            assert abs(amp - pred) < 2e-4

    def test_flagged_samples_cluster_at_cos_zeros(self):
        # the ill-conditioned amplitude samples form one contiguous band
        # containing the zero of cos(wt); far from it nothing is flagged
        m, w = 0.05, 1.0
        pot = PolynomialPotential(mass=m, harmonic_freq=w)
        grid = SpatialGrid(half_width=15.0, points=2048)
        st = init_gaussian(1.0, 0.1, 1e-3, grid, mass=m)
        t_grid = np.linspace(0.1, 2.6, 26)
        series = propagate_series(st, pot, 5e-4, t_grid)
        flagged_idx = np.flatnonzero(series.amp_flagged)
        assert flagged_idx.size > 0
        assert np.array_equal(
            flagged_idx, np.arange(flagged_idx[0], flagged_idx[-1] + 1)
        )
        zero_idx = int(np.argmin(np.abs(np.cos(w * series.times))))
        assert flagged_idx[0] <= zero_idx <= flagged_idx[-1]
        for t, flagged in zip(series.times, series.amp_flagged):
            if abs(math.cos(w * t)) > 0.6:
                assert not flagged

    def test_amplitude_denominator_error(self):
        grid = SpatialGrid(half_width=10.0, points=512)
        x = grid.x
        psi = (x * np.exp(-(x**2))).astype(complex)  # odd: integral ~ 0
        from qctraj.oracle import WaveState

        st = WaveState(grid=grid, psi=psi, hbar=1e-3)
        with pytest.raises(AmplitudeDenominatorSmall):
            st.amplitude_average()

    def test_absorbing_mask_tracks_removed_norm(self):
        # a tilted potential slides the packet into the soft mask; the
        # pre-mask accounting keeps the stability check green
        pot = PolynomialPotential(mass=1.0, harmonic_freq=0.0, linear_bias=0.5)
        grid = SpatialGrid(half_width=12.0, points=2048)
        st = init_gaussian(0.0, 0.5, 0.05, grid)
        out = propagate(st, pot, 2e-3, 6000, absorb=True)
        assert out.absorbed > 0.5  # most of the packet slid out
        assert abs(out.norm_sq() + out.absorbed - 1.0) < 1e-7

    def test_boundary_health(self):
        pot = PolynomialPotential(mass=1.0, harmonic_freq=2.0)
        st = init_gaussian(1.0, 0.5, 0.01, GRID)
        out = propagate(st, pot, 2e-4, 5000)
        edge = int(0.05 * GRID.points)
        tails = np.concatenate([np.abs(out.psi[:edge]), np.abs(out.psi[-edge:])])
        assert float(np.max(tails)) < 1e-6 * float(np.max(np.abs(out.psi)))

    def test_dt_guard(self):
        pot = PolynomialPotential(mass=1.0, harmonic_freq=50.0)
        st = init_gaussian(0.5, 0.5, 1e-4, GRID)
        with pytest.raises(ValueError):
            propagate(st, pot, 1.0, 1)
