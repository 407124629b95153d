"""
Tests for the thermodynamic bookkeeping: work, heat, ideal references,
friction, lubrication costs and diagnostics.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import linregress

from app.core.exceptions import DimensionError
from app.core.ledger import (
    CycleLedger,
    coherence_l1,
    decoupling_cost,
    drive_cost,
    drive_cost_quadrature,
    fit_decay_rate,
    friction_work,
    ideal_otto,
    isochore_heat,
    log_negativity,
    measurement_energy_cost,
    net_power,
    stroke_work,
    thermalization_time,
    work_integral,
)
from app.core.linalg import I2, KET_0, KET_PLUS, Z, DensityOperator, expectation
from app.core.model import (
    Stage,
    h_cold,
    h_hot,
    h_stage,
    h_total,
    initial_joint_state,
    interaction_hamiltonian,
    thermal_state,
)
from app.core.propagation import evolve_path
from app.core.strategies import StrongCouplingStrategy, StrokeContext
from app.core.zeno import MeasurementBasis


def _bare_path(p, stage, rho, settings):
    duration = p.tau_comp if stage is Stage.COMPRESSION else p.tau_exp
    return evolve_path(lambda s: h_stage(p, stage, s), rho, 0.0, duration, settings)


class TestWorkAndHeat:
    def test_quasistatic_compression(self, params, cold_gibbs):
        hot_equivalent = thermal_state(h_hot(params), params.T_c * params.Omega / params.omega)
        work = stroke_work(h_cold(params), h_hot(params), cold_gibbs, hot_equivalent)
        expected = -0.5 * (params.Omega - params.omega) * math.tanh(params.omega / (2 * params.T_c))
        assert work == pytest.approx(expected, abs=1e-10)
        assert work == pytest.approx(-0.8274, abs=1e-4)

    def test_dimension_mismatch(self, params, cold_gibbs):
        with pytest.raises(DimensionError):
            stroke_work(h_cold(params), h_total(params, 0.0, Stage.COMPRESSION), cold_gibbs, cold_gibbs)

    def test_isochore_heat(self, params, cold_gibbs):
        hot_gibbs = thermal_state(h_hot(params), params.T_h)
        heat = isochore_heat(h_hot(params), cold_gibbs, hot_gibbs)
        assert heat == pytest.approx(hot_gibbs.expect(h_hot(params)) - cold_gibbs.expect(h_hot(params)))


class TestIdealOtto:
    def test_reference_cycle(self, params):
        ideal = ideal_otto(params)
        assert ideal.W_tot == pytest.approx(-0.30107, abs=5e-4)
        assert ideal.W_tot == pytest.approx(ideal.W_comp + ideal.W_exp)
        assert ideal.eta_otto == pytest.approx(0.6848, abs=1e-4)
        assert ideal.eta_carnot == pytest.approx(5.0 / 6.0)
        assert ideal.eta_ca == pytest.approx(1.0 - math.sqrt(1.0 / 6.0))
        assert -ideal.W_tot / ideal.Q_hot == pytest.approx(ideal.eta_otto)
        assert ideal.Q_hot + ideal.Q_cold + ideal.W_tot == pytest.approx(0.0, abs=1e-12)
        assert ideal.extraction_ok

    def test_no_work_at_the_extraction_boundary(self, params):
        boundary = params.with_updates(T_h=params.T_c * params.Omega / params.omega)
        assert ideal_otto(boundary).W_tot == pytest.approx(0.0, abs=1e-12)


class TestFriction:
    @pytest.mark.parametrize("stage", [Stage.COMPRESSION, Stage.EXPANSION])
    def test_decomposition_sums_to_stroke_work(self, params, settings, cold_gibbs, stage):
        times, path = _bare_path(params, stage, cold_gibbs, settings)
        h_i, h_f = (h_cold(params), h_hot(params)) if stage is Stage.COMPRESSION else (h_hot(params), h_cold(params))
        work = stroke_work(h_i, h_f, cold_gibbs, DensityOperator.from_matrix(path[-1]))
        parts = friction_work(params, stage, times, path)
        assert parts.total == pytest.approx(work, abs=1e-8)
        assert work_integral(params, stage, times, path) == pytest.approx(work, abs=1e-8)

    def test_finite_time_drive_costs_extra_work(self, params, settings, cold_gibbs):
        _, path = _bare_path(params, Stage.COMPRESSION, cold_gibbs, settings)
        work = stroke_work(h_cold(params), h_hot(params), cold_gibbs, DensityOperator.from_matrix(path[-1]))
        assert work > ideal_otto(params).W_comp + 1e-4

    @pytest.mark.slow
    def test_quasistatic_drive_is_frictionless(self, params, settings, cold_gibbs):
        slow = params.with_updates(tau_comp=500.0)
        times, path = _bare_path(slow, Stage.COMPRESSION, cold_gibbs, settings)
        assert abs(friction_work(slow, Stage.COMPRESSION, times, path).coherent_part) <= 1e-4

    def test_joint_paths_are_reduced(self, params, settings, cold_gibbs):
        p = params.with_updates(gamma=0.0, tau_comp=1.0)
        rho_SL = initial_joint_state(cold_gibbs, p)
        times, path = evolve_path(lambda s: h_total(p, s, Stage.COMPRESSION), rho_SL, 0.0, 1.0, settings)
        parts = friction_work(p, Stage.COMPRESSION, times, path)
        assert parts.total == pytest.approx(work_integral(p, Stage.COMPRESSION, times, path))

    def test_rejects_inconsistent_paths(self, params, cold_gibbs):
        with pytest.raises(ValueError):
            friction_work(params, Stage.COMPRESSION, [0.0, 1.0], [cold_gibbs.matrix])
        with pytest.raises(ValueError):
            friction_work(params, Stage.COMPRESSION, [1.0, 0.0], [cold_gibbs.matrix] * 2)


class TestLubricationCosts:
    def test_decoupling_cost_of_a_product_state(self, params, cold_gibbs):
        final_S = thermal_state(h_hot(params), params.T_c * params.Omega / params.omega)
        final = final_S.tensor(DensityOperator.pure(KET_PLUS))
        cost = decoupling_cost(params, Stage.COMPRESSION, final, cold_gibbs)
        h_start = interaction_hamiltonian(params, 0.0, Stage.COMPRESSION)
        h_end = interaction_hamiltonian(params, params.tau_comp, Stage.COMPRESSION)
        expected = expectation(h_end, final.matrix) - expectation(
            h_start, initial_joint_state(cold_gibbs, params).matrix
        )
        assert cost == pytest.approx(expected)

    def test_decoupling_cost_vanishes_without_coupling(self, params, settings, cold_gibbs):
        p = params.with_updates(gamma=1e-7)
        result = StrongCouplingStrategy().run_stroke(p, Stage.COMPRESSION, cold_gibbs, StrokeContext(settings))
        assert abs(result.decoupling_cost) < 1e-5

    def test_decoupling_cost_falls_with_coupling_on_fast_strokes(self, coherence_params, settings):
        """
        Γ ∈ [25, 50] at τ_comp = 1: the cost is dominated by the perturbative tail.

        Adiabatic elimination leaves an O(ω_L/Γ) admixture of the other Zeno
        subspace in the joint state. Its contribution to ⟨ΓR ⊗ X⟩ at the end of
        the stroke is Γ·O((ω_L/Γ)²) = O(ω_L²/Γ), so the cost decreases in Γ.
        """
        p0 = coherence_params.with_updates(tau_comp=1.0, tau_exp=0.5)
        rho_S = thermal_state(h_cold(p0), p0.T_c)
        gammas = [25.0, 30.0, 35.0, 40.0, 45.0, 50.0]
        costs = [
            StrongCouplingStrategy()
            .run_stroke(p0.with_updates(gamma=g), Stage.COMPRESSION, rho_S, StrokeContext(settings))
            .decoupling_cost
            for g in gammas
        ]
        assert all(math.isfinite(c) for c in costs)
        assert linregress(gammas, costs).slope < 0
        assert costs[0] > costs[-1]

    def test_measurement_cost_of_an_eigenstate(self, params, cold_gibbs):
        rho = initial_joint_state(cold_gibbs, params)
        heat, reset = measurement_energy_cost(rho, h_total(params, 0.0, Stage.COMPRESSION), MeasurementBasis.X, 2.0)
        assert heat == pytest.approx(0.0, abs=1e-14)
        assert reset == pytest.approx(0.0, abs=1e-14)

    def test_measurement_cost_of_an_unbiased_lubricant(self, params, cold_gibbs):
        rho = cold_gibbs.tensor(DensityOperator.pure(KET_0))
        heat, reset = measurement_energy_cost(rho, h_total(params, 0.0, Stage.COMPRESSION), MeasurementBasis.X, 2.0)
        assert reset == pytest.approx(math.log(2.0) / 2.0)
        lubricant_energy = 0.5 * params.omega_L
        assert heat == pytest.approx(-lubricant_energy, abs=1e-12)

    def test_drive_cost_closed_form(self, params):
        p = params.with_updates(nu=1.0, tau_comp=9.0, tau_exp=4.5)
        total = drive_cost(p, Stage.COMPRESSION) + drive_cost(p, Stage.EXPANSION)
        assert total == pytest.approx(1080.0)
        assert drive_cost(p, Stage.COMPRESSION, "frobenius") == pytest.approx(0.5 * drive_cost(p, Stage.COMPRESSION))

    @pytest.mark.parametrize("norm", ["trace", "frobenius"])
    def test_drive_cost_quadrature_agrees(self, params, norm):
        p = params.with_updates(nu=0.01)
        assert drive_cost_quadrature(p, Stage.EXPANSION, norm) == pytest.approx(
            drive_cost(p, Stage.EXPANSION, norm), rel=1e-9
        )

    def test_net_power(self, params):
        assert net_power(params, 0.0123) == 0.0123
        costly = params.with_updates(nu=0.001)
        expected = 0.0123 - 4 * 20.0 * 0.001 * (params.tau_comp + params.tau_exp) / params.tau
        assert net_power(costly, 0.0123) == pytest.approx(expected)


class TestThermalization:
    def test_cold_bath_time_scale(self, params):
        rate, tau = thermalization_time(params, "cold")
        assert rate == pytest.approx(0.3283, abs=1e-4)
        assert tau == pytest.approx(3.046, abs=1e-3)

    def test_zero_rate(self, params):
        assert thermalization_time(params.with_updates(gamma_h=0.0), "hot") == (0.0, math.inf)

    def test_fit_recovers_synthetic_rate(self):
        t = np.linspace(0.0, 10.0, 50)
        fit = fit_decay_rate(t, 0.7 * np.exp(-0.42 * t))
        assert fit.rate == pytest.approx(0.42)
        assert fit.prefactor == pytest.approx(0.7)
        assert fit.r_squared == pytest.approx(1.0)


class TestDiagnostics:
    def test_coherence(self, params, cold_gibbs):
        assert coherence_l1(cold_gibbs, h_cold(params)) == pytest.approx(0.0, abs=1e-14)
        assert coherence_l1(DensityOperator.pure(KET_PLUS), Z) == pytest.approx(1.0)

    def test_coherence_needs_a_non_degenerate_reference(self, cold_gibbs):
        with pytest.raises(ValueError):
            coherence_l1(cold_gibbs, I2)

    def test_negativity(self, bell_state, cold_gibbs):
        assert log_negativity(bell_state) == pytest.approx(1.0)
        product = cold_gibbs.tensor(DensityOperator.pure(KET_PLUS))
        assert log_negativity(product) == pytest.approx(0.0, abs=1e-12)

    def test_ledger_rejects_unknown_columns(self):
        fields = {name: 0.0 for name, info in CycleLedger.model_fields.items() if info.is_required()}
        fields["extraction_ok"] = True
        CycleLedger(**fields)
        with pytest.raises(ValidationError):
            CycleLedger(**fields, bogus=1.0)
