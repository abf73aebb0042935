"""Tests de l'équilibre du gaz produit et du bilan d'énergie."""

import itertools
import math

import numpy as np
import pytest

from exergas.exceptions import ConvergenceError, InfeasibleCompositionError, InvalidInputError
from exergas.fuel_model import (
    BiomassFuel,
    FuelElementalMoles,
    ProximateAnalysis,
    UltimateAnalysis,
    elemental_moles,
    list_fuels,
)
from exergas.gasifier_core import (
    Closure,
    EquilibriumSolution,
    GasifierSpec,
    Reaction,
    ReactionInputs,
    build_reaction_inputs,
    equilibrium_constant,
    gasifier_energy_balance,
    minimize_gibbs,
    producer_gas_lhv,
    reaction_quotient,
    solid_residues,
    solve_outlet_temperature,
    solve_producer_gas,
    stoichiometric_air,
)


def _manual_solution(T=298.15, **moles):
    values = {"n_H2": 0.0, "n_CO": 0.0, "n_CO2": 0.0, "n_H2O": 0.0, "n_CH4": 0.0, "n_N2": 0.0}
    values.update(moles)
    return EquilibriumSolution(iterations=0, residual_norm=0.0, T=T, P=101.325, **values)


class TestStoichiometricAir:

    def test_pure_carbon(self):
        moles = elemental_moles(UltimateAnalysis(C=100.0, basis="dry"))
        assert stoichiometric_air(moles) == pytest.approx(0.08326, abs=1e-5)

    def test_nothing(self):
        assert stoichiometric_air(FuelElementalMoles(c=0.0, h=0.0, o=0.0, n=0.0)) == 0.0

    def test_oak(self, oak_dry_analysis):
        assert stoichiometric_air(elemental_moles(oak_dry_analysis)) == pytest.approx(0.04335, abs=1e-5)

    def test_air_nitrogen_ratio(self, oak, oak_spec):
        inputs = build_reaction_inputs(oak.elemental_moles(), oak_spec)
        assert inputs.air_N2 == pytest.approx(3.76 * inputs.air_O2, rel=1e-12)
        assert inputs.air_O2 == pytest.approx(0.35 * stoichiometric_air(oak.elemental_moles()), rel=1e-12)

    def test_inconsistent_nitrogen_rejected(self):
        moles = FuelElementalMoles(c=0.04, h=0.06, o=0.027, n=0.0)
        with pytest.raises(InvalidInputError):
            ReactionInputs(fuel_moles=moles, air_O2=0.01, air_N2=0.01, moisture=0.0)


class TestEquilibriumConstants:

    def test_water_gas_shift_ambient(self, db):
        assert equilibrium_constant(Reaction.WATER_GAS_SHIFT, 298.15, db) == pytest.approx(1.0e5, rel=0.3)

    def test_water_gas_shift_hot(self, db):
        assert equilibrium_constant(Reaction.WATER_GAS_SHIFT, 1000.0, db) == pytest.approx(1.4, abs=0.15)

    def test_methanation_ambient(self, db):
        K = equilibrium_constant(Reaction.METHANATION, 298.15, db)
        assert 3.5e8 < K < 1.4e9

    def test_exothermic_constants_fall_with_temperature(self, db):
        for reaction in Reaction:
            values = [equilibrium_constant(reaction, T, db) for T in np.linspace(600.0, 1600.0, 21)]
            assert all(v > 0 and math.isfinite(v) for v in values)
            assert all(b < a for a, b in zip(values, values[1:])), reaction.value


class TestProducerGas:

    def test_oak_reference_point(self, oak_inputs, oak_spec, db):
        sol = solve_producer_gas(oak_inputs, oak_spec, db)
        assert sol.converged
        assert sol.iterations <= 200
        assert sum(sol.mole_fractions().values()) == pytest.approx(1.0, abs=1e-12)
        assert all(n > 0 for n in sol.moles().values())
        assert sol.n_N2 == pytest.approx(oak_inputs.n_N2, rel=1e-15)

    def test_element_conservation_random(self, db):
        """C, H et O conservés à 1e-9 près sur 1000 points tirés au hasard."""
        rng = np.random.default_rng(2024)
        fuels = list_fuels()
        for _ in range(1000):
            fuel = fuels[int(rng.integers(len(fuels)))]
            spec = GasifierSpec(
                T_gasifier=float(rng.uniform(700.0, 1500.0)),
                equivalence_ratio=float(rng.uniform(0.1, 0.9)),
                moisture_w=float(rng.uniform(0.0, 0.3)),
            )
            inputs = build_reaction_inputs(fuel.elemental_moles(), spec)
            sol = solve_producer_gas(inputs, spec, db)
            out = sol.element_totals()
            C, H, O = inputs.element_totals()
            assert out["C"] == pytest.approx(C, rel=1e-9)
            assert out["H"] == pytest.approx(H, rel=1e-9)
            assert out["O"] == pytest.approx(O, rel=1e-9)
            assert out["N"] == pytest.approx(2.0 * inputs.n_N2, rel=1e-12)

    @pytest.mark.parametrize("closure", list(Closure))
    def test_equilibrium_relations_hold(self, oak_inputs, db, closure):
        spec = GasifierSpec(T_gasifier=1073.15, equivalence_ratio=0.35, moisture_w=0.1, closure=closure)
        sol = solve_producer_gas(oak_inputs, spec, db)
        reactions = ((Reaction.WATER_GAS_SHIFT, Reaction.CO_METHANATION) if closure == Closure.GAS_PHASE
                     else (Reaction.WATER_GAS_SHIFT, Reaction.METHANATION))
        for reaction in reactions:
            K = equilibrium_constant(reaction, spec.T_gasifier, db)
            assert reaction_quotient(sol, reaction) == pytest.approx(K, rel=1e-8), reaction.value

    def test_matches_gibbs_minimization(self, oak, db):
        """La fermeture par défaut retrouve le minimum de G du mélange gazeux."""
        for T, er, w in itertools.product((900.0, 1073.0, 1200.0), (0.25, 0.35, 0.45), (0.0, 0.1, 0.3)):
            spec = GasifierSpec(T_gasifier=T, equivalence_ratio=er, moisture_w=w)
            inputs = build_reaction_inputs(oak.elemental_moles(), spec)
            newton = solve_producer_gas(inputs, spec, db).mole_fractions()
            oracle = minimize_gibbs(inputs, spec, db)
            assert oracle.method == "gibbs-minimization"
            for name, z in oracle.mole_fractions().items():
                assert newton[name] == pytest.approx(z, abs=1e-3), f"{name} T={T} ER={er} w={w}"

    def test_methane_falls_with_temperature(self, oak_inputs, db):
        cold = solve_producer_gas(oak_inputs, GasifierSpec(T_gasifier=900.0, moisture_w=0.1), db)
        hot = solve_producer_gas(oak_inputs, GasifierSpec(T_gasifier=1100.0, moisture_w=0.1), db)
        assert cold.n_CH4 > hot.n_CH4

    def test_methane_rises_with_pressure(self, oak_inputs, db):
        low = solve_producer_gas(oak_inputs, GasifierSpec(T_gasifier=1000.0, moisture_w=0.1), db)
        high = solve_producer_gas(oak_inputs, GasifierSpec(T_gasifier=1000.0, P=500.0, moisture_w=0.1), db)
        assert high.n_CH4 > low.n_CH4

    def test_oxygen_excess_is_infeasible(self, db):
        inputs = ReactionInputs(
            fuel_moles=FuelElementalMoles(c=0.01, h=0.01, o=0.05, n=0.0),
            air_O2=0.0, air_N2=0.0, moisture=0.0,
        )
        with pytest.raises(InfeasibleCompositionError) as exc_info:
            solve_producer_gas(inputs, GasifierSpec(T_gasifier=1000.0), db)
        assert "CO" in exc_info.value.species

    def test_no_carbon_is_infeasible(self, db):
        inputs = ReactionInputs(
            fuel_moles=FuelElementalMoles(c=0.0, h=0.06, o=0.02, n=0.0),
            air_O2=0.0, air_N2=0.0, moisture=0.0,
        )
        with pytest.raises(InfeasibleCompositionError):
            solve_producer_gas(inputs, GasifierSpec(T_gasifier=1000.0), db)

    def test_iteration_budget(self, oak_inputs, oak_spec, db):
        with pytest.raises(ConvergenceError) as exc_info:
            solve_producer_gas(oak_inputs, oak_spec, db, max_iter=1)
        assert exc_info.value.iterations == 1
        assert exc_info.value.residual > 0
        assert "T_gasifier" in exc_info.value.inputs

    @pytest.mark.parametrize("kwargs", [
        {"T_gasifier": 500.0},
        {"T_gasifier": 1073.15, "equivalence_ratio": 1.0},
        {"T_gasifier": 1073.15, "equivalence_ratio": 0.0},
        {"T_gasifier": 1073.15, "heat_loss_fraction": 0.1},
        {"T_gasifier": 1073.15, "moisture_w": -0.1},
    ])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            GasifierSpec(**kwargs)


class TestEnergyBalance:

    def test_closure(self, oak, oak_inputs, oak_spec, db, env):
        sol = solve_producer_gas(oak_inputs, oak_spec, db)
        balance = gasifier_energy_balance(oak_inputs, oak_spec, sol, oak, env, db)
        assert balance.enthalpy_in + balance.heat_duty == pytest.approx(balance.enthalpy_out, rel=1e-12)
        assert balance.heat_duty < 0, "l'oxydation partielle libère de la chaleur"
        assert balance.heat_released == -balance.heat_duty
        assert balance.expected_heat_loss == pytest.approx(0.015 * balance.fuel_energy_input, rel=1e-12)

    def test_heat_scales_with_flow(self, oak, oak_inputs, oak_spec, db, env):
        sol = solve_producer_gas(oak_inputs, oak_spec, db)
        single = gasifier_energy_balance(oak_inputs, oak_spec, sol, oak, env, db)
        double = gasifier_energy_balance(oak_inputs, oak_spec, sol, oak.with_mass_flow(2.0), env, db)
        assert double.heat_duty == pytest.approx(2.0 * single.heat_duty, rel=1e-12)

    def test_empty_process(self, db, env):
        """Rien n'entre, rien ne sort : aucune chaleur échangée."""
        fuel = BiomassFuel(
            name="vide",
            ultimate=UltimateAnalysis(basis="dry"),
            proximate=ProximateAnalysis(VM=100.0, FC=0.0, M=0.0, A=0.0),
        )
        inputs = ReactionInputs(fuel_moles=fuel.elemental_moles(), air_O2=0.0, air_N2=0.0, moisture=0.0)
        spec = GasifierSpec(T_gasifier=1000.0)
        balance = gasifier_energy_balance(inputs, spec, _manual_solution(T=1000.0), fuel, env, db)
        assert balance.heat_duty == 0.0

    def test_unconverged_solution_rejected(self, oak, oak_inputs, oak_spec, db, env):
        sol = EquilibriumSolution(n_H2=0.01, n_CO=0.01, n_CO2=0.01, n_H2O=0.01, n_CH4=0.0, n_N2=0.0,
                                  iterations=3, residual_norm=1.0, T=1073.15, P=101.325, converged=False)
        with pytest.raises(InvalidInputError):
            gasifier_energy_balance(oak_inputs, oak_spec, sol, oak, env, db)


class TestGasHeatingValue:

    def test_inert_gas(self, db):
        assert producer_gas_lhv(_manual_solution(n_N2=1.0), db).per_kmol == 0.0

    def test_pure_hydrogen(self, db):
        assert producer_gas_lhv(_manual_solution(n_H2=1.0), db).per_kmol == pytest.approx(241.82, rel=1e-9)

    def test_equimolar_syngas(self, db):
        lhv = producer_gas_lhv(_manual_solution(n_H2=0.5, n_CO=0.5), db)
        assert lhv.per_kmol == pytest.approx(262.4, abs=0.5)
        assert lhv.per_kg_fuel == pytest.approx(262.405, abs=1e-9)

    def test_oak_gas(self, oak_inputs, oak_spec, db):
        """Gaz pauvre à l'air : quelques MJ/m³, soit 80 à 200 MJ/kmol."""
        lhv = producer_gas_lhv(solve_producer_gas(oak_inputs, oak_spec, db), db)
        assert 80.0 < lhv.per_kmol < 200.0


class TestResiduesAndTemperature:

    def test_solids_carry_ash_and_sulfur(self, oak):
        solids = solid_residues(oak)
        moles = oak.elemental_moles()
        total = solids["fly_ash"] + solids["bottom_ash"]
        assert total == pytest.approx(moles.ash_frac + moles.s * 32.06, rel=1e-12)
        assert solids["fly_ash"] == pytest.approx(4.0 * solids["bottom_ash"], rel=1e-12)

    def test_outlet_temperature_balances_losses(self, oak, db, env):
        spec = GasifierSpec(T_gasifier=1073.15, equivalence_ratio=0.35, moisture_w=oak.moisture_w)
        inputs = build_reaction_inputs(oak.elemental_moles(), spec)
        T, sol, balance = solve_outlet_temperature(inputs, spec, oak, env, db)
        assert 1073.15 < T < 1250.0
        assert sol.T == pytest.approx(T, abs=1e-9)
        assert balance.heat_duty == pytest.approx(-balance.expected_heat_loss, abs=1e-3)

    def test_wetter_fuel_runs_colder(self, oak, db, env):
        temperatures = []
        for w in (0.0, 0.2):
            spec = GasifierSpec(T_gasifier=1073.15, equivalence_ratio=0.35, moisture_w=w)
            inputs = build_reaction_inputs(oak.elemental_moles(), spec)
            temperatures.append(solve_outlet_temperature(inputs, spec, oak, env, db)[0])
        assert temperatures[1] < temperatures[0]
