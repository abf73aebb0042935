"""
Pipeline complet et balayages paramétriques.

run_analysis enchaîne combustible -> teneurs élémentaires -> équilibre -> bilan
d'énergie -> bilan d'exergie -> rendements. run_sweep répète l'analyse sur une
grille 1-D (température ambiante, température du gazéifieur, rapport
d'équivalence, humidité ou pression) et résume les tendances. Les résultats
sont écrits en CSV avec pandas.
"""

import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from .exceptions import (
    ConvergenceError,
    ExergasError,
    InfeasibleCompositionError,
    InvalidInputError,
    ModelInconsistencyError,
    SweepError,
)
from .exergy_engine import (
    BalanceReport,
    FlowTerm,
    HeatTransfer,
    StackRecovery,
    air_stream,
    chemical_exergy_mixture,
    energy_efficiency,
    exergy_efficiency,
    flow_term,
    fuel_flow_term,
    gasifier_exergy_balance,
    product_stream,
    stack_heat_recovery,
    stream_exergy,
)
from .fuel_model import BiomassFuel, FuelExergy, fuel_chemical_exergy, load_fuel
from .gasifier_core import (
    Closure,
    EnergyBalance,
    EquilibriumSolution,
    GasHeatingValue,
    GasifierSpec,
    build_reaction_inputs,
    gasifier_energy_balance,
    producer_gas_lhv,
    solid_residues,
    solve_producer_gas,
)
from .settings import (
    P0_DEFAULT,
    T0_DEFAULT,
    T_STACK_DEFAULT,
    celsius_to_kelvin,
    get_settings,
)
from .thermo_props import ReferenceEnvironment, SpeciesDatabase, default_database

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "param_value", "T0_K", "Tgas_K", "ER", "w",
    "z_H2", "z_CO", "z_CO2", "z_H2O", "z_CH4", "z_N2",
    "gas_LHV_MJ_per_kmol", "Ex_in_kW", "Ex_out_kW", "Ex_D_kW", "S_gen_kW_per_K",
    "eta", "psi", "status",
]

FRACTION_COLUMNS = {
    "z_H2": "H2", "z_CO": "CO", "z_CO2": "CO2", "z_H2O": "H2O(g)", "z_CH4": "CH4", "z_N2": "N2",
}

FIXED_KEYS = {
    "T0_C", "P0_kPa", "T_gasifier_C", "P_kPa", "equivalence_ratio",
    "heat_loss_fraction", "moisture_w", "T_stack_C", "mass_flow",
}

DEFAULT_T_GASIFIER_C = 800.0

STATUS_CONVERGED = "converged"
STATUS_CONVERGENCE_FAILURE = "convergence-failure"
STATUS_INFEASIBLE = "infeasible"
STATUS_INCONSISTENT = "inconsistent"
STATUS_INVALID = "invalid-input"


class SweepParameter(str, Enum):
    AMBIENT_T = "ambient_T"
    GASIFIER_T = "gasifier_T"
    EQUIVALENCE_RATIO = "equivalence_ratio"
    MOISTURE = "moisture"
    GASIFIER_P = "gasifier_P"


PARAMETER_UNITS = {
    SweepParameter.AMBIENT_T: "°C",
    SweepParameter.GASIFIER_T: "°C",
    SweepParameter.EQUIVALENCE_RATIO: "-",
    SweepParameter.MOISTURE: "kg/kg sec",
    SweepParameter.GASIFIER_P: "kPa",
}


class SweepConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    fuel: str = Field(description="Nom du combustible intégré ou fichier JSON", default="oak_wood")
    parameter: SweepParameter
    lo: float
    hi: float
    count: Optional[int] = Field(description="Nombre de points", default=None, ge=1)
    step: Optional[float] = Field(description="Pas de la grille", default=None, gt=0.0)
    fixed: Dict[str, float] = Field(description="Valeurs fixées des autres paramètres", default_factory=dict)
    output: Optional[Path] = None
    cold_gas_only: bool = False
    workers: int = Field(default=1, ge=1)
    closure: Closure = Closure.GAS_PHASE
    exergy_basis: Optional[Literal["consistent", "tabulated"]] = Field(
        description="Base des exergies chimiques, EXERGAS_EXERGY_BASIS si absente", default=None)
    name: Optional[str] = None

    @model_validator(mode="after")
    def _check_grid(self) -> "SweepConfig":
        if self.count is None and self.step is None:
            raise ValueError("count ou step requis")
        if self.count is not None and self.step is not None:
            raise ValueError("count et step sont exclusifs")
        if self.count == 1:
            if self.lo != self.hi:
                raise ValueError("Une grille d'un point exige lo == hi")
        elif not self.lo < self.hi:
            raise ValueError(f"lo ({self.lo}) doit être inférieur à hi ({self.hi})")
        unknown = set(self.fixed) - FIXED_KEYS
        if unknown:
            raise ValueError(f"Paramètres fixés inconnus: {sorted(unknown)}")
        self.grid()
        self.point(self.lo, default_moisture=0.0)
        return self

    @property
    def n_points(self) -> int:
        if self.count is not None:
            return self.count
        n = int(round((self.hi - self.lo) / self.step)) + 1
        if abs(self.lo + (n - 1) * self.step - self.hi) > 1e-9 * max(1.0, abs(self.hi - self.lo)):
            raise ValueError(f"Le pas {self.step} ne divise pas l'intervalle [{self.lo}, {self.hi}]")
        return n

    def grid(self) -> List[float]:
        n = self.n_points
        if n < 2:
            return [self.lo]
        return [self.lo + i * (self.hi - self.lo) / (n - 1) for i in range(n)]

    def point(self, value: float, default_moisture: float) -> Tuple[GasifierSpec, ReferenceEnvironment, float]:
        """Spécification, environnement et température de cheminée (K) d'un point de grille.

        Les paramètres ni balayés ni fixés prennent les valeurs des réglages EXERGAS_*.
        """
        settings = get_settings()
        fixed = dict(self.fixed)
        if self.parameter == SweepParameter.AMBIENT_T:
            fixed["T0_C"] = value
        elif self.parameter == SweepParameter.GASIFIER_T:
            fixed["T_gasifier_C"] = value
        elif self.parameter == SweepParameter.EQUIVALENCE_RATIO:
            fixed["equivalence_ratio"] = value
        elif self.parameter == SweepParameter.MOISTURE:
            fixed["moisture_w"] = value
        else:
            fixed["P_kPa"] = value

        env = ReferenceEnvironment(
            T0=celsius_to_kelvin(fixed["T0_C"]) if "T0_C" in fixed else T0_DEFAULT,
            P0=fixed.get("P0_kPa", P0_DEFAULT),
            exergy_basis=self.exergy_basis or settings.exergy_basis,
        )
        spec = GasifierSpec(
            T_gasifier=celsius_to_kelvin(fixed.get("T_gasifier_C", DEFAULT_T_GASIFIER_C)),
            P=fixed.get("P_kPa", env.P0),
            equivalence_ratio=fixed.get("equivalence_ratio", settings.default_equivalence_ratio),
            heat_loss_fraction=fixed.get("heat_loss_fraction", settings.heat_loss_fraction),
            moisture_w=fixed.get("moisture_w", default_moisture),
            closure=self.closure,
        )
        T_stack = celsius_to_kelvin(fixed["T_stack_C"]) if "T_stack_C" in fixed else settings.t_stack_k
        return spec, env, T_stack


PRESETS: Dict[str, SweepConfig] = {
    "fig2": SweepConfig(
        name="fig2",
        fuel="oak_wood",
        parameter=SweepParameter.AMBIENT_T,
        lo=10.0,
        hi=30.0,
        count=21,
        fixed={"T_gasifier_C": DEFAULT_T_GASIFIER_C},
    ),
    "fig3": SweepConfig(
        name="fig3",
        fuel="oak_wood",
        parameter=SweepParameter.GASIFIER_T,
        lo=625.0,
        hi=850.0,
        count=21,
    ),
}

# Sens attendus pour chaque préréglage (Ex_D, psi)
CLAIMED_TRENDS = {
    "fig2": ("decreasing", "increasing"),
    "fig3": ("decreasing", "increasing"),
}


@dataclass(frozen=True)
class RunResult:
    fuel_name: str
    spec: GasifierSpec
    env: ReferenceEnvironment
    solution: EquilibriumSolution
    energy: EnergyBalance
    balance: BalanceReport
    fuel_exergy: FuelExergy
    gas_lhv: GasHeatingValue
    stack: StackRecovery
    eta: float
    cold_gas_efficiency: float
    psi: float
    psi_useful: float
    warnings: Tuple[str, ...] = ()
    status: str = STATUS_CONVERGED

    def mole_fractions(self) -> Dict[str, float]:
        return self.solution.mole_fractions()

    def to_record(self, param_value: float = math.nan) -> Dict[str, Any]:
        fractions = self.mole_fractions()
        record = {
            "param_value": param_value,
            "T0_K": self.env.T0,
            "Tgas_K": self.spec.T_gasifier,
            "ER": self.spec.equivalence_ratio,
            "w": self.spec.moisture_w,
        }
        for column, species in FRACTION_COLUMNS.items():
            record[column] = fractions[species]
        record.update({
            "gas_LHV_MJ_per_kmol": self.gas_lhv.per_kmol,
            "Ex_in_kW": self.balance.exergy_in,
            "Ex_out_kW": self.balance.exergy_out,
            "Ex_D_kW": self.balance.destruction,
            "S_gen_kW_per_K": self.balance.entropy_generation,
            "eta": self.eta,
            "psi": self.psi,
            "status": self.status,
        })
        return record

    def to_dict(self) -> Dict[str, Any]:
        """Résumé sérialisable en JSON."""
        return {
            "fuel": self.fuel_name,
            "T_gasifier_K": self.spec.T_gasifier,
            "P_kPa": self.spec.P,
            "equivalence_ratio": self.spec.equivalence_ratio,
            "moisture_w": self.spec.moisture_w,
            "closure": self.spec.closure.value,
            "T0_K": self.env.T0,
            "mole_fractions": self.mole_fractions(),
            "iterations": self.solution.iterations,
            "residual_norm": self.solution.residual_norm,
            "gas_LHV_MJ_per_kmol": self.gas_lhv.per_kmol,
            "gas_LHV_MJ_per_kg_fuel": self.gas_lhv.per_kg_fuel,
            "heat_duty_kW": self.energy.heat_duty,
            "expected_heat_loss_kW": self.energy.expected_heat_loss,
            "fuel_exergy_MJ_per_kg": self.fuel_exergy.specific,
            "beta": self.fuel_exergy.beta,
            "exergy_to_LHV": self.fuel_exergy.ratio_to_lhv,
            "exergy_to_HHV": self.fuel_exergy.ratio_to_hhv,
            "stack_recovered_kW": self.stack.recovered_heat,
            **self.balance.to_record(),
            "eta": self.eta,
            "cold_gas_efficiency": self.cold_gas_efficiency,
            "psi": self.psi,
            "psi_useful": self.psi_useful,
            "warnings": list(self.warnings),
            "status": self.status,
        }


@dataclass(frozen=True)
class SweepPoint:
    index: int
    param_value: float
    result: Optional[RunResult]
    status: str
    error: Optional[str] = None


@dataclass(frozen=True)
class TrendSummary:
    destruction: str
    efficiency: str
    notes: Tuple[str, ...] = ()


@dataclass
class SweepOutcome:
    config: SweepConfig
    points: List[SweepPoint]
    trend: TrendSummary

    @property
    def results(self) -> List[RunResult]:
        return [p.result for p in self.points if p.result is not None]

    @property
    def failed(self) -> List[SweepPoint]:
        return [p for p in self.points if p.result is None]


def _run_pipeline(fuel: BiomassFuel, spec: GasifierSpec, env: ReferenceEnvironment,
                  db: SpeciesDatabase, cold_gas_only: bool, T_stack: float) -> Dict[str, Any]:
    moles = fuel.elemental_moles()
    inputs = build_reaction_inputs(moles, spec)
    try:
        solution = solve_producer_gas(inputs, spec, db)
    except ConvergenceError as e:
        raise e.with_inputs({
            "fuel": fuel.name,
            "T_gasifier": spec.T_gasifier,
            "P": spec.P,
            "ER": spec.equivalence_ratio,
            "moisture_w": spec.moisture_w,
            "T0": env.T0,
        }) from e

    energy = gasifier_energy_balance(inputs, spec, solution, fuel, env, db)
    gas_lhv = producer_gas_lhv(solution, db)
    flow = fuel.mass_flow

    gas = product_stream(solution, flow)
    solids = solid_residues(fuel)
    products = [flow_term(gas, "gaz produit", env, db)] + [
        FlowTerm(label=label, exergy=0.0, enthalpy=0.0, entropy=0.0, mass=flow * mass)
        for label, mass in solids.items()
    ]
    balance = gasifier_exergy_balance(
        fuel_flow_term(fuel, spec.moisture_w, env, db),
        flow_term(air_stream(inputs, flow, env), "air", env, db),
        HeatTransfer(Q=energy.heat_duty, T_boundary=spec.heat_boundary_T),
        products,
        env,
    )

    stack = stack_heat_recovery(gas, T_stack, env, db)
    gas_energy = flow * gas_lhv.per_kg_fuel * 1000.0
    useful_energy = gas_energy if cold_gas_only else gas_energy + stack.recovered_heat
    if cold_gas_only:
        useful_exergy = chemical_exergy_mixture(gas, env, db)
    else:
        useful_exergy = stream_exergy(stack.stack_stream, env, db).total + stack.recovered_exergy

    return {
        "solution": solution,
        "energy": energy,
        "balance": balance,
        "fuel_exergy": fuel_chemical_exergy(fuel, env, db, spec.moisture_w),
        "gas_lhv": gas_lhv,
        "stack": stack,
        "eta": energy_efficiency(useful_energy, energy.fuel_energy_input),
        "cold_gas_efficiency": energy_efficiency(gas_energy, energy.fuel_energy_input),
        "psi": exergy_efficiency(balance),
        "psi_useful": useful_exergy / balance.exergy_in,
    }


def run_analysis(fuel: BiomassFuel, spec: GasifierSpec, env: Optional[ReferenceEnvironment] = None,
                 db: Optional[SpeciesDatabase] = None, cold_gas_only: bool = False,
                 T_stack: float = T_STACK_DEFAULT) -> RunResult:
    env = env or ReferenceEnvironment()
    db = db or default_database()

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        parts = _run_pipeline(fuel, spec, env, db, cold_gas_only, T_stack)

    messages = tuple(dict.fromkeys(str(w.message) for w in caught))
    for message in messages:
        logger.warning(message)

    result = RunResult(fuel_name=fuel.name, spec=spec, env=env, warnings=messages, **parts)
    logger.debug(
        f"{fuel.name} T={spec.T_gasifier:.2f} K ER={spec.equivalence_ratio:.3f} "
        f"Ex_D={result.balance.destruction:.3f} kW psi={result.psi:.5f}"
    )
    return result


def classify_trend(values: Sequence[float]) -> str:
    diffs = [b - a for a, b in zip(values, values[1:])]
    if not diffs or all(d == 0 for d in diffs):
        return "constant"
    if all(d > 0 for d in diffs):
        return "increasing"
    if all(d < 0 for d in diffs):
        return "decreasing"
    return "non-monotonic"


def summarize_trend(config: SweepConfig, points: Sequence[SweepPoint]) -> TrendSummary:
    results = [p.result for p in points if p.result is not None]
    destruction = classify_trend([r.balance.destruction for r in results])
    efficiency = classify_trend([r.psi for r in results])

    notes = [f"Ex_D {destruction}, psi {efficiency} sur {len(results)} points convergés"]
    failed = [p for p in points if p.result is None]
    if failed:
        notes.append(f"{len(failed)} point(s) en échec: "
                     + ", ".join(f"{p.param_value:g} ({p.status})" for p in failed))
    claimed = CLAIMED_TRENDS.get(config.name or "")
    if claimed:
        expected_d, expected_psi = claimed
        agree = destruction == expected_d and efficiency == expected_psi
        notes.append(
            f"Sens annoncé: Ex_D {expected_d}, psi {expected_psi} ; observé: Ex_D {destruction}, "
            f"psi {efficiency} ({'concordant' if agree else 'divergent'})"
        )
        if config.parameter == SweepParameter.AMBIENT_T and not agree:
            notes.append("Avec Ex_D = T0·S_gen, une hausse de T0 à S_gen fixé augmente la destruction")
    return TrendSummary(destruction=destruction, efficiency=efficiency, notes=tuple(notes))


def _evaluate_point(task: Tuple[int, float, SweepConfig, BiomassFuel, SpeciesDatabase]) -> SweepPoint:
    index, value, config, fuel, db = task
    try:
        if "mass_flow" in config.fixed:
            fuel = fuel.with_mass_flow(config.fixed["mass_flow"])
        spec, env, T_stack = config.point(value, default_moisture=fuel.moisture_w)
        result = run_analysis(fuel, spec, env, db, config.cold_gas_only, T_stack)
        return SweepPoint(index, value, result, STATUS_CONVERGED)
    except ConvergenceError as e:
        status = STATUS_CONVERGENCE_FAILURE
        error = str(e)
    except InfeasibleCompositionError as e:
        status = STATUS_INFEASIBLE
        error = str(e)
    except ModelInconsistencyError as e:
        status = STATUS_INCONSISTENT
        error = str(e)
    except (ValueError, ExergasError) as e:
        status = STATUS_INVALID
        error = str(e)
    logger.warning(f"Point {index} ({value:g}) en échec: {error}")
    return SweepPoint(index, value, None, status, error)


def _iterate_points(tasks: List[Tuple], workers: int) -> Iterator[SweepPoint]:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            yield from executor.map(_evaluate_point, tasks)
    else:
        for task in tasks:
            yield _evaluate_point(task)


def run_sweep(cfg: SweepConfig, db: Optional[SpeciesDatabase] = None,
              fuels_path: Optional[Path] = None) -> SweepOutcome:
    db = db or default_database()
    fuel = load_fuel(cfg.fuel, fuels_path)
    grid = cfg.grid()
    tasks = [(i, value, cfg, fuel, db) for i, value in enumerate(grid)]
    logger.info(f"Balayage {cfg.parameter.value} sur {len(grid)} points ({fuel.name})")

    points: List[SweepPoint] = []
    progress_bar = tqdm(_iterate_points(tasks, cfg.workers), total=len(tasks), desc="🔄 Balayage",
                        unit="pt", ncols=100, disable=not os.isatty(0))
    for point in progress_bar:
        points.append(point)
        progress_bar.set_postfix({
            "✅": sum(1 for p in points if p.result is not None),
            "❌": sum(1 for p in points if p.result is None),
        })

    if not any(p.result is not None for p in points):
        raise SweepError(f"Tous les points du balayage ont échoué ({len(points)})")

    trend = summarize_trend(cfg, points)
    for note in trend.notes:
        logger.info(note)
    return SweepOutcome(config=cfg, points=points, trend=trend)


def points_to_frame(points: Sequence[SweepPoint]) -> pd.DataFrame:
    rows = []
    for point in points:
        if point.result is not None:
            rows.append(point.result.to_record(point.param_value))
        else:
            row = {column: math.nan for column in CSV_COLUMNS}
            row["param_value"] = point.param_value
            row["status"] = point.status
            rows.append(row)
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def emit_csv(results: Sequence[SweepPoint], path: Path) -> Path:
    if not results:
        raise InvalidInputError("Aucun résultat à écrire")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = points_to_frame(results)
    df.to_csv(path, index=False, float_format="%.15g", lineterminator="\n")
    logger.info(f"{len(df)} lignes écrites dans {path}")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path)


def write_summary(outcome: SweepOutcome, csv_path: Path) -> Path:
    """Écrit <stem>_summary.json à côté du CSV : tendances, notes, points en échec."""
    csv_path = Path(csv_path)
    summary_path = csv_path.with_name(f"{csv_path.stem}_summary.json")
    summary = {
        "preset": outcome.config.name,
        "fuel": outcome.config.fuel,
        "parameter": outcome.config.parameter.value,
        "unit": PARAMETER_UNITS[outcome.config.parameter],
        "points": len(outcome.points),
        "converged": len(outcome.results),
        "trend": {"Ex_D": outcome.trend.destruction, "psi": outcome.trend.efficiency},
        "notes": list(outcome.trend.notes),
        "failed": [
            {"index": p.index, "param_value": p.param_value, "status": p.status, "error": p.error}
            for p in outcome.failed
        ],
    }
    with open(summary_path, "w", encoding="utf-8") as f:
        json.dump(summary, f, ensure_ascii=False, indent=2)
    return summary_path


def load_sweep_config(path: Path) -> SweepConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Configuration non trouvée: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return SweepConfig(**data)
