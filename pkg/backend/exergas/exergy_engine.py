"""
Comptabilité exergétique des flux et bilans du gazéifieur.

Un flux matière porte une exergie physique (écart de T et P à l'état mort) et
une exergie chimique (écart de composition). Les bilans de volume de contrôle
combinent énergie, entropie et exergie ; la destruction d'exergie est recoupée
avec T0·S_gen.

Unités : débits molaires en kmol/s, puissances en kW, entropies en kW/K.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .exceptions import BalanceWarning, InvalidInputError, ModelInconsistencyError
from .fuel_model import BiomassFuel, formation_enthalpy, fuel_chemical_exergy
from .gasifier_core import M_H2O, EquilibriumSolution, ReactionInputs
from .settings import N2_PER_O2, T_STACK_DEFAULT
from .thermo_props import (
    ReferenceEnvironment,
    SpeciesDatabase,
    default_database,
    enthalpy_molar,
    entropy_molar,
    standard_entropy,
)

logger = logging.getLogger(__name__)

FRACTION_TOLERANCE = 1e-9
DESTRUCTION_TOLERANCE = 1e-9
GOUY_STODOLA_TOLERANCE = 1e-6


class StreamKind(str, Enum):
    GAS_MIXTURE = "gas-mixture"
    BIOMASS_FUEL = "biomass-fuel"
    WATER = "water"
    HEAT_CARRIER = "heat-carrier"


class Stream(BaseModel):
    model_config = ConfigDict(frozen=True)

    composition: Dict[str, float] = Field(description="Fractions molaires par espèce")
    T: float = Field(description="Température (K)", gt=0.0)
    P: float = Field(description="Pression (kPa)", gt=0.0)
    molar_flow: float = Field(description="Débit molaire (kmol/s)", ge=0.0)
    kind: StreamKind = StreamKind.GAS_MIXTURE

    @field_validator("composition")
    @classmethod
    def _check_fractions(cls, value: Dict[str, float]) -> Dict[str, float]:
        if any(z < 0 for z in value.values()):
            raise ValueError("Fraction molaire négative")
        total = sum(value.values())
        if abs(total - 1.0) > FRACTION_TOLERANCE:
            raise ValueError(f"Les fractions molaires somment à {total}, pas à 1")
        return value

    def at(self, T: float) -> "Stream":
        return self.model_copy(update={"T": T})


@dataclass(frozen=True)
class ExergyBreakdown:
    physical: float
    chemical: float

    @property
    def total(self) -> float:
        return self.physical + self.chemical


@dataclass(frozen=True)
class FlowTerm:
    """Un franchissement de frontière : exergie, enthalpie, entropie, masse."""

    label: str
    exergy: float  # kW
    enthalpy: float  # kW
    entropy: float  # kW/K
    mass: float  # kg/s


@dataclass(frozen=True)
class HeatTransfer:
    Q: float  # kW, positif vers le volume de contrôle
    T_boundary: float  # K


@dataclass(frozen=True)
class BalanceReport:
    exergy_in: float
    exergy_out: float
    destruction: float
    entropy_generation: float
    energy_in: float
    energy_out: float
    mass_in: float
    mass_out: float
    T0: float

    @property
    def gouy_stodola_gap(self) -> float:
        """Écart relatif entre destruction et T0·S_gen."""
        if self.destruction == 0:
            return abs(self.T0 * self.entropy_generation)
        return abs(self.destruction - self.T0 * self.entropy_generation) / abs(self.destruction)

    def to_record(self) -> Dict[str, float]:
        return {
            "Ex_in_kW": self.exergy_in,
            "Ex_out_kW": self.exergy_out,
            "Ex_D_kW": self.destruction,
            "S_gen_kW_per_K": self.entropy_generation,
            "E_in_kW": self.energy_in,
            "E_out_kW": self.energy_out,
            "m_in_kg_s": self.mass_in,
            "m_out_kg_s": self.mass_out,
        }


@dataclass(frozen=True)
class StackRecovery:
    recovered_heat: float  # kW
    stack_stream: Stream
    mean_temperature: float  # K
    recovered_exergy: float  # kW


def _require_material(s: Stream) -> None:
    if s.kind not in (StreamKind.GAS_MIXTURE, StreamKind.WATER):
        raise InvalidInputError(f"Flux de type {s.kind.value} non évaluable par espèces")


def _present(s: Stream) -> Dict[str, float]:
    return {name: z for name, z in s.composition.items() if z > 0}


def physical_exergy(s: Stream, env: Optional[ReferenceEnvironment] = None,
                    db: Optional[SpeciesDatabase] = None) -> float:
    env = env or ReferenceEnvironment()
    db = db or default_database()
    _require_material(s)
    specific = 0.0
    for name, z in _present(s).items():
        sp = db.get(name)
        dh = enthalpy_molar(sp, s.T) - enthalpy_molar(sp, env.T0)
        ds = standard_entropy(sp, s.T) - standard_entropy(sp, env.T0)
        if not sp.is_liquid:
            ds -= env.Ru * math.log(s.P / env.P0)
        specific += z * (dh - env.T0 * ds / 1000.0)
    return s.molar_flow * 1000.0 * specific


def specific_chemical_exergy(composition: Dict[str, float], env: Optional[ReferenceEnvironment] = None,
                             db: Optional[SpeciesDatabase] = None) -> float:
    """Σ z·(ex° + Ru·T0·ln z), kJ/mol de mélange."""
    env = env or ReferenceEnvironment()
    db = db or default_database()
    return sum(
        z * (db.standard_chemical_exergy(name, env) + env.Ru * env.T0 * math.log(z) / 1000.0)
        for name, z in composition.items() if z > 0
    )


def chemical_exergy_mixture(s: Stream, env: Optional[ReferenceEnvironment] = None,
                            db: Optional[SpeciesDatabase] = None) -> float:
    _require_material(s)
    return s.molar_flow * 1000.0 * specific_chemical_exergy(s.composition, env, db)


def stream_exergy(s: Stream, env: Optional[ReferenceEnvironment] = None,
                  db: Optional[SpeciesDatabase] = None) -> ExergyBreakdown:
    return ExergyBreakdown(physical=physical_exergy(s, env, db), chemical=chemical_exergy_mixture(s, env, db))


def stream_enthalpy(s: Stream, db: Optional[SpeciesDatabase] = None) -> float:
    db = db or default_database()
    _require_material(s)
    return s.molar_flow * 1000.0 * sum(z * enthalpy_molar(db.get(name), s.T)
                                       for name, z in _present(s).items())


def stream_entropy(s: Stream, env: Optional[ReferenceEnvironment] = None,
                   db: Optional[SpeciesDatabase] = None) -> float:
    env = env or ReferenceEnvironment()
    db = db or default_database()
    _require_material(s)
    specific = sum(z * entropy_molar(db.get(name), s.T, z * s.P, env) for name, z in _present(s).items())
    return s.molar_flow * specific


def stream_mass(s: Stream, db: Optional[SpeciesDatabase] = None) -> float:
    db = db or default_database()
    return s.molar_flow * sum(z * db.get(name).molar_mass for name, z in _present(s).items())


def flow_term(s: Stream, label: str, env: Optional[ReferenceEnvironment] = None,
              db: Optional[SpeciesDatabase] = None) -> FlowTerm:
    return FlowTerm(
        label=label,
        exergy=stream_exergy(s, env, db).total,
        enthalpy=stream_enthalpy(s, db),
        entropy=stream_entropy(s, env, db),
        mass=stream_mass(s, db),
    )


def air_stream(inputs: ReactionInputs, fuel_flow: float, env: Optional[ReferenceEnvironment] = None) -> Stream:
    """Air de gazéification à l'état mort, en proportion 1 O2 / 3.76 N2."""
    env = env or ReferenceEnvironment()
    total = 1.0 + N2_PER_O2
    return Stream(
        composition={"O2": 1.0 / total, "N2": N2_PER_O2 / total},
        T=env.T0,
        P=env.P0,
        molar_flow=fuel_flow * inputs.air_O2 * total,
    )


def product_stream(sol: EquilibriumSolution, fuel_flow: float) -> Stream:
    return Stream(
        composition=sol.mole_fractions(),
        T=sol.T,
        P=sol.P,
        molar_flow=fuel_flow * sol.total,
    )


def fuel_flow_term(fuel: BiomassFuel, moisture_w: float, env: Optional[ReferenceEnvironment] = None,
                   db: Optional[SpeciesDatabase] = None) -> FlowTerm:
    """
    Combustible humide entrant à T0.

    L'entropie est celle qu'impose l'exergie de Szargut :
    T0·S = H − Ex − Σ b·μ, avec μ les potentiels des éléments.
    """
    env = env or ReferenceEnvironment()
    db = db or default_database()
    flow = fuel.mass_flow
    moles = fuel.elemental_moles()
    water = moisture_w / M_H2O

    exergy = fuel_chemical_exergy(fuel, env, db, moisture_w).rate * 1000.0
    enthalpy = flow * (formation_enthalpy(fuel, db)
                       + 1000.0 * water * enthalpy_molar(db.get("H2O(l)"), env.T0))
    mu = db.element_potentials(env)
    bound = flow * 1000.0 * (moles.c * mu["C"] + (moles.h + 2.0 * water) * mu["H"]
                             + (moles.o + water) * mu["O"] + moles.n * mu["N"])
    return FlowTerm(
        label="combustible",
        exergy=exergy,
        enthalpy=enthalpy,
        entropy=(enthalpy - exergy - bound) / env.T0,
        mass=flow * (1.0 + moisture_w),
    )


def air_exergy_per_oxygen(air_molar_flow: float, env: Optional[ReferenceEnvironment] = None,
                     db: Optional[SpeciesDatabase] = None) -> float:
    """Exergie de l'air par kmol d'O2, avec les exergies standard tabulées."""
    env = env or ReferenceEnvironment()
    db = db or default_database()
    bracket = (db.get("O2").ex_ch0 + N2_PER_O2 * db.get("N2").ex_ch0
               + env.Ru * env.T0 / 1000.0 * (math.log(env.air_O2_frac) + math.log(env.air_N2_frac)))
    return air_molar_flow * 1000.0 * bracket


def heat_exergy(Q: float, T_boundary: float, env: Optional[ReferenceEnvironment] = None) -> float:
    env = env or ReferenceEnvironment()
    if T_boundary <= 0:
        raise InvalidInputError(f"Température de frontière non positive: {T_boundary}")
    return (1.0 - env.T0 / T_boundary) * Q


def gasifier_exergy_balance(fuel: FlowTerm, air: FlowTerm, heat: HeatTransfer,
                            products: Sequence[FlowTerm],
                            env: Optional[ReferenceEnvironment] = None) -> BalanceReport:
    env = env or ReferenceEnvironment()
    ex_q = heat_exergy(heat.Q, heat.T_boundary, env)

    # Ex_Q signé, toujours côté entrée
    exergy_in = fuel.exergy + air.exergy + ex_q
    exergy_out = sum(p.exergy for p in products)
    destruction = exergy_in - exergy_out
    entropy_generation = (sum(p.entropy for p in products) - fuel.entropy - air.entropy
                          - heat.Q / heat.T_boundary)

    report = BalanceReport(
        exergy_in=exergy_in,
        exergy_out=exergy_out,
        destruction=destruction,
        entropy_generation=entropy_generation,
        energy_in=fuel.enthalpy + air.enthalpy + heat.Q,
        energy_out=sum(p.enthalpy for p in products),
        mass_in=fuel.mass + air.mass,
        mass_out=sum(p.mass for p in products),
        T0=env.T0,
    )

    if destruction < -DESTRUCTION_TOLERANCE * max(1.0, abs(exergy_in)):
        raise ModelInconsistencyError(f"Destruction d'exergie négative: {destruction:.6g} kW")
    if abs(destruction) > DESTRUCTION_TOLERANCE * max(1.0, abs(exergy_in)) \
            and report.gouy_stodola_gap > GOUY_STODOLA_TOLERANCE:
        warnings.warn(
            f"Écart Gouy-Stodola {report.gouy_stodola_gap:.2e} "
            f"(Ex_D={destruction:.4f} kW, T0·S_gen={env.T0 * entropy_generation:.4f} kW)",
            BalanceWarning,
            stacklevel=2,
        )
    return report


def energy_efficiency(useful_out: float, total_in: float) -> float:
    if total_in <= 0:
        raise InvalidInputError("Énergie entrante nulle ou négative")
    return useful_out / total_in


def exergy_efficiency(report: BalanceReport) -> float:
    if report.exergy_in <= 0:
        raise InvalidInputError("Exergie entrante nulle ou négative")
    return report.exergy_out / report.exergy_in


def stack_heat_recovery(gas: Stream, T_stack: float = T_STACK_DEFAULT,
                        env: Optional[ReferenceEnvironment] = None,
                        db: Optional[SpeciesDatabase] = None) -> StackRecovery:
    """Chaleur cédée à l'eau d'alimentation en refroidissant le gaz jusqu'à la cheminée."""
    env = env or ReferenceEnvironment()
    db = db or default_database()
    if gas.T < T_stack - 1e-9:
        raise InvalidInputError(f"Gaz à {gas.T:.2f} K plus froid que la cheminée ({T_stack:.2f} K)")

    stack = gas.at(T_stack)
    recovered = stream_enthalpy(gas, db) - stream_enthalpy(stack, db)
    entropy_drop = stream_entropy(gas, env, db) - stream_entropy(stack, env, db)
    if recovered > 0 and entropy_drop > 0:
        mean_T = recovered / entropy_drop
        recovered_exergy = heat_exergy(recovered, mean_T, env)
    else:
        mean_T = T_stack
        recovered_exergy = 0.0
    return StackRecovery(
        recovered_heat=recovered,
        stack_stream=stack,
        mean_temperature=mean_T,
        recovered_exergy=recovered_exergy,
    )
