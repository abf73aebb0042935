"""
Composition du gaz de gazéification par équilibre chimique et bilan d'énergie du gazéifieur.

Réaction globale pour 1 kg de biomasse sèche :

    CcHhOoNn + w H2O + m (O2 + 3.76 N2) -> x1 H2 + x2 CO + x3 CO2 + x4 H2O + x5 CH4 + x6 N2

Les cinq inconnues (x1..x5) sont fixées par les bilans C, H, O et deux équilibres.
Fermeture par défaut ("gas-phase") : conversion du gaz à l'eau et méthanation du CO,
ce qui correspond au minimum de l'enthalpie libre du mélange gazeux. La variante
"graphite" remplace la seconde relation par C(gr) + 2 H2 = CH4 à activité unitaire.
Le soufre, le chlore et les cendres ne réagissent pas.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq, minimize

from .exceptions import (
    ConvergenceError,
    InfeasibleCompositionError,
    InvalidInputError,
)
from .fuel_model import BiomassFuel, FuelElementalMoles, formation_enthalpy
from .settings import (
    DEFAULT_EQUIVALENCE_RATIO,
    FLY_ASH_SHARE,
    HEAT_LOSS_FRACTION,
    N2_PER_O2,
    P0_DEFAULT,
)
from .thermo_props import (
    ATOMIC_MASS,
    P_REF,
    RU,
    ReferenceEnvironment,
    SpeciesDatabase,
    default_database,
    enthalpy_molar,
    gibbs_molar,
)

logger = logging.getLogger(__name__)

PRODUCT_SPECIES = ("H2", "CO", "CO2", "H2O(g)", "CH4", "N2")
UNKNOWN_SPECIES = PRODUCT_SPECIES[:5]

# Lignes C, H, O ; colonnes dans l'ordre de UNKNOWN_SPECIES
ELEMENT_MATRIX = np.array([
    [0.0, 1.0, 1.0, 0.0, 1.0],
    [2.0, 0.0, 0.0, 2.0, 4.0],
    [0.0, 1.0, 2.0, 1.0, 0.0],
])

M_H2O = 2 * ATOMIC_MASS["H"] + ATOMIC_MASS["O"]

TOLERANCE = 1e-10
MAX_ITERATIONS = 200
MAX_LOG_STEP = 2.0
MIN_DAMPING = 1e-4
LOG_FLOOR = math.log(1e-30)

T_GASIFIER_MIN = 600.0
T_GASIFIER_MAX = 1600.0


class Reaction(str, Enum):
    WATER_GAS_SHIFT = "water-gas-shift"
    METHANATION = "methanation"
    CO_METHANATION = "co-methanation"


REACTION_STOICHIOMETRY: Dict[Reaction, Dict[str, int]] = {
    Reaction.WATER_GAS_SHIFT: {"CO": -1, "H2O(g)": -1, "CO2": 1, "H2": 1},
    Reaction.METHANATION: {"C(gr)": -1, "H2": -2, "CH4": 1},
    Reaction.CO_METHANATION: {"CO": -1, "H2": -3, "CH4": 1, "H2O(g)": 1},
}

CONDENSED_SPECIES = {"C(gr)"}


class Closure(str, Enum):
    GAS_PHASE = "gas-phase"
    GRAPHITE = "graphite"


CLOSURE_REACTIONS = {
    Closure.GAS_PHASE: (Reaction.WATER_GAS_SHIFT, Reaction.CO_METHANATION),
    Closure.GRAPHITE: (Reaction.WATER_GAS_SHIFT, Reaction.METHANATION),
}


class GasifierSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    T_gasifier: float = Field(description="Température du gazéifieur (K)",
                              ge=T_GASIFIER_MIN, le=T_GASIFIER_MAX)
    P: float = Field(description="Pression du gazéifieur (kPa)", default=P0_DEFAULT, gt=0.0)
    equivalence_ratio: float = Field(description="Air réel / air stœchiométrique",
                                     default=DEFAULT_EQUIVALENCE_RATIO, gt=0.0, lt=1.0)
    heat_loss_fraction: float = Field(description="Pertes / énergie du combustible",
                                      default=HEAT_LOSS_FRACTION, ge=0.0, le=0.05)
    moisture_w: float = Field(description="kg d'eau par kg de combustible sec", default=0.0, ge=0.0)
    closure: Closure = Field(description="Relations d'équilibre", default=Closure.GAS_PHASE)
    T_boundary: Optional[float] = Field(
        description="Température de la frontière d'échange thermique (K), T_gasifier par défaut",
        default=None, gt=0.0)

    @property
    def heat_boundary_T(self) -> float:
        return self.T_boundary if self.T_boundary is not None else self.T_gasifier


@dataclass(frozen=True)
class ReactionInputs:
    fuel_moles: FuelElementalMoles
    air_O2: float  # kmol/kg sec
    air_N2: float
    moisture: float  # kmol H2O/kg sec

    def __post_init__(self):
        for name in ("air_O2", "air_N2", "moisture"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} négatif: {getattr(self, name)}")
        if abs(self.air_N2 - N2_PER_O2 * self.air_O2) > 1e-9 * max(1.0, self.air_N2):
            raise InvalidInputError(f"air_N2 doit valoir {N2_PER_O2} × air_O2")

    @property
    def n_N2(self) -> float:
        return self.fuel_moles.n / 2.0 + self.air_N2

    def element_totals(self) -> np.ndarray:
        """Atomes C, H, O entrants (kmol/kg sec)."""
        m = self.fuel_moles
        return np.array([
            m.c,
            m.h + 2.0 * self.moisture,
            m.o + self.moisture + 2.0 * self.air_O2,
        ])


@dataclass(frozen=True)
class EquilibriumSolution:
    n_H2: float
    n_CO: float
    n_CO2: float
    n_H2O: float
    n_CH4: float
    n_N2: float
    iterations: int
    residual_norm: float
    T: float
    P: float
    converged: bool = True
    method: str = "newton"

    def moles(self) -> Dict[str, float]:
        return dict(zip(PRODUCT_SPECIES, (self.n_H2, self.n_CO, self.n_CO2,
                                          self.n_H2O, self.n_CH4, self.n_N2)))

    @property
    def total(self) -> float:
        return sum(self.moles().values())

    def mole_fractions(self) -> Dict[str, float]:
        total = self.total
        if total <= 0:
            raise InvalidInputError("Gaz produit vide")
        return {name: n / total for name, n in self.moles().items()}

    def element_totals(self) -> Dict[str, float]:
        return {
            "C": self.n_CO + self.n_CO2 + self.n_CH4,
            "H": 2 * self.n_H2 + 2 * self.n_H2O + 4 * self.n_CH4,
            "O": self.n_CO + 2 * self.n_CO2 + self.n_H2O,
            "N": 2 * self.n_N2,
        }


@dataclass(frozen=True)
class EnergyBalance:
    enthalpy_in: float  # kW
    enthalpy_out: float
    heat_duty: float  # kW, positif = chaleur reçue par le gazéifieur
    fuel_energy_input: float  # kW, base PCI
    expected_heat_loss: float
    heat_loss_residual: float

    @property
    def heat_released(self) -> float:
        return -self.heat_duty


@dataclass(frozen=True)
class GasHeatingValue:
    per_kmol: float  # MJ/kmol de gaz
    per_kg_fuel: float  # MJ/kg de combustible sec


def stoichiometric_air(m: FuelElementalMoles) -> float:
    """O2 stœchiométrique (kmol/kg sec) ; le soufre n'est pas compté."""
    return max(0.0, m.c + m.h / 4.0 - m.o / 2.0)


def build_reaction_inputs(moles: FuelElementalMoles, spec: GasifierSpec) -> ReactionInputs:
    air_O2 = spec.equivalence_ratio * stoichiometric_air(moles)
    return ReactionInputs(
        fuel_moles=moles,
        air_O2=air_O2,
        air_N2=N2_PER_O2 * air_O2,
        moisture=spec.moisture_w / M_H2O,
    )


def _reaction_delta_g(reaction: Reaction, T: float, db: SpeciesDatabase) -> float:
    return sum(nu * gibbs_molar(db.get(name), T)
               for name, nu in REACTION_STOICHIOMETRY[reaction].items())


def ln_equilibrium_constant(reaction: Reaction, T: float, db: Optional[SpeciesDatabase] = None) -> float:
    db = db or default_database()
    return -_reaction_delta_g(Reaction(reaction), T, db) * 1000.0 / (RU * T)


def equilibrium_constant(reaction: Reaction, T: float, db: Optional[SpeciesDatabase] = None) -> float:
    return math.exp(ln_equilibrium_constant(reaction, T, db))


def reaction_quotient(sol: EquilibriumSolution, reaction: Reaction) -> float:
    """Quotient en fractions molaires et pressions réduites ; égal à K à l'équilibre."""
    fractions = sol.mole_fractions()
    p_ratio = sol.P / P_REF
    log_q = 0.0
    for name, nu in REACTION_STOICHIOMETRY[Reaction(reaction)].items():
        if name in CONDENSED_SPECIES:
            continue
        log_q += nu * (math.log(fractions[name]) + math.log(p_ratio))
    return math.exp(log_q)


def _gas_stoichiometry(reactions: Tuple[Reaction, ...]) -> np.ndarray:
    nu = np.zeros((len(reactions), len(UNKNOWN_SPECIES)))
    for row, reaction in enumerate(reactions):
        for name, coeff in REACTION_STOICHIOMETRY[reaction].items():
            if name in CONDENSED_SPECIES:
                continue
            nu[row, UNKNOWN_SPECIES.index(name)] = coeff
    return nu


def _check_feasibility(inputs: ReactionInputs) -> np.ndarray:
    totals = inputs.element_totals()
    if totals[0] <= 0:
        raise InfeasibleCompositionError(("CO", "CO2", "CH4"), "Aucun carbone dans la charge")
    if totals[1] <= 0:
        raise InfeasibleCompositionError(("H2", "H2O(g)", "CH4"), "Aucun hydrogène dans la charge")
    if totals[2] <= 0:
        raise InfeasibleCompositionError(("CO", "CO2", "H2O(g)"), "Aucun oxygène dans la charge")
    if totals[2] >= 2.0 * totals[0] + totals[1] / 2.0:
        raise InfeasibleCompositionError(
            ("CO", "H2"), "Oxygène suffisant pour une combustion complète : pas de gaz combustible"
        )
    return totals


def _initial_guess(inputs: ReactionInputs) -> np.ndarray:
    m = inputs.fuel_moles
    return np.array([
        m.h / 4.0,
        0.4 * m.c,
        0.6 * m.c,
        m.h / 4.0 + inputs.moisture,
        1e-4,
    ])


def solve_producer_gas(inputs: ReactionInputs, spec: GasifierSpec,
                       db: Optional[SpeciesDatabase] = None,
                       tol: float = TOLERANCE, max_iter: int = MAX_ITERATIONS) -> EquilibriumSolution:
    """
    Newton amorti sur les logarithmes des nombres de moles.

    Résidus : trois bilans élémentaires normés par les atomes entrants, puis
    Σν ln n − Δν ln N + Δν ln(P/P0) − ln K pour chaque équilibre.
    """
    db = db or default_database()
    totals = _check_feasibility(inputs)
    T = spec.T_gasifier
    reactions = CLOSURE_REACTIONS[spec.closure]
    ln_k = np.array([ln_equilibrium_constant(r, T, db) for r in reactions])
    nu = _gas_stoichiometry(reactions)
    dn = nu.sum(axis=1)
    ln_p = math.log(spec.P / P_REF)
    n_inert = inputs.n_N2

    def residual(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        n = np.exp(x)
        N = n.sum() + n_inert
        r_elements = (ELEMENT_MATRIX @ n - totals) / totals
        r_equilibrium = nu @ x - dn * math.log(N) + dn * ln_p - ln_k
        return np.concatenate([r_elements, r_equilibrium]), n, N

    x = np.log(np.maximum(_initial_guess(inputs), math.exp(LOG_FLOOR)))
    r, n, N = residual(x)
    norm = float(np.linalg.norm(r))

    for iteration in range(1, max_iter + 1):
        jac = np.vstack([
            ELEMENT_MATRIX * n / totals[:, None],
            nu - dn[:, None] * n[None, :] / N,
        ])
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise ConvergenceError("Jacobien singulier", norm, iteration) from None

        largest = float(np.max(np.abs(dx)))
        if largest > MAX_LOG_STEP:
            dx *= MAX_LOG_STEP / largest

        alpha = 1.0
        while True:
            x_trial = np.maximum(x + alpha * dx, LOG_FLOOR)
            r_trial, n_trial, N_trial = residual(x_trial)
            norm_trial = float(np.linalg.norm(r_trial))
            if norm_trial < norm or alpha <= MIN_DAMPING:
                break
            alpha /= 2.0

        x, r, n, N, norm = x_trial, r_trial, n_trial, N_trial, norm_trial
        logger.debug(f"Newton it={iteration} résidu={norm:.3e} amortissement={alpha:.4g}")

        if not np.isfinite(norm):
            raise ConvergenceError("Résidu non fini", norm, iteration)
        if norm < tol:
            logger.debug(f"Équilibre convergé en {iteration} itérations à {T:.2f} K")
            return EquilibriumSolution(
                n_H2=float(n[0]), n_CO=float(n[1]), n_CO2=float(n[2]),
                n_H2O=float(n[3]), n_CH4=float(n[4]), n_N2=n_inert,
                iterations=iteration, residual_norm=norm, T=T, P=spec.P,
            )

    raise ConvergenceError(
        f"Pas de convergence de l'équilibre à {T:.2f} K", norm, max_iter,
        {"T_gasifier": T, "ER": spec.equivalence_ratio, "moisture_w": spec.moisture_w},
    )


def minimize_gibbs(inputs: ReactionInputs, spec: GasifierSpec,
                   db: Optional[SpeciesDatabase] = None) -> EquilibriumSolution:
    """Minimisation directe de G/RT du mélange gazeux sous contraintes élémentaires (SLSQP)."""
    db = db or default_database()
    totals = _check_feasibility(inputs)
    T = spec.T_gasifier
    ln_p = math.log(spec.P / P_REF)
    g_rt = np.array([gibbs_molar(db.get(name), T) * 1000.0 / (RU * T) for name in UNKNOWN_SPECIES])
    g_n2 = gibbs_molar(db.get("N2"), T) * 1000.0 / (RU * T)

    scale = totals[0]
    target = totals / scale
    u_inert = inputs.n_N2 / scale

    def objective(u: np.ndarray) -> Tuple[float, np.ndarray]:
        u = np.maximum(u, 1e-300)
        N = u.sum() + u_inert
        mu = g_rt + np.log(u / N) + ln_p
        value = float(u @ mu)
        if u_inert > 0:
            value += u_inert * (g_n2 + math.log(u_inert / N) + ln_p)
        return value, mu

    constraints = {
        "type": "eq",
        "fun": lambda u: ELEMENT_MATRIX @ u - target,
        "jac": lambda u: ELEMENT_MATRIX,
    }
    result = minimize(
        objective,
        _initial_guess(inputs) / scale,
        jac=True,
        method="SLSQP",
        bounds=[(1e-20, None)] * len(UNKNOWN_SPECIES),
        constraints=[constraints],
        options={"ftol": 1e-12, "maxiter": 1000},
    )
    violation = float(np.linalg.norm(ELEMENT_MATRIX @ result.x - target))
    # statut 8 : recherche linéaire bloquée au minimum par la précision machine
    stalled_at_minimum = result.status == 8 and violation < 1e-8
    if not (result.success or stalled_at_minimum):
        raise ConvergenceError(f"Minimisation de Gibbs: {result.message}", violation, int(result.nit))

    n = result.x * scale
    return EquilibriumSolution(
        n_H2=float(n[0]), n_CO=float(n[1]), n_CO2=float(n[2]),
        n_H2O=float(n[3]), n_CH4=float(n[4]), n_N2=inputs.n_N2,
        iterations=int(result.nit), residual_norm=violation, T=T, P=spec.P,
        method="gibbs-minimization",
    )


def gasifier_energy_balance(inputs: ReactionInputs, spec: GasifierSpec, sol: EquilibriumSolution,
                            fuel: BiomassFuel, env: Optional[ReferenceEnvironment] = None,
                            db: Optional[SpeciesDatabase] = None) -> EnergyBalance:
    """Bilan d'énergie ; combustible, humidité et air entrent à T0."""
    env = env or ReferenceEnvironment()
    db = db or default_database()
    if not sol.converged:
        raise InvalidInputError("Solution d'équilibre non convergée")

    T0 = env.T0
    h_in = (formation_enthalpy(fuel, db)
            + 1000.0 * inputs.moisture * enthalpy_molar(db.get("H2O(l)"), T0)
            + 1000.0 * inputs.air_O2 * enthalpy_molar(db.get("O2"), T0)
            + 1000.0 * inputs.air_N2 * enthalpy_molar(db.get("N2"), T0))
    h_out = 1000.0 * sum(n * enthalpy_molar(db.get(name), sol.T) for name, n in sol.moles().items())

    flow = fuel.mass_flow
    enthalpy_in = flow * h_in
    enthalpy_out = flow * h_out
    heat_duty = enthalpy_out - enthalpy_in
    fuel_energy = flow * fuel.lhv_dry() * 1000.0
    expected_loss = spec.heat_loss_fraction * fuel_energy
    return EnergyBalance(
        enthalpy_in=enthalpy_in,
        enthalpy_out=enthalpy_out,
        heat_duty=heat_duty,
        fuel_energy_input=fuel_energy,
        expected_heat_loss=expected_loss,
        heat_loss_residual=abs(heat_duty) - expected_loss,
    )


def combustion_enthalpy(name: str, db: Optional[SpeciesDatabase] = None) -> float:
    """PCI molaire (kJ/mol) : combustion complète vers CO2 et H2O(g)."""
    db = db or default_database()
    record = db.get(name)
    extra = set(record.formula) - {"C", "H", "O", "N"}
    if extra:
        raise InvalidInputError(f"{name}: éléments non pris en charge {sorted(extra)}")
    return (record.h_f0
            - record.formula.get("C", 0) * db.get("CO2").h_f0
            - record.formula.get("H", 0) / 2.0 * db.get("H2O(g)").h_f0)


def producer_gas_lhv(sol: EquilibriumSolution, db: Optional[SpeciesDatabase] = None) -> GasHeatingValue:
    db = db or default_database()
    moles = sol.moles()
    per_kg = sum(n * combustion_enthalpy(name, db) for name, n in moles.items() if n > 0)
    total = sol.total
    return GasHeatingValue(per_kmol=per_kg / total if total > 0 else 0.0, per_kg_fuel=per_kg)


def solid_residues(fuel: BiomassFuel) -> Dict[str, float]:
    """Solides inertes (kg/kg sec) : 80 % cendres volantes, 20 % mâchefers."""
    moles = fuel.elemental_moles()
    solids = moles.ash_frac + moles.s * ATOMIC_MASS["S"]
    return {"fly_ash": FLY_ASH_SHARE * solids, "bottom_ash": (1.0 - FLY_ASH_SHARE) * solids}


def solve_outlet_temperature(inputs: ReactionInputs, spec: GasifierSpec, fuel: BiomassFuel,
                             env: Optional[ReferenceEnvironment] = None,
                             db: Optional[SpeciesDatabase] = None) -> Tuple[float, EquilibriumSolution, EnergyBalance]:
    """Température de sortie pour laquelle la chaleur libérée égale les pertes imposées."""
    env = env or ReferenceEnvironment()
    db = db or default_database()

    def evaluate(T: float) -> Tuple[EquilibriumSolution, EnergyBalance]:
        local = spec.model_copy(update={"T_gasifier": T})
        sol = solve_producer_gas(inputs, local, db)
        return sol, gasifier_energy_balance(inputs, local, sol, fuel, env, db)

    def mismatch(T: float) -> float:
        _, balance = evaluate(T)
        return balance.heat_duty + balance.expected_heat_loss

    low, high = mismatch(T_GASIFIER_MIN), mismatch(T_GASIFIER_MAX)
    if low * high > 0:
        raise InvalidInputError(
            f"Aucune température dans [{T_GASIFIER_MIN}, {T_GASIFIER_MAX}] K n'équilibre les pertes "
            f"(écarts {low:.1f} / {high:.1f} kW)"
        )
    T = brentq(mismatch, T_GASIFIER_MIN, T_GASIFIER_MAX, xtol=1e-6)
    sol, balance = evaluate(T)
    logger.info(f"Température de sortie adiabatique (pertes {spec.heat_loss_fraction:.1%}): {T:.2f} K")
    return T, sol, balance
