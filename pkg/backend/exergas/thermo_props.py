"""
Base de données des espèces et propriétés de gaz parfait.

Chaque espèce porte son enthalpie de formation, son exergie chimique standard et
des segments polynomiaux de cp°/Ru (forme à 7 coefficients). Les fonctions du
module sont pures : elles ne dépendent que de l'enregistrement, de la
température et de la pression, et peuvent être appelées depuis plusieurs
processus sans précaution.

Unités : T en K, p en kPa, h et g en kJ/mol, s et cp en J/(mol·K).
"""

import logging
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import (
    InvalidInputError,
    MissingSpeciesError,
    SpeciesDataError,
    TemperatureRangeError,
)
from .settings import AIR_N2_FRACTION, AIR_O2_FRACTION, DEFAULT_SPECIES_DB, P0_DEFAULT, T0_DEFAULT

logger = logging.getLogger(__name__)

RU = 8.314  # J/(mol·K)
T_REF = 298.15  # K
P_REF = 101.325  # kPa

ATOMIC_MASS = {"C": 12.011, "H": 1.008, "O": 15.999, "N": 14.007, "S": 32.06}

REQUIRED_SPECIES = ("O2", "N2", "CO2", "H2O(g)", "H2O(l)", "CO", "H2", "CH4", "SO2", "NO", "NO2")
SPECIES_ALIASES = {"H2O": "H2O(g)", "C": "C(gr)"}

# Une espèce de référence par élément ; O en premier, les autres en dépendent.
REFERENCE_SPECIES = {"O": "O2", "N": "N2", "C": "CO2", "H": "H2O(g)", "S": "SO2"}

MOLAR_MASS_TOLERANCE = 0.01  # kg/kmol
CP_CONTINUITY_TOLERANCE = 0.005
H_S_CONTINUITY_TOLERANCE = 0.001
RANGE_EPS = 1e-9

_FORMULA_TOKEN = re.compile(r"([A-Z][a-z]?)(\d*)")


class ReferenceEnvironment(BaseModel):
    """État mort : 25 °C, 1 atm, air à 21 % d'oxygène et 79 % d'azote."""

    model_config = ConfigDict(frozen=True)

    T0: float = Field(description="Température ambiante (K)", default=T0_DEFAULT, gt=0.0)
    P0: float = Field(description="Pression ambiante (kPa)", default=P0_DEFAULT, gt=0.0)
    air_O2_frac: float = Field(description="Fraction molaire O2 de l'air", default=AIR_O2_FRACTION, ge=0.0, le=1.0)
    air_N2_frac: float = Field(description="Fraction molaire N2 de l'air", default=AIR_N2_FRACTION, ge=0.0, le=1.0)
    Ru: float = Field(description="Constante des gaz parfaits J/(mol·K)", default=RU, gt=0.0)
    exergy_basis: Literal["consistent", "tabulated"] = Field(
        description="consistent: exergies standard déduites des fonctions de Gibbs ; tabulated: valeurs du fichier",
        default="consistent",
    )
    correct_reference_exergy: bool = Field(
        description="Corrige les exergies des espèces de référence à T0", default=False)

    @model_validator(mode="after")
    def _check_air(self) -> "ReferenceEnvironment":
        if abs(self.air_O2_frac + self.air_N2_frac - 1.0) > 1e-9:
            raise ValueError(
                f"Fractions d'air incohérentes: {self.air_O2_frac} + {self.air_N2_frac} != 1"
            )
        return self


@dataclass(frozen=True)
class PolySegment:
    T_low: float
    T_high: float
    coeffs: Tuple[float, float, float, float, float]
    b1: float
    b2: float

    def __post_init__(self):
        if not self.T_low < self.T_high:
            raise InvalidInputError(f"Segment invalide: T_low={self.T_low} >= T_high={self.T_high}")
        if len(self.coeffs) != 5:
            raise InvalidInputError(f"5 coefficients attendus, {len(self.coeffs)} reçus")

    def contains(self, T: float) -> bool:
        return self.T_low - RANGE_EPS <= T <= self.T_high + RANGE_EPS

    def cp_over_r(self, T: float) -> float:
        c0, c1, c2, c3, c4 = self.coeffs
        return c0 + T * (c1 + T * (c2 + T * (c3 + T * c4)))

    def h_over_r(self, T: float) -> float:
        """Primitive de cp/Ru, en K (inclut b1)."""
        c0, c1, c2, c3, c4 = self.coeffs
        return T * (c0 + T * (c1 / 2 + T * (c2 / 3 + T * (c3 / 4 + T * c4 / 5)))) + self.b1

    def s_over_r(self, T: float) -> float:
        c0, c1, c2, c3, c4 = self.coeffs
        return c0 * math.log(T) + T * (c1 + T * (c2 / 2 + T * (c3 / 3 + T * c4 / 4))) + self.b2


@dataclass(frozen=True)
class SpeciesRecord:
    name: str
    formula: Mapping[str, int]
    molar_mass: float  # kg/kmol
    h_f0: float  # kJ/mol
    ex_ch0: float  # kJ/mol
    segments: Tuple[PolySegment, ...] = field(default_factory=tuple)

    @property
    def T_min(self) -> float:
        return self.segments[0].T_low

    @property
    def T_max(self) -> float:
        return self.segments[-1].T_high

    @property
    def is_liquid(self) -> bool:
        return self.name.endswith("(l)")

    def segment_for(self, T: float) -> PolySegment:
        for segment in self.segments:
            if segment.contains(T):
                return segment
        raise TemperatureRangeError(self.name, T, self.T_min, self.T_max)


def parse_formula(text: str) -> Dict[str, int]:
    """'CH4' -> {'C': 1, 'H': 4}"""
    if not text or _FORMULA_TOKEN.sub("", text):
        raise InvalidInputError(f"Formule illisible: {text!r}")
    counts: Dict[str, int] = {}
    for symbol, count in _FORMULA_TOKEN.findall(text):
        counts[symbol] = counts.get(symbol, 0) + (int(count) if count else 1)
    return counts


def formula_mass(formula: Mapping[str, int]) -> float:
    try:
        return sum(ATOMIC_MASS[element] * count for element, count in formula.items())
    except KeyError as e:
        raise InvalidInputError(f"Élément sans masse atomique connue: {e.args[0]}") from None


def heat_capacity_molar(sp: SpeciesRecord, T: float) -> float:
    return RU * sp.segment_for(T).cp_over_r(T)


def enthalpy_molar(sp: SpeciesRecord, T: float) -> float:
    """Enthalpie absolue (formation incluse), kJ/mol ; h(298.15) = h_f0."""
    segment = sp.segment_for(T)
    reference = sp.segment_for(T_REF)
    return sp.h_f0 + RU * (segment.h_over_r(T) - reference.h_over_r(T_REF)) / 1000.0


def standard_entropy(sp: SpeciesRecord, T: float) -> float:
    return RU * sp.segment_for(T).s_over_r(T)


def entropy_molar(sp: SpeciesRecord, T: float, p_partial: float,
                  env: Optional[ReferenceEnvironment] = None) -> float:
    """s°(T) − Ru·ln(p/P0) ; les liquides sont traités comme incompressibles."""
    env = env or ReferenceEnvironment()
    if p_partial <= 0:
        raise InvalidInputError(f"Pression partielle non positive pour {sp.name}: {p_partial}")
    s0 = standard_entropy(sp, T)
    if sp.is_liquid:
        return s0
    return s0 - env.Ru * math.log(p_partial / env.P0)


def gibbs_molar(sp: SpeciesRecord, T: float) -> float:
    return enthalpy_molar(sp, T) - T * standard_entropy(sp, T) / 1000.0


def chemical_exergy_at_T(sp: SpeciesRecord, T: float,
                         env: Optional[ReferenceEnvironment] = None) -> float:
    """Exergie chimique ramenée à T : (T0/T)·ex° − h_f0·(T − T0)/T."""
    env = env or ReferenceEnvironment()
    if T <= 0:
        raise InvalidInputError(f"Température non positive: {T}")
    sp.segment_for(T)
    return (env.T0 / T) * sp.ex_ch0 - sp.h_f0 * (T - env.T0) / T


def _parse_floats(tokens: List[str], line_no: int) -> List[float]:
    try:
        return [float(token) for token in tokens]
    except ValueError as e:
        raise SpeciesDataError(f"valeur numérique invalide ({e})", line_no) from None


def _check_record(record: SpeciesRecord, line_no: int) -> None:
    expected = formula_mass(record.formula)
    if record.molar_mass <= 0 or abs(record.molar_mass - expected) > MOLAR_MASS_TOLERANCE:
        raise SpeciesDataError(
            f"{record.name}: masse molaire {record.molar_mass} incohérente avec la formule ({expected:.3f})",
            line_no,
        )
    for previous, current in zip(record.segments, record.segments[1:]):
        if abs(previous.T_high - current.T_low) > RANGE_EPS:
            raise SpeciesDataError(
                f"{record.name}: trou ou recouvrement entre {previous.T_high} K et {current.T_low} K",
                line_no,
            )
        T = previous.T_high
        cp_a, cp_b = previous.cp_over_r(T), current.cp_over_r(T)
        if abs(cp_a - cp_b) > CP_CONTINUITY_TOLERANCE * abs(cp_a):
            raise SpeciesDataError(f"{record.name}: cp discontinu à {T} K", line_no)
        h_a, h_b = previous.h_over_r(T), current.h_over_r(T)
        s_a, s_b = previous.s_over_r(T), current.s_over_r(T)
        if abs(h_a - h_b) > H_S_CONTINUITY_TOLERANCE * abs(h_a) or abs(s_a - s_b) > H_S_CONTINUITY_TOLERANCE * abs(s_a):
            raise SpeciesDataError(f"{record.name}: h ou s discontinu à {T} K", line_no)
    if not record.T_min <= T_REF <= record.T_max:
        raise SpeciesDataError(
            f"{record.name}: la plage [{record.T_min}, {record.T_max}] K n'inclut pas {T_REF} K",
            line_no,
        )


def parse_species_lines(lines: Iterable[str]) -> List[SpeciesRecord]:
    records: List[SpeciesRecord] = []
    pending: Optional[dict] = None
    header_line = 0

    for line_no, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        tokens = text.split()

        if pending is None:
            if len(tokens) != 6:
                raise SpeciesDataError(f"en-tête attendu (6 champs), {len(tokens)} reçus", line_no)
            name, formula_text = tokens[0], tokens[1]
            try:
                formula = parse_formula(formula_text)
            except InvalidInputError as e:
                raise SpeciesDataError(str(e), line_no) from None
            molar_mass, h_f0, ex_ch0, n_segments = _parse_floats(tokens[2:], line_no)
            if n_segments < 1 or n_segments != int(n_segments):
                raise SpeciesDataError(f"{name}: nombre de segments invalide", line_no)
            pending = {"name": name, "formula": formula, "molar_mass": molar_mass,
                       "h_f0": h_f0, "ex_ch0": ex_ch0, "n": int(n_segments), "segments": []}
            header_line = line_no
            continue

        if len(tokens) != 9:
            raise SpeciesDataError(f"segment attendu (9 champs), {len(tokens)} reçus", line_no)
        values = _parse_floats(tokens, line_no)
        try:
            segment = PolySegment(values[0], values[1], tuple(values[2:7]), values[7], values[8])
        except InvalidInputError as e:
            raise SpeciesDataError(str(e), line_no) from None
        pending["segments"].append(segment)

        if len(pending["segments"]) == pending["n"]:
            record = SpeciesRecord(
                name=pending["name"],
                formula=pending["formula"],
                molar_mass=pending["molar_mass"],
                h_f0=pending["h_f0"],
                ex_ch0=pending["ex_ch0"],
                segments=tuple(pending["segments"]),
            )
            _check_record(record, header_line)
            records.append(record)
            pending = None

    if pending is not None:
        raise SpeciesDataError(f"{pending['name']}: segments manquants en fin de fichier", header_line)
    return records


def load_species_db(path: Optional[Path] = None) -> List[SpeciesRecord]:
    path = Path(path) if path else DEFAULT_SPECIES_DB
    if not path.exists():
        raise FileNotFoundError(f"Fichier d'espèces non trouvé: {path}")
    with open(path, "r", encoding="utf-8") as f:
        records = parse_species_lines(f)

    names = {record.name for record in records}
    for species in REQUIRED_SPECIES:
        if species not in names:
            raise MissingSpeciesError(species)
    logger.debug(f"{len(records)} espèces chargées depuis {path}")
    return records


class SpeciesDatabase:
    """Accès par nom aux enregistrements et exergies chimiques cohérentes."""

    def __init__(self, records: Iterable[SpeciesRecord]):
        self._records: Dict[str, SpeciesRecord] = {}
        for record in records:
            if record.name in self._records:
                raise SpeciesDataError(f"Espèce en double: {record.name}")
            self._records[record.name] = record
        self._potentials: Dict[ReferenceEnvironment, Dict[str, float]] = {}

    @classmethod
    def from_file(cls, path: Optional[Path] = None) -> "SpeciesDatabase":
        return cls(load_species_db(path))

    def __contains__(self, name: str) -> bool:
        return SPECIES_ALIASES.get(name, name) in self._records

    def __len__(self) -> int:
        return len(self._records)

    @property
    def names(self) -> List[str]:
        return list(self._records)

    def get(self, name: str) -> SpeciesRecord:
        key = SPECIES_ALIASES.get(name, name)
        try:
            return self._records[key]
        except KeyError:
            raise MissingSpeciesError(name) from None

    def reference_exergy(self, name: str, env: ReferenceEnvironment) -> float:
        """Exergie tabulée, éventuellement ramenée à T0."""
        record = self.get(name)
        if env.correct_reference_exergy and abs(env.T0 - T_REF) > 1e-12:
            return chemical_exergy_at_T(record, env.T0, ReferenceEnvironment(T0=T_REF))
        return record.ex_ch0

    def element_potentials(self, env: ReferenceEnvironment) -> Dict[str, float]:
        """Potentiels chimiques des éléments à T0 (kJ/mol), fixés par les espèces de référence."""
        cached = self._potentials.get(env)
        if cached is not None:
            return cached

        def anchor(name: str) -> float:
            record = self.get(name)
            return gibbs_molar(record, env.T0) - self.reference_exergy(name, env)

        mu: Dict[str, float] = {}
        mu["O"] = anchor("O2") / 2
        mu["N"] = anchor("N2") / 2
        mu["C"] = anchor("CO2") - 2 * mu["O"]
        mu["H"] = (anchor("H2O(g)") - mu["O"]) / 2
        if "SO2" in self:
            mu["S"] = anchor("SO2") - 2 * mu["O"]
        self._potentials[env] = mu
        return mu

    def standard_chemical_exergy(self, name: str, env: ReferenceEnvironment) -> float:
        record = self.get(name)
        if env.exergy_basis == "tabulated" or record.name in REFERENCE_SPECIES.values():
            return self.reference_exergy(record.name, env)
        mu = self.element_potentials(env)
        try:
            bound = sum(count * mu[element] for element, count in record.formula.items())
        except KeyError as e:
            raise MissingSpeciesError(REFERENCE_SPECIES.get(e.args[0], e.args[0])) from None
        return gibbs_molar(record, env.T0) - bound


@lru_cache(maxsize=4)
def default_database(path: Optional[str] = None) -> SpeciesDatabase:
    return SpeciesDatabase.from_file(Path(path) if path else None)
