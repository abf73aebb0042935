"""
Caractérisation des combustibles biomasse.

Bases de composition (brute, sèche, sèche sans cendres), pouvoir calorifique
supérieur par corrélation élémentaire, PCI, teneur molaire élémentaire par kg
de combustible sec, coefficient β de Szargut et exergie chimique du combustible.
Le jeu de six biomasses de référence est fourni dans data/fuels.json.
"""

import json
import logging
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import (
    CorrelationValidityWarning,
    InvalidFuelError,
    InvalidInputError,
    PlausibilityWarning,
)
from .settings import DEFAULT_FUELS_DB
from .thermo_props import ATOMIC_MASS, ReferenceEnvironment, SpeciesDatabase, default_database

logger = logging.getLogger(__name__)

H_FG = 2.442  # MJ/kg, chaleur latente de l'eau à 25 °C
SZARGUT_OC_LIMIT = 0.667
LHV_RANGE = (14.0, 21.0)  # MJ/kg
ANALYSIS_EPS = 1e-9

# Coefficients de la corrélation HHV (MJ/kg par % massique, base sèche)
HHV_COEFFS = {"C": 0.3491, "H": 1.1783, "S": 1.0055, "N": 0.0151, "O": -0.1034, "A": -0.0211}

ELEMENTS = ("C", "H", "O", "N", "S", "Cl")


class Basis(str, Enum):
    AS_RECEIVED = "as-received"
    DRY = "dry"
    DRY_ASH_FREE = "dry-ash-free"


class UltimateAnalysis(BaseModel):
    """Analyse élémentaire en % massique sur la base indiquée."""

    model_config = ConfigDict(frozen=True)

    C: float = Field(ge=0.0, default=0.0)
    H: float = Field(ge=0.0, default=0.0)
    O: float = Field(ge=0.0, default=0.0)
    N: float = Field(ge=0.0, default=0.0)
    S: float = Field(ge=0.0, default=0.0)
    Cl: float = Field(ge=0.0, default=0.0)
    basis: Basis = Field(description="Base de l'analyse", default=Basis.DRY)

    @model_validator(mode="after")
    def _check_sum(self) -> "UltimateAnalysis":
        total = self.total
        if self.basis == Basis.DRY_ASH_FREE:
            if not 99.0 <= total <= 101.0:
                raise ValueError(f"Analyse sans cendres: somme {total:.3f} hors de [99, 101]")
        elif total > 100.0 + ANALYSIS_EPS:
            raise ValueError(f"Analyse élémentaire: somme {total:.3f} > 100")
        return self

    @property
    def total(self) -> float:
        return sum(getattr(self, element) for element in ELEMENTS)

    def scaled(self, factor: float, basis: Basis) -> "UltimateAnalysis":
        return UltimateAnalysis(basis=basis, **{e: getattr(self, e) * factor for e in ELEMENTS})


class ProximateAnalysis(BaseModel):
    """Analyse immédiate en % massique, base brute."""

    model_config = ConfigDict(frozen=True)

    VM: float = Field(ge=0.0, description="Matières volatiles")
    FC: float = Field(ge=0.0, description="Carbone fixe")
    M: float = Field(ge=0.0, description="Humidité")
    A: float = Field(ge=0.0, description="Cendres")

    @model_validator(mode="after")
    def _check_sum(self) -> "ProximateAnalysis":
        total = self.VM + self.FC + self.M + self.A
        if not 99.0 <= total <= 101.0:
            raise ValueError(f"Analyse immédiate: somme {total:.3f} hors de [99, 101]")
        return self


class BiomassFuel(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    ultimate: UltimateAnalysis
    proximate: ProximateAnalysis
    mass_flow: float = Field(description="Débit de combustible sec (kg/s)", default=1.0, ge=0.0)
    label: Optional[str] = None

    @property
    def ash_dry(self) -> float:
        """Cendres en % de la masse sèche."""
        return _ash_dry(self.proximate)

    @property
    def moisture_w(self) -> float:
        """Humidité en kg d'eau par kg de combustible sec."""
        M = self.proximate.M
        if M >= 100.0:
            raise InvalidFuelError(f"{self.name}: humidité {M} % >= 100")
        return M / (100.0 - M)

    def dry_ultimate(self) -> UltimateAnalysis:
        return convert_basis(self.ultimate, self.proximate, Basis.DRY)

    def elemental_moles(self) -> "FuelElementalMoles":
        return elemental_moles(self.dry_ultimate())

    def hhv_dry(self) -> float:
        return hhv(self.dry_ultimate(), self.ash_dry)

    def lhv_dry(self) -> float:
        return lhv_from_hhv(self.hhv_dry(), self.dry_ultimate().H, 0.0)

    def with_mass_flow(self, mass_flow: float) -> "BiomassFuel":
        return self.model_copy(update={"mass_flow": mass_flow})


@dataclass(frozen=True)
class FuelElementalMoles:
    """Teneurs élémentaires en kmol par kg de combustible sec."""

    c: float
    h: float
    o: float
    n: float
    s: float = 0.0
    ash_frac: float = 0.0  # fraction massique inerte (cendres, Cl, reste)

    def __post_init__(self):
        for name in ("c", "h", "o", "n", "s", "ash_frac"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"Teneur élémentaire négative: {name}={getattr(self, name)}")

    def mass_closure(self) -> float:
        """Masse reconstituée, kg par kg sec."""
        return (self.c * ATOMIC_MASS["C"] + self.h * ATOMIC_MASS["H"] + self.o * ATOMIC_MASS["O"]
                + self.n * ATOMIC_MASS["N"] + self.s * ATOMIC_MASS["S"] + self.ash_frac)


@dataclass(frozen=True)
class FuelExergy:
    specific: float  # MJ/kg sec
    rate: float  # MW
    beta: float
    lhv: float  # MJ/kg sec
    hhv: float  # MJ/kg sec
    moisture_w: float

    @property
    def ratio_to_lhv(self) -> float:
        return self.specific / self.lhv

    @property
    def ratio_to_hhv(self) -> float:
        return self.specific / self.hhv


def _mass_factor(p: ProximateAnalysis, basis: Basis) -> float:
    """Part de la masse brute couverte par la base."""
    if p.M >= 100.0 or p.A >= 100.0 or p.M + p.A >= 100.0:
        raise InvalidFuelError(f"Humidité ({p.M} %) ou cendres ({p.A} %) incompatibles")
    if basis == Basis.AS_RECEIVED:
        return 1.0
    if basis == Basis.DRY:
        return 1.0 - p.M / 100.0
    return 1.0 - p.M / 100.0 - p.A / 100.0


def _ash_dry(p: ProximateAnalysis) -> float:
    return p.A / _mass_factor(p, Basis.DRY)


def convert_basis(u: UltimateAnalysis, p: ProximateAnalysis, target: Union[Basis, str]) -> UltimateAnalysis:
    target = Basis(target)
    if target == u.basis:
        return u
    factor = _mass_factor(p, u.basis) / _mass_factor(p, target)
    return u.scaled(factor, target)


def hhv(u: UltimateAnalysis, ash: float = 0.0) -> float:
    """PCS en MJ/kg sec à partir de l'analyse élémentaire sèche et des cendres (% sec)."""
    if u.basis == Basis.AS_RECEIVED:
        raise InvalidInputError("Le PCS se calcule sur base sèche")
    if ash < 0:
        raise InvalidInputError(f"Teneur en cendres négative: {ash}")
    if u.total + ash > 101.0:
        raise InvalidInputError(f"Composition + cendres = {u.total + ash:.3f} > 101")
    return (HHV_COEFFS["C"] * u.C + HHV_COEFFS["H"] * u.H + HHV_COEFFS["S"] * u.S
            + HHV_COEFFS["N"] * u.N + HHV_COEFFS["O"] * u.O + HHV_COEFFS["A"] * ash)


def lhv_from_hhv(hhv_value: float, H: float, M: float) -> float:
    if H < 0 or M < 0:
        raise InvalidInputError(f"H ({H}) et M ({M}) doivent être positifs")
    lhv = hhv_value - H_FG * (9.0 * H / 100.0 + M / 100.0)
    if lhv < 0:
        raise InvalidFuelError(f"PCI négatif ({lhv:.3f} MJ/kg)")
    return lhv


def elemental_moles(u: UltimateAnalysis) -> FuelElementalMoles:
    if u.basis != Basis.DRY:
        raise InvalidInputError(f"Analyse sur base sèche attendue, reçu {u.basis.value}")
    reacting = u.C + u.H + u.O + u.N + u.S
    return FuelElementalMoles(
        c=u.C / (100.0 * ATOMIC_MASS["C"]),
        h=u.H / (100.0 * ATOMIC_MASS["H"]),
        o=u.O / (100.0 * ATOMIC_MASS["O"]),
        n=u.N / (100.0 * ATOMIC_MASS["N"]),
        s=u.S / (100.0 * ATOMIC_MASS["S"]),
        ash_frac=max(0.0, 1.0 - reacting / 100.0),
    )


def szargut_beta(u: UltimateAnalysis) -> float:
    if u.C <= 0:
        raise InvalidFuelError("β indéfini sans carbone")
    h_c = u.H / u.C
    o_c = u.O / u.C
    denominator = 1.0 - 0.4124 * o_c
    if denominator <= 0:
        raise InvalidFuelError(f"Dénominateur de β non positif (O/C={o_c:.3f})")
    numerator = 1.044 + 0.016 * h_c - 0.3493 * o_c * (1.0 + 0.0531 * h_c)
    if numerator <= 0:
        raise InvalidFuelError(f"Numérateur de β non positif (O/C={o_c:.3f})")
    if o_c > SZARGUT_OC_LIMIT:
        warnings.warn(
            f"O/C={o_c:.3f} > {SZARGUT_OC_LIMIT}: corrélation de β hors domaine",
            CorrelationValidityWarning,
            stacklevel=2,
        )
    return numerator / denominator


def check_heating_value(name: str, lhv: float) -> None:
    low, high = LHV_RANGE
    if not low <= lhv <= high:
        warnings.warn(
            f"{name}: PCI {lhv:.2f} MJ/kg hors de la plage usuelle [{low}, {high}]",
            PlausibilityWarning,
            stacklevel=2,
        )


def fuel_chemical_exergy(f: BiomassFuel, env: Optional[ReferenceEnvironment] = None,
                         db: Optional[SpeciesDatabase] = None,
                         moisture_w: Optional[float] = None) -> FuelExergy:
    """
    Exergie chimique du combustible humide, rapportée au kg sec.

    La formule de Szargut est appliquée sur base brute avec w la fraction
    massique d'eau, puis divisée par la part sèche.
    """
    db = db or default_database()
    w_d = f.moisture_w if moisture_w is None else moisture_w
    if w_d < 0:
        raise InvalidInputError(f"Humidité négative: {w_d}")

    u_dry = f.dry_ultimate()
    hhv_dry = hhv(u_dry, f.ash_dry)
    lhv_dry = lhv_from_hhv(hhv_dry, u_dry.H, 0.0)
    check_heating_value(f.name, lhv_dry)
    beta = szargut_beta(u_dry)

    water = db.get("H2O(l)")
    ex_w = water.ex_ch0 / water.molar_mass  # MJ/kg

    w = w_d / (1.0 + w_d)
    dry_share = 1.0 - w
    lhv_ar = lhv_from_hhv(hhv_dry * dry_share, u_dry.H * dry_share, 100.0 * w)
    ex_ar = beta * (lhv_ar + w * H_FG) + w * ex_w
    specific = ex_ar / dry_share

    return FuelExergy(
        specific=specific,
        rate=specific * f.mass_flow,
        beta=beta,
        lhv=lhv_dry,
        hhv=hhv_dry,
        moisture_w=w_d,
    )


def formation_enthalpy(f: BiomassFuel, db: Optional[SpeciesDatabase] = None) -> float:
    """Enthalpie de formation du combustible sec (kJ/kg) déduite du PCS (eau liquide, soufre en SO2)."""
    db = db or default_database()
    moles = f.elemental_moles()
    return (f.hhv_dry() * 1000.0
            + moles.c * 1000.0 * db.get("CO2").h_f0
            + moles.h / 2.0 * 1000.0 * db.get("H2O(l)").h_f0
            + moles.s * 1000.0 * db.get("SO2").h_f0)


def _fuel_from_dict(data: Dict) -> BiomassFuel:
    try:
        return BiomassFuel(
            name=data["name"],
            label=data.get("label"),
            mass_flow=data.get("mass_flow", 1.0),
            ultimate=UltimateAnalysis(**data["ultimate"]),
            proximate=ProximateAnalysis(**data["proximate"]),
        )
    except KeyError as e:
        raise InvalidFuelError(f"Champ manquant dans la définition du combustible: {e.args[0]}") from None


def _read_fuel_file(path: Path) -> List[Dict]:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if isinstance(data, dict) and "fuels" in data:
        return data["fuels"]
    if isinstance(data, dict):
        return [data]
    if isinstance(data, list):
        return data
    raise InvalidFuelError(f"Format de combustible non reconnu: {path}")


def list_fuels(path: Optional[Path] = None) -> List[BiomassFuel]:
    path = Path(path) if path else DEFAULT_FUELS_DB
    if not path.exists():
        raise FileNotFoundError(f"Jeu de combustibles non trouvé: {path}")
    return [_fuel_from_dict(entry) for entry in _read_fuel_file(path)]


def load_fuel(name_or_path: str, fuels_path: Optional[Path] = None) -> BiomassFuel:
    """Combustible intégré par son nom, ou fichier JSON utilisateur."""
    candidate = Path(name_or_path)
    if candidate.suffix.lower() == ".json":
        if not candidate.exists():
            raise FileNotFoundError(f"Fichier combustible non trouvé: {candidate}")
        entries = _read_fuel_file(candidate)
        if len(entries) != 1:
            raise InvalidFuelError(f"{candidate}: un seul combustible attendu, {len(entries)} trouvés")
        return _fuel_from_dict(entries[0])

    fuels = {fuel.name: fuel for fuel in list_fuels(fuels_path)}
    if name_or_path not in fuels:
        raise InvalidFuelError(
            f"Combustible inconnu: {name_or_path} (disponibles: {', '.join(sorted(fuels))})"
        )
    return fuels[name_or_path]


def fuel_indicators(fuel: BiomassFuel, env: Optional[ReferenceEnvironment] = None,
                    db: Optional[SpeciesDatabase] = None) -> Dict[str, float]:
    u_dry = fuel.dry_ultimate()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CorrelationValidityWarning)
        exergy = fuel_chemical_exergy(fuel, env, db, moisture_w=0.0)
    return {
        "fuel": fuel.name,
        "HHV_MJ_per_kg": exergy.hhv,
        "LHV_MJ_per_kg": exergy.lhv,
        "H_C": u_dry.H / u_dry.C,
        "O_C": u_dry.O / u_dry.C,
        "beta": exergy.beta,
        "ex_MJ_per_kg": exergy.specific,
        "ex_over_LHV": exergy.ratio_to_lhv,
        "ex_over_HHV": exergy.ratio_to_hhv,
        "moisture_w": fuel.moisture_w,
    }


def fuels_table(path: Optional[Path] = None, db: Optional[SpeciesDatabase] = None) -> pd.DataFrame:
    """Indicateurs énergétiques et exergétiques (base sèche) des combustibles du jeu."""
    rows = [fuel_indicators(fuel, db=db) for fuel in list_fuels(path)]
    return pd.DataFrame(rows)
