"""
Configuration et journalisation du simulateur.

Les réglages sont lus depuis l'environnement (fichier .env chargé par python-dotenv)
puis validés par un modèle pydantic figé. Les hypothèses d'exploitation (état mort à
25 °C et 1 atm, air 21/79, pertes thermiques de 1-2 %, cheminée à 155 °C, 80 % de
cendres volantes) sont exposées comme constantes du module.
"""

import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

load_dotenv()

PACKAGE_DIR = Path(__file__).resolve().parent
DATA_DIR = PACKAGE_DIR / "data"
DEFAULT_SPECIES_DB = DATA_DIR / "species.dat"
DEFAULT_FUELS_DB = DATA_DIR / "fuels.json"

# État mort et hypothèses d'exploitation
T0_DEFAULT = 298.15  # K
P0_DEFAULT = 101.325  # kPa
AIR_O2_FRACTION = 0.21
AIR_N2_FRACTION = 0.79
N2_PER_O2 = 3.76
HEAT_LOSS_FRACTION = 0.015
T_STACK_DEFAULT = 428.15  # K, 155 °C
FLY_ASH_SHARE = 0.8
DEFAULT_EQUIVALENCE_RATIO = 0.35


def celsius_to_kelvin(t_c: float) -> float:
    return t_c + 273.15


def kelvin_to_celsius(t_k: float) -> float:
    return t_k - 273.15


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    species_db_path: Path = Field(description="Fichier de données des espèces", default=DEFAULT_SPECIES_DB)
    fuels_db_path: Path = Field(description="Jeu de combustibles intégré", default=DEFAULT_FUELS_DB)
    log_level: str = Field(description="Niveau de journalisation", default="INFO")
    log_file: Optional[Path] = Field(description="Fichier de log optionnel", default=None)
    default_equivalence_ratio: float = Field(description="Rapport d'équivalence par défaut",
                                             default=DEFAULT_EQUIVALENCE_RATIO, gt=0.0, lt=1.0)
    heat_loss_fraction: float = Field(description="Pertes thermiques / énergie du combustible",
                                      default=HEAT_LOSS_FRACTION, ge=0.0, le=0.05)
    t_stack_c: float = Field(description="Température de cheminée en °C", default=155.0)
    exergy_basis: Literal["consistent", "tabulated"] = Field(
        description="Base des exergies chimiques standard", default="consistent")
    workers: int = Field(description="Processus pour les balayages", default=1, ge=1)

    @field_validator("log_level")
    @classmethod
    def _check_level(cls, value: str) -> str:
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Niveau de log inconnu: {value}")
        return value

    @property
    def t_stack_k(self) -> float:
        return celsius_to_kelvin(self.t_stack_c)


def _env(name: str) -> Optional[str]:
    value = os.getenv(name)
    if value is None or not value.strip():
        return None
    return value.strip()


def load_settings() -> Settings:
    """Construit les réglages à partir des variables EXERGAS_*."""
    values = {}
    mapping = {
        "EXERGAS_SPECIES_DB": "species_db_path",
        "EXERGAS_FUELS_DB": "fuels_db_path",
        "EXERGAS_LOG_LEVEL": "log_level",
        "EXERGAS_LOG_FILE": "log_file",
        "EXERGAS_DEFAULT_ER": "default_equivalence_ratio",
        "EXERGAS_HEAT_LOSS": "heat_loss_fraction",
        "EXERGAS_T_STACK_C": "t_stack_c",
        "EXERGAS_EXERGY_BASIS": "exergy_basis",
        "EXERGAS_WORKERS": "workers",
    }
    for env_name, field in mapping.items():
        raw = _env(env_name)
        if raw is not None:
            values[field] = raw
    return Settings(**values)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return load_settings()


def setup_logging(level: str = "INFO", log_file: Optional[Path] = None) -> None:
    custom_format = logging.Formatter(
        '%(asctime)s | %(message)s',
        datefmt='%H:%M:%S'
    )

    logger = logging.getLogger()
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))

    logger.handlers = []

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(custom_format)
    logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setFormatter(custom_format)
        logger.addHandler(file_handler)
