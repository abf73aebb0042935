"""Fixtures partagées : base d'espèces, état mort, chêne de référence."""

import logging

import pytest

from exergas.fuel_model import BiomassFuel, ProximateAnalysis, UltimateAnalysis, load_fuel
from exergas.gasifier_core import GasifierSpec, build_reaction_inputs
from exergas.settings import get_settings
from exergas.thermo_props import ReferenceEnvironment, default_database


@pytest.fixture(scope="session")
def db():
    return default_database()


@pytest.fixture
def env():
    return ReferenceEnvironment()


@pytest.fixture(scope="session")
def oak():
    return load_fuel("oak_wood")


@pytest.fixture
def oak_dry_analysis():
    """Analyse du chêne (sans cendres) lue comme analyse sèche, cendres nulles."""
    return UltimateAnalysis(C=50.0, H=6.1, O=42.9, N=0.3, S=0.1, basis="dry")


@pytest.fixture
def oak_ash_free(oak_dry_analysis):
    """Chêne sec, sans cendres ni humidité : bases sèche et sans cendres confondues."""
    return BiomassFuel(
        name="oak_ash_free",
        ultimate=oak_dry_analysis,
        proximate=ProximateAnalysis(VM=80.0, FC=20.0, M=0.0, A=0.0),
    )


@pytest.fixture
def oak_spec():
    return GasifierSpec(T_gasifier=1073.15, equivalence_ratio=0.35, moisture_w=0.1)


@pytest.fixture
def oak_inputs(oak, oak_spec):
    return build_reaction_inputs(oak.elemental_moles(), oak_spec)


@pytest.fixture
def restore_root_logger():
    """La CLI reconfigure le logger racine ; on le remet en état après chaque test."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers = handlers
    root.setLevel(level)


@pytest.fixture
def clear_settings_cache():
    """Les réglages EXERGAS_* sont relus : cache vidé avant et après le test."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
