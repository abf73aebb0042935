"""Tests de la base d'espèces et des propriétés de gaz parfait."""

import math

import numpy as np
import pytest

from exergas.exceptions import (
    InvalidInputError,
    MissingSpeciesError,
    SpeciesDataError,
    TemperatureRangeError,
)
from exergas.settings import DEFAULT_SPECIES_DB
from exergas.thermo_props import (
    REQUIRED_SPECIES,
    RU,
    ReferenceEnvironment,
    chemical_exergy_at_T,
    enthalpy_molar,
    entropy_molar,
    gibbs_molar,
    heat_capacity_molar,
    load_species_db,
    parse_formula,
    parse_species_lines,
    standard_entropy,
)

REFERENCE_TABLE = {
    # nom: (h_f0 kJ/mol, ex_ch0 kJ/mol)
    "O2": (0.0, 3.97),
    "N2": (0.0, 0.72),
    "CO2": (-393.52, 19.87),
    "H2O(g)": (-241.82, 9.5),
    "H2O(l)": (-285.83, 0.9),
    "SO2": (-297.10, 313.4),
    "NO": (90.59, 88.9),
    "NO2": (33.72, 55.6),
}

N2_BLOCK = [
    "N2 N2 28.014 0.0 0.72 2",
    "200.0 1000.0 3.29867700E+00 1.40824040E-03 -3.96322200E-06 5.64151500E-09 -2.44485400E-12 "
    "-1.02089990E+03 3.95037200E+00",
    "1000.0 5000.0 2.92664000E+00 1.48797680E-03 -5.68476000E-07 1.00970380E-10 -6.75335100E-15 "
    "-9.22797700E+02 5.98052800E+00",
]


def _file_without(species: str, tmp_path):
    """Copie de la base par défaut privée d'une espèce."""
    lines = DEFAULT_SPECIES_DB.read_text(encoding="utf-8").splitlines()
    kept, skip = [], 0
    for line in lines:
        tokens = line.split("#", 1)[0].split()
        if skip:
            skip -= 1
            continue
        if len(tokens) == 6 and tokens[0] == species:
            skip = int(float(tokens[5]))
            continue
        kept.append(line)
    path = tmp_path / "species.dat"
    path.write_text("\n".join(kept) + "\n", encoding="utf-8")
    return path


class TestSpeciesLoading:

    def test_default_file_has_required_species(self, db):
        """La base fournie contient toutes les espèces obligatoires."""
        for name in REQUIRED_SPECIES:
            assert name in db, f"{name} absent"
        assert len(db) >= len(REQUIRED_SPECIES)

    def test_aliases(self, db):
        """H2O désigne la vapeur, C le graphite."""
        assert db.get("H2O").name == "H2O(g)"
        assert db.get("C").name == "C(gr)"

    def test_unknown_species(self, db):
        with pytest.raises(MissingSpeciesError) as exc_info:
            db.get("Xe")
        assert exc_info.value.species == "Xe"

    def test_missing_required_species(self, tmp_path):
        """Un fichier sans CO est refusé en nommant l'espèce."""
        path = _file_without("CO", tmp_path)
        with pytest.raises(MissingSpeciesError) as exc_info:
            load_species_db(path)
        assert exc_info.value.species == "CO"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_species_db(tmp_path / "absent.dat")

    def test_range_gap_rejected(self):
        """Un trou entre segments est une erreur de données."""
        lines = [N2_BLOCK[0], N2_BLOCK[1], N2_BLOCK[2].replace("1000.0 5000.0", "1100.0 5000.0", 1)]
        with pytest.raises(SpeciesDataError, match="trou"):
            parse_species_lines(lines)

    def test_bad_number_reports_line(self):
        lines = ["# commentaire", N2_BLOCK[0], N2_BLOCK[1].replace("3.29867700E+00", "abc")]
        with pytest.raises(SpeciesDataError) as exc_info:
            parse_species_lines(lines)
        assert exc_info.value.line == 3

    def test_truncated_record(self):
        with pytest.raises(SpeciesDataError, match="segments manquants"):
            parse_species_lines(N2_BLOCK[:2])

    def test_molar_mass_checked(self):
        lines = [N2_BLOCK[0].replace("28.014", "30.000")] + N2_BLOCK[1:]
        with pytest.raises(SpeciesDataError, match="masse molaire"):
            parse_species_lines(lines)

    def test_single_record_parses(self):
        records = parse_species_lines(N2_BLOCK)
        assert len(records) == 1
        assert records[0].T_min == 200.0
        assert records[0].T_max == 5000.0

    def test_parse_formula(self):
        assert parse_formula("CH4") == {"C": 1, "H": 4}
        assert parse_formula("O2S") == {"O": 2, "S": 1}
        with pytest.raises(InvalidInputError):
            parse_formula("ch4")


class TestReferenceTable:

    @pytest.mark.parametrize("name", sorted(REFERENCE_TABLE))
    def test_tabulated_values(self, db, name):
        """Enthalpies de formation et exergies standard reproduites exactement."""
        h_f0, ex_ch0 = REFERENCE_TABLE[name]
        record = db.get(name)
        assert record.h_f0 == h_f0
        assert record.ex_ch0 == ex_ch0
        assert enthalpy_molar(record, 298.15) == h_f0

    def test_consistent_exergies_of_fuel_gases(self, db, env):
        """Les exergies déduites des fonctions de Gibbs restent proches des valeurs tabulées."""
        assert db.standard_chemical_exergy("CO", env) == pytest.approx(275.1, abs=0.5)
        assert db.standard_chemical_exergy("H2", env) == pytest.approx(236.1, abs=0.5)
        assert db.standard_chemical_exergy("CH4", env) == pytest.approx(831.65, abs=1.0)

    def test_reference_species_keep_tabulated_exergy(self, db, env):
        for name in ("O2", "N2", "CO2", "H2O(g)", "SO2"):
            assert db.standard_chemical_exergy(name, env) == db.get(name).ex_ch0

    def test_tabulated_basis(self, db):
        env = ReferenceEnvironment(exergy_basis="tabulated")
        assert db.standard_chemical_exergy("CO", env) == 275.10


class TestEnthalpyEntropy:

    def test_enthalpy_examples(self, db):
        n2 = db.get("N2")
        assert enthalpy_molar(n2, 298.15) == pytest.approx(0.0, abs=1e-12)
        assert enthalpy_molar(n2, 500.0) - enthalpy_molar(n2, 298.15) == pytest.approx(5.91, abs=0.05)
        assert enthalpy_molar(db.get("CO2"), 298.15) == -393.52

    def test_enthalpy_derivative_is_cp(self, db):
        """dh/dT = cp par différences centrées, sur toute la plage de chaque espèce."""
        rng = np.random.default_rng(42)
        delta = 0.01
        for name in db.names:
            record = db.get(name)
            joints = [segment.T_high for segment in record.segments[:-1]]
            for T in rng.uniform(record.T_min + 0.02, record.T_max - 0.02, size=20):
                if any(abs(T - joint) < 0.05 for joint in joints):
                    continue
                slope = (enthalpy_molar(record, T + delta) - enthalpy_molar(record, T - delta)) / (2 * delta)
                cp = heat_capacity_molar(record, T) / 1000.0
                assert slope == pytest.approx(cp, rel=1e-6), f"{name} à {T:.2f} K"

    def test_standard_entropy_increasing(self, db):
        for name in db.names:
            record = db.get(name)
            grid = np.linspace(record.T_min, record.T_max, 200)
            values = [standard_entropy(record, T) for T in grid]
            assert all(b > a for a, b in zip(values, values[1:])), name

    def test_segments_continuous(self, db):
        """cp à 0,5 %, h et s à 0,1 % aux jonctions de segments."""
        for name in db.names:
            record = db.get(name)
            for left, right in zip(record.segments, record.segments[1:]):
                T = left.T_high
                assert right.cp_over_r(T) == pytest.approx(left.cp_over_r(T), rel=5e-3), name
                assert right.h_over_r(T) == pytest.approx(left.h_over_r(T), rel=1e-3), name
                assert right.s_over_r(T) == pytest.approx(left.s_over_r(T), rel=1e-3), name

    def test_entropy_examples(self, db, env):
        n2 = db.get("N2")
        s_ref = entropy_molar(n2, 298.15, 101.325, env)
        assert s_ref == pytest.approx(191.6, abs=0.5)
        s_half = entropy_molar(n2, 298.15, 101.325 / 2, env)
        assert s_half - s_ref == pytest.approx(RU * math.log(2.0), rel=1e-9)

    def test_liquid_has_no_pressure_term(self, db, env):
        water = db.get("H2O(l)")
        assert entropy_molar(water, 298.15, 10.0, env) == standard_entropy(water, 298.15)

    def test_non_positive_pressure(self, db, env):
        with pytest.raises(InvalidInputError):
            entropy_molar(db.get("N2"), 298.15, 0.0, env)

    def test_out_of_range(self, db):
        with pytest.raises(TemperatureRangeError) as exc_info:
            enthalpy_molar(db.get("N2"), 100.0)
        assert exc_info.value.T_min == 200.0

    def test_gibbs_examples(self, db):
        assert gibbs_molar(db.get("N2"), 298.15) == pytest.approx(-57.13, abs=0.2)
        assert gibbs_molar(db.get("H2O(g)"), 298.15) == pytest.approx(-298.1, abs=0.3)


class TestChemicalExergyAtT:

    @pytest.mark.parametrize("name", sorted(REFERENCE_TABLE))
    def test_identity_at_dead_state(self, db, name):
        record = db.get(name)
        assert chemical_exergy_at_T(record, 298.15) == pytest.approx(record.ex_ch0, rel=1e-12)

    def test_co2_at_twice_dead_state(self, db):
        """(1/2)·19.87 + 393.52/2 = 206.695."""
        assert chemical_exergy_at_T(db.get("CO2"), 596.30) == pytest.approx(206.695, rel=1e-9)

    def test_n2_at_twice_dead_state(self, db):
        assert chemical_exergy_at_T(db.get("N2"), 596.30) == pytest.approx(0.36, rel=1e-9)

    def test_reference_correction_follows_ambient(self, db):
        """Avec la correction activée, l'exergie tabulée est ramenée à T0."""
        warm = ReferenceEnvironment(T0=303.15, correct_reference_exergy=True)
        expected = chemical_exergy_at_T(db.get("CO2"), 303.15)
        assert db.reference_exergy("CO2", warm) == pytest.approx(expected, rel=1e-12)
        assert db.reference_exergy("CO2", ReferenceEnvironment(T0=303.15)) == 19.87


class TestReferenceEnvironment:

    def test_defaults(self, env):
        assert env.T0 == 298.15
        assert env.P0 == 101.325

    def test_air_fractions_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ReferenceEnvironment(air_O2_frac=0.3, air_N2_frac=0.79)
