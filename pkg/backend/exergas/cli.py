"""
Interface en ligne de commande.

    exergas analyze --fuel oak_wood --er 0.35 --tgas-c 800
    exergas sweep --preset fig3 --out fig3.csv
    exergas fuels list
    exergas props --species CO2 --t 500

Codes de sortie : 0 succès, 2 entrée invalide, 3 échec de convergence.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .exceptions import ConvergenceError, ExergasError, ModelInconsistencyError, SweepError
from .fuel_model import fuels_table, load_fuel
from .gasifier_core import (
    Closure,
    GasifierSpec,
    build_reaction_inputs,
    solve_outlet_temperature,
)
from .settings import P0_DEFAULT, Settings, celsius_to_kelvin, get_settings, kelvin_to_celsius, setup_logging
from .sweep import (
    PRESETS,
    SweepConfig,
    SweepParameter,
    emit_csv,
    load_sweep_config,
    run_analysis,
    run_sweep,
    write_summary,
)
from .thermo_props import (
    ReferenceEnvironment,
    SpeciesDatabase,
    chemical_exergy_at_T,
    default_database,
    enthalpy_molar,
    entropy_molar,
    gibbs_molar,
    heat_capacity_molar,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exergas",
        description="Simulation énergétique et exergétique de la gazéification de biomasse",
        allow_abbrev=False,
    )
    parser.add_argument("--log-level", default=settings.log_level, help="Niveau de journalisation")
    parser.add_argument("--log-file", type=Path, default=settings.log_file, help="Fichier de log")
    parser.add_argument("--species-db", type=Path, default=settings.species_db_path,
                        help="Fichier de données des espèces")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="Analyse d'un point de fonctionnement")
    analyze.add_argument("--fuel", default="oak_wood", help="Combustible intégré ou fichier JSON")
    analyze.add_argument("--er", type=float, default=settings.default_equivalence_ratio,
                         help="Rapport d'équivalence")
    analyze.add_argument("--tgas-c", type=float, default=800.0, help="Température du gazéifieur (°C)")
    analyze.add_argument("--t0-c", type=float, default=25.0, help="Température ambiante (°C)")
    analyze.add_argument("--p-kpa", type=float, default=P0_DEFAULT, help="Pression du gazéifieur (kPa)")
    analyze.add_argument("--heat-loss", type=float, default=settings.heat_loss_fraction,
                         help="Pertes thermiques / énergie du combustible")
    analyze.add_argument("--moisture", type=float, default=None,
                         help="Humidité (kg/kg sec), par défaut celle du combustible")
    analyze.add_argument("--cold-gas-only", action="store_true", help="Produit utile = gaz froid seul")
    analyze.add_argument("--closure", choices=[c.value for c in Closure], default=Closure.GAS_PHASE.value)
    analyze.add_argument("--basis", choices=["consistent", "tabulated"], default=settings.exergy_basis,
                         help="Base des exergies chimiques standard")
    analyze.add_argument("--find-temperature", action="store_true",
                         help="Cherche la température de sortie compatible avec les pertes")
    analyze.add_argument("--json", action="store_true", help="Sortie JSON")

    sweep = sub.add_parser("sweep", help="Balayage paramétrique 1-D")
    source = sweep.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=sorted(PRESETS), help="Balayage prédéfini")
    source.add_argument("--config", type=Path, help="Configuration JSON")
    source.add_argument("--param", choices=[p.value for p in SweepParameter], help="Paramètre balayé")
    sweep.add_argument("--lo", type=float)
    sweep.add_argument("--hi", type=float)
    sweep.add_argument("--count", type=int)
    sweep.add_argument("--fuel", default=None)
    sweep.add_argument("--out", type=Path, default=None, help="Fichier CSV de sortie")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--cold-gas-only", action="store_true")

    fuels = sub.add_parser("fuels", help="Combustibles intégrés")
    fuels.add_argument("action", choices=["list"])

    props = sub.add_parser("props", help="Propriétés d'une espèce")
    props.add_argument("--species", required=True)
    props.add_argument("--t", type=float, required=True, help="Température (K)")
    props.add_argument("--p-kpa", type=float, default=P0_DEFAULT, help="Pression partielle (kPa)")

    return parser


def _print_result(result) -> None:
    fractions = result.mole_fractions()
    print(f"\n📊 {result.fuel_name} | T={kelvin_to_celsius(result.spec.T_gasifier):.1f} °C | "
          f"ER={result.spec.equivalence_ratio:.3f} | w={result.spec.moisture_w:.4f}")
    print("Composition du gaz (fraction molaire) :")
    for name, z in fractions.items():
        print(f"  {name:<7} {z:.5f}")
    print(f"PCI du gaz          : {result.gas_lhv.per_kmol:.2f} MJ/kmol")
    print(f"Chaleur échangée    : {result.energy.heat_duty:.2f} kW")
    print(f"Exergie entrante    : {result.balance.exergy_in:.2f} kW")
    print(f"Exergie sortante    : {result.balance.exergy_out:.2f} kW")
    print(f"Exergie détruite    : {result.balance.destruction:.2f} kW")
    print(f"Entropie générée    : {result.balance.entropy_generation:.5f} kW/K")
    print(f"Rendement énergétique η : {result.eta:.4f}")
    print(f"Rendement exergétique ψ : {result.psi:.4f}")
    for message in result.warnings:
        print(f"⚠️ {message}")


def _cmd_analyze(args, db: SpeciesDatabase, settings: Settings) -> int:
    fuel = load_fuel(args.fuel, settings.fuels_db_path)
    moisture = fuel.moisture_w if args.moisture is None else args.moisture
    env = ReferenceEnvironment(T0=celsius_to_kelvin(args.t0_c), exergy_basis=args.basis)
    spec = GasifierSpec(
        T_gasifier=celsius_to_kelvin(args.tgas_c),
        P=args.p_kpa,
        equivalence_ratio=args.er,
        heat_loss_fraction=args.heat_loss,
        moisture_w=moisture,
        closure=Closure(args.closure),
    )
    if args.find_temperature:
        inputs = build_reaction_inputs(fuel.elemental_moles(), spec)
        T, _, _ = solve_outlet_temperature(inputs, spec, fuel, env, db)
        spec = spec.model_copy(update={"T_gasifier": T})

    result = run_analysis(fuel, spec, env, db, cold_gas_only=args.cold_gas_only,
                          T_stack=settings.t_stack_k)
    if args.json:
        print(json.dumps(result.to_dict(), ensure_ascii=False, indent=2))
    else:
        _print_result(result)
    return EXIT_OK


def _sweep_config(args, settings: Settings) -> SweepConfig:
    if args.preset:
        config = PRESETS[args.preset]
    elif args.config:
        config = load_sweep_config(args.config)
    else:
        if args.lo is None or args.hi is None or args.count is None:
            raise ValueError("--param exige --lo, --hi et --count")
        config = SweepConfig(parameter=SweepParameter(args.param), lo=args.lo, hi=args.hi, count=args.count)

    updates = {}
    if args.fuel:
        updates["fuel"] = args.fuel
    if args.out:
        updates["output"] = args.out
    if args.cold_gas_only:
        updates["cold_gas_only"] = True
    workers = args.workers if args.workers is not None else settings.workers
    if workers != config.workers:
        updates["workers"] = workers
    if updates:
        config = SweepConfig(**{**config.model_dump(), **updates})
    if config.output is None:
        raise ValueError("Fichier de sortie requis (--out ou 'output' dans la configuration)")
    return config


def _cmd_sweep(args, db: SpeciesDatabase, settings: Settings) -> int:
    config = _sweep_config(args, settings)
    outcome = run_sweep(config, db, settings.fuels_db_path)
    csv_path = emit_csv(outcome.points, config.output)
    summary_path = write_summary(outcome, csv_path)
    print(f"✅ {len(outcome.results)}/{len(outcome.points)} points convergés")
    for note in outcome.trend.notes:
        print(f"📌 {note}")
    print(f"💾 {csv_path} | {summary_path}")
    return EXIT_OK


def _cmd_fuels(db: SpeciesDatabase, settings: Settings) -> int:
    table = fuels_table(settings.fuels_db_path, db)
    for row in table.itertuples(index=False):
        print(f"{row.fuel:<14} PCS={row.HHV_MJ_per_kg:6.2f}  PCI={row.LHV_MJ_per_kg:6.2f} MJ/kg  "
              f"β={row.beta:.4f}  ex/PCI={row.ex_over_LHV:.3f}  ex/PCS={row.ex_over_HHV:.3f}  "
              f"w={row.moisture_w:.3f} kg/kg")
    return EXIT_OK


def _cmd_props(args, db: SpeciesDatabase) -> int:
    sp = db.get(args.species)
    env = ReferenceEnvironment()
    print(f"{sp.name} à {args.t:.2f} K, {args.p_kpa:.3f} kPa")
    print(f"  cp  = {heat_capacity_molar(sp, args.t):.4f} J/(mol·K)")
    print(f"  h   = {enthalpy_molar(sp, args.t):.4f} kJ/mol")
    print(f"  s   = {entropy_molar(sp, args.t, args.p_kpa, env):.4f} J/(mol·K)")
    print(f"  g°  = {gibbs_molar(sp, args.t):.4f} kJ/mol")
    print(f"  ex  = {chemical_exergy_at_T(sp, args.t, env):.4f} kJ/mol")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    args = build_parser(settings).parse_args(argv)
    setup_logging(args.log_level, args.log_file)

    try:
        db = default_database(str(args.species_db))
        if args.command == "analyze":
            return _cmd_analyze(args, db, settings)
        if args.command == "sweep":
            return _cmd_sweep(args, db, settings)
        if args.command == "fuels":
            return _cmd_fuels(db, settings)
        return _cmd_props(args, db)
    except (ConvergenceError, ModelInconsistencyError, SweepError) as e:
        logger.error(f"❌ {e}")
        return EXIT_CONVERGENCE
    except (ValueError, FileNotFoundError, ExergasError) as e:
        logger.error(f"❌ {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
