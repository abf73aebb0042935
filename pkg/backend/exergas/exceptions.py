"""Hiérarchie d'erreurs et d'avertissements du simulateur."""

from typing import Any, Dict, Optional, Sequence, Tuple


class ExergasError(Exception):
    """Erreur de base du paquet."""


class InvalidInputError(ExergasError, ValueError):
    """Entrée hors du domaine de validité d'une opération."""


class SpeciesDataError(InvalidInputError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"ligne {line}: {message}"
        super().__init__(message)


class MissingSpeciesError(InvalidInputError):
    def __init__(self, species: str, message: Optional[str] = None):
        self.species = species
        super().__init__(message or f"Espèce absente de la base: {species}")


class TemperatureRangeError(InvalidInputError):
    def __init__(self, species: str, T: float, T_min: float, T_max: float):
        self.species = species
        self.T = T
        self.T_min = T_min
        self.T_max = T_max
        super().__init__(
            f"{species}: T={T:.2f} K hors de la plage [{T_min:.2f}, {T_max:.2f}] K"
        )


class InvalidFuelError(InvalidInputError):
    """Données de combustible physiquement impossibles."""


class ConvergenceError(ExergasError):
    def __init__(self, message: str, residual: float, iterations: int,
                 inputs: Optional[Dict[str, Any]] = None):
        self.message = message
        self.residual = residual
        self.iterations = iterations
        self.inputs = dict(inputs or {})
        super().__init__(message)

    def with_inputs(self, inputs: Dict[str, Any]) -> "ConvergenceError":
        """Retourne une copie enrichie de l'écho des entrées."""
        return ConvergenceError(self.message, self.residual, self.iterations,
                                {**self.inputs, **inputs})

    def __str__(self) -> str:
        text = f"{self.message} (résidu={self.residual:.3e}, itérations={self.iterations})"
        if self.inputs:
            echo = ", ".join(f"{k}={v}" for k, v in self.inputs.items())
            text = f"{text} [{echo}]"
        return text


class InfeasibleCompositionError(ExergasError):
    def __init__(self, species: Sequence[str], message: Optional[str] = None):
        self.species: Tuple[str, ...] = tuple(species)
        super().__init__(
            message or f"Composition infaisable pour: {', '.join(self.species)}"
        )


class ModelInconsistencyError(ExergasError):
    """Bilan contradictoire (destruction d'exergie négative)."""


class SweepError(ExergasError):
    """Tous les points d'un balayage ont échoué."""


class ExergasWarning(UserWarning):
    pass


class CorrelationValidityWarning(ExergasWarning):
    """Corrélation utilisée hors de son domaine de validité."""


class PlausibilityWarning(ExergasWarning):
    """Valeur calculée hors des plages usuelles de la biomasse."""


class BalanceWarning(ExergasWarning):
    """Écart entre destruction d'exergie et T0·S_gen."""
