class SpecError(ValueError):
    """Invalid model spec, parameters or arguments (CLI exit code 2)."""


class InfeasibleSpecError(SpecError):
    """The requested edge/arc count cannot be placed on the positive-mass support."""


class SizeCapError(SpecError):
    """An exhaustive computation would exceed the configured combinatorial cap."""


class DegenerateRealizationError(SpecError):
    """A realized vertex vector leaves some channel count at zero."""


class SamplerDiagnosticError(RuntimeError):
    """A rejection loop hit its iteration cap."""


class DegenerateCoupling(RuntimeError):
    """Rule I/III of the selection coupling found no fresh edge to place.

    Carries the partial trace so harnesses can count and report it.
    """

    def __init__(self, message: str, step: int, psi: list, rule_counts: dict):
        super().__init__(message)
        self.step = step
        self.psi = psi
        self.rule_counts = rule_counts
