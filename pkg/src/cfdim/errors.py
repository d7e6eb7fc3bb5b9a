"""Exception hierarchy.  Every module error derives from :class:`CfdimError`."""


class CfdimError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    code = "error"

    def __init__(self, message: str = "", **context):
        super().__init__(message)
        self.context = context

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        for key, val in self.context.items():
            out[key] = list(val) if isinstance(val, tuple) else val
        return out


def _make(name: str, code: str, base=CfdimError):
    return type(name, (base,), {"code": code, "__doc__": code.replace("_", " ")})


EmptyWord = _make("EmptyWord", "empty_word")
InvalidDigit = _make("InvalidDigit", "invalid_digit")
RationalTermination = _make("RationalTermination", "rational_termination")
PrecisionExhausted = _make("PrecisionExhausted", "precision_exhausted")
UndefinedAtZero = _make("UndefinedAtZero", "undefined_at_zero")
DomainError = _make("DomainError", "domain_error")
NoWitnessFound = _make("NoWitnessFound", "no_witness_found")
ZeroMassEncountered = _make("ZeroMassEncountered", "zero_mass_encountered")
InfiniteEntropy = _make("InfiniteEntropy", "infinite_entropy")
InfiniteLogMoment = _make("InfiniteLogMoment", "infinite_log_moment")
PathTooShort = _make("PathTooShort", "path_too_short")
InsufficientData = _make("InsufficientData", "insufficient_data")
OrbitHitsZero = _make("OrbitHitsZero", "orbit_hits_zero")
UndefinedAtBranchEnd = _make("UndefinedAtBranchEnd", "undefined_at_branch_end")
ConditionViolated = _make("ConditionViolated", "condition_violated")
NotConverged = _make("NotConverged", "not_converged")
DensityNotPositive = _make("DensityNotPositive", "density_not_positive")
BranchOutOfRange = _make("BranchOutOfRange", "branch_out_of_range")
ConfigError = _make("ConfigError", "config_error")
