"""Exception types shared across the package.

Two families matter to callers: input problems (bad files, bad shapes,
bad parameters) and numeric problems (degenerate steps, non-finite
values, conditioning failures). The CLI maps the first family to exit
code 1 and the second to exit code 2.
"""


class DimensionError(ValueError):
    """Array shapes are inconsistent with the declared geometry."""


class DataError(ValueError):
    """Dataset content is unusable: empty, unparseable, or mislabeled."""


class SchemaError(ValueError):
    """A model file or config does not match the expected schema."""


class DomainError(ValueError):
    """Inputs violate a mathematical domain requirement (e.g. negative
    features passed to an additive histogram kernel)."""


class DegenerateStepError(RuntimeError):
    """A retraction hit a rank-deficient argument; the step cannot be
    completed and the caller should shrink it."""


class NumericError(RuntimeError):
    """A non-finite objective value or gradient appeared at an iterate."""


class ConditioningError(RuntimeError):
    """Jitter escalation exhausted without reaching positive definiteness."""


class PositiveDefiniteError(RuntimeError):
    """A matrix required to be symmetric positive definite is not."""


# Families used by the CLI exit-code mapping.
INPUT_ERRORS = (DimensionError, DataError, SchemaError, DomainError)
NUMERIC_ERRORS = (
    DegenerateStepError,
    NumericError,
    ConditioningError,
    PositiveDefiniteError,
)
