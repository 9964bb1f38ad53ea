"""Exception types shared across the package.

The CLI maps these onto exit codes: ``ContractError`` -> 2, ``NumericError`` -> 3.
"""


class ContractError(ValueError):
    """Input data or arguments violate an operation's contract."""


class NumericError(ArithmeticError):
    """Training diverged (non-finite loss or parameters)."""


class TranslatorError(RuntimeError):
    """A translator backend failed to translate a text."""

    def __init__(self, message, doc_id=None):
        super().__init__(message if doc_id is None else f"{doc_id}: {message}")
        self.doc_id = doc_id
