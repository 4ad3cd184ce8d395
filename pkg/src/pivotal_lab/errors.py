class UsageError(ValueError):
    """Caller handed us something malformed (bad arity, range, or option)."""


class ExhaustiveCapError(UsageError):
    """An exhaustive scan was requested above its arity cap."""

    def __init__(self, what: str, n: int, cap: int, hint: str = ""):
        msg = f"{what} is exhaustive and capped at n <= {cap}, got n = {n}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)
        self.n = n
        self.cap = cap
