"""Exception types shared across the package."""


class Curv4Error(Exception):
    pass


class ExprSyntaxError(Curv4Error):
    """Parse failure; ``position`` is the 1-based byte offset."""

    def __init__(self, position, message):
        self.position = position
        self.message = message
        super().__init__(f"syntax error at position {position}: {message}")


class UnknownIdentifier(ExprSyntaxError):
    def __init__(self, position, name):
        self.name = name
        super().__init__(position, f"unknown identifier {name!r}")


class DomainError(Curv4Error, ArithmeticError):
    """An expression was evaluated outside its domain (log/sqrt/division)."""


class NotPositiveDefinite(Curv4Error):
    def __init__(self, point, smallest):
        self.point = point
        self.smallest = smallest
        super().__init__(f"metric not positive definite at {point}: smallest eigenvalue {smallest:.3e}")


class NotDecomposable(Curv4Error):
    pass


class ZeroForm(Curv4Error):
    pass


class NotUnit(Curv4Error):
    pass


class NotSelfDual(Curv4Error):
    pass


class NotAntiSelfDual(Curv4Error):
    pass


class NotNormalized(Curv4Error):
    pass


class VanishingForm(Curv4Error):
    pass


class MixedDuality(Curv4Error):
    pass


class DegeneratePlane(Curv4Error):
    pass


class EmptySample(Curv4Error):
    pass


class UnknownModel(Curv4Error):
    pass


class BadParams(Curv4Error):
    pass


class ConfigError(Curv4Error):
    def __init__(self, message, key=None, line=None, position=None):
        self.key = key
        self.line = line
        self.position = position
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"position {position}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
