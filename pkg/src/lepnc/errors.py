"""Exception hierarchy shared by all lepnc modules."""


class LepncError(Exception):
    """Base class for all errors raised by this package."""


class MeshError(LepncError):
    pass


class NotStarShaped(MeshError):
    def __init__(self, cell, face=None):
        self.cell = cell
        self.face = face
        msg = f"cell {cell} is not strictly star-shaped w.r.t. its center"
        if face is not None:
            msg += f" (face {face})"
        super().__init__(msg)


class NonManifoldFace(MeshError):
    pass


class DegenerateCell(MeshError):
    pass


class ParseError(MeshError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedDegree(LepncError):
    pass


class DegenerateVertexSet(LepncError):
    pass


class PointOutsideCell(LepncError):
    pass


class PointOutsideDomain(LepncError):
    pass


class SingularGram(LepncError):
    pass


class NonSymmetric(LepncError):
    pass


class SingularCellBlock(LepncError):
    pass


class SolverBreakdown(LepncError):
    pass


class EigenFailure(LepncError):
    pass


class ZeroDenominator(LepncError):
    pass


class ConventionError(LepncError):
    pass


class NewtonDiverged(LepncError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)
