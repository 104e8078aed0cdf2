"""Exception types shared across the package."""


class TextPolyError(Exception):
    """Base class for all textpoly errors."""


class DegenerateRect(TextPolyError):
    """Rectangle clips to zero area against the image bounds."""


class DegeneratePolygon(TextPolyError):
    """Fewer than 3 distinct vertices, or zero signed area."""


class FormatError(TextPolyError):
    """Malformed image file (bad magic, header, or truncated raster)."""


class PointOutOfBounds(TextPolyError):
    """Seed point lies outside the image."""


class EmptyAnchorList(TextPolyError):
    """Anchor selection called with no candidates."""


class SingularSystem(TextPolyError):
    """TPS linear system is singular (collinear or duplicated control points)."""


class EmptySpan(TextPolyError):
    """No attended column survives binarization."""


class OracleUnregistered(TextPolyError):
    """Oracle recognizer used before any ground truth was registered."""


class InstanceOutOfCanvas(TextPolyError):
    """A text instance does not fit inside the scene canvas."""


class UnknownCharacter(TextPolyError):
    """Character outside the glyph atlas alphabet."""


class SchemaError(TextPolyError):
    """Annotation manifest violates the schema."""
