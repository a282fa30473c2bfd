"""Exception hierarchy for the fisheyedist package."""


class FisheyeDistError(Exception):
    """Base class for all package-specific errors."""


# --- camera model ---

class DegenerateProjection(FisheyeDistError):
    """3D point lies outside the forward model's field of view."""


class NoPreimage(FisheyeDistError):
    """Pixel does not correspond to any ray with positive z."""


class InvalidHeight(FisheyeDistError):
    """Person height is outside (0, 2B)."""


class SingularFit(FisheyeDistError):
    """Calibration problem is under-determined or geometrically degenerate."""


# --- center adjustment ---

class OvershootsCenter(FisheyeDistError):
    """Radial displacement exceeds the distance to the image center."""


class UndefinedDirection(FisheyeDistError):
    """Box center coincides with the image center; radial direction undefined."""


# --- synthetic scenes ---

class GridOutsideFov(FisheyeDistError):
    """A grid corner does not project into the image."""


class PersonOutsideFov(FisheyeDistError):
    """A virtual person's reference points do not project into the image."""


# --- training ---

class DivergedTraining(FisheyeDistError):
    """Training loss became non-finite."""


# --- metrics ---

class EmptyCategory(FisheyeDistError):
    """Metric requested over an empty set of pairs."""


# --- file I/O ---

class ParseError(FisheyeDistError):
    """Input file could not be parsed."""


class ValidationError(FisheyeDistError):
    """Parsed input violates a structural constraint."""
