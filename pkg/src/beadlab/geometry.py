"""Sphere-pair scene shared by the scattering, colloid, and hydro layers."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class SpherePairGeometry:
    """Two spheres on a common axis, described by radii and surface gap.

    Parameters
    ----------
    R1 : float
        Probe sphere radius [m].
    R2 : float
        Partner sphere radius [m].
    L : float
        Surface-to-surface gap [m].
    T : float
        Temperature [K].
    center_distance : float, optional
        Distance between sphere centers [m].  Computed as L + R1 + R2
        when omitted; if given it must equal that sum exactly.
    """

    R1: float
    R2: float
    L: float
    T: float = 296.0
    center_distance: float | None = None

    def __post_init__(self):
        if self.R1 <= 0.0 or self.R2 <= 0.0 or self.L <= 0.0:
            raise DomainError("radii and gap must be > 0")
        if self.T <= 0.0:
            raise DomainError("temperature must be > 0")
        expected = self.L + self.R1 + self.R2
        if self.center_distance is None:
            object.__setattr__(self, "center_distance", expected)
        elif self.center_distance != expected:
            raise DomainError(
                f"center_distance {self.center_distance!r} != L + R1 + R2 = {expected!r}"
            )

    def with_gap(self, L: float) -> "SpherePairGeometry":
        """Same spheres at a different surface gap."""
        return SpherePairGeometry(self.R1, self.R2, L, self.T)

    @property
    def effective_radius(self) -> float:
        """R1 R2/(R1 + R2), the Derjaguin mapping radius."""
        return self.R1 * self.R2 / (self.R1 + self.R2)
