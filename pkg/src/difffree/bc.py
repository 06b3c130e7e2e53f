"""Wall-condition families shared by every solver."""

from __future__ import annotations

import enum


class BoundaryCondition(enum.Enum):
    """Wall condition family.

    NO_SLIP         u = 0 on the wall.
    STRESS_FREE     zero tangential stress; on a flat wall ``d_n u = 0``, and in
                    vorticity form ``omega = 0`` (identical to Lions' condition).
    DIFFUSION_FREE  tangential part of the viscous term vanishes on the wall:
                    ``d_nn u = 0`` for the 1D shear model, ``d_n omega = 0`` in 2D.
    """

    NO_SLIP = "noslip"
    STRESS_FREE = "stressfree"
    DIFFUSION_FREE = "difffree"

    @classmethod
    def parse(cls, name: str | "BoundaryCondition") -> "BoundaryCondition":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "noslip": cls.NO_SLIP,
            "dirichlet": cls.NO_SLIP,
            "stressfree": cls.STRESS_FREE,
            "freeslip": cls.STRESS_FREE,
            "lions": cls.STRESS_FREE,
            "difffree": cls.DIFFUSION_FREE,
            "diffusionfree": cls.DIFFUSION_FREE,
            "neumann": cls.DIFFUSION_FREE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown boundary condition {name!r}") from None

    @property
    def label(self) -> str:
        return self.value
