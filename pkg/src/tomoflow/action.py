"""Group actions of deformations on images."""

from __future__ import annotations

import enum
from typing import TYPE_CHECKING

from .grid import ScalarImage

if TYPE_CHECKING:
    from .flow import FlowChain


class GroupAction(enum.Enum):
    """How a deformation acts on an image.

    GEOMETRIC moves intensities without rescaling them (composition with
    the inverse deformation); MASS_PRESERVING additionally multiplies by
    the Jacobian determinant so the total integral is conserved.
    """

    GEOMETRIC = "geometric"
    MASS_PRESERVING = "mass-preserving"

    @classmethod
    def parse(cls, name: str) -> "GroupAction":
        for a in cls:
            if a.value == name:
                return a
        raise ValueError(f"unknown group action {name!r}; use 'geometric' or 'mass-preserving'")


def deform(action: GroupAction, chain: "FlowChain") -> ScalarImage:
    """Final deformed template of a fully advanced flow chain."""
    n = chain.n_steps
    if len(chain.transported_template) != n + 1:
        raise ValueError("flow chain is not fully advanced")
    final = chain.transported_template[n]
    if action is GroupAction.GEOMETRIC:
        return final
    if chain.jacobian_to_zero is None:
        raise ValueError("mass-preserving deform needs a chain built with jacobian_to_zero")
    return ScalarImage(final.grid, chain.jacobian_to_zero[n].values * final.values)
