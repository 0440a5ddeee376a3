"""Werner-state fidelity of entanglement distributed over a chain of swaps.

Every elementary link is prepared as a Werner pair with the same fidelity
``f``.  Joining two segments by an entanglement swap at a node with noise
rate ``eta`` multiplies the product of the segment Werner parameters by
``(4 * eta**2 - 1) / 3``.  Folding that step over a whole path gives a
closed form for the end-to-end fidelity: with ``N`` intermediate nodes the
chain uses ``N + 1`` links, and

    F_N = 1/4 * (1 + 3 * prod_g(nu_g ** N_g) * w ** (N + 1))

where ``w`` is the link Werner parameter, ``nu_g`` the swap factor of node
class ``g`` and ``N_g`` the number of path nodes in that class.

The noise rate must exceed 0.5 and the link fidelity must exceed 0.25,
otherwise the swap chain has no entanglement left to track.  A direct
consequence used throughout the tests: every end-to-end fidelity stays
strictly above 1/4, however long the path.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

__all__ = [
    "MIN_LINK_FIDELITY",
    "MIN_NOISE_RATE",
    "NoiseClass",
    "PathComposition",
    "end_to_end_fidelity",
    "iterate_swaps",
    "swap_noise_factor",
    "two_class_fidelity",
    "werner_fidelity",
    "werner_parameter",
]

MIN_LINK_FIDELITY = 0.25
MIN_NOISE_RATE = 0.5


def werner_parameter(fidelity: float) -> float:
    """Return the Werner parameter ``(4f - 1) / 3`` of a pair with fidelity ``f``."""
    if not MIN_LINK_FIDELITY < fidelity <= 1.0:
        raise ValueError(
            f"link fidelity must lie in ({MIN_LINK_FIDELITY}, 1], got {fidelity}"
        )
    return (4.0 * fidelity - 1.0) / 3.0


def werner_fidelity(w: float) -> float:
    """Return the fidelity ``(1 + 3w) / 4`` of a Werner pair with parameter ``w``."""
    return (1.0 + 3.0 * w) / 4.0


def swap_noise_factor(eta: float) -> float:
    """Return the Werner-parameter contraction ``(4*eta**2 - 1) / 3`` of one swap.

    ``eta`` is the noise rate of the node performing the swap; a perfect node
    (``eta = 1``) contracts by exactly 1, i.e. not at all.
    """
    if not MIN_NOISE_RATE < eta <= 1.0:
        raise ValueError(f"noise rate must lie in ({MIN_NOISE_RATE}, 1], got {eta}")
    return (4.0 * eta * eta - 1.0) / 3.0


@dataclass(frozen=True)
class NoiseClass:
    """A node quality class: a label plus the swap noise rate of its members."""

    label: str
    eta: float

    def __post_init__(self) -> None:
        if not MIN_NOISE_RATE < self.eta <= 1.0:
            raise ValueError(
                f"noise rate must lie in ({MIN_NOISE_RATE}, 1], got {self.eta}"
            )


@dataclass(frozen=True, eq=True)
class PathComposition:
    """How many path-interior nodes of each noise class a route crosses.

    Endpoints do not swap and are not counted.  ``total_nodes`` is the number
    of swaps performed along the route; the route then spans
    ``total_nodes + 1`` elementary links.
    """

    class_counts: Mapping[NoiseClass, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "class_counts", dict(self.class_counts))
        for cls, count in self.class_counts.items():
            if count < 0 or count != int(count):
                raise ValueError(f"node count for {cls.label} must be a non-negative integer")

    @property
    def total_nodes(self) -> int:
        return sum(self.class_counts.values())


def end_to_end_fidelity(composition: PathComposition, link_fidelity: float) -> float:
    """Closed-form fidelity of the pair delivered across a swap chain.

    ``composition`` gives the per-class counts of intermediate nodes and
    ``link_fidelity`` the common fidelity of every elementary link.
    """
    w = werner_parameter(link_fidelity) ** (composition.total_nodes + 1)
    for cls, count in composition.class_counts.items():
        w *= swap_noise_factor(cls.eta) ** count
    return werner_fidelity(w)


def two_class_fidelity(
    n_h: int,
    n_l: int,
    eta_h: float,
    eta_l: float,
    link_fidelity: float,
) -> float:
    """End-to-end fidelity over ``n_h`` high-quality and ``n_l`` low-quality nodes.

    Spelled out for the two-class networks studied here:

        F = 1/4 * (1 + 3 * nu_h**n_h * nu_l**n_l * w**(n_h + n_l + 1))
    """
    if n_h < 0 or n_l < 0:
        raise ValueError("node counts must be non-negative")
    nu_h = swap_noise_factor(eta_h)
    nu_l = swap_noise_factor(eta_l)
    w = werner_parameter(link_fidelity)
    return 0.25 * (1.0 + 3.0 * nu_h**n_h * nu_l**n_l * w ** (n_h + n_l + 1))


def iterate_swaps(node_etas: Iterable[float], link_fidelity: float) -> float:
    """Fidelity after swapping one node at a time, with no closed form.

    Starts from a single link and merges one further link per node, tracking
    the Werner parameter of the growing segment.  Serves as an independent
    cross-check of :func:`end_to_end_fidelity`; the two must agree to within
    floating-point error for any node ordering.
    """
    w_link = werner_parameter(link_fidelity)
    w = w_link
    for eta in node_etas:
        w = swap_noise_factor(eta) * w * w_link
    return werner_fidelity(w)
