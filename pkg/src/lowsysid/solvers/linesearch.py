"""Scalar step search used when a rank-one component is appended."""
from __future__ import annotations

from typing import Callable


def amplitude_search(phi: Callable[[float], float], t0: float, max_doublings: int = 60) -> tuple[float, float]:
    """Minimize ``phi`` over ``t >= 0``.

    ``t0`` is shrunk until ``phi(t0) < phi(0)``, then doubled while ``phi``
    keeps decreasing; golden-section search finishes on ``[0, 2 t_hi]``.
    Returns ``(t*, phi(t*))``; ``t* = 0`` when no decrease was found.
    """
    from ..certificates import golden_section

    f0 = phi(0.0)
    hi = t0
    while phi(hi) >= f0:
        hi /= 4.0
        if hi < 1e-14 * t0:
            return 0.0, f0
    f_hi = phi(hi)
    for _ in range(max_doublings):
        f_next = phi(2.0 * hi)
        if f_next >= f_hi:
            break
        hi, f_hi = 2.0 * hi, f_next
    t, ft = golden_section(phi, 0.0, 2.0 * hi, tol=1e-7 * hi, max_eval=120)
    if ft >= f0:
        return 0.0, f0
    return t, ft
