"""Left-invariant coframes on SU(3) and SU(2) and their invariant forms."""

from __future__ import annotations

from functools import lru_cache

from .exterior import Coframe, Form, d, interior

__all__ = [
    "SU3_STRUCTURE", "SU2_STRUCTURE", "su3_coframe", "su2_coframe",
    "invariant_two_forms", "is_basic",
]

# d(theta_a) for a basis of su(3) adapted to U(1) < SU(3); theta_1 spans the
# isotropy, theta_2..4 the su(2) directions and theta_5..8 the rest.
SU3_STRUCTURE = {
    "t1": [(-1, "t5", "t6"), (1, "t7", "t8")],
    "t2": [(-2, "t3", "t4"), (-1, "t5", "t6"), (-1, "t7", "t8")],
    "t3": [(2, "t2", "t4"), (-1, "t5", "t7"), (1, "t6", "t8")],
    "t4": [(-2, "t2", "t3"), (-1, "t5", "t8"), (-1, "t6", "t7")],
    "t5": [(3, "t1", "t6"), (1, "t2", "t6"), (1, "t3", "t7"), (1, "t4", "t8")],
    "t6": [(-3, "t1", "t5"), (-1, "t2", "t5"), (-1, "t3", "t8"), (1, "t4", "t7")],
    "t7": [(-3, "t1", "t8"), (1, "t2", "t8"), (-1, "t3", "t5"), (-1, "t4", "t6")],
    "t8": [(3, "t1", "t7"), (-1, "t2", "t7"), (1, "t3", "t6"), (-1, "t4", "t5")],
}

# d(eta_i) = eta_j ^ eta_k for cyclic (i, j, k)
SU2_STRUCTURE = {
    "e1": [(1, "e2", "e3")],
    "e2": [(1, "e3", "e1")],
    "e3": [(1, "e1", "e2")],
}


@lru_cache(maxsize=None)
def su3_coframe(radial: bool = True) -> Coframe:
    labels = (["dr"] if radial else []) + [f"t{i}" for i in range(1, 9)]
    return Coframe(labels, SU3_STRUCTURE, "dr" if radial else None,
                   "su3+dr" if radial else "su3")


@lru_cache(maxsize=None)
def su2_coframe(radial: bool = True) -> Coframe:
    labels = (["dr"] if radial else []) + ["e1", "e2", "e3"]
    return Coframe(labels, SU2_STRUCTURE, "dr" if radial else None,
                   "su2+dr" if radial else "su2")


def invariant_two_forms(space: str) -> dict[str, Form]:
    """Constant-coefficient invariant 2-forms.

    ``space`` is ``"tcp2"`` (SU(3)/U(1) times a line, ten forms) or ``"eh"``
    (SU(2) times a line, six forms).
    """
    if space == "tcp2":
        cf = su3_coframe(True)
        e = cf.e
        return {
            "dr^t2": e("dr", "t2"),
            "dr^t3": e("dr", "t3"),
            "dr^t4": e("dr", "t4"),
            "t3^t4": e("t3", "t4"),
            "t2^t4": e("t2", "t4"),
            "t2^t3": e("t2", "t3"),
            "t5^t6": e("t5", "t6"),
            "t7^t8": e("t7", "t8"),
            "sigma2": e("t5", "t7") + e("t8", "t6"),
            "sigma3": e("t5", "t8") + e("t6", "t7"),
        }
    if space == "eh":
        cf = su2_coframe(True)
        e = cf.e
        return {
            "dr^e1": e("dr", "e1"),
            "dr^e2": e("dr", "e2"),
            "dr^e3": e("dr", "e3"),
            "e2^e3": e("e2", "e3"),
            "e3^e1": e("e3", "e1"),
            "e1^e2": e("e1", "e2"),
        }
    raise ValueError(f"unknown space {space!r}")


def is_basic(form: Form, label: str = "t1") -> bool:
    """True if ``form`` is horizontal and invariant for the isotropy
    direction ``label``, i.e. both it and its derivative avoid that label."""
    if not interior(label, form).is_zero():
        return False
    if form.symbolic:
        return interior(label, d(form)).is_zero()
    return True
