"""Parameter-indexed Hamiltonian families ``x -> H(x)``.

Three kinds are supported:

* ``multiplicative``: ``H(x) = x * H``
* ``direction_field``: ``H(x) = B (cos x sigma_1 + sin x sigma_3)``
* ``trig_matrix``: ``H(x) = A0 + sum_k A_k cos(kx) + B_k sin(kx)``

Families serialise to a plain record (``to_spec``/``from_spec``) with matrix
entries written as ``[re, im]`` pairs, which is what the CLI config reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .constants import SIGMA_1, SIGMA_3
from .errors import InvalidMatrixError
from .matcore import as_hermitian, expm_i, hermitian_eig

KINDS = ("multiplicative", "direction_field", "trig_matrix")


@dataclass(frozen=True, eq=False)
class HamiltonianFamily:
    kind: str
    dim: int
    base: np.ndarray | None = None
    field_strength: float | None = None
    a0: np.ndarray | None = None
    cos_terms: tuple[np.ndarray, ...] = field(default_factory=tuple)
    sin_terms: tuple[np.ndarray, ...] = field(default_factory=tuple)

    @classmethod
    def multiplicative(cls, h) -> HamiltonianFamily:
        h = as_hermitian(h)
        return cls("multiplicative", h.shape[-1], base=h)

    @classmethod
    def direction_field(cls, b: float = 1.0) -> HamiltonianFamily:
        if not b > 0:
            raise ValueError(f"field strength must be positive, got {b}")
        return cls("direction_field", 2, field_strength=float(b))

    @classmethod
    def trig_matrix(cls, a0, cos_terms: Sequence = (), sin_terms: Sequence = ()) -> HamiltonianFamily:
        """Finite trigonometric series; ``cos_terms[k-1]`` multiplies cos(kx)."""
        a0 = _checked(a0, "A0")
        dim = a0.shape[0]
        k = max(len(cos_terms), len(sin_terms))
        zero = np.zeros((dim, dim), dtype=np.complex128)
        cs = [_checked(c, f"cos[{i}]") for i, c in enumerate(cos_terms)]
        ss = [_checked(s, f"sin[{i}]") for i, s in enumerate(sin_terms)]
        cs += [zero] * (k - len(cs))
        ss += [zero] * (k - len(ss))
        for name, m in [("cos", cs), ("sin", ss)]:
            for i, c in enumerate(m):
                if c.shape != a0.shape:
                    raise InvalidMatrixError(f"{name}[{i}] has shape {c.shape}, expected {a0.shape}")
        return cls("trig_matrix", dim, a0=a0, cos_terms=tuple(cs), sin_terms=tuple(ss))

    def evaluate(self, x: float) -> np.ndarray:
        if self.kind == "multiplicative":
            return x * self.base
        if self.kind == "direction_field":
            return self.field_strength * (math.cos(x) * SIGMA_1 + math.sin(x) * SIGMA_3)
        h = self.a0.copy()
        for k, (c, s) in enumerate(zip(self.cos_terms, self.sin_terms), start=1):
            h = h + c * math.cos(k * x) + s * math.sin(k * x)
        return h

    def derivative(self, x: float) -> np.ndarray:
        """Analytic dH/dx."""
        if self.kind == "multiplicative":
            return self.base.copy()
        if self.kind == "direction_field":
            return self.field_strength * (-math.sin(x) * SIGMA_1 + math.cos(x) * SIGMA_3)
        h = np.zeros_like(self.a0)
        for k, (c, s) in enumerate(zip(self.cos_terms, self.sin_terms), start=1):
            h = h - k * c * math.sin(k * x) + k * s * math.cos(k * x)
        return h

    def unitary_at(self, x: float, t: float) -> np.ndarray:
        """exp(-i H(x) t)."""
        if t < 0:
            raise ValueError(f"evolution time must be non-negative, got {t}")
        return expm_i(self.evaluate(x), t)

    def to_spec(self) -> dict[str, Any]:
        if self.kind == "multiplicative":
            return {"kind": self.kind, "H": matrix_to_pairs(self.base)}
        if self.kind == "direction_field":
            return {"kind": self.kind, "B": self.field_strength}
        return {
            "kind": self.kind,
            "A0": matrix_to_pairs(self.a0),
            "cos": [matrix_to_pairs(c) for c in self.cos_terms],
            "sin": [matrix_to_pairs(s) for s in self.sin_terms],
        }

    @classmethod
    def from_spec(cls, spec: dict[str, Any]) -> HamiltonianFamily:
        kind = str(spec.get("kind", "")).replace("-", "_")
        if kind == "multiplicative":
            if "H" not in spec:
                return cls.multiplicative(SIGMA_3)
            return cls.multiplicative(_checked(pairs_to_matrix(spec["H"]), "H"))
        if kind == "direction_field":
            return cls.direction_field(float(spec.get("B", 1.0)))
        if kind == "trig_matrix":
            return cls.trig_matrix(
                pairs_to_matrix(spec["A0"]),
                [pairs_to_matrix(c) for c in spec.get("cos", [])],
                [pairs_to_matrix(s) for s in spec.get("sin", [])],
            )
        raise ValueError(f"unknown family kind {spec.get('kind')!r}; expected one of {KINDS}")


def _checked(m, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidMatrixError(f"family matrix {name} must be square, got shape {m.shape}")
    try:
        return as_hermitian(m)
    except InvalidMatrixError as exc:
        raise InvalidMatrixError(f"family matrix {name} is not Hermitian: {exc}") from None


def matrix_to_pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def pairs_to_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise InvalidMatrixError("matrix must be given as nested rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def random_trig_family(rng: np.random.Generator, dim: int, harmonics: int = 2) -> HamiltonianFamily:
    """Random smooth family with Gaussian Hermitian coefficients (used for property tests)."""

    def herm():
        z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        return (z + z.conj().T) / 2

    return HamiltonianFamily.trig_matrix(
        herm(), [herm() for _ in range(harmonics)], [herm() for _ in range(harmonics)]
    )


def spread(h) -> float:
    """Largest minus smallest eigenvalue of a Hermitian matrix."""
    w = hermitian_eig(h, check=False).eigenvalues
    return float(w[0] - w[-1])


def direction_field_qfi_closed_form(b: float, t: float) -> float:
    """4 sin^2(BT): maximal QFI of the uncontrolled direction-field family."""
    return 4.0 * math.sin(b * t) ** 2


def cos_bprime(b: float, t: float, dx: float) -> float:
    """cos B' = cos^2(BT) + cos(dx) sin^2(BT), the rotation angle of U_x^H U_{x+dx}."""
    return math.cos(b * t) ** 2 + math.cos(dx) * math.sin(b * t) ** 2


def universal_qfi(family: HamiltonianFamily, x: float, t: float) -> float:
    """T^2 * spread(dH/dx)^2, the large-m limit under optimal feedback."""
    if not t > 0:
        raise ValueError(f"T must be positive, got {t}")
    return t * t * spread(family.derivative(x)) ** 2

