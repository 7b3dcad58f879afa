"""Fourier-lattice representation of mean-zero scalar fields on T^d.

Fields are sparse maps from nonzero lattice modes k in Z^d to complex
amplitudes.  Two Laplacian eigenvalue conventions are supported:

* ``lattice``:    lambda_k = |k|^2          (bare lattice squares)
* ``geometric``:  lambda_k = 4 pi^2 |k|^2   (Laplace-Beltrami on R^d/Z^d)

Toral dynamics permute modes, so supports stay finite and no grid or FFT
is ever needed here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Mapping, Tuple

import numpy as np

Mode = Tuple[int, ...]

# squared-magnitude threshold below which coefficients are dropped
PRUNE_TOL = 1e-30

# pulsed dynamics stores modes as machine integers downstream (CSV/JSON,
# int64 lattice scans), so coordinates must stay inside 63 bits
MODE_LIMIT = 2**62


class ModeOverflowError(OverflowError):
    """A lattice mode left the 63-bit integer range."""


@dataclass(frozen=True)
class SpectralConvention:
    """Dimension and eigenvalue scaling of the Fourier lattice."""

    dimension: int
    scaling: str = "lattice"  # "lattice" or "geometric"

    def __post_init__(self):
        if self.dimension not in (2, 3, 4):
            raise ValueError(f"dimension must be 2, 3 or 4, got {self.dimension}")
        if self.scaling not in ("lattice", "geometric"):
            raise ValueError(f"unknown eigenvalue scaling {self.scaling!r}")

    @property
    def scale_factor(self) -> float:
        return 1.0 if self.scaling == "lattice" else 4.0 * math.pi**2

    def eigenvalue(self, mode: Mode) -> float:
        """Laplacian eigenvalue of a single mode (positive for mode != 0)."""
        return self.scale_factor * float(sum(int(c) * int(c) for c in mode))

    @property
    def lambda_1(self) -> float:
        """Smallest nonzero eigenvalue, attained at |k| = 1."""
        return self.scale_factor

    def convert_nu(self, nu: float, target: "SpectralConvention") -> float:
        """Rescale a diffusivity so that nu*lambda_k is convention independent."""
        return nu * self.scale_factor / target.scale_factor


def _check_mode(mode: Iterable[int], dimension: int) -> Mode:
    m = tuple(int(c) for c in mode)
    if len(m) != dimension:
        raise ValueError(f"mode {m} has wrong dimension (expected {dimension})")
    return m


@dataclass(frozen=True)
class SpectralField:
    """Sparse mean-zero field: finite map from nonzero modes to amplitudes.

    ``enforce_reality`` asserts hermitian symmetry coef(-k) == conj(coef(k)),
    i.e. the field is real valued on the torus.
    """

    convention: SpectralConvention
    coefficients: Dict[Mode, complex] = field(default_factory=dict)
    enforce_reality: bool = False

    def __post_init__(self):
        clean: Dict[Mode, complex] = {}
        for mode, amp in self.coefficients.items():
            m = _check_mode(mode, self.convention.dimension)
            if all(c == 0 for c in m):
                raise ValueError("mode 0 is not allowed (fields are mean zero)")
            a = complex(amp)
            if abs(a) ** 2 > PRUNE_TOL:
                clean[m] = a
        object.__setattr__(self, "coefficients", clean)
        if self.enforce_reality:
            for m, a in clean.items():
                neg = tuple(-c for c in m)
                b = clean.get(neg, 0j)
                if abs(b - a.conjugate()) > 1e-12 * max(1.0, abs(a)):
                    raise ValueError(f"reality violated at mode {m}")

    def modes(self):
        return self.coefficients.keys()

    def amplitude(self, mode: Iterable[int]) -> complex:
        return self.coefficients.get(tuple(int(c) for c in mode), 0j)

    def norm_sq(self) -> float:
        """Parseval: squared L^2 norm is the sum of squared magnitudes."""
        return float(sum(abs(a) ** 2 for a in self.coefficients.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def with_coefficients(self, coeffs: Mapping[Mode, complex]) -> "SpectralField":
        return SpectralField(self.convention, dict(coeffs))

    def to_json(self) -> str:
        payload = {
            "convention": {"dimension": self.convention.dimension, "scaling": self.convention.scaling},
            "modes": [
                {"k": list(m), "re": a.real, "im": a.imag}
                for m, a in sorted(self.coefficients.items())
            ],
        }
        return json.dumps(payload, indent=1)

    @staticmethod
    def from_json(text: str) -> "SpectralField":
        payload = json.loads(text)
        conv = SpectralConvention(payload["convention"]["dimension"], payload["convention"]["scaling"])
        coeffs = {tuple(rec["k"]): complex(rec["re"], rec["im"]) for rec in payload["modes"]}
        return SpectralField(conv, coeffs)


def sobolev_norm(field: SpectralField, s: float) -> float:
    """Homogeneous Sobolev norm (sum_k lambda_k^s |coef|^2)^(1/2).

    Negative s is allowed (dual norms); s = 0 is the L^2 norm; the empty
    field has norm 0.
    """
    total = 0.0
    for mode, amp in field.coefficients.items():
        lam = field.convention.eigenvalue(mode)
        total += lam**s * abs(amp) ** 2
    return math.sqrt(total)


def dissipation_functional(
    field: SpectralField, pushforward: Callable[[Mode], Mode], nu: float
) -> float:
    """One-step dissipation of the pulsed system.

    Returns (1/nu) * sum_k (1 - exp(-2 nu lambda_k)) |(U theta)^(k)|^2 where
    the Koopman image has (U theta)^(pushforward(m)) = theta^(m).  As
    nu -> 0+ this tends to 2 ||theta||_1^2.
    """
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    total = 0.0
    for mode, amp in field.coefficients.items():
        image = _check_mode(pushforward(mode), field.convention.dimension)
        lam = field.convention.eigenvalue(image)
        total += -math.expm1(-2.0 * nu * lam) * abs(amp) ** 2
    return total / nu


def random_sparse_field(
    convention: SpectralConvention,
    rng: np.random.Generator,
    n_modes: int = 8,
    kmax: int = 8,
    real: bool = False,
) -> SpectralField:
    """Random sparse field with modes drawn from the box [-kmax, kmax]^d."""
    coeffs: Dict[Mode, complex] = {}
    d = convention.dimension
    while len(coeffs) < n_modes:
        mode = tuple(int(c) for c in rng.integers(-kmax, kmax + 1, size=d))
        if all(c == 0 for c in mode):
            continue
        amp = complex(rng.standard_normal(), rng.standard_normal())
        coeffs[mode] = amp
        if real:
            coeffs[tuple(-c for c in mode)] = amp.conjugate()
    return SpectralField(convention, coeffs, enforce_reality=real)
