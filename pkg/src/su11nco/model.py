"""Parameter containers: the NCO choice and the interferometer settings."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError

PRESETS = {
    "standard": (1.0, -1.0),
    "pa-then-ps": (1.0, 0.0),
    "ps-then-pa": (0.0, 1.0),
}

_ALIASES = {
    "identity": "standard",
    "none": "standard",
    "pa_ps": "pa-then-ps",
    "paps": "pa-then-ps",
    "aa+": "pa-then-ps",
    "ps_pa": "ps-then-pa",
    "pspa": "ps-then-pa",
    "a+a": "ps-then-pa",
}


@dataclass(frozen=True)
class SchemeSpec:
    """Number-conserving operation ``s*a a^dag + t*a^dag a`` on mode a.

    Since ``a a^dag = n + 1`` the operator is diagonal in the Fock basis with
    eigenvalue ``s*(n+1) + t*n``.  ``(1, -1)`` is the identity.
    """

    s: float
    t: float
    name: str | None = None

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.t)):
            raise DomainError("scheme coefficients must be finite")
        if self.s == 0 and self.t == 0:
            raise DomainError("scheme coefficients (s, t) must not both vanish")

    @classmethod
    def preset(cls, name: str) -> "SchemeSpec":
        key = name.strip().lower()
        key = _ALIASES.get(key, key)
        if key not in PRESETS:
            raise DomainError(f"unknown scheme preset {name!r}; choose from {sorted(PRESETS)}")
        s, t = PRESETS[key]
        return cls(s, t, key)

    @classmethod
    def superposition(cls, t: float) -> "SchemeSpec":
        """Point on the unit circle s^2 + t^2 = 1 with s >= 0, as parameterized in the figures."""
        if not 0.0 <= t <= 1.0:
            raise DomainError("superposition coefficient t must lie in [0, 1]")
        return cls(math.sqrt(1.0 - t * t), t, f"t={t:g}")

    @classmethod
    def parse(cls, text: str) -> "SchemeSpec":
        """Accept a preset name, ``t=<value>`` or ``<s>,<t>``."""
        text = text.strip()
        if text.lower().startswith("t="):
            return cls.superposition(float(text[2:]))
        if "," in text:
            s, t = (float(v) for v in text.split(","))
            return cls(s, t)
        return cls.preset(text)

    def diagonal(self, n):
        """Eigenvalue of the operator on |n>; works elementwise on arrays."""
        return self.s * (n + 1) + self.t * n

    @property
    def linear_coefficients(self) -> tuple[float, float]:
        """(c1, c0) with U_P = c1*n + c0."""
        return self.s + self.t, self.s

    @property
    def preset_name(self) -> str | None:
        """Name of the matching preset, compared up to a common nonzero scale."""
        for key, (ps, pt) in PRESETS.items():
            # (s, t) proportional to (ps, pt)
            if abs(self.s * pt - self.t * ps) <= 1e-14 * max(abs(self.s), abs(self.t)):
                if self.s * ps + self.t * pt != 0:
                    return key
        return None

    @property
    def label(self) -> str:
        return self.name or self.preset_name or f"s={self.s:g},t={self.t:g}"


STANDARD = SchemeSpec.preset("standard")
PA_THEN_PS = SchemeSpec.preset("pa-then-ps")
PS_THEN_PA = SchemeSpec.preset("ps-then-pa")


@dataclass(frozen=True)
class InterferometerParams:
    g: float = 1.0
    alpha: float = 1.0
    phi: float = 0.6
    T: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        for name in ("g", "alpha", "phi", "T", "eta"):
            value = getattr(self, name)
            if isinstance(value, complex):
                raise DomainError(f"{name} must be real (complex alpha is not supported)")
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite")
            # frozen, so coerce through object.__setattr__; keeps 1 and 1.0 identical downstream
            object.__setattr__(self, name, float(value))
        if self.g < 0:
            raise DomainError("gain g must be nonnegative")
        if self.alpha < 0:
            raise DomainError("coherent amplitude alpha must be real and nonnegative")
        if not 0.0 < self.T <= 1.0:
            raise DomainError("transmissivity T must lie in (0, 1]")
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError("transmissivity eta must lie in [0, 1]")

    def with_(self, **changes) -> "InterferometerParams":
        return replace(self, **changes)
