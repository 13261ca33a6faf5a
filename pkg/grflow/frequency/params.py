import math
from dataclasses import dataclass

import numpy as np

from ..estimates.liyau import ParameterError
from ..flow.diagnostics import CurvatureBounds
from ..geometry import ScalarField

__all__ = [
    "DegenerateFrequencyError",
    "WindowError",
    "HFunction",
    "FrequencyParams",
    "FrequencyConstants",
    "frequency_constants",
]

H_KINDS = ("constant", "linear", "exponential")


class DegenerateFrequencyError(ValueError):
    pass


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class HFunction:
    """
    The weight ``h(t)`` of the frequency, one of three closed-form families:

    * ``constant``: ``h = p``
    * ``linear``: ``h = p + q t``
    * ``exponential``: ``h = p exp(q t)``
    """

    kind: str = "constant"
    p: float = -1.0
    q: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in H_KINDS:
            raise ParameterError(f"unknown h family {self.kind!r}, expected one of {H_KINDS}")
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ParameterError("h parameters must be finite")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.p)
        if self.kind == "linear":
            return self.p + self.q * t
        return self.p * np.exp(self.q * t)

    def log_derivative(self, t):
        """``h'(t) / h(t)``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(t)
        if self.kind == "linear":
            return self.q / (self.p + self.q * t)
        return np.full_like(t, self.q)

    def sign_on(self, t0: float, t1: float) -> int:
        """+1 or -1 if h keeps that sign on ``[t0, t1]``, else 0."""
        # every family is monotone, so the endpoints decide
        ends = self(np.array([t0, t1]))
        if np.all(ends > 0):
            return 1
        if np.all(ends < 0):
            return -1
        return 0

    def as_dict(self) -> dict:
        return {"kind": self.kind, "p": self.p, "q": self.q}


@dataclass(frozen=True)
class FrequencyParams:
    """
    :param h: the weight, sign-definite on the window
    :param t0: window start, positive
    :param t1: window end, at most the terminal time of the weighted measure
    """

    h: HFunction
    t0: float
    t1: float

    def __post_init__(self) -> None:
        if not 0 < self.t0 < self.t1:
            raise WindowError(f"the window needs 0 < t0 < t1, got [{self.t0}, {self.t1}]")
        if self.h.sign_on(self.t0, self.t1) == 0:
            raise ParameterError(
                f"h ({self.h.kind}, p={self.h.p}, q={self.h.q}) changes sign or vanishes "
                f"on [{self.t0}, {self.t1}]"
            )

    @property
    def sign(self) -> int:
        return self.h.sign_on(self.t0, self.t1)

    def as_dict(self) -> dict:
        return {"h": self.h.as_dict(), "t0": self.t0, "t1": self.t1}


@dataclass(frozen=True)
class FrequencyConstants:
    """
    Constants of the frequency exponent, with ``A = max u(., 0)`` and
    ``kappa = min u(., 0)``.
    """

    n: int
    C1: float
    C2: float
    C3: float
    A: float
    kappa: float

    @property
    def log_ratio(self) -> float:
        """``ln(A / kappa)``"""
        return math.log(self.A / self.kappa)

    def c(self, t):
        """``c(t) = ln(A / kappa) / t``"""
        return self.log_ratio / np.asarray(t, dtype=float)

    def envelope(self, t):
        """The gradient bound ``4n/t + sqrt(4n C1) + sqrt(4n C2)/t + sqrt(4n C3)/sqrt(t)``."""
        n = self.n
        t = np.asarray(t, dtype=float)
        return (
            4 * n / t
            + math.sqrt(4 * n * self.C1)
            + math.sqrt(4 * n * self.C2) / t
            + math.sqrt(4 * n * self.C3) / np.sqrt(t)
        )

    def exponent_integrand(self, h: HFunction, s):
        """The integrand of ``-E``."""
        n = self.n
        s = np.asarray(s, dtype=float)
        L = self.log_ratio
        return (
            h.log_derivative(s)
            + 4 * n / s
            + L / s
            + math.sqrt(4 * n * self.C1)
            + math.sqrt(4 * n * self.C2) / s
            + math.sqrt(4 * n * self.C3) / np.sqrt(s)
            + n * L / (2 * s)
        )

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "C1": self.C1,
            "C2": self.C2,
            "C3": self.C3,
            "A": self.A,
            "kappa": self.kappa,
        }


def frequency_constants(n: int, kb: CurvatureBounds, u0: ScalarField) -> FrequencyConstants:
    """
    :raises DegenerateFrequencyError: if ``u0`` is not positive or is
        constant, which makes ``c(t)`` vanish
    """
    A = float(u0.values.max())
    kappa = float(u0.values.min())
    if not kappa > 0:
        raise DegenerateFrequencyError(f"initial data must be positive, min is {kappa}")
    if not A > kappa * (1 + 1e-12):
        raise DegenerateFrequencyError(
            "initial data is constant (max = min = %.17g); c(t) vanishes" % A
        )
    mixed = kb.K1 + kb.K3 / 8
    C1 = n / 16 + 3 * n * kb.K4**2 / 4
    C2 = 16 * n * mixed**2 + 8 * n * kb.K + n * kb.K3**2 / 2
    C3 = 2 * n * mixed
    return FrequencyConstants(n, C1, C2, C3, A, kappa)
