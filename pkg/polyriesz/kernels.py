"""
Radial interaction kernels h(x - y).

Every kernel is a function of s = |x - y|², so values and derivatives come
from one scalar profile p(s) and its first two derivatives:

    h = p(s),  ∇h = 2 p'(s) d,  ∇²h = 2 p'(s) I + 4 p''(s) d dᵀ,  d = x - y.
"""
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import KernelCapabilityError, KernelSpecError

POWER = "power"
HEAT = "heat"
GAUSS = "gauss"
CHAR = "char"

# Non-even powers are differentiated only away from the diagonal.
_SINGULAR_S = 1e-24


@dataclass(frozen=True)
class Kernel:
    """Tagged kernel description.

    power:k   |d|^k
    heat:Q,t  Σ_{j<=Q} (-|d|²/t)^j / j!   (no 1/(4πt) prefactor)
    gauss:t   exp(-|d|²/t)
    char:r    1 if |d| < r else 0
    """

    variant: str
    k: float = None
    Q: int = None
    t: float = None
    r: float = None

    def __post_init__(self):
        if self.variant == POWER:
            if self.k is None or not self.k > 0:
                raise ValueError(f"power kernel needs k > 0, got {self.k}")
        elif self.variant == HEAT:
            if self.Q is None or int(self.Q) != self.Q or self.Q < 0:
                raise ValueError(f"truncated heat kernel needs an integer Q >= 0, got {self.Q}")
            if self.t is None or not self.t > 0:
                raise ValueError(f"heat kernel needs t > 0, got {self.t}")
        elif self.variant == GAUSS:
            if self.t is None or not self.t > 0:
                raise ValueError(f"Gaussian kernel needs t > 0, got {self.t}")
        elif self.variant == CHAR:
            if self.r is None or not self.r > 0:
                raise ValueError(f"characteristic kernel needs r > 0, got {self.r}")
        else:
            raise ValueError(f"unknown kernel variant: {self.variant}")

    # ---- Constructors ----

    @classmethod
    def power(cls, k):
        return cls(POWER, k=float(k))

    @classmethod
    def truncated_heat(cls, Q, t):
        return cls(HEAT, Q=int(Q), t=float(t))

    @classmethod
    def gaussian(cls, t):
        return cls(GAUSS, t=float(t))

    @classmethod
    def characteristic(cls, r):
        return cls(CHAR, r=float(r))

    # ---- Capabilities ----

    @property
    def even_power(self):
        return self.variant == POWER and self.k == int(self.k) and int(self.k) % 2 == 0

    @property
    def has_gradient(self):
        if self.variant == CHAR:
            return False
        if self.variant == POWER and not self.even_power:
            return self.k >= 2
        return True

    @property
    def has_hessian(self):
        return self.has_gradient

    @property
    def polynomial_degree(self):
        """Total degree in (x, y) when h is a polynomial, else None."""
        if self.even_power:
            return int(self.k)
        if self.variant == HEAT:
            return 2 * self.Q
        return None

    def default_degree(self):
        """Quadrature degree for J and its derivatives."""
        deg = self.polynomial_degree
        if deg is None:
            return 12 if self.variant == CHAR else 20
        return max(1, min(deg + 2, 30))

    @property
    def is_integrable(self):
        return self.variant in (GAUSS, CHAR)

    def l1_norm(self):
        """∫_{R²} h, for the integrable variants."""
        if self.variant == GAUSS:
            return math.pi * self.t
        if self.variant == CHAR:
            return math.pi * self.r * self.r
        raise ValueError(f"kernel {self.spec()} is not integrable over the plane")

    # ---- Evaluation ----

    def profile(self, s, order=0):
        """p(s), p'(s) or p''(s) for order 0, 1, 2."""
        s = np.asarray(s, dtype=float)
        if self.variant == POWER:
            return self._power_profile(s, order)
        if self.variant == HEAT:
            # p_Q' = -(1/t) p_{Q-1},  p_Q'' = (1/t²) p_{Q-2}
            q = self.Q - order
            if q < 0:
                return np.zeros_like(s)
            return (-1.0 / self.t) ** order * _exp_partial_sum(-s / self.t, q)
        if self.variant == GAUSS:
            return (-1.0 / self.t) ** order * np.exp(-s / self.t)
        if order:
            raise KernelCapabilityError("kernel not differentiable")
        return (s < self.r * self.r).astype(float)

    def _power_profile(self, s, order):
        half = self.k / 2.0
        coeff = 1.0
        for j in range(order):
            coeff *= half - j
        if coeff == 0.0:
            return np.zeros_like(s)
        expo = half - order
        if self.even_power:
            return coeff * s ** int(expo)
        safe = np.where(s > _SINGULAR_S, s, 1.0)
        return np.where(s > _SINGULAR_S, coeff * safe ** expo, 0.0)

    def value(self, d):
        d = np.asarray(d, dtype=float)
        return self.profile(np.einsum("...k,...k->...", d, d))

    def grad(self, d):
        """∇h with respect to d = x - y, shape (..., 2)."""
        self._require_gradient()
        d = np.asarray(d, dtype=float)
        s = np.einsum("...k,...k->...", d, d)
        return 2.0 * self.profile(s, 1)[..., None] * d

    def hess(self, d):
        """∇²h with respect to d, shape (..., 2, 2)."""
        self._require_gradient()
        d = np.asarray(d, dtype=float)
        s = np.einsum("...k,...k->...", d, d)
        p1 = self.profile(s, 1)
        p2 = self.profile(s, 2)
        out = 4.0 * p2[..., None, None] * d[..., :, None] * d[..., None, :]
        out[..., 0, 0] += 2.0 * p1
        out[..., 1, 1] += 2.0 * p1
        return out

    def _require_gradient(self):
        if not self.has_gradient:
            raise KernelCapabilityError("kernel not differentiable")

    # ---- Description ----

    def spec(self):
        if self.variant == POWER:
            return f"power:k={_fmt(self.k)}"
        if self.variant == HEAT:
            return f"heat:Q={self.Q},t={_fmt(self.t)}"
        if self.variant == GAUSS:
            return f"gauss:t={_fmt(self.t)}"
        return f"char:r={_fmt(self.r)}"

    def to_dict(self):
        out = {"variant": self.variant, "spec": self.spec(),
               "has_gradient": self.has_gradient, "has_hessian": self.has_hessian}
        for name in ("k", "Q", "t", "r"):
            val = getattr(self, name)
            if val is not None:
                out[name] = val
        return out


def _fmt(x):
    return str(int(x)) if float(x) == int(x) else repr(float(x))


def _exp_partial_sum(z, q):
    """Σ_{j=0}^{q} z^j / j! by Horner's rule."""
    out = np.ones_like(z)
    for j in range(q, 0, -1):
        out = 1.0 + out * z / j
    return out


# ─── Spec strings ────────────────────────────────────────────────────────────

_SPEC_RE = re.compile(r"^\s*([a-z]+)\s*:\s*(.*?)\s*$")

_SPEC_FIELDS = {
    POWER: ("k",),
    HEAT: ("Q", "t"),
    GAUSS: ("t",),
    CHAR: ("r",),
}


def parse_kernel_spec(text):
    """Parse "power:k=6", "heat:Q=12,t=1", "gauss:t=1" or "char:r=0.5"."""
    m = _SPEC_RE.match(text or "")
    if not m:
        raise KernelSpecError(f"malformed kernel spec {text!r}: expected NAME:key=value[,key=value]")
    name, body = m.group(1), m.group(2)
    if name not in _SPEC_FIELDS:
        raise KernelSpecError(f"unknown kernel {name!r} in {text!r}; expected one of "
                              + ", ".join(sorted(_SPEC_FIELDS)))
    params = {}
    for item in filter(None, (p.strip() for p in body.split(","))):
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or key not in _SPEC_FIELDS[name]:
            raise KernelSpecError(f"bad parameter {item!r} for kernel {name!r}")
        try:
            params[key] = int(raw) if key == "Q" else float(raw)
        except ValueError:
            raise KernelSpecError(f"parameter {key!r} in {text!r} is not a number") from None
    missing = [k for k in _SPEC_FIELDS[name] if k not in params]
    if missing:
        raise KernelSpecError(f"kernel {name!r} is missing parameter(s): {', '.join(missing)}")
    try:
        return Kernel(name, **params)
    except ValueError as e:
        raise KernelSpecError(str(e)) from None


# ─── Pointwise API ───────────────────────────────────────────────────────────

def _diff(x, y):
    return np.asarray(x, dtype=float) - np.asarray(y, dtype=float)


def kernel_value(K, x, y):
    return K.value(_diff(x, y))


def kernel_grad_x(K, x, y):
    return K.grad(_diff(x, y))


def kernel_grad_y(K, x, y):
    return -K.grad(_diff(x, y))


def kernel_hess_xx(K, x, y):
    return K.hess(_diff(x, y))


def kernel_hess_yy(K, x, y):
    return K.hess(_diff(x, y))


def kernel_hess_xy(K, x, y):
    return -K.hess(_diff(x, y))


def kernel_hess_yx(K, x, y):
    return np.swapaxes(-K.hess(_diff(x, y)), -1, -2)


def heat_truncation_bound(Q, t, diam):
    """Bound on |exp(-|d|²/t) - h_Q| over |d| <= diam."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    z = diam * diam / t
    if z <= 1.0:
        return 1.0 / math.factorial(Q + 1)
    return z ** (Q + 1) / math.factorial(Q + 1)
