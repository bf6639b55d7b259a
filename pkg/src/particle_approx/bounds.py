"""Closed-form error bounds for the cell-average approximation.

Four estimates, each in a density and a quantity variant:

``th1``  W^{1,inf} density, compactly supported in the grid box, rate 1/N^2
``th2``  W^{1,inf} density truncated to ``[-L, L]^2`` with tail mass <= eps
``th3``  L^1 and L^inf density, compactly supported, rate 1/N
``th4``  L^1 and L^inf density truncated to ``[-L, L]^2``

The constants are::

    C12  = max(D1, D2)^4 (|dx rho| + |dy rho|)(|dx phi| + |dy phi|)
    K12  = max(D1, D2) (|dx w| + |dy w|) |phi|_inf |rho|_1
    D12  = max(D1, D2) (|dx phi| + |dy phi|)(|rho|_1 + |rho|_inf D1 D2)
    Ceps = 16 L^4 (|dx rho| + |dy rho|)(|dx phi| + |dy phi|)
    Keps = 2 L (|dx w| + |dy w|) |phi|_inf |rho|_1
    Deps = 2 L (|dx phi| + |dy phi|)(|rho|_1 + 4 L^2 |rho|_inf)

where ``|.|`` are sup norms unless marked ``_1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fields import NormData

THEOREMS = ("th1", "th2", "th3", "th4")
VARIANTS = ("density", "quantity")
TRUNCATED = ("th2", "th4")


class BoundInputError(ValueError):
    pass


class MissingNormError(BoundInputError):
    pass


@dataclass(frozen=True)
class BoundInputs:
    delta1: float
    delta2: float
    n: int
    rho_norms: NormData = field(default_factory=NormData)
    phi_norms: NormData = field(default_factory=NormData)
    omega_norms: NormData = field(default_factory=NormData)
    L: float | None = None
    eps: float | None = None

    def __post_init__(self):
        if not (self.delta1 > 0 and self.delta2 > 0):
            raise BoundInputError("delta1 and delta2 must be > 0")
        if int(self.n) != self.n or self.n < 1:
            raise BoundInputError(f"N must be a positive integer, got {self.n!r}")
        if self.L is not None and not self.L > 0:
            raise BoundInputError("L must be > 0")
        if self.eps is not None and not self.eps >= 0:
            raise BoundInputError("eps must be >= 0")

    @property
    def dmax(self) -> float:
        return max(self.delta1, self.delta2)


@dataclass(frozen=True)
class BoundReport:
    theorem_id: str
    variant: str
    n: int
    constant_values: dict
    bound_value: float

    def as_lines(self) -> list[str]:
        lines = [f"theorem={self.theorem_id}", f"variant={self.variant}", f"n={self.n}"]
        lines += [f"{k}={float(v)!r}" for k, v in self.constant_values.items()]
        lines.append(f"bound={float(self.bound_value)!r}")
        return lines


def _norm(norms: NormData, role: str, name: str) -> float:
    value = getattr(norms, name)
    if value is None:
        raise MissingNormError(f"missing norm {role}.{name}")
    return value


def _grad(norms: NormData, role: str) -> float:
    return _norm(norms, role, "dx_sup") + _norm(norms, role, "dy_sup")


def _need_L(inputs: BoundInputs) -> float:
    if inputs.L is None:
        raise BoundInputError("truncation half-width L is required")
    return inputs.L


def constant_C12(inputs: BoundInputs) -> float:
    return inputs.dmax**4 * _grad(inputs.rho_norms, "rho") * _grad(inputs.phi_norms, "phi")


def constant_K12(inputs: BoundInputs) -> float:
    return (
        inputs.dmax
        * _grad(inputs.omega_norms, "omega")
        * _norm(inputs.phi_norms, "phi", "sup")
        * _norm(inputs.rho_norms, "rho", "l1")
    )


def constant_D12(inputs: BoundInputs) -> float:
    rho_l1 = _norm(inputs.rho_norms, "rho", "l1")
    rho_sup = _norm(inputs.rho_norms, "rho", "sup")
    return inputs.dmax * _grad(inputs.phi_norms, "phi") * (rho_l1 + rho_sup * inputs.delta1 * inputs.delta2)


def constant_C_eps(inputs: BoundInputs) -> float:
    L = _need_L(inputs)
    return 16 * L**4 * _grad(inputs.rho_norms, "rho") * _grad(inputs.phi_norms, "phi")


def constant_K_eps(inputs: BoundInputs) -> float:
    L = _need_L(inputs)
    return (
        2 * L
        * _grad(inputs.omega_norms, "omega")
        * _norm(inputs.phi_norms, "phi", "sup")
        * _norm(inputs.rho_norms, "rho", "l1")
    )


def constant_D_eps(inputs: BoundInputs) -> float:
    L = _need_L(inputs)
    rho_l1 = _norm(inputs.rho_norms, "rho", "l1")
    rho_sup = _norm(inputs.rho_norms, "rho", "sup")
    return 2 * L * _grad(inputs.phi_norms, "phi") * (rho_l1 + 4 * L * L * rho_sup)


# Norm entries each bound reads, per field role.
_GRAD = ("dx_sup", "dy_sup")
REQUIRED_NORMS = {
    ("th1", "density"): {"rho": _GRAD, "phi": _GRAD},
    ("th1", "quantity"): {"rho": _GRAD + ("l1",), "phi": _GRAD + ("sup",), "omega": _GRAD + ("sup",)},
    ("th2", "density"): {"rho": _GRAD, "phi": _GRAD + ("sup",)},
    ("th2", "quantity"): {"rho": _GRAD + ("l1",), "phi": _GRAD + ("sup",), "omega": _GRAD + ("sup",)},
    ("th3", "density"): {"rho": ("l1", "sup"), "phi": _GRAD},
    ("th3", "quantity"): {"rho": ("l1", "sup"), "phi": _GRAD + ("sup",), "omega": _GRAD + ("sup",)},
    ("th4", "density"): {"rho": ("l1", "sup"), "phi": _GRAD + ("sup",)},
    ("th4", "quantity"): {"rho": ("l1", "sup"), "phi": _GRAD + ("sup",), "omega": _GRAD + ("sup",)},
}


# Constants entering each bound.
CONSTANT_NAMES = {
    ("th1", "density"): ("C12",),
    ("th1", "quantity"): ("C12", "K12"),
    ("th2", "density"): ("C_eps",),
    ("th2", "quantity"): ("C_eps", "K_eps"),
    ("th3", "density"): ("D12",),
    ("th3", "quantity"): ("D12", "K12"),
    ("th4", "density"): ("D_eps",),
    ("th4", "quantity"): ("D_eps", "K_eps"),
}


def theorem_bound(theorem_id: str, variant: str, inputs: BoundInputs, overrides: dict | None = None) -> BoundReport:
    """Evaluate the right-hand side of one estimate at ``inputs.n``.

    ``overrides`` replaces named constants (``C12``, ``K12``, ...) before the
    bound is assembled; it exists to falsify bound checks deliberately.
    """
    if theorem_id not in THEOREMS:
        raise BoundInputError(f"unknown theorem {theorem_id!r}; expected one of {THEOREMS}")
    if variant not in VARIANTS:
        raise BoundInputError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if theorem_id in TRUNCATED:
        if inputs.L is None or inputs.eps is None:
            raise BoundInputError(f"{theorem_id} requires both L and eps")
    elif inputs.eps is not None:
        raise BoundInputError(f"{theorem_id} is a compact-support estimate and takes no eps")

    n = inputs.n
    quantity = variant == "quantity"
    consts: dict[str, float] = {}
    if theorem_id == "th1":
        consts["C12"] = constant_C12(inputs)
        if quantity:
            consts["K12"] = constant_K12(inputs)
    elif theorem_id == "th2":
        consts["C_eps"] = constant_C_eps(inputs)
        if quantity:
            consts["K_eps"] = constant_K_eps(inputs)
    elif theorem_id == "th3":
        consts["D12"] = constant_D12(inputs)
        if quantity:
            consts["K12"] = constant_K12(inputs)
    else:
        consts["D_eps"] = constant_D_eps(inputs)
        if quantity:
            consts["K_eps"] = constant_K_eps(inputs)
    if overrides:
        unknown = set(overrides) - set(consts)
        if unknown:
            raise BoundInputError(
                f"cannot override {sorted(unknown)} for {theorem_id}/{variant}; "
                f"constants are {sorted(consts)}"
            )
        consts.update({k: float(v) for k, v in overrides.items()})

    w = _norm(inputs.omega_norms, "omega", "sup") if quantity else 1.0
    if theorem_id in TRUNCATED:
        eps_term = inputs.eps * _norm(inputs.phi_norms, "phi", "sup") * w
    else:
        eps_term = 0.0

    if theorem_id == "th1":
        bound = consts["C12"] * w / n**2
        if quantity:
            bound += consts["K12"] / n
    elif theorem_id == "th2":
        bound = eps_term + consts["C_eps"] * w / n**2
        if quantity:
            bound += consts["K_eps"] / n
    elif theorem_id == "th3":
        bound = consts["D12"] * w / n
        if quantity:
            bound += consts["K12"] / n
    else:
        bound = eps_term + consts["D_eps"] * w / n
        if quantity:
            bound += consts["K_eps"] / n
    return BoundReport(theorem_id, variant, n, consts, bound)
