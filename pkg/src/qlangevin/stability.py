"""Mechanical impedance, passivity (positive-real) testing, upper-half-plane pole
search and stable / runaway classification.

In Laplace variables (``w = i p``) every model here has the form::

    Z{p} = m p + K/p + R + (1/pi) int_0^inf w(k) 2p / (p^2 + k^2) dk + sum_n c_n (i p)^n

with high-frequency mass ``m``, spring ``K``, constant resistance ``R`` and
spectral measure ``w(k) = xi[k] / k``.  The last sum holds polynomial terms
in ``w`` (the renormalized radiation reaction has ``c_2 = (2/3) e^2``).  ``Z``
is positive-real, hence the motion stable and causal, when ``m, K, R >= 0``,
``w >= 0`` and no polynomial term of order ``>= 2`` is present.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import dispersion
from .contour import winding_number
from .core import AbrahamLorentz, BrownianKernel, LinearCharge, MechanicalSystem, Scatterer
from .dispersion import PowerTail
from .errors import ContourError, DivergenceError, DomainError, InvalidArgumentError, UnsupportedContinuationError

STABLE = "stable_causal"
RUNAWAY = "runaway"
NONCAUSAL = "noncausal_preacceleration"


@dataclass(frozen=True)
class SpectralMeasure:
    """Samples of ``w(k) = xi[k] / k`` on increasing ``k`` (piecewise linear), plus a power-law tail."""

    k: np.ndarray
    values: np.ndarray
    tail: PowerTail | None = None

    def __post_init__(self):
        k = np.ascontiguousarray(self.k, dtype=float)
        v = np.ascontiguousarray(self.values, dtype=float)
        if k.ndim != 1 or k.shape != v.shape or k.size < 2 or np.any(np.diff(k) <= 0):
            raise InvalidArgumentError("spectral measure needs matching increasing 1D samples")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", v)

    @property
    def minimum(self) -> float:
        return float(self.values.min())

    def integral(self, p):
        return dispersion.laplace_measure_term(self.k, self.values, p, self.tail)


@dataclass(frozen=True)
class ImpedanceModel:
    """Spectral decomposition of a mechanical impedance.

    Attributes
    ----------
    mass : float
        High-frequency mass ``m`` (any sign).
    spring : float
        ``K``.
    friction : float
        ``xi'[0]``.  Added to ``Z`` as a constant only when ``measure`` is
        absent; otherwise it is the ``k -> 0`` value of the measure.
    measure : SpectralMeasure or None
    polynomial : dict
        ``{n: c_n}`` for terms ``c_n w^n``.
    scale : float
        Characteristic frequency, used for default boxes and tolerances.
    """

    mass: float
    spring: float
    friction: float = 0.0
    measure: SpectralMeasure | None = None
    polynomial: dict = field(default_factory=dict)
    scale: float = 1.0
    label: str = ""

    def structural_report(self) -> dict:
        return {
            "m": float(self.mass),
            "K": float(self.spring),
            "friction": float(self.friction),
            "measure_min": self.measure.minimum if self.measure is not None else 0.0,
        }

    def structural_violations(self) -> list:
        out = []
        s = self.structural_report()
        for key in ("m", "K", "friction", "measure_min"):
            if s[key] < 0:
                out.append(f"{key} < 0")
        for n, c in self.polynomial.items():
            if n >= 2 and c != 0:
                out.append(f"polynomial term of order {n}")
        return out


def _z_of_p(model: ImpedanceModel, p):
    p = np.asarray(p, dtype=complex)
    flat = np.atleast_1d(p).ravel()
    z = model.mass * flat + model.spring / flat
    if model.measure is None:
        z = z + model.friction
    else:
        z = z + model.measure.integral(flat)
    for n, c in model.polynomial.items():
        z = z + c * (1j * flat) ** n
    return z.reshape(p.shape) if p.ndim else z[0]


def impedance(model: ImpedanceModel, p):
    """``Z{p}`` for ``Re p > 0``."""
    p = np.asarray(p, dtype=complex)
    if np.any(p.real <= 0):
        raise DomainError("impedance is evaluated for Re(p) > 0 only")
    return _z_of_p(model, p)


def impedance_omega(model: ImpedanceModel, omega):
    """``Z[w] = Z{-i w}`` for ``Im w > 0``."""
    w = np.asarray(omega, dtype=complex)
    return impedance(model, -1j * w)


def admittance(model: ImpedanceModel, p):
    """``Y{p} = 1 / Z{p}``; exact zeros of ``Z`` map to ``inf`` (an admittance pole)."""
    z = np.asarray(impedance(model, p))
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(z == 0, np.inf + 0j, 1.0 / np.where(z == 0, 1.0, z))
    return y if y.ndim else complex(y)


# ---------------------------------------------------------------------------
# passivity


@dataclass(frozen=True)
class PassivityResult:
    passes: bool
    min_re_Z: float
    argmin: complex
    structural_ok: bool
    violations: tuple


def default_box(model: ImpedanceModel, eps: float | None = None, extent: float | None = None):
    eps = 1e-3 * model.scale if eps is None else eps
    extent = 10.0 * model.scale if extent is None else extent
    return eps, extent


def passivity_test(model: ImpedanceModel, eps: float | None = None, extent: float | None = None,
                   n_re: int = 24, n_im: int = 49) -> PassivityResult:
    """Structural sign test plus ``min Re Z`` over ``Re p in [eps, extent]``, ``|Im p| <= extent``."""
    eps, extent = default_box(model, eps, extent)
    if not eps > 0 or extent <= eps:
        raise InvalidArgumentError("need 0 < eps < extent")
    re = np.geomspace(eps, extent, n_re)
    im = np.union1d(np.linspace(-extent, extent, n_im), [0.0])
    P = (re[:, None] + 1j * im[None, :]).ravel()
    rz = impedance(model, P).real
    i = int(np.argmin(rz))
    violations = tuple(model.structural_violations())
    structural_ok = not violations
    return PassivityResult(bool(structural_ok and rz[i] > 0), float(rz[i]), complex(P[i]),
                           structural_ok, violations)


# ---------------------------------------------------------------------------
# poles of the admittance


@dataclass(frozen=True)
class Pole:
    location: complex     # in the w plane
    residue: complex      # of Y[w] = 1 / Z[w]
    abs_Z: float


def _refine(f, w0, tol_abs, max_iter=60):
    w = complex(w0)
    for _ in range(max_iter):
        fw = f(w)
        if abs(fw) < tol_abs:
            return w, True
        h = 1e-7 * (abs(w) + 1.0)
        d = (f(w + h) - f(w - h)) / (2 * h)
        if d == 0 or not np.isfinite(d):
            return w, False
        w = w - fw / d
        if not np.isfinite(w):
            return w0, False
    return w, abs(f(w)) < tol_abs


def _split(box, frac=0.5):
    re0, re1, im0, im1 = box
    if (re1 - re0) >= (im1 - im0):
        m = re0 + frac * (re1 - re0)
        return (re0, m, im0, im1), (m, re1, im0, im1)
    m = im0 + frac * (im1 - im0)
    return (re0, re1, im0, m), (re0, re1, m, im1)


def _inside(w, box, slack=0.0):
    re0, re1, im0, im1 = box
    return re0 - slack <= w.real <= re1 + slack and im0 - slack <= w.imag <= im1 + slack


def _z_scale(model: ImpedanceModel) -> float:
    s = model.scale
    terms = [abs(model.mass) * s, abs(model.spring) / s, abs(model.friction)]
    terms += [abs(c) * s**n for n, c in model.polynomial.items()]
    if model.measure is not None:
        terms.append(float(np.max(np.abs(model.measure.values))))
    return max(max(terms), 1e-300)


def _search_box(f, box, tol_abs, min_size, depth=0):
    try:
        n = winding_number(f, box)
    except ContourError:
        if depth == 0:
            raise
        return None
    if n == 0:
        return []
    re0, re1, im0, im1 = box
    if n == 1:
        c = complex(0.5 * (re0 + re1), 0.5 * (im0 + im1))
        w, ok = _refine(f, c, tol_abs)
        if ok and _inside(w, box):
            return [w]
    if max(re1 - re0, im1 - im0) < min_size or depth > 60:
        c = complex(0.5 * (re0 + re1), 0.5 * (im0 + im1))
        w, ok = _refine(f, c, tol_abs)
        return [w] * n if ok else []
    for frac in (0.5, 0.5 + 1 / 17, 0.5 - 1 / 23):
        a, b = _split(box, frac)
        ra = _search_box(f, a, tol_abs, min_size, depth + 1)
        rb = _search_box(f, b, tol_abs, min_size, depth + 1)
        if ra is not None and rb is not None:
            return ra + rb
    raise ContourError("zero lies on every trial split line; shift the box")


def find_upper_half_poles(model: ImpedanceModel, box, tol: float = 1e-10) -> list:
    """Zeros of ``Z[w]`` (admittance poles) inside ``box = (re_min, re_max, im_min, im_max)``.

    The argument principle counts zeros; boxes are bisected until each holds
    one, which is then refined by Newton iteration to ``|Z| < tol * scale``.
    """
    re0, re1, im0, im1 = map(float, box)
    if im0 <= 0 or re1 <= re0 or im1 <= im0:
        raise InvalidArgumentError("box must be a proper rectangle inside Im(w) > 0")

    def f(w):
        return impedance_omega(model, w)

    tol_abs = tol * _z_scale(model)
    min_size = 1e-6 * max(re1 - re0, im1 - im0)
    roots = _search_box(f, (re0, re1, im0, im1), tol_abs, min_size)
    return [_pole(f, w) for w in sorted(roots, key=lambda z: (round(z.imag, 12), round(z.real, 12)))]


def _pole(f, w):
    h = 1e-6 * (abs(w) + 1.0)
    d = (f(w + h) - f(w - h)) / (2 * h)
    return Pole(complex(w), complex(1.0 / d) if d != 0 else complex(np.inf), float(abs(f(w))))


def find_poles_in_boxes(model: ImpedanceModel, boxes, max_workers: int = 1, tol: float = 1e-10) -> list:
    """Pole search over disjoint boxes, optionally threaded; results are ordered by box."""
    boxes = list(boxes)
    if max_workers <= 1:
        results = [find_upper_half_poles(model, b, tol) for b in boxes]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as ex:
            results = list(ex.map(lambda b: find_upper_half_poles(model, b, tol), boxes))
    return [p for r in results for p in r]


def imaginary_axis_poles(model: ImpedanceModel, p_min: float, p_max: float, samples: int = 400,
                         tol: float = 1e-10) -> list:
    """Zeros of ``Z{p}`` on the real ``p`` axis (``w = i p``), where ``Z`` is real.

    Bracketed by sign changes on a log-spaced scan and solved with Brent's method.
    """
    p = np.geomspace(p_min, p_max, samples)
    z = impedance(model, p).real
    poles = []
    f = lambda x: float(impedance(model, x).real)  # noqa: E731
    for a, b, za, zb in zip(p[:-1], p[1:], z[:-1], z[1:]):
        if za == 0:
            root = a
        elif za * zb < 0:
            root = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        else:
            continue
        poles.append(_pole(lambda w: impedance_omega(model, w), 1j * root))
    return poles


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class MotionClassification:
    label: str
    min_re_Z: float
    argmin: complex
    poles: tuple
    structural: dict
    violations: tuple = ()
    notes: tuple = ()

    def to_dict(self) -> dict:
        """JSON-ready dictionary; non-finite numbers become ``None``."""
        return {
            "class": self.label,
            "min_re_Z": _finite_or_none(self.min_re_Z),
            "poles": [{"re": p.location.real, "im": p.location.imag, "abs_Z": p.abs_Z} for p in self.poles],
            "structural": {k: _finite_or_none(v) for k, v in self.structural.items()},
            "violations": list(self.violations),
            "notes": list(self.notes),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _finite_or_none(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _dedupe(poles, tol):
    out = []
    for p in poles:
        if all(abs(p.location - q.location) > tol for q in out):
            out.append(p)
    return out


def classify_motion(model: ImpedanceModel, eps: float | None = None, extent: float | None = None,
                    pole_box=None, axis_reach: float = 1e6) -> MotionClassification:
    """``stable_causal`` iff the passivity test passes; otherwise ``runaway``.

    Runaway reports carry the located admittance poles and note the
    ``noncausal_preacceleration`` reading of the same kernel (poles excluded
    by boundary conditions).
    """
    res = passivity_test(model, eps, extent)
    if res.passes:
        return MotionClassification(STABLE, res.min_re_Z, res.argmin, (), model.structural_report())
    eps, extent = default_box(model, eps, extent)
    box = pole_box or (-extent, extent, eps, extent)
    poles = []
    try:
        poles += find_upper_half_poles(model, box)
    except ContourError:
        pass
    poles += imaginary_axis_poles(model, eps, axis_reach * model.scale)
    poles = _dedupe(sorted(poles, key=lambda p: p.location.imag), 1e-8 * model.scale)
    notes = [f"{NONCAUSAL}: excluding the runaway modes by boundary conditions makes the response anticipate the force"]
    if not poles:
        notes.append("no admittance pole located in the searched region; classification rests on the failed passivity test")
    return MotionClassification(RUNAWAY, res.min_re_Z, res.argmin, tuple(poles), model.structural_report(),
                                res.violations, tuple(notes))


# ---------------------------------------------------------------------------
# impedance models of the coupled systems


def characteristic_scale(system: MechanicalSystem) -> float:
    c = system.coupling
    if isinstance(c, Scatterer):
        return float(max(getattr(c.smatrix, "cutoff", 1.0), c.state.temperature))
    if isinstance(c, LinearCharge):
        return float(getattr(c.regulator, "scale", 1.0))
    if isinstance(c, AbrahamLorentz):
        return float(abs(system.mass) / c.charge_squared) if system.mass else 1.0
    if isinstance(c, BrownianKernel):
        rates = [c.friction / system.mass if system.mass > 0 else 0.0,
                 np.sqrt(system.spring / system.mass) if system.mass > 0 else 0.0]
        return float(max(max(rates), 1e-12)) if max(rates) > 0 else 1.0
    return 1.0


def measure_nodes(scale: float, count: int = 4000, low: float = 1e-4, high: float = 1e8) -> np.ndarray:
    """``k = 0`` followed by log-spaced nodes over ``[low, high] * scale``."""
    return np.concatenate([[0.0], np.geomspace(low * scale, high * scale, count)])


def _measure_from_xi(k, xi, w0) -> SpectralMeasure:
    w = np.empty_like(k)
    w[0] = w0
    w[1:] = xi / k[1:]
    return SpectralMeasure(k, w, dispersion.fit_power_tail(k, w))


@lru_cache(maxsize=32)
def _scatterer_parts(smatrix, T: float, count: int):
    from .radiation_pressure import force_commutator, quasistatic_coefficients, vacuum_force_commutator

    if not getattr(smatrix, "closed_form", True):
        raise UnsupportedContinuationError("scatterer impedance needs a closed-form S-matrix")
    scale = float(max(getattr(smatrix, "cutoff", 1.0), T))
    mu0 = dispersion.induced_mass_vacuum(lambda k: vacuum_force_commutator(smatrix, k), scale=scale).value
    friction = quasistatic_coefficients(smatrix, T).friction
    k = measure_nodes(scale, count)
    measure = _measure_from_xi(k, force_commutator(smatrix, T, k[1:]), friction)
    return mu0, friction, measure


def vacuum_induced_mass(smatrix) -> float:
    """``mu_0`` of a closed-form S-matrix model (``DivergenceError`` if infinite)."""
    from .radiation_pressure import vacuum_force_commutator

    scale = float(getattr(smatrix, "cutoff", 1.0))
    return dispersion.induced_mass_vacuum(lambda k: vacuum_force_commutator(smatrix, k), scale=scale).value


def impedance_model_from_system(system: MechanicalSystem, count: int = 4000) -> ImpedanceModel:
    """Spectral decomposition of ``Z{p} = M p + K/p - chi{p}/p`` for each coupling kind.

    * Brownian kernel: ``m = M``, constant resistance ``D/T``.
    * Scatterer (``M`` is the vacuum quasistatic mass ``M_0``): ``m = M_0 - mu_0``,
      measure ``xi_T[k]/k`` whose ``k -> 0`` value is the friction ``xi_T'[0]``.
    * Regulated charge (``M`` is the bare mass): ``m = M``, measure ``xi[k]/k``.
    * Renormalized radiation reaction: ``m = M`` and the term ``(2/3) e^2 w^2``.
    """
    c = system.coupling
    scale = characteristic_scale(system)
    if isinstance(c, BrownianKernel):
        return ImpedanceModel(system.mass, system.spring, c.friction, None, {}, scale, "brownian")
    if isinstance(c, AbrahamLorentz):
        return ImpedanceModel(system.mass, system.spring, 0.0, None, {2: 2.0 / 3.0 * c.charge_squared},
                              scale, "abraham_lorentz")
    if isinstance(c, Scatterer):
        mu0, friction, measure = _scatterer_parts(c.smatrix, c.state.temperature, count)
        return ImpedanceModel(system.mass - mu0, system.spring, friction, measure, {}, scale, "scatterer")
    if isinstance(c, LinearCharge):
        from .linear_coupling import LinearCoupling, charge_force_commutator

        lc = LinearCoupling(c.charge_squared, c.regulator)
        k = measure_nodes(scale, count)
        measure = _measure_from_xi(k, charge_force_commutator(lc, k[1:]), 0.0)
        return ImpedanceModel(system.mass, system.spring, 0.0, measure, {}, scale, "charge")
    raise InvalidArgumentError(f"no impedance model for coupling {c!r}")


def classify_system(system: MechanicalSystem, **kw) -> MotionClassification:
    """Classify a coupled system.

    A scatterer whose vacuum induced mass diverges (constant reflectivity up
    to arbitrarily high frequency) has ``m = M_0 - mu_0 = -inf`` and is
    reported ``runaway`` without a pole search.
    """
    try:
        model = impedance_model_from_system(system)
    except DivergenceError as exc:
        if not isinstance(system.coupling, Scatterer):
            raise
        structural = {"m": -np.inf, "K": float(system.spring), "friction": np.nan, "measure_min": np.nan}
        notes = (f"infinite vacuum induced mass: {exc}",
                 f"{NONCAUSAL}: excluding the runaway modes by boundary conditions makes the response "
                 "anticipate the force")
        return MotionClassification(RUNAWAY, -np.inf, complex(np.nan, np.nan), (), structural, ("m < 0",), notes)
    return classify_motion(model, **kw)
