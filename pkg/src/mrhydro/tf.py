"""Real-coefficient polynomial / rational transfer-function algebra.

Everything analytical about the actuation line is carried by `RationalTF`, a
ratio of two real polynomials in the Laplace variable. The model builders at
the bottom assemble the line response from four internal blocks (drive path,
master back-action, pressure-to-force coupling, pressure-to-flow admittance)
and expose the two response candidates that differ by the coupling factor:

* `pressure_response` - clutch current to the force-equivalent line pressure
  measured at the master cylinder (the collocated signal),
* `force_response`    - clutch current to the force transmitted to the load
  (the non-collocated end-effector signal).

Both share the same poles and the same DC gain K_I; which candidate describes
which physical sensor is confirmed against the time-domain simulator by the
test suite, since the two labelings are easy to mix up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ActuationLineParams, BlockedLoad, LoadImpedance


class RootFindingError(RuntimeError):
    """Root residuals still exceed the documented bound after polishing."""


class PoleEvaluationError(ZeroDivisionError):
    """Frequency-response evaluation requested at (or too close to) a pole."""


class Polynomial:
    """Real polynomial, coefficients ascending in the Laplace variable.

    The trailing coefficient is nonzero after construction; the zero
    polynomial is canonically a single zero coefficient.
    """

    __slots__ = ("coef",)

    def __init__(self, coef):
        c = np.atleast_1d(np.asarray(coef, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        nz = np.nonzero(c)[0]
        self.coef = c[: nz[-1] + 1].copy() if nz.size else np.zeros(1)

    @classmethod
    def from_roots(cls, roots, leading: float = 1.0) -> "Polynomial":
        """Monic-from-roots times `leading`; roots must be conjugate-closed."""
        r = np.asarray(roots, dtype=complex)
        if r.size == 0:
            return cls([leading])
        c = np.atleast_1d(np.poly(r))[::-1] * leading  # np.poly is descending
        imag_scale = np.max(np.abs(c.imag)) / max(np.max(np.abs(c.real)), 1e-300)
        if imag_scale > 1e-7:
            raise ValueError("root set is not closed under conjugation")
        return cls(c.real)

    @property
    def degree(self) -> int:
        return len(self.coef) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coef[0] == 0.0

    def __call__(self, s):
        """Horner evaluation; `s` may be real/complex, scalar or array."""
        return np.polyval(self.coef[::-1], s)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coef), len(other.coef))
        a = np.zeros(n)
        a[: len(self.coef)] = self.coef
        a[: len(other.coef)] += other.coef
        return Polynomial(a)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scaled(-1.0)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        if self.is_zero or other.is_zero:
            return Polynomial([0.0])
        return Polynomial(np.convolve(self.coef, other.coef))

    def scaled(self, alpha: float) -> "Polynomial":
        return Polynomial(self.coef * alpha)

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial([0.0])
        return Polynomial(self.coef[1:] * np.arange(1, len(self.coef)))

    def __repr__(self):
        return f"Polynomial({list(self.coef)})"


def polynomial_roots(p: Polynomial, *, scale: float | None = None,
                     newton_steps: int = 12) -> np.ndarray:
    """All roots of `p` with multiplicity, via companion-matrix eigenvalues.

    The variable is rescaled (s = scale*z) before forming the companion
    matrix, because physical coefficients here span ~1e6 and the raw matrix
    is ill-conditioned; the default scale is the classical root-radius
    estimate |c0/cn|^(1/n). Eigenvalues are Newton-polished and each root r
    must satisfy |p(r)| <= 1e-8 * max|coef| * max(1,|r|)^degree.
    """
    if p.is_zero:
        raise ValueError("the zero polynomial has no well-defined roots")
    n = p.degree
    if n == 0:
        return np.zeros(0, dtype=complex)
    if scale is None:
        ratio = abs(p.coef[0] / p.coef[-1])
        scale = ratio ** (1.0 / n) if ratio > 0.0 else 1.0
        scale = min(max(scale, 1e-9), 1e9)
    # p(scale*z) coefficients, made monic in z
    cz = p.coef * scale ** np.arange(n + 1)
    cz = cz / cz[-1]
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -cz[:-1]
    roots = np.linalg.eigvals(comp) * scale

    dp = p.derivative()
    for i, r in enumerate(roots):
        z = r
        for _ in range(newton_steps):
            d = dp(z)
            if d == 0:
                break
            step = p(z) / d
            z -= step
            if abs(step) <= 1e-15 * max(1.0, abs(z)):
                break
        # keep the polish only if it did not wander off (multiple roots stall)
        if abs(p(z)) <= abs(p(r)):
            roots[i] = z

    cmax = np.max(np.abs(p.coef))
    for r in roots:
        if abs(p(r)) > 1e-8 * cmax * max(1.0, abs(r)) ** n:
            raise RootFindingError(f"residual too large at root {r!r}")
    return roots[np.lexsort((roots.imag, roots.real))]


@dataclass(frozen=True)
class RationalTF:
    """Ratio of two real polynomials, denominator normalized to be monic."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero:
            raise ZeroDivisionError("denominator is the zero polynomial")
        lead = self.den.coef[-1]
        if lead != 1.0:
            object.__setattr__(self, "num", self.num.scaled(1.0 / lead))
            object.__setattr__(self, "den", self.den.scaled(1.0 / lead))

    @classmethod
    def constant(cls, value: float) -> "RationalTF":
        return cls(Polynomial([value]), Polynomial([1.0]))

    def __mul__(self, other: "RationalTF") -> "RationalTF":
        return RationalTF(self.num * other.num, self.den * other.den)

    def __add__(self, other: "RationalTF") -> "RationalTF":
        return RationalTF(self.num * other.den + other.num * self.den,
                          self.den * other.den)

    def reciprocal(self) -> "RationalTF":
        if self.num.is_zero:
            raise ZeroDivisionError("cannot invert the zero transfer function")
        return RationalTF(self.den, self.num)

    def scaled(self, alpha: float) -> "RationalTF":
        return RationalTF(self.num.scaled(alpha), self.den)

    def dc_gain(self) -> float:
        return self.num.coef[0] / self.den.coef[0]

    def __call__(self, s):
        return self.num(s) / self.den(s)

    def simplified(self, rel_tol: float = 1e-8) -> "RationalTF":
        """Cancel numerator/denominator root pairs matching within `rel_tol`.

        Purely numerical: roots are matched greedily, the factors rebuilt from
        the survivors, and the result is kept only if the frequency response
        moved by less than 1e-6 relative on a probe grid (otherwise the
        original is returned unchanged). The DC gain is re-pinned exactly.
        """
        if self.num.is_zero or self.num.degree == 0 or self.den.degree == 0:
            return self
        zn = list(polynomial_roots(self.num))
        zd = list(polynomial_roots(self.den))
        keep_n: list[complex] = []
        for r in zn:
            best = None
            for i, q in enumerate(zd):
                if abs(r - q) <= rel_tol * max(1.0, abs(q)):
                    if best is None or abs(r - q) < abs(r - zd[best]):
                        best = i
            if best is None:
                keep_n.append(r)
            else:
                del zd[best]
        if len(keep_n) == len(zn):
            return self
        lead_ratio = self.num.coef[-1] / self.den.coef[-1]
        cand = RationalTF(Polynomial.from_roots(keep_n, 1.0).scaled(lead_ratio),
                          Polynomial.from_roots(zd, 1.0))
        # re-pin DC exactly, then verify the response is unchanged
        dc_old, dc_new = self.dc_gain(), cand.dc_gain()
        if dc_old != 0.0 and dc_new != 0.0 and np.isfinite(dc_new):
            cand = cand.scaled(dc_old / dc_new)
        radii = [abs(r) for r in zn + list(polynomial_roots(self.den)) if abs(r) > 0]
        lo = min(radii) if radii else 1.0
        hi = max(radii) if radii else 1.0
        w = np.logspace(np.log10(max(lo * 1e-2, 1e-6)), np.log10(hi * 1e2), 64)
        g_old = self(1j * w)
        g_new = cand(1j * w)
        ref = np.maximum(np.abs(g_old), 1e-300)
        if np.max(np.abs(g_new - g_old) / ref) > 1e-6:
            return self
        return cand

    def __repr__(self):
        return f"RationalTF(num={self.num!r}, den={self.den!r})"


def unity_feedback(g: RationalTF, gain: float = 1.0) -> RationalTF:
    """Closed loop gain*g / (1 + gain*g)."""
    num = g.num.scaled(gain)
    den = g.den + num
    if den.is_zero:
        raise ZeroDivisionError("feedback denominator vanished")
    return RationalTF(num, den)


def evaluate_at_jw(g: RationalTF, f_hz):
    """Evaluate g at s = j*2*pi*f for f > 0 (scalar or array), complex result.

    Raises PoleEvaluationError if the denominator magnitude at any requested
    frequency falls below 1e-12 of its coefficient scale.
    """
    f = np.asarray(f_hz, dtype=float)
    if np.any(f <= 0.0):
        raise ValueError("frequencies must be > 0")
    s = 2j * np.pi * f
    den_val = g.den(s)
    # a pole shows as cancellation far beyond double precision relative to
    # the term-magnitude envelope sum_k |c_k| |s|^k
    envelope = np.polyval(np.abs(g.den.coef)[::-1], np.abs(s))
    floor = 1e-12 * envelope
    if np.any(np.abs(den_val) < floor):
        bad = f[np.abs(den_val) < floor] if f.ndim else f
        raise PoleEvaluationError(f"evaluation at/near a pole (f = {bad})")
    out = g.num(s) / den_val
    return complex(out) if np.ndim(out) == 0 else out


def poles(g: RationalTF) -> np.ndarray:
    return polynomial_roots(g.den)


def zeros(g: RationalTF) -> np.ndarray:
    if g.num.degree == 0:
        return np.zeros(0, dtype=complex)
    return polynomial_roots(g.num)


@dataclass(frozen=True)
class FrequencyResponse:
    """Complex response samples on a strictly increasing positive grid."""

    freq_hz: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=float)
        v = np.asarray(self.value, dtype=complex)
        if f.shape != v.shape or f.ndim != 1:
            raise ValueError("freq_hz and value must be matching 1-D arrays")
        if np.any(f <= 0.0) or np.any(np.diff(f) <= 0.0):
            raise ValueError("frequencies must be positive and strictly increasing")
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "value", v)


# ---------------------------------------------------------------------------
# Actuation-line model builders
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LineBlocks:
    """The four internal blocks of the line model, plus the load impedance.

    With P the force-equivalent line pressure, F_c the (lagged) clutch force
    and x2 the fluid displacement, the loop structure is

        P  = drive * F_c - back * x2
        x2 = admittance * P
        F  = coupling * P

    so P/F_c = drive / (1 + back*admittance) and F/F_c adds the coupling.
    `load` is the force-per-displacement impedance of the external load; a
    blocked output has no finite impedance and carries None.
    """

    drive: RationalTF       # clutch force -> pressure, fluid held
    back: RationalTF        # fluid displacement -> pressure relief
    coupling: RationalTF    # pressure -> transmitted output force
    admittance: RationalTF  # pressure -> fluid displacement (m/N)
    load: RationalTF | None


def line_blocks(p: ActuationLineParams, load: LoadImpedance) -> LineBlocks:
    """Build the internal blocks from the physical parameters.

    The blocked output is the analytic limit of an infinitely stiff load and
    is built from its own closed forms, never by substituting a huge spring
    rate (which would wreck the polynomial conditioning).
    """
    master = Polynomial([p.k1, p.b1, p.m1])       # m1 s^2 + b1 s + k1
    master_inertial = Polynomial([0.0, p.b1, p.m1])
    fluid_inertial = Polynomial([0.0, p.b2, p.m2])
    drive = RationalTF(Polynomial([p.k1]), master)
    back = RationalTF(master_inertial.scaled(p.k1), master)
    if isinstance(load, BlockedLoad):
        fluid = Polynomial([p.k2, p.b2, p.m2])
        coupling = RationalTF(Polynomial([p.k2]), fluid)
        admittance = RationalTF(Polynomial([1.0]), fluid)
        z3 = None
    else:
        z3_poly = Polynomial([load.k3, load.b3, load.m3])
        series = z3_poly + Polynomial([p.k2])     # load and k2 in series
        den = fluid_inertial * series + z3_poly.scaled(p.k2)
        coupling = RationalTF(z3_poly.scaled(p.k2), den)
        admittance = RationalTF(series, den)
        z3 = RationalTF(z3_poly, Polynomial([1.0]))
    return LineBlocks(drive=drive, back=back, coupling=coupling,
                      admittance=admittance, load=z3)


def magnetic_lag(p: ActuationLineParams) -> RationalTF:
    """First-order lag of the clutch magnetic circuit, 1/(tau*s + 1)."""
    return RationalTF(Polynomial([1.0]), Polynomial([1.0, p.tau]))


def pressure_response(p: ActuationLineParams, load: LoadImpedance) -> RationalTF:
    """Clutch current to force-equivalent line pressure; DC gain K_I exactly."""
    blk = line_blocks(p, load)
    closed = (blk.drive * (RationalTF.constant(1.0) + blk.back * blk.admittance)
              .reciprocal()).simplified()
    return _pin_dc((magnetic_lag(p) * closed).simplified().scaled(p.K_I), p.K_I)


def force_response(p: ActuationLineParams, load: LoadImpedance) -> RationalTF:
    """Clutch current to transmitted output force; DC gain K_I exactly."""
    blk = line_blocks(p, load)
    closed = (blk.drive * (RationalTF.constant(1.0) + blk.back * blk.admittance)
              .reciprocal() * blk.coupling).simplified()
    return _pin_dc((magnetic_lag(p) * closed).simplified().scaled(p.K_I), p.K_I)


def _pin_dc(g: RationalTF, target: float) -> RationalTF:
    """Rescale the numerator so the DC gain equals `target` exactly.

    Composition and cancellation keep the DC gain within ~1e-12 relative; the
    builders promise it exactly, so the residual drift is divided out.
    """
    dc = g.dc_gain()
    if dc == 0.0 or not np.isfinite(dc):
        return g
    return g.scaled(target / dc)
