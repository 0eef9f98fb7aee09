"""Closed-form results for the cavity-emitter system.

Everything here is a pure function of the parameters (and, where a pulse is
involved, of the initial mode amplitudes). These serve both as the physics
layer of gate reports and as oracles for the time integrator.

With the atom eliminated, C2 obeys the damped driven oscillator

    C2'' + (gamma + kappa + i delta_a) C2' + [2 g^2 + gamma (kappa + i delta_a)] C2 = F(t),
    F(t) = f0'(t) + (kappa + i delta_a) f0(t),

where f0 is the free drive ``g sqrt(2) sum_n M'_n C_n+(0) exp(-i delta_n t)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec
from scipy.optimize import brentq

from .errors import NoRealRoot, SingularDenominator, ZeroCoupling
from .model import ModeGrid, SystemParams, coupling_coefficients

SINGULAR_TOL = 1e-12
DEGENERATE_TOL = 1e-9
ADIABATIC_THRESHOLD = 0.1


# ---------------------------------------------------------------- roots


@dataclass(frozen=True)
class CharacteristicRoots:
    """The two decay rates of the driven oscillator for C2."""

    lambda1: complex
    lambda2: complex

    @property
    def degenerate(self) -> bool:
        return abs(self.lambda1 - self.lambda2) < DEGENERATE_TOL

    def as_tuple(self) -> tuple[complex, complex]:
        return self.lambda1, self.lambda2


def _oscillator_coefficients(params: SystemParams) -> tuple[complex, complex]:
    k = params.kappa + 1j * params.delta_a
    return params.gamma + k, 2.0 * params.g**2 + params.gamma * k


def characteristic_roots(params: SystemParams) -> CharacteristicRoots:
    """Roots of ``l^2 + b l + c = 0``, ordered by real part then imaginary part, descending."""
    b, c = _oscillator_coefficients(params)
    disc = cmath.sqrt(b * b - 4.0 * c)
    # pick the sign that avoids cancellation, then recover the other root from the product
    if (b.conjugate() * disc).real < 0:
        disc = -disc
    q = -0.5 * (b + disc)
    r1 = q
    r2 = c / q if q != 0 else -b - q
    roots = sorted([complex(r1), complex(r2)], key=lambda z: (z.real, z.imag), reverse=True)
    return CharacteristicRoots(*roots)


def adiabaticity_ratio(params: SystemParams, roots: CharacteristicRoots | None = None) -> float:
    """``1 / (T min|lambda|)``; values above ~0.1 mean the adiabatic maps are unreliable."""
    if roots is None:
        roots = characteristic_roots(params)
    slow = min(abs(roots.lambda1), abs(roots.lambda2))
    if slow == 0:
        return math.inf
    return 1.0 / (params.T * slow)


# ---------------------------------------------------------------- drive and exact C2


def _drive_weights(grid: ModeGrid, params: SystemParams, c_plus_0) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(c_plus_0, dtype=complex)
    if c.shape != (grid.size,):
        raise ValueError(f"expected {grid.size} amplitudes, got shape {c.shape}")
    w = params.g * math.sqrt(2.0) * coupling_coefficients(grid, params.kappa) * c
    return w, grid.frequencies + params.delta_a


def drive_term(t, grid: ModeGrid, params: SystemParams, c_plus_0) -> complex | np.ndarray:
    """Free drive ``f0(t)`` seen by the atom; vectorised over ``t``."""
    w, dn = _drive_weights(grid, params, c_plus_0)
    ts = np.asarray(t, dtype=float)
    out = np.exp(-1j * np.multiply.outer(ts, dn)) @ w
    return complex(out) if out.ndim == 0 else out


def drive_term_derivative(t, grid: ModeGrid, params: SystemParams, c_plus_0):
    """Term-wise time derivative of :func:`drive_term`."""
    w, dn = _drive_weights(grid, params, c_plus_0)
    ts = np.asarray(t, dtype=float)
    out = np.exp(-1j * np.multiply.outer(ts, dn)) @ (-1j * dn * w)
    return complex(out) if out.ndim == 0 else out


def _green(tau: float, roots: CharacteristicRoots) -> complex:
    l1, l2 = roots.as_tuple()
    if roots.degenerate:
        lam = 0.5 * (l1 + l2)
        return tau * cmath.exp(lam * tau)
    return (cmath.exp(l1 * tau) - cmath.exp(l2 * tau)) / (l1 - l2)


def exact_c2(
    t,
    grid: ModeGrid,
    params: SystemParams,
    c_plus_0,
    *,
    epsabs: float = 1e-12,
    epsrel: float = 1e-10,
) -> complex | np.ndarray:
    """C2(t) for an atom starting in its ground state, by quadrature of the oscillator Green's function.

    The oscillator starts from ``C2(0) = 0`` with ``C2'(0) = f0(0)``. For a pulse
    that starts away from the mirror ``f0(0)`` vanishes and only the convolution
    with ``F`` remains; the homogeneous term matters for short toy problems
    whose modes overlap the cavity at ``t = 0``.

    Close to degenerate roots (``|l1 - l2| < 1e-9``) the confluent kernel
    ``tau exp(l tau)`` is used.
    """
    roots = characteristic_roots(params)
    w, dn = _drive_weights(grid, params, c_plus_0)
    k = params.kappa + 1j * params.delta_a
    wf = (k - 1j * dn) * w  # F(t) = sum_n wf_n exp(-i dn_n t)
    f00 = complex(np.sum(w))

    def one(tt: float) -> complex:
        if tt <= 0.0:
            return 0.0j
        if not np.any(wf):
            return f00 * _green(tt, roots)

        def integrand(tp):
            return np.array([_green(tt - tp, roots) * complex(np.dot(wf, np.exp(-1j * dn * tp)))])

        val, _ = quad_vec(integrand, 0.0, tt, epsabs=epsabs, epsrel=epsrel, limit=2000)
        return complex(val[0]) + f00 * _green(tt, roots)

    ts = np.asarray(t, dtype=float)
    if ts.ndim == 0:
        return one(float(ts))
    return np.array([one(float(x)) for x in ts.ravel()]).reshape(ts.shape)


# ---------------------------------------------------------------- adiabatic maps


def _check(den: complex, scale: float) -> None:
    if abs(den) < SINGULAR_TOL * scale:
        raise SingularDenominator(f"denominator {den!r} vanishes")


def adiabatic_c2_multiplier(params: SystemParams) -> complex:
    """Ratio ``C2 / f0`` when C2 follows the drive adiabatically."""
    kd = params.kappa - 1j * params.Delta
    omega = params.Delta + params.delta_a
    den = 2.0 * params.g**2 + kd * (params.gamma - 1j * omega)
    _check(den, params.kappa**2)
    return kd / den


def adiabatic_c2(params: SystemParams, f0_value):
    """Adiabatic C2 for a given drive value (scalar or array)."""
    m = adiabatic_c2_multiplier(params)
    return m * np.asarray(f0_value) if np.ndim(f0_value) else m * complex(f0_value)


@dataclass(frozen=True)
class FinalMultiplier:
    """Uniform factor on ``C_n+`` after the pulse, and its phase-prefactor factorisation."""

    multiplier: complex
    prefactor: complex
    reflection: complex


def adiabatic_final_multiplier(params: SystemParams) -> FinalMultiplier:
    """Factor applied to every ``C_n+(0)`` by a slowly varying pulse.

    The multiplier is ``prefactor * reflection`` with the pure phase
    ``prefactor = -(kappa - i Delta)/(kappa + i Delta)``. For ``gamma = 0`` it has
    unit modulus; for ``gamma > 0`` its modulus is below one.
    """
    g2 = 2.0 * params.g**2
    kap, D = params.kappa, params.Delta
    kp, km = kap + 1j * D, kap - 1j * D
    w = params.gamma - 1j * (D + params.delta_a)
    K = kap**2 + D**2
    pref = -km / kp
    if g2 == 0:
        # the photon never reaches the atom; the limit is exact even on resonance
        return FinalMultiplier(1.0 + 0j, complex(pref), complex(1.0 / pref))
    den = g2 * kp + K * w
    _check(den, kap**3)
    mult = -(g2 * km - K * w) / den
    ref_den = g2 + km * w
    _check(ref_den, kap**2)
    refl = (g2 - kp * w) / ref_den
    return FinalMultiplier(complex(mult), complex(pref), complex(refl))


def spectral_multipliers(
    nu, params: SystemParams, band: tuple[float, float] | None = None
) -> np.ndarray:
    """Exact per-mode scattering factor ``C_n+(inf) / C_n+(0)`` at mode offsets ``nu``.

    Unlike the adiabatic factor this keeps the full frequency dependence, so
    it is exact for any pulse in the continuum limit. With ``band=(a, b)`` the
    atom's self-energy is computed for a continuum truncated to that interval,
    which reproduces a finite mode grid of the same band.
    """
    nu = np.asarray(nu, dtype=float)
    kap = params.kappa
    g2 = 2.0 * params.g**2
    lor = kap / (nu**2 + kap**2)
    omega = nu + params.delta_a
    if band is None:
        sigma = g2 * (kap + 1j * nu) / (nu**2 + kap**2)
    else:
        a, b = band
        shift = _principal_part(nu, a, b, kap)
        inside = (nu > a) & (nu < b)
        sigma = (g2 / math.pi) * (math.pi * lor * inside + 1j * shift)
    chi = 1.0 / (params.gamma - 1j * omega + sigma)
    return 1.0 - 2.0 * g2 * lor * chi


def _principal_part(x, a: float, b: float, kappa: float):
    """``PV int_a^b kappa/(y^2+kappa^2) / (x - y) dy``."""
    x = np.asarray(x, dtype=float)
    A = kappa / (x**2 + kappa**2)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(x - a)) - np.log(np.abs(x - b))
    tail = 0.5 * math.log((b**2 + kappa**2) / (a**2 + kappa**2))
    arc = (x / kappa) * (math.atan(b / kappa) - math.atan(a / kappa))
    return A * (logs + tail + arc)


def balanced_band_center(Delta: float, span: float, kappa: float = 1.0) -> float:
    """Centre of a ``+-span`` band whose truncated self-energy is exact at ``Delta``.

    Cutting the continuum shifts the atomic resonance seen by a pulse at
    ``Delta``. For a symmetric band about zero the shift is ``O(kappa/span^3)``
    and does not average away with pulse length; centring near ``Delta/3``
    cancels it. Returns the exact zero of the shift.
    """
    full = math.pi * Delta / (Delta**2 + kappa**2)

    def err(c):
        return float(_principal_part(Delta, c - span, c + span, kappa)) - full

    guess = Delta / 3.0
    step = 0.25 * span
    lo, hi = guess - step, guess + step
    if lo - span >= Delta or hi + span <= Delta or err(lo) * err(hi) > 0:
        return guess
    return brentq(err, lo, hi, xtol=1e-14)


def first_order_correction_shape(
    grid: ModeGrid, params: SystemParams, c_plus_0, denominator: str = "mode"
) -> np.ndarray:
    """Unnormalised shape of the leading non-adiabatic change of ``C_n+``.

    Proportional to ``(n - n0) C_n+(0) / (nu^2 + kappa^2)``. With
    ``denominator="carrier"`` the Lorentzian is evaluated at the carrier
    ``Delta`` instead, which makes the shape odd about ``n0`` for a symmetric pulse.
    """
    c = np.asarray(c_plus_0, dtype=complex)
    n0 = params.n0 if params.n0 is not None else round(params.Delta / grid.spacing)
    if denominator == "mode":
        den = grid.frequencies**2 + params.kappa**2
    elif denominator == "carrier":
        den = params.Delta**2 + params.kappa**2
    else:
        raise ValueError(f"denominator must be 'mode' or 'carrier', got {denominator!r}")
    return (grid.n - n0) * c / den


# ---------------------------------------------------------------- gate


def gate_phase(params: SystemParams) -> float:
    """Gate angle phi in (-pi/2, pi/2); the lossless multiplier is ``-exp(2 i phi)``."""
    if params.g == 0:
        raise ZeroCoupling("gate phase is undefined for g = 0")
    D, kap, g2 = params.Delta, params.kappa, 2.0 * params.g**2
    num = (D + params.delta_a) * (kap**2 + D**2) - g2 * D
    return math.atan(num / (g2 * kap))


def sqrt_swap_residual(g: float, Delta: float, delta_a: float, kappa: float = 1.0) -> float:
    return (Delta + delta_a) * (kappa**2 + Delta**2) - 2.0 * g**2 * (Delta + kappa)


def solve_sqrt_swap_detuning(
    g: float,
    *,
    Delta: float | None = None,
    delta_a: float | None = None,
    kappa: float = 1.0,
) -> float:
    """Detuning that makes the gate a square root of SWAP (phi = pi/4).

    Pass exactly one of ``Delta`` (solve for ``delta_a``, closed form) or
    ``delta_a`` (solve the cubic for ``Delta``; the real root of smallest
    magnitude is returned).

    Raises:
        ZeroCoupling: ``g == 0``.
        NoRealRoot: no real solution was found.
    """
    if g <= 0:
        raise ZeroCoupling("the condition needs g > 0")
    if (Delta is None) == (delta_a is None):
        raise ValueError("give exactly one of Delta or delta_a")
    g2 = 2.0 * g**2
    if Delta is not None:
        return g2 * (Delta + kappa) / (kappa**2 + Delta**2) - Delta
    coeffs = [1.0, delta_a, kappa**2 - g2, delta_a * kappa**2 - g2 * kappa]
    roots = np.roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = [r.real for r in roots if abs(r.imag) <= 1e-7 * scale]
    if not real:
        raise NoRealRoot(f"no real root for g={g}, delta_a={delta_a}")
    x = min(real, key=abs)
    p = np.poly1d(coeffs)
    dp = p.deriv()
    for _ in range(8):
        d = dp(x)
        if d == 0:
            break
        step = p(x) / d
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return float(x)


@dataclass(frozen=True)
class GateMatrix:
    """Gate on the (|H,1>, |V,0>) block; |H,0> and |V,1> are left unchanged."""

    block: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.block, dtype=complex)
        if b.shape != (2, 2):
            raise ValueError(f"block must be 2x2, got {b.shape}")
        object.__setattr__(self, "block", b)

    def full(self) -> np.ndarray:
        """4x4 matrix in the basis (|H,0>, |H,1>, |V,0>, |V,1>)."""
        u = np.eye(4, dtype=complex)
        u[1:3, 1:3] = self.block
        return u

    def __matmul__(self, other: GateMatrix) -> GateMatrix:
        return GateMatrix(self.block @ other.block)

    def is_unitary(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.block.conj().T @ self.block, np.eye(2), rtol=0, atol=tol))


def gate_matrix(phi: float) -> GateMatrix:
    s, c = math.sin(phi), math.cos(phi)
    return GateMatrix(-cmath.exp(1j * phi) * np.array([[1j * s, c], [c, 1j * s]]))


def compose_protocol(gates) -> GateMatrix:
    """Product of gates applied in list order (the first gate acts first)."""
    gates = list(gates)
    if not gates:
        raise ValueError("need at least one gate")
    out = gates[0]
    for gate in gates[1:]:
        out = gate @ out
    return out


def io_prefactor(kappa: float, Delta: float) -> complex:
    """Reflection factor of the empty cavity for the field operator, ``-(kappa+iD)/(kappa-iD)``."""
    return -(kappa + 1j * Delta) / (kappa - 1j * Delta)


# ---------------------------------------------------------------- loss


@dataclass(frozen=True)
class LossEstimate:
    general: float
    sqrt_swap: float | None
    on_sqrt_swap: bool


def loss_probability(params: SystemParams, tol: float = 1e-9) -> LossEstimate:
    """Spontaneous-emission loss to first order in gamma for a V (or H) photon.

    ``general`` holds for any detunings; ``sqrt_swap`` is the simplified form,
    reported only when the parameters satisfy the phi = pi/4 condition to
    within ``tol`` (relative).
    """
    g2 = 2.0 * params.g**2
    kap, D = params.kappa, params.Delta
    omega = D + params.delta_a
    den = (g2 - D * omega) ** 2 + kap**2 * omega**2
    if params.gamma == 0:
        general = 0.0
    else:
        _check(den, kap**4)
        general = 2.0 * params.gamma * g2 * kap / den
    on = params.g > 0 and abs(
        sqrt_swap_residual(params.g, D, params.delta_a, kap)
    ) <= tol * max(kap**3, g2 * kap)
    special = kap * params.gamma / g2 * (1.0 + (D / kap) ** 2) if on else None
    return LossEstimate(float(general), special, bool(on))
