"""Finite-volume couplings in a periodic cube of edge L.

Permanent moments get two independent estimators of the same quantity:

* ``xi_permanent_images``   real-space sum over lattice-translated image
  dipoles, accumulated in complete cubic shells (the ordering under which the
  conditionally convergent sum settles fastest).

* ``xi_permanent_modesum``  reciprocal-space sum over the discrete field
  modes k = (2 pi / L) n with a Gaussian regulator exp(-k^2 sigma^2).  The
  bare k-sum exceeds the shell-ordered image sum by the uniform background
  constant (2/3) mu0 (m1.m2) / V (the usual shape/background ambiguity of
  dipole lattice sums), so that constant is subtracted to make both
  estimators target the same convention, in which the n = 0 term is exactly
  the free-space coupling.

Transition moments: per mode the coupling weight is
      omega_k / (omega_k^2 - Omega^2)  =  (1/2) [1/(w-Om) + 1/(w+Om)],
whose Omega -> 0 limit is the permanent 1/omega_k weight.  ``full_sum``
splits this into the image sum plus a resonant envelope sum; ``near_resonant``
keeps only modes within a window of the resonance, where the antiresonant
partner is negligible and the weight reduces to 1/(omega_k - Omega).

A lossless box does not self-average: the envelope sum carries O(1)
contributions from the coherent radiation of image dipoles at any finite
mode density.  For dense-mode comparisons the envelope weight can therefore
be averaged over a Gaussian band of transition frequencies of width
``omega_sigma`` (a linewidth), which damps image-phase coherence like
exp(-(omega_sigma d / c)^2 / 2) while biasing the direct term only at
O(omega_sigma^2).  The average is exact through the Dawson function:
      < 1/(Delta - t) >,  t ~ N(0, s^2)   =   sqrt(2)/s * dawsn(Delta / (sqrt(2) s)).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import dawsn

from .errors import (
    ConvergenceError,
    ImageCoincidenceError,
    ResonanceError,
    ValidationError,
)
from .freespace import CouplingResult, classical_coupling, xi_permanent, xi_transition
from .model import (
    NATURAL,
    PairGeometry,
    TransitionSpec,
    UnitSystem,
    moment_array,
    polarization_basis,
    reduced_coupling,
)

DEFAULT_SIGMA_OVER_L = (0.10, 0.07, 0.05, 0.035)
_COINCIDENCE_TOL = 1e-9


@dataclass(frozen=True)
class BoxSpec:
    """Periodic cube of edge L; modes k = (2 pi / L) n, n integer, n != 0."""

    L: float

    def __post_init__(self):
        if not (self.L > 0.0 and np.isfinite(self.L)):
            raise ValidationError(f"box edge must be positive, got {self.L}")

    @property
    def volume(self) -> float:
        return self.L**3

    @property
    def k0(self) -> float:
        return 2.0 * np.pi / self.L

    def min_image(self, r_vec) -> np.ndarray:
        """Reduce each component into [-L/2, L/2); the coupling only depends
        on the separation modulo the lattice."""
        r = np.asarray(r_vec, dtype=float)
        return r - self.L * np.floor(r / self.L + 0.5)


@dataclass(frozen=True)
class LatticeSumReport:
    value: float
    shells_used: int
    last_shell_delta: float
    regulator_sigma: float = 0.0
    mode_count: int | None = None
    note: str = ""


@dataclass(frozen=True)
class RatioResult:
    """Box-to-free-space coupling ratio, with a divergence flag instead of a
    blow-up when the free-space reference sits at an angular zero."""

    ratio: float | None
    diverged: bool
    box: CouplingResult
    free: CouplingResult


def _reduced_geometry(geom: PairGeometry, box: BoxSpec) -> PairGeometry:
    r_red = box.min_image(geom.r_vec)
    if np.linalg.norm(r_red) < _COINCIDENCE_TOL * box.L:
        raise ImageCoincidenceError(
            "separation reduces onto a lattice translation; couplings diverge")
    return PairGeometry.from_separation(r_red)


@lru_cache(maxsize=64)
def _shell_vectors(j: int) -> np.ndarray:
    """Integer vectors with max-norm exactly j, in lexicographic order."""
    ns = np.arange(-j, j + 1)
    grid = np.stack(np.meshgrid(ns, ns, ns, indexing="ij"), axis=-1).reshape(-1, 3)
    shell = grid[np.max(np.abs(grid), axis=1) == j]
    shell.setflags(write=False)
    return shell


def xi_permanent_images(m1, m2, geom: PairGeometry, box: BoxSpec,
                        shell_max: int = 8, tol: float | None = None,
                        units: UnitSystem = NATURAL) -> CouplingResult:
    """Permanent coupling as the sum over image dipoles at r - L n.

    Shells j = max(|n_x|,|n_y|,|n_z|) are completed one at a time; with
    ``tol`` set, summation stops once a full-shell increment drops below
    tol * |partial| (absolute once the partial sum is below the natural
    coupling scale) and raises ConvergenceError if shell_max is exhausted
    first.  With ``tol=None`` all shells up to shell_max are summed.
    """
    if shell_max < 0:
        raise ValidationError("shell_max must be >= 0")
    rgeom = _reduced_geometry(geom, box)
    a = moment_array(m1)
    b = moment_array(m2)
    scale = units.mu0_over_4pi * np.linalg.norm(a) * np.linalg.norm(b) / rgeom.r**3

    # n = 0 term: exactly the free-space closed form
    increments = [classical_coupling(m1, m2, rgeom, units).xi]
    total = increments[0]
    shells_used = 0
    converged = tol is None
    for j in range(1, shell_max + 1):
        delta = rgeom.r_vec[None, :] - box.L * _shell_vectors(j)
        dist = np.linalg.norm(delta, axis=1)
        if np.any(dist < _COINCIDENCE_TOL * box.L):
            raise ImageCoincidenceError(
                f"image at shell {j} coincides with the separation vector")
        e = delta / dist[:, None]
        ang = (a @ b) - 3.0 * (e @ a) * (e @ b)
        inc = units.mu0_over_4pi * float(np.sum(ang / dist**3))
        increments.append(inc)
        total += inc
        shells_used = j
        if tol is not None and abs(inc) <= tol * max(abs(total), scale):
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"image sum not converged to tol={tol:g} within {shell_max} shells",
            series=increments, residual=abs(increments[-1]), tol=tol)
    report = LatticeSumReport(value=total, shells_used=shells_used,
                              last_shell_delta=abs(increments[-1]) if shells_used else 0.0)
    return CouplingResult(xi=total, reduced=reduced_coupling(total, m1, m2, rgeom, units),
                          meta=report)


def _mode_slabs(n_max: int):
    """Yield (weight, integer-vector array) over half the lattice.

    Modes come in +-k pairs with identical summands (t_k and cos(k.r) are
    both even), so slabs ix > 0 carry weight 2 and the ix = 0 slab is halved
    the same way in the (iy, iz) plane.  k = 0 is excluded.
    """
    ns = np.arange(-n_max, n_max + 1)
    ny, nz = np.meshgrid(ns, ns, indexing="ij")
    plane = np.stack([ny, nz], axis=-1).reshape(-1, 2)
    # ix = 0 slab: keep (iy, iz) lexicographically positive pairs
    pos = plane[(plane[:, 0] > 0) | ((plane[:, 0] == 0) & (plane[:, 1] > 0))]
    slab0 = np.concatenate([np.zeros((len(pos), 1), dtype=int), pos], axis=1)
    yield 2.0, slab0
    for ix in range(1, n_max + 1):
        slab = np.concatenate(
            [np.full((len(plane), 1), ix, dtype=int), plane], axis=1)
        yield 2.0, slab


def _mode_sum_multi(m1: np.ndarray, m2: np.ndarray, r_vec: np.ndarray,
                    box: BoxSpec, weight_fns, n_max: int) -> tuple[list[float], int]:
    """Sum weight(k) * t_k * cos(k.r) over the mode lattice (k != 0).

    Several weights share one lattice pass; building the k arrays dominates
    the cost, the weights themselves are cheap.
    """
    totals = [0.0] * len(weight_fns)
    count = 0
    for pair_w, slab in _mode_slabs(n_max):
        k = box.k0 * slab.astype(float)
        k2 = np.einsum("ij,ij->i", k, k)
        kn = np.sqrt(k2)
        khat = k / kn[:, None]
        base = ((m1 @ m2) - (khat @ m1) * (khat @ m2)) * np.cos(k @ r_vec)
        for i, wfn in enumerate(weight_fns):
            totals[i] += pair_w * float(np.sum(wfn(kn) * base))
        count += int(pair_w) * len(slab)
    return totals, count


def _mode_sum(m1: np.ndarray, m2: np.ndarray, r_vec: np.ndarray, box: BoxSpec,
              weight_fn, n_max: int) -> tuple[float, int]:
    totals, count = _mode_sum_multi(m1, m2, r_vec, box, [weight_fn], n_max)
    return totals[0], count


def _background_constant(m1: np.ndarray, m2: np.ndarray, box: BoxSpec,
                         units: UnitSystem) -> float:
    # uniform-background offset between the bare k-sum and the shell-ordered
    # image sum; subtracting it pins the image-sum convention
    return (2.0 / 3.0) * units.mu0 * float(m1 @ m2) / box.volume


def xi_permanent_modesum(m1, m2, geom: PairGeometry, box: BoxSpec,
                         sigma_schedule=None, k_shell_max: int | None = None,
                         units: UnitSystem = NATURAL,
                         tol: float | None = None) -> CouplingResult:
    """Permanent coupling from the regulated discrete mode sum.

    For each sigma in the schedule the sum carries exp(-k^2 sigma^2); the
    regulator error decays like exp(-r^2 / 4 sigma^2), so the smallest sigma
    supplies the value and the schedule differences supply a (conservative)
    residual estimate.  Polynomial extrapolation in sigma^2 is deliberately
    not used: the deviation is not polynomial and extrapolating amplifies the
    large-sigma error instead of cancelling it.
    """
    rgeom = _reduced_geometry(geom, box)
    a = moment_array(m1)
    b = moment_array(m2)
    if sigma_schedule is None:
        sigma_schedule = tuple(s * box.L for s in DEFAULT_SIGMA_OVER_L)
    sigmas = tuple(float(s) for s in sigma_schedule)
    if len(sigmas) < 1 or any(s <= 0 for s in sigmas):
        raise ValidationError("sigma_schedule must hold positive lengths")
    if any(s2 >= s1 for s1, s2 in zip(sigmas, sigmas[1:])):
        raise ValidationError("sigma_schedule must be strictly decreasing")

    background = _background_constant(a, b, box, units)
    values = []
    mode_count = 0
    n_used = 0
    for sigma in sigmas:
        n_max = (k_shell_max if k_shell_max is not None
                 else int(np.ceil(5.0 * box.L / (2.0 * np.pi * sigma))) + 2)
        raw, mode_count = _mode_sum(
            a, b, rgeom.r_vec, box,
            lambda kn, s=sigma: np.exp(-(kn * s) ** 2), n_max)
        values.append(-(units.mu0 / box.volume) * raw - background)
        n_used = n_max

    if len(values) >= 2:
        deltas = np.abs(np.diff(values))
        residual = float(deltas[-1])
        if len(deltas) >= 2 and deltas[-2] > 0:
            residual = float(deltas[-1] * min(1.0, deltas[-1] / deltas[-2]))
        last_delta = float(deltas[-1])
    else:
        residual = last_delta = np.inf if tol is not None else 0.0
    value = values[-1]
    scale = units.mu0_over_4pi * np.linalg.norm(a) * np.linalg.norm(b) / rgeom.r**3
    if tol is not None and residual > tol * max(abs(value), scale):
        raise ConvergenceError(
            f"mode sum residual {residual:.3e} above tol={tol:g} over the "
            f"sigma schedule", series=list(zip(sigmas, values)),
            residual=residual, tol=tol)
    report = LatticeSumReport(value=value, shells_used=n_used,
                              last_shell_delta=last_delta,
                              regulator_sigma=sigmas[-1], mode_count=mode_count)
    return CouplingResult(xi=value, reduced=reduced_coupling(value, m1, m2, rgeom, units),
                          meta=report)


# ---------------------------------------------------------------------------
# transition moments

@dataclass(frozen=True)
class FullSumParams:
    """Envelope-sum controls for the full transition estimator.

    ``k_flat``  modes below this |k| enter unregulated (default
    max(1.5 Omega/c, 8/r)); ``sigma_reg`` sets the Gaussian roll-off beyond
    it (default r/4).  ``omega_sigma`` > 0 switches on the Gaussian
    frequency averaging of the resonant weight (see module docstring).
    """

    k_flat: float | None = None
    sigma_reg: float | None = None
    omega_sigma: float = 0.0
    shell_max: int = 8
    max_modes: float = 1.5e9


def _dawson_pv_kernel(delta: np.ndarray, s: float) -> np.ndarray:
    return np.sqrt(2.0) / s * dawsn(delta / (np.sqrt(2.0) * s))


def _min_detuning(omega, box: BoxSpec, n_max: int, units: UnitSystem):
    """Closest mode frequency to omega among shells up to n_max."""
    q = np.arange(1, 3 * n_max**2 + 1)
    # representable |n|^2 values only (not of the form 4^a (8b + 7))
    qq = q.copy()
    while True:
        div = (qq % 4 == 0)
        if not div.any():
            break
        qq = np.where(div, qq // 4, qq)
    rep = (qq % 8) != 7
    omegas = units.c * box.k0 * np.sqrt(q[rep].astype(float))
    i = int(np.argmin(np.abs(omegas - omega)))
    return float(omegas[i] - omega), int(q[rep][i])


def xi_transition_box(m1, m2, geom: PairGeometry, box: BoxSpec, ts: TransitionSpec,
                      estimator: str = "near_resonant",
                      window: float | None = None,
                      delta_min: float | None = None,
                      full_params: FullSumParams | None = None,
                      units: UnitSystem = NATURAL) -> CouplingResult:
    """Transition-moment coupling in the box.

    ``near_resonant`` sums -(mu0 w_k / V) t_k cos(k.r) / (w_k - Omega) over
    modes with |w_k - Omega| <= window (default 0.2 Omega); an empty window
    returns a flagged zero rather than a silent one.  ``full_sum`` adds the
    image sum (static part) to the regulated envelope sum over all modes.
    Boxes with a mode closer than ``delta_min`` (default 1e-6 Omega) to the
    resonance are rejected: the time-local coupling is ill-defined there.
    """
    rgeom = _reduced_geometry(geom, box)
    a = moment_array(m1)
    b = moment_array(m2)
    omega = ts.omega
    if delta_min is None:
        delta_min = 1e-6 * omega
    params = full_params or FullSumParams()

    if estimator == "near_resonant":
        W = 0.2 * omega if window is None else float(window)
        if W <= 0:
            raise ValidationError("window must be positive")
        n_max = int(np.ceil((omega + W) / (units.c * box.k0))) + 1
        det, q = _min_detuning(omega, box, n_max, units)
        if abs(det) < delta_min:
            raise ResonanceError(
                f"mode shell |n|^2={q} lies within delta_min of the transition "
                f"(detuning {det:.3e})", n=q, omega_k=omega + det, detuning=det)

        mode_count = _count_window_modes(box, omega, W, n_max, units)
        if mode_count == 0:
            report = LatticeSumReport(value=0.0, shells_used=n_max,
                                      last_shell_delta=0.0, mode_count=0,
                                      note="empty-window")
            return CouplingResult(xi=0.0, reduced=0.0, meta=report)

        def weight(kn, W=W):
            wk = units.c * kn
            sel = np.abs(wk - omega) <= W
            out = np.zeros_like(kn)
            out[sel] = wk[sel] / (wk[sel] - omega)
            return out

        raw, _ = _mode_sum(a, b, rgeom.r_vec, box, weight, n_max)
        value = -(units.mu0 / box.volume) * raw
        report = LatticeSumReport(value=value, shells_used=n_max,
                                  last_shell_delta=0.0, mode_count=mode_count)
        return CouplingResult(xi=value,
                              reduced=reduced_coupling(value, m1, m2, rgeom, units),
                              meta=report)

    if estimator != "full_sum":
        raise ValidationError(f"unknown estimator {estimator!r}")

    k_flat = params.k_flat if params.k_flat is not None else max(
        1.5 * omega / units.c, 8.0 / rgeom.r)
    sigma_reg = params.sigma_reg if params.sigma_reg is not None else rgeom.r / 4.0
    if k_flat <= omega / units.c:
        raise ValidationError("k_flat must exceed the resonant wavenumber")
    n_max = int(np.ceil((k_flat + 4.5 / sigma_reg) / box.k0))
    if (2 * n_max + 1) ** 3 > params.max_modes:
        raise ValidationError(
            f"envelope sum needs ({2 * n_max + 1})^3 modes, above the "
            f"max_modes budget {params.max_modes:g}; enlarge sigma_reg or r/L")
    if params.omega_sigma == 0.0:
        det, q = _min_detuning(omega, box, n_max, units)
        if abs(det) < delta_min:
            raise ResonanceError(
                f"mode shell |n|^2={q} lies within delta_min of the transition "
                f"(detuning {det:.3e})", n=q, omega_k=omega + det, detuning=det)

    static = xi_permanent_images(m1, m2, rgeom, box, shell_max=params.shell_max,
                                 units=units)

    def env_weight(kn, sigma):
        wk = units.c * kn
        g = np.exp(-(sigma * np.maximum(0.0, kn - k_flat)) ** 2)
        s = params.omega_sigma
        if s > 0.0:
            core = -1.0 + 0.5 * wk * (_dawson_pv_kernel(wk - omega, s)
                                      + _dawson_pv_kernel(wk + omega, s))
        else:
            core = omega**2 / (wk**2 - omega**2)
        return g * core

    (raw, raw2), mode_count = _mode_sum_multi(
        a, b, rgeom.r_vec, box,
        [lambda kn: env_weight(kn, sigma_reg),
         lambda kn: env_weight(kn, 1.25 * sigma_reg)], n_max)
    env = -(units.mu0 / box.volume) * raw
    env2 = -(units.mu0 / box.volume) * raw2
    value = static.xi + env
    report = LatticeSumReport(value=value, shells_used=static.meta.shells_used,
                              last_shell_delta=abs(env - env2),
                              regulator_sigma=sigma_reg, mode_count=mode_count)
    return CouplingResult(xi=value,
                          reduced=reduced_coupling(value, m1, m2, rgeom, units),
                          meta=report)


def _count_window_modes(box: BoxSpec, omega: float, W: float, n_max: int,
                        units: UnitSystem) -> int:
    count = 0
    for pair_w, slab in _mode_slabs(n_max):
        kn = box.k0 * np.linalg.norm(slab.astype(float), axis=1)
        count += int(pair_w) * int(np.count_nonzero(
            np.abs(units.c * kn - omega) <= W))
    return count


def mode_g(m, x_pos, n_vec, box: BoxSpec,
           units: UnitSystem = NATURAL) -> tuple[complex, complex]:
    """Raw coupling constants g for one lattice mode, per polarization.

    g_sigma = -i (m . (e_k x e_sigma)) sqrt(mu0 hbar w_k / 2V) e^{i k.x};
    used as the independent route for single-mode cross-checks.
    """
    mvec = moment_array(m)
    x = np.asarray(x_pos, dtype=float)
    n = np.asarray(n_vec, dtype=float)
    if not np.any(n):
        raise ValidationError("k = 0 carries no transverse mode")
    k = box.k0 * n
    kn = float(np.linalg.norm(k))
    khat = k / kn
    wk = units.c * kn
    zbar = np.sqrt(units.mu0 * units.hbar * wk / (2.0 * box.volume))
    phase = np.exp(1j * float(k @ x))
    out = []
    for pol in polarization_basis(khat):
        e_cross = np.cross(khat, pol)
        out.append(-1j * float(mvec @ e_cross) * zbar * phase)
    return out[0], out[1]


def ratio_to_free(m1, m2, geom: PairGeometry, box: BoxSpec,
                  kind: str = "permanent", ts: TransitionSpec | None = None,
                  shell_max: int = 8, tol: float | None = None,
                  estimator: str = "near_resonant",
                  full_params: FullSumParams | None = None,
                  units: UnitSystem = NATURAL,
                  floor: float = 1e-12) -> RatioResult:
    """Box coupling over the free-space coupling at the (minimum-image)
    separation; flagged divergent when the free-space reduced value sits
    below ``floor``."""
    rgeom = _reduced_geometry(geom, box)
    if kind == "permanent":
        free = xi_permanent(m1, m2, rgeom, units)
        boxed = xi_permanent_images(m1, m2, rgeom, box, shell_max=shell_max,
                                    tol=tol, units=units)
    elif kind == "transition":
        if ts is None:
            raise ValidationError("transition ratio requires a TransitionSpec")
        free = xi_transition(m1, m2, rgeom, ts, units)
        boxed = xi_transition_box(m1, m2, rgeom, box, ts, estimator=estimator,
                                  full_params=full_params, units=units)
    else:
        raise ValidationError(f"unknown kind {kind!r}")
    if abs(free.reduced) <= floor:
        return RatioResult(ratio=None, diverged=True, box=boxed, free=free)
    return RatioResult(ratio=boxed.xi / free.xi, diverged=False, box=boxed, free=free)
