"""Two-level dynamics generated by real-spectrum non-Hermitian Hamiltonians.

Operators of the family ``H = s * (A - iB) . sigma`` with real 3-vectors
``A``, ``B`` satisfying ``A . B = 0`` and ``|A| > |B|`` (and a positive
overall scale ``s``) have the purely real spectrum ``+/- s sqrt(A^2 - B^2)``.
A sensible quantum mechanics is recovered by renormalising the state after
each application of ``exp(-i H t)``; on the Bloch sphere the renormalised
flow obeys the nonlinear equation of motion

    dS/dt = 2 A x S - B + 4 (B . S) S - 2 kappa S

where the last term models isotropic white-noise depolarisation of strength
``kappa >= 0`` (all vectors here include the overall scale).  The canonical
one-parameter family

    H_theta = sec(theta) sigma_x + i tan(theta) sigma_z,   theta in [0, pi/2)

has unit spectral gap, period pi, and interpolates from the Hermitian limit
at ``theta = 0`` to arbitrarily strong norm amplification as ``theta``
approaches ``pi/2``.

This module provides exact propagators, adaptive Runge-Kutta integration of
the Bloch flow, closed-form trajectory components in the frame spanned by
``A``, ``B`` and ``n = A x B``, geodesic distances, and the local speed of
state evolution measured through the short-time decay of the overlap
fidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp

from .qmat import ID2, SIGMA_X, SIGMA_Y, SIGMA_Z, exp_2x2, pauli_vector

__all__ = [
    "THETA_MAX",
    "DegenerateEvolutionError",
    "StiffnessError",
    "NHHamiltonian",
    "Trajectory",
    "up_y",
    "down_y",
    "up_z",
    "down_z",
    "state_from_bloch_angles",
    "validate_pure",
    "validate_density",
    "projector",
    "bloch_of_pure",
    "bloch_of_density",
    "density_from_bloch",
    "abn_frame",
    "bloch_to_abn",
    "evolve_pure",
    "propagated_norm",
    "evolve_density",
    "evolve_density_noisy",
    "bloch_rhs",
    "integrate_bloch",
    "analytic_SB_Sn",
    "geodesic_distance",
    "geodesic_distance_closed_form",
    "speed",
    "speed_closed_form",
]

# The canonical family degenerates at theta = pi/2 (the spectrum gap stays
# finite but sec and tan diverge); cap the domain just below.
THETA_MAX = math.pi / 2 - 1e-6

_NORM_FLOOR = 1e-14


class DegenerateEvolutionError(RuntimeError):
    """Raised when a propagated state norm collapses below representable size."""


class StiffnessError(RuntimeError):
    """Raised when the adaptive Runge-Kutta integrator fails to proceed."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


# ---------------------------------------------------------------------------
# states


def up_y() -> np.ndarray:
    """The state ``(i, 1)/sqrt(2)``, Bloch vector ``(0, -1/2, 0)``.

    With the pinned sigma_y representation this is the eigenvector with
    eigenvalue -1; the library labels it "up" along the y axis because it is
    the +1 eigenstate of the canonical measurement operator, whose axis is
    ``-y`` (see :mod:`nhlgi.lgi`).
    """
    return np.array([1j, 1.0], dtype=complex) / math.sqrt(2.0)


def down_y() -> np.ndarray:
    """The state ``(-i, 1)/sqrt(2)``, orthogonal to :func:`up_y`."""
    return np.array([-1j, 1.0], dtype=complex) / math.sqrt(2.0)


def up_z() -> np.ndarray:
    return np.array([1.0, 0.0], dtype=complex)


def down_z() -> np.ndarray:
    return np.array([0.0, 1.0], dtype=complex)


def state_from_bloch_angles(theta_s: float, phi_s: float) -> np.ndarray:
    """Pure state with Bloch direction (sin t cos p, sin t sin p, cos t)."""
    return np.array(
        [math.cos(0.5 * theta_s), np.exp(1j * phi_s) * math.sin(0.5 * theta_s)],
        dtype=complex,
    )


def validate_pure(psi) -> np.ndarray:
    """Return ``psi`` as a complex 2-vector, insisting on unit norm."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2,):
        raise ValueError(f"expected a 2-component state vector, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise ValueError("non-finite state vector")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"state vector is not normalised (norm {norm!r})")
    return psi


def validate_density(rho) -> np.ndarray:
    """Return ``rho`` as a 2x2 density matrix, checking the usual axioms."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 density matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("non-finite density matrix")
    if np.linalg.norm(rho - rho.conj().T) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def projector(psi) -> np.ndarray:
    """Rank-1 projector |psi><psi| of a normalised state."""
    psi = validate_pure(psi)
    return np.outer(psi, psi.conj())


def bloch_of_pure(psi) -> np.ndarray:
    """Bloch vector ``S = <sigma>/2`` of a normalised pure state (|S| = 1/2)."""
    return bloch_of_density(projector(psi))


def bloch_of_density(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return 0.5 * np.array(
        [
            np.trace(SIGMA_X @ rho).real,
            np.trace(SIGMA_Y @ rho).real,
            np.trace(SIGMA_Z @ rho).real,
        ]
    )


def density_from_bloch(s) -> np.ndarray:
    """Density matrix ``I/2 + S . sigma`` of a Bloch vector with |S| <= 1/2."""
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise ValueError(f"expected a Bloch 3-vector, got shape {s.shape}")
    if np.linalg.norm(s) > 0.5 + 1e-8:
        raise ValueError("Bloch vector lies outside the unit-radius ball (|S| > 1/2)")
    return 0.5 * ID2 + pauli_vector(s)


# ---------------------------------------------------------------------------
# Hamiltonians


@dataclass
class NHHamiltonian:
    """Non-Hermitian two-level generator ``scale * (a - i b) . sigma``.

    ``a`` and ``b`` are real 3-vectors with ``a . b = 0`` and ``|a| > |b|``,
    which guarantees the purely real spectrum ``+/- omega`` with
    ``omega = scale * sqrt(a^2 - b^2)``.  ``scale`` must be positive; it is a
    plain multiplicative rescaling of the operator (used e.g. to compare
    families at equal Hermitian-part strength).
    """

    a: np.ndarray
    b: np.ndarray
    scale: float = 1.0
    theta: float | None = field(default=None, compare=False)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).copy()
        self.b = np.asarray(self.b, dtype=float).copy()
        if self.a.shape != (3,) or self.b.shape != (3,):
            raise ValueError("a and b must be real 3-vectors")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ValueError("non-finite Hamiltonian coefficients")
        if not np.isfinite(self.scale) or self.scale <= 0.0:
            raise ValueError("scale must be positive and finite")
        na, nb = np.linalg.norm(self.a), np.linalg.norm(self.b)
        if abs(float(np.dot(self.a, self.b))) > 1e-12 * max(1.0, na * nb):
            raise ValueError("a and b must be orthogonal for a real spectrum")
        if not na > nb:
            raise ValueError(
                "|a| must exceed |b|; otherwise the spectrum is not real "
                f"(|a| = {na!r}, |b| = {nb!r})"
            )

    @classmethod
    def canonical(cls, theta: float, scale: float = 1.0) -> "NHHamiltonian":
        """The family ``sec(theta) sigma_x + i tan(theta) sigma_z``.

        Matching against ``(a - i b) . sigma`` gives ``a = sec(theta) x`` and
        ``b = -tan(theta) z``.  Domain: ``0 <= theta <= pi/2 - 1e-6``.
        """
        if not np.isfinite(theta) or theta < 0.0 or theta > THETA_MAX:
            raise ValueError(
                f"theta must lie in [0, pi/2 - 1e-6], got {theta!r}"
            )
        h = cls(
            a=np.array([1.0 / math.cos(theta), 0.0, 0.0]),
            b=np.array([0.0, 0.0, -math.tan(theta)]),
            scale=scale,
            theta=theta,
        )
        return h

    @cached_property
    def matrix(self) -> np.ndarray:
        """The 2x2 operator ``scale * (a - i b) . sigma``."""
        return self.scale * (pauli_vector(self.a) - 1j * pauli_vector(self.b))

    @cached_property
    def a_operator(self) -> np.ndarray:
        """Hermitian part generator, ``scale * a . sigma``."""
        return self.scale * pauli_vector(self.a)

    @cached_property
    def b_operator(self) -> np.ndarray:
        """Anti-Hermitian part generator (without the -i), ``scale * b . sigma``."""
        return self.scale * pauli_vector(self.b)

    @cached_property
    def a_mag(self) -> float:
        return float(self.scale * np.linalg.norm(self.a))

    @cached_property
    def b_mag(self) -> float:
        return float(self.scale * np.linalg.norm(self.b))

    @cached_property
    def omega(self) -> float:
        """Half the (real) spectral gap, ``scale * sqrt(a^2 - b^2)``."""
        return float(
            self.scale
            * math.sqrt(float(np.dot(self.a, self.a) - np.dot(self.b, self.b)))
        )

    @property
    def period(self) -> float:
        """Period of the renormalised Bloch dynamics, pi / omega."""
        return math.pi / self.omega

    def propagator(self, t: float) -> np.ndarray:
        """Exact ``exp(-i H t)``.

        The square of the (traceless) operator is ``omega^2 I``, so the
        closed two-term form applies for every member of this class.
        """
        w = self.omega
        return math.cos(w * t) * ID2 - (1j * math.sin(w * t) / w) * self.matrix


def abn_frame(h: NHHamiltonian) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal frame (A_hat, B_hat, n_hat = A_hat x B_hat).

    When ``|b| = 0`` (Hermitian member) the B axis is chosen to extend the
    canonical family continuously: the first of ``-z``, ``y``, ``x`` with a
    nonvanishing component orthogonal to ``a``.
    """
    a_hat = h.a / np.linalg.norm(h.a)
    nb = float(np.linalg.norm(h.b))
    if nb > 0.0:
        b_hat = h.b / nb
    else:
        b_hat = None
        for cand in (np.array([0.0, 0.0, -1.0]), np.array([0.0, 1.0, 0.0]),
                     np.array([1.0, 0.0, 0.0])):
            perp = cand - float(np.dot(cand, a_hat)) * a_hat
            norm = float(np.linalg.norm(perp))
            if norm > 1e-12:
                b_hat = perp / norm
                break
    n_hat = np.cross(a_hat, b_hat)
    return a_hat, b_hat, n_hat


def bloch_to_abn(s, h: NHHamiltonian) -> np.ndarray:
    """Components of a Cartesian Bloch vector in the (A, B, n) frame of ``h``."""
    a_hat, b_hat, n_hat = abn_frame(h)
    s = np.asarray(s, dtype=float)
    return np.stack(
        [s @ a_hat, s @ b_hat, s @ n_hat], axis=-1
    )


# ---------------------------------------------------------------------------
# propagation


def evolve_pure(h: NHHamiltonian, psi0, t: float) -> np.ndarray:
    """Renormalised pure-state evolution ``exp(-i H t) psi0 / ||...||``."""
    psi0 = validate_pure(psi0)
    v = h.propagator(t) @ psi0
    norm = float(np.linalg.norm(v))
    if norm < _NORM_FLOOR:
        raise DegenerateEvolutionError(
            f"propagated norm {norm:.3e} below representable floor at t = {t!r}"
        )
    return v / norm


def propagated_norm(h: NHHamiltonian, psi0, t: float) -> float:
    """Norm ``||exp(-i H t) psi0||`` of the unnormalised propagated state."""
    psi0 = validate_pure(psi0)
    return float(np.linalg.norm(h.propagator(t) @ psi0))


def evolve_density(h: NHHamiltonian, rho0, t: float) -> np.ndarray:
    """Renormalised density evolution ``U rho0 U^dag / tr(U rho0 U^dag)``."""
    rho0 = validate_density(rho0)
    u = h.propagator(t)
    m = u @ rho0 @ u.conj().T
    tr = float(np.trace(m).real)
    if tr < _NORM_FLOOR:
        raise DegenerateEvolutionError(
            f"propagated trace {tr:.3e} below representable floor at t = {t!r}"
        )
    m = m / tr
    return 0.5 * (m + m.conj().T)


def _noisy_rhs_matrix(h: NHHamiltonian, kappa: float, rho: np.ndarray) -> np.ndarray:
    a_op, b_op = h.a_operator, h.b_operator
    comm = a_op @ rho - rho @ a_op
    anti = b_op @ rho + rho @ b_op
    pump = 2.0 * np.trace(rho @ b_op).real * rho
    return -1j * comm - anti + pump + kappa * (ID2 - 2.0 * rho)


def evolve_density_noisy(
    h: NHHamiltonian,
    rho0,
    kappa: float,
    t: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> np.ndarray:
    """Propagate the renormalised flow with depolarising noise to time ``t``.

    Integrates, directly in density-matrix form,

        drho/dt = -i[A.sigma, rho] - {B.sigma, rho} + 2 tr(rho B.sigma) rho
                  + kappa (I - 2 rho)

    with an adaptive embedded Runge-Kutta 4(5) pair.  At ``kappa = 0`` the
    result agrees with :func:`evolve_density` to integration tolerance.
    """
    rho0 = validate_density(rho0)
    if kappa < 0.0 or not np.isfinite(kappa):
        raise ValueError("kappa must be a finite non-negative rate")
    if t == 0.0:
        return rho0.copy()
    if t < 0.0:
        raise ValueError("noisy evolution runs forward in time only")

    def rhs(_t, y):
        rho = y.reshape(2, 2)
        return _noisy_rhs_matrix(h, kappa, rho).reshape(-1)

    sol = solve_ivp(
        rhs,
        (0.0, t),
        rho0.reshape(-1),
        method="RK45",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise StiffnessError(
            f"noisy density integration stalled at t = {sol.t[-1]!r}: {sol.message}",
            time=float(sol.t[-1]),
        )
    rho = sol.y[:, -1].reshape(2, 2)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


# ---------------------------------------------------------------------------
# Bloch flow


def bloch_rhs(s, h: NHHamiltonian, kappa: float = 0.0) -> np.ndarray:
    """Right-hand side ``2 A x S - B + 4 (B . S) S - 2 kappa S``.

    ``A`` and ``B`` here include the overall Hamiltonian scale.  The flow
    preserves ``|S| = 1/2`` when ``kappa = 0`` and leaves the component along
    ``A`` invariant if it starts at zero.
    """
    s = np.asarray(s, dtype=float)
    a_vec = h.scale * h.a
    b_vec = h.scale * h.b
    return (
        2.0 * np.cross(a_vec, s)
        - b_vec
        + 4.0 * float(np.dot(b_vec, s)) * s
        - 2.0 * kappa * s
    )


@dataclass
class Trajectory:
    """Sampled Bloch trajectory with its integration provenance."""

    times: np.ndarray
    bloch: np.ndarray  # (n, 3), Cartesian components
    hamiltonian: NHHamiltonian
    kappa: float = 0.0
    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "RK45"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.bloch = np.asarray(self.bloch, dtype=float)
        if self.bloch.shape != (self.times.size, 3):
            raise ValueError("bloch array must have shape (len(times), 3)")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0.0):
            raise ValueError("times must be strictly increasing")

    @property
    def purity(self) -> np.ndarray:
        """``tr(rho^2) = 1/2 + 2 |S|^2`` along the trajectory."""
        return 0.5 + 2.0 * np.sum(self.bloch**2, axis=1)

    def abn(self) -> np.ndarray:
        """Trajectory components in the (A, B, n) frame of the Hamiltonian."""
        return bloch_to_abn(self.bloch, self.hamiltonian)


def integrate_bloch(
    s0,
    h: NHHamiltonian,
    kappa: float = 0.0,
    t_grid=None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> Trajectory:
    """Integrate the Bloch flow from ``t = 0`` over ``t_grid``.

    ``t_grid`` must be strictly increasing and start at zero.  Uses an
    adaptive embedded Runge-Kutta 4(5) pair at tight tolerances; failure to
    advance raises :class:`StiffnessError` carrying the failure time.
    """
    s0 = np.asarray(s0, dtype=float)
    if s0.shape != (3,):
        raise ValueError("initial Bloch vector must be a 3-vector")
    if np.linalg.norm(s0) > 0.5 + 1e-8:
        raise ValueError("initial Bloch vector outside the physical ball")
    if kappa < 0.0 or not np.isfinite(kappa):
        raise ValueError("kappa must be a finite non-negative rate")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("t_grid must be a non-empty 1-d array")
    if abs(t_grid[0]) > 1e-12:
        raise ValueError("t_grid must start at 0")
    if t_grid.size > 1 and not np.all(np.diff(t_grid) > 0.0):
        raise ValueError("t_grid must be strictly increasing")

    if t_grid[-1] == 0.0:
        ys = np.repeat(s0[None, :], t_grid.size, axis=0)
        return Trajectory(t_grid, ys, h, kappa, rtol, atol)

    sol = solve_ivp(
        lambda _t, s: bloch_rhs(s, h, kappa),
        (0.0, float(t_grid[-1])),
        s0,
        method="RK45",
        t_eval=t_grid,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise StiffnessError(
            f"Bloch integration stalled at t = {sol.t[-1] if sol.t.size else 0.0!r}: "
            f"{sol.message}",
            time=float(sol.t[-1]) if sol.t.size else 0.0,
        )
    return Trajectory(t_grid, sol.y.T, h, kappa, rtol, atol)


def analytic_SB_Sn(a_mag: float, b_mag: float, t):
    """Closed-form trajectory components for the state ``up_y`` at ``t``.

    For magnitudes ``a > b >= 0`` (spectral gap ``2 w``, ``w = sqrt(a^2 -
    b^2)``) the renormalised flow started from the Bloch vector ``-n/2``
    stays in the B-n plane and satisfies

        |S_B(t)| = w |sin(2 w t)| / (2 (a + b cos(2 w t)))
        S_n(t)   = -(b + a cos(2 w t)) / (2 (a + b cos(2 w t)))

    Returns the pair ``(|S_B|, S_n)``; the component along the B axis
    changes sign every half period, so only its magnitude has a closed form
    free of case analysis.  The signs above were fixed against the
    density-matrix propagator; they correspond to projecting onto the frame
    built from the actual vectors ``A`` and ``B`` (for the canonical family:
    ``B_hat = -z``, ``n_hat = +y``).

    ``t`` may be a scalar or an array.
    """
    if not (np.isfinite(a_mag) and np.isfinite(b_mag)):
        raise ValueError("non-finite magnitudes")
    if not (a_mag > b_mag >= 0.0):
        raise ValueError("need a_mag > b_mag >= 0 for a real spectrum")
    t = np.asarray(t, dtype=float)
    w = math.sqrt(a_mag**2 - b_mag**2)
    c = np.cos(2.0 * w * t)
    denom = a_mag + b_mag * c
    s_b = 0.5 * w * np.abs(np.sin(2.0 * w * t)) / denom
    s_n = 0.5 * (-b_mag - a_mag * c) / denom
    if t.ndim == 0:
        return float(s_b), float(s_n)
    return s_b, s_n


# ---------------------------------------------------------------------------
# distances and speed


def geodesic_distance(psi, phi) -> float:
    """Fubini-Study angle ``arccos |<psi|phi>|`` between normalised states."""
    psi = validate_pure(psi)
    phi = validate_pure(phi)
    overlap = min(1.0, abs(complex(np.vdot(psi, phi))))
    return float(np.arccos(overlap))


def geodesic_distance_closed_form(theta: float, t) -> float | np.ndarray:
    """Distance of the evolved ``up_y`` state from ``down_y`` at time ``t``,
    for the canonical family:

        arccos sqrt( sin^2 t (1 - sin theta) / (1 + cos 2t sin theta) ).

    Vanishes (modulo the pi periodicity of the flow) exactly at
    ``t = pi/2``, where every member of the family reaches ``down_y``.
    """
    if not (0.0 <= theta <= THETA_MAX):
        raise ValueError(f"theta must lie in [0, pi/2 - 1e-6], got {theta!r}")
    t = np.asarray(t, dtype=float)
    s = math.sin(theta)
    arg = np.sin(t) ** 2 * (1.0 - s) / (1.0 + np.cos(2.0 * t) * s)
    out = np.arccos(np.clip(np.sqrt(np.clip(arg, 0.0, None)), 0.0, 1.0))
    return float(out) if out.ndim == 0 else out


def speed(h: NHHamiltonian, psi0, t: float, step: float = 1e-4) -> float:
    """Quadratic decay coefficient of the overlap fidelity at time ``t``.

    The fidelity between neighbouring points of the renormalised trajectory
    expands as ``|<psi(t)|psi(t + dt)>|^2 = 1 - v dt^2 + O(dt^3)``; this
    function estimates ``v`` by symmetric finite differences at ``step`` and
    ``step/2`` combined with one Richardson extrapolation.  ``v`` equals the
    squared angular speed of the Bloch vector and is the quantity maximised
    by :func:`nhlgi.scan.maximize_speed`.
    """
    psi0 = validate_pure(psi0)
    if step <= 0.0 or not np.isfinite(step):
        raise ValueError("step must be positive and finite")
    base = evolve_pure(h, psi0, t)

    def defect(hh: float) -> float:
        fwd = evolve_pure(h, psi0, t + hh)
        bwd = evolve_pure(h, psi0, t - hh)
        p_f = abs(complex(np.vdot(base, fwd))) ** 2
        p_b = abs(complex(np.vdot(base, bwd))) ** 2
        return (2.0 - p_f - p_b) / (2.0 * hh * hh)

    coarse = defect(step)
    fine = defect(0.5 * step)
    return float((4.0 * fine - coarse) / 3.0)


def speed_closed_form(theta: float, t) -> float | np.ndarray:
    """Closed form of the fidelity-decay coefficient along the canonical
    ``up_y`` trajectory: ``cos^2 theta / (1 + cos 2t sin theta)^2``.

    Equals 1 for all ``t`` in the Hermitian limit and peaks at ``t = pi/2``
    with value ``(1 + sin theta) / (1 - sin theta)``.
    """
    if not (0.0 <= theta <= THETA_MAX):
        raise ValueError(f"theta must lie in [0, pi/2 - 1e-6], got {theta!r}")
    t = np.asarray(t, dtype=float)
    out = math.cos(theta) ** 2 / (1.0 + np.cos(2.0 * t) * math.sin(theta)) ** 2
    return float(out) if out.ndim == 0 else out
