"""Classical states, ensembles, and their Fock-space moment encodings.

A pure classical state (phi, pi) of the n-mode ODE system is encoded as the
multimode coherent vector with per-mode amplitude z_j = (phi_j + i pi_j)/sqrt2:

    w(phi, pi) = exp(sum_j z_j adag_j - |z_j|^2 / 2) |0>

so a_j w = z_j w.  The moment matrix of an ensemble is the weighted sum of
the rank-one projectors w w^H; such matrices are Hermitian, PSD and
unit-trace, and are flagged physically realizable (``provenance="PR"``).
Everything here is exact up to ladder truncation, which is kept quantitative
by the amplitude guard |z_j|^2 <= cutoff/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .algebra import poly_to_normal_form
from .fock import (
    DIM_CAP,
    FockMatrix,
    FockVector,
    check_dimension,
    realize_matrix,
    trace_product,
)
from .poly import ChartError, PolyExpr

_SQRT2 = math.sqrt(2.0)


class AmplitudeOverflowError(ValueError):
    """Coherent amplitude too large for the requested cutoff."""

    def __init__(self, mode: int, amplitude_sq: float, cutoff: int):
        super().__init__(
            f"mode {mode + 1}: |z|^2 = {amplitude_sq:.4g} exceeds the "
            f"truncation guard cutoff/4 = {cutoff / 4:.4g}")
        self.mode = mode


@dataclass(frozen=True)
class ClassicalState:
    """A point (phi, pi) in the 2n-dimensional classical phase space."""

    phi: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        pi = np.atleast_1d(np.asarray(self.pi, dtype=float))
        if phi.shape != pi.shape or phi.ndim != 1:
            raise ValueError("phi and pi must be 1-d arrays of equal length")
        if not (np.isfinite(phi).all() and np.isfinite(pi).all()):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "pi", pi)

    @property
    def modes(self) -> int:
        return self.phi.size

    @property
    def z(self) -> np.ndarray:
        return (self.phi + 1j * self.pi) / _SQRT2

    @property
    def y(self) -> np.ndarray:
        return (self.phi - 1j * self.pi) / _SQRT2

    def point(self) -> np.ndarray:
        """Evaluation point for phipi-chart polynomials."""
        return np.concatenate([self.phi, self.pi])

    def zy_point(self) -> np.ndarray:
        """Evaluation point for zy-chart polynomials."""
        z = self.z
        return np.concatenate([z, np.conj(z)])


@dataclass(frozen=True)
class Ensemble:
    """Finite weighted collection of classical states; weights sum to 1."""

    members: tuple[tuple[ClassicalState, float], ...]

    def __post_init__(self):
        members = tuple((s, float(w)) for s, w in self.members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        if any(w <= 0 for _, w in members):
            raise ValueError("weights must be positive")
        total = sum(w for _, w in members)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, not 1")
        n = members[0][0].modes
        if any(s.modes != n for s, _ in members):
            raise ValueError("all members must share the mode count")
        object.__setattr__(self, "members", members)

    @property
    def modes(self) -> int:
        return self.members[0][0].modes

    @classmethod
    def pure(cls, state: ClassicalState) -> "Ensemble":
        return cls(((state, 1.0),))

    @classmethod
    def from_states(cls, states: Iterable[ClassicalState],
                    weights: Iterable[float] | None = None) -> "Ensemble":
        states = list(states)
        if weights is None:
            weights = [1.0 / len(states)] * len(states)
        return cls(tuple(zip(states, weights)))

    @classmethod
    def phase_circle(cls, radius: float, points: int, modes: int = 1,
                     mode: int = 0) -> "Ensemble":
        """Equally weighted states on a circle in one mode's (phi, pi) plane."""
        states = []
        for k in range(points):
            theta = 2 * math.pi * k / points
            phi = np.zeros(modes)
            pi = np.zeros(modes)
            phi[mode] = radius * math.cos(theta)
            pi[mode] = radius * math.sin(theta)
            states.append(ClassicalState(phi, pi))
        return cls.from_states(states)

    def map_states(self, f: Callable[[ClassicalState], ClassicalState]) -> "Ensemble":
        return Ensemble(tuple((f(s), w) for s, w in self.members))

    def average(self, f: Callable[[ClassicalState], complex]) -> complex:
        return sum(w * f(s) for s, w in self.members)

    def to_json(self) -> dict:
        return {"members": [{"phi": s.phi.tolist(), "pi": s.pi.tolist(), "w": w}
                            for s, w in self.members]}

    @classmethod
    def from_json(cls, obj: dict) -> "Ensemble":
        return cls(tuple((ClassicalState(np.asarray(m["phi"]), np.asarray(m["pi"])),
                          m["w"]) for m in obj["members"]))


@dataclass(frozen=True)
class DensityMatrix:
    """A Fock-space moment matrix with its structural flags.

    ``provenance`` is "PR" for matrices built from ensembles of pure states
    (these are PSD); anything constructed by hand carries "raw".
    """

    matrix: FockMatrix
    hermitian: bool = True
    unit_trace: bool = True
    provenance: str = "PR"

    @property
    def data(self) -> np.ndarray:
        return self.matrix.data

    @property
    def modes(self) -> int:
        return self.matrix.modes

    @property
    def cutoff(self) -> int:
        return self.matrix.cutoff

    def validate(self, hermitian_tol: float = 1e-12, trace_tol: float = 1e-10,
                 psd_tol: float = 1e-10) -> None:
        if self.hermitian and self.matrix.hermiticity_defect() > hermitian_tol:
            raise ValueError("hermiticity flag violated")
        if self.unit_trace and abs(self.matrix.trace() - 1.0) > trace_tol:
            raise ValueError("unit-trace flag violated")
        if self.provenance == "PR":
            lo = float(np.linalg.eigvalsh(self.data).min())
            if lo < -psd_tol:
                raise ValueError(f"PR matrix has eigenvalue {lo}")


def pseudo_wavefunction(state: ClassicalState, cutoff: int,
                        cap: int = DIM_CAP) -> FockVector:
    """Coherent encoding of a pure classical state in the number basis.

    Amplitudes are prod_j z_j^{k_j} e^{-|z_j|^2/2} / sqrt(k_j!), built by the
    stable recurrence v_k = v_{k-1} z / sqrt(k).  The guard |z_j|^2 <= D/4
    keeps the truncated tail below ~1e-10 in norm.
    """
    check_dimension(state.modes, cutoff, cap)
    columns = []
    for j, zj in enumerate(state.z):
        amp2 = abs(zj) ** 2
        if amp2 > cutoff / 4:
            raise AmplitudeOverflowError(j, amp2, cutoff)
        col = np.zeros(cutoff, dtype=complex)
        col[0] = 1.0
        for k in range(1, cutoff):
            col[k] = col[k - 1] * zj / math.sqrt(k)
        col *= math.exp(-amp2 / 2)
        columns.append(col)
    data = columns[0]
    for col in columns[1:]:
        data = np.kron(data, col)
    return FockVector(state.modes, cutoff, data)


def pure_density(state: ClassicalState, cutoff: int,
                 cap: int = DIM_CAP) -> DensityMatrix:
    """Rank-one moment matrix w w^H of a pure state."""
    w = pseudo_wavefunction(state, cutoff, cap)
    mat = FockMatrix(state.modes, cutoff, np.outer(w.data, w.data.conj()))
    return DensityMatrix(mat)


def ensemble_density(ensemble: Ensemble, cutoff: int,
                     cap: int = DIM_CAP) -> DensityMatrix:
    """Weighted mixture of pure moment matrices; Hermitian, PSD, trace one."""
    acc = None
    for state, weight in ensemble.members:
        w = pseudo_wavefunction(state, cutoff, cap)
        block = weight * np.outer(w.data, w.data.conj())
        acc = block if acc is None else acc + block
    return DensityMatrix(FockMatrix(ensemble.modes, cutoff, acc))


def hamilton_rhs(hamiltonian: PolyExpr,
                 state: ClassicalState) -> tuple[np.ndarray, np.ndarray]:
    """(phidot, pidot) = (dH/dpi, -dH/dphi) evaluated at the state."""
    grad_phi, grad_pi = _gradients(hamiltonian)
    return _rhs_at(grad_phi, grad_pi, state.point())


def _gradients(hamiltonian: PolyExpr):
    if hamiltonian.chart != "phipi":
        raise ChartError("Hamilton's equations need the phipi chart")
    n = hamiltonian.modes
    grad_phi = [hamiltonian.differentiate(f"phi{j + 1}") for j in range(n)]
    grad_pi = [hamiltonian.differentiate(f"pi{j + 1}") for j in range(n)]
    return grad_phi, grad_pi


def _rhs_at(grad_phi, grad_pi, point: np.ndarray):
    phidot = np.array([g.eval(point).real for g in grad_pi])
    pidot = np.array([-g.eval(point).real for g in grad_phi])
    return phidot, pidot


def integrate_state(hamiltonian: PolyExpr, state: ClassicalState,
                    t: float, dt: float = 1e-3) -> ClassicalState:
    """Advance one state by classic fixed-step RK4 on Hamilton's equations."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps_f = abs(t) / dt
    steps = int(round(steps_f))
    if abs(steps_f - steps) > 1e-9:
        raise ValueError("t must be an integer multiple of dt")
    h = math.copysign(dt, t)
    grad_phi, grad_pi = _gradients(hamiltonian.promote(state.modes)
                                   if hamiltonian.modes < state.modes
                                   else hamiltonian)
    x = state.point().copy()
    n = state.modes

    def f(xv):
        dphi, dpi = _rhs_at(grad_phi, grad_pi, xv)
        return np.concatenate([dphi, dpi])

    for _ in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(x).all():
            raise FloatingPointError("trajectory left the finite domain")
    return ClassicalState(x[:n], x[n:])


def integrate_ensemble(hamiltonian: PolyExpr, ensemble: Ensemble,
                       t: float, dt: float = 1e-3) -> Ensemble:
    """Advance every member along the classical flow; weights unchanged."""
    return ensemble.map_states(
        lambda s: integrate_state(hamiltonian, s, t, dt))


def expectation(rho: DensityMatrix, observable: PolyExpr, cutoff: int | None = None,
                cap: int = DIM_CAP) -> complex:
    """Tr(rho g_n) for the normal-product operator of a polynomial."""
    cutoff = rho.cutoff if cutoff is None else cutoff
    if cutoff != rho.cutoff:
        raise ValueError("cutoff disagrees with the density matrix")
    op = poly_to_normal_form(observable.promote(rho.modes)
                             if observable.modes < rho.modes else observable)
    gmat = realize_matrix(op, cutoff, cap)
    return trace_product(rho.data, gmat.data)


def extended_wavefunction(state: ClassicalState, cutoff: int,
                          cap: int = DIM_CAP) -> FockVector:
    """Doubled encoding: amplitude z_j in mode a_j and y_j in its partner b_j.

    Modes are interleaved (a_1, b_1, a_2, b_2, ...).  The raw exponent
    convention exp(sum_j z_j adag_j + y_j bdag_j)|0> fixes only the direction;
    the vector is normalized explicitly here, which lands on the product of
    normalized coherent factors.
    """
    check_dimension(2 * state.modes, cutoff, cap)
    data = None
    for j, zj in enumerate(state.z):
        amp2 = abs(zj) ** 2
        if amp2 > cutoff / 4:
            raise AmplitudeOverflowError(j, amp2, cutoff)
        for amp in (zj, np.conj(zj)):
            col = np.zeros(cutoff, dtype=complex)
            col[0] = 1.0
            for k in range(1, cutoff):
                col[k] = col[k - 1] * amp / math.sqrt(k)
            col *= math.exp(-amp2 / 2)
            data = col if data is None else np.kron(data, col)
    return FockVector(2 * state.modes, cutoff, data)
