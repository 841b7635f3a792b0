"""States, Hamiltonians, propagators and entanglement analysis for a pair of
laser-driven Rydberg atoms.

Everything is expressed in units of the Rydberg-Rydberg interaction strength,
B = 1: times are B*t, Rabi frequency and detuning are Omega/B and Delta/B, and
the spontaneous-decay rate enters only as the ratio Gamma/B.

Two state pictures are used throughout:

* symmetric picture: length-3 complex vectors over (|gg>, |W>, |rr>) with
  |W> = (|gr> + |rg>)/sqrt(2); this is where the drive dynamics live.
* two-atom picture: length-4 complex vectors over (|gg>, |gr>, |rg>, |rr>),
  or a general d x d amplitude matrix (:class:`BipartiteState`) when Schmidt
  analysis is needed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import expm

LN2 = np.log(2.0)

#: projector onto the Rydberg manifold, symmetric picture (counts excitations)
PI_R_SYMMETRIC = np.diag([0.0, 1.0, 2.0])
#: projector onto the Rydberg manifold, two-atom picture
PI_R_TWO_ATOM = np.diag([0.0, 1.0, 1.0, 2.0])

#: basis states of the symmetric picture
GG = np.array([1.0, 0.0, 0.0], dtype=complex)
W_STATE = np.array([0.0, 1.0, 0.0], dtype=complex)
RR = np.array([0.0, 0.0, 1.0], dtype=complex)

#: Bell-like target (|gg> + sqrt(2)|W> - |rr>)/2, symmetric picture
BELL_TARGET = np.array([0.5, np.sqrt(0.5), -0.5], dtype=complex)

#: isometry embedding the symmetric subspace into the two-atom picture;
#: columns are |gg>, |W>, |rr> written over (gg, gr, rg, rr)
SYMMETRIC_EMBED = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, np.sqrt(0.5), 0.0],
        [0.0, np.sqrt(0.5), 0.0],
        [0.0, 0.0, 1.0],
    ],
    dtype=complex,
)


class DegeneracyError(ValueError):
    """Raised when an analytic entropy rate is requested for a state whose
    relevant Schmidt coefficients are (numerically) degenerate."""


# ---------------------------------------------------------------------------
# control pulses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlPulse:
    """Piecewise-constant drive: N samples of Rabi frequency and detuning.

    Sample n is held constant over the n-th step of length dt = BT/N.
    All quantities are dimensionless (units of B).
    """

    duration_bt: float
    omega: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        delta = np.asarray(self.delta, dtype=float)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "delta", delta)
        if omega.ndim != 1 or delta.ndim != 1 or omega.shape != delta.shape:
            raise ValueError("omega and delta must be 1-d arrays of equal length")
        if omega.size < 2:
            raise ValueError("a pulse needs at least 2 samples")
        if not (self.duration_bt > 0):
            raise ValueError("pulse duration must be positive")
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(delta))):
            raise ValueError("pulse samples must be finite")

    @property
    def steps(self) -> int:
        return self.omega.size

    @property
    def dt(self) -> float:
        return self.duration_bt / self.steps

    @property
    def times(self) -> np.ndarray:
        """Grid points t_n = n*dt, n = 0..N (length N+1)."""
        return np.linspace(0.0, self.duration_bt, self.steps + 1)

    def area(self) -> float:
        """Pulse area Theta = sum_n |Omega_n| dt."""
        return float(np.sum(np.abs(self.omega)) * self.dt)

    @staticmethod
    def zero(duration_bt: float, steps: int) -> "ControlPulse":
        return ControlPulse(duration_bt, np.zeros(steps), np.zeros(steps))

    def refine(self, factor: int) -> "ControlPulse":
        """Same control function on a grid `factor` times finer."""
        return ControlPulse(
            self.duration_bt,
            np.repeat(self.omega, factor),
            np.repeat(self.delta, factor),
        )

    # -- JSON pulse file format: {"BT": .., "N": .., "omega": [..], "delta": [..]}

    def to_dict(self) -> dict:
        return {
            "BT": self.duration_bt,
            "N": self.steps,
            "omega": self.omega.tolist(),
            "delta": self.delta.tolist(),
        }

    @staticmethod
    def from_dict(data: dict) -> "ControlPulse":
        for key in ("BT", "N", "omega", "delta"):
            if key not in data:
                raise ValueError(f"pulse JSON is missing field '{key}'")
        pulse = ControlPulse(
            float(data["BT"]),
            np.asarray(data["omega"], dtype=float),
            np.asarray(data["delta"], dtype=float),
        )
        if pulse.steps != int(data["N"]):
            raise ValueError(
                f"pulse JSON field 'N' = {data['N']} does not match "
                f"{pulse.steps} samples"
            )
        return pulse

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @staticmethod
    def load(path: str | Path) -> "ControlPulse":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed pulse JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError(f"malformed pulse JSON in {path}: expected an object")
        return ControlPulse.from_dict(data)


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------


def build_symmetric_hamiltonian(omega: float, delta: float) -> np.ndarray:
    """Ladder Hamiltonian over (|gg>, |W>, |rr>) for symmetric driving.

    The |rr> level carries the interaction shift B = 1 on top of the
    two-excitation detuning.
    """
    c = omega / np.sqrt(2.0)
    return np.array(
        [
            [0.0, c, 0.0],
            [c, -delta, c],
            [0.0, c, 1.0 - 2.0 * delta],
        ],
        dtype=complex,
    )


def build_two_atom_hamiltonian(omega: float, delta: float) -> np.ndarray:
    """Full two-atom Hamiltonian over (|gg>, |gr>, |rg>, |rr>).

    Sum of identical single-atom drive terms plus the dispersive interaction
    B|rr><rr| with B = 1.
    """
    h1 = np.array([[0.0, omega / 2.0], [omega / 2.0, -delta]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    h = np.kron(h1, eye) + np.kron(eye, h1)
    h[3, 3] += 1.0
    return h


def embed_symmetric(state: np.ndarray) -> np.ndarray:
    """Map a symmetric-picture vector to the two-atom picture."""
    return SYMMETRIC_EMBED @ np.asarray(state, dtype=complex)


def project_symmetric(state: np.ndarray) -> np.ndarray:
    """Project a two-atom vector onto the symmetric subspace."""
    return SYMMETRIC_EMBED.conj().T @ np.asarray(state, dtype=complex)


def _hamiltonian_stack(pulse: ControlPulse, dim: int) -> np.ndarray:
    """(N, dim, dim) array of per-step Hamiltonians."""
    n = pulse.steps
    h = np.zeros((n, dim, dim), dtype=complex)
    if dim == 3:
        c = pulse.omega / np.sqrt(2.0)
        h[:, 0, 1] = h[:, 1, 0] = c
        h[:, 1, 2] = h[:, 2, 1] = c
        h[:, 1, 1] = -pulse.delta
        h[:, 2, 2] = 1.0 - 2.0 * pulse.delta
    elif dim == 4:
        c = pulse.omega / 2.0
        h[:, 0, 1] = h[:, 1, 0] = c
        h[:, 0, 2] = h[:, 2, 0] = c
        h[:, 1, 3] = h[:, 3, 1] = c
        h[:, 2, 3] = h[:, 3, 2] = c
        h[:, 1, 1] = h[:, 2, 2] = -pulse.delta
        h[:, 3, 3] = 1.0 - 2.0 * pulse.delta
    else:
        raise ValueError(f"unsupported state dimension {dim}")
    return h


def step_propagators(pulse: ControlPulse, dim: int = 3) -> np.ndarray:
    """(N, dim, dim) stack of exact step propagators exp(-i H_n dt).

    The per-step Hamiltonian is Hermitian, so the exponential is evaluated
    through a batched eigendecomposition.
    """
    h = _hamiltonian_stack(pulse, dim)
    evals, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * evals * pulse.dt)
    return np.einsum("nij,nj,nkj->nik", vecs, phases, vecs.conj())


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """State snapshots at the N+1 grid points of a pulse."""

    pulse: ControlPulse
    states: np.ndarray  # (N+1, dim) complex
    gamma_over_B: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.pulse.times

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def propagate(
    pulse: ControlPulse,
    initial: np.ndarray,
    gamma_over_B: float = 0.0,
) -> Trajectory:
    """Evolve `initial` under the pulse, one exact exponential per step.

    For gamma_over_B > 0 each step applies exp(-i (H - i Gamma/2 Pi_r) dt),
    so the snapshot norms decay; amplitudes are stored unnormalized.
    """
    initial = np.asarray(initial, dtype=complex)
    dim = initial.size
    if abs(np.linalg.norm(initial) - 1.0) > 1e-8:
        raise ValueError("initial state must be normalized")
    if gamma_over_B < 0:
        raise ValueError("gamma_over_B must be non-negative")

    n = pulse.steps
    states = np.empty((n + 1, dim), dtype=complex)
    states[0] = initial
    if gamma_over_B == 0.0:
        props = step_propagators(pulse, dim)
        psi = initial
        for k in range(n):
            psi = props[k] @ psi
            states[k + 1] = psi
    else:
        pi_r = PI_R_SYMMETRIC if dim == 3 else PI_R_TWO_ATOM
        h = _hamiltonian_stack(pulse, dim)
        h -= 0.5j * gamma_over_B * pi_r
        psi = initial
        for k in range(n):
            psi = expm(-1j * h[k] * pulse.dt) @ psi
            states[k + 1] = psi
    return Trajectory(pulse=pulse, states=states, gamma_over_B=gamma_over_B)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


def rydberg_population(state) -> float:
    """Expectation of the Rydberg excitation number, <psi| Pi_r |psi>.

    Accepts symmetric vectors (diag(0,1,2)), two-atom vectors
    (diag(0,1,1,2)) or a :class:`BipartiteState`.  Amplitudes are used
    as-is, so for decayed (gamma > 0) snapshots the population carries the
    shrinking norm.
    """
    if isinstance(state, BipartiteState):
        r = state.rydberg_index
        m = state.amps
        return float(np.sum(np.abs(m[r, :]) ** 2) + np.sum(np.abs(m[:, r]) ** 2))
    psi = np.asarray(state, dtype=complex)
    if psi.size == 3:
        weights = np.array([0.0, 1.0, 2.0])
    elif psi.size == 4:
        weights = np.array([0.0, 1.0, 1.0, 2.0])
    else:
        raise ValueError(f"unsupported state dimension {psi.size}")
    return float(np.real(np.sum(weights * np.abs(psi) ** 2)))


def rydberg_populations(trajectory: Trajectory) -> np.ndarray:
    """P_r at every snapshot of a trajectory."""
    if trajectory.dim == 3:
        weights = np.array([0.0, 1.0, 2.0])
    else:
        weights = np.array([0.0, 1.0, 1.0, 2.0])
    return np.abs(trajectory.states) ** 2 @ weights


def integrated_rydberg_time(trajectory: Trajectory, method: str = "trapezoid") -> float:
    """T_r = integral of P_r(t) dt over the trajectory.

    `method="trapezoid"` is the reporting quadrature; `method="left"` is the
    left-rectangle sum the optimizer's gradients correspond to (the two
    differ by O(dt)).
    """
    p = rydberg_populations(trajectory)
    dt = trajectory.pulse.dt
    if method == "trapezoid":
        return float(np.trapezoid(p, dx=dt))
    if method == "left":
        return float(np.sum(p[:-1]) * dt)
    raise ValueError(f"unknown quadrature method '{method}'")


def state_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2, insensitive to global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return float(np.abs(np.vdot(a, b)) ** 2)


# ---------------------------------------------------------------------------
# Schmidt analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BipartiteState:
    """General pure state of two d-level atoms, psi = sum_ab M[a,b] |a>|b>."""

    amps: np.ndarray  # (d, d) complex, unit Frobenius norm
    rydberg_index: int = -1

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 2 or amps.shape[0] != amps.shape[1]:
            raise ValueError("amplitude matrix must be square")
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "rydberg_index", self.rydberg_index % amps.shape[0])
        if abs(np.linalg.norm(amps) - 1.0) > 1e-12:
            raise ValueError("amplitude matrix must have unit Frobenius norm")

    @property
    def d(self) -> int:
        return self.amps.shape[0]


def bipartite_from_two_atom(state: np.ndarray, normalize: bool = False) -> BipartiteState:
    """Reshape a two-atom vector (gg, gr, rg, rr) into a 2x2 BipartiteState."""
    psi = np.asarray(state, dtype=complex)
    if psi.size != 4:
        raise ValueError("expected a length-4 two-atom state")
    if normalize:
        psi = psi / np.linalg.norm(psi)
    return BipartiteState(psi.reshape(2, 2), rydberg_index=1)


@dataclass(frozen=True)
class SchmidtForm:
    """Schmidt data: descending coefficients and the two local bases.

    `basis_a[i]` / `basis_b[i]` are the i-th local vectors; the source state
    is sum_i coeffs[i] * basis_a[i] (x) basis_b[i].
    """

    coeffs: np.ndarray  # (d,) non-negative, descending
    basis_a: np.ndarray  # (d, d), row i = |u_i>
    basis_b: np.ndarray  # (d, d), row i = |v_i>

    def reconstruct(self) -> np.ndarray:
        """Amplitude matrix sum_i c_i |u_i><v_i^T| (no conjugation on v)."""
        return np.einsum("i,ia,ib->ab", self.coeffs, self.basis_a, self.basis_b)


def schmidt_decompose(state: BipartiteState) -> SchmidtForm:
    """Schmidt decomposition via SVD of the amplitude matrix.

    Deterministic output: coefficients descending (numpy's SVD order) and the
    first nonzero component of each left vector rotated to be real-positive,
    with the compensating phase pushed onto the right vector.
    """
    u, s, vh = np.linalg.svd(state.amps)
    basis_a = u.T.copy()  # row i = u_i
    basis_b = vh.copy()  # row i = v_i  (M = sum_i s_i u_i v_i^T)
    for i in range(s.size):
        row = basis_a[i]
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size:
            phase = row[nz[0]] / np.abs(row[nz[0]])
            basis_a[i] = row / phase
            basis_b[i] = basis_b[i] * phase
    return SchmidtForm(coeffs=s, basis_a=basis_a, basis_b=basis_b)


def min_entropy(schmidt: SchmidtForm) -> float:
    """S = -log2(c_max^2); 0 for product states, 1 for Bell states."""
    return float(-np.log2(schmidt.coeffs[0] ** 2))


def von_neumann_entropy(schmidt: SchmidtForm) -> float:
    """-sum_i c_i^2 log2 c_i^2 with the 0 log 0 = 0 convention."""
    p = schmidt.coeffs**2
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _min_entropy_rate_from_schmidt(schmidt: SchmidtForm, rydberg_index: int) -> float:
    """Analytic dS/dt from Schmidt data, interaction |rr><rr| with B = 1."""
    c = schmidt.coeffs
    a = schmidt.basis_a[:, rydberg_index]  # <r|u_i> components
    b = schmidt.basis_b[:, rydberg_index]
    elements = np.conj(a[0] * b[0]) * a * b  # <u1 v1|rr><rr|u_i v_i>
    return float(-(2.0 / LN2) * np.sum(c * np.imag(elements)) / c[0])


def min_entropy_rate(state: BipartiteState) -> float:
    """Rate of change of the min-entropy under the dispersive interaction.

    Only the interaction term B|rr><rr| moves the Schmidt coefficients, so
    this is the full dS/dt under any symmetric drive.  Requires a strictly
    largest Schmidt coefficient; raises :class:`DegeneracyError` otherwise
    (use a finite difference of :func:`min_entropy` along the trajectory in
    that case).
    """
    schmidt = schmidt_decompose(state)
    c = schmidt.coeffs
    if c.size > 1 and c[0] - c[1] < 1e-10:
        raise DegeneracyError(
            "largest Schmidt coefficient is degenerate; the analytic "
            "min-entropy rate is undefined"
        )
    return _min_entropy_rate_from_schmidt(schmidt, state.rydberg_index)


# ---------------------------------------------------------------------------
# trajectory-level entropy analysis
# ---------------------------------------------------------------------------

#: |dS/dt| below this is treated as stalled and the sample flagged invalid
RATE_FLOOR = 1e-9
#: c1 - c2 gap below which the analytic rate is replaced by finite differences
_FD_GAP = 1e-6


@dataclass(frozen=True)
class EntropyAnalysis:
    """Per-snapshot min-entropy diagnostics of a two-atom trajectory.

    `ratio` is P_r/|dS/dt| and `inv_rate` is 1/(dS/dt) (signed); both are
    NaN where `valid` is False (rate below :data:`RATE_FLOOR`).
    """

    times: np.ndarray
    entropy: np.ndarray
    p_r: np.ndarray
    rate: np.ndarray
    ratio: np.ndarray
    inv_rate: np.ndarray
    valid: np.ndarray  # bool mask


def trajectory_entropy_analysis(trajectory: Trajectory) -> EntropyAnalysis:
    """Min-entropy, Rydberg population and bound ratios along a trajectory.

    Snapshots must be two-atom states evolved without decay.  The rate is the
    analytic expression where the Schmidt spectrum is safely nondegenerate
    and a centered finite difference of the entropy otherwise.
    """
    if trajectory.dim != 4:
        raise ValueError("entropy analysis expects a two-atom trajectory")
    if trajectory.gamma_over_B != 0.0:
        raise ValueError("entropy analysis expects a decay-free trajectory")

    n_snap = trajectory.states.shape[0]
    entropy = np.empty(n_snap)
    p_r = np.empty(n_snap)
    rate = np.empty(n_snap)
    analytic_ok = np.empty(n_snap, dtype=bool)

    for k in range(n_snap):
        state = bipartite_from_two_atom(trajectory.states[k], normalize=True)
        schmidt = schmidt_decompose(state)
        entropy[k] = min_entropy(schmidt)
        p_r[k] = rydberg_population(state)
        c = schmidt.coeffs
        analytic_ok[k] = c[0] - c[1] >= _FD_GAP
        rate[k] = (
            _min_entropy_rate_from_schmidt(schmidt, state.rydberg_index)
            if analytic_ok[k]
            else np.nan
        )

    # centered finite-difference fallback near degeneracies (one-sided at ends)
    dt = trajectory.pulse.dt
    for k in np.flatnonzero(~analytic_ok):
        lo, hi = max(k - 1, 0), min(k + 1, n_snap - 1)
        rate[k] = (entropy[hi] - entropy[lo]) / ((hi - lo) * dt)

    valid = np.abs(rate) >= RATE_FLOOR
    ratio = np.full(n_snap, np.nan)
    inv_rate = np.full(n_snap, np.nan)
    ratio[valid] = p_r[valid] / np.abs(rate[valid])
    inv_rate[valid] = 1.0 / rate[valid]
    return EntropyAnalysis(
        times=trajectory.times.copy(),
        entropy=entropy,
        p_r=p_r,
        rate=rate,
        ratio=ratio,
        inv_rate=inv_rate,
        valid=valid,
    )
