import numpy as np
import pytest

from rydbell import core, protocols
from rydbell.core import ControlPulse

CZ = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def haar_su2(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return q / np.sqrt(np.linalg.det(q))


# ---------------------------------------------------------------------------
# reference protocols
# ---------------------------------------------------------------------------


def test_naive_protocol_constants():
    rep = protocols.naive_protocol()
    assert abs(rep.fidelity - 1.0) < 1e-12
    assert abs(rep.eta_state - np.pi) < 1e-12
    assert abs(rep.eta_state / protocols.ETA_MIN - 1.2220) < 1e-4
    assert rep.phase_ok  # final min-entropy is 1 within 1e-10


def test_cz_wait_d2():
    unitary, rep = protocols.cz_wait_protocol_d2()
    assert np.max(np.abs(unitary - CZ)) < 1e-10
    assert abs(rep.eta_gate - np.pi) < 1e-12
    assert rep.phase_ok
    # CZ squared is the identity up to global phase
    sq = unitary @ unitary
    sq = sq / sq[0, 0]
    assert np.max(np.abs(sq - np.eye(4))) < 1e-9


def test_cz_wait_d2_average_population_constant():
    # the input-averaged Rydberg population is 1 at every instant
    wait = ControlPulse.zero(np.pi, 64)
    pops = np.zeros(65)
    for q in range(4):
        basis = np.zeros(4, dtype=complex)
        basis[q] = 1.0
        pops += core.rydberg_populations(core.propagate(wait, basis))
    assert np.max(np.abs(pops / 4.0 - 1.0)) < 1e-12


def test_cz_wait_d3():
    rep = protocols.cz_wait_protocol_d3()
    assert rep.phase_ok
    assert abs(rep.eta_gate - np.pi) < 1e-12
    diag = np.diag(rep.unitary)
    assert abs(diag[0] - 1.0) < 1e-12  # |00> untouched
    assert abs(diag[3] + 1.0) < 1e-12  # |11> picks up the interaction phase
    assert abs(diag[1] - diag[2]) < 1e-12  # symmetric single-excitation phases


def test_gate_average_dwell_idle_wait():
    assert abs(protocols.gate_average_rydberg_time(ControlPulse.zero(np.pi, 64)) - np.pi) < 1e-12


def test_gate_average_dwell_equals_duration():
    # Pi_r has trace 4, so the computational-input average is always 1
    rng = np.random.default_rng(3)
    pulse = ControlPulse(5.0, rng.normal(size=80), rng.normal(size=80))
    assert abs(protocols.gate_average_rydberg_time(pulse) - 5.0) < 1e-9


def test_gate_average_dominates_bell_preparation_share():
    rng = np.random.default_rng(4)
    pulse = ControlPulse(6.8, 0.5 * rng.normal(size=60), 0.2 * rng.normal(size=60))
    tr_gg = core.integrated_rydberg_time(core.propagate(pulse, np.eye(4, dtype=complex)[0]))
    assert protocols.gate_average_rydberg_time(pulse) >= 0.25 * tr_gg - 1e-12


def test_pulse_unitary_is_unitary():
    rng = np.random.default_rng(5)
    pulse = ControlPulse(4.0, rng.normal(size=50), rng.normal(size=50))
    u = protocols.pulse_unitary(pulse)
    assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-12


# ---------------------------------------------------------------------------
# Weyl coordinates
# ---------------------------------------------------------------------------


def test_weyl_identity_and_cz():
    assert protocols.weyl_coordinates(np.eye(4)) == (0.0, 0.0, 0.0)
    c = protocols.weyl_coordinates(CZ)
    assert abs(c[0] - np.pi / 2.0) < 1e-8
    assert abs(c[1]) < 1e-8 and abs(c[2]) < 1e-8


def test_weyl_rejects_non_unitary():
    with pytest.raises(ValueError):
        protocols.weyl_coordinates(np.ones((4, 4)))
    with pytest.raises(ValueError):
        protocols.weyl_coordinates(np.eye(3))


def test_weyl_local_invariance():
    rng = np.random.default_rng(6)
    gate = protocols.canonical_two_qubit_gate(1.2, 0.4, 0.2)
    base = np.array(protocols.weyl_coordinates(gate))
    for _ in range(10):
        k1 = np.kron(haar_su2(rng), haar_su2(rng))
        k2 = np.kron(haar_su2(rng), haar_su2(rng))
        dressed = np.array(protocols.weyl_coordinates(k1 @ gate @ k2))
        assert np.max(np.abs(dressed - base)) < 1e-8


def test_weyl_roundtrip_through_canonical_gate():
    rng = np.random.default_rng(7)
    for _ in range(20):
        c1 = rng.uniform(0.15, np.pi / 2.0 - 0.1)
        c2 = rng.uniform(0.05, 0.9 * c1)
        c3 = rng.uniform(0.0, 0.9 * c2)
        gate = protocols.canonical_two_qubit_gate(c1, c2, c3)
        back = protocols.weyl_coordinates(gate)
        assert np.max(np.abs(np.array(back) - [c1, c2, c3])) < 1e-9


def test_weyl_unfolded_region_and_fold():
    # a gate beyond c1 = pi/2 keeps its canonical coordinates and also gets a
    # mirrored report with c1 <= pi/2
    point = (1.7, 0.31, 0.31)
    gate = protocols.canonical_two_qubit_gate(*point)
    c = protocols.weyl_coordinates(gate)
    assert np.max(np.abs(np.array(c) - point)) < 1e-9
    folded = protocols.weyl_coordinates_folded(gate)
    expected = tuple(sorted((np.pi - 1.7, 0.31, 0.31), reverse=True))
    assert np.max(np.abs(np.array(folded) - expected)) < 1e-9
    # CZ is a fixed point of the folding
    assert protocols.weyl_coordinates_folded(CZ) == protocols.weyl_coordinates(CZ)


def test_canonical_gate_at_cz_point():
    gate = protocols.canonical_two_qubit_gate(np.pi / 2.0, 0.0, 0.0)
    c = protocols.weyl_coordinates(gate)
    assert abs(c[0] - np.pi / 2.0) < 1e-9 and abs(c[1]) < 1e-9 and abs(c[2]) < 1e-9
