"""The six-waveguide two-qubit device: phases, gate algebra, netlist, cross-checks.

Layout
------
Modes 0..5 carry (top to bottom): an ancilla, qubit A's rails, qubit B's
rails, and a second ancilla.  The first rail of each pair is logical |0>.
Each qubit passes through a preparation Mach-Zehnder (two eta=1/2 couplers
around an internal phase) plus an external phase, then the postselected
CNOT core, then a mirror-image measurement stage.  Outcomes are read as
coincidences with one photon in each qubit's rail pair and empty ancillas.

Phase indices: odd phases (phi1, phi3, phi5, phi7) are the MZ-internal
(sigma_y-type) angles, even phases (phi2, phi4, phi6, phi8) the external
sigma_z-type ones; (phi1, phi2) drive qubit A's preparation, (phi3, phi4)
qubit B's, (phi5, phi6) / (phi7, phi8) the respective measurement stages.

The gate-level model is

    [u_prep(phi5, phi6)† (x) u_prep(phi7, phi8)†] . U_CNOT .
    [u_prep(phi1, phi2) (x) u_prep(phi3, phi4)]

and the waveguide netlist reproduces its conditional coincidence statistics
exactly (up to float roundoff), with postselection success 1/9 for every
configuration.

Netlist conventions that make the two models coincide (chosen once, then
validated end to end by :func:`verify_cnot` and the cross-model tests):

* The three couplers marked 1/3 in the physical layout keep one third of
  the power on the logical path, so with eta defined as the cross-coupled
  fraction they are ``Coupler(eta=2/3)`` here.
* MZ internal phases sit on the upper arm; the preparation external phase
  sits on the upper rail, the measurement external phase on the lower rail.
* Two fixed 3*pi/2 phases on mode 3, immediately before and after the core,
  absorb the coupler phase convention so the postselected map is exactly
  U_CNOT at zero settings (not merely locally equivalent).
"""

import json
from dataclasses import dataclass

import numpy as np

from .numerics import align_global_phase, tensor
from .optics import Coupler, Netlist, Phase, compose, pattern_of_pair, two_photon_pairs
from . import kernels

TWO_PI = 2.0 * np.pi

ANCILLA_MODES = (0, 5)
QUBIT_A_RAILS = (1, 2)
QUBIT_B_RAILS = (3, 4)
MODES = 6

# eta of the couplers marked "1/3": cross power 2/3 keeps amplitude 1/sqrt(3)
CORE_ETA = 2.0 / 3.0

BASIS_LABELS = ("00", "01", "10", "11")


def _wrap(phi):
    # x % 2*pi can round up to exactly 2*pi for tiny negative x
    v = float(phi) % TWO_PI
    return 0.0 if v >= TWO_PI else v


@dataclass(frozen=True)
class DualRailMap:
    """Mode assignment of the dual-rail encoding (first rail = logical |0>)."""

    qubit_a: tuple = QUBIT_A_RAILS
    qubit_b: tuple = QUBIT_B_RAILS
    ancillas: tuple = ANCILLA_MODES


@dataclass(frozen=True)
class PhaseConfig:
    """The eight on-chip phases, wrapped into [0, 2*pi) on construction."""

    phis: tuple

    def __init__(self, phis):
        arr = tuple(_wrap(p) for p in phis)
        if len(arr) != 8:
            raise ValueError(f"expected 8 phases, got {len(arr)}")
        object.__setattr__(self, "phis", arr)

    @classmethod
    def zeros(cls):
        return cls((0.0,) * 8)

    def phi(self, index):
        """1-based accessor: phi(1) .. phi(8)."""
        return self.phis[index - 1]

    def as_array(self):
        return np.asarray(self.phis)

    def replace(self, **kwargs):
        """New config with 1-based keyword overrides, e.g. replace(phi6=0.3)."""
        phis = list(self.phis)
        for name, value in kwargs.items():
            if not name.startswith("phi"):
                raise ValueError(f"unknown phase {name!r}")
            phis[int(name[3:]) - 1] = value
        return PhaseConfig(phis)


@dataclass(frozen=True)
class CoincidenceProbs:
    """Conditional coincidence probabilities plus the postselection success."""

    p00: float
    p01: float
    p10: float
    p11: float
    success: float = 1.0

    def as_array(self):
        return np.array([self.p00, self.p01, self.p10, self.p11])

    @classmethod
    def from_array(cls, p, success=1.0):
        return cls(float(p[0]), float(p[1]), float(p[2]), float(p[3]), float(success))


def h_prime():
    """The Hadamard-like 2x2 gate of the chip: (1/sqrt 2) [[1, i], [i, 1]].

    Equals an eta=1/2 directional coupler; its square is i*X.
    """
    return np.array([[1.0, 1.0j], [1.0j, 1.0]], dtype=complex) / np.sqrt(2.0)


def u_prep(phi_y, phi_z):
    """Preparation rotation exp(-i phi_z sigma_z / 2) exp(-i phi_y sigma_y / 2).

    The measurement stage applies its conjugate transpose.
    """
    c, s = np.cos(phi_y / 2.0), np.sin(phi_y / 2.0)
    ry = np.array([[c, -s], [s, c]], dtype=complex)
    rz = np.diag([np.exp(-0.5j * phi_z), np.exp(0.5j * phi_z)])
    return rz @ ry


def u_cnot():
    """CNOT with qubit A as control, basis order 00, 01, 10, 11."""
    return np.array(
        [
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 0, 1],
            [0, 0, 1, 0],
        ],
        dtype=complex,
    )


def two_qubit_unitary(config):
    """Gate-level 4x4 unitary of the full circuit at the given phases."""
    p = config.phis
    ui = tensor(u_prep(p[0], p[1]), u_prep(p[2], p[3]))
    uf = tensor(u_prep(p[4], p[5]).conj().T, u_prep(p[6], p[7]).conj().T)
    return uf @ u_cnot() @ ui


def default_netlist(config):
    """The six-mode waveguide netlist at the given phase configuration.

    The element layout is constant; only the eight variable phase values
    change between configurations.
    """
    p = config.phis
    half = 0.5
    a0, a1 = QUBIT_A_RAILS
    b0, b1 = QUBIT_B_RAILS
    anc0, anc1 = ANCILLA_MODES
    elements = (
        # preparation stages: MZ internal phase on the upper arm, external on
        # the upper rail
        Coupler(a0, a1, half), Phase(a0, p[0]), Coupler(a0, a1, half), Phase(a0, p[1]),
        Coupler(b0, b1, half), Phase(b0, p[2]), Coupler(b0, b1, half), Phase(b0, p[3]),
        # fixed phase alignment of the CNOT core
        Phase(b0, 1.5 * np.pi),
        # H'-pair around the three power-1/3 couplers
        Coupler(b0, b1, half),
        Coupler(anc0, a0, CORE_ETA), Coupler(a1, b0, CORE_ETA), Coupler(b1, anc1, CORE_ETA),
        Coupler(b0, b1, half),
        Phase(b0, 1.5 * np.pi),
        # measurement stages (mirror image): external phase on the lower rail
        Phase(a1, p[5]), Coupler(a0, a1, half), Phase(a0, p[4]), Coupler(a0, a1, half),
        Phase(b1, p[7]), Coupler(b0, b1, half), Phase(b0, p[6]), Coupler(b0, b1, half),
    )
    return Netlist(modes=MODES, elements=elements)


def input_modes(basis_index):
    """Occupied input modes (one photon per qubit) for a computational basis state."""
    a_bit, b_bit = divmod(basis_index, 2)
    return QUBIT_A_RAILS[a_bit], QUBIT_B_RAILS[b_bit]


def coincidence_patterns():
    """The four accepted occupation patterns, in basis order 00, 01, 10, 11."""
    pats = []
    for idx in range(4):
        a, b = input_modes(idx)
        pats.append(pattern_of_pair(a, b, MODES))
    return tuple(pats)


def _postselected_block(u):
    """4x4 matrix of postselected two-photon amplitudes of a 6-mode transfer matrix."""
    u = np.ascontiguousarray(u, dtype=complex)
    out_i, out_j, index = two_photon_pairs(MODES)
    block = np.empty((4, 4), dtype=complex)
    coin = [index[input_modes(k)] for k in range(4)]
    for col in range(4):
        a, b = input_modes(col)
        amps = kernels.two_photon_amps(u, a, b, out_i, out_j)
        block[:, col] = amps[coin]
    return block


def postselected_map(config):
    """Postselected two-photon map of the default netlist (columns = basis inputs).

    Equals two_qubit_unitary(config) / 3 up to a global phase; the squared
    column norms are the postselection successes (1/9 each).
    """
    return _postselected_block(compose(default_netlist(config)))


def verify_cnot(netlist=None):
    """Max-entry deviation of 3x the postselected map from CNOT, phase-aligned.

    With no argument, checks the default netlist at the identity settings of
    the preparation and measurement stages.
    """
    if netlist is None:
        netlist = default_netlist(PhaseConfig.zeros())
    block = _postselected_block(compose(netlist))
    return float(np.max(np.abs(align_global_phase(3.0 * block) - u_cnot())))


def cnot_success_probs(netlist=None):
    """Postselection success probability for each computational basis input."""
    if netlist is None:
        netlist = default_netlist(PhaseConfig.zeros())
    block = _postselected_block(compose(netlist))
    return np.sum(np.abs(block) ** 2, axis=0)


def _basis_index(state):
    if isinstance(state, str):
        if state not in BASIS_LABELS:
            raise ValueError(f"unknown basis state {state!r}")
        return BASIS_LABELS.index(state)
    idx = int(state)
    if not 0 <= idx < 4:
        raise ValueError(f"basis index must be 0..3, got {state}")
    return idx


def coincidence_probs(config, input_state="00", model="gate"):
    """Conditional coincidence probabilities for a computational-basis input.

    model="gate" evaluates |<k|U|psi>|^2 with success 1 (lossless algebra);
    model="waveguide" runs the two-photon netlist simulation and postselects
    on the coincidence patterns.  Both give the same conditional
    distribution; the waveguide success is 1/9.
    """
    idx = _basis_index(input_state)
    if model == "gate":
        psi = two_qubit_unitary(config)[:, idx]
        p = np.abs(psi) ** 2
        return CoincidenceProbs.from_array(p / p.sum(), 1.0)
    if model == "waveguide":
        u = compose(default_netlist(config))
        out_i, out_j, index = two_photon_pairs(MODES)
        a, b = input_modes(idx)
        amps = kernels.two_photon_amps(np.ascontiguousarray(u), a, b, out_i, out_j)
        probs = np.abs(amps) ** 2
        coin = [index[input_modes(k)] for k in range(4)]
        mass = probs[coin]
        success = mass.sum()
        return CoincidenceProbs.from_array(mass / success, success)
    raise ValueError(f"model must be 'gate' or 'waveguide', got {model!r}")


def distinguishable_coincidence_probs(config, input_state="00"):
    """Waveguide-model coincidence statistics for distinguishable photons.

    The classical counterpart of coincidence_probs(..., model="waveguide"),
    used by the noise layer to blend in imperfect photon indistinguishability.
    """
    idx = _basis_index(input_state)
    u = compose(default_netlist(config))
    pu = np.ascontiguousarray(np.abs(u) ** 2)
    out_i, out_j, index = two_photon_pairs(MODES)
    a, b = input_modes(idx)
    probs = kernels.distinguishable_probs(pu, a, b, out_i, out_j)
    coin = [index[input_modes(k)] for k in range(4)]
    mass = probs[coin]
    success = mass.sum()
    return CoincidenceProbs.from_array(mass / success, success)


def config_to_json(config):
    """PhaseConfig as a JSON array of 8 floats."""
    return json.dumps(list(config.phis))


def config_from_json(text):
    return PhaseConfig(json.loads(text))
