"""End-to-end experiment drivers built on the chip, noise and tomography layers.

Each driver accepts a NoiseModel and a ``numpy.random.Generator`` (or runs
exactly, probability-level, when the generator is omitted).  Sweeps spawn
one child generator per task, so results are bit-identical regardless of
how many workers execute them.
"""

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _minimize

from .calibration import phase_of_voltage
from .chip import (
    PhaseConfig,
    coincidence_probs,
    distinguishable_coincidence_probs,
    two_qubit_unitary,
)
from .noise import (
    CountRecord,
    NoiseModel,
    SpectralModel,
    apply_phase_noise,
    hom_dip_curve,
    hom_visibility,
    mix_statistics,
)
from .tomography import (
    canonical_settings,
    bloch_of_rho,
    mle_reconstruct,
    monte_carlo_error,
    partial_trace,
    quantum_fidelity,
    rho_of_bloch,
    rho_to_json,
    sample_hs_random,
    statistical_fidelity,
)

TWO_PI = 2.0 * np.pi
DEFAULT_MANIFOLD_STEP = TWO_PI / 15.0


def _run_indexed(fn, n, jobs):
    """Evaluate fn(0..n-1) preserving order; jobs > 1 uses a thread pool."""
    if jobs is None or jobs <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(n)))


def _spawn(rng, n):
    return rng.spawn(n) if rng is not None else [None] * n


# ---------------------------------------------------------------------------
# state preparation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrepAmplitudes:
    """Per-qubit input amplitudes (alpha, beta) and (gamma, delta), each normalised."""

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    def __post_init__(self):
        for pair in ((self.alpha, self.beta), (self.gamma, self.delta)):
            norm = abs(pair[0]) ** 2 + abs(pair[1]) ** 2
            if abs(norm - 1.0) > 1e-12:
                raise ValueError(f"amplitude pair not normalised (|.|^2 sum {norm})")


def prep_config(amps):
    """Preparation phases (phi1..phi4; measurement phases zero) for given amplitudes.

    phi_odd = 2 atan2(|second|, |first|) sets the populations, phi_even the
    relative phase of each pair.
    """
    phi1 = 2.0 * np.arctan2(abs(amps.beta), abs(amps.alpha))
    phi2 = np.angle(amps.beta) - np.angle(amps.alpha)
    phi3 = 2.0 * np.arctan2(abs(amps.delta), abs(amps.gamma))
    phi4 = np.angle(amps.delta) - np.angle(amps.gamma)
    return PhaseConfig([phi1, phi2, phi3, phi4, 0.0, 0.0, 0.0, 0.0])


def post_cnot_state(amps):
    """Two-qubit amplitudes after the CNOT: (ag, ad, bd, bg) in basis order."""
    a, b, g, d = amps.alpha, amps.beta, amps.gamma, amps.delta
    return np.array([a * g, a * d, b * d, b * g], dtype=complex)


# ---------------------------------------------------------------------------
# noisy device statistics shared by all drivers
# ---------------------------------------------------------------------------

def device_probs(config, noise, rng, input_state="00"):
    """Coincidence statistics of the simulated device under a noise model.

    Applies per-setting phase jitter (when an rng is given), runs the
    two-photon waveguide model and blends in the distinguishable-photon
    statistics with weight 1 - v.
    """
    if rng is not None and noise.phase_sigma > 0:
        config = apply_phase_noise(config, noise.phase_sigma, rng)
    probs = coincidence_probs(config, input_state, model="waveguide")
    v = noise.indistinguishability
    if v < 1.0:
        classical = distinguishable_coincidence_probs(config, input_state)
        probs = mix_statistics(probs, classical, v)
    return probs


def _outcome_counts(p, noise, rng):
    """Expected or Poisson-sampled counts for an outcome-probability vector."""
    lam = noise.mean_pairs * (np.asarray(p, dtype=float) + noise.accidental_fraction / len(p))
    if rng is None:
        return lam
    return rng.poisson(lam).astype(float)


# ---------------------------------------------------------------------------
# random-configuration benchmark
# ---------------------------------------------------------------------------

@dataclass
class BenchmarkReport:
    """Statistical fidelities of randomly chosen device configurations."""

    fidelities: np.ndarray

    @property
    def mean(self):
        return float(np.mean(self.fidelities))

    @property
    def std(self):
        return float(np.std(self.fidelities))

    def fraction_above(self, threshold):
        return float(np.mean(self.fidelities > threshold))

    def to_dict(self):
        return {
            "schema": 1,
            "experiment": "benchmark-random",
            "n": int(self.fidelities.size),
            "mean": self.mean,
            "std": self.std,
            "fraction_above_0.97": self.fraction_above(0.97),
            "fidelities": [float(f) for f in self.fidelities],
        }


def random_config_benchmark(n=995, noise=None, rng=None, exact=False, jobs=1):
    """Statistical fidelity between simulated and ideal coincidence statistics
    over n configurations drawn uniformly from [0, 2*pi)^8.

    exact=True (or rng=None) skips phase jitter and count sampling, keeping
    only the deterministic parts of the noise model; a noiseless model then
    gives fidelity 1 up to roundoff.
    """
    noise = noise if noise is not None else NoiseModel.noiseless()
    children = _spawn(rng, n)

    def one(i):
        child = children[i]
        cfg_rng = child if child is not None else np.random.default_rng(i)
        config = PhaseConfig(cfg_rng.uniform(0.0, TWO_PI, 8))
        theory = coincidence_probs(config, "00", model="gate")
        sim_rng = None if exact else child
        probs = device_probs(config, noise, sim_rng)
        counts = _outcome_counts(probs.as_array(), noise, sim_rng)
        total = counts.sum()
        if total <= 0:
            return 0.0
        return statistical_fidelity(counts / total, theory)

    return BenchmarkReport(np.array(_run_indexed(one, n, jobs)))


# ---------------------------------------------------------------------------
# tomography-based suites
# ---------------------------------------------------------------------------

@dataclass
class SuiteEntry:
    label: str
    fidelity: float
    error: float
    rho: np.ndarray
    target: np.ndarray


@dataclass
class SuiteReport:
    experiment: str
    entries: list = field(default_factory=list)

    @property
    def fidelities(self):
        return np.array([e.fidelity for e in self.entries])

    @property
    def mean(self):
        return float(np.mean(self.fidelities))

    @property
    def std(self):
        return float(np.std(self.fidelities))

    def fraction_above(self, threshold):
        return float(np.mean(self.fidelities > threshold))

    def to_dict(self, include_states=True):
        doc = {
            "schema": 1,
            "experiment": self.experiment,
            "mean": self.mean,
            "std": self.std,
            "entries": [],
        }
        for e in self.entries:
            item = {"label": e.label, "fidelity": e.fidelity, "error": e.error}
            if include_states:
                item["rho"] = json.loads(rho_to_json(e.rho))
                item["target"] = json.loads(rho_to_json(e.target))
            doc["entries"].append(item)
        return doc


def _measurement_config(prep, setting):
    """Full device configuration realising an analysis setting on a prepared state."""
    phis = list(prep.phis[:4]) + [0.0, 0.0, 0.0, 0.0]
    phis[4], phis[5] = setting.angles[0]
    if setting.qubits == 2:
        phis[6], phis[7] = setting.angles[1]
    return PhaseConfig(phis)


def tomography_records(prep, noise, rng, qubits=2):
    """Simulated count records over the canonical settings for a prepared state.

    Single-qubit tomography analyses qubit A (its own measurement stage) and
    marginalises over qubit B's outcome.
    """
    settings = canonical_settings(qubits)
    children = _spawn(rng, len(settings))
    records = []
    for setting, child in zip(settings, children):
        config = _measurement_config(prep, setting)
        probs = device_probs(config, noise, child).as_array()
        if qubits == 1:
            probs = np.array([probs[0] + probs[1], probs[2] + probs[3]])
        counts = _outcome_counts(probs, noise, child)
        records.append(CountRecord.from_counts(setting.label, counts))
    return settings, records


def _reconstruct_fidelity(settings, records, target):
    result = mle_reconstruct(settings, records)
    return quantum_fidelity(target, result.rho), result.rho


BELL_PREPS = {
    "phi_plus": (np.pi / 2, 0.0, 0.0, 0.0),
    "phi_minus": (np.pi / 2, np.pi, 0.0, 0.0),
    "psi_plus": (np.pi / 2, 0.0, np.pi, 0.0),
    "psi_minus": (np.pi / 2, np.pi, np.pi, 0.0),
}

_BELL_KETS = {
    "phi_plus": np.array([1, 0, 0, 1]) / np.sqrt(2),
    "phi_minus": np.array([1, 0, 0, -1]) / np.sqrt(2),
    "psi_plus": np.array([0, 1, 1, 0]) / np.sqrt(2),
    "psi_minus": np.array([0, 1, -1, 0]) / np.sqrt(2),
}


def bell_targets():
    return {name: np.outer(k, k.conj()).astype(complex) for name, k in _BELL_KETS.items()}


def bell_state_suite(noise=None, rng=None, mc_trials=25, jobs=1):
    """Prepare the four Bell states, tomograph each and report fidelities.

    Error bars come from Poisson resampling of the count records followed by
    re-reconstruction (mc_trials=0 disables them).
    """
    noise = noise if noise is not None else NoiseModel.noiseless()
    targets = bell_targets()
    names = list(BELL_PREPS)
    children = _spawn(rng, len(names))

    def one(i):
        name = names[i]
        child = children[i]
        prep = PhaseConfig(list(BELL_PREPS[name]) + [0.0] * 4)
        settings, records = tomography_records(prep, noise, child, qubits=2)
        fidelity, rho = _reconstruct_fidelity(settings, records, targets[name])
        error = 0.0
        if mc_trials >= 2:
            err_rng = child if child is not None else np.random.default_rng(i)
            error = monte_carlo_error(
                records,
                lambda recs: _reconstruct_fidelity(settings, recs, targets[name])[0],
                mc_trials,
                err_rng,
            )
        return SuiteEntry(name, float(fidelity), float(error), rho, targets[name])

    entries = _run_indexed(one, len(names), jobs)
    return SuiteReport("bell-suite", entries)


# ---------------------------------------------------------------------------
# CHSH manifold
# ---------------------------------------------------------------------------

ALICE_DIALS = (np.pi / 4, -np.pi / 4)


def chsh_state(alpha):
    """Normalised tunable state ((1 - e^{i a})|00> + (1 + e^{i a})|11>) / 2."""
    z = np.exp(1j * alpha)
    return np.array([(1 - z) / 2, 0.0, 0.0, (1 + z) / 2], dtype=complex)


def chsh_prep_config(alpha):
    """Preparation phases generating chsh_state(alpha) through the CNOT.

    The device realises the state with phi1 = pi - alpha and phi2 = pi / 2
    (the tuning phase enters through the heater offsets, so the dial-to-state
    relation carries a fixed affine correction).
    """
    return PhaseConfig([np.pi - alpha, np.pi / 2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])


def _chsh_config(alpha, alice_dial, bob_dial):
    # Measurement-stage internal angles sit at pi/2 so the external phases
    # rotate the analysis axis around the equator.  Bob's analyzer azimuth
    # runs opposite to his dial (mirror-image stage), hence the sign.
    return PhaseConfig(
        [np.pi - alpha, np.pi / 2, 0.0, 0.0, np.pi / 2, alice_dial, np.pi / 2, -bob_dial]
    )


def _correlator(counts):
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts / total
    return float(p[0] - p[1] - p[2] + p[3])


def chsh_sum(alpha, beta, noise=None, rng=None, mc_trials=0):
    """Bell-CHSH sum S(alpha, beta) from the four correlator settings.

    Alice's dials are phi6 = +-pi/4; Bob's are phi8 = beta and beta + pi/2.
    Exact mode (rng=None) evaluates probabilities; otherwise counts are
    Poisson-sampled.  Returns S, or (S, std) when mc_trials >= 2.
    """
    noise = noise if noise is not None else NoiseModel.noiseless()
    signs = ((0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0))
    bob_dials = (beta, beta + np.pi / 2)
    children = _spawn(rng, 4)
    records = []
    s = 0.0
    for (i, j, sign), child in zip(signs, children):
        config = _chsh_config(alpha, ALICE_DIALS[i], bob_dials[j])
        probs = device_probs(config, noise, child)
        if rng is None:
            counts = probs.as_array()
        else:
            counts = _outcome_counts(probs.as_array(), noise, child)
        records.append((sign, counts))
        s += sign * _correlator(counts)
    if mc_trials < 2 or rng is None:
        return s
    trials = np.empty(mc_trials)
    for t in range(mc_trials):
        trials[t] = sum(sign * _correlator(rng.poisson(c).astype(float)) for sign, c in records)
    return s, float(np.std(trials, ddof=1))


@dataclass
class ManifoldGrid:
    alphas: np.ndarray
    betas: np.ndarray
    s: np.ndarray
    std: np.ndarray

    def to_dict(self):
        return {
            "schema": 1,
            "experiment": "chsh-manifold",
            "alphas": [float(a) for a in self.alphas],
            "betas": [float(b) for b in self.betas],
            "S": [[float(v) for v in row] for row in self.s],
            "std": [[float(v) for v in row] for row in self.std],
            "max": float(self.s.max()),
            "min": float(self.s.min()),
        }

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["alpha", "beta", "S", "std"])
        for i, a in enumerate(self.alphas):
            for j, b in enumerate(self.betas):
                writer.writerow([repr(float(a)), repr(float(b)),
                                 repr(float(self.s[i, j])), repr(float(self.std[i, j]))])
        return buf.getvalue()


def chsh_manifold(step=DEFAULT_MANIFOLD_STEP, noise=None, rng=None, mc_trials=0, jobs=1):
    """S(alpha, beta) on a closed grid over [0, 2*pi] x [0, 2*pi]."""
    if step <= 0:
        raise ValueError("step must be positive")
    noise = noise if noise is not None else NoiseModel.noiseless()
    npts = int(np.floor(TWO_PI / step + 1e-9)) + 1
    axis = np.arange(npts) * step
    children = _spawn(rng, npts * npts)
    s = np.zeros((npts, npts))
    std = np.zeros((npts, npts))

    def one(k):
        i, j = divmod(k, npts)
        out = chsh_sum(axis[i], axis[j], noise, children[k], mc_trials=mc_trials)
        return out if isinstance(out, tuple) else (out, 0.0)

    for k, (val, err) in enumerate(_run_indexed(one, npts * npts, jobs)):
        i, j = divmod(k, npts)
        s[i, j] = val
        std[i, j] = err
    return ManifoldGrid(axis, axis.copy(), s, std)


def chsh_extrema(grid=None):
    """(min, max) of the exact S surface, refined from the grid extrema."""
    if grid is None:
        grid = chsh_manifold()

    def refine(x0, sign):
        res = _minimize(
            lambda x: sign * chsh_sum(x[0], x[1]),
            x0,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000},
        )
        return sign * res.fun

    imax = np.unravel_index(np.argmax(grid.s), grid.s.shape)
    imin = np.unravel_index(np.argmin(grid.s), grid.s.shape)
    smax = refine(np.array([grid.alphas[imax[0]], grid.betas[imax[1]]]), -1.0)
    smin = refine(np.array([grid.alphas[imin[0]], grid.betas[imin[1]]]), 1.0)
    return float(smin), float(smax)


def r_squared(measured, theory):
    """Coefficient of determination 1 - sum (S-T)^2 / sum (S - mean S)^2."""
    s = np.asarray(measured, dtype=float)
    t = np.asarray(theory, dtype=float)
    if s.shape != t.shape or s.size < 2:
        raise ValueError("inputs must have equal length >= 2")
    denom = np.sum((s - s.mean()) ** 2)
    if denom <= 0:
        raise ValueError("measured values are all equal (degenerate denominator)")
    return float(1.0 - np.sum((s - t) ** 2) / denom)


# ---------------------------------------------------------------------------
# mixed-state generation
# ---------------------------------------------------------------------------

def solve_mixed_prep(target):
    """Preparation amplitudes whose reduced qubit-A state hits a Bloch target.

    The populations fix |alpha|, |beta| from r_z; the coherence
    alpha beta* (gamma delta* + delta gamma*) supplies the equatorial part,
    with its phase carried by beta and its magnitude by the real overlap
    2 Re(gamma delta*) = sqrt(rx^2 + ry^2) / (2 |alpha| |beta|).
    """
    r = np.asarray(target, dtype=float)
    norm = np.linalg.norm(r)
    if norm > 1.0 + 1e-9:
        raise ValueError(f"Bloch vector norm {norm} exceeds 1")
    rx, ry, rz = r
    rz = min(max(rz, -1.0), 1.0)
    mag_a = np.sqrt((1.0 + rz) / 2.0)
    mag_b = np.sqrt((1.0 - rz) / 2.0)
    chi = np.arctan2(-ry, rx)  # phase of rx - i ry
    alpha = complex(mag_a)
    beta = mag_b * np.exp(-1j * chi)
    r_perp = np.hypot(rx, ry)
    if mag_a * mag_b > 1e-12:
        overlap = min(r_perp / (2.0 * mag_a * mag_b), 1.0)
    else:
        overlap = 0.0
    theta = np.arcsin(overlap)
    gamma = complex(np.cos(theta / 2.0))
    delta = complex(np.sin(theta / 2.0))
    return PrepAmplitudes(alpha, beta, gamma, delta)


def reduced_state_of_config(config):
    """Qubit-A reduced density matrix of the gate-model output for |00> input."""
    psi = two_qubit_unitary(config)[:, 0]
    return partial_trace(np.outer(psi, psi.conj()), keep="A")


def mixed_state_suite(targets=None, n=119, noise=None, rng=None, mc_trials=0, jobs=1):
    """Generate mixed single-qubit targets on the chip and tomograph qubit A.

    targets: iterable of Bloch vectors; when omitted, n targets are drawn at
    random by the Hilbert-Schmidt measure (requires an rng).
    """
    noise = noise if noise is not None else NoiseModel.noiseless()
    if targets is None:
        if rng is None:
            raise ValueError("sampling targets requires an rng")
        targets = [bloch_of_rho(sample_hs_random(2, rng)) for _ in range(n)]
    targets = [np.asarray(t, dtype=float) for t in targets]
    children = _spawn(rng, len(targets))

    def one(i):
        r = targets[i]
        child = children[i]
        prep = prep_config(solve_mixed_prep(r))
        settings, records = tomography_records(prep, noise, child, qubits=1)
        target_rho = rho_of_bloch(r)
        fidelity, rho = _reconstruct_fidelity(settings, records, target_rho)
        error = 0.0
        if mc_trials >= 2 and child is not None:
            error = monte_carlo_error(
                records,
                lambda recs: _reconstruct_fidelity(settings, recs, target_rho)[0],
                mc_trials,
                child,
            )
        return SuiteEntry(f"target-{i}", float(fidelity), float(error), rho, target_rho)

    entries = _run_indexed(one, len(targets), jobs)
    return SuiteReport("mixed-suite", entries)


# ---------------------------------------------------------------------------
# interference scans
# ---------------------------------------------------------------------------

@dataclass
class HomScan:
    delays_fs: np.ndarray
    expected: np.ndarray
    counts: np.ndarray
    visibility: float

    def to_dict(self):
        return {
            "schema": 1,
            "experiment": "hom-dip",
            "delays_fs": [float(d) for d in self.delays_fs],
            "expected": [float(e) for e in self.expected],
            "counts": [float(c) for c in self.counts],
            "visibility": self.visibility,
        }


_PLATEAU_SIGMAS = 6.5  # residual dip depth exp(-6.5^2/2) ~ 7e-10, below tolerance


def hom_scan(delays_fs=None, noise=None, rng=None, spectral=None):
    """Two-photon coincidence counts against an optical delay, plus fitted visibility.

    The visibility estimate takes N_quantum from the zero-delay point and
    N_classical from the plateau average (points beyond 6.5 coherence times,
    where the dip term is negligible at the stated tolerances).
    """
    noise = noise if noise is not None else NoiseModel.noiseless()
    spectral = spectral or SpectralModel()
    if delays_fs is None:
        delays_fs = np.linspace(-1600.0, 1600.0, 81)
    delays_fs = np.asarray(delays_fs, dtype=float)
    probs = hom_dip_curve(delays_fs, spectral, noise.indistinguishability)
    expected = noise.mean_pairs * probs
    counts = expected if rng is None else rng.poisson(expected).astype(float)

    sigma_t = spectral.coherence_time_fs()
    plateau = np.abs(delays_fs) >= _PLATEAU_SIGMAS * sigma_t
    if not plateau.any():
        raise ValueError(f"delay scan must reach past {_PLATEAU_SIGMAS} coherence times")
    n_classical = counts[plateau].mean()
    n_quantum = counts[np.argmin(np.abs(delays_fs))]
    return HomScan(delays_fs, expected, counts, float(hom_visibility(n_classical, n_quantum)))


@dataclass
class FringeScan:
    heater: int
    voltages: np.ndarray
    counts0: np.ndarray
    counts1: np.ndarray

    def samples(self, output=0):
        counts = self.counts0 if output == 0 else self.counts1
        return list(zip(self.voltages, counts))


def fringe_scan(heater, voltages, curve, noise=None, rng=None):
    """Single-photon counts at both outputs of one heater's MZ against voltage.

    The fringe contrast equals the noise model's indistinguishability
    parameter and the amplitude its mean_pairs; in expectation the two
    outputs are complementary (their sum is constant).
    """
    if not 1 <= heater <= 8:
        raise ValueError("heater index must be 1..8")
    noise = noise if noise is not None else NoiseModel.noiseless()
    voltages = np.asarray(voltages, dtype=float)
    phi = np.array([phase_of_voltage(curve, v) for v in voltages])
    amp = noise.mean_pairs
    contrast = noise.indistinguishability
    expected0 = amp * (1.0 - contrast * np.cos(phi / 2.0) ** 2)
    expected1 = amp * (1.0 - contrast * np.sin(phi / 2.0) ** 2)
    if rng is None:
        return FringeScan(heater, voltages, expected0, expected1)
    return FringeScan(
        heater,
        voltages,
        rng.poisson(expected0).astype(float),
        rng.poisson(expected1).astype(float),
    )


# ---------------------------------------------------------------------------
# bundled glyph targets
# ---------------------------------------------------------------------------

def load_psi_glyph():
    """The 63 bundled real-plane Bloch vectors tracing the psi glyph."""
    from importlib import resources

    targets = []
    text = resources.files("rechip").joinpath("data/psi_glyph.csv").read_text()
    for lineno, line in enumerate(text.strip().splitlines()):
        if lineno == 0:
            continue
        rx, ry, rz = (float(v) for v in line.split(","))
        targets.append(np.array([rx, ry, rz]))
    return targets


def read_bloch_targets(path):
    """Parse a Bloch-target CSV (header rx,ry,rz); errors name the line."""
    targets = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["rx", "ry", "rz"]:
            raise ValueError(f"{path}: line 1: expected header rx,ry,rz")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 fields")
            try:
                targets.append(np.array([float(v) for v in row]))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric value") from None
    return targets
