"""Acceptance suite: one test per release criterion, each timed against its budget.

Run with `pytest tests/test_acceptance.py -v -s` to see one pass/fail line
per criterion.
"""

import time

import numpy as np
import pytest

from rechip import experiments as exp
from rechip import tomography as tomo
from rechip.calibration import HeaterCurve, fit_fringe, phase_of_voltage, voltage_of_phase
from rechip.chip import (
    PhaseConfig,
    cnot_success_probs,
    coincidence_probs,
    h_prime,
    two_qubit_unitary,
    u_cnot,
    verify_cnot,
)
from rechip.cli import main
from rechip.noise import CountRecord, NoiseModel, SpectralModel, hom_dip_curve, hom_visibility
from rechip.optics import Coupler, Netlist, Phase, compose, element_matrix, two_photon_distribution, distinguishable_distribution

TWO_PI = 2 * np.pi

NOISE_REF = NoiseModel(phase_sigma=0.05, indistinguishability=0.978, mean_pairs=1e4)


class Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[acceptance] {self.name}: {status} ({elapsed:.2f} s / budget {self.seconds} s)")
        if exc_type is None:
            assert elapsed < self.seconds, f"{self.name} exceeded {self.seconds} s ({elapsed:.2f} s)"


def test_criterion_01_gate_identities():
    with Budget("1 gate identities", 1.0):
        coupler = element_matrix(Coupler(0, 1, 0.5), 2)
        assert np.max(np.abs(h_prime() - coupler)) < 1e-12
        assert np.max(np.abs(two_qubit_unitary(PhaseConfig.zeros()) - u_cnot())) < 1e-12


def test_criterion_02_postselection_probability():
    with Budget("2 postselected CNOT", 1.0):
        successes = cnot_success_probs()
        assert np.max(np.abs(successes - 1.0 / 9.0)) < 1e-9
        assert verify_cnot() < 1e-9


def test_criterion_03_cross_model_oracle():
    with Budget("3 cross-model oracle (500 configs)", 30.0):
        rng = np.random.default_rng(300)
        worst = 0.0
        for _ in range(500):
            config = PhaseConfig(rng.uniform(0, TWO_PI, 8))
            state = f"{rng.integers(0, 2)}{rng.integers(0, 2)}"
            gate = coincidence_probs(config, state, model="gate").as_array()
            wave = coincidence_probs(config, state, model="waveguide").as_array()
            worst = max(worst, float(np.max(np.abs(gate - wave))))
        assert worst < 1e-9


def test_criterion_04_hom():
    with Budget("4 HOM dip and visibility", 10.0):
        # pi/2 MZ acts as a 50:50 splitter: no coincidences for ideal photons,
        # half for distinguishable ones (the plateau)
        mz = Netlist(2, (Coupler(0, 1, 0.5), Phase(0, np.pi / 2), Coupler(0, 1, 0.5)))
        u = compose(mz)
        assert two_photon_distribution(u, (1, 1))[(1, 1)] == pytest.approx(0.0, abs=1e-12)
        assert distinguishable_distribution(u, (1, 1))[(1, 1)] == pytest.approx(0.5, abs=1e-12)

        curve = hom_dip_curve([0.0, 1e9], SpectralModel(), 0.978)
        assert hom_visibility(curve[1], curve[0]) == pytest.approx(0.978, abs=1e-9)

        scan = exp.hom_scan(
            noise=NoiseModel(phase_sigma=0.0, indistinguishability=0.978, mean_pairs=1e4),
            rng=np.random.default_rng(404),
        )
        assert scan.visibility == pytest.approx(0.978, abs=0.01)


def test_criterion_05_random_configuration_benchmark():
    with Budget("5 random-configuration benchmark", 300.0):
        exact = exp.random_config_benchmark(n=995, rng=None, exact=True)
        assert np.all(exact.fidelities >= 1.0 - 1e-9)

        noisy = exp.random_config_benchmark(n=995, noise=NOISE_REF, rng=np.random.default_rng(500))
        assert 0.975 <= noisy.mean <= 0.999
        assert noisy.fraction_above(0.97) >= 0.90


def test_criterion_06_bell_suite():
    with Budget("6 Bell suite", 120.0):
        report = exp.bell_state_suite(rng=None, mc_trials=25)
        assert len(report.entries) == 4
        for entry in report.entries:
            assert entry.fidelity > 0.999
            tomo.check_density(entry.rho)


def test_criterion_07_chsh_manifold():
    with Budget("7 CHSH manifold", 300.0):
        grid = exp.chsh_manifold()
        assert grid.s.shape == (16, 16)
        smin, smax = exp.chsh_extrema(grid)
        assert smax == pytest.approx(2 * np.sqrt(2), abs=1e-6)
        assert smin == pytest.approx(-2 * np.sqrt(2), abs=1e-6)

        betas = np.arange(0, TWO_PI + 1e-9, TWO_PI / 50)
        assert max(abs(exp.chsh_sum(0.0, b)) for b in betas) <= 2.0 + 1e-9

        assert exp.r_squared(grid.s.ravel(), grid.s.ravel()) == 1.0

        sampled = exp.chsh_manifold(noise=NOISE_REF, rng=np.random.default_rng(700))
        assert exp.r_squared(sampled.s.ravel(), grid.s.ravel()) >= 0.9


def test_criterion_08_mixture():
    with Budget("8 mixed-state generation", 300.0):
        rng = np.random.default_rng(800)
        for _ in range(1000):
            r = tomo.bloch_of_rho(tomo.sample_hs_random(2, rng))
            config = exp.prep_config(exp.solve_mixed_prep(r))
            red = exp.reduced_state_of_config(config)
            assert tomo.quantum_fidelity(red, tomo.rho_of_bloch(r)) > 1.0 - 1e-9

        report = exp.mixed_state_suite(n=119, noise=NOISE_REF, rng=np.random.default_rng(801))
        assert report.mean >= 0.95
        assert report.fraction_above(0.95) >= 0.85


def test_criterion_09_calibration():
    with Budget("9 calibration fits", 10.0):
        curve = HeaterCurve(a0=0.3, a2=0.35, a3=0.01, a4=-0.0008)
        volts = np.linspace(0, 7, 140)
        counts = 8000.0 * (1 - 0.93 * np.cos(curve.phase(volts) / 2) ** 2)
        fit = fit_fringe(np.column_stack([volts, counts]))
        assert fit.amplitude == pytest.approx(8000.0, rel=1e-6)
        assert fit.contrast == pytest.approx(0.93, rel=1e-6)

        rng = np.random.default_rng(900)
        lo, hi = curve.phase(0.0), curve.phase(7.0)
        for target in rng.uniform(lo, hi, 100):
            v = voltage_of_phase(curve, target)
            assert abs(phase_of_voltage(curve, v) - target) < 1e-8


def test_criterion_10_tomography_oracle():
    with Budget("10 tomography oracle (100 states)", 120.0):
        settings = tomo.canonical_settings(2)
        rng = np.random.default_rng(1000)
        for _ in range(100):
            rho = tomo.sample_hs_random(4, rng)
            records = tomo.simulate_counts(settings, rho, 1e6)
            result = tomo.mle_reconstruct(settings, records)
            assert tomo.quantum_fidelity(rho, result.rho) > 0.999

        uniform = [CountRecord(s.label, 250, 250, 250, 250) for s in settings]
        result = tomo.mle_reconstruct(settings, uniform)
        assert np.max(np.abs(result.rho - np.eye(4) / 4)) < 1e-3


def test_criterion_11_determinism_across_jobs(tmp_path, capsys):
    with Budget("11 determinism across --jobs", 120.0):
        cases = [
            ["benchmark-random", "--n", "12", "--seed", "42", "--pairs", "2000"],
            ["chsh-manifold", "--seed", "42", "--step", "1.2566370614359172", "--format", "csv"],
            ["bell-suite", "--seed", "42", "--pairs", "1000", "--mc-trials", "4"],
        ]
        for argv in cases:
            outputs = []
            for jobs in ("1", "3"):
                path = tmp_path / f"{argv[0]}-{jobs}.out"
                code = main(argv + ["--jobs", jobs, "--output", str(path)])
                capsys.readouterr()
                assert code == 0
                outputs.append(path.read_bytes())
            assert outputs[0] == outputs[1], f"{argv[0]} output differs across --jobs"
