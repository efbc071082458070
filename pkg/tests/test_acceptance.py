"""Acceptance suite: one test per release criterion, each at its stated
tolerance, with a PASS/FAIL line per criterion in the terminal summary.

The reference-wordlist statistics test needs the canonical 10,000-word
list; point ALPSIM_WORDLIST at it or place it at tests/data/wordlist.10000
(`alpsim market fetch-wordlist --dest tests/data/wordlist.10000`).
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from alpsim import flow
from alpsim.config import load_config, reference_config
from alpsim.market import LetterHypothesis, MarketRule, corpus_stats, load_wordlist, score_hypothesis
from alpsim.recipe import expand, parse_recipe, total_duration
from alpsim.solver import ReactorState, SolverOptions, run_recipe, step
from alpsim.store import ExperimentStore
from alpsim.telemetry import sample

from conftest import record_acceptance
from test_solver import tracer_config

GROW7 = (
    "1\tM\t1\t50\t0\n"
    "\tV\t2\t0\t0\n"
    "\tV\t3\t0\t10\n"
    "7\tV\t2\t1\t1\n"
    "\tV\t2\t0\t10\n"
    "\tV\t3\t1\t1\n"
    "\tV\t3\t0\t10\n"
)


def _qcm(state, config) -> float:
    return sample(state, config).qcm[0]


def _pulse(state, config, valve, open_s=1.0, purge_s=8.0):
    """One pulse/purge executed as a recipe; returns the QCM net change."""
    before = _qcm(state, config)
    recipe = parse_recipe(f"1\tV\t{valve}\t1\t{open_s:g}\n\tV\t{valve}\t0\t{purge_s:g}\n")
    run_recipe(state, recipe, config)
    return _qcm(state, config) - before


def _cycle_gains(trace, block: int) -> list[float]:
    qcm = trace.qcm[0]
    cycles: dict[int, list] = {}
    for seg in trace.segments:
        if seg.block == block:
            cycles.setdefault(seg.cycle, []).append(seg)
    starts = [cycles[k][0].i_start for k in sorted(cycles)]
    ends = starts[1:] + [cycles[max(cycles)][-1].i_end]
    return [float(qcm[e] - qcm[s]) for s, e in zip(starts, ends)]


class TestTransportCorrectness:
    def test_pure_diffusion_gaussian(self):
        t0 = time.perf_counter()
        cfg = tracer_config(sections=200, diffusion=5e-4)
        state = ReactorState.initial(cfg)
        n, dx = cfg.geometry.sections, cfg.geometry.section_width
        j0 = n // 2
        state.concentrations[0, j0] = 1.0 / dx
        d = cfg.chemicals[0].diffusion_coefficient
        dt = 0.8 / (3 * d / dx / dx)
        t = 0.0
        while t < 10.0:
            h = min(dt, 10.0 - t)
            step(state, h, cfg)
            t += h
        x = (np.arange(n) + 0.5) * dx
        x0 = (j0 + 0.5) * dx
        exact = np.exp(-((x - x0) ** 2) / (4 * d * 10.0)) / np.sqrt(4 * np.pi * d * 10.0)
        err = np.linalg.norm(state.concentrations[0] - exact) / np.linalg.norm(exact)
        runtime = time.perf_counter() - t0
        ok = err < 0.02 and runtime < 10.0
        record_acceptance(
            "transport: diffusion vs Gaussian kernel",
            ok, f"L2 error {err:.3%}, runtime {runtime:.1f}s",
        )
        assert err < 0.02
        assert runtime < 10.0

    def test_pure_advection_front(self):
        t0 = time.perf_counter()
        cfg = tracer_config(sections=200, diffusion=1e-9)
        state = ReactorState.initial(cfg)
        state.mfc_sccm = 50.0
        state.valve_states[1] = 1
        p = flow.equilibrium_inlet_pressure(50.0, 500.0, cfg.pump)
        v = flow.carrier_velocity(50.0, 500.0, p, cfg.geometry)
        from alpsim.solver import apply_boundary

        c_in = apply_boundary(state, cfg)[0]
        t_end = 0.5 / v
        dx = cfg.geometry.section_width
        dt = 0.8 / (v / dx)
        t = 0.0
        while t < t_end - 1e-12:
            h = min(dt, t_end - t)
            step(state, h, cfg)
            t += h
        profile = state.concentrations[0] / c_in
        x = (np.arange(cfg.geometry.sections) + 0.5) * dx
        crossing = np.interp(0.5, profile[::-1], x[::-1])
        err_sections = abs(crossing - 0.5) / dx
        runtime = time.perf_counter() - t0
        ok = err_sections < 2.0 and runtime < 10.0
        record_acceptance(
            "transport: advection front position",
            ok, f"error {err_sections:.2f} sections, runtime {runtime:.1f}s",
        )
        assert err_sections < 2.0
        assert runtime < 10.0


class TestCoverageConservation:
    def test_after_growth_recipe(self, table_run):
        state, _ = table_run
        worst = float(np.abs(state.coverages.sum(axis=0) - 1.0).max())
        ok = worst < 1e-6
        record_acceptance("coverage conservation after growth recipe", ok,
                          f"max |sum(theta)-1| = {worst:.2e}")
        assert ok


class TestSelfLimitingSaturation:
    def test_second_pulse_below_one_percent(self, run2):
        state = ReactorState.initial(run2)
        run_recipe(state, parse_recipe("1\tM\t1\t50\t5\n"), run2)
        first = _pulse(state, run2, valve=3, open_s=1.0, purge_s=10.0)
        second = _pulse(state, run2, valve=3, open_s=1.0, purge_s=10.0)
        ratio = abs(second) / abs(first)
        ok = ratio < 0.01
        record_acceptance("self-limiting saturation (two C pulses)", ok,
                          f"second/first = {ratio:.4%}")
        assert ok, (first, second)


class TestAldLinearity:
    def test_growth_per_cycle_and_fine_grid(self, run2, table_run, table_recipe_text):
        _, trace = table_run
        gains = _cycle_gains(trace, block=1)
        later = gains[1:5]
        spread = (max(later) - min(later)) / abs(np.mean(later))
        staircase_ok = all(g > 0 for g in gains)

        # independent fine-grid oracle: doubled sections, halved step
        doc = json.loads(run2.to_json())
        doc["geometry"]["sections"] = 200
        fine_cfg = load_config(json.dumps(doc))
        fine_state = ReactorState.initial(fine_cfg)
        _, fine_trace = run_recipe(
            fine_state, parse_recipe(table_recipe_text), fine_cfg,
            SolverOptions(safety=0.4),
        )
        coarse_final = float(trace.qcm[0, -1])
        fine_final = float(fine_trace.qcm[0, -1])
        grid_err = abs(fine_final - coarse_final) / abs(fine_final)

        # staircase shape: mass is flat over the tail of every purge
        qcm, t = trace.qcm[0], trace.time
        plateau_ok = True
        for seg in trace.segments:
            if seg.block == 1 and seg.duration == 10.0:
                tail = qcm[(t >= seg.t_end - 3.0) & (t <= seg.t_end)]
                plateau_ok = plateau_ok and (tail.max() - tail.min() < 0.3)

        ok = spread <= 0.05 and staircase_ok and plateau_ok and grid_err < 0.02
        record_acceptance(
            "ALD linearity (5 B/C cycles)", ok,
            f"cycle spread {spread:.2%}, fine-grid deviation {grid_err:.2%}",
        )
        assert spread <= 0.05
        assert staircase_ok and plateau_ok
        assert grid_err < 0.02


class TestEtchCycle:
    def test_net_removal_per_cycle(self, run2):
        state = ReactorState.initial(run2)
        run_recipe(state, parse_recipe(GROW7), run2)  # pre-grown film
        etch = parse_recipe(
            "1\tT\t0\t450\t0\n"
            "5\tV\t1\t1\t1\n"
            "\tV\t1\t0\t10\n"
            "\tV\t3\t1\t1\n"
            "\tV\t3\t0\t10\n"
        )
        _, trace = run_recipe(state, etch, run2)
        gains = _cycle_gains(trace, block=1)
        later = [abs(g) for g in gains[1:5]]
        negative_ok = all(g < 0 for g in gains)
        stability = (max(later) - min(later)) / np.mean(later)
        ok = negative_ok and stability <= 0.10
        record_acceptance(
            "etch cycles (A/C at 450 K)", ok,
            f"per-cycle {['%.1f' % g for g in gains]}, stability {stability:.2%}",
        )
        assert negative_ok, gains
        assert stability <= 0.10


class TestPassivation:
    def test_blocking_and_recovery(self, run2):
        state = ReactorState.initial(run2)
        run_recipe(state, parse_recipe("1\tM\t1\t50\t5\n"), run2)
        growing = _pulse(state, run2, valve=3)  # C grows on fresh sB
        _pulse(state, run2, valve=4)  # D passivates
        blocked = _pulse(state, run2, valve=3)  # C now inert
        _pulse(state, run2, valve=1)  # A etch strips the blocking layer
        recovered = _pulse(state, run2, valve=3)  # C reacts again
        ok = growing > 1.0 and abs(blocked) < 0.1 and abs(recovered) > 1.0
        record_acceptance(
            "passivation blocks then A etch restores", ok,
            f"grow {growing:.1f}, blocked {blocked:.3f}, recovered {recovered:.1f} ng/cm^2",
        )
        assert growing > 1.0
        assert abs(blocked) < 0.1
        assert abs(recovered) > 1.0


class TestDecomposition:
    def test_continuous_growth_at_650(self, run2):
        state = ReactorState.initial(run2)
        run_recipe(state, parse_recipe("1\tM\t1\t50\t2\n\tT\t0\t650\t3\n"), run2)
        gains = [_pulse(state, run2, valve=3) for _ in range(3)]
        # later pulses land on an all-sC surface: pure decomposition
        ok = all(g > 1.0 for g in gains) and gains[2] > 0.5 * gains[1]
        record_acceptance(
            "decomposition: continuous growth at 650 K", ok,
            f"pulse gains {['%.1f' % g for g in gains]} ng/cm^2",
        )
        assert ok, gains

    def test_no_decomposition_contribution_at_550(self, run2):
        state = ReactorState.initial(run2)
        run_recipe(state, parse_recipe("1\tM\t1\t50\t2\n\tT\t0\t550\t3\n"), run2)
        first = _pulse(state, run2, valve=3)  # saturates the self-limiting channel
        second = _pulse(state, run2, valve=3)
        third = _pulse(state, run2, valve=3)
        ok = first > 1.0 and abs(second) < 0.1 and abs(third) < 0.1
        record_acceptance(
            "decomposition: inactive at 550 K", ok,
            f"saturating {first:.1f}, then {second:.3f}, {third:.3f} ng/cm^2",
        )
        assert ok, (first, second, third)


class TestPumpMfcEquilibrium:
    def test_grid_against_bisection_oracle(self, run2):
        from test_flow import bisect_equilibrium

        t0 = time.perf_counter()
        pump = run2.pump
        flows = np.linspace(1.0, 2000.0, 10)
        temps = np.linspace(300.0, 700.0, 10)
        worst = 0.0
        closed_checked = False
        for f in flows:
            for t in temps:
                produced = flow.equilibrium_inlet_pressure(float(f), float(t), pump)
                oracle = bisect_equilibrium(float(f), float(t), pump)
                worst = max(worst, abs(produced - oracle) / oracle)
                if produced > pump.threshold_pressure:
                    closed = flow._mfc_load(float(f), float(t)) / pump.nominal_speed
                    assert produced == pytest.approx(closed, rel=1e-12)
                    closed_checked = True
        runtime = time.perf_counter() - t0
        ok = worst < 1e-9 and closed_checked and runtime < 1.0
        record_acceptance(
            "pump/MFC equilibrium vs bisection oracle", ok,
            f"worst rel diff {worst:.2e} over 100 points, runtime {runtime:.2f}s",
        )
        assert worst < 1e-9
        assert closed_checked
        assert runtime < 1.0


class TestRecipeGoldens:
    def test_reference_recipe_structure(self, table_recipe_text, example_recipe_text):
        table = parse_recipe(table_recipe_text)
        example = parse_recipe(example_recipe_text)
        checks = {
            "table segments": len(expand(table)) == 23,
            "table duration": total_duration(table) == 120.0,
            "example segments": len(expand(example)) == 23,
            "example duration": total_duration(example) == 101.0,
        }
        ok = all(checks.values())
        record_acceptance("recipe goldens (23/120 s and 23/101 s)", ok, str(checks))
        assert ok, checks

    def test_budget_arithmetic_is_exact(self, run2, tmp_path):
        from alpsim.service import ExperimentService

        service = ExperimentService({"run2": run2}, ExperimentStore(tmp_path / "data"))
        sid = service.reset_session("run2", 7200.0)["session_id"]
        recipes = [
            "1\tM\t1\t50\t2\n1\tV\t3\t1\t1\n\tV\t3\t0\t8\n",
            "1\tV\t2\t1\t0.3\n\tV\t2\t0\t7.7\n",
            "1\tV\t4\t1\t1\n\tV\t4\t0\t8\n",
        ]
        mirror_used = 0.0
        exact = True
        for recipe in recipes:
            response = service.perform_experiment(sid, recipe)
            mirror_used += response["duration"]
            mirror_remaining = 7200.0 - mirror_used
            exact = exact and (response["time_used"] == mirror_used)
            exact = exact and (response["time_remaining"] == mirror_remaining)
        budget = service.budget(sid)
        exact = exact and budget["used"] == mirror_used
        exact = exact and budget["remaining"] == 7200.0 - mirror_used
        record_acceptance("budget arithmetic exact vs mirror", exact,
                          f"used {budget['used']!r}")
        assert exact


class TestAlienMarket:
    def test_reference_corpus_statistics(self):
        path = os.environ.get(
            "ALPSIM_WORDLIST", str(Path(__file__).parent / "data" / "wordlist.10000")
        )
        if not Path(path).exists():
            record_acceptance(
                "alien market reference corpus statistics", False,
                "canonical word list not available in this environment",
            )
            pytest.fail(
                "The canonical 10k word list is required for this criterion.\n"
                f"Looked at {path}. Fetch it where network is available:\n"
                "  alpsim market fetch-wordlist --dest tests/data/wordlist.10000\n"
                "or set ALPSIM_WORDLIST. The nearest publicly mirrored list\n"
                "(bundled as alpsim/data/wordlist_10k.txt) differs: 3238 vs the\n"
                "required 3248 words containing m or p per 10000."
            )
        words = load_wordlist(path)
        stats = corpus_stats(words)
        z = corpus_stats(words, MarketRule(frozenset("z")))
        checks = {
            "p_reject": abs(stats.p_reject - 0.3248) <= 0.0001,
            "P(p)": round(stats.letter_probability["p"], 4) == 0.1822,
            "P(m)": round(stats.letter_probability["m"], 4) == 0.1761,
            "P(z)": round(z.p_reject, 4) == 0.0129,
        }
        ok = all(checks.values())
        record_acceptance("alien market reference corpus statistics", ok, str(checks))
        assert ok, (checks, stats)

    def test_scoring_rubric_worked_examples(self):
        checks = {
            "pml -> 1.5": score_hypothesis(LetterHypothesis(frozenset("pml"))) == 1.5,
            "pl -> 0.5": score_hypothesis(LetterHypothesis(frozenset("pl"))) == 0.5,
            "mp -> 2.0": score_hypothesis(LetterHypothesis(frozenset("mp"))) == 2.0,
            "xyz -> 0.0": score_hypothesis(LetterHypothesis(frozenset("xyz"))) == 0.0,
        }
        ok = all(checks.values())
        record_acceptance("alien market scoring rubric", ok, str(checks))
        assert ok, checks


class TestDeterminismAndReplay:
    def test_session_replay_byte_for_byte(self, run2, tmp_path):
        from alpsim.service import ExperimentService

        service = ExperimentService({"run2": run2}, ExperimentStore(tmp_path / "data"))
        recipes = [
            "1\tM\t1\t50\t2\n1\tV\t3\t1\t1\n\tV\t3\t0\t8\n",
            "1\tV\t4\t1\t1\n\tV\t4\t0\t8\n",
            "1\tV\t3\t1\t1\n\tV\t3\t0\t8\n",
            "1\tV\t1\t1\t1\n\tV\t1\t0\t8\n",
        ]
        sid = service.reset_session("run2", 7200.0)["session_id"]
        first = [service.perform_experiment(sid, r)["narrative"] for r in recipes]

        replay_sid = service.reset_session("run2", 7200.0)["session_id"]
        stored = [
            service.store.load_record(sid, eid).recipe_text
            for eid in service.store.load_manifest(sid).experiment_ids
        ]
        second = [service.perform_experiment(replay_sid, r)["narrative"] for r in stored]
        ok = all(a.encode() == b.encode() for a, b in zip(first, second))
        record_acceptance("determinism: stored session replays byte-for-byte", ok,
                          f"{len(first)} experiments")
        assert ok
