"""
Seeded experiment runners behind the command-line interface.

Seed policy: a run with master seed ``s`` uses ``SeedSequence(s)`` directly
for ``simulate``; sweep point ``i`` uses ``SeedSequence(s, spawn_key=(i,))``
and annealing step ``i`` the ``i``-th spawned child. Results therefore do
not depend on how sweep points are distributed over worker processes.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analog import delta_current
from .anneal import AnnealSchedule, IsingProblem, anneal, relaxation_schedule
from .config import ExperimentSpec, build_network, default_sample_dt, dump_spec, resolve_devices
from .errors import BreakdownError, ConfigError, UndefinedCorrelationError
from .markov import (
    JOINT_LABELS,
    CoupledPairModel,
    Generator4,
    joint_dwell_times,
    predict_correlation,
    slowest_eigenvalue,
    spectrum,
    steady_state,
)
from .simnet import pair_generator, sample_traces, simulate, write_events_csv, write_sampled_csv
from .stats import (
    event_joint_dwell_stats,
    event_occupancy,
    joint_dwell_stats,
    pearson,
    write_dwell_csv,
    write_pearson_csv,
)

__all__ = ["run_simulate", "run_sweep", "run_analyze", "run_anneal", "point_seed"]


def point_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(index,))


def _clean(obj):
    """Make floats JSON-safe (NaN/inf -> None) recursively."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _atomic(path: Path, write):
    """Call ``write(tmp_path)`` then move the file into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        write(Path(tmp))
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _write_json(path: Path, payload) -> None:
    text = json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"
    _atomic(path, lambda p: p.write_text(text, encoding="utf-8"))


def _dwell_dict(summary):
    return {
        lab: {"mean_dwell_s": float(m), "stderr_s": float(e), "count": int(c)}
        for lab, m, e, c in zip(JOINT_LABELS, summary.mean_dwell, summary.std_err, summary.counts)
    }


def _pair_stats(samples, dt):
    out = {}
    try:
        c = pearson(samples[:, 0], samples[:, 1])
        out["pearson"] = {"rho": c.rho, "stderr": c.std_err, "n": c.n_samples}
    except UndefinedCorrelationError:
        out["pearson"] = {"rho": None, "stderr": None, "n": int(samples.shape[0])}
    out["joint_dwell"] = joint_dwell_stats(samples[:, 0], samples[:, 1], dt)
    return out


def _summarize(traces, spec: ExperimentSpec, dt, times, samples, valid=True):
    n = len(traces)
    summary = {
        "valid": valid,
        "seed": spec.seed,
        "duration_s": spec.duration_s,
        "sample_dt_s": dt,
        "n_samples": int(samples.shape[0]),
        "n_events": [int(tr.times.size - 1) for tr in traces],
    }
    if min(tr.t_end for tr in traces) <= 0 or samples.shape[0] < 2:
        # aborted before anything could be measured
        return summary
    occ = event_occupancy(traces, n_batches=min(50, max(2, samples.shape[0] // 2)))
    summary.update({
        "occupancy": {format(i, f"0{n}b"): float(p) for i, p in enumerate(occ.p)},
        "occupancy_stderr": {format(i, f"0{n}b"): float(e) for i, e in enumerate(occ.std_err)},
        "fraction_ap": [float(samples[:, d].mean()) for d in range(n)],
    })
    if n >= 2:
        rho = np.full((n, n), np.nan)
        for a in range(n):
            for b in range(n):
                try:
                    rho[a, b] = pearson(samples[:, a], samples[:, b]).rho
                except UndefinedCorrelationError:
                    pass
        summary["pearson_matrix"] = rho
    if n == 2:
        pair = _pair_stats(samples, dt)
        summary["pearson"] = pair["pearson"]
        summary["joint_dwell_sampled"] = _dwell_dict(pair["joint_dwell"])
        summary["joint_dwell_events"] = _dwell_dict(event_joint_dwell_stats(traces))
    return summary


def run_simulate(spec: ExperimentSpec, out_dir=None) -> dict:
    """Simulate once; writes events.csv, sampled.csv, summary.json and spec.json."""
    out = Path(out_dir or spec.out_dir)
    net = build_network(spec)
    dt = spec.sample_dt_s or default_sample_dt(net.devices)
    _atomic(out / "spec.json", lambda p: p.write_text(dump_spec(spec), encoding="utf-8"))
    try:
        traces = simulate(net, spec.duration_s, seed=np.random.SeedSequence(spec.seed))
        valid = True
        error = None
    except BreakdownError as exc:
        traces = exc.partial_traces
        valid = False
        error = exc
    times, samples = sample_traces(traces, dt)
    _atomic(out / "events.csv", lambda p: write_events_csv(p, traces))
    _atomic(out / "sampled.csv", lambda p: write_sampled_csv(p, times, samples))
    summary = _summarize(traces, spec, dt, times, samples, valid=valid)
    if error is not None:
        summary["error"] = str(error)
    _write_json(out / "summary.json", summary)
    if error is not None:
        raise error
    return summary


def _sweep_point(args):
    spec_dict, index, gain = args
    spec = ExperimentSpec(**spec_dict)
    net = build_network(spec, gain)
    dt = spec.sample_dt_s or default_sample_dt(net.devices)
    try:
        traces = simulate(net, spec.duration_s, seed=point_seed(spec.seed, index))
    except BreakdownError as exc:
        return {"index": index, "gain": gain, "error": str(exc)}
    _, samples = sample_traces(traces, dt)
    pair = _pair_stats(samples[:, :2], dt)
    occ = event_occupancy(traces)
    return {
        "index": index,
        "gain": gain,
        "pearson": pair["pearson"],
        "dwell": pair["joint_dwell"].as_rows(),
        "occupancy": occ.p.tolist(),
    }


def run_sweep(spec: ExperimentSpec, out_dir=None, workers: int = 1, fmt: str = "csv") -> dict:
    """Simulate every gain in ``sweep_gains`` and tabulate correlation and dwell times."""
    if not spec.sweep_gains:
        raise ConfigError("sweep requires 'sweep_gains'")
    if len(resolve_devices(spec)) < 2:
        raise ConfigError("sweep needs at least two devices")
    out = Path(out_dir or spec.out_dir)
    jobs = [(spec.to_dict(), i, float(g)) for i, g in enumerate(spec.sweep_gains)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    results.sort(key=lambda r: r["index"])
    failed = [r for r in results if "error" in r]
    if failed:
        raise BreakdownError(f"sweep point gain={failed[0]['gain']}: {failed[0]['error']}")
    pearson_rows = [
        (r["gain"], r["pearson"]["rho"], r["pearson"]["stderr"], r["pearson"]["n"]) for r in results
    ]
    dwell_rows = [(r["gain"], *row) for r in results for row in r["dwell"]]
    _atomic(out / "spec.json", lambda p: p.write_text(dump_spec(spec), encoding="utf-8"))
    if fmt == "csv":
        _atomic(out / "sweep_pearson.csv", lambda p: write_pearson_csv(p, pearson_rows))
        _atomic(out / "sweep_dwell.csv", lambda p: write_dwell_csv(p, dwell_rows))
    else:
        _write_json(out / "sweep_pearson.json", [
            {"gain": g, "pearson": rho, "stderr": e, "n": n} for g, rho, e, n in pearson_rows
        ])
        _write_json(out / "sweep_dwell.json", [
            {"gain": g, "state": s, "mean_dwell_s": m, "stderr_s": e, "count": c}
            for g, s, m, e, c in dwell_rows
        ])
    summary = {
        "seed": spec.seed,
        "duration_s": spec.duration_s,
        "gains": [r["gain"] for r in results],
        "pearson": [r["pearson"]["rho"] for r in results],
        "occupancy": [r["occupancy"] for r in results],
    }
    _write_json(out / "sweep_summary.json", summary)
    return summary


def _analyze_point(spec: ExperimentSpec, gain: float) -> dict:
    net = build_network(spec, gain)
    if net.n != 2:
        raise ConfigError("analyze supports exactly two devices")
    q = pair_generator(net)
    gen = Generator4(q)
    g = []
    for d in range(2):
        incoming = net.incoming(d)
        di = sum(delta_current(c) for _, c in incoming)
        g.append(math.exp(net.devices[d].slope_b * di))
    polarities = {c.polarity for d in range(2) for _, c in net.incoming(d)}
    lam_closed = None
    if len(polarities) == 1 and math.isclose(g[0], g[1], rel_tol=1e-12):
        taus = sorted((dev.tau_balance for dev in net.devices), reverse=True)
        model = CoupledPairModel.symmetric(taus[0], g[0], r=taus[0] / taus[1],
                                           polarity=polarities.pop())
        lam_closed = slowest_eigenvalue(model)
    ev = spectrum(gen)
    p = steady_state(gen)
    try:
        rho = predict_correlation(gen)
    except UndefinedCorrelationError:
        rho = None
    return {
        "gain": gain,
        "g": g,
        "generator": q.tolist(),
        "steady_state": p.tolist(),
        "lambda1": lam_closed,
        "lambda1_numeric": float(ev[1].real),
        "eigenvalues_real": ev.real.tolist(),
        "eigenvalues_imag": ev.imag.tolist(),
        "joint_dwell_s": joint_dwell_times(gen).tolist(),
        "rho": rho,
    }


def run_analyze(spec: ExperimentSpec, out_dir=None, fmt: str = "csv") -> dict:
    """Markov-model predictions at each gain (``sweep_gains`` or ``gain``)."""
    out = Path(out_dir or spec.out_dir)
    gains = spec.sweep_gains or [spec.gain]
    rows = [_analyze_point(spec, float(g)) for g in gains]
    payload = {"labels": list(JOINT_LABELS), "points": rows}
    _write_json(out / "analyze.json", payload)
    if fmt == "csv":
        def write_table(p):
            with open(p, "w", encoding="utf-8", newline="") as fh:
                fh.write("gain,g1,g2,lambda1,lambda1_numeric,rho,"
                         + ",".join(f"p{s}" for s in JOINT_LABELS) + ","
                         + ",".join(f"dwell{s}_s" for s in JOINT_LABELS) + "\n")
                for r in rows:
                    vals = [r["gain"], *r["g"], r["lambda1"], r["lambda1_numeric"], r["rho"],
                            *r["steady_state"], *r["joint_dwell_s"]]
                    fh.write(",".join("" if v is None else repr(float(v)) for v in vals) + "\n")

        def write_spectra(p):
            with open(p, "w", encoding="utf-8", newline="") as fh:
                fh.write("gain," + ",".join(f"re{i},im{i}" for i in range(4)) + "\n")
                for r in rows:
                    parts = [repr(r["gain"])]
                    for re, im in zip(r["eigenvalues_real"], r["eigenvalues_imag"]):
                        parts += [repr(re), repr(im)]
                    fh.write(",".join(parts) + "\n")

        _atomic(out / "analyze.csv", write_table)
        _atomic(out / "spectra.csv", write_spectra)
    return payload


def run_anneal(spec: ExperimentSpec, out_dir=None) -> dict:
    """Anneal per the ``anneal`` block; writes anneal_report.json and energy.csv."""
    if not spec.anneal:
        raise ConfigError("anneal requires an 'anneal' block")
    out = Path(out_dir or spec.out_dir)
    block = spec.anneal
    devices = resolve_devices(spec)
    j = block.get("j")
    if j is None:
        if len(devices) != 2:
            raise ConfigError("anneal 'j' is required for more than two devices")
        problem = IsingProblem.pair(-1.0)
    else:
        problem = IsingProblem(np.asarray(j, dtype=float))
    if "steps" in block:
        schedule = AnnealSchedule(tuple((s["duration_s"], s["gain"]) for s in block["steps"]))
    elif "gains" in block and len(devices) == 2:
        schedule = relaxation_schedule(
            devices[0], devices[1], block["gains"],
            multiple=float(block.get("relaxation_multiple", 100.0)),
            j12=float(problem.j[0, 1]), delay=spec.delay_s,
        )
    else:
        raise ConfigError("anneal block needs 'steps' (or 'gains' for a pair)")
    template = build_network(spec, 0.0)
    report = anneal(problem, template, schedule, seed=spec.seed)
    _atomic(out / "spec.json", lambda p: p.write_text(dump_spec(spec), encoding="utf-8"))
    payload = report.to_dict()
    _write_json(out / "anneal_report.json", payload)
    _atomic(out / "energy.csv", report.write_energy_csv)
    return payload
