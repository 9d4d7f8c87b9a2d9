"""Build, propagate and report one scenario; sweeps run points on a process pool."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..blochsu import PAULI, to_bloch
from ..invariant import eigenvalue_constancy_check, invariant_residual
from ..lindblad import assemble_liouvillian, propagate, steady_state, uhlmann_fidelity
from ..synth import lam, threequbit, twolevel
from ..synth.core import Protocol
from ..synth.shapes import SineSquared
from .config import ScenarioConfig

CSV_SCHEMA = "mise-run/1"
SWEEP_SCHEMA = "mise-sweep/1"
OUTPUT_ENV = "MISE_OUTPUT_DIR"
N_RESIDUAL_TIMES = 100

BLOCH_COLUMNS = {
    "two-level": ["rx", "ry", "rz"],
    "lambda": [f"r{k}" for k in range(1, 9)],
    "three-qubit": [f"q{q}_{a}" for q in (1, 2, 3) for a in "xyz"],
}


def output_dir(override: str | Path | None = None) -> Path:
    return Path(override or os.environ.get(OUTPUT_ENV) or "mise-output")


# --- protocol construction -----------------------------------------------

def build_protocol(cfg: ScenarioConfig) -> Protocol:
    """Synthesize (or, for ``reference`` protocols, just lay out) the controls."""
    p, ns = cfg.params, cfg.n_samples
    kw = {"n_samples": ns} if ns else {}
    synthesized = True
    if cfg.system == "two-level":
        if cfg.protocol in ("adiabatic", "reference"):
            proto = twolevel.two_level_adiabatic_protocol(p["omega_c"], p["gamma"], p["n0"],
                                                          p["t_f"], **kw)
            if cfg.protocol == "reference":
                sched = twolevel.two_level_reference_schedule(p["omega_c"], p["gamma"], p["n0"],
                                                              p["t_f"], **kw)
                proto = dataclasses.replace(proto, name="two-level reference", schedule=sched)
                synthesized = False
        elif cfg.protocol == "coherent-I":
            proto = twolevel.coherent_protocol_I(p["omega0"], p["gamma"], p["n0"], p["t_f"],
                                                 mode=cfg.mode, sign=p.get("sign", 1.0),
                                                 control_bound=p.get("control_bound"), **kw)
        else:
            proto = twolevel.coherent_protocol_II(p["omega0"], p["gamma"], p["n0"], p["t_f"],
                                                  mode=cfg.mode,
                                                  control_bound=p.get("control_bound"), **kw)
    elif cfg.system == "lambda":
        common = dict(gamma_d=p["gamma_d"], gamma_dg=p["gamma_dg"])
        if cfg.protocol == "nocoupling":
            phi = SineSquared(p["phi_amplitude"], p["tau"])
            proto = lam.lambda_nocoupling_schedule(p["omega"], p["tau"], p["gamma"], p["n"],
                                                   theta=cfg.theta, phi=phi,
                                                   n_min=p.get("n_min"), **common, **kw).protocol
        else:
            proto = lam.lambda_adiabatic_protocol(p["omega"], p["tau"], p["gamma"],
                                                  gamma_p=p.get("gamma_p"), n=p["n"],
                                                  theta=cfg.theta, **common, **kw)
            if cfg.protocol == "reference":
                sched = lam.adiabatic_reference_schedule(p["omega"], p["tau"], p["n"], cfg.theta,
                                                         with_coupling=cfg.with_coupling, **kw)
                proto = dataclasses.replace(proto, name="lambda reference", schedule=sched)
                synthesized = False
    else:
        proto = threequbit.three_qubit_protocol(p["a0"], p["gamma"], p["tau"], p["rx0"], **kw)
    proto.meta["synthesized"] = synthesized
    return proto


# --- observables ---------------------------------------------------------

def _reduced_bloch(rho8):
    t = rho8.reshape(2, 2, 2, 2, 2, 2)
    reds = [np.einsum("aijbij->ab", t), np.einsum("iajibj->ab", t), np.einsum("ijaijb->ab", t)]
    return [float(np.real(np.trace(r @ s))) for r in reds for s in PAULI]


def bloch_row(system, rho):
    if system == "three-qubit":
        return _reduced_bloch(rho)
    return list(to_bloch(rho))


def reference_states(cfg, proto, ts):
    if cfg.system == "two-level" and cfg.protocol.startswith("coherent"):
        return [twolevel.reference_state(proto, t) for t in ts]
    return [proto.trajectory.state(t) for t in ts]


def residual_times(proto: Protocol) -> np.ndarray:
    hi = proto.schedule.tail[0] if proto.schedule.tail else proto.t_f
    return np.linspace(0.0, hi, N_RESIDUAL_TIMES + 2)[1:-1]


def certify(proto: Protocol) -> dict:
    """Invariant residual and eigenvalue drift over the synthesized part of the protocol."""
    ts = residual_times(proto)
    lf = proto.liouvillian_fn()
    res = [invariant_residual(lf, proto.trajectory, 1.0, t, domain=(0.0, proto.t_f)) for t in ts]
    return {"max_invariant_residual": float(max(res)),
            "eigenvalue_drift": eigenvalue_constancy_check(lf, proto.trajectory, 1.0, ts)}


# --- reports -------------------------------------------------------------

@dataclass
class RunReport:
    config: ScenarioConfig
    columns: list
    rows: np.ndarray
    summary: dict
    csv_path: Path | None = None
    svg_path: Path | None = None
    protocol: Protocol | None = field(default=None, repr=False)

    def column(self, name):
        return self.rows[:, self.columns.index(name)]


def format_value(v) -> str:
    return repr(float(v))


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: ScenarioConfig, out_dir: str | Path | None = None, write: bool = True,
        svg: bool | None = None, stem: str | None = None) -> RunReport:
    """Synthesize, propagate and tabulate one scenario."""
    start = time.perf_counter()
    proto = build_protocol(cfg)
    ts = np.linspace(0.0, proto.t_f, cfg.n_out)
    res = propagate(proto.model, proto.schedule, proto.rho0, (0.0, proto.t_f),
                    rtol=cfg.rtol, atol=cfg.atol, t_eval=ts)
    dim = proto.model.dim
    target_index = int(np.argmax(np.real(np.diag(proto.target))))
    refs = reference_states(cfg, proto, ts)
    names = list(proto.schedule.names)
    columns = (["t"] + [f"P{k}" for k in range(dim)] + BLOCH_COLUMNS[cfg.system] + names
               + ["fidelity_target", "fidelity_reference", "trace", "min_eigenvalue"])
    rows = []
    for t, rho, ref in zip(res.times, res.states, refs):
        herm = 0.5 * (rho + rho.conj().T)
        rows.append([t, *np.real(np.diag(rho)), *bloch_row(cfg.system, rho),
                     *proto.schedule.vector_at(t),
                     uhlmann_fidelity(rho, proto.target), uhlmann_fidelity(rho, ref),
                     float(np.real(np.trace(rho))), float(np.linalg.eigvalsh(herm).min())])
    rows = np.array(rows, dtype=float)
    final_record = proto.schedule.boundary["t_f"]
    ss = steady_state(assemble_liouvillian(proto.model, final_record))
    p_final = float(rows[-1, 1 + target_index])
    p_ss = float(np.real(ss[target_index, target_index]))
    summary = {
        "scenario": cfg.name, "csv_schema": CSV_SCHEMA,
        "system": cfg.system, "protocol": cfg.protocol,
        "final_fidelity": float(rows[-1, columns.index("fidelity_target")]),
        "final_target_population": p_final,
        "target_index": target_index,
        "min_fidelity_reference": float(rows[:, columns.index("fidelity_reference")].min()),
        "steady_state_target_population": p_ss,
        "deviation_from_steady_state": abs(p_final - p_ss),
        "trace_drift": res.trace_drift, "min_eigenvalue": res.min_eigenvalue,
        "clamp_fraction": proto.schedule.clamp_fraction,
        "unphysical_fraction": float(np.mean(np.any(proto.schedule.unphysical, axis=1))),
        "handover_time": proto.schedule.meta.get("handover_time"),
        "boundary_defect": proto.schedule.boundary_defect(proto.reference),
        "steps": res.n_accepted,
    }
    if proto.meta.get("synthesized"):
        summary.update(certify(proto))
    else:
        summary.update({"max_invariant_residual": None, "eigenvalue_drift": None})
    summary["wall_time"] = time.perf_counter() - start
    report = RunReport(cfg, columns, rows, summary, protocol=proto)
    if write:
        base = output_dir(out_dir)
        stem = stem or cfg.name
        report.csv_path = base / f"{stem}.csv"
        atomic_write(report.csv_path, csv_text(columns, rows))
        atomic_write(base / f"{stem}.summary.json", json.dumps(summary, indent=2, sort_keys=True))
        if cfg.svg if svg is None else svg:
            from .plotting import plot_run_csv
            report.svg_path = base / f"{stem}.svg"
            plot_run_csv(report.csv_path, report.svg_path, names, title=cfg.name)
    return report


# --- sweeps --------------------------------------------------------------

SWEEP_COLUMNS = ["value", "status", "final_target_population", "final_fidelity",
                 "steady_state_target_population", "deviation_from_steady_state",
                 "clamp_fraction", "error"]


def _sweep_point(args):
    cfg, param, value, out_dir, write = args
    stem = f"{cfg.name}__{param}={value:.6g}"
    try:
        point = cfg.with_param(param, value)
        s = run(point, out_dir=out_dir, write=write, svg=False, stem=stem).summary
        return [value, "ok", s["final_target_population"], s["final_fidelity"],
                s["steady_state_target_population"], s["deviation_from_steady_state"],
                s["clamp_fraction"], ""]
    except Exception as exc:  # recorded, the sweep goes on
        return [value, "error", None, None, None, None, None, f"{type(exc).__name__}: {exc}"]


@dataclass
class SweepReport:
    config: ScenarioConfig
    parameter: str
    rows: list
    csv_path: Path | None = None

    @property
    def failures(self):
        return [r for r in self.rows if r[1] != "ok"]

    def column(self, name):
        k = SWEEP_COLUMNS.index(name)
        return [r[k] for r in self.rows]


def sweep(cfg: ScenarioConfig, param: str, values, out_dir=None, write: bool = True,
          workers: int | None = None) -> SweepReport:
    """One run per value on a worker pool; failures are recorded per point."""
    cfg.parameter_kind(param)  # raises ConfigError for unknown names
    values = [float(v) for v in values]
    jobs = [(cfg, param, v, out_dir, write) for v in values]
    if workers == 1 or len(jobs) == 1:
        rows = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    report = SweepReport(cfg, param, rows)
    if write:
        path = output_dir(out_dir) / f"{cfg.name}__sweep_{param}.csv"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow(["" if v is None else (format_value(v) if isinstance(v, float) else v)
                        for v in r])
        atomic_write(path, buf.getvalue())
        report.csv_path = path
    return report
