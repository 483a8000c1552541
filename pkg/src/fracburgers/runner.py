"""Scenario pipeline: solve, run checks, write CSV/JSON/SVG artifacts."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import verifier
from .grid import Field
from .solver import Trajectory, solve

CSV_TAG = "# fracburgers-csv v1"


# ---------------------------------------------------------------- checks

def _floats(x):
    return [float("inf") if str(v) == "inf" else float(v) for v in (x if isinstance(x, list) else [x])]


def _two_sided(scn, traj, p):
    eps = p.get("eps")
    return [verifier.check_two_sided(traj, scn.solver, float(p.get("floor", 1e-8)),
                                     eps_list=None if eps is None else _floats(eps))]


def _small_time(scn, traj, p):
    return [verifier.check_small_time(traj, scn.solver, tuple(_floats(p.get("times", list(verifier.SMALL_TIMES)))))]


def _large_x(scn, traj, p):
    win = p.get("t_window")
    return [verifier.check_large_x(traj, scn.solver, _floats(p.get("radii", [2.5, 5, 10, 20])),
                                   None if win is None else tuple(_floats(win)))]


def _large_time(scn, traj, p):
    g = p.get("gamma")
    return [verifier.check_large_time_rate(traj, scn.solver, None if g is None else float(g),
                                           tuple(_floats(p.get("t_range", [1, 100]))))]


def _lp(scn, traj, p):
    return [verifier.check_lp_decay(traj, scn.solver, tuple(_floats(p.get("p", [1, 2, "inf"]))))]


def _ustar(scn, traj, p):
    return [verifier.check_ustar_vanishing(traj, scn.solver, _floats(p.get("radii", [2, 4, 8, 16])),
                                           tuple(_floats(p.get("t_window", [1e-4, 1e-1]))))]


def _lemma(scn, traj, p):
    f = scn.solver.initial_field()
    return [verifier.check_lemma_identity(b, f, float(p.get("t", 1.0)), scn.solver)
            for b in _floats(p.get("beta", [0.25, 0.5, 0.75]))]


def _convolution(scn, traj, p):
    return [verifier.check_convolution_inequality(b, scn.solver.alpha,
                                                  _floats(p.get("v", [0.1, 0.5, 0.9, 0.99])))
            for b in _floats(p.get("beta", 0.5))]


def _kernel(scn, traj, p):
    return verifier.check_kernel(scn.solver.params)


# name -> (function, needs a trajectory)
CHECKS = {
    "two-sided": (_two_sided, True),
    "small-time": (_small_time, True),
    "large-x": (_large_x, True),
    "large-time-rate": (_large_time, True),
    "lp-decay": (_lp, True),
    "ustar-vanishing": (_ustar, True),
    "lemma-identity": (_lemma, False),
    "convolution-inequality": (_convolution, False),
    "kernel": (_kernel, False),
}


# ------------------------------------------------------------------- I/O

def content_hash(text: str) -> str:
    """Git blob hash of the text."""
    data = text.encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def csv_text(columns, rows) -> str:
    lines = [CSV_TAG, ",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, columns, rows):
    atomic_write(path, csv_text(columns, rows))


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != CSV_TAG:
            raise ValueError(f"{path}: missing header {CSV_TAG!r}")
        columns = fh.readline().rstrip("\n").split(",")
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    return columns, np.array(rows).reshape(-1, len(columns))


def field_rows(snap):
    pts = np.stack([c.ravel() for c in snap.grid.coords], axis=-1)
    return [(snap.time, *x, u) for x, u in zip(pts, snap.values.ravel())]


def field_columns(dim):
    return ["t", "x", "u"] if dim == 1 else ["t"] + [f"x{i + 1}" for i in range(dim)] + ["u"]


LEDGER_COLUMNS = ["step", "t", "dt", "mass", "min_u", "max_u"]


def write_trajectory(out: Path, traj: Trajectory):
    """fields/field_000.csv holds u0, then one file per save time; plus ledger.csv."""
    cols = field_columns(traj.u0.grid.dim)
    for k, snap in enumerate([traj.u0] + traj.snapshots):
        write_csv(out / "fields" / f"field_{k:03d}.csv", cols, field_rows(snap))
    write_csv(out / "ledger.csv", LEDGER_COLUMNS,
              [[r[c] for c in LEDGER_COLUMNS] for r in traj.ledger])


def load_trajectory(out: Path, cfg) -> Trajectory:
    """Rebuild a trajectory from the field CSVs written for the same grid."""
    files = sorted((Path(out) / "fields").glob("field_*.csv"))
    if not files:
        raise FileNotFoundError(f"no field CSVs under {Path(out) / 'fields'}")
    g = cfg.grid
    snaps = []
    for f in files:
        _, data = read_csv(f)
        if data.shape[0] != int(np.prod(g.shape)):
            raise ValueError(f"{f} does not match the scenario grid")
        snaps.append(Field(g, data[:, -1].reshape(g.shape), float(data[0, 0])))
    _, led = read_csv(Path(out) / "ledger.csv")
    ledger = [dict(zip(LEDGER_COLUMNS, row)) for row in led]
    return Trajectory(snaps[1:], ledger, snaps[0], {})


# ----------------------------------------------------------------- plots

def render_svg(csv_path, svg_path=None):
    """Line plot of a sweep CSV (first column on x, the rest on y), deterministic SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "fracburgers"
    cols, data = read_csv(csv_path)
    svg_path = Path(svg_path or Path(csv_path).with_suffix(".svg"))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    x = data[:, 0]
    for j in range(1, data.shape[1]):
        ax.plot(x, data[:, j], marker="o", ms=3, label=cols[j])
    pos = data.size and np.all(data > 0)
    if pos:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(cols[0])
    ax.legend(fontsize=7)
    fig.tight_layout()
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = svg_path.with_name(f".{svg_path.name}.tmp")
    fig.savefig(tmp, format="svg", metadata={"Date": None})
    plt.close(fig)
    os.replace(tmp, svg_path)
    return svg_path


def render_report(out) -> list[Path]:
    """Regenerate every SVG from the sweep CSVs under out/checks."""
    out = Path(out)
    csvs = sorted((out / "checks").glob("*.csv"))
    if not csvs:
        raise FileNotFoundError(f"no check CSVs under {out / 'checks'}")
    return [render_svg(p) for p in csvs]


# -------------------------------------------------------------- pipeline

@dataclass
class RunReport:
    scenario: str
    config_hash: str
    timings: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"scenario": self.scenario, "config_hash": self.config_hash,
                "timings": self.timings, "diagnostics": verifier.report._plain(self.diagnostics),
                "pass": self.passed, "checks": [c.to_json() for c in self.checks]}


def _slug(name):
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def run_checks(scn, traj, names, out: Path | None, plots=True):
    results = []
    for name in names:
        fn, _ = CHECKS[name]
        found = fn(scn, traj, scn.check_params.get(name, {}))
        for k, res in enumerate(found):
            tag = res.check if len(found) == 1 or res.check != name else f"{res.check}-{k}"
            if out is not None:
                base = out / "checks"
                for tname, (cols, rows) in res.tables.items():
                    p = base / f"{_slug(tag)}.{tname}.csv"
                    write_csv(p, cols, rows)
                    res.artifact_paths.append(str(p.relative_to(out)))
                    if plots:
                        res.artifact_paths.append(str(render_svg(p).relative_to(out)))
                atomic_write(base / f"{_slug(tag)}.json", json.dumps(res.to_json(), indent=2) + "\n")
            results.append(res)
    return results


def run(scn, out=None, checks=None, solve_only=False, existing: Path | None = None,
        plots=True) -> RunReport:
    out = None if out is None else Path(out)
    names = list(scn.checks if checks is None else checks)
    report = RunReport(scn.name, content_hash(scn.text()))
    if out is not None:
        atomic_write(out / "scenario.cfg", scn.text())
    traj = None
    need = solve_only or any(CHECKS[n][1] for n in names)
    if need:
        t0 = time.perf_counter()
        traj = load_trajectory(existing, scn.solver) if existing is not None else solve(scn.solver)
        report.timings["solve"] = time.perf_counter() - t0
        report.diagnostics = dict(traj.diagnostics)
        if out is not None and existing is None:
            write_trajectory(out, traj)
    if not solve_only:
        t0 = time.perf_counter()
        report.checks = run_checks(scn, traj, names, out, plots)
        report.timings["verify"] = time.perf_counter() - t0
    if out is not None:
        atomic_write(out / "report.json", json.dumps(report.to_json(), indent=2) + "\n")
    return report
