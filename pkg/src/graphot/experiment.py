"""Experiment configuration, end-to-end pipelines and report files."""

from __future__ import annotations

import contextlib
import csv
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .born import as_norm, forward_bound, series_constants, vnorm
from .errors import GraphotError, ValidationError
from .forward import GreenTable, Measurement, background_green, robin_to_dirichlet, scattering_data
from .generators import PhantomSpec, lattice_graph, make_phantom, path_graph, random_graph
from .graph import Graph, ProblemParams, build_graph
from .inverse import MAX_TERMS, diagnose, inverse_series, k1_matrix
from .structured import (
    invertibility_report,
    modified_inverse_series,
    multifreq_problem,
    structure_map,
)

DATA_HEADER = ("r", "s", "lambda", "background", "phi")


def load_graph(path) -> Graph:
    with open(path) as fh:
        return build_graph(json.load(fh))


def save_graph(g: Graph, path) -> None:
    with open(path, "w") as fh:
        json.dump(g.to_spec(), fh, indent=1)


def graph_from_config(spec: Mapping, base_dir: Path | None = None) -> Graph:
    """Graph from a file reference, a generator description or an inline description."""
    spec = dict(spec)
    if "file" in spec:
        path = Path(spec["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ValidationError(f"graph file {str(path)!r} does not exist")
        return load_graph(path)
    gen = spec.pop("generator", None)
    if gen is None:
        return build_graph(spec)
    if gen == "lattice":
        return lattice_graph(int(spec.get("rows", 12)), int(spec.get("cols", spec.get("rows", 12))),
                             corners=bool(spec.get("corners", False)))
    if gen == "path":
        return path_graph(int(spec.get("n", 10)), far_boundary=bool(spec.get("far_boundary", False)))
    if gen == "random":
        return random_graph(int(spec.get("n", 8)), spec.get("seed", 0))
    raise ValidationError(f"unknown graph generator {gen!r}")


@dataclass
class ExperimentConfig:
    graph: dict
    alpha0: float = 1.0
    t: float = 0.0
    alphas: list | None = None
    phantom: dict | None = None
    structure: dict | None = None
    p: Any = 2
    lambda_reg: float = 0.0
    terms: int = 5
    out: str = "out"
    seed: int | None = 0
    export_green: bool = False
    base_dir: str | None = field(default=None, repr=False)

    def __post_init__(self):
        if not isinstance(self.graph, Mapping):
            raise ValidationError("'graph' must be an object")
        self.p = as_norm(self.p)
        ProblemParams(alpha0=float(self.alpha0), t=float(self.t))
        if not 1 <= int(self.terms) <= MAX_TERMS:
            raise ValidationError(f"terms must lie in 1..{MAX_TERMS}")
        if self.lambda_reg < 0:
            raise ValidationError("lambda must be non-negative")
        if self.alphas is not None:
            if not self.alphas or any(float(a) <= 0 for a in self.alphas):
                raise ValidationError("alphas must be a non-empty list of positive numbers")
        if "file" in self.graph:
            path = Path(self.graph["file"])
            if self.base_dir and not path.is_absolute():
                path = Path(self.base_dir) / path
            if not path.exists():
                raise ValidationError(f"graph file {str(path)!r} does not exist")

    @classmethod
    def from_dict(cls, d: Mapping, base_dir=None) -> "ExperimentConfig":
        d = dict(d)
        if "lambda" in d:
            d["lambda_reg"] = d.pop("lambda")
        names = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(d) - names
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        if "graph" not in d:
            raise ValidationError("config needs a 'graph' entry")
        return cls(**d, base_dir=None if base_dir is None else str(base_dir))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            with open(path) as fh:
                d = json.load(fh)
        except FileNotFoundError:
            raise ValidationError(f"config file {str(path)!r} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from None
        return cls.from_dict(d, base_dir=path.parent)

    def override(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(alpha0=float(self.alpha0), t=float(self.t))


@contextlib.contextmanager
def stage(name: str):
    """Prefix errors raised inside a pipeline stage with the stage name."""
    try:
        yield
    except GraphotError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def _fmt(x: float) -> str:
    return repr(float(x))


def write_measurement_csv(path, m: Measurement) -> None:
    phi = scattering_data(m)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATA_HEADER)
        k = 0
        for i, r in enumerate(m.receivers):
            for j, s in enumerate(m.sources):
                w.writerow([r, s, _fmt(m.lam[i, j]), _fmt(m.background[i, j]), _fmt(phi[k])])
                k += 1


def read_measurement_csv(path, g: Graph | None = None) -> Measurement:
    """Read a data file written by :func:`write_measurement_csv`.

    With a graph, rows are reordered to the graph's receiver-major layout and
    missing pairs raise.
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or tuple(rows[0].keys()) != DATA_HEADER:
        raise ValidationError(f"{path}: expected header {','.join(DATA_HEADER)}")
    table = {(row["r"], row["s"]): row for row in rows}
    if g is None:
        receivers = tuple(dict.fromkeys(row["r"] for row in rows))
        sources = tuple(dict.fromkeys(row["s"] for row in rows))
    else:
        receivers, sources = g.receivers, g.sources
    lam = np.zeros((len(receivers), len(sources)))
    bg = np.zeros_like(lam)
    for i, r in enumerate(receivers):
        for j, s in enumerate(sources):
            if (r, s) not in table:
                raise ValidationError(f"{path}: no data for receiver {r!r}, source {s!r}")
            lam[i, j] = float(table[(r, s)]["lambda"])
            bg[i, j] = float(table[(r, s)]["background"])
    return Measurement(receivers=tuple(receivers), sources=tuple(sources), lam=lam, background=bg)


def write_green_csv(path, G0: GreenTable) -> None:
    ids = G0.graph.interior + G0.graph.boundary
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("row", "col", "value"))
        for i, a in enumerate(ids):
            for j, b in enumerate(ids):
                w.writerow([a, b, _fmt(G0.G0[i, j])])


def write_reconstruction_csv(path, vertex_ids, partial_sums, eta_true=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["vertex_id"] + (["eta_true"] if eta_true is not None else [])
        head += [f"eta_hat_{k + 1}" for k in range(len(partial_sums))]
        w.writerow(head)
        for i, v in enumerate(vertex_ids):
            row = [v] + ([_fmt(eta_true[i])] if eta_true is not None else [])
            row += [_fmt(s[i]) for s in partial_sums]
            w.writerow(row)


def write_long_csv(path, vertex_ids, partial_sums) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("term", "vertex", "value"))
        for k, s in enumerate(partial_sums, start=1):
            for i, v in enumerate(vertex_ids):
                w.writerow([k, v, _fmt(s[i])])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if np.isnan(x):
            return None
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _phantom(cfg: ExperimentConfig, g: Graph) -> np.ndarray | None:
    if cfg.phantom is None:
        return None
    spec = dict(cfg.phantom)
    spec.setdefault("seed", cfg.seed)
    return make_phantom(PhantomSpec.from_dict(spec), g)


def _relative_errors(partial_sums, eta, p):
    ref = vnorm(eta, p)
    if ref == 0:
        return None
    return [vnorm(s - eta, p) / ref for s in partial_sums]


def run_experiment(cfg: ExperimentConfig, *, data_file=None) -> dict:
    """Simulate (or read) data, reconstruct and write the report files.

    Writes ``data.csv``, ``reconstruction.csv``, ``terms_long.csv`` and
    ``diagnostics.json`` into ``cfg.out`` (plus ``green.csv`` when
    ``export_green`` is set) and returns the diagnostics dictionary with the
    written paths under ``"files"``.
    """
    if cfg.alphas is not None:
        return run_multifreq(cfg, data_file=data_file)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with stage("graph"):
        g = graph_from_config(cfg.graph, Path(cfg.base_dir) if cfg.base_dir else None)
        params = cfg.params
    with stage("phantom"):
        eta = _phantom(cfg, g)
    with stage("forward"):
        G0 = background_green(g, params)
        if data_file is not None:
            meas = read_measurement_csv(data_file, g)
        elif eta is not None:
            meas = robin_to_dirichlet(g, params, eta)
        else:
            raise ValidationError("need a phantom or a data file")
        phi = scattering_data(meas)
    with stage("reconstruct"):
        if cfg.structure:
            F = structure_map(cfg.structure["kind"], cfg.structure.get("params", {}), g)
            res = modified_inverse_series(phi, G0, F, cfg.lambda_reg, int(cfg.terms), cfg.p)
            recon = res.mapped_partial_sums
        else:
            res = inverse_series(phi, G0, cfg.lambda_reg, int(cfg.terms), cfg.p)
            recon = res.partial_sums
    with stage("diagnose"):
        diag = diagnose(G0, cfg.p, phi)
        inv = invertibility_report(k1_matrix(G0))
    files = {
        "data": out / "data.csv",
        "reconstruction": out / "reconstruction.csv",
        "long": out / "terms_long.csv",
        "diagnostics": out / "diagnostics.json",
    }
    write_measurement_csv(files["data"], meas)
    write_reconstruction_csv(files["reconstruction"], g.interior, recon, eta)
    write_long_csv(files["long"], g.interior, recon)
    if cfg.export_green:
        files["green"] = out / "green.csv"
        write_green_csv(files["green"], G0)
    consts = series_constants(G0, cfg.p)
    report = {
        "graph": {"n_interior": g.n_interior, "n_boundary": g.n_boundary,
                  "n_sources": len(g.sources), "n_receivers": len(g.receivers)},
        "params": {"alpha0": params.alpha0, "t": params.t, "p": cfg.p, "lambda": cfg.lambda_reg,
                   "terms": int(cfg.terms)},
        "constants": consts.to_dict(),
        "inverse": diag.to_dict(),
        "invertibility": inv.to_dict(),
        "term_norms": res.term_norms,
        "trend": res.trend,
        "relative_errors": None if eta is None else _relative_errors(recon, eta, cfg.p),
        "tail_bound_at_N": _forward_tail(consts, eta, cfg),
    }
    write_json(files["diagnostics"], report)
    report["files"] = {k: str(v) for k, v in files.items()}
    return report


def _forward_tail(consts, eta, cfg):
    if eta is None:
        return None
    return forward_bound(consts, vnorm(eta, cfg.p), int(cfg.terms))


def _copy_tag(v: str, i: int) -> str:
    return f"{v}@{i + 1}"


def write_multifreq_csv(path, g: Graph, parts: Sequence[Measurement]) -> None:
    """Per-frequency data with copy-tagged ids, frequency-major."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATA_HEADER)
        for i, m in enumerate(parts):
            phi = scattering_data(m)
            k = 0
            for a, r in enumerate(m.receivers):
                for b, s in enumerate(m.sources):
                    w.writerow([_copy_tag(r, i), _copy_tag(s, i), _fmt(m.lam[a, b]),
                                _fmt(m.background[a, b]), _fmt(phi[k])])
                    k += 1


def read_multifreq_csv(path, g: Graph, m: int) -> np.ndarray:
    """Stacked scattering data from a file written by :func:`write_multifreq_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or tuple(rows[0].keys()) != DATA_HEADER:
        raise ValidationError(f"{path}: expected header {','.join(DATA_HEADER)}")
    table = {(row["r"], row["s"]): row for row in rows}
    phi = []
    for i in range(m):
        for r in g.receivers:
            for s in g.sources:
                key = (_copy_tag(r, i), _copy_tag(s, i))
                if key not in table:
                    raise ValidationError(f"{path}: no data for receiver {key[0]!r}, source {key[1]!r}")
                row = table[key]
                phi.append(float(row["background"]) - float(row["lambda"]))
    return np.array(phi)


def run_multifreq(cfg: ExperimentConfig, *, data_file=None) -> dict:
    """Multi-frequency variant of :func:`run_experiment` (``cfg.alphas`` set)."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with stage("graph"):
        g = graph_from_config(cfg.graph, Path(cfg.base_dir) if cfg.base_dir else None)
    with stage("phantom"):
        eta = _phantom(cfg, g)
    with stage("forward"):
        prob = multifreq_problem(g, cfg.alphas, float(cfg.t))
        parts = None
        if data_file is not None:
            phi = read_multifreq_csv(data_file, g, prob.m)
        elif eta is not None:
            parts = [robin_to_dirichlet(g, G.params, eta) for G in prob.greens]
            phi = np.concatenate([scattering_data(m) for m in parts])
        else:
            raise ValidationError("need a phantom or a data file")
    with stage("reconstruct"):
        F = None
        if cfg.structure and cfg.structure.get("kind") != "replication":
            F = structure_map(cfg.structure["kind"], cfg.structure.get("params", {}), g)
        res = modified_inverse_series(phi, prob, F, cfg.lambda_reg, int(cfg.terms), cfg.p)
        recon = res.mapped_partial_sums
    with stage("diagnose"):
        K = prob.stacked_k1() if F is None else prob.stacked_k1() @ F.matrix
        stacked = invertibility_report(K)
        single = invertibility_report(k1_matrix(prob.greens[0]))
    files = {
        "reconstruction": out / "reconstruction.csv",
        "long": out / "terms_long.csv",
        "diagnostics": out / "diagnostics.json",
    }
    if parts is not None:
        files["data"] = out / "data.csv"
        write_multifreq_csv(files["data"], g, parts)
    write_reconstruction_csv(files["reconstruction"], g.interior, recon, eta)
    write_long_csv(files["long"], g.interior, recon)
    report = {
        "graph": {"n_interior": g.n_interior, "n_boundary": g.n_boundary, "copies": prob.m},
        "params": {"alphas": list(prob.alphas), "t": prob.t, "p": cfg.p, "lambda": cfg.lambda_reg,
                   "terms": int(cfg.terms)},
        "invertibility_stacked": stacked.to_dict(),
        "invertibility_single": single.to_dict(),
        "term_norms": res.term_norms,
        "trend": res.trend,
        "relative_errors": None if eta is None else _relative_errors(recon, eta, cfg.p),
    }
    write_json(files["diagnostics"], report)
    report["files"] = {k: str(v) for k, v in files.items()}
    return report


def run_diagnose(cfg: ExperimentConfig) -> dict:
    """Constants, radii and invertibility without reconstructing."""
    with stage("graph"):
        g = graph_from_config(cfg.graph, Path(cfg.base_dir) if cfg.base_dir else None)
    with stage("diagnose"):
        G0 = background_green(g, cfg.params)
        eta = _phantom(cfg, g)
        phi = None if eta is None else scattering_data(robin_to_dirichlet(g, cfg.params, eta))
        diag = diagnose(G0, cfg.p, phi)
        inv = invertibility_report(k1_matrix(G0))
    report = {
        "constants": series_constants(G0, cfg.p).to_dict(),
        "inverse": diag.to_dict(),
        "invertibility": inv.to_dict(),
    }
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "diagnostics.json", report)
    report["files"] = {"diagnostics": str(out / "diagnostics.json")}
    return report


def run_forward(cfg: ExperimentConfig) -> dict:
    with stage("graph"):
        g = graph_from_config(cfg.graph, Path(cfg.base_dir) if cfg.base_dir else None)
    with stage("phantom"):
        eta = _phantom(cfg, g)
        if eta is None:
            raise ValidationError("forward simulation needs a phantom")
    with stage("forward"):
        meas = robin_to_dirichlet(g, cfg.params, eta)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_measurement_csv(out / "data.csv", meas)
    write_reconstruction_csv(out / "phantom.csv", g.interior, [], eta)
    files = {"data": str(out / "data.csv"), "phantom": str(out / "phantom.csv")}
    if cfg.export_green:
        files["green"] = str(out / "green.csv")
        write_green_csv(files["green"], background_green(g, cfg.params))
    return {"phi_norm": vnorm(scattering_data(meas), cfg.p), "files": files}
