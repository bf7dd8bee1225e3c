"""Experiment orchestration: config parsing, trajectory ensembles, CSV output.

Runs are deterministic functions of (config, seed): every trajectory draws
from its own counter-based stream, results merge in trajectory order, and
the CSV bytes are identical across reruns and worker counts.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import circuit as ck
from . import feedback as fb
from . import gaussian as gs
from . import loop_engine as le
from . import stabilizer as st
from .crosscheck import CrosscheckResult, check_trajectory
from .fits import FitResult, fit_scaling
from .lattice import LatticeSpec, Protocol, Region, Topology
from .rng import GENERATOR_FAMILY, trajectory_rng

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = [
    "schema_version",
    "config_hash",
    "engine",
    "topology",
    "region",
    "lx",
    "ly",
    "p",
    "q",
    "estimator",
    "arg",
    "mean",
    "stderr",
    "samples",
    "wall_time",
]

ENGINES = ("loop", "oracle", "circuit", "gaussian", "crosscheck")
ESTIMATORS = (
    "g4",
    "spanning",
    "cut_entropy",
    "entropy_profile",
    "mie2boundary",
    "ea_order",
    "linear_order",
)
BATCHES = 32
ORACLE_QUBIT_LIMIT = 64

_REGION_OF = {
    "g4": Region.TWO_SITES,
    "spanning": Region.BOTH_BOUNDARIES,
    "mie2boundary": Region.BOTH_BOUNDARIES,
    "cut_entropy": Region.TOP_BOUNDARY,
    "entropy_profile": Region.TOP_BOUNDARY,
    "ea_order": Region.TOP_BOUNDARY,
    "linear_order": Region.TOP_BOUNDARY,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    lattice: LatticeSpec
    protocol: Protocol
    engine: str = "loop"
    estimators: tuple = ("ea_order",)
    samples: int = 100
    seed: int = 0
    eta: float = 0.0  # axis smearing for the gaussian engine's general mode
    sweep_p: tuple = ()
    sweep_q: tuple = ()
    sweep_l: tuple = ()

    def validate(self):
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}")
        for est in self.estimators:
            if est not in ESTIMATORS:
                raise ConfigError(f"unknown estimator {est!r}")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if self.engine != "crosscheck":
            for est in self.estimators:
                if self.lattice.region is not _REGION_OF[est]:
                    raise ConfigError(
                        f"estimator {est!r} needs unmeasured region "
                        f"{_REGION_OF[est].value!r}, lattice has "
                        f"{self.lattice.region.value!r}"
                    )
        if self.engine in ("oracle", "crosscheck"):
            worst = max(self.sweep_l, default=self.lattice.lx)
            if self.engine == "crosscheck":
                n = max(worst * worst, self.lattice.n_sites)
            else:
                n = self.lattice.n_sites
            if n > ORACLE_QUBIT_LIMIT:
                raise ConfigError(
                    f"{self.engine} engine limited to {ORACLE_QUBIT_LIMIT} qubits"
                )
        if self.engine in ("circuit", "gaussian") and self.lattice.region is not Region.TOP_BOUNDARY:
            raise ConfigError(f"{self.engine} engine needs the single-boundary geometry")

    def config_hash(self) -> str:
        text = repr(
            (
                self.lattice.lx,
                self.lattice.ly,
                self.lattice.topology.value,
                self.lattice.region.value,
                self.lattice.two_sites,
                self.lattice.sector,
                self.protocol.p,
                self.protocol.q,
                self.protocol.mode,
                self.engine,
                self.estimators,
                self.samples,
                self.seed,
                self.eta,
                self.sweep_p,
                self.sweep_q,
                self.sweep_l,
            )
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def parse_config(text: str) -> ExperimentConfig:
    """Parse the UTF-8 key-value config format (section headers, '=' pairs)."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    try:
        lat = cp["lattice"]
        lx = lat.getint("lx")
        ly = lat.getint("ly")
        topology = Topology(lat.get("topology", "cylinder"))
        region = Region(lat.get("region", "top_boundary"))
        two_sites = None
        if "two_sites" in lat:
            a, b = lat.get("two_sites").split()
            two_sites = (tuple(map(int, a.split(","))), tuple(map(int, b.split(","))))
        sector = (1, 1)
        if "sector" in lat:
            sx, sy = lat.get("sector").split(",")
            sector = (int(sx), int(sy))
        spec = LatticeSpec(lx, ly, topology, region, two_sites=two_sites, sector=sector)
        proto_sec = cp["protocol"]
        protocol = Protocol(
            proto_sec.getfloat("p", 0.0),
            proto_sec.getfloat("q", 0.0),
            proto_sec.get("mode", "pauli_pq"),
        )
        run_sec = cp["run"]
        estimators = tuple(
            e.strip() for e in run_sec.get("estimators", "ea_order").split(",") if e.strip()
        )
        cfg = ExperimentConfig(
            lattice=spec,
            protocol=protocol,
            engine=run_sec.get("engine", "loop"),
            estimators=estimators,
            samples=run_sec.getint("samples", 100),
            seed=run_sec.getint("seed", 0),
            eta=proto_sec.getfloat("eta", 0.0),
        )
        if cp.has_section("sweep"):
            sw = cp["sweep"]
            cfg = replace(
                cfg,
                sweep_p=tuple(float(x) for x in sw.get("p", "").split(",") if x.strip()),
                sweep_q=tuple(float(x) for x in sw.get("q", "").split(",") if x.strip()),
                sweep_l=tuple(int(x) for x in sw.get("L", "").split(",") if x.strip()),
            )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc
    cfg.validate()
    return cfg


def point_rng(seed: int, point: int, trajectory: int):
    return trajectory_rng(seed, (point << 40) + trajectory)


# -- per-trajectory estimator extraction -------------------------------------------


def _loop_trajectory(spec, protocol, estimators, rng):
    # every loop-engine estimator is built on strand connectivity, which is
    # outcome-independent; skip the costly forced-outcome detection
    state, record, _ = le.run_bulk_sweep(spec, protocol, rng, exact=False)
    out = {}
    for est in estimators:
        if est == "g4":
            out[(est, "")] = 1.0 if le.classify_two_site(state) == "c" else 0.0
        elif est == "spanning":
            out[(est, "")] = float(le.spanning_number(state))
        elif est == "mie2boundary":
            out[(est, "")] = le.two_boundary_mie(state)
        elif est in ("cut_entropy", "entropy_profile"):
            for length in range(1, spec.lx):
                vals = [
                    le.boundary_cut_entropy(state, (start, length))
                    for start in range(spec.lx)
                ]
                out[(est, length)] = float(np.mean(vals))
        elif est in ("ea_order", "linear_order"):
            # post-feedback the linear order equals the glass order exactly
            out[(est, "")] = le.ea_order(state)
    return out


def _oracle_trajectory(spec, protocol, estimators, rng):
    tiles = le.sample_tiles(spec, protocol, rng)
    tab = st.prepare_wen_ground(spec)
    for s in spec.sweep_order():
        if tiles[s] < 0:
            continue
        tab.measure(st.Pauli.from_ops(tab.n, {int(s): le.BASIS_NAMES[tiles[s]]}), rng=rng)
    out = {}
    boundary = list(range(spec.lx))
    for est in estimators:
        if est in ("cut_entropy", "entropy_profile"):
            for length in range(1, spec.lx):
                vals = [
                    st.entropy(tab, [(start + d) % spec.lx for d in range(length)])
                    for start in range(spec.lx)
                ]
                out[(est, length)] = float(np.mean(vals))
        elif est == "mie2boundary":
            out[(est, "")] = st.entropy(tab, boundary)
        elif est == "g4":
            qi = spec.site_index(*spec.two_sites[0])
            out[(est, "")] = 1.0 if st.entropy(tab, [qi]) > 0.5 * math.log(2) else 0.0
        elif est in ("ea_order", "linear_order"):
            out[(est, "")] = st.oracle_ea_order(tab, boundary)
        elif est == "spanning":
            raise ConfigError("spanning is a loop-engine estimator")
    return out


def _circuit_trajectory(spec, protocol, estimators, rng):
    tiles = le.sample_tiles(spec, protocol, rng)
    sched = ck.compile_schedule(spec, tiles)
    chain = ck.run_schedule(sched, ck.initial_chain(spec), rng=rng)
    out = {}
    for est in estimators:
        if est not in ("cut_entropy", "entropy_profile"):
            raise ConfigError("circuit engine computes boundary entropies only")
        for length in range(1, spec.lx):
            vals = [
                chain.qubit_entropy([(start + d) % spec.lx for d in range(length)])
                for start in range(spec.lx)
            ]
            out[(est, length)] = float(np.mean(vals))
    return out


def _gaussian_trajectory(spec, protocol, estimators, rng, eta):
    if protocol.mode == "general":
        sampler = gs.SmearedPauliSampler(protocol.p, protocol.q, eta)
    else:
        sampler = gs.PauliAxisSampler(protocol.p, protocol.q)
    state, _ = gs.run_general_protocol(spec, sampler, rng)
    out = {}
    for est in estimators:
        if est not in ("cut_entropy", "entropy_profile"):
            raise ConfigError("gaussian engine computes boundary entropies only")
        for length in range(1, spec.lx):
            vals = [
                gs.qubit_entropy(state.m, [(start + d) % spec.lx for d in range(length)])
                for start in range(spec.lx)
            ]
            out[(est, length)] = float(np.mean(vals))
    return out


def _crosscheck_point(spec, protocol, samples, seed, point):
    result = CrosscheckResult()
    for region in (Region.TOP_BOUNDARY, Region.BOTH_BOUNDARIES):
        rspec = LatticeSpec(spec.lx, spec.ly, spec.topology, region, sector=spec.sector)
        for t in range(samples):
            check_trajectory(rspec, protocol, point_rng(seed, point, t), result)
    out = {}
    for name, (passed, total) in sorted(result.checks.items()):
        out[(f"crosscheck:{name}", "")] = (passed / total, 0.0, total)
    return out


def _run_point_chunk(args):
    (spec, protocol, engine, estimators, eta, seed, point, t0, t1) = args
    rows = []
    for t in range(t0, t1):
        rng = point_rng(seed, point, t)
        if engine == "loop":
            rows.append(_loop_trajectory(spec, protocol, estimators, rng))
        elif engine == "oracle":
            rows.append(_oracle_trajectory(spec, protocol, estimators, rng))
        elif engine == "circuit":
            rows.append(_circuit_trajectory(spec, protocol, estimators, rng))
        elif engine == "gaussian":
            rows.append(_gaussian_trajectory(spec, protocol, estimators, rng, eta))
    return rows


def _batch_stats(values):
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size >= BATCHES:
        bm = np.array([b.mean() for b in np.array_split(arr, BATCHES)])
        stderr = float(bm.std(ddof=1) / math.sqrt(BATCHES))
    else:
        stderr = None
    return mean, stderr


def sweep_points(config: ExperimentConfig):
    """Sweep coordinates in deterministic order: L outer, then p, then q."""
    ls = config.sweep_l or (None,)
    ps = config.sweep_p or (None,)
    qs = config.sweep_q or (None,)
    for L in ls:
        for p in ps:
            for q in qs:
                yield L, p, q


def run(config: ExperimentConfig, threads: int = 1):
    """Execute the experiment; returns (rows, metadata)."""
    config.validate()
    started = time.time()
    rows = []
    chash = config.config_hash()
    base = {
        "schema_version": CSV_SCHEMA_VERSION,
        "config_hash": chash,
        "engine": config.engine,
        "wall_time": "",
    }
    for point, (L, p, q) in enumerate(sweep_points(config)):
        spec = config.lattice
        if L is not None:
            spec = LatticeSpec(L, L, spec.topology, spec.region, two_sites=spec.two_sites, sector=spec.sector)
        protocol = Protocol(
            p if p is not None else config.protocol.p,
            q if q is not None else config.protocol.q,
            config.protocol.mode,
        )
        coords = {
            "topology": spec.topology.value,
            "region": spec.region.value,
            "lx": spec.lx,
            "ly": spec.ly,
            "p": protocol.p,
            "q": protocol.q,
        }
        if config.engine == "crosscheck":
            stats = _crosscheck_point(spec, protocol, config.samples, config.seed, point)
            for (est, arg), (mean, stderr, total) in sorted(stats.items(), key=lambda kv: kv[0][0]):
                rows.append(
                    base | coords | {
                        "estimator": est,
                        "arg": arg,
                        "mean": mean,
                        "stderr": stderr,
                        "samples": total,
                    }
                )
            continue
        args = []
        chunk = max(1, math.ceil(config.samples / max(threads, 1)))
        for t0 in range(0, config.samples, chunk):
            args.append(
                (
                    spec,
                    protocol,
                    config.engine,
                    config.estimators,
                    config.eta,
                    config.seed,
                    point,
                    t0,
                    min(t0 + chunk, config.samples),
                )
            )
        if threads > 1 and len(args) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(_run_point_chunk, args))
        else:
            chunks = [_run_point_chunk(a) for a in args]
        per_traj = [d for chunk_rows in chunks for d in chunk_rows]
        keys = sorted({k for d in per_traj for k in d}, key=lambda k: (k[0], str(k[1])))
        for key in keys:
            values = [d[key] for d in per_traj]
            mean, stderr = _batch_stats(values)
            rows.append(
                base | coords | {
                    "estimator": key[0],
                    "arg": key[1],
                    "mean": mean,
                    "stderr": stderr,
                    "samples": len(values),
                }
            )
    meta = {
        "schema_version": CSV_SCHEMA_VERSION,
        "config_hash": chash,
        "rng_family": GENERATOR_FAMILY,
        "git_hash": _git_hash(),
        "wall_time_s": time.time() - started,
        "threads": threads,
        "config": {
            "engine": config.engine,
            "estimators": list(config.estimators),
            "samples": config.samples,
            "seed": config.seed,
            "lattice": {
                "lx": config.lattice.lx,
                "ly": config.lattice.ly,
                "topology": config.lattice.topology.value,
                "region": config.lattice.region.value,
            },
            "protocol": {
                "p": config.protocol.p,
                "q": config.protocol.q,
                "mode": config.protocol.mode,
                "eta": config.eta,
            },
            "sweep": {
                "p": list(config.sweep_p),
                "q": list(config.sweep_q),
                "L": list(config.sweep_l),
            },
        },
    }
    return rows, meta


def _git_hash():
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5
        )
        return out.stdout.strip() or None
    except (OSError, subprocess.SubprocessError):
        return None


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        out = []
        for col in CSV_COLUMNS:
            v = row.get(col, "")
            if v is None:
                v = ""
            elif isinstance(v, float):
                v = repr(v)
            out.append(v)
        writer.writerow(out)
    return buf.getvalue()


def read_csv_rows(path) -> list[dict]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            if int(rec["schema_version"]) != CSV_SCHEMA_VERSION:
                raise ConfigError(
                    f"CSV schema {rec['schema_version']} not supported "
                    f"(expected {CSV_SCHEMA_VERSION})"
                )
            row = dict(rec)
            for col in ("lx", "ly", "samples"):
                row[col] = int(rec[col])
            for col in ("p", "q", "mean"):
                row[col] = float(rec[col])
            row["stderr"] = float(rec["stderr"]) if rec["stderr"] else None
            row["arg"] = float(rec["arg"]) if rec["arg"] else ""
            rows.append(row)
    return rows


def write_outputs(rows, meta, out_dir, stem="results"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    csv_path.write_text(rows_to_csv(rows), encoding="utf-8")
    (out / f"{stem}.meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    return csv_path


def fit_rows(rows, model: str, estimator: str) -> FitResult:
    sel = [r for r in rows if r["estimator"] == estimator]
    if not sel:
        raise ConfigError(f"no rows with estimator {estimator!r}")
    return fit_scaling(sel, model)
