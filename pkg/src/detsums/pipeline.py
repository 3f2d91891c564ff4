"""End-to-end studies: construct, enumerate, sum, fit, bound, compare, persist.

A run is driven by an ``ExperimentConfig`` and produces a directory of CSV
and JSON artifacts plus a plain-text summary.  Every artifact embeds the
sha256 hash of the canonical config JSON; a run refuses to write into a
directory whose existing config hash differs.  Given the same config the
report is byte-for-byte reproducible.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .bounds import (BoundEnvelope, DmtCurve, dmt_envelope, dmt_ml_bound,
                     dmt_naive_bound, growth_fit, shift_bound_envelope,
                     snr_threshold_exponent)
from .channel import ChannelConfig, SimResult, fixed_code, simulate, union_bound
from .codes import CodeSpec, min_abs_det_ball
from .lattice import DEFAULT_BUDGET, MatrixLattice
from .sums import SumSpec, shifted_det_sum, sum_curve

__all__ = [
    "SumJob",
    "EnvelopeJob",
    "DmtJob",
    "ExperimentConfig",
    "ExperimentReport",
    "run",
    "compare_bound_vs_truth",
    "config_hash",
]


@dataclass(frozen=True)
class SumJob:
    """One sum family evaluated on a radius grid."""

    family: str
    m: float
    radii: tuple
    c: float = 0.0
    i: int | None = None
    skip_singular: bool = False

    def spec(self) -> SumSpec:
        return SumSpec(family=self.family, m=self.m, c=self.c, i=self.i,
                       skip_singular=self.skip_singular)

    def to_dict(self) -> dict:
        return {"family": self.family, "m": self.m, "radii": list(self.radii),
                "c": self.c, "i": self.i, "skipSingular": self.skip_singular}

    @classmethod
    def from_dict(cls, doc: dict) -> "SumJob":
        return cls(family=doc["family"], m=doc["m"], radii=tuple(doc["radii"]),
                   c=doc.get("c", 0.0), i=doc.get("i"),
                   skip_singular=doc.get("skipSingular", False))


@dataclass(frozen=True)
class EnvelopeJob:
    """Envelope request: exponent table either given or fitted from curves.

    ``s_table`` maps the inverse-determinant power l to its growth exponent.
    When ``fit_from_curves`` is set, each l is fitted from the approximate
    curve with m = 2l (square lattices carry det(X X*) = |det X|^2).
    """

    m: int
    indices: tuple
    s_table: dict = field(default_factory=dict)
    fit_from_curves: bool = False

    def to_dict(self) -> dict:
        return {"m": self.m, "indices": list(self.indices),
                "sTable": {str(k): v for k, v in sorted(self.s_table.items())},
                "fitFromCurves": self.fit_from_curves}

    @classmethod
    def from_dict(cls, doc: dict) -> "EnvelopeJob":
        return cls(m=doc["m"], indices=tuple(doc["indices"]),
                   s_table={int(k): v for k, v in doc.get("sTable", {}).items()},
                   fit_from_curves=doc.get("fitFromCurves", False))


@dataclass(frozen=True)
class DmtJob:
    T: int
    k: int
    naive_a: float | None = None

    def to_dict(self) -> dict:
        return {"T": self.T, "k": self.k, "naiveA": self.naive_a}

    @classmethod
    def from_dict(cls, doc: dict) -> "DmtJob":
        return cls(T=doc["T"], k=doc["k"], naive_a=doc.get("naiveA"))


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    code: CodeSpec
    sum_jobs: tuple = ()
    envelope: EnvelopeJob | None = None
    dmt: DmtJob | None = None
    sim: ChannelConfig | None = None
    compare_c_values: tuple = ()
    compare_m: float | None = None
    compare_radii: tuple = ()
    det_scan_radius: float | None = None
    seed: int = 0
    budget: int = DEFAULT_BUDGET

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "code": self.code.to_dict(),
            "sumJobs": [j.to_dict() for j in self.sum_jobs],
            "envelope": self.envelope.to_dict() if self.envelope else None,
            "dmt": self.dmt.to_dict() if self.dmt else None,
            "sim": self.sim.to_dict() if self.sim else None,
            "compareCValues": list(self.compare_c_values),
            "compareM": self.compare_m,
            "compareRadii": list(self.compare_radii),
            "detScanRadius": self.det_scan_radius,
            "seed": self.seed,
            "budget": self.budget,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        return cls(
            name=doc["name"],
            code=CodeSpec.from_dict(doc["code"]),
            sum_jobs=tuple(SumJob.from_dict(j) for j in doc.get("sumJobs", [])),
            envelope=EnvelopeJob.from_dict(doc["envelope"]) if doc.get("envelope") else None,
            dmt=DmtJob.from_dict(doc["dmt"]) if doc.get("dmt") else None,
            sim=ChannelConfig.from_dict(doc["sim"]) if doc.get("sim") else None,
            compare_c_values=tuple(doc.get("compareCValues", [])),
            compare_m=doc.get("compareM"),
            compare_radii=tuple(doc.get("compareRadii", [])),
            det_scan_radius=doc.get("detScanRadius"),
            seed=doc.get("seed", 0),
            budget=doc.get("budget", DEFAULT_BUDGET),
        )


def _canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(_canonical_json(config.to_dict()).encode()).hexdigest()


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    hash: str
    lattice_summary: dict
    curves: list
    fits: dict
    envelope: BoundEnvelope | None
    dmt_curves: list
    thresholds: list
    sim_result: SimResult | None
    sim_bound: list
    compare_table: list
    notes: list

    def summary_text(self) -> str:
        lines = [f"experiment: {self.config.name}", f"config hash: {self.hash}", ""]
        ls = self.lattice_summary
        lines.append(
            f"lattice: n={ls['n']} T={ls['T']} rank k={ls['k']} "
            f"min|X|_F={ls['minNorm']!r} covolume={ls['covolume']!r}")
        if ls.get("minAbsDet") is not None:
            lines.append(
                f"det scan: min |det X| over |X|_F <= {ls['detScanRadius']!r} "
                f"is {ls['minAbsDet']!r}")
        for curve in self.curves:
            tail = curve.values[-1] if curve.values else float("nan")
            lines.append(
                f"sum {curve.spec.label()}: {len(curve.radii)} radii up to "
                f"{curve.radii[-1]!r}, last value {tail!r}")
        for name, fit in sorted(self.fits.items()):
            lines.append(
                f"fit {name}: s={fit.s!r} t={fit.t!r} residual={fit.residual!r}"
                + ("" if fit.has_log_factor else " (no log factor)"))
        if self.envelope is not None:
            for e in self.envelope.entries:
                lines.append(
                    f"envelope i={e.split_index}: c^-{e.shift_exp} regime={e.regime} "
                    f"M-exponent={e.radius_exp!r} log-power={e.log_power}")
        for curve in self.dmt_curves:
            vals = ", ".join(f"d({r:g})={curve.evaluate(r)!r}" for r in (0.0, 1.0, 2.0))
            lines.append(f"dmt {curve.label}: {vals}")
        for row in self.thresholds:
            lines.append(
                f"snr threshold (d={row['d']}, t={row['t']}): M^{row['exponent']}")
        if self.sim_result is not None:
            for idx, db in enumerate(self.sim_result.snr_db):
                bound = self.sim_bound[idx] if idx < len(self.sim_bound) else None
                lines.append(
                    f"sim {db:g} dB: rate={self.sim_result.error_rate[idx]!r} "
                    f"({self.sim_result.error_count[idx]}/{self.sim_result.trials[idx]})"
                    + (f" union_bound={bound!r}" if bound is not None else ""))
        for row in self.compare_table:
            lines.append(
                f"compare c={row['c']:g} M={row['M']:g}: empirical={row['empirical']!r} "
                f"envelope={row['envelope']!r} ratio={row['ratio']!r} "
                f"active_i={row['active_i']} ok={row['ok']}")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"


def compare_bound_vs_truth(lat: MatrixLattice, envelope: BoundEnvelope, m: float,
                           c_values, radii, *, budget: int = DEFAULT_BUDGET,
                           slack: float = 1e-9, n_jobs: int = 1) -> list:
    """Empirical shifted sums against the anchored envelope shape.

    The envelope's unknown constant is fixed at the anchor cell (largest c,
    largest M); every other cell reports empirical / scaled-envelope with an
    ``ok`` flag for ratio <= 1 + slack.
    """
    c_values = sorted(float(c) for c in c_values)
    radii = sorted(float(M) for M in radii)
    if not c_values or not radii:
        raise ValueError("need at least one c and one radius")
    table = {}
    for c in c_values:
        for M in radii:
            table[(c, M)] = shifted_det_sum(lat, m, c, M, budget=budget,
                                            n_jobs=n_jobs)
    anchor = (c_values[-1], radii[-1])
    scale = table[anchor] / envelope.shape_value(*anchor)
    rows = []
    for c in c_values:
        for M in radii:
            shaped = scale * envelope.shape_value(c, M)
            ratio = table[(c, M)] / shaped
            rows.append({
                "c": c, "M": M, "empirical": table[(c, M)], "envelope": shaped,
                "ratio": ratio, "active_i": envelope.active_index(c, M),
                "ok": ratio <= 1.0 + slack,
            })
    return rows


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _json_text(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def run(config: ExperimentConfig, out_dir=None, *, n_jobs: int = 1) -> ExperimentReport:
    """Execute all configured stages and persist the report.

    Stage order: construct -> det scan -> sum curves -> growth fits ->
    envelope -> DMT curves -> SNR thresholds -> simulation -> comparison.
    ``out_dir=None`` computes everything without touching the filesystem.
    """
    h = config_hash(config)
    lat = config.code.resolve()
    notes = []

    min_abs_det = None
    if config.det_scan_radius is not None and lat.n == lat.T:
        min_abs_det = min_abs_det_ball(lat, config.det_scan_radius, budget=config.budget)
        if min_abs_det <= 1e-9:
            notes.append("determinant scan found a singular nonzero point; "
                         "the lattice has no determinant gap")
    lattice_summary = {
        "n": lat.n, "T": lat.T, "k": lat.k,
        "minNorm": math.sqrt(lat.min_norm_sq), "covolume": lat.covolume,
        "normalization": config.code.normalization,
        "minAbsDet": min_abs_det, "detScanRadius": config.det_scan_radius,
    }

    curves = []
    for job in config.sum_jobs:
        curves.append(sum_curve(lat, job.spec(), job.radii, budget=config.budget,
                                n_jobs=n_jobs))

    fits = {}
    for curve in curves:
        usable = [M for M in curve.radii if M >= 2.0 * (1 - 1e-12)]
        if len(usable) >= 4 and all(v > 0 for v in curve.values):
            fits[curve.spec.label()] = growth_fit(curve)

    envelope = None
    if config.envelope is not None:
        job = config.envelope
        s_table = dict(job.s_table)
        if job.fit_from_curves:
            for i in job.indices:
                l = job.m - i
                if l <= 0 or l in s_table:
                    continue
                label = SumSpec(family="approximate", m=2 * l).label()
                if label in fits:
                    s_table[l] = fits[label].s
        envelope = shift_bound_envelope(lat.n, lat.k, job.m, s_table,
                                        indices=job.indices)
        notes.extend(envelope.notes)

    dmt_curves = []
    thresholds = []
    if config.dmt is not None and envelope is not None:
        lines = []
        for e in envelope.entries:
            line = dmt_ml_bound(e.shift_exp, e.radius_exp, config.dmt.k, config.dmt.T)
            lines.append(DmtCurve(segments=line.segments,
                                  label=f"ml-entry-i{e.split_index}",
                                  provenance=dict(line.provenance,
                                                  split_index=e.split_index)))
            thresholds.append({
                "d": e.shift_exp, "t": e.radius_exp,
                "exponent": str(snr_threshold_exponent(e.shift_exp, e.radius_exp)),
                "source": f"envelope entry i={e.split_index}",
            })
        dmt_curves.extend(lines)
        dmt_curves.append(dmt_envelope(lines))
        if config.dmt.naive_a is not None:
            dmt_curves.append(dmt_naive_bound(config.dmt.naive_a, config.dmt.k,
                                              config.dmt.T))

    sim_result = None
    sim_bound = []
    if config.sim is not None:
        sim_result = simulate(lat, config.sim)
        if config.sim.fixed_radius is not None:
            code = fixed_code(lat, config.sim.fixed_radius, budget=config.budget)
            for db in config.sim.snr_grid_db:
                sim_bound.append(union_bound(
                    code, config.sim.n_r, 10.0 ** (db / 10.0),
                    chernoff_scaling=config.sim.chernoff_scaling,
                    budget=config.budget))

    compare_table = []
    if envelope is not None and config.compare_c_values and config.compare_radii:
        m = config.compare_m if config.compare_m is not None else float(config.envelope.m)
        compare_table = compare_bound_vs_truth(
            lat, envelope, m, config.compare_c_values, config.compare_radii,
            budget=config.budget, n_jobs=n_jobs)

    report = ExperimentReport(config=config, hash=h, lattice_summary=lattice_summary,
                              curves=curves, fits=fits, envelope=envelope,
                              dmt_curves=dmt_curves, thresholds=thresholds,
                              sim_result=sim_result, sim_bound=sim_bound,
                              compare_table=compare_table, notes=notes)
    if out_dir is not None:
        _persist(report, Path(out_dir))
    return report


def _persist(report: ExperimentReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    if cfg_path.exists():
        existing = json.loads(cfg_path.read_text(encoding="utf-8"))
        if existing.get("hash") != report.hash:
            raise RuntimeError(
                f"output directory {out} holds a report for config hash "
                f"{existing.get('hash')}; refusing to overwrite with {report.hash}")
    _write_text(cfg_path, _json_text({"hash": report.hash,
                                      "config": report.config.to_dict()}))
    _write_text(out / "lattice.json",
                _json_text(dict(report.lattice_summary, hash=report.hash)))
    for curve in report.curves:
        stem = f"curve_{curve.spec.label()}"
        curve.to_csv(out / f"{stem}.csv")
        _write_text(out / f"{stem}.json",
                    _json_text(dict(curve.to_json_dict(), hash=report.hash)))
    if report.fits:
        _write_text(out / "fits.json", _json_text(
            {"hash": report.hash,
             "fits": {name: fit.to_dict() for name, fit in report.fits.items()}}))
    if report.envelope is not None:
        _write_text(out / "envelope.json",
                    _json_text(dict(report.envelope.to_dict(), hash=report.hash)))
    grid = [round(0.01 * j, 2) for j in range(0, 201)]
    for curve in report.dmt_curves:
        stem = "dmt_" + _slug(curve.label)
        curve.to_csv(grid, out / f"{stem}.csv")
        _write_text(out / f"{stem}.json",
                    _json_text(dict(curve.to_json_dict(), hash=report.hash)))
    if report.thresholds:
        _write_text(out / "thresholds.json",
                    _json_text({"hash": report.hash, "thresholds": report.thresholds}))
    if report.sim_result is not None:
        report.sim_result.to_csv(out / "sim.csv")
        _write_text(out / "sim.json", _json_text(
            dict(report.sim_result.to_json_dict(), hash=report.hash,
                 unionBound=report.sim_bound)))
    if report.compare_table:
        _write_text(out / "compare.json",
                    _json_text({"hash": report.hash, "table": report.compare_table}))
    _write_text(out / "summary.txt", report.summary_text())


def _slug(label: str) -> str:
    keep = []
    for ch in label:
        keep.append(ch if ch.isalnum() else "_")
    slug = "".join(keep).strip("_")
    while "__" in slug:
        slug = slug.replace("__", "_")
    return slug[:80]
