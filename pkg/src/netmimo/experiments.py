"""Experiment orchestration: the CSV artifacts the toolkit publishes.

Each experiment id names one table:

    fig4_signal_cdf       sorted signal-power samples per scheme/direction
    fig5_interference_cdf sorted interference-power samples, same runs
    fig6_ul_rates         uplink mean rate vs cluster size, all methods
    fig7_dl_rates         downlink companion of fig6
    fig8_ul_cdf           uplink rate samples per scheme and cluster size
    fig9_dl_cdf           downlink companion of fig8
    fig10_ul_asymptotic   analytic-only uplink rates out to large clusters
    fig11_dl_asymptotic   downlink companion of fig10

Rate tables use the fixed seven-column schema (experiment, scheme,
direction, bbar_or_d, provenance, value, stderr); distribution tables are
wide, one sorted sample column per (scheme, cluster size) pair, so the
empirical CDF is rank/n against the column. All floats are printed with 9
significant digits and files end with a newline, which together with the
seed-derived per-point substreams makes rerunning a config byte-identical.

A run directory always gains a manifest.json recording the resolved
config, its hash, the seed, the tool version, per-file checksums, and the
interference-model diagnostics consumed by report_discrepancies.
"""

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, config, geometry
from . import analytic_rate as ar
from . import montecarlo as mc
from ._kernels import ENGINE
from .propagation import PathLossModel

RATE_HEADER = ("experiment", "scheme", "direction", "bbar_or_d",
               "provenance", "value", "stderr")

DEFAULT_RATE_BBARS = (2.0, 4.0, 6.0, 10.0)
DEFAULT_CDF_BBARS = (4.0, 10.0)
DEFAULT_ASYMPTOTIC_BBARS = (2.0, 4.0, 10.0, 20.0, 40.0, 100.0)

EXPERIMENT_IDS = ("fig4_signal_cdf", "fig5_interference_cdf",
                  "fig6_ul_rates", "fig7_dl_rates",
                  "fig8_ul_cdf", "fig9_dl_cdf",
                  "fig10_ul_asymptotic", "fig11_dl_asymptotic")

_SCHEMES = (geometry.USER_CENTRIC, geometry.DISJOINT)
_MODES = (mc.POISSON_B, mc.FIXED_B)


def validate_config(text):
    """Config-shape validation plus the experiment-id check."""
    spec = config.parse_config(text)
    if spec.experiment != "all" and spec.experiment not in EXPERIMENT_IDS:
        known = ", ".join(EXPERIMENT_IDS)
        raise config.ConfigError(
            [f"experiment: unknown id {spec.experiment!r} (use one of "
             f"{known}, or \"all\")"])
    return spec


def _fmt(value):
    if value is None:
        return ""
    return f"{float(value):.9g}"


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    data = buf.getvalue().encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def _simulate_point(args):
    cfg, scheme = args
    return mc.simulate(cfg, scheme)


class _Runner:
    """Lazy, cached Monte Carlo point runner shared by the experiments in
    one invocation, so e.g. the rate tables and the CDF tables reuse any
    coinciding (scheme, mode, bbar) simulations."""

    def __init__(self, spec, threads=1):
        self.spec = spec
        self.threads = max(1, int(threads))
        self.base = mc.TrialConfig(params=spec.params,
                                   n_trials=spec.n_trials, seed=spec.seed,
                                   window_multiplier=spec.window_multiplier)
        self.cache = {}

    def ensure(self, points):
        """points: iterable of (scheme, mode, bbar); fills the cache."""
        todo = [p for p in dict.fromkeys(points) if p not in self.cache]
        jobs = [(mc.point_config(self.base, b, mode), scheme)
                for scheme, mode, b in todo]
        if self.threads > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(_simulate_point, jobs))
        else:
            results = [_simulate_point(job) for job in jobs]
        self.cache.update(zip(todo, results))

    def sim(self, scheme, mode, bbar):
        key = (scheme, mode, float(bbar))
        if key not in self.cache:
            self.ensure([key])
        return self.cache[key]


# ------------------------------------------------------------ rate tables


def _rate_bbars(spec):
    return spec.bbars if spec.bbars is not None else DEFAULT_RATE_BBARS


def _rate_rows(spec, runner, experiment, direction):
    """Seven-column rows: analytic curves, both Monte Carlo cardinality
    modes, and the flat single-cell reference."""
    bbars = _rate_bbars(spec)
    runner.ensure([(s, m, b) for s in _SCHEMES for m in _MODES
                   for b in bbars])
    rows = []
    for scheme in _SCHEMES:
        curve = ar.rate_curve(spec.params, scheme, direction, tuple(bbars))
        for b, r in zip(curve.bbar, curve.rate):
            rows.append((experiment, scheme, direction, _fmt(b), "analytic",
                         _fmt(r), ""))
    for mode in _MODES:
        for scheme in _SCHEMES:
            for b in bbars:
                st = mc.EmpiricalStats.from_samples(
                    runner.sim(scheme, mode, b)[direction].rate)
                rows.append((experiment, scheme, direction, _fmt(b),
                             f"montecarlo-{mode}B", _fmt(st.mean),
                             _fmt(st.stderr)))
    base = mc.run_baselines(runner.base)
    st = mc.EmpiricalStats.from_samples(base["single_cell"][direction].rate)
    for b in bbars:
        rows.append((experiment, "single_cell", direction, _fmt(b),
                     "single-cell", _fmt(st.mean), _fmt(st.stderr)))
    return rows


def _interference_model_diagnostics(spec, runner):
    """Mean rate recomputed with the distance-cutoff interference in place
    of the exact inter-beam sum, per user-centric point. The relative gap
    measures how much the analytic interference-membership assumption
    costs on this geometry."""
    p = spec.params
    out = []
    for direction in ("ul", "dl"):
        for mode in _MODES:
            for b in _rate_bbars(spec):
                res = runner.sim(geometry.USER_CENTRIC, mode, b)[direction]
                alt_sinr = res.signal_power / (
                    res.interference_radius_rule + p.noise(direction))
                alt = np.log2(1.0 + alt_sinr / p.sinr_gap)
                exact = float(res.rate.mean())
                out.append({"direction": direction, "mode": mode,
                            "bbar": float(b), "exact_rate": exact,
                            "radius_rule_rate": float(alt.mean()),
                            "rel_gap": float(alt.mean() / exact - 1.0)})
    return out


# ----------------------------------------------------- distribution tables


def _power_cdf_rows(spec, runner, column):
    """Wide table of sorted per-trial powers at the base cluster size."""
    b = spec.params.mean_cluster_size
    runner.ensure([(s, mc.POISSON_B, b) for s in _SCHEMES])
    cols, names = [], []
    for scheme in _SCHEMES:
        res = runner.sim(scheme, mc.POISSON_B, b)
        for direction in ("ul", "dl"):
            names.append(f"{scheme}_{direction}")
            cols.append(np.sort(getattr(res[direction], column)))
    rows = [[_fmt(c[i]) for c in cols] for i in range(spec.n_trials)]
    return names, rows


def _rate_cdf_rows(spec, runner, direction):
    """Wide table of sorted rate samples per scheme and cluster size."""
    bbars = spec.bbars if spec.bbars is not None else DEFAULT_CDF_BBARS
    runner.ensure([(s, mc.POISSON_B, b) for s in _SCHEMES for b in bbars])
    cols, names = [], []
    for scheme in _SCHEMES:
        for b in bbars:
            names.append(f"{scheme}_B{b:g}")
            cols.append(np.sort(
                runner.sim(scheme, mc.POISSON_B, b)[direction].rate))
    rows = [[_fmt(c[i]) for c in cols] for i in range(spec.n_trials)]
    return names, rows


def _asymptotic_rows(spec, experiment, direction):
    """Analytic-only rates out to cluster sizes no simulation could reach,
    with the interference-free isolated-cell ceiling as reference."""
    bbars = (spec.bbars if spec.bbars is not None
             else DEFAULT_ASYMPTOTIC_BBARS)
    rows = []
    for scheme in _SCHEMES:
        curve = ar.rate_curve(spec.params, scheme, direction, tuple(bbars))
        for b, r in zip(curve.bbar, curve.rate):
            rows.append((experiment, scheme, direction, _fmt(b), "analytic",
                         _fmt(r), ""))
    iso = ar.isolated_cell_rate(spec.params, direction)
    for b in bbars:
        rows.append((experiment, "isolated", direction, _fmt(b),
                     "isolated-cell", _fmt(iso), ""))
    return rows


# ------------------------------------------------------------ entry point


def run_experiment(spec, threads=1):
    """Run one experiment id (or "all") and write its CSVs plus the run
    manifest into spec.outdir. Returns the list of written file paths.

    Any numerical failure is re-raised with the failing experiment named.
    """
    wanted = (list(EXPERIMENT_IDS) if spec.experiment == "all"
              else [spec.experiment])
    unknown = [e for e in wanted if e not in EXPERIMENT_IDS]
    if unknown:
        raise ValueError(f"unknown experiment id {unknown[0]!r}")
    os.makedirs(spec.outdir, exist_ok=True)

    runner = _Runner(spec, threads)
    manifest_files = {}
    written = []
    diagnostics = None
    for exp in wanted:
        try:
            if exp in ("fig6_ul_rates", "fig7_dl_rates"):
                direction = "ul" if exp == "fig6_ul_rates" else "dl"
                header, rows = RATE_HEADER, _rate_rows(spec, runner, exp,
                                                       direction)
                diagnostics = _interference_model_diagnostics(spec, runner)
            elif exp in ("fig4_signal_cdf", "fig5_interference_cdf"):
                column = ("signal_power" if exp == "fig4_signal_cdf"
                          else "interference_power")
                header, rows = _power_cdf_rows(spec, runner, column)
            elif exp in ("fig8_ul_cdf", "fig9_dl_cdf"):
                direction = "ul" if exp == "fig8_ul_cdf" else "dl"
                header, rows = _rate_cdf_rows(spec, runner, direction)
            else:
                direction = "ul" if exp == "fig10_ul_asymptotic" else "dl"
                header, rows = RATE_HEADER, _asymptotic_rows(spec, exp,
                                                             direction)
        except Exception as exc:
            raise RuntimeError(f"experiment {exp} failed: {exc}") from exc
        path = os.path.join(spec.outdir, f"{exp}.csv")
        digest = _write_csv(path, header, rows)
        manifest_files[exp] = {"file": f"{exp}.csv", "sha256": digest,
                               "rows": len(rows)}
        written.append(path)

    manifest = {
        "config": config.resolved_dict(spec),
        "config_hash": config.config_hash(spec),
        "seed": spec.seed,
        "tool_version": __version__,
        "engine": ENGINE,
        "files": manifest_files,
    }
    if diagnostics is not None:
        manifest["interference_model_diagnostics"] = diagnostics
    mpath = os.path.join(spec.outdir, "manifest.json")
    with open(mpath, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(mpath)
    return written


# -------------------------------------------------------------- reporting


def _read_rate_table(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != RATE_HEADER:
            raise ValueError(f"{path} is not a rate table")
        return list(reader)


def report_discrepancies(run_dir):
    """Text report on a completed run directory: analytic vs Monte Carlo
    relative errors per point, the two Jacobian readings of the disk-signal
    exponent side by side, and the cost of the interference-membership
    assumption (exact inter-beam sum vs distance cutoff).
    """
    mpath = os.path.join(run_dir, "manifest.json")
    if not os.path.exists(mpath):
        raise FileNotFoundError(f"no manifest.json under {run_dir}")
    with open(mpath, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)

    tables = []
    for exp in ("fig6_ul_rates", "fig7_dl_rates"):
        if exp in manifest.get("files", {}):
            tables.extend(_read_rate_table(
                os.path.join(run_dir, manifest["files"][exp]["file"])))
    if not tables:
        raise FileNotFoundError(
            f"{run_dir} holds no rate tables; run fig6_ul_rates or "
            "fig7_dl_rates (or \"all\") first")

    analytic = {}
    simulated = {}
    for _, scheme, direction, x, provenance, value, _err in tables:
        key = (scheme, direction, float(x))
        if provenance == "analytic":
            analytic[key] = float(value)
        elif provenance.startswith("montecarlo-"):
            simulated.setdefault(key, {})[provenance] = float(value)

    lines = ["discrepancy report", "==================", "",
             "analytic vs Monte Carlo mean rate, relative error "
             "(analytic / simulated - 1):"]
    worst = 0.0
    for key in sorted(simulated):
        scheme, direction, bbar = key
        if key not in analytic:
            continue
        for provenance in sorted(simulated[key]):
            rel = analytic[key] / simulated[key][provenance] - 1.0
            worst = max(worst, abs(rel))
            lines.append(f"  {scheme:13s} {direction} bbar={bbar:g} "
                         f"{provenance:22s} {rel:+8.2%}")
    lines += ["", f"max |relative error|: {worst:.2%}", ""]

    net = manifest["config"]["network"]
    params = ar.NetworkParams(
        bs_intensity=net["bs_intensity"], antennas=net["antennas"],
        users_per_bs=net["users_per_bs"],
        cluster_radius=net["cluster_radius"],
        path_loss=PathLossModel(d0=net["path_loss"]["d0"],
                                alpha=net["path_loss"]["alpha"]),
        sigma2_ul=net["resolved_sigma2"]["ul"],
        sigma2_dl=net["resolved_sigma2"]["dl"],
        sinr_gap=10.0 ** (net["sinr_gap_db"] / 10.0))
    bbars = sorted({k[2] for k in analytic})
    lines.append("disk-signal exponent, two Jacobian readings "
                 "(user-centric rate, bits/s/Hz):")
    for direction in ("ul", "dl"):
        for b in bbars:
            p = params.with_mean_cluster_size(b)
            area = ar.ergodic_rate(p, geometry.USER_CENTRIC, direction)
            offs = ar.ergodic_rate(p, geometry.USER_CENTRIC, direction,
                                   signal_form="offset")
            lines.append(f"  {direction} bbar={b:g}: area form "
                         f"{area:.6g}, offset form {offs:.6g}, "
                         f"spread {offs / area - 1.0:+.2%}")
    gap = ar.signal_jacobian_gap(params)
    lines += ["", "max relative transform gap between the two readings: "
              f"{gap['max_rel_gap']:.3g}", ""]

    diag = manifest.get("interference_model_diagnostics", [])
    lines.append("interference-membership assumption (exact inter-beam sum "
                 "vs distance cutoff), user-centric mean rate:")
    if diag:
        for d in diag:
            lines.append(f"  {d['direction']} {d['mode']}B "
                         f"bbar={d['bbar']:g}: exact {d['exact_rate']:.6g}, "
                         f"cutoff {d['radius_rule_rate']:.6g}, "
                         f"gap {d['rel_gap']:+.2%}")
    else:
        lines.append("  (no diagnostics recorded in manifest)")
    text = "\n".join(lines) + "\n"

    rpath = os.path.join(run_dir, "discrepancy_report.txt")
    with open(rpath, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text
