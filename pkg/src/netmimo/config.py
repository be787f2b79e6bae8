"""Run configuration: strict YAML parsing into an ExperimentSpec.

The file format is a small YAML mapping; every key is optional and an
empty file resolves to the defaults below. Unknown keys are rejected and
every violated constraint is reported with its field path, so a bad file
produces the full list of problems in one pass.

    experiment: all            # experiment id, or "all"
    seed: 42
    trials: 1000               # system trials per simulated point
    out: results               # output directory for CSVs and manifest
    bbar: [2.0, 4.0, 6.0, 10.0]  # mean cluster sizes; omit for defaults
    window_multiplier: 6.0     # simulation window half-side, in radii
    network:
      bs_intensity: 4.0e-6     # BS per square meter
      antennas: 4
      users_per_bs: 2
      cluster_radius: null     # meters; null derives it from bbar
      path_loss: {d0: 0.392, alpha: 3.76}
      link_budget:
        ul_tx_power_dbm: 23.0
        dl_beam_power_dbm: 40.0
        bandwidth_mhz: 20.0
        noise_figure_db: 9.0
        noise_psd_dbm_per_hz: -174.0
      sinr_gap_db: 3.0

Units follow the package boundary convention: powers in dBm, bandwidth
in MHz, distances in meters. The default path-loss pair (d0 = 0.392 m,
alpha = 3.76) reproduces a 128.1 + 37.6 log10(d_km) dB urban-macro fit,
and the default link budget resolves to normalized noise powers of
about 10^-11.5 (UL) and 10^-13.2 (DL). Noise variances are derived from
the budget only; library callers who want raw variances construct
NetworkParams directly.
"""

import hashlib
import json
from dataclasses import dataclass

import yaml

from . import units
from .analytic_rate import NetworkParams
from .propagation import PathLossModel

DEFAULT_BUDGET = {
    "ul_tx_power_dbm": 23.0,
    "dl_beam_power_dbm": 40.0,
    "bandwidth_mhz": 20.0,
    "noise_figure_db": 9.0,
    "noise_psd_dbm_per_hz": -174.0,
}


class ConfigError(ValueError):
    """Carries every violated constraint, one message per field path."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved run description: network scenario plus orchestration
    knobs. bbars=None lets each experiment use its documented default
    sweep."""

    experiment: str
    seed: int
    n_trials: int
    outdir: str
    bbars: tuple
    window_multiplier: float
    params: NetworkParams
    budget: dict


class _Checker:
    """Accumulates field-path errors while pulling typed values out of the
    nested mapping."""

    def __init__(self):
        self.errors = []

    def bad(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def mapping(self, raw, path, allowed):
        if raw is None:
            return {}
        if not isinstance(raw, dict):
            self.bad(path or "top level", "must be a mapping")
            return {}
        for key in raw:
            if key not in allowed:
                self.bad(f"{path}.{key}" if path else str(key), "unknown key")
        return raw

    def integer(self, raw, path, default, minimum):
        if raw is None:
            return default
        if isinstance(raw, bool) or not isinstance(raw, int):
            self.bad(path, "must be an integer")
            return default
        if raw < minimum:
            self.bad(path, f"must be at least {minimum}")
            return default
        return raw

    def number(self, raw, path, default, minimum=None, exclusive=False):
        if raw is None:
            return default
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            self.bad(path, "must be a number")
            return default
        val = float(raw)
        if val != val or val in (float("inf"), float("-inf")):
            self.bad(path, "must be finite")
            return default
        if minimum is not None:
            if exclusive and val <= minimum:
                self.bad(path, "must be positive" if minimum == 0.0
                         else f"must exceed {minimum}")
                return default
            if not exclusive and val < minimum:
                self.bad(path, f"must be at least {minimum}")
                return default
        return val

    def text(self, raw, path, default):
        if raw is None:
            return default
        if not isinstance(raw, str) or not raw.strip():
            self.bad(path, "must be a nonempty string")
            return default
        return raw


def parse_config(text):
    """Parse and validate a YAML config, returning the resolved spec.

    Raises ConfigError carrying one message per problem: syntax errors
    with line and column, unknown keys, and violated constraints with
    their field paths.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = (f"line {mark.line + 1}, column {mark.column + 1}: "
                 if mark is not None else "")
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError([f"{where}{problem}"]) from exc

    c = _Checker()
    top = c.mapping(raw, "", {"experiment", "seed", "trials", "out", "bbar",
                              "window_multiplier", "network"})
    experiment = c.text(top.get("experiment"), "experiment", "all")
    seed = c.integer(top.get("seed"), "seed", 42, 0)
    trials = c.integer(top.get("trials"), "trials", 1000, 1)
    outdir = c.text(top.get("out"), "out", "results")
    mult = c.number(top.get("window_multiplier"), "window_multiplier",
                    6.0, 1.0)

    bbars = None
    if top.get("bbar") is not None:
        raw_bbar = top["bbar"]
        if not isinstance(raw_bbar, list) or not raw_bbar:
            c.bad("bbar", "must be a nonempty list of cluster sizes")
        else:
            vals = [c.number(b, f"bbar[{i}]", 1.0, 0.0, exclusive=True)
                    for i, b in enumerate(raw_bbar)]
            bbars = tuple(float(v) for v in vals)

    net = c.mapping(top.get("network"), "network",
                    {"bs_intensity", "antennas", "users_per_bs",
                     "cluster_radius", "path_loss", "link_budget",
                     "sinr_gap_db"})
    intensity = c.number(net.get("bs_intensity"), "network.bs_intensity",
                         4e-6, 0.0, exclusive=True)
    antennas = c.integer(net.get("antennas"), "network.antennas", 4, 1)
    users = c.integer(net.get("users_per_bs"), "network.users_per_bs", 2, 1)
    if users >= antennas:
        c.bad("network", "loading factor must satisfy K < M")
    radius = c.number(net.get("cluster_radius"), "network.cluster_radius",
                      None, 0.0, exclusive=True)
    gap_db = c.number(net.get("sinr_gap_db"), "network.sinr_gap_db", 3.0, 0.0)

    pl_raw = c.mapping(net.get("path_loss"), "network.path_loss",
                       {"d0", "alpha"})
    d0 = c.number(pl_raw.get("d0"), "network.path_loss.d0", 0.3920,
                  0.0, exclusive=True)
    alpha = c.number(pl_raw.get("alpha"), "network.path_loss.alpha", 3.76,
                     2.0, exclusive=True)

    lb_raw = c.mapping(net.get("link_budget"), "network.link_budget",
                       set(DEFAULT_BUDGET))
    budget = dict(DEFAULT_BUDGET)
    for key in DEFAULT_BUDGET:
        path = f"network.link_budget.{key}"
        if key == "bandwidth_mhz":
            budget[key] = c.number(lb_raw.get(key), path, budget[key],
                                   0.0, exclusive=True)
        elif key == "noise_figure_db":
            budget[key] = c.number(lb_raw.get(key), path, budget[key], 0.0)
        else:
            budget[key] = c.number(lb_raw.get(key), path, budget[key])

    if c.errors:
        raise ConfigError(c.errors)

    sigma2_ul = units.normalized_noise_power(
        budget["ul_tx_power_dbm"], budget["bandwidth_mhz"],
        budget["noise_figure_db"], budget["noise_psd_dbm_per_hz"])
    sigma2_dl = units.normalized_noise_power(
        budget["dl_beam_power_dbm"], budget["bandwidth_mhz"],
        budget["noise_figure_db"], budget["noise_psd_dbm_per_hz"])
    try:
        params = NetworkParams(
            bs_intensity=intensity, users_per_bs=users, antennas=antennas,
            cluster_radius=radius,
            path_loss=PathLossModel(d0=d0, alpha=alpha),
            sigma2_ul=sigma2_ul, sigma2_dl=sigma2_dl,
            sinr_gap=float(units.db_to_linear(gap_db)))
    except ValueError as exc:
        raise ConfigError([f"network: {exc}"]) from exc

    return ExperimentSpec(experiment=experiment, seed=seed, n_trials=trials,
                          outdir=outdir, bbars=bbars,
                          window_multiplier=mult, params=params,
                          budget=budget)


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def resolved_dict(spec):
    """Canonical JSON-ready view of a resolved spec, used by manifests and
    the config hash."""
    p = spec.params
    return {
        "experiment": spec.experiment,
        "seed": spec.seed,
        "trials": spec.n_trials,
        "out": spec.outdir,
        "bbar": None if spec.bbars is None else list(spec.bbars),
        "window_multiplier": spec.window_multiplier,
        "network": {
            "bs_intensity": p.bs_intensity,
            "antennas": p.antennas,
            "users_per_bs": p.users_per_bs,
            "cluster_radius": p.cluster_radius,
            "path_loss": {"d0": p.path_loss.d0, "alpha": p.path_loss.alpha},
            "link_budget": dict(spec.budget),
            "sinr_gap_db": float(units.linear_to_db(p.sinr_gap)),
            "resolved_sigma2": {"ul": p.sigma2_ul, "dl": p.sigma2_dl},
        },
    }


def config_hash(spec):
    blob = json.dumps(resolved_dict(spec), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
