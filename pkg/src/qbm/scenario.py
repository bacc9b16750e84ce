"""Scenario configs, parameter sweeps and deterministic CSV datasets.

Config grammar: one ``key = value`` per line, ``#`` starts a comment, lists
are comma separated. Example::

    figure = WitnessQfi
    tau_grid = 0, 5, 201        # start, stop, count
    x_list = 0.15, 5.0
    theta_T_list = 1000, 10
    regime_list = HighT, LowT   # paired with theta_T_list (pairing = zip)
    gamma_list = 0, 1, 2

Rows are ``quantity,x,theta_T,regime,gamma,tau,value`` (Wigner datasets add
``q`` and ``p`` before ``value``), sorted by quantity, x, theta_T, gamma, tau.
Floats are written with ``repr``, the shortest string that round-trips.
"""

from __future__ import annotations

import enum
import io
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    CovMatrix,
    GaussianState,
    ProbeSpec,
    channel_curve,
    evolve_cov,
    initial_correlated_state,
    purity_from_cov,
    wigner_grid,
)
from .coeffs import BathSpec, Regime, closed_form_coefficients, quantifier
from .metrology import EstimationTarget, FdSpec, qfi_curve
from .quadrature import QuadSpec

__all__ = [
    "Figure",
    "TauGrid",
    "ScenarioConfig",
    "ConfigParseError",
    "ConfigValidationError",
    "CSV_HEADER",
    "WIGNER_HEADER",
    "QUANTITIES",
    "parse_config",
    "serialize_config",
    "run_scenario",
    "dataset_text",
    "write_dataset",
    "read_dataset",
    "summarize",
    "format_summary",
    "sign_changes",
    "WORKERS_ENV",
]

CSV_HEADER = "quantity,x,theta_T,regime,gamma,tau,value"
WIGNER_HEADER = "quantity,x,theta_T,regime,gamma,tau,q,p,value"
QUANTITIES = ("N", "mu", "T2_F_T", "F_x", "F_gamma", "W")
WORKERS_ENV = "QBM_WORKERS"


class Figure(str, enum.Enum):
    QUANTIFIERS = "Quantifiers"
    THERMOMETRY = "Thermometry"
    WITNESS_QFI = "WitnessQfi"
    WITNESS_VS_N = "WitnessVsN"
    GAMMA_QFI = "GammaQfi"
    WIGNER = "Wigner"


FIGURE_QUANTITIES = {
    Figure.QUANTIFIERS: ("N", "mu"),
    Figure.THERMOMETRY: ("T2_F_T",),
    Figure.WITNESS_QFI: ("F_x",),
    Figure.WITNESS_VS_N: ("F_x", "N"),
    Figure.GAMMA_QFI: ("F_gamma",),
    Figure.WIGNER: ("W",),
}


class ConfigParseError(ValueError):
    """Malformed config text; the message names the line and key."""


class ConfigValidationError(ValueError):
    """One or more config invariants are violated."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


@dataclass(frozen=True)
class TauGrid:
    start: float = 0.0
    stop: float = 5.0
    count: int = 201

    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario. Build one with :func:`parse_config` or directly."""

    figure: Figure
    tau_grid: TauGrid = TauGrid()
    x_list: tuple = (0.15, 5.0)
    theta_T_list: tuple = (1000.0, 10.0)
    regime_list: tuple = (Regime.HIGH_T, Regime.LOW_T)
    gamma_list: tuple = (0.0, 1.0, 2.0)
    alpha: float = 0.1
    fd: FdSpec = FdSpec()
    quad: QuadSpec = QuadSpec()
    pairing: str = "zip"
    q_grid: TauGrid = TauGrid(-4.0, 4.0, 81)
    p_grid: TauGrid = TauGrid(-4.0, 4.0, 81)
    output_path: str = ""
    workers: int = 0  # 0 means: environment variable, else 1

    def __post_init__(self):
        object.__setattr__(self, "figure", Figure(self.figure))
        object.__setattr__(self, "regime_list", tuple(Regime(r) for r in self.regime_list))
        for name in ("x_list", "theta_T_list", "gamma_list"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        problems = []
        g = self.tau_grid
        if g.count < 2:
            problems.append(f"tau_grid: count must be >= 2, got {g.count}")
        if not (g.stop > g.start >= 0):
            problems.append(f"tau_grid: need stop > start >= 0, got start={g.start}, stop={g.stop}")
        for name in ("x_list", "theta_T_list", "regime_list", "gamma_list"):
            if not getattr(self, name):
                problems.append(f"{name}: must not be empty")
        if any(not v > 0 for v in self.x_list):
            problems.append("x_list: entries must be positive")
        if any(not v > 0 for v in self.theta_T_list):
            problems.append("theta_T_list: entries must be positive")
        if any(not np.isfinite(v) for v in self.gamma_list):
            problems.append("gamma_list: entries must be finite")
        if not self.alpha > 0:
            problems.append(f"alpha: must be positive, got {self.alpha}")
        if self.pairing not in ("zip", "product"):
            problems.append(f"pairing: must be 'zip' or 'product', got {self.pairing!r}")
        elif self.pairing == "zip":
            n_t, n_r = len(self.theta_T_list), len(self.regime_list)
            if n_t and n_r and n_t != n_r and 1 not in (n_t, n_r):
                problems.append(
                    f"pairing = zip needs theta_T_list and regime_list of equal length "
                    f"(or one of length 1), got {n_t} and {n_r}"
                )
        for name in ("q_grid", "p_grid"):
            ax = getattr(self, name)
            if ax.count < 2 or not ax.stop > ax.start:
                problems.append(f"{name}: need count >= 2 and stop > start")
        if self.workers < 0:
            problems.append(f"workers: must be >= 0, got {self.workers}")
        if problems:
            raise ConfigValidationError(problems)

    def panels(self):
        """(theta_T, regime) pairs in config order."""
        if self.pairing == "product":
            return list(itertools.product(self.theta_T_list, self.regime_list))
        n = max(len(self.theta_T_list), len(self.regime_list))
        thetas = self.theta_T_list * n if len(self.theta_T_list) == 1 else self.theta_T_list
        regimes = self.regime_list * n if len(self.regime_list) == 1 else self.regime_list
        return list(zip(thetas, regimes))


# --------------------------------------------------------------------------
# config text


def _floats(text, key, lineno):
    try:
        return tuple(float(v) for v in _items(text))
    except ValueError:
        raise ConfigParseError(f"line {lineno}: {key}: expected numbers, got {text!r}") from None


def _items(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _grid(text, key, lineno):
    parts = _items(text)
    if len(parts) != 3:
        raise ConfigParseError(f"line {lineno}: {key}: expected 'start, stop, count', got {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise ConfigParseError(f"line {lineno}: {key}: bad grid {text!r}") from None
    return TauGrid(start, stop, count)


def _one_float(text, key, lineno):
    try:
        return float(text)
    except ValueError:
        raise ConfigParseError(f"line {lineno}: {key}: expected a number, got {text!r}") from None


def _one_int(text, key, lineno):
    try:
        return int(text)
    except ValueError:
        raise ConfigParseError(f"line {lineno}: {key}: expected an integer, got {text!r}") from None


_KEYS = (
    "figure", "tau_grid", "x_list", "theta_T_list", "regime_list", "gamma_list", "alpha",
    "fd_rel_step", "fd_min_step", "quad_abs_tol", "quad_rel_tol", "pairing",
    "q_grid", "p_grid", "output_path", "workers",
)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate config text.

    Raises:
        ConfigParseError: On syntax errors, unknown or repeated keys.
        ConfigValidationError: Listing every violated invariant.
    """
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigParseError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigParseError(f"line {lineno}: key {key!r} repeated (first on line {seen[key][0]})")
        seen[key] = (lineno, value)
    if "figure" not in seen:
        raise ConfigParseError("missing required key 'figure'")

    kw = {}
    fd_kw, quad_kw = {}, {}
    for key, (lineno, value) in seen.items():
        if key == "figure":
            try:
                kw["figure"] = Figure(value)
            except ValueError:
                choices = ", ".join(f.value for f in Figure)
                raise ConfigParseError(f"line {lineno}: figure: {value!r} not one of {choices}") from None
        elif key in ("tau_grid", "q_grid", "p_grid"):
            kw[key] = _grid(value, key, lineno)
        elif key in ("x_list", "theta_T_list", "gamma_list"):
            kw[key] = _floats(value, key, lineno)
        elif key == "regime_list":
            try:
                kw[key] = tuple(Regime(v) for v in _items(value))
            except ValueError:
                raise ConfigParseError(f"line {lineno}: regime_list: expected HighT/LowT, got {value!r}") from None
        elif key == "alpha":
            kw[key] = _one_float(value, key, lineno)
        elif key == "fd_rel_step":
            fd_kw["rel_step"] = _one_float(value, key, lineno)
        elif key == "fd_min_step":
            fd_kw["min_step"] = _one_float(value, key, lineno)
        elif key == "quad_abs_tol":
            quad_kw["abs_tol"] = _one_float(value, key, lineno)
        elif key == "quad_rel_tol":
            quad_kw["rel_tol"] = _one_float(value, key, lineno)
        elif key == "workers":
            kw[key] = _one_int(value, key, lineno)
        else:  # pairing, output_path
            kw[key] = value
    problems = []
    try:
        kw["fd"] = FdSpec(**fd_kw)
    except ValueError as exc:
        problems.append(f"fd: {exc}")
    try:
        kw["quad"] = QuadSpec(**quad_kw)
    except ValueError as exc:
        problems.append(f"quad: {exc}")
    try:
        cfg = ScenarioConfig(**kw)
    except ConfigValidationError as exc:
        problems.extend(exc.problems)
        cfg = None
    if problems:
        raise ConfigValidationError(problems)
    return cfg


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v) + 0.0)
    return str(v)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Config text that :func:`parse_config` maps back to ``cfg``."""
    def grid(g):
        return f"{_fmt(g.start)}, {_fmt(g.stop)}, {g.count}"

    lines = [
        f"figure = {cfg.figure.value}",
        f"tau_grid = {grid(cfg.tau_grid)}",
        "x_list = " + ", ".join(_fmt(v) for v in cfg.x_list),
        "theta_T_list = " + ", ".join(_fmt(v) for v in cfg.theta_T_list),
        "regime_list = " + ", ".join(r.value for r in cfg.regime_list),
        "gamma_list = " + ", ".join(_fmt(v) for v in cfg.gamma_list),
        f"alpha = {_fmt(cfg.alpha)}",
        f"fd_rel_step = {_fmt(cfg.fd.rel_step)}",
        f"fd_min_step = {_fmt(cfg.fd.min_step)}",
        f"quad_abs_tol = {_fmt(cfg.quad.abs_tol)}",
        f"quad_rel_tol = {_fmt(cfg.quad.rel_tol)}",
        f"pairing = {cfg.pairing}",
        f"q_grid = {grid(cfg.q_grid)}",
        f"p_grid = {grid(cfg.p_grid)}",
        f"workers = {cfg.workers}",
    ]
    if cfg.output_path:
        lines.append(f"output_path = {cfg.output_path}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# running


@dataclass(frozen=True)
class _Task:
    figure: Figure
    x: float
    theta_T: float
    regime: Regime
    cfg: ScenarioConfig = field(compare=False)


def _n_curve(tau, bath):
    # N -> 0 as tau -> 0+ because Delta ~ tau dominates Gamma ~ tau^3 and Pi ~ tau^2
    out = np.zeros_like(tau)
    pos = tau > 0
    if pos.any():
        cf = closed_form_coefficients(tau[pos], bath, stable=True)
        out[pos] = quantifier(cf.gamma, cf.delta, cf.pi)
    return out


def _run_task(task: _Task):
    cfg = task.cfg
    tau = cfg.tau_grid.points()
    bath = BathSpec(x=task.x, alpha=cfg.alpha, theta_T=task.theta_T, regime=task.regime)
    key = (task.x, task.theta_T, task.regime.value)
    rows = []

    def emit(quantity, gamma, values):
        for t, v in zip(tau, values):
            rows.append((quantity, *key, float(gamma), float(t), float(v)))

    fig = task.figure
    n_values = _n_curve(tau, bath) if fig in (Figure.QUANTIFIERS, Figure.WITNESS_VS_N) else None
    for gamma in cfg.gamma_list:
        probe = ProbeSpec(gamma)
        if n_values is not None:
            emit("N", gamma, n_values)
        if fig is Figure.QUANTIFIERS:
            curve = channel_curve(tau, bath, cfg.quad)
            sigma = evolve_cov(initial_correlated_state(probe).sigma.as_array(), curve)
            emit("mu", gamma, purity_from_cov(sigma))
        elif fig is Figure.THERMOMETRY:
            f = qfi_curve(EstimationTarget.TEMPERATURE, probe, bath, tau, cfg.fd, cfg.quad).f_value
            emit("T2_F_T", gamma, task.theta_T**2 * f)
        elif fig in (Figure.WITNESS_QFI, Figure.WITNESS_VS_N):
            f = qfi_curve(EstimationTarget.WITNESS_X, probe, bath, tau, cfg.fd, cfg.quad).f_value
            emit("F_x", gamma, f)
        elif fig is Figure.GAMMA_QFI:
            f = qfi_curve(EstimationTarget.CORRELATION_GAMMA, probe, bath, tau, cfg.fd, cfg.quad).f_value
            emit("F_gamma", gamma, f)
        elif fig is Figure.WIGNER:
            curve = channel_curve(tau, bath, cfg.quad)
            sigma = evolve_cov(initial_correlated_state(probe).sigma.as_array(), curve)
            q, p = cfg.q_grid.points(), cfg.p_grid.points()
            for t, s in zip(tau, sigma):
                w = wigner_grid(GaussianState(CovMatrix.from_array(s)), q, p).values
                for i, j in itertools.product(range(q.size), range(p.size)):
                    rows.append(("W", *key, float(gamma), float(t), float(q[i]), float(p[j]), float(w[i, j])))
    return rows


def _resolve_workers(cfg: ScenarioConfig, override=None) -> int:
    if override:
        return int(override)
    if cfg.workers:
        return cfg.workers
    env = os.environ.get(WORKERS_ENV, "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        if n >= 1:
            return n
    return 1


def _sort_key(row):
    # quantity, x, theta_T, gamma, tau; regime then (q, p) break remaining ties
    return (row[0], row[1], row[2], row[4], row[5], row[3]) + tuple(row[6:-1])


def run_scenario(cfg: ScenarioConfig, workers=None) -> list:
    """Evaluate every requested curve; returns sorted row tuples.

    Work is split per (x, theta_T, regime) panel. Rows are sorted after
    collection, so the result does not depend on the worker count.
    """
    tasks = [_Task(cfg.figure, x, th, reg, cfg) for x in cfg.x_list for th, reg in cfg.panels()]
    n = min(_resolve_workers(cfg, workers), len(tasks))
    if n <= 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_task, tasks))
    rows = [row for chunk in results for row in chunk]
    for row in rows:
        if not np.isfinite(row[-1]):
            raise ArithmeticError(f"non-finite value in row {row}")
    rows.sort(key=_sort_key)
    return rows


def dataset_text(rows, figure: Figure) -> str:
    header = WIGNER_HEADER if Figure(figure) is Figure.WIGNER else CSV_HEADER
    buf = io.StringIO()
    buf.write(header + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_dataset(rows, figure: Figure, path: str):
    """Write atomically: the file appears complete or not at all."""
    tmp = f"{path}.partial"
    try:
        with open(tmp, "w", encoding="ascii", newline="\n") as fh:
            fh.write(dataset_text(rows, figure))
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


# --------------------------------------------------------------------------
# summaries


def read_dataset(text: str):
    """Parse CSV text into ``{curve_key: (tau, values)}``.

    Raises:
        ValueError: On an unexpected header or malformed row.
    """
    lines = text.splitlines()
    if not lines or lines[0] not in (CSV_HEADER, WIGNER_HEADER):
        raise ValueError(f"unexpected header {lines[0] if lines else ''!r}")
    wigner = lines[0] == WIGNER_HEADER
    width = 9 if wigner else 7
    curves = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != width:
            raise ValueError(f"line {lineno}: expected {width} fields, got {len(parts)}")
        try:
            quantity, regime = parts[0], parts[3]
            x, th, g, t = (float(v) for v in (parts[1], parts[2], parts[4], parts[5]))
            value = float(parts[-1])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed number") from None
        if quantity not in QUANTITIES:
            raise ValueError(f"line {lineno}: unknown quantity {quantity!r}")
        key = (quantity, x, th, regime, g)
        if wigner:
            key = key + (t,)
            t = (float(parts[6]), float(parts[7]))
        curves.setdefault(key, ([], []))
        curves[key][0].append(t)
        curves[key][1].append(value)
    return {k: (np.array(v[0]), np.array(v[1])) for k, v in curves.items()}


def sign_changes(values, tol: float = 0.0) -> int:
    """Sign changes of the forward difference, ignoring steps with ``|diff| <= tol``."""
    d = np.diff(np.asarray(values, dtype=float))
    s = np.sign(d[np.abs(d) > tol])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def gain_window(tau, gain) -> float:
    """Length of ``{tau > 0 : gain > 1}``, counting each grid cell whose right end qualifies."""
    tau = np.asarray(tau)
    gain = np.asarray(gain)
    widths = np.diff(tau)
    return float(widths[gain[1:] > 1].sum())


def summarize(text: str) -> dict:
    """Per-curve extrema, sign changes of dF/dtau and gain-window measures."""
    curves = read_dataset(text)
    out = {}
    for key, (tau, values) in sorted(curves.items()):
        label = _curve_label(key)
        if tau.ndim == 1:
            i, j = int(np.argmax(values)), int(np.argmin(values))
            out[f"{label}.max"] = float(values[i])
            out[f"{label}.argmax_tau"] = float(tau[i])
            out[f"{label}.min"] = float(values[j])
            out[f"{label}.argmin_tau"] = float(tau[j])
            out[f"{label}.sign_changes"] = sign_changes(values)
            quantity, x, th, regime, g = key
            ref = curves.get((quantity, x, th, regime, 0.0))
            if quantity.startswith(("F_", "T2_")) and g != 0.0 and ref is not None:
                ref_vals = ref[1]
                with np.errstate(divide="ignore", invalid="ignore"):
                    gain = np.where(ref_vals > 1e-30, values / np.where(ref_vals > 1e-30, ref_vals, 1.0), np.nan)
                finite = np.isfinite(gain)
                out[f"{label}.gain_max"] = float(np.max(gain[finite])) if finite.any() else float("nan")
                out[f"{label}.gain_window"] = gain_window(tau, np.where(finite, gain, 0.0))
        else:
            out[f"{label}.max"] = float(values.max())
            out[f"{label}.riemann_sum"] = float(_wigner_mass(tau, values))
    return out


def _wigner_mass(qp, values):
    q = np.unique(qp[:, 0])
    p = np.unique(qp[:, 1])
    grid = values.reshape(q.size, p.size)
    return np.einsum("i,ij,j->", np.gradient(q), grid, np.gradient(p))


def _curve_label(key):
    quantity, x, th, regime, g = key[:5]
    label = f"{quantity}[x={_fmt(x)},theta_T={_fmt(th)},regime={regime},gamma={_fmt(g)}"
    if len(key) > 5:
        label += f",tau={_fmt(key[5])}"
    return label + "]"


def format_summary(summary: dict) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in summary.items())
