"""Config ingestion, baseline table, parameter sweeps and verification runs.

All numeric CSV cells are fixed-point with six decimals so that output is
byte-stable across runs.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from clsc import oracle
from clsc.asymmetric import leader_foc_residuals, solve_asymmetric
from clsc.model import (
    AllocationMode,
    ChainParams,
    EquilibriumOutcome,
    EquilibriumWarning,
    MarketParams,
    ModelError,
    ParameterError,
    RegimeError,
)
from clsc.retailer import retailer_nash_prices
from clsc.symmetric import (
    SymmetricScenario,
    planner_wholesale,
    solve_symmetric,
    unilateral_wholesale,
)

SCHEMA = "clsc-config/1"

BASELINE_CONFIG = {
    "schema": SCHEMA,
    "symmetric": {
        "d_bar": 200.0, "alpha": 4.0, "epsilon": 0.4, "c": 20.0, "v": 60.0,
        "k": 10.0, "theta": 0.3, "beta": 1.2, "gamma_r": 10.0,
    },
    "mode": "inertia",
    "solver": {"tol": 1e-10, "max_iter": 10000},
}

# Reported baseline table: (w, p, b, Q_r) per allocation rule.
REPORTED_TABLE = {
    AllocationMode.PROPORTIONAL: (49.17, 63.17, 0.00, 31.50),
    AllocationMode.INERTIA_RESPONSIVENESS: (47.65, 62.45, 8.33, 36.90),
}

SYMMETRIC_NAMES = tuple(f.name for f in fields(SymmetricScenario))
MARKET_NAMES = tuple(f.name for f in fields(MarketParams))
CHAIN_NAMES = tuple(f.name for f in fields(ChainParams))
PAIRED = {
    "d_bar": ("d_bar_1", "d_bar_2"), "alpha": ("alpha_1", "alpha_2"),
    "c": ("c_1", "c_2"), "v": ("v_1", "v_2"), "k": ("k_1", "k_2"),
    "beta": ("beta_1", "beta_2"), "o_m": ("o_m_1", "o_m_2"), "o_r": ("o_r_1", "o_r_2"),
}
SWEEP_PARAMS = SYMMETRIC_NAMES + tuple(n for pair in PAIRED.values() for n in pair)

OUTPUT_VOCAB = ("w", "p", "b", "D", "q_tot", "q_r", "profit_m", "profit_r",
                "regime", "w_planner", "w_unilateral")
PER_FIRM = ("w", "p", "b", "D", "q_r", "profit_m", "profit_r")
SYMMETRIC_ONLY = ("w_planner", "w_unilateral")


class ConfigError(ModelError):
    """A config file could not be parsed or failed validation."""


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    market: MarketParams
    chain: ChainParams
    mode: AllocationMode = AllocationMode.INERTIA_RESPONSIVENESS
    tol: float = 1e-10
    max_iter: int = 10_000

    @property
    def is_symmetric(self) -> bool:
        m, c = self.market, self.chain
        return all(
            getattr(m, a) == getattr(m, b) if a in MARKET_NAMES else getattr(c, a) == getattr(c, b)
            for a, b in PAIRED.values()
        )

    def scenario(self) -> SymmetricScenario:
        if not self.is_symmetric:
            raise RegimeError("config is not symmetric")
        m, c = self.market, self.chain
        return SymmetricScenario(
            d_bar=m.d_bar_1, alpha=m.alpha_1, epsilon=m.epsilon, c=c.c_1, v=c.v_1,
            k=c.k_1, theta=c.theta, beta=c.beta_1, gamma_r=c.gamma_r,
            o_m=c.o_m_1, o_r=c.o_r_1,
        )

    def with_param(self, name: str, value: float) -> ScenarioConfig:
        """Copy with one parameter changed; symmetric names set both firms."""
        if name not in SWEEP_PARAMS:
            raise ParameterError(name, f"not a sweepable parameter; choose from {', '.join(SWEEP_PARAMS)}")
        targets = PAIRED.get(name, (name,))
        m_changes = {t: value for t in targets if t in MARKET_NAMES}
        c_changes = {t: value for t in targets if t in CHAIN_NAMES}
        return replace(self, market=replace(self.market, **m_changes),
                       chain=replace(self.chain, **c_changes))


def _take(block: dict, allowed: Sequence[str], where: str) -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}: unknown key")
    out = {}
    for key in allowed:
        if key not in block:
            continue
        value = block[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}.{key}: expected a number, got {value!r}")
        out[key] = float(value)
    return out


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Validate a decoded config; every error names the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    allowed = {"schema", "symmetric", "market", "chain", "mode", "solver"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown top-level key")
    if raw.get("schema") != SCHEMA:
        raise ConfigError(f"schema: expected {SCHEMA!r}, got {raw.get('schema')!r}")

    market: dict[str, float] = {}
    chain: dict[str, float] = {"o_m_1": 0.0, "o_m_2": 0.0, "o_r_1": 0.0, "o_r_2": 0.0}
    if "symmetric" in raw:
        sym = _take(raw["symmetric"], SYMMETRIC_NAMES, "symmetric")
        for name, value in sym.items():
            for target in PAIRED.get(name, (name,)):
                (market if target in MARKET_NAMES else chain)[target] = value
    if "market" in raw:
        market.update(_take(raw["market"], MARKET_NAMES, "market"))
    if "chain" in raw:
        chain.update(_take(raw["chain"], CHAIN_NAMES, "chain"))

    for block, names, where in ((market, MARKET_NAMES, "market"), (chain, CHAIN_NAMES, "chain")):
        missing = [n for n in names if n not in block]
        if missing:
            raise ConfigError(f"{where}.{missing[0]}: missing (give it in '{where}' or 'symmetric')")
    try:
        m = MarketParams(**market)
    except ParameterError as exc:
        raise ConfigError(f"market.{exc}") from None
    try:
        c = ChainParams(**chain)
    except ParameterError as exc:
        raise ConfigError(f"chain.{exc}") from None

    try:
        mode = AllocationMode(raw.get("mode", "inertia"))
    except ValueError:
        raise ConfigError(f"mode: expected 'proportional' or 'inertia', got {raw.get('mode')!r}") from None

    solver = raw.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("solver: expected an object")
    unknown = sorted(set(solver) - {"tol", "max_iter"})
    if unknown:
        raise ConfigError(f"solver.{unknown[0]}: unknown key")
    tol = solver.get("tol", 1e-10)
    max_iter = solver.get("max_iter", 10_000)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
        raise ConfigError(f"solver.tol: must be a positive number, got {tol!r}")
    if isinstance(max_iter, bool) or not isinstance(max_iter, int) or max_iter < 1:
        raise ConfigError(f"solver.max_iter: must be an integer >= 1, got {max_iter!r}")
    return ScenarioConfig(m, c, mode, float(tol), max_iter)


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(raw)


def baseline_config() -> ScenarioConfig:
    return config_from_dict(BASELINE_CONFIG)


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------


def fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    text = f"{x:.6f}"
    return "0.000000" if text == "-0.000000" else text


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


def solve(config: ScenarioConfig, symmetric: bool | None = None, *,
          printed: bool = False) -> EquilibriumOutcome:
    """Closed form for symmetric configs, the full leader-stage solve otherwise."""
    if symmetric is None:
        symmetric = config.is_symmetric
    if symmetric and not printed:
        return solve_symmetric(config.scenario(), config.mode)
    return solve_asymmetric(config.market, config.chain, config.tol, config.max_iter,
                            mode=config.mode, printed=printed)


# ---------------------------------------------------------------------------
# Baseline table
# ---------------------------------------------------------------------------

BASELINE_HEADER = ("mode", "source", "w", "p", "b", "q_tot", "q_r_per_firm",
                   "profit_m", "profit_r", "regime", "w_unilateral", "deviation_note")


def baseline_rows(config: ScenarioConfig, modes: Sequence[AllocationMode]) -> list[tuple]:
    """One formula row per mode, plus the reported table when the config is the baseline."""
    if not config.is_symmetric:
        raise ConfigError("baseline: needs a symmetric config")
    scenario = config.scenario()
    base = baseline_config()
    is_reference = config.market == base.market and config.chain == base.chain
    rows, reference = [], []
    for mode in modes:
        out = solve_symmetric(scenario, mode)
        dec = out.decision
        note = ""
        if is_reference:
            w_t, p_t, b_t, q_t = REPORTED_TABLE[mode]
            diffs = [name for name, ours, theirs in
                     (("w", dec.w_1, w_t), ("p", out.prices.p_1, p_t),
                      ("b", dec.b_1, b_t), ("q_tot", out.q_tot, q_t))
                     if abs(ours - theirs) > 0.005]
            if diffs:
                note = "closed form differs from reported table in " + " ".join(diffs)
            reference.append((mode.value, "paper_reference", w_t, p_t, b_t, q_t,
                              None, None, None, None, None, ""))
        rows.append((mode.value, "formula", dec.w_1, out.prices.p_1, dec.b_1, out.q_tot,
                     out.q_r_1, out.profit_m_1, out.profit_r_1, out.regime,
                     unilateral_wholesale(scenario, mode), note))
    return rows + reference


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Axis:
    name: str
    low: float
    high: float
    steps: int

    def __post_init__(self):
        if self.name not in SWEEP_PARAMS:
            raise ParameterError(self.name, f"not a sweepable parameter; choose from {', '.join(SWEEP_PARAMS)}")
        if not self.steps >= 2:
            raise ParameterError("steps", f"need at least 2 steps, got {self.steps}")
        if not self.low < self.high:
            raise ParameterError("from", f"low ({self.low}) must be below high ({self.high})")

    def values(self) -> list[float]:
        return [float(x) for x in np.linspace(self.low, self.high, self.steps)]


@dataclass(frozen=True)
class SweepSpec:
    axis_1: Axis
    axis_2: Axis | None = None
    outputs: tuple[str, ...] = field(default=OUTPUT_VOCAB)

    def __post_init__(self):
        for name in self.outputs:
            if name not in OUTPUT_VOCAB:
                raise ParameterError("outputs", f"unknown column {name!r}; choose from {', '.join(OUTPUT_VOCAB)}")
        if self.axis_2 is not None and self.axis_2.name == self.axis_1.name:
            raise ParameterError("param2", "must differ from the first parameter")

    def points(self) -> list[tuple[float, ...]]:
        """Grid in row-major order (first axis outermost)."""
        xs = self.axis_1.values()
        if self.axis_2 is None:
            return [(x,) for x in xs]
        ys = self.axis_2.values()
        return [(x, y) for x in xs for y in ys]


def _sweep_is_symmetric(config: ScenarioConfig, spec: SweepSpec) -> bool:
    axes = [spec.axis_1] + ([spec.axis_2] if spec.axis_2 else [])
    return config.is_symmetric and all(a.name in SYMMETRIC_NAMES for a in axes)


def sweep_header(config: ScenarioConfig, spec: SweepSpec) -> list[str]:
    symmetric = _sweep_is_symmetric(config, spec)
    header = [spec.axis_1.name] + ([spec.axis_2.name] if spec.axis_2 else []) + ["status"]
    for name in spec.outputs:
        if name in SYMMETRIC_ONLY and not symmetric:
            continue
        if name in PER_FIRM and (not symmetric or name == "q_r"):
            header += [f"{name}_1", f"{name}_2"]
        else:
            header.append(name)
    return header


def _row_values(out: EquilibriumOutcome, config: ScenarioConfig, spec: SweepSpec,
                symmetric: bool) -> list[Any]:
    dec, p = out.decision, out.prices
    per_firm = {
        "w": (dec.w_1, dec.w_2), "p": (p.p_1, p.p_2), "b": (dec.b_1, dec.b_2),
        "D": (out.demand_1, out.demand_2), "q_r": (out.q_r_1, out.q_r_2),
        "profit_m": (out.profit_m_1, out.profit_m_2),
        "profit_r": (out.profit_r_1, out.profit_r_2),
    }
    values: list[Any] = []
    for name in spec.outputs:
        if name in SYMMETRIC_ONLY:
            if not symmetric:
                continue
            s = config.scenario()
            values.append(planner_wholesale(s) if name == "w_planner"
                          else unilateral_wholesale(s, config.mode))
        elif name == "q_tot":
            values.append(out.q_tot)
        elif name == "regime":
            values.append(out.regime)
        elif symmetric and name != "q_r":
            values.append(per_firm[name][0])
        else:
            values.extend(per_firm[name])
    return values


def _evaluate(config: ScenarioConfig, spec: SweepSpec, point: tuple[float, ...],
              symmetric: bool, width: int) -> list[Any]:
    axes = [spec.axis_1] + ([spec.axis_2] if spec.axis_2 else [])
    try:
        cfg = config
        for axis, value in zip(axes, point):
            cfg = cfg.with_param(axis.name, value)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EquilibriumWarning)
            out = solve(cfg, symmetric)
        return [*point, "ok", *_row_values(out, cfg, spec, symmetric)]
    except (ModelError, ArithmeticError) as exc:
        return [*point, f"error: {exc}"] + [None] * width


def run_sweep(config: ScenarioConfig, spec: SweepSpec, jobs: int = 1) -> str:
    """Evaluate every grid point and return the CSV text.

    Points are independent; with ``jobs > 1`` they are evaluated on a thread
    pool, but rows are always written in grid order.
    """
    symmetric = _sweep_is_symmetric(config, spec)
    header = sweep_header(config, spec)
    width = len(header) - (3 if spec.axis_2 else 2)
    points = spec.points()

    def task(point):
        return _evaluate(config, spec, point, symmetric, width)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(task, points))
    else:
        rows = [task(pt) for pt in points]
    return to_csv(header, rows)


def figure_suite(config: ScenarioConfig) -> dict[str, tuple[ScenarioConfig, SweepSpec]]:
    """Sweeps behind the incentive, coupling and substitutability figures."""
    inertia = replace(config, mode=AllocationMode.INERTIA_RESPONSIVENESS)
    proportional = replace(config, mode=AllocationMode.PROPORTIONAL)
    return {
        "fig2_bonus_vs_beta": (inertia, SweepSpec(
            Axis("beta", 0.1, 3.0, 59), outputs=("b", "regime"))),
        "fig2_bonus_beta_gamma": (inertia, SweepSpec(
            Axis("beta", 0.1, 3.0, 40), Axis("gamma_r", 1.0, 30.0, 40), outputs=("b", "regime"))),
        "fig3_wholesale_vs_v": (proportional, SweepSpec(
            Axis("v", 20.0, 100.0, 81), outputs=("w", "regime"))),
        "fig3_returns_beta_gamma": (inertia, SweepSpec(
            Axis("beta", 0.1, 3.0, 40), Axis("gamma_r", 1.0, 30.0, 40), outputs=("q_tot", "b", "regime"))),
        "fig4_prices_vs_epsilon": (inertia, SweepSpec(
            Axis("epsilon", 0.0, 0.95, 96), outputs=("w", "p", "regime"))),
        "fig5_returns_vs_epsilon": (inertia, SweepSpec(
            Axis("epsilon", 0.0, 0.95, 96), outputs=("q_tot", "D", "regime"))),
        "fig5_returns_epsilon_beta": (inertia, SweepSpec(
            Axis("epsilon", 0.0, 0.95, 40), Axis("beta", 0.1, 3.0, 40), outputs=("q_tot", "b", "regime"))),
    }


def run_figures(config: ScenarioConfig, jobs: int = 1) -> dict[str, str]:
    return {name: run_sweep(cfg, spec, jobs) for name, (cfg, spec) in figure_suite(config).items()}


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    name: str
    value: float
    tolerance: float
    required: bool = True

    @property
    def passed(self) -> bool:
        return self.value <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        suffix = "" if self.required else " (informational)"
        return f"{self.name},{self.value:.3e},{self.tolerance:.0e},{status}{suffix}"


def _gain_cert(name: str, report: oracle.DeviationReport, required: bool = True) -> Certificate:
    return Certificate(name, report.best_deviation_gain, report.tolerance, required)


def verify(config: ScenarioConfig, grid: int = 4001, seed: int = oracle.DEFAULT_SEED,
           *, printed: bool = False) -> list[Certificate]:
    """Run every oracle certificate on the subgame-perfect equilibrium of ``config``.

    The equilibrium is the full leader-stage solve (bonus game, then the
    joint wholesale conditions). For symmetric configs the symmetric closed
    form is also checked along the symmetric path; its unilateral wholesale
    gain is reported as informational.
    """
    m, c = config.market, config.chain
    gen = oracle.rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EquilibriumWarning)
        out = solve_asymmetric(m, c, config.tol, config.max_iter, mode=config.mode, printed=printed)
    dec = out.decision
    proportional = config.mode is AllocationMode.PROPORTIONAL
    share = 0.5 if proportional else None
    certs: list[Certificate] = []

    r1, r2 = oracle.verify_retailer_nash((dec.w_1, dec.w_2), m, c, grid)
    certs += [_gain_cert("retailer_1_deviation", r1), _gain_cert("retailer_2_deviation", r2)]

    iterated, _, converged = oracle.iterate_retailer_best_response((dec.w_1, dec.w_2), m, c)
    closed = retailer_nash_prices(dec.w_1, dec.w_2, m)
    gap = max(abs(iterated.p_1 - closed.p_1), abs(iterated.p_2 - closed.p_2))
    certs.append(Certificate("retailer_iterated_best_response", gap if converged else math.inf, 1e-6))

    for i in (1, 2):
        certs.append(_gain_cert(f"wholesale_{i}_deviation",
                                oracle.verify_wholesale_optimum(i, dec, m, c, grid, share=share)))
    if not proportional:
        for i in (1, 2):
            certs.append(_gain_cert(f"bonus_{i}_deviation",
                                    oracle.verify_bonus_optimum(i, dec, m, c, grid)))

    numeric = oracle.foc_residuals(dec, m, c, share=share)
    analytic = leader_foc_residuals(dec, m, c, shares=(0.5, 0.5) if proportional else None)
    certs.append(Certificate("wholesale_foc_residual", max(abs(x) for x in analytic[:2]), 1e-7))
    certs.append(Certificate("wholesale_foc_analytic_vs_numeric",
                             max(abs(a - b) for a, b in zip(analytic[:2], numeric[:2])), 1e-6))
    interior = [r for r, reg in zip(numeric[2:], out.bonus_regime) if reg.value == "INTERIOR"]
    if not proportional:
        certs.append(Certificate("bonus_foc_residual", max((abs(r) for r in interior), default=0.0), 1e-9))

    errs = []
    for _ in range(100):
        b = tuple(float(x) for x in gen.uniform(0.0, 30.0, size=2))
        errs.append(oracle.gradient_check("allocation_gradient", {"chain": c, "b": b}, 1e-6))
    certs.append(Certificate("allocation_gradient_fd", max(errs), 1e-6))
    certs.append(Certificate(
        "demand_jacobian_fd",
        oracle.gradient_check("demand_jacobian", {"market": m, "w": (dec.w_1, dec.w_2)}, 1e-3),
        1e-8))

    if config.is_symmetric and not printed:
        s = config.scenario()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EquilibriumWarning)
            closed_form = solve_symmetric(s, config.mode)
        cdec = closed_form.decision
        certs.append(_gain_cert("closed_form_symmetric_path",
                                oracle.verify_joint_wholesale_optimum(cdec, m, c, grid, share=0.5)))
        certs.append(Certificate("closed_form_vs_solver_bonus", abs(cdec.b_1 - dec.b_1), 1e-8))
        try:
            certs.append(Certificate(
                "coupling_slopes_fd",
                oracle.gradient_check("coupling_slopes", {"scenario": s, "mode": config.mode}, 1e-4),
                1e-6))
        except RegimeError:
            pass
        certs.append(_gain_cert(
            "closed_form_unilateral_wholesale",
            oracle.verify_wholesale_optimum(1, cdec, m, c, grid, share=0.5),
            required=False))
    return certs
