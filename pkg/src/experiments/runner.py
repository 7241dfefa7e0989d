"""
LongJump - Experiment Runner

Builds the group, measure and geometry described by an experiment config,
dispatches to the engines and writes the artifacts:

    results.csv     data rows (17 significant digits, no locale)
    report.json     theory vs fitted values, pass flag
    metadata.json   seed, version, threads, wall time
    measure.json / geometry.json   dumps of the built objects
    manifest.json   every file above with its sha256
"""

import csv
import hashlib
import io
import json
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src import __version__
from src.analysis import (
    dirichlet_eigenvalue,
    fit_loglog,
    holder_fit,
    killed_eigenvalue,
    pseudo_poincare_constant,
    rayleigh_zeta,
)
from src.config.loader import ConfigLoader
from src.config.schema import ExperimentConfig, to_json
from src.geometry.adapted import (
    AdaptedGeometry,
    build_adapted_geometry,
    build_naive_geometry,
    geometry_from_weights,
    power_weights,
)
from src.groups.catalog import builtin_nilpotent_approx
from src.groups.elements import GroupKind
from src.kernels.engine import PowerCache, near_diagonal_profile, regularity_ratio, return_series
from src.measures.measure import JumpMeasure, build_measure
from src.models.results import ExperimentResult
from src.utils.errors import ExperimentError, FitError, LongJumpError
from src.utils.logger import LongJumpLogger
from src.walks.simulator import (
    WalkConfig,
    collision_return_estimate,
    exit_overshoot_prob,
    exit_time_stats,
    simulate,
)

Rows = List[List[Any]]


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def _dump_json(document: Any) -> str:
    return json.dumps(document, indent=2, sort_keys=True, default=_json_default) + "\n"


def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def render_csv(rows: Rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    return buffer.getvalue()


class ExperimentRunner:
    """
    Run one experiment and write its artifacts.

    Args:
        cfg: Parsed experiment config
        out_dir: Output directory (overrides cfg.output_dir)
        threads: Engine parallelism
    """

    def __init__(self, cfg: ExperimentConfig, out_dir: Optional[str] = None, threads: int = 1):
        self.cfg = cfg
        self.threads = max(int(threads), 1)
        self.out_dir = Path(out_dir or cfg.output_dir or Path("longjump-out") / cfg.experiment)
        self.logger = LongJumpLogger.get_logger()
        self.config = ConfigLoader.get_instance()

        self.spec = cfg.group_spec()
        self.approx = builtin_nilpotent_approx(self.spec)
        self.measure: Optional[JumpMeasure] = None
        self.geom: Optional[AdaptedGeometry] = None
        self.warnings: List[str] = []

    # ------------------------------------------------------------------
    # Entry point
    # ------------------------------------------------------------------

    def run(self) -> ExperimentResult:
        """Run the experiment; never raises."""
        cfg = self.cfg
        result = ExperimentResult(experiment=cfg.experiment)
        started = time.perf_counter()
        self.logger.info(f"Running {cfg.experiment} on {self.spec.label}")
        try:
            self.prepare()

            self.logger.debug(f"Step 3: running {cfg.experiment}")
            handler = getattr(self, "_run_" + cfg.experiment.replace("-", "_"), None)
            if handler is None:
                raise ExperimentError(f"No runner for experiment '{cfg.experiment}'")
            rows, report = handler()
            report.setdefault("experiment", cfg.experiment)
            report.setdefault("group", self.spec.label)
            report.setdefault("volume_exponent", self.geom.volume.exponent().degree)
            report.setdefault("w_star", self.geom.w_star)
            result.rows = rows
            result.report = report
            result.passed = bool(report.get("pass", False))
            result.success = True
        except LongJumpError as e:
            self.logger.error(f"{cfg.experiment} failed: {e}")
            result.errors.append(f"{type(e).__name__}: {e}")
        except Exception as e:
            self.logger.error(f"Unexpected error during {cfg.experiment}: {e}")
            result.errors.append(f"Unexpected error: {e}")

        result.warnings.extend(self.warnings)
        result.metadata = {
            "experiment": cfg.experiment,
            "group": self.spec.label,
            "seed": cfg.seed,
            "threads": self.threads,
            "version": __version__,
            "wall_time_seconds": round(time.perf_counter() - started, 3),
        }
        try:
            self.logger.debug("Step 4: writing artifacts")
            result.files = self._write_artifacts(result)
        except OSError as e:
            result.success = False
            result.errors.append(f"Cannot write artifacts to {self.out_dir}: {e}")

        self.logger.info(
            f"{cfg.experiment} {'passed' if result.passed else 'did not pass'}"
            f"{'' if result.success else ' (errors)'}; exit code {result.exit_code}"
        )
        return result

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    def prepare(self) -> AdaptedGeometry:
        """Build the measure (when configured) and the geometry."""
        self.logger.debug("Step 1: building measure")
        if self.cfg.measure is not None:
            self.measure = build_measure(self.cfg.measure_spec())
        self.logger.debug("Step 2: building geometry")
        self.geom = self.build_geometry()
        return self.geom

    def build_geometry(self) -> AdaptedGeometry:
        cfg = self.cfg
        if cfg.geometry.weights is not None:
            return geometry_from_weights(self.spec, self.approx, power_weights(cfg.geometry.weights), cfg.geometry.w_star)
        if cfg.geometry.naive:
            return build_naive_geometry(self.spec, self.approx, self.measure)
        return build_adapted_geometry(self.spec, self.approx, self.measure, cfg.geometry.w_star)

    def _tolerance(self, key: str) -> float:
        if self.cfg.tolerance is not None:
            return float(self.cfg.tolerance)
        return self.config.get_tolerance(key)

    def _walk_config(self, n: int = 0) -> WalkConfig:
        return WalkConfig(seed=int(self.cfg.seed), walkers=int(self.cfg.walkers), n=n, threads=self.threads)

    def naive_exponent(self) -> Optional[float]:
        if self.measure is None:
            return None
        try:
            return build_naive_geometry(self.spec, self.approx, self.measure).volume.exponent().degree
        except LongJumpError as e:
            self.warnings.append(f"Naive geometry unavailable: {e}")
            return None

    # ------------------------------------------------------------------
    # Experiments
    # ------------------------------------------------------------------

    def _run_return_exponent(self) -> Tuple[Rows, Dict[str, Any]]:
        cfg = self.cfg
        theory = -self.geom.volume.exponent().degree
        if cfg.uses_exact_kernels():
            series = return_series(self.measure, cfg.n_range, cfg.truncation_policy(self.threads))
            rows: Rows = [["n", "lower", "upper", "sup_norm", "dropped"]]
            rows += [[r.n, r.lower, r.upper, r.sup_norm, r.dropped] for r in series]
            points = [(r.n, r.lower) for r in series if r.n > 0 and r.lower > 0]
            # the exact D_inf fit is held to a tighter band than Z^k
            dihedral = self.spec.kind is GroupKind.DIHEDRAL_INF
            tolerance = self._tolerance("return-exponent-dihedral" if dihedral else "return-exponent-exact")
            method = "exact"
        else:
            rows = [["n", "return_time", "estimate", "stderr", "walkers", "seed", "low_information"]]
            points = []
            for n in cfg.n_range:
                est = collision_return_estimate(self.measure, n, self._walk_config(n))
                rows.append([n, 2 * n, est.estimate, est.stderr, est.walkers, est.seed, est.low_information])
                if est.low_information:
                    self.warnings.append(f"No collisions at n={n}; point left out of the fit")
                elif n > 0:
                    points.append((2 * n, est.estimate))
            tolerance = self._tolerance("return-exponent-collision")
            method = "collision"
        fit = fit_loglog(points)
        naive = self.naive_exponent()
        return rows, {
            "method": method,
            "theory_slope": theory,
            "naive_slope": None if naive is None else -naive,
            "fit": fit.to_dict(),
            "tolerance": tolerance,
            "pass": abs(fit.slope - theory) <= tolerance,
        }

    def _run_geometry_audit(self) -> Tuple[Rows, Dict[str, Any]]:
        exponent = self.geom.volume.exponent()
        rows: Rows = [["R", "ball_count", "volume"]]
        points = []
        for R in self.cfg.r_range:
            count = self.geom.ball_count(R)
            rows.append([R, count, self.geom.volume(R)])
            points.append((R, count))
        fit = fit_loglog(points)
        tolerance = self._tolerance("geometry-audit")
        return rows, {
            "theory_exponent": exponent.degree,
            "log_power": exponent.log_power,
            "loglog_power": exponent.loglog_power,
            "naive_exponent": self.naive_exponent(),
            "fit": fit.to_dict(),
            "tolerance": tolerance,
            "pass": abs(fit.slope - exponent.degree) <= tolerance,
        }

    def _run_near_diagonal(self) -> Tuple[Rows, Dict[str, Any]]:
        cfg = self.cfg
        cache = PowerCache(self.measure, cfg.truncation_policy(self.threads))
        rows: Rows = [["n", "eta", "min_ratio", "max_ratio", "ratio_at_identity", "ball_size", "volume"]]
        spreads = []
        for n in cfg.n_range:
            p = near_diagonal_profile(cache.power(n), self.geom, cfg.eta)
            rows.append([p.n, p.eta, p.min_ratio, p.max_ratio, p.ratio_at_identity, p.ball_size, p.volume])
            spreads.append(p.max_ratio / p.min_ratio if p.min_ratio > 0 else float("inf"))
        tolerance = self._tolerance("near-diagonal")
        return rows, {"max_spread": max(spreads), "tolerance": tolerance, "pass": max(spreads) <= tolerance}

    def _run_control(self) -> Tuple[Rows, Dict[str, Any]]:
        rows: Rows = [["n", "statistic", "level", "value"]]
        medians = []
        tables = {}
        for n in self.cfg.n_range:
            stats = simulate(self.measure, self.geom, self._walk_config(n))
            for q, value in sorted(stats.max_displacement_quantiles.items()):
                rows.append([n, "quantile", q, value])
            for eps, gamma in sorted(stats.control_table.items(), reverse=True):
                rows.append([n, "gamma", eps, gamma])
            tables[str(n)] = stats.control_table
            if n > 0:
                medians.append((n, float(np.median(stats.max_displacements))))
        tolerance = self._tolerance("control")
        report: Dict[str, Any] = {"theory_slope": self.geom.w_star, "control_tables": tables, "tolerance": tolerance}
        try:
            fit = fit_loglog(medians)
            report["fit"] = fit.to_dict()
            report["pass"] = abs(fit.slope - self.geom.w_star) <= tolerance
        except FitError as e:
            self.warnings.append(f"No growth fit: {e}")
            report["pass"] = all(np.isfinite(g) for t in tables.values() for g in t.values())
        return rows, report

    def _run_exit(self) -> Tuple[Rows, Dict[str, Any]]:
        cfg = self.cfg
        inverse_w = 1.0 / self.geom.w_star
        rows: Rows = [["kind", "r", "s", "value", "stderr", "normalized", "censored_fraction"]]
        normalized = []
        for r in cfg.r_range:
            stats = exit_time_stats(self.measure, self.geom, r, self._walk_config())
            scaled = stats.mean / r ** inverse_w
            normalized.append(scaled)
            rows.append(["exit", r, "", stats.mean, "", scaled, stats.censored_fraction])
            if stats.all_censored:
                self.warnings.append(f"Every walker was censored at r={r:g}")
        spread = max(normalized) / min(normalized)
        exit_tol = self._tolerance("exit-time")
        report: Dict[str, Any] = {
            "theory_exponent": inverse_w,
            "exit_spread": spread,
            "exit_tolerance": exit_tol,
        }
        passed = spread <= exit_tol
        if cfg.s_factors:
            r0 = cfg.r_range[0]
            points = []
            for factor in sorted(cfg.s_factors, reverse=True):
                s = factor * r0
                est = exit_overshoot_prob(self.measure, self.geom, r0, s, self._walk_config())
                rows.append(["overshoot", r0, s, est.estimate, est.stderr, "", ""])
                if est.estimate > 0:
                    points.append((r0 / s, est.estimate))
            overshoot_tol = self._tolerance("exit-overshoot")
            fit = fit_loglog(points)
            report["overshoot_fit"] = fit.to_dict()
            report["overshoot_tolerance"] = overshoot_tol
            passed = passed and abs(fit.slope - inverse_w) <= overshoot_tol
        report["pass"] = passed
        return rows, report

    def _run_holder(self) -> Tuple[Rows, Dict[str, Any]]:
        cfg = self.cfg
        policy = cfg.truncation_policy(self.threads)
        cache = PowerCache(self.measure, policy)
        rows: Rows = [["kind", "n", "m1", "m2", "y", "x", "value"]]
        report: Dict[str, Any] = {}
        passed = True
        if cfg.m_values is not None and cfg.y_list is not None:
            worst = []
            for n in cfg.n_range or [cfg.n0]:
                reg = regularity_ratio(self.measure, self.geom, n, cfg.m_values, cfg.elements(cfg.y_list), policy, cache)
                rows += [["regularity", n, m, "", y, "", c] for m, y, c in reg.rows]
                if reg.worst > 0:
                    worst.append(reg.worst)
            stability = max(worst) / min(worst) if worst else float("inf")
            tolerance = self._tolerance("regularity-stability")
            report.update({"regularity_worst": worst, "regularity_stability": stability,
                           "regularity_tolerance": tolerance})
            passed = stability <= tolerance
        if cfg.holder_grid is not None:
            grid = [(p.m1, p.m2, cfg.elements([p.y])[0]) for p in cfg.holder_grid]
            fit = holder_fit(self.measure, self.geom, cfg.n0, grid, policy, cache)
            rows += [["holder", cfg.n0, m1, m2, y, x, tv] for m1, m2, y, x, tv in fit.points]
            r2_min = self._tolerance("holder-r2")
            report.update({"beta": fit.beta, "constant": fit.constant, "fit": fit.fit.to_dict(), "r2_min": r2_min})
            passed = passed and fit.beta > 0 and fit.fit.r2 >= r2_min
        report["pass"] = passed
        return rows, report

    def _run_spectral(self) -> Tuple[Rows, Dict[str, Any]]:
        inverse_w = 1.0 / self.geom.w_star
        rows: Rows = [["R", "lambda", "scaled", "quotient", "support_lambda", "tail_slack", "volume", "converged"]]
        scaled = []
        variational = True
        for R in self.cfg.r_range:
            eig = dirichlet_eigenvalue(self.measure, self.geom, R)
            zeta = rayleigh_zeta(self.measure, self.geom, R)
            on_support = killed_eigenvalue(self.measure, zeta.support)
            holds = zeta.quotient >= on_support.value - zeta.tail_slack - 1e-12
            variational = variational and holds
            scaled.append(eig.value * R ** inverse_w)
            rows.append([R, eig.value, scaled[-1], zeta.quotient, on_support.value, zeta.tail_slack,
                         eig.ball_volume, eig.converged])
            if not eig.converged:
                self.warnings.append(f"Eigenvalue at R={R:g} did not converge")
        spread = max(scaled) / min(scaled)
        tolerance = self._tolerance("spectral")
        return rows, {
            "theory_exponent": inverse_w,
            "spread": spread,
            "variational": variational,
            "tolerance": tolerance,
            "pass": spread <= tolerance and variational,
        }

    def _run_poincare(self) -> Tuple[Rows, Dict[str, Any]]:
        cfg = self.cfg
        report_ = pseudo_poincare_constant(self.measure, self.geom, cfg.trials, cfg.elements(cfg.h_list), cfg.seed)
        rows: Rows = [["h", "ratio"]] + [[h, c] for h, c in sorted(report_.per_h.items())]
        tolerance = self._tolerance("poincare")
        return rows, {
            "constant": report_.constant,
            "trials": report_.trials,
            "skipped": report_.skipped,
            "tolerance": tolerance,
            "pass": bool(np.isfinite(report_.constant)) and report_.constant <= tolerance,
        }

    # ------------------------------------------------------------------
    # Artifacts
    # ------------------------------------------------------------------

    def _write_artifacts(self, result: ExperimentResult) -> Dict[str, str]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        documents: Dict[str, str] = {
            "results.csv": render_csv(result.rows),
            "report.json": _dump_json({**result.report, "pass": result.passed, "errors": result.errors,
                                       "warnings": result.warnings}),
            "metadata.json": _dump_json({**result.metadata, "config": json.loads(to_json(self.cfg))}),
        }
        if self.measure is not None:
            documents["measure.json"] = _dump_json(self.measure.to_dict())
        if self.geom is not None:
            documents["geometry.json"] = _dump_json(self.geom.to_dict())
        hashes = {}
        for name, text in documents.items():
            data = text.encode("utf-8")
            (self.out_dir / name).write_bytes(data)
            hashes[name] = hashlib.sha256(data).hexdigest()
        (self.out_dir / "manifest.json").write_text(_dump_json({"files": hashes}), encoding="utf-8")
        return hashes


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None, threads: int = 1) -> ExperimentResult:
    """Run one experiment; the result carries the manifest in `files`."""
    return ExperimentRunner(cfg, out_dir, threads).run()
