"""Command-line interface: ``varplast {solve,certify,adapt,converge,sweep}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any

import numpy as np

from .certify import (adapt_partition, certify_distance, convergence_study,
                      verify_lipschitz)
from .dissipation import (ConeCapped, DissipationPotential, HalfspaceIntersection, NormBall,
                          Product)
from .energy import CoercivityScope, QuadraticEnergy
from .errors import ContractError, ConvergenceError
from .functional import energy_balance_residual, eval_Fn_theta
from .materials import MaterialModel, ModelKind, analytic_1d, assemble
from .problem import LoadPath, Problem, Tolerances
from .solver import check_theta, solve_theta
from .trajectory import Partition, Trajectory

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_ASSERT = 4


class ConfigError(ContractError):
    """Invalid configuration document."""


# number formatting ------------------------------------------------------------

def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        raise ValueError("refusing to serialize NaN")
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            raise ValueError("refusing to serialize NaN")
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dump_json(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# configuration ------------------------------------------------------------------

TOP_KEYS = {"model", "load", "partition", "theta", "y0", "tolerances", "seed", "output",
            "adapt", "converge", "sweep"}
MODEL_KEYS = {"kind", "p_dim", "elastic_C", "Hp", "h_xi", "sigma_y", "A", "cstar", "alpha",
              "scope"}
LOAD_KEYS = {"knots", "T", "as_strain"}
PARTITION_KEYS = {"N", "steps"}
TOL_KEYS = {"tau_feas", "tau_kkt", "tau_func", "inner_tol"}
OUTPUT_KEYS = {"dir"}
ADAPT_KEYS = {"tol", "max_rounds", "divisor", "initial_N"}
CONVERGE_KEYS = {"refinements", "oracle", "reference_factor"}
SWEEP_KEYS = {"thetas", "steps"}


def _require_dict(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    return obj


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _number(obj, where: str, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{where} must be a number")
    x = float(obj)
    if not math.isfinite(x):
        raise ConfigError(f"{where} must be finite")
    if positive and not x > 0:
        raise ConfigError(f"{where} must be positive")
    if nonneg and x < 0:
        raise ConfigError(f"{where} must be nonnegative")
    return x


def _integer(obj, where: str, minimum: int = 1) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int) or obj < minimum:
        raise ConfigError(f"{where} must be an integer >= {minimum}")
    return int(obj)


def _array(obj, where: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a number or a (nested) list of numbers") from None
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{where} must be finite")
    return arr


def _cstar(obj, where: str):
    obj = _require_dict(obj, where)
    kind = obj.get("type")
    try:
        if kind == "norm_ball":
            _check_keys(obj, {"type", "radius", "dim"}, where)
            return NormBall(_number(obj.get("radius"), f"{where}.radius", positive=True),
                            _integer(obj.get("dim", 1), f"{where}.dim"))
        if kind == "cone_capped":
            _check_keys(obj, {"type", "radius", "p_dim"}, where)
            return ConeCapped(_number(obj.get("radius"), f"{where}.radius", positive=True),
                              _integer(obj.get("p_dim", 1), f"{where}.p_dim"))
        if kind == "halfspaces":
            _check_keys(obj, {"type", "normals", "offsets"}, where)
            return HalfspaceIntersection(_array(obj.get("normals"), f"{where}.normals"),
                                         _array(obj.get("offsets"), f"{where}.offsets"))
        if kind == "product":
            _check_keys(obj, {"type", "parts"}, where)
            parts = obj.get("parts")
            if not isinstance(parts, list) or not parts:
                raise ConfigError(f"{where}.parts must be a nonempty list")
            return Product(tuple(_cstar(p, f"{where}.parts[{k}]") for k, p in enumerate(parts)))
    except ConfigError:
        raise
    except (ContractError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}.type must be one of norm_ball, cone_capped, halfspaces, product")


class RunConfig:
    """Validated configuration document."""

    def __init__(self, doc: dict):
        doc = _require_dict(doc, "config")
        _check_keys(doc, TOP_KEYS, "config")
        self.doc = doc
        self.theta = check_theta_field(doc.get("theta", 1.0))
        self.seed = _integer(doc.get("seed", 0), "seed", minimum=0)
        tol = _require_dict(doc.get("tolerances", {}), "tolerances")
        _check_keys(tol, TOL_KEYS, "tolerances")
        self.tolerances = Tolerances(**{k: _number(v, f"tolerances.{k}", positive=True)
                                        for k, v in tol.items()})
        out = _require_dict(doc.get("output", {}), "output")
        _check_keys(out, OUTPUT_KEYS, "output")
        self.out_dir = out.get("dir", ".")
        if not isinstance(self.out_dir, str):
            raise ConfigError("output.dir must be a string")
        for key, allowed in (("adapt", ADAPT_KEYS), ("converge", CONVERGE_KEYS),
                             ("sweep", SWEEP_KEYS)):
            _check_keys(_require_dict(doc.get(key, {}), key), allowed, key)
        self.model_doc = _require_dict(doc.get("model"), "model")
        _check_keys(self.model_doc, MODEL_KEYS, "model")
        self.kind = self.model_doc.get("kind")
        self._build_problem()
        self.partition = self._partition(doc.get("partition"))

    # problem assembly

    def _load(self) -> LoadPath:
        ld = _require_dict(self.doc.get("load"), "load")
        _check_keys(ld, LOAD_KEYS, "load")
        knots = ld.get("knots")
        if not isinstance(knots, list) or len(knots) < 2:
            raise ConfigError("load.knots must be a list of at least two [t, vector] pairs")
        times, values = [], []
        for k, kn in enumerate(knots):
            if not isinstance(kn, list) or len(kn) != 2:
                raise ConfigError(f"load.knots[{k}] must be a [t, vector] pair")
            times.append(_number(kn[0], f"load.knots[{k}][0]", nonneg=True))
            values.append(np.atleast_1d(_array(kn[1], f"load.knots[{k}][1]")).reshape(-1))
        if len({v.size for v in values}) != 1:
            raise ConfigError("load.knots vectors must all have the same length")
        try:
            load = LoadPath(np.array(times), np.array(values))
        except ContractError as exc:
            raise ConfigError(f"load.knots: {exc}") from None
        if "T" in ld and _number(ld["T"], "load.T", positive=True) != load.T:
            raise ConfigError("load.T must equal the last knot time")
        self.as_strain = bool(ld.get("as_strain", False))
        return load

    def _build_problem(self) -> None:
        m = self.model_doc
        kind = self.kind
        try:
            if kind in ("kinematic", "isotropic", "combined"):
                p_dim = _integer(m.get("p_dim", 1), "model.p_dim")
                for key in ("A", "cstar", "alpha", "scope"):
                    if key in m:
                        raise ConfigError(f"model.{key} is only allowed for kind custom")
                model = MaterialModel(
                    ModelKind(kind),
                    _array(m.get("elastic_C", 1.0), "model.elastic_C"),
                    _array(m.get("Hp", 0.0), "model.Hp"),
                    _number(m.get("h_xi", 0.0), "model.h_xi", nonneg=True),
                    _number(m.get("sigma_y"), "model.sigma_y", positive=True),
                    p_dim)
                load = self._load()
                if self.as_strain:
                    load = model.strain_load(load)
                self.model = model
                y0 = self.doc.get("y0", [0.0] * model.state_dim)
                self.problem = assemble(model, load, _array(y0, "y0").reshape(-1),
                                        self.tolerances)
            elif kind == "custom":
                for key in ("p_dim", "elastic_C", "Hp", "h_xi", "sigma_y"):
                    if key in m:
                        raise ConfigError(f"model.{key} is not used by kind custom")
                A = _array(m.get("A"), "model.A")
                cstar = _cstar(m.get("cstar"), "model.cstar")
                if "alpha" in m:
                    scope = CoercivityScope(m.get("scope", "Global"))
                    energy = QuadraticEnergy(A, _number(m["alpha"], "model.alpha", positive=True),
                                             scope)
                else:
                    if "scope" in m:
                        raise ConfigError("model.scope needs model.alpha")
                    energy = QuadraticEnergy.from_matrix(A)
                load = self._load()
                if self.as_strain:
                    raise ConfigError("load.as_strain is only allowed for material models")
                self.model = None
                y0 = self.doc.get("y0", [0.0] * energy.dim)
                self.problem = Problem(energy, DissipationPotential(cstar), load,
                                       _array(y0, "y0").reshape(-1), self.tolerances)
            else:
                raise ConfigError("model.kind must be one of kinematic, isotropic, combined, custom")
        except ConfigError:
            raise
        except (ContractError, ValueError) as exc:
            raise ConfigError(f"model: {exc}") from None

    def _partition(self, obj) -> Partition:
        obj = _require_dict(obj if obj is not None else {"N": 100}, "partition")
        _check_keys(obj, PARTITION_KEYS, "partition")
        if ("N" in obj) == ("steps" in obj):
            raise ConfigError("partition needs exactly one of N and steps")
        try:
            if "N" in obj:
                return Partition.uniform(self.problem.T, _integer(obj["N"], "partition.N"))
            steps = _array(obj["steps"], "partition.steps").reshape(-1)
            part = Partition.from_steps(steps)
        except ConfigError:
            raise
        except ContractError as exc:
            raise ConfigError(f"partition: {exc}") from None
        if abs(part.T - self.problem.T) > 1e-12 * max(1.0, self.problem.T):
            raise ConfigError("partition.steps must add up to the load horizon")
        return Partition(np.concatenate([part.times[:-1], [self.problem.T]]))

    def section(self, name: str) -> dict:
        return self.doc.get(name, {})


def check_theta_field(value) -> float:
    x = _number(value, "theta")
    try:
        return check_theta(x)
    except ContractError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str, args=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    doc = _require_dict(doc, "config")
    if args is not None:
        if args.theta is not None:
            doc["theta"] = args.theta
        if args.steps is not None:
            doc["partition"] = {"N": args.steps}
        if args.seed is not None:
            doc["seed"] = args.seed
    return RunConfig(doc)


# trajectory table -----------------------------------------------------------------

def trajectory_rows(problem: Problem, traj: Trajectory, theta: float):
    rep = eval_Fn_theta(problem, traj.states, traj.partition, theta)
    tth = traj.partition.theta_times(theta)
    yth = traj.theta_states(theta)
    steps = traj.partition.steps
    rows = []
    q0 = problem.stress(0.0, traj.states[0])
    rows.append([0, 0.0, *traj.states[0], 0.0, 0.0, 0.0, problem.potential.dist(q0)])
    for i in range(1, traj.partition.N + 1):
        e = traj.states[i] - traj.states[i - 1]
        q = problem.load(tth[i - 1]) - problem.A @ yth[i - 1]
        rows.append([i, float(traj.times[i]), *traj.states[i],
                     float(np.linalg.norm(e)) / float(steps[i - 1]),
                     problem.potential.psi(e), float(rep.per_interval[i - 1]),
                     problem.potential.dist(q)])
    header = (["i", "t"] + [f"y{k}" for k in range(traj.dim)]
              + ["abs_dy", "psi_increment", "tau_L", "dist_cstar_theta"])
    return header, rows, rep


def trajectory_csv(problem: Problem, traj: Trajectory, theta: float):
    header, rows, rep = trajectory_rows(problem, traj, theta)
    return csv_text(header, [[r[0]] + [float(x) for x in r[1:]] for r in rows]), rep


def read_candidate(path: str, problem: Problem) -> Trajectory:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read candidate: {exc}") from None
    if len(rows) < 3:
        raise ConfigError("candidate CSV needs a header and at least two rows")
    header = rows[0]
    if "t" not in header:
        raise ConfigError("candidate CSV has no t column")
    ycols = [k for k, h in enumerate(header) if h.startswith("y") and h[1:].isdigit()]
    ycols.sort(key=lambda k: int(header[k][1:]))
    if len(ycols) != problem.dim:
        raise ConfigError(f"candidate has {len(ycols)} state columns, problem has {problem.dim}")
    tcol = header.index("t")
    try:
        data = [[float(r[tcol])] + [float(r[k]) for k in ycols] for r in rows[1:] if r]
    except (ValueError, IndexError):
        raise ConfigError("candidate CSV contains a malformed row") from None
    arr = np.array(data)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("candidate CSV contains non-finite values")
    try:
        part = Partition(arr[:, 0])
    except ContractError as exc:
        raise ConfigError(f"candidate times: {exc}") from None
    if abs(part.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise ConfigError("candidate horizon differs from the load horizon")
    return Trajectory(part, arr[:, 1:])


# commands ---------------------------------------------------------------------------

def _out_dir(cfg: RunConfig, args) -> str:
    d = args.out if args.out is not None else cfg.out_dir
    os.makedirs(d, exist_ok=True)
    return d


def cmd_solve(cfg: RunConfig, args) -> int:
    P, part, theta = cfg.problem, cfg.partition, cfg.theta
    traj = solve_theta(P, part, theta)
    text, rep = trajectory_csv(P, traj, theta)
    lip = verify_lipschitz(P, traj, theta)
    summary = {
        "command": "solve",
        "theta": theta,
        "N": part.N,
        "T": part.T,
        "alpha": P.alpha,
        "Fn_theta": rep.total,
        "initial_penalty": rep.initial_penalty,
        "dissipation_total": rep.dissipation_total,
        "feasibility_violations": [[i, d] for i, d in rep.feasibility_violations],
        "energy_residual": energy_balance_residual(P, traj, theta),
        "energy_residual_continuous": energy_balance_residual(P, traj, None),
        "lipschitz": lip.to_dict(),
        "final_state": traj.states[-1],
    }
    d = _out_dir(cfg, args)
    write_text(os.path.join(d, "trajectory.csv"), text)
    write_text(os.path.join(d, "summary.json"), dump_json(summary))
    if args.assert_ and not rep.total <= P.tolerances.tau_func * (1.0 + P.load.sup_norm):
        return EXIT_ASSERT
    return EXIT_OK


def cmd_certify(cfg: RunConfig, args) -> int:
    if not args.candidate:
        raise ConfigError("certify needs --candidate PATH")
    P = cfg.problem
    cand = read_candidate(args.candidate, P)
    cert = certify_distance(P, cand, cfg.theta)
    rep = cert.report
    out = cert.to_dict()
    out.update({"command": "certify", "theta": cfg.theta, "N": cand.partition.N,
                "feasibility_violations": [[i, d] for i, d in rep.feasibility_violations],
                "domain_violations": list(rep.domain_violations)})
    d = _out_dir(cfg, args)
    write_text(os.path.join(d, "certificate.json"), dump_json(out))
    if args.assert_:
        if args.tol is None:
            raise ConfigError("--assert with certify needs --tol")
        if not cert.uniform_norm_bound <= args.tol:
            return EXIT_ASSERT
    return EXIT_OK


def cmd_adapt(cfg: RunConfig, args) -> int:
    sec = cfg.section("adapt")
    tol = args.tol if args.tol is not None else sec.get("tol")
    if tol is None:
        raise ConfigError("adapt needs a tolerance (--tol or adapt.tol)")
    tol = _number(tol, "adapt.tol", positive=True)
    max_rounds = _integer(sec.get("max_rounds", 30), "adapt.max_rounds", minimum=0)
    divisor = _number(sec.get("divisor", 4.0), "adapt.divisor", positive=True)
    if divisor < 2.0:
        raise ConfigError("adapt.divisor must be >= 2")
    initial = cfg.partition
    if "initial_N" in sec:
        initial = Partition.uniform(cfg.problem.T, _integer(sec["initial_N"], "adapt.initial_N"))
    res = adapt_partition(cfg.problem, cfg.theta, tol, max_rounds, initial, divisor)
    text, _ = trajectory_csv(cfg.problem, res.trajectory, cfg.theta)
    out = {
        "command": "adapt",
        "theta": cfg.theta,
        "tol": tol,
        "divisor": divisor,
        "success": res.success,
        "rounds": res.rounds,
        "N": res.partition.N,
        "certificate": res.certificate.to_dict(),
        "history": res.history,
        "refined_times": res.refined_times,
    }
    d = _out_dir(cfg, args)
    write_text(os.path.join(d, "adapt.csv"), text)
    write_text(os.path.join(d, "adapt.json"), dump_json(out))
    if args.assert_ and not (res.success and res.certificate.uniform_norm_bound <= tol):
        return EXIT_ASSERT
    return EXIT_OK


def _ramp_oracle(problem: Problem):
    """Scalar play-operator oracle for a ramp from rest, or ``None``."""
    cs = problem.potential.cstar
    load = problem.load
    if not (problem.dim == 1 and isinstance(cs, NormBall) and load.times.size == 2
            and load.values[0, 0] == 0.0 and load.values[1, 0] >= 0.0 and problem.y0[0] == 0.0):
        return None
    a = float(problem.A[0, 0])
    rate = float(load.slopes[0, 0])
    sigma = cs.radius
    kinks = [sigma / rate] if rate > 0 else []
    return (lambda t: analytic_1d(a, sigma, rate, t)), kinks


def cmd_converge(cfg: RunConfig, args) -> int:
    sec = cfg.section("converge")
    if args.refinements is not None:
        try:
            refs = [int(x) for x in args.refinements.split(",") if x.strip()]
        except ValueError:
            raise ConfigError("--refinements must be a comma-separated list of integers") from None
    else:
        refs = sec.get("refinements", [25, 50, 100, 200, 400])
        if not isinstance(refs, list):
            raise ConfigError("converge.refinements must be a list")
        refs = [_integer(r, "converge.refinements[]") for r in refs]
    if len(refs) < 3:
        raise ConfigError("converge needs at least 3 refinement levels")
    if any(r < 1 for r in refs):
        raise ConfigError("converge.refinements must be positive")
    P = cfg.problem
    mode = sec.get("oracle", "auto")
    if mode not in ("auto", "analytic_1d", "reference"):
        raise ConfigError("converge.oracle must be auto, analytic_1d or reference")
    oracle = _ramp_oracle(P) if mode != "reference" else None
    if mode == "analytic_1d" and oracle is None:
        raise ConfigError("analytic_1d oracle needs a scalar norm-ball problem with a ramp from rest")
    if oracle is not None:
        fn, kinks = oracle
        rep = convergence_study(P, cfg.theta, refs, oracle=fn, breakpoints=kinks)
        source = "analytic_1d"
    else:
        factor = _integer(sec.get("reference_factor", 100), "converge.reference_factor")
        ref = solve_theta(P, Partition.uniform(P.T, factor * max(refs)), cfg.theta)
        rep = convergence_study(P, cfg.theta, refs, reference=ref)
        source = "reference"
    rows = [[n, float(tau), float(err)] for n, tau, err in zip(rep.N, rep.steps, rep.errors)]
    d = _out_dir(cfg, args)
    write_text(os.path.join(d, "rates.csv"), csv_text(["N", "tau", "error"], rows))
    out = rep.to_dict()
    out.update({"command": "converge", "theta": cfg.theta, "oracle": source,
                "threshold": rep.threshold})
    write_text(os.path.join(d, "converge.json"), dump_json(out))
    if args.assert_ and not rep.passed:
        return EXIT_ASSERT
    return EXIT_OK


def _sweep_cell(doc: dict, theta: float, n: int) -> list:
    cell = dict(doc)
    cell["theta"] = theta
    cell["partition"] = {"N": n}
    cfg = RunConfig(cell)
    P = cfg.problem
    traj = solve_theta(P, cfg.partition, theta)
    rep = eval_Fn_theta(P, traj.states, cfg.partition, theta)
    lip = verify_lipschitz(P, traj, theta)
    return [theta, n, rep.total, lip.max_slope, lip.max_nodal_slope, lip.bound, lip.margin,
            energy_balance_residual(P, traj, theta)]


def cmd_sweep(cfg: RunConfig, args) -> int:
    sec = cfg.section("sweep")
    thetas = sec.get("thetas", [0.5, 0.75, 1.0])
    steps = sec.get("steps", [25, 50, 100])
    if not isinstance(thetas, list) or not isinstance(steps, list) or not thetas or not steps:
        raise ConfigError("sweep.thetas and sweep.steps must be nonempty lists")
    thetas = [check_theta_field(t) for t in thetas]
    steps = [_integer(n, "sweep.steps[]") for n in steps]
    cells = [(t, n) for t in thetas for n in steps]
    jobs = max(1, int(args.jobs or 1))
    if jobs == 1:
        results = [_sweep_cell(cfg.doc, t, n) for t, n in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            futures = [ex.submit(_sweep_cell, cfg.doc, t, n) for t, n in cells]
            results = [f.result() for f in futures]
    header = ["theta", "N", "Fn_theta", "max_slope", "max_nodal_slope", "lipschitz_bound",
              "margin", "energy_residual"]
    rows = [[float(r[0]), int(r[1])] + [float(x) for x in r[2:]] for r in results]
    d = _out_dir(cfg, args)
    write_text(os.path.join(d, "sweep.csv"), csv_text(header, rows))
    if args.assert_:
        ok = all(r[2] <= cfg.problem.tolerances.tau_func * (1.0 + cfg.problem.load.sup_norm)
                 and r[6] >= -1e-8 for r in rows)
        if not ok:
            return EXIT_ASSERT
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "certify": cmd_certify, "adapt": cmd_adapt,
            "converge": cmd_converge, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="varplast",
                                description="Rate-independent evolution solver and certifier.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    p.add_argument("--theta", type=float, default=None, help="override theta")
    p.add_argument("--steps", type=int, default=None, help="override partition with N uniform steps")
    p.add_argument("--tol", type=float, default=None, help="tolerance for adapt / certify --assert")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit with status 4 when the command's bound is not met")
    p.add_argument("--seed", type=int, default=None, help="override seed")
    p.add_argument("--candidate", default=None, help="candidate trajectory CSV for certify")
    p.add_argument("--refinements", default=None, help="comma-separated step counts for converge")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        return COMMANDS[args.command](cfg, args)
    except ConvergenceError as exc:
        print(f"error: {exc} (residual {exc.residual:.3g})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
