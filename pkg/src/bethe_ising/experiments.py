"""Experiment drivers behind the command-line subcommands.

Every random quantity is drawn from a stream keyed by the experiment seed
and by what is being computed (grid point, graph size, replica), so
results do not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from bethe_ising import cavity, degree_laws, graphs, mcmc, thermo
from bethe_ising.config import ExperimentConfig
from bethe_ising.rng import stream

logger = logging.getLogger(__name__)

THERMO_COLUMNS = ["beta", "B", "phi", "phi_se", "M", "M_se", "U", "U_se", "chi", "C"]


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable))


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


# -- generate -----------------------------------------------------------------

def generate_graph(cfg: ExperimentConfig, n: int, replica: int) -> graphs.MultiGraph:
    rng = stream(cfg.seed, "graph", n, replica)
    law = cfg.degree_law()
    if cfg.graph_model == "configuration":
        return graphs.configuration_model_from_law(law, n, rng)
    if cfg.graph_model == "erdos_renyi":
        return graphs.erdos_renyi(n, law.mean, rng)
    raise ValueError(f"unknown graph model {cfg.graph_model!r}")


def _write_graph(args) -> Path:
    cfg, n, r = args
    g = generate_graph(cfg, n, r)
    path = Path(cfg.out) / f"graph_n{n}_r{r}.edges"
    graphs.write_edge_list(g, path)
    deg_sum = int(g.degrees.sum())
    write_json(path.with_suffix(".meta.json"), {
        **cfg.metadata(), "n": g.n, "m": g.m, "degree_sum": deg_sum,
        "degree_sum_even": deg_sum % 2 == 0, "self_loops": g.n_loops,
        "edge_density": graphs.edge_density(g), "replica": r,
    })
    return path


def run_generate(cfg: ExperimentConfig) -> list[Path]:
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, int(n), r) for n in cfg.sizes for r in range(cfg.replicas)]
    return _map(_write_graph, tasks, cfg.workers)


# -- fixed point ----------------------------------------------------------------

def run_fixed_point(cfg: ExperimentConfig) -> tuple[cavity.FixedPointResult, dict]:
    """Solve at ``(cfg.beta, cfg.B)``; raises NotConverged after writing diagnostics."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    law = cfg.degree_law()
    rho = degree_laws.size_biased(law)
    diag = {**cfg.metadata(), "offspring_mean": rho.mean,
            "critical_beta": thermo.critical_beta(rho.mean)}
    try:
        res = cavity.solve(rho, cfg.beta, cfg.B, cfg.pool_size, cfg.t_max, cfg.tol,
                           stream(cfg.seed, "pool", repr(cfg.beta), repr(cfg.B)))
    except cavity.NotConverged as exc:
        diag.update(exc.result.diagnostics())
        write_json(out / "fixed_point.json", diag)
        raise
    diag.update(res.diagnostics())
    if law.family == "regular":
        k = law.params["k"]
        h_bar = cavity.scalar_bethe_fixed_point(k - 1, cfg.beta, cfg.B)
        diag["scalar_fixed_point"] = h_bar
        diag["scalar_abs_difference"] = abs(diag["h_mean"] - h_bar)
    cavity.save_pool(res.population, out / "pool.csv", law, cfg.seed,
                     {"config_hash": cfg.config_hash()})
    write_json(out / "fixed_point.json", diag)
    return res, diag


# -- thermodynamic sweep --------------------------------------------------------

def _solve_pool(cfg, rho, beta, B):
    return cavity.solve(rho, beta, B, cfg.pool_size, cfg.t_max, cfg.tol,
                        stream(cfg.seed, "pool", repr(beta), repr(B))).population


def _point_values(cfg, law, rho, beta, B):
    """phi, M, U (with stderr) at one positive field."""
    pop = _solve_pool(cfg, rho, beta, B)
    mc = stream(cfg.seed, "mc", repr(beta), repr(B))
    phi = thermo.pressure(pop, law, mc_samples=cfg.mc_samples, rng=mc)
    M = thermo.magnetization(pop, law, mc_samples=cfg.mc_samples, rng=mc)
    U = thermo.internal_energy(pop, law.mean, mc_samples=cfg.mc_samples, rng=mc)
    return phi, M, U


def _M_at(cfg, law, rho, beta, B):
    pop = cavity.solve(rho, beta, B, cfg.pool_size, cfg.t_max, cfg.tol,
                       stream(cfg.seed, "pool-deriv", repr(beta))).population
    return thermo.magnetization(pop, law, mc_samples=cfg.mc_samples,
                                rng=stream(cfg.seed, "mc-deriv", repr(beta)))


def _U_at(cfg, law, rho, beta, B):
    pop = cavity.solve(rho, beta, B, cfg.pool_size, cfg.t_max, cfg.tol,
                       stream(cfg.seed, "pool-deriv", "B", repr(B))).population
    return thermo.internal_energy(pop, law.mean, mc_samples=cfg.mc_samples,
                                  rng=stream(cfg.seed, "mc-deriv", "B", repr(B)))


def _positive_point(cfg, law, rho, beta, B) -> thermo.ThermoPoint:
    phi, M, U = _point_values(cfg, law, rho, beta, B)
    chi = C = math.nan
    if cfg.derivatives:
        # shared seeds across the stencil: common random numbers
        d = min(cfg.derivative_step, B / 2)
        m_lo = _M_at(cfg, law, rho, beta, B - d)
        m_hi = _M_at(cfg, law, rho, beta, B + d)
        chi = float(thermo.susceptibility([B - d, B, B + d], [m_lo.value, M.value, m_hi.value])[1][0])
        if beta == 0:
            C = 0.0
        else:
            db = min(cfg.derivative_step, beta / 2)
            u_lo = _U_at(cfg, law, rho, beta - db, B)
            u_hi = _U_at(cfg, law, rho, beta + db, B)
            C = float(thermo.specific_heat([beta - db, beta, beta + db],
                                           [u_lo.value, U.value, u_hi.value])[1][0])
    return thermo.ThermoPoint(beta, B, phi.value, M.value, U.value, chi, C,
                              phi.stderr, M.stderr, U.stderr)


def thermo_point(args) -> thermo.ThermoPoint:
    cfg, beta, B = args
    law = cfg.degree_law()
    rho = degree_laws.size_biased(law)
    if B < 0:
        p = thermo_point((cfg, beta, -B))
        return thermo.ThermoPoint(beta, B, p.phi, -p.M, p.U, p.chi, p.C, p.phi_se, p.M_se, p.U_se)
    if B > 0:
        return _positive_point(cfg, law, rho, beta, B)
    # B = 0 is defined as the limit B -> 0 from above. Difference quotients at
    # fields this small are dominated by pool noise, so chi and C are left empty.
    seq = sorted(cfg.zero_field_sequence)[:2]
    vals = [_point_values(cfg, law, rho, beta, b) for b in seq]
    phi, M, U = (thermo.extrapolate_to_zero_field(seq, [v[i].value for v in vals]) for i in range(3))
    if beta == 0:
        phi, M = thermo.free_pressure(0.0), 0.0
    return thermo.ThermoPoint(beta, 0.0, phi, M, U, math.nan, math.nan,
                              vals[0][0].stderr, vals[0][1].stderr, vals[0][2].stderr)


def run_thermo_sweep(cfg: ExperimentConfig) -> list[thermo.ThermoPoint]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, float(b), float(B)) for b in cfg.betas for B in cfg.fields]
    points = _map(thermo_point, tasks, cfg.workers)
    with open(out / "thermo.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(THERMO_COLUMNS)
        for p in points:
            d = p.as_dict()
            w.writerow([repr(float(d[c])) for c in THERMO_COLUMNS])
    law = cfg.degree_law()
    write_json(out / "thermo.meta.json", {
        **cfg.metadata(), "law": law.to_dict(), "pool_size": cfg.pool_size,
        "k_max": law.k_max, "mean_degree": law.mean,
        "notes": {"C": "conjectural limit: convergence of the finite-graph specific heat is unproven",
                  "chi": "centered difference of M over re-solved pools",
                  "B=0": "phi, M, U extrapolated linearly from the two smallest fields of "
                         "zero_field_sequence; chi and C not reported"},
    })
    return points


# -- finite-size convergence ----------------------------------------------------

def _psi_replica(args):
    cfg, n, r = args
    g = generate_graph(cfg, n, r)
    grid = mcmc.default_grid(cfg.beta, cfg.grid_step)
    res = mcmc.pressure_by_integration(g, cfg.beta, cfg.B, grid, cfg.sweeps, cfg.burn_in,
                                       stream(cfg.seed, "mcmc", n, r))
    return {"n": n, "replica": r, "psi_n": res.psi, "stderr": res.stderr,
            "quadrature_bias": res.quadrature_bias, "edge_density": graphs.edge_density(g)}


def limiting_pressure(cfg: ExperimentConfig) -> thermo.Estimate:
    law = cfg.degree_law()
    rho = degree_laws.size_biased(law)
    pop = _solve_pool(cfg, rho, cfg.beta, cfg.B)
    return thermo.pressure(pop, law, mc_samples=cfg.mc_samples,
                           rng=stream(cfg.seed, "mc", repr(cfg.beta), repr(cfg.B)))


def run_convergence(cfg: ExperimentConfig) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    phi = limiting_pressure(cfg)
    tasks = [(cfg, int(n), r) for n in cfg.sizes for r in range(cfg.replicas)]
    rows = _map(_psi_replica, tasks, cfg.workers)
    summary = []
    for n in cfg.sizes:
        vals = np.array([r["psi_n"] for r in rows if r["n"] == n])
        mean = float(vals.mean())
        summary.append({"n": int(n), "psi_mean": mean,
                        "spread": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
                        "abs_error": abs(mean - phi.value), "replicas": int(vals.size)})
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) + ["phi"])
        w.writeheader()
        for r in rows:
            w.writerow({**r, "phi": phi.value})
    report = {**cfg.metadata(), "phi": phi.value, "phi_stderr": phi.stderr,
              "rows": rows, "summary": summary}
    write_json(out / "convergence.json", report)
    return report
