"""The epsilon-sweep pipeline: solve, correct, measure, record.

For each epsilon the oscillating and effective problems are solved on the
same oscillation-resolving mesh (eliminating interpolation bias from rate
measurements), correctors and flux approximations are assembled, and the
requested error metrics are emitted as records. Per-epsilon runs are
independent; the sweep runner may execute them concurrently, and records
are ordered by descending epsilon regardless of completion order.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cell import solve_cell_problem
from .config import analytic_family, build_coefficient, build_lattice, build_symbol
from .correctors import corrector_apply, flux, flux_approx
from .domain import (DomainSpec, EffectiveCoefficient, Field,
                     OscillatingCoefficient, assemble_operator, build_mesh,
                     field_from_callable, kernel_projection, norm, resolvent_apply)
from .errors import BudgetError
from .rates import ErrorRecord, time_norm
from .semigroup import SourceTerm, TimeGrid, duhamel_solve, exp_apply, shifted_state


@dataclass
class ProblemSetup:
    """Epsilon-independent ingredients of a sweep."""

    config: object
    lattice: object
    symbol: object
    coefficient: object
    cell: object
    domain: DomainSpec

    @property
    def problem_tag(self):
        c = self.config
        return (f"bc={c.bc},coef={c.coefficient['kind']},phi={c.phi['kind']},"
                f"F={c.source['kind']}")


def prepare_problem(config):
    lattice = build_lattice(config)
    symbol = build_symbol(config)
    g = build_coefficient(config, symbol, lattice)
    cell = solve_cell_problem(g, symbol, config.n_cell, cg_rtol=config.cg_rtol)
    domain = DomainSpec(lengths=config.domain_lengths, delta=config.delta)
    return ProblemSetup(config=config, lattice=lattice, symbol=symbol,
                        coefficient=g, cell=cell, domain=domain)


def _phi_field(setup, mesh):
    fn = analytic_family(setup.config.phi, setup.domain.lengths)
    bc = setup.config.bc
    return field_from_callable(mesh, fn, bc=bc)


def _source_term(setup):
    cfg = setup.config.source
    if cfg["kind"] == "zero":
        return None
    fn = analytic_family(cfg, setup.domain.lengths)
    return SourceTerm(fn=lambda mesh, t: fn(mesh.nodes), time_tag="constant")


def _graded_times(eps, final_time, n_nodes):
    start = max(eps ** 2 / 8.0, final_time * 1e-8)
    inner = np.geomspace(start, final_time, n_nodes)
    return np.concatenate([[0.0], inner])


def _corrector_input(setup, A_eff, state):
    if setup.config.bc == "neumann":
        return kernel_projection(A_eff, state)
    return state


def run_one_eps(setup, eps):
    """All requested metrics for a single epsilon."""
    cfg = setup.config
    h = eps / cfg.cells_per_eps
    mesh = build_mesh(setup.domain, h)
    if mesh.n_nodes > cfg.max_nodes:
        raise BudgetError(
            f"mesh at eps={eps:g} needs {mesh.n_nodes} nodes, budget {cfg.max_nodes}")
    A_osc = assemble_operator(OscillatingCoefficient(setup.coefficient, eps),
                              setup.symbol, cfg.bc, mesh,
                              eigen_cutoff=cfg.eigen_cutoff)
    A_eff = assemble_operator(EffectiveCoefficient(setup.cell.g_eff),
                              setup.symbol, cfg.bc, mesh,
                              eigen_cutoff=cfg.eigen_cutoff)
    phi = _phi_field(setup, mesh)
    F = _source_term(setup)
    tag = setup.problem_tag
    records = []

    fixed_t_metrics = [m for m in cfg.metrics
                       if m in ("L2", "H1_corrected", "H1_interior_corrected", "flux_L2")]
    if fixed_t_metrics:
        records.extend(_fixed_time_metrics(setup, eps, mesh, A_osc, A_eff, phi, F,
                                           fixed_t_metrics, tag))
    if "resolvent_L2" in cfg.metrics:
        f_res = phi if F is None else field_from_callable(
            mesh, analytic_family(cfg.source, setup.domain.lengths), bc=cfg.bc)
        u_r = resolvent_apply(A_osc, cfg.resolvent_shift, f_res)
        u_r0 = resolvent_apply(A_eff, cfg.resolvent_shift, f_res)
        records.append(ErrorRecord(eps=eps, t=f"zeta={cfg.resolvent_shift:g}",
                                   metric="resolvent_L2",
                                   value=norm(u_r - u_r0, "L2"), problem_tag=tag))
    time_metrics = [m for m in cfg.metrics if m.startswith("Lp_time")]
    if time_metrics:
        records.extend(_time_interval_metrics(setup, eps, mesh, A_osc, A_eff, phi, F,
                                              time_metrics, tag))
    return records


def _fixed_time_metrics(setup, eps, mesh, A_osc, A_eff, phi, F, metrics, tag):
    cfg = setup.config
    t = cfg.t
    if F is None:
        u_eps = exp_apply(A_osc, t, phi)
        u0 = exp_apply(A_eff, t, phi)
        corr_state = u0
    else:
        lag = eps ** 2
        times = np.unique(np.concatenate([[0.0, t], [max(t - lag, 0.0)]]))
        grid = TimeGrid(final_time=t, times=times)
        traj_eps = duhamel_solve(A_osc, phi, F, grid)
        traj_eff = duhamel_solve(A_eff, phi, F, grid)
        u_eps = traj_eps.at(t)
        u0 = traj_eff.at(t)
        corr_state = shifted_state(A_eff, traj_eff, eps, t)

    records = []
    diff = u_eps - u0
    if "L2" in metrics:
        records.append(ErrorRecord(eps=eps, t=t, metric="L2",
                                   value=norm(diff, "L2"), problem_tag=tag))
    needs_corr = [m for m in metrics if m != "L2"]
    if not needs_corr:
        return records
    corr_in = _corrector_input(setup, A_eff, corr_state)
    for variant in cfg.corrector_variants:
        corr = corrector_apply(setup.cell, eps, corr_in, variant, cfg.bc,
                               smoothing_order=cfg.smoothing_order)
        corrected_err = diff - eps * corr
        if "H1_corrected" in metrics:
            records.append(ErrorRecord(
                eps=eps, t=t, metric=f"H1_corrected:{variant}",
                value=norm(corrected_err, "H1"), problem_tag=tag))
        if "H1_interior_corrected" in metrics:
            records.append(ErrorRecord(
                eps=eps, t=t, metric=f"H1_interior_corrected:{variant}",
                value=norm(corrected_err, "H1_interior", delta=cfg.delta),
                problem_tag=tag))
        if "flux_L2" in metrics:
            p_eps = flux(u_eps, OscillatingCoefficient(setup.coefficient, eps),
                         setup.symbol)
            p_approx = flux_approx(setup.cell, eps, corr_in, variant, cfg.bc,
                                   smoothing_order=cfg.smoothing_order)
            records.append(ErrorRecord(
                eps=eps, t=t, metric=f"flux_L2:{variant}",
                value=norm(p_eps - p_approx, "L2"), problem_tag=tag))
    return records


def _time_interval_metrics(setup, eps, mesh, A_osc, A_eff, phi, F, metrics, tag):
    cfg = setup.config
    T = cfg.final_time
    lag = eps ** 2
    main = _graded_times(eps, T, cfg.time_nodes)
    shifted = np.maximum(main[main >= lag] - lag, 0.0)
    union = np.unique(np.concatenate([main, shifted]))
    grid = TimeGrid(final_time=T, times=union)
    traj_eps = duhamel_solve(A_osc, phi, F, grid)
    traj_eff = duhamel_solve(A_eff, phi, F, grid)
    records = []

    if any(m.startswith("Lp_time_L2") for m in metrics):
        samples = [(t, norm(fe - f0, "L2"))
                   for t, fe, f0 in zip(traj_eps.times, traj_eps.fields, traj_eff.fields)
                   if t in main]
        for p in cfg.p:
            records.append(ErrorRecord(
                eps=eps, t=f"(0,{T:g})", metric=f"Lp_time_L2:p={_pname(p)}",
                value=time_norm(samples, p), problem_tag=tag))

    if any(m.startswith("Lp_time_H1") for m in metrics):
        for variant in cfg.corrector_variants:
            samples = []
            for t in main:
                if t == 0.0:
                    continue
                u_eps = traj_eps.at(t)
                u0 = traj_eff.at(t)
                w = shifted_state(A_eff, traj_eff, eps, t)
                corr_in = _corrector_input(setup, A_eff, w)
                corr = corrector_apply(setup.cell, eps, corr_in, variant, cfg.bc,
                                       smoothing_order=cfg.smoothing_order)
                samples.append((t, norm(u_eps - u0 - eps * corr, "H1")))
            for p in cfg.p:
                records.append(ErrorRecord(
                    eps=eps, t=f"(0,{T:g})",
                    metric=f"Lp_time_H1:{variant}:p={_pname(p)}",
                    value=time_norm(samples, p), problem_tag=tag))
    return records


def _pname(p):
    return "inf" if p == np.inf else f"{p:g}"


def _resolution_proxy(setup, eps):
    """Solution change under mesh halving, as a contamination estimate."""
    cfg = setup.config
    h = eps / cfg.cells_per_eps
    coarse = build_mesh(setup.domain, h)
    fine = build_mesh(setup.domain, h / 2)
    phi_c = _phi_field(setup, coarse)
    phi_f = _phi_field(setup, fine)
    A_c = assemble_operator(OscillatingCoefficient(setup.coefficient, eps),
                            setup.symbol, cfg.bc, coarse, eigen_cutoff=cfg.eigen_cutoff)
    A_f = assemble_operator(OscillatingCoefficient(setup.coefficient, eps),
                            setup.symbol, cfg.bc, fine, eigen_cutoff=cfg.eigen_cutoff)
    u_c = exp_apply(A_c, cfg.t, phi_c)
    u_f = exp_apply(A_f, cfg.t, phi_f)
    shared = u_f.values[::2]
    diff = Field(coarse, u_c.values - shared, "node", u_c.bc)
    return norm(diff, "L2")


def error_sweep(config, eps_list=None, jobs=1):
    """Run the configured problem over the epsilon list; records sorted by
    descending epsilon. Refuses sweeps whose finest mesh exceeds the node
    budget before doing any work."""
    setup = prepare_problem(config)
    eps_list = tuple(eps_list if eps_list is not None else config.eps)
    for eps in eps_list:
        nodes = 1
        for length in setup.domain.lengths:
            nodes *= int(round(length / (eps / config.cells_per_eps))) + 1
        if nodes > config.max_nodes:
            raise BudgetError(
                f"eps={eps:g} needs {nodes} nodes, budget {config.max_nodes}")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(lambda e: run_one_eps(setup, e), eps_list))
    else:
        chunks = [run_one_eps(setup, e) for e in eps_list]

    by_eps = dict(zip(eps_list, chunks))
    excluded = set()
    if config.check_discretization and config.dimension == 1:
        for eps in eps_list:
            measured = [r.value for r in by_eps[eps] if r.metric == "L2"]
            if not measured:
                continue
            proxy = _resolution_proxy(setup, eps)
            if proxy > 0.1 * measured[0]:
                warnings.warn(f"excluding eps={eps:g}: discretization proxy "
                              f"{proxy:.2e} above 10% of measured {measured[0]:.2e}")
                excluded.add(eps)

    records = []
    for eps in sorted(eps_list, reverse=True):
        if eps in excluded:
            continue
        records.extend(by_eps[eps])
    return records, setup
