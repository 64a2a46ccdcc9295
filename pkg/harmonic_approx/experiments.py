"""Experiment handlers behind the CLI subcommands.

Each handler turns a validated :class:`ExperimentConfig` into CSV-ready tables;
nothing here writes files.
"""

import logging

import numpy as np

from .approximant import ApproximantConfig, ApproximantResult, build_from_catalog, corollary_bounds
from .catalog import TestField, get_field
from .field_domain import shrink, sup_norm
from .fitting import fit_rate
from .handling_error import CatalogError
from .jackson_kernels import KernelParams, moment, monomial_is_accurate, polyharmonic_kernel, polyharmonic_order_check
from .middle_ware import add_process_time
from .modulus import classical_moduli, equivalence_report, harmonicity_modulus, modulus_scaling_ratios, upper_equivalence_constant
from .ops_config import Experiment, ExperimentConfig
from .output import ExperimentOutput, Table, format_value
from .pizzetti import PizzettiConstants, j0_apply, pizzetti_residual
from .routers import ExperimentRouter
from .sphere_mean import default_rule, harmonicity_differences

logger = logging.getLogger(__name__)

router = ExperimentRouter()

MODULUS_COLUMNS = ["field_id", "dim", "u", "omega_h", "omega_1", "omega_2", "laplacian_bound", "flagged"]
# alternate names for the two equivalence-ratio columns
RATIO_ALIASES = {"ratio_lemma1": "ratio_lower", "ratio_thm3": "ratio_upper"}
KFUNC_COLUMNS = [
    "field_id", "t", "omega_D", "omega_D1", "k_upper", "ratio_lower", "ratio_upper", "c_upper", "degenerate", "best_candidate",
    *RATIO_ALIASES,
]
PIZZETTI_COLUMNS = ["pair", "x_norm", "R", "mean_difference", "first_order_residual", "pizzetti_residual"]
KERNEL_COLUMNS = ["j", "coeff", "basis", "order"]
APPROX_COLUMNS = [
    "field_id", "p", "r", "k", "nu", "order", "order_equals_p", "sup_error", "modulus_factor", "rate_budget",
    "implied_constant", "error_floor", "stencil_mass", "degenerate",
]
RATES_COLUMNS = APPROX_COLUMNS + [
    "omega_1", "omega_2", "c_omega1", "c_omega2", "omega_h_le_classical", "used_in_fit", "slope", "intercept", "fit_residual",
]
SCALING_LAMBDAS = (0.5, 1.0, 2.0)


def _laplacian_or_none(tf: TestField):
    return tf.laplacians[1] if tf.r_max >= 1 else None


@router.experiment(Experiment.modulus, MODULUS_COLUMNS, summary="Harmonicity modulus and classical moduli on u_grid.")
@add_process_time
def run_modulus(cfg: ExperimentConfig) -> ExperimentOutput:
    tf = get_field(cfg.field_id, cfg.dim)
    D = cfg.build_domain()
    rule = default_rule(cfg.dim, seed=cfg.seed)
    curve = harmonicity_modulus(tf.field, D, cfg.u_grid, cfg.x_density, rule, cfg.t_refine)
    lap = _laplacian_or_none(tf)
    lap_sup = sup_norm(lap, D, cfg.x_density) if lap is not None else None
    d_n = PizzettiConstants.for_dim(cfg.dim).d_n
    rows = []
    for u, value, flagged in zip(curve.radii, curve.values, curve.flagged):
        w1, w2 = classical_moduli(tf.field, D, u, cfg.x_density, rule.size, cfg.t_refine, rule=rule)
        rows.append(
            {
                "field_id": tf.id,
                "dim": cfg.dim,
                "u": u,
                "omega_h": value,
                "omega_1": w1,
                "omega_2": w2,
                "laplacian_bound": None if lap_sup is None else d_n * u**2 * lap_sup,
                "flagged": flagged,
            }
        )
    return ExperimentOutput(tables={"modulus": Table(columns=MODULUS_COLUMNS, rows=rows)})


@router.experiment(Experiment.kfunc, KFUNC_COLUMNS, summary="K-functional estimates and equivalence ratios on D1 = shrink(D, margin).")
@add_process_time
def run_kfunc(cfg: ExperimentConfig) -> ExperimentOutput:
    tf = get_field(cfg.field_id, cfg.dim)
    D = cfg.build_domain()
    D1 = shrink(D, cfg.margin)
    rule = default_rule(cfg.dim, seed=cfg.seed)
    report = equivalence_report(
        tf.field, D, D1, cfg.t_grid, rule, cfg.x_density, _laplacian_or_none(tf), cfg.t_inner, cfg.t_refine
    )
    c = upper_equivalence_constant(cfg.dim)
    rows = [{"field_id": tf.id, "c_upper": c, **row.model_dump()} for row in report]
    for row in rows:
        row.update({alias: row[name] for alias, name in RATIO_ALIASES.items()})
    u = cfg.t_grid[0]
    scaling = [
        {"u": u, "lambda": lam, "ratio": ratio}
        for lam, ratio in modulus_scaling_ratios(tf.field, D, D1, u, SCALING_LAMBDAS, cfg.x_density, rule)
    ]
    return ExperimentOutput(
        tables={
            "kfunc": Table(columns=KFUNC_COLUMNS, rows=rows),
            "scaling": Table(columns=["u", "lambda", "ratio"], rows=scaling),
        }
    )


@router.experiment(Experiment.pizzetti, PIZZETTI_COLUMNS, summary="Pizzetti formula residuals at random (x, R) pairs.")
@add_process_time
def run_pizzetti(cfg: ExperimentConfig) -> ExperimentOutput:
    tf = get_field(cfg.field_id, cfg.dim)
    lap = _laplacian_or_none(tf)
    if lap is None:
        raise CatalogError(f"{tf.id} has no closed-form Laplacian; the Pizzetti residual needs one")
    consts = PizzettiConstants.for_dim(cfg.dim)
    rule = default_rule(cfg.dim, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    xs = rng.uniform(-0.5, 0.5, size=(cfg.n_pairs, cfg.dim))
    radii = rng.uniform(0.05, 0.5, size=cfg.n_pairs)
    rows = []
    for i, (x, R) in enumerate(zip(xs, radii)):
        diff = float(harmonicity_differences(tf.field, x, R, rule))
        rows.append(
            {
                "pair": i,
                "x_norm": float(np.linalg.norm(x)),
                "R": float(R),
                "mean_difference": diff,
                "first_order_residual": diff - consts.d_n * R**2 * float(lap(x)),
                "pizzetti_residual": pizzetti_residual(tf.field, lap, x, R, rule, cfg.quad_points),
            }
        )
    j0_rows = [
        {"t": t, "j0_one": j0_apply(lambda r: 1.0, t, cfg.dim, cfg.quad_points), "c_n_t2": consts.c_n * t**2}
        for t in (0.1, 0.5, 1.0)
    ]
    for row in j0_rows:
        row["v_times_j0"] = float(consts.v(row["t"])) * row["j0_one"]
    return ExperimentOutput(
        tables={
            "pizzetti": Table(columns=PIZZETTI_COLUMNS, rows=rows),
            "j0": Table(columns=["t", "j0_one", "c_n_t2", "v_times_j0"], rows=j0_rows),
        }
    )


@router.experiment(Experiment.kernel, KERNEL_COLUMNS, summary="Polyharmonic Jackson kernel coefficients, moments and moment rates.")
@add_process_time
def run_kernel(cfg: ExperimentConfig) -> ExperimentOutput:
    kernel = polyharmonic_kernel(KernelParams(k=cfg.k, nu=cfg.nu, dim=cfg.dim))
    order = polyharmonic_order_check(kernel)
    # double-precision monomial coefficients cancel badly at high degree; fall back to T_j(1 - s/2)
    if monomial_is_accurate(kernel):
        coeffs, basis = kernel.poly_s, "monomial_s"
    else:
        coeffs, basis = [c * kernel.norm_const for c in kernel.cheb_coeffs], "chebyshev_y"
    header = (
        f"k={cfg.k}, nu={cfg.nu}, n={cfg.dim}, order={order}, I0={format_value(moment(kernel, 0))}, "
        f"basis={basis}: q(s) = sum_j coeff_j {'s^j' if basis == 'monomial_s' else 'T_j(1 - s/2)'}"
    )
    rows = [{"j": j, "coeff": c, "basis": basis, "order": order} for j, c in enumerate(coeffs)]

    moment_rows = []
    by_order: dict[int, list[tuple[int, float]]] = {i: [] for i in cfg.moment_orders}
    for nu in cfg.nu_list:
        k_nu = polyharmonic_kernel(KernelParams(k=cfg.k, nu=nu, dim=cfg.dim))
        for i in cfg.moment_orders:
            value = moment(k_nu, i)
            by_order[i].append((nu, value))
            moment_rows.append({"nu": nu, "i": i, "moment": value, "scaled": nu**i * value})
    rate_rows = []
    for i, pairs in by_order.items():
        if i == 0:
            continue
        fit = fit_rate(pairs)
        rate_rows.append({"i": i, "slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual})
    return ExperimentOutput(
        tables={
            "kernel": Table(columns=KERNEL_COLUMNS, rows=rows, header_lines=[header]),
            "moments": Table(columns=["nu", "i", "moment", "scaled"], rows=moment_rows),
            "moment_rates": Table(columns=["i", "slope", "intercept", "residual"], rows=rate_rows),
        }
    )


def _approx_config(cfg: ExperimentConfig, p: int) -> ApproximantConfig:
    return ApproximantConfig(
        p=p, r=cfg.r, k=cfg.k, conv_grid=cfg.conv_grid, eval_grid=cfg.eval_grid, bvp_spacing=cfg.bvp_spacing, tol=cfg.tol
    )


def _approx_row(tf: TestField, result: ApproximantResult) -> dict:
    return {
        "field_id": tf.id,
        "p": result.p,
        "r": result.r,
        "k": result.k,
        "nu": result.nu,
        "order": result.order,
        "order_equals_p": result.order_equals_target,
        "sup_error": result.sup_error,
        "modulus_factor": result.modulus_factor,
        "rate_budget": result.rate_budget,
        "implied_constant": result.implied_constant,
        "error_floor": result.error_floor,
        "stencil_mass": result.stencil_mass,
        "degenerate": result.degenerate,
    }


@router.experiment(Experiment.approx, APPROX_COLUMNS, summary="One polyharmonic approximant T_p and its measured error.")
@add_process_time
def run_approx(cfg: ExperimentConfig) -> ExperimentOutput:
    tf = get_field(cfg.field_id, cfg.dim)
    result = build_from_catalog(tf, cfg.build_domain(), _approx_config(cfg, cfg.p))
    stages = [{"stage": m, "error": e} for m, e in enumerate(result.per_stage_errors)]
    return ExperimentOutput(
        tables={
            "approx": Table(columns=APPROX_COLUMNS, rows=[_approx_row(tf, result)]),
            "stages": Table(columns=["stage", "error"], rows=stages),
        },
        grids={"T_p": result.tp_grid} if cfg.dump_grid else {},
        results={"nu": result.nu, "sup_error": result.sup_error, "per_stage_errors": result.per_stage_errors},
    )


@router.experiment(Experiment.rates, RATES_COLUMNS, summary="Approximation errors over p_list with a log-log rate fit.")
@add_process_time
def run_rates(cfg: ExperimentConfig) -> ExperimentOutput:
    tf = get_field(cfg.field_id, cfg.dim)
    D = cfg.build_domain()
    rows, floors = [], []
    for p in cfg.p_list:
        result = build_from_catalog(tf, D, _approx_config(cfg, p))
        bounds = corollary_bounds(result)
        row = _approx_row(tf, result)
        row.update(
            {
                "omega_1": bounds.omega1,
                "omega_2": bounds.omega2,
                "c_omega1": bounds.c_omega1,
                "c_omega2": bounds.c_omega2,
                "omega_h_le_classical": bounds.omega_h <= min(bounds.omega1, bounds.omega2) + 1e-12,
            }
        )
        rows.append(row)
        floors.append(result.error_floor)
    fit = fit_rate([(row["p"], row["sup_error"]) for row in rows], floors=floors)
    for row, used in zip(rows, fit.used):
        row.update({"used_in_fit": used, "slope": fit.slope, "intercept": fit.intercept, "fit_residual": fit.residual})
    return ExperimentOutput(tables={"rates": Table(columns=RATES_COLUMNS, rows=rows)})
