# commands.py

"""
Command implementations behind the CLI.

Each command reads its blocks from a Scene, runs the numerical modules and
fills a Report. Module errors never escape: a SpectralContourError inside a
check group becomes a failed check carrying the error class and message.
"""

import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional

import numpy as np

from .calculus import (
    certify_operand,
    decomposition_mismatch,
    gamma_apply,
    nrange_boundary_points,
    nrange_inclusion,
    run_calculus_ensemble,
    support_sweep,
    sym_calculus_apply,
)
from .cauchy import cauchy_exterior, cauchy_interior, constant_samples, plemelj_residuals
from .contour import Contour, export_nodes_csv, make_contour, support_function
from .dlayer import (
    analytic_image,
    convexity_report,
    dl_evaluate,
    dl_jump_residual,
    interior_inverse_norm,
    np_matrix,
)
from .errors import NonConvexDomain, SpectralContourError, ValidationError
from .extremal import analytic_config_lower, bound_check, search_extremal, write_trace_csv
from .generators import Generator, Polynomial, Rational, random_polynomial
from .mapping import (
    delyon_estimate,
    normalize_unit_ball,
    putinar_sandberg_verify,
    run_mapping_ensemble,
    teardrop_boundary,
    write_ensemble_csv,
)
from .report import Report, environment_info, write_report
from .scene import Scene, scene_from_dict
from .settings import RunSettings
from .smoothing import (
    PointSet,
    SmoothingParams,
    build_domains,
    distance_field,
    make_grid,
    nesting_report,
    spectral_stability,
    write_field_csv,
)

logger = logging.getLogger(__name__)

SWEEP_ANGLES = 720
DISK_COLLAPSE_TRIALS = 20
DISK_COLLAPSE_DEGREE = 8


@dataclass
class RunContext:
    scene: Scene
    settings: RunSettings
    report: Report

    def tol(self, name: str) -> float:
        return self.settings.tol(name)

    def artifact(self, name: str) -> Optional[Path]:
        """Path for a CSV artifact, or None when CSV output is off."""
        if not self.settings.write_csv:
            return None
        path = self.settings.out_dir / f'{self.report.command}_{name}.csv'
        path.parent.mkdir(parents=True, exist_ok=True)
        self.report.artifacts.append(path.name)
        return path


@contextmanager
def guarded(report: Report, name: str) -> Iterator[None]:
    """Turn a module error inside the block into a failed check called ``name``."""
    try:
        yield
    except SpectralContourError as exc:
        logger.error(f"{name}: {type(exc).__name__}: {exc}")
        report.fail(name, exc)


def _contour(ctx: RunContext, nodes: Optional[int] = None) -> Contour:
    return make_contour(ctx.scene.contour.to_spec(nodes or ctx.settings.nodes))


def _default_center(c: Contour) -> complex:
    disk = c.disk()
    return disk[0] if disk is not None else c.centroid


def _boundary_data(c: Contour, scene: Scene) -> Dict[str, Generator]:
    """Scene functions, or a polynomial and a rational with a pole outside."""
    functions = scene.polynomials()
    if functions:
        return {f'f{k}': f for k, f in enumerate(functions)}
    center = _default_center(c)
    pole = center + c.diameter
    return {
        'square': Polynomial((0.0, 0.0, 1.0), center),
        'rational': Rational((1.0,), (-(pole - center), 1.0), center),
    }


# convexity

def run_convexity(ctx: RunContext) -> None:
    report = ctx.report
    c = _contour(ctx)
    results = report.results

    with guarded(report, 'convexity'):
        cr = convexity_report(c, ctx.tol('kernel_sign'), ctx.tol('np_norm'), ctx.tol('curvature_sign'))
        results['convexity'] = asdict(cr)
        if cr.is_convex:
            report.check_close('np_norm', cr.np_norm, 1.0, ctx.tol('np_norm'))
            report.check_at_least('min_kernel', cr.min_kernel, 0.0, ctx.tol('kernel_sign'))
        else:
            report.note('np_norm', cr.np_norm)
            report.note('min_kernel', cr.min_kernel)
        report.note('is_convex', cr.is_convex)
        doubled = convexity_report(_contour(ctx, 2 * c.n), ctx.tol('kernel_sign'), ctx.tol('np_norm'),
                                   ctx.tol('curvature_sign'))
        report.check_true('convexity_stable_under_refinement', doubled.is_convex == cr.is_convex,
                          value={'nodes': c.n, 'doubled': doubled.is_convex})

    with guarded(report, 'partition_of_unity'):
        K = np_matrix(c)
        report.check_at_most('row_sum', float(np.max(np.abs(K.row_sums - 1.0))), 0.0, ctx.tol('row_sum'))
        one = constant_samples(c, 1.0)
        tol = ctx.tol('partition_of_unity')
        far = c.centroid + 2.0 * c.diameter
        report.check_close('dl_one_interior', dl_evaluate(c, one, c.centroid, 'interior').real, 2.0, tol)
        report.check_close('dl_one_boundary', dl_evaluate(c, one, c.points[0], 0).real, 1.0, tol)
        report.check_close('dl_one_exterior', dl_evaluate(c, one, far, 'exterior').real, 0.0, tol)

    with guarded(report, 'analytic_image'):
        f = Polynomial((0.0, 0.0, 1.0), _default_center(c)).sample(c)
        image = analytic_image(c, f)
        report.check_at_most('antianalytic_residual', image.antianalytic_residual, 0.0, ctx.tol('antianalytic'))
        if c.disk() is not None:
            rng = np.random.default_rng(ctx.settings.seed)
            worst = 0.0
            for k in range(DISK_COLLAPSE_TRIALS):
                p = random_polynomial(rng, 1 + k % DISK_COLLAPSE_DEGREE, center=c.disk()[0])
                worst = max(worst, analytic_image(c, normalize_unit_ball(c, p)).disk_residual)
            report.check_at_most('disk_collapse', worst, 0.0, ctx.tol('disk_collapse'))

    with guarded(report, 'interior_inverse_norm'):
        inv = interior_inverse_norm(c)
        results['interior_inverse_norm'] = asdict(inv)
        report.check_at_most('interior_inverse_norm', inv.inv_norm, inv.delyon_bound, 0.0)

    path = ctx.artifact('np_matrix')
    if path is not None:
        np_matrix(c).export_csv(path)
        export_nodes_csv(c, ctx.artifact('nodes'))


# transforms

def run_transforms(ctx: RunContext) -> None:
    report = ctx.report
    c = _contour(ctx)
    tol = ctx.tol('plemelj')
    center = _default_center(c)
    far = center + 2.0 * c.diameter
    residuals = {}
    for name, gen in _boundary_data(c, ctx.scene).items():
        with guarded(report, f'{name}/plemelj'):
            phi = gen.sample(c)
            res = plemelj_residuals(c, phi)
            residuals[name] = asdict(res)
            report.check_at_most(f'{name}/plemelj_jump', res.jump_err, 0.0, tol)
            report.check_at_most(f'{name}/plemelj_interior', res.interior_err, 0.0, tol)
            report.check_at_most(f'{name}/plemelj_exterior', res.exterior_err, 0.0, tol)
            report.check_at_most(f'{name}/dl_jump', dl_jump_residual(c, phi), 0.0, tol)
            if phi.analytic:
                scale = max(1.0, phi.sup)
                inside = abs(cauchy_interior(c, phi, center) - complex(gen(center))) / scale
                report.check_at_most(f'{name}/cauchy_reproduction', inside, 0.0, tol)
                report.check_at_most(f'{name}/cauchy_exterior_vanishes', abs(cauchy_exterior(c, phi, far)) / scale,
                                     0.0, tol)
    report.results['plemelj'] = residuals
    path = ctx.artifact('nodes')
    if path is not None:
        export_nodes_csv(c, path)


# calculus

def run_calculus(ctx: RunContext) -> None:
    c = _contour(ctx)
    if ctx.scene.ensemble is not None:
        _calculus_ensemble(ctx, c)
    if ctx.scene.matrix is not None:
        _calculus_on_scene_matrix(ctx, c)


def _calculus_ensemble(ctx: RunContext, c: Contour) -> None:
    report = ctx.report
    block = ctx.scene.ensemble
    rows: List[dict] = []
    with guarded(report, 'calculus_ensemble'):
        rows = run_calculus_ensemble(
            c, block.count, block.dims, block.degree, block.seed,
            scale_fractions=block.fractions(),
            n_jobs=ctx.settings.n_jobs,
            tolerances=ctx.settings.tolerances,
        )
    if not rows:
        return
    certified = [row for row in rows if row['certified']]
    report.note('ensemble_trials', len(rows))
    report.note('ensemble_certified', len(certified))
    report.check_true('ensemble_certified_any', bool(certified), value=len(certified))
    if certified:
        report.check_at_most('ensemble_total_mass', _worst(certified, 'total_mass_error', max), 0.0,
                             ctx.tol('total_mass'))
        report.check_at_most('ensemble_decomposition', _worst(certified, 'decomposition_mismatch', max), 0.0,
                             ctx.tol('decomposition'))
        verdicts = [row['inclusion_agrees'] for row in certified if row['inclusion_agrees'] is not None]
        if verdicts:
            report.check_true('ensemble_inclusion_agrees', all(verdicts),
                              value={'agree': sum(verdicts), 'checked': len(verdicts)})
        included = [row for row in certified if row['included']]
        if included:
            worst = max(abs(row['sym_norm_at_one'] - 2.0) for row in included)
            report.check_at_most('ensemble_sym_norm_at_one', worst, 0.0, ctx.tol('sym_norm'))
    report.results['calculus_ensemble'] = rows


def _calculus_on_scene_matrix(ctx: RunContext, c: Contour) -> None:
    report = ctx.report
    try:
        op = certify_operand(ctx.scene.matrix.array(), c, ctx.tol('integer_count'))
    except SpectralContourError as exc:
        report.fail('certify_operand', exc)
        return
    report.note('inside_count', op.inside_count)

    with guarded(report, 'total_mass'):
        total = sym_calculus_apply(op, constant_samples(c, 1.0), tol=ctx.tol('decomposition'))
        err = float(np.linalg.norm(total - 2.0 * np.eye(op.dim), 'fro'))
        report.check_at_most('total_mass', err, 0.0, ctx.tol('total_mass'))

    for k, gen in enumerate(ctx.scene.polynomials()):
        with guarded(report, f'f{k}/calculus'):
            f = gen.sample(c)
            hom = float(np.linalg.norm(gamma_apply(op, f) - gen.matrix_value(op.A), 2))
            report.check_at_most(f'f{k}/homomorphism', hom, 0.0, ctx.tol('homomorphism'))
            report.check_at_most(f'f{k}/decomposition', decomposition_mismatch(op, f), 0.0, ctx.tol('decomposition'))

    with guarded(report, 'inclusion'):
        try:
            inc = nrange_inclusion(op, c, ctx.tol('inclusion_eig'), ctx.tol('support'))
        except NonConvexDomain as exc:
            report.note('inclusion', f'skipped: {exc}')
        else:
            report.results['inclusion'] = asdict(inc)
            report.note('included', inc.included)
            report.note('min_eig_P', inc.min_eig_P)
            report.note('support_slack', inc.support_slack)
            if inc.included:
                report.check_close('sym_norm_at_one', inc.sym_norm_at_one, 2.0, ctx.tol('sym_norm'))
            else:
                report.note('sym_norm_at_one', inc.sym_norm_at_one)

    path = ctx.artifact('nrange_support')
    if path is not None:
        thetas = np.linspace(0.0, 2 * np.pi, SWEEP_ANGLES, endpoint=False)
        data = np.column_stack([thetas, support_sweep(op.A, thetas), support_function(c, thetas)])
        np.savetxt(path, data, fmt='%.17g', delimiter=',', header='theta,h_nrange,h_domain', comments='')
        points = nrange_boundary_points(op.A, thetas)
        np.savetxt(ctx.artifact('nrange_boundary'), np.column_stack([points.real, points.imag]),
                   fmt='%.17g', delimiter=',', header='re,im', comments='')


# mapping

def _worst(rows: List[dict], key: str, pick: Callable, where: Callable = lambda row: True) -> Optional[float]:
    values = [row[key] for row in rows if row[key] is not None and where(row)]
    return float(pick(values)) if values else None


def run_mapping(ctx: RunContext) -> None:
    report = ctx.report
    block = ctx.scene.ensemble
    c = _contour(ctx)
    tol = ctx.tol('mapping')
    bound_tol = ctx.tol('bound')
    disk = c.disk() is not None
    rows: List[dict] = []

    children = np.random.SeedSequence(block.seed).spawn(len(block.dims))
    for dim, child in zip(block.dims, children):
        with guarded(report, f'ensemble/dim={dim}'):
            rows.extend(run_mapping_ensemble(
                c, block.count, dim, block.degree, child,
                scale_fraction=block.scale_fraction,
                vanish_at_center=block.vanish_at_center,
                n_jobs=ctx.settings.n_jobs,
                tolerances=ctx.settings.tolerances,
            ))

    if rows:
        kernel_free = lambda row: row['kernel_residual'] <= tol
        checks = [
            ('putinar_sandberg_radius', _worst(rows, 'numerical_radius', max, kernel_free), 1.0, tol, 'max'),
            ('okubo_norm', _worst(rows, 'okubo_norm', max, lambda r: disk or kernel_free(r)), 2.0, tol, 'max'),
            ('teardrop_slack', _worst(rows, 'teardrop_slack', min), 0.0, tol, 'min'),
            ('crouzeix07_slack', _worst(rows, 'crouzeix07_slack', min), 0.0, bound_tol, 'min'),
            ('rs18_slack', _worst(rows, 'rs18_slack', min), 0.0, bound_tol, 'min'),
            ('delyon_slack', _worst(rows, 'delyon_slack', min), 0.0, bound_tol, 'min'),
            ('crouzeix_term', _worst(rows, 'crouzeix_term', max), ctx.tol('crouzeix_absolute'), bound_tol, 'max'),
        ]
        for name, value, limit, allowance, side in checks:
            if value is None:
                continue
            if side == 'max':
                report.check_at_most(name, value, limit, allowance)
            else:
                report.check_at_least(name, value, limit, allowance)
        report.note('trials', len(rows))
        report.results['ensemble'] = rows

    if ctx.scene.matrix is not None:
        _mapping_on_scene_matrix(ctx, c)

    path = ctx.artifact('ensemble')
    if path is not None and rows:
        write_ensemble_csv(rows, path)


def _mapping_on_scene_matrix(ctx: RunContext, c: Contour) -> None:
    report = ctx.report
    try:
        op = certify_operand(ctx.scene.matrix.array(), c, ctx.tol('integer_count'))
    except SpectralContourError as exc:
        report.fail('certify_operand', exc)
        return
    functions = ctx.scene.polynomials() or [Polynomial((0.0, 1.0), _default_center(c))]
    reports = {}
    for k, gen in enumerate(functions):
        with guarded(report, f'f{k}/mapping'):
            f = normalize_unit_ball(c, gen)
            result = putinar_sandberg_verify(op, c, f, ctx.settings.tolerances)
            reports[f'f{k}'] = asdict(result)
            report.note(f'f{k}/numerical_radius', result.numerical_radius)
            report.note(f'f{k}/norm', result.okubo_norm)
            path = ctx.artifact(f'f{k}_teardrop') if c.disk() is not None else None
            if path is not None:
                thetas = np.linspace(0.0, 2 * np.pi, SWEEP_ANGLES, endpoint=False)
                fc = cauchy_interior(c, f, c.disk()[0])
                points = teardrop_boundary(fc, thetas)
                np.savetxt(path, np.column_stack([points.real, points.imag]),
                           fmt='%.17g', delimiter=',', header='re,im', comments='')
    with guarded(report, 'delyon_constant'):
        # equality case of the Delyon estimate
        slack = delyon_estimate(op, c, constant_samples(c, 1.0), ctx.settings.tolerances)
        report.check_close('delyon_constant_slack', slack, 0.0, ctx.tol('bound'))
    report.results['scene_matrix'] = reports


# extremal

def run_extremal(ctx: RunContext) -> None:
    report = ctx.report
    block = ctx.scene.extremal
    degree = block.degree if block else 3
    restarts = block.restarts if block else 8
    c = _contour(ctx)
    seed = ctx.settings.seed
    bound_tol = ctx.tol('bound')

    with guarded(report, 'extremal'):
        op = certify_operand(ctx.scene.matrix.array(), c, ctx.tol('integer_count'))
        result = search_extremal(op, c, degree, restarts, seed, n_jobs=ctx.settings.n_jobs,
                                 tolerances=ctx.settings.tolerances)
        report.results['extremal'] = result.to_dict()
        report.note('gamma_lb', result.gamma_lb)
        report.note('rho', result.rho)
        report.note('stalled', result.stalled)

        bounds = bound_check(result, ctx.settings.tolerances)
        report.results['bounds'] = asdict(bounds)
        report.check_at_least('slack_rho_bound', bounds.slack_rho_bound, 0.0, bound_tol)
        report.check_at_least('slack_cp', bounds.slack_cp, 0.0, bound_tol)
        if bounds.disk_slack is not None:
            report.check_at_least('disk_slack', bounds.disk_slack, 0.0, bound_tol)
        report.check_at_most('rho_np_norm', abs(result.rho), convexity_report(c).np_norm, bound_tol)
        report.note('measure_residual', bounds.measure_residual)
        report.note('rho_config_excess', bounds.rho_config_excess)
        report.note('closing_margin', bounds.closing_margin)

        path = ctx.artifact('trace')
        if path is not None:
            write_trace_csv(result, path)

    if block is not None and block.config_degree is not None:
        with guarded(report, 'analytic_configuration'):
            estimate = analytic_config_lower(c, block.config_degree, block.config_samples, seed,
                                             tolerances=ctx.settings.tolerances)
            report.check_at_most('analytic_configuration', estimate, 1.0, ctx.tol('config_ceiling'))


# smooth

def run_smooth(ctx: RunContext) -> None:
    report = ctx.report
    block = ctx.scene.smoothing
    try:
        X = PointSet(np.asarray(block.points, dtype=complex), convex_hull_mode=block.hull)
        p = SmoothingParams(epsilon=block.epsilon, levels=block.levels, h=block.h, modes=block.modes,
                            nodes=block.nodes, kappa=block.kappa)
    except ValueError as exc:
        raise ValidationError(f"Invalid smoothing block: {exc}", problems=[f'smoothing: {exc}']) from exc

    domains = []
    with guarded(report, 'build_domains'):
        domains = build_domains(X, p, n_jobs=ctx.settings.n_jobs, tolerances=ctx.settings.tolerances)
        report.results['levels'] = [
            {'level': d.level, 't': d.t, 's': d.s, 'components': len(d.components),
             'fit_residual': d.fit_residual, 'damping': d.damping, 'min_gradient': d.min_gradient,
             'contours': d.scene_fragments()}
            for d in domains
        ]
    if not domains:
        return

    if len(domains) > 1:
        with guarded(report, 'nesting'):
            for level in nesting_report(domains, X, p, ctx.settings.tolerances):
                report.check_true(f'level{level.level}/x_inside', level.x_inside)
                if level.nested is not None:
                    report.check_true(f'level{level.level}/nested', level.nested)
                report.check_at_most(f'level{level.level}/hausdorff', level.hausdorff, level.hausdorff_bound, 0.0)
                if level.convex is not None:
                    report.check_true(f'level{level.level}/convex', level.convex)

    if ctx.scene.matrix is not None:
        functions = ctx.scene.polynomials() or [Polynomial((0.0, 1.0))]
        with guarded(report, 'spectral_stability'):
            stability = spectral_stability(ctx.scene.matrix.array(), functions[0], domains, X, p,
                                           tolerances=ctx.settings.tolerances)
            report.results['stability'] = asdict(stability)
            ratios = [row.ratio for row in stability.rows]
            report.check_true('ratios_monotone', bool(np.all(np.diff(ratios) >= -1e-9)), value=ratios)
            report.note('extrapolated_ratio', stability.extrapolated_ratio)
            report.note('first_kappa_violation', stability.first_kappa_violation)
            report.note('tail_excess', stability.tail_excess)
            report.note('tail_allowance', stability.tail_allowance)
            report.note('tail_within', stability.tail_within)

    path = ctx.artifact('distance_field')
    if path is not None:
        grid = make_grid(X, p)
        write_field_csv(grid, distance_field(X, grid), path)
        for d in domains:
            for k, comp in enumerate(d.components):
                export_nodes_csv(comp, ctx.artifact(f'level{d.level}_component{k}'))


COMMANDS: Dict[str, Callable[[RunContext], None]] = {
    'convexity': run_convexity,
    'transforms': run_transforms,
    'calculus': run_calculus,
    'mapping': run_mapping,
    'extremal': run_extremal,
    'smooth': run_smooth,
}


# selftest

_UNIT_CIRCLE = {'family': 'circle', 'center': [0.0, 0.0], 'radius': 1.0}
_ELLIPSE = {'family': 'ellipse', 'center': [0.0, 0.0], 'a': 2.0, 'b': 1.0}
_STAR = {'family': 'star', 'base_radius': 1.0, 'amplitude': 0.3, 'lobes': 3}
_NILPOTENT = {'real': [[0.0, 2.0], [0.0, 0.0]]}
_IDENTITY = [{'coefficients': [[0.0, 0.0], [1.0, 0.0]]}]

SELFTEST_SCENES = (
    ('circle', 'convexity', {'contour': _UNIT_CIRCLE}),
    ('shifted_circle', 'convexity', {'contour': {'family': 'circle', 'center': [0.5, -0.25], 'radius': 2.0}}),
    ('small_circle', 'convexity', {'contour': {'family': 'circle', 'center': [0.0, 1.0], 'radius': 0.3}}),
    ('ellipse', 'convexity', {'contour': _ELLIPSE}),
    ('star', 'convexity', {'contour': _STAR}),
    ('circle', 'transforms', {'contour': _UNIT_CIRCLE, 'nodes': 512}),
    ('ellipse', 'transforms', {'contour': _ELLIPSE, 'nodes': 512}),
    ('star', 'transforms', {'contour': _STAR, 'nodes': 512}),
    ('nilpotent', 'calculus', {'contour': _UNIT_CIRCLE, 'matrix': _NILPOTENT, 'functions': _IDENTITY}),
    ('random_matrices', 'calculus', {
        'contour': _ELLIPSE,
        'ensemble': {'count': 20, 'dims': [2, 3, 4, 5, 6], 'degree': 4, 'seed': 11},
    }),
    ('straddling', 'calculus', {
        'contour': _ELLIPSE,
        'ensemble': {'count': 100, 'dims': [2, 3, 4, 5], 'degree': 4, 'seed': 13,
                     'scale_fractions': [0.5, 0.8, 0.95, 1.05, 1.2]},
    }),
    ('disk', 'mapping', {
        'contour': _UNIT_CIRCLE, 'matrix': _NILPOTENT, 'functions': _IDENTITY,
        'ensemble': {'count': 50, 'dims': [2, 3], 'degree': 4, 'seed': 7, 'vanish_at_center': True},
    }),
    ('disk_teardrop', 'mapping', {
        'contour': _UNIT_CIRCLE,
        'ensemble': {'count': 100, 'dims': [3], 'degree': 3, 'seed': 11},
    }),
    ('ellipse', 'mapping', {
        'contour': _ELLIPSE,
        'ensemble': {'count': 10, 'dims': [2, 4], 'degree': 3, 'seed': 5},
    }),
    ('nilpotent', 'extremal', {
        'contour': _UNIT_CIRCLE, 'matrix': _NILPOTENT, 'seed': 3,
        'extremal': {'degree': 3, 'restarts': 4},
    }),
    ('ellipse', 'extremal', {
        'contour': _ELLIPSE, 'matrix': {'real': [[0.3, 0.5], [0.0, -0.2]]}, 'seed': 3,
        'extremal': {'degree': 3, 'restarts': 4, 'config_degree': 4, 'config_samples': 50},
    }),
    ('point', 'smooth', {
        'smoothing': {'points': [[0.0, 0.0]], 'epsilon': 0.4, 'levels': 4, 'h': 0.00625},
    }),
    ('triangle_hull', 'smooth', {
        'smoothing': {'points': [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 'hull': True, 'epsilon': 0.4,
                      'levels': 4, 'h': 0.00625, 'modes': 64, 'nodes': 512},
    }),
    ('disk_sample', 'smooth', {
        'smoothing': {'points': [[float(np.cos(2 * np.pi * k / 64)), float(np.sin(2 * np.pi * k / 64))]
                                 for k in range(64)],
                      'hull': True, 'epsilon': 0.4, 'levels': 4, 'h': 0.00625, 'modes': 64, 'nodes': 512},
        'matrix': _NILPOTENT, 'functions': _IDENTITY,
    }),
)

# Exact constants reproduced by the selftest scenes: (scene, command) -> result checks
SELFTEST_EXPECTATIONS = {
    ('star', 'convexity'): lambda r: [('star_not_convex', not r['convexity']['is_convex'], None),
                                      ('star_np_norm_above_one', r['convexity']['np_norm'] > 1.05, None)],
    ('circle', 'convexity'): lambda r: [('disk_inverse_norm', abs(r['interior_inverse_norm']['inv_norm'] - 1.5) <= 0.01,
                                         r['interior_inverse_norm']['inv_norm'])],
    ('nilpotent', 'extremal'): lambda r: [
        ('gamma_lb_equals_two', abs(r['extremal']['gamma_lb'] - 2.0) <= 1e-4, r['extremal']['gamma_lb']),
        ('rho_equals_zero', abs(r['extremal']['rho']) <= 1e-4, r['extremal']['rho']),
        ('slack_cp_equals_sqrt2_minus_1', abs(r['bounds']['slack_cp'] - (np.sqrt(2.0) - 1.0)) <= 1e-4,
         r['bounds']['slack_cp']),
    ],
    ('random_matrices', 'calculus'): lambda r: [
        ('all_certified', all(row['certified'] for row in r['calculus_ensemble']), len(r['calculus_ensemble'])),
    ],
    ('straddling', 'calculus'): lambda r: [
        ('enough_certified', sum(row['certified'] for row in r['calculus_ensemble']) >= 80,
         sum(row['certified'] for row in r['calculus_ensemble'])),
        ('both_verdicts_seen', {row['included'] for row in r['calculus_ensemble'] if row['certified']} >= {True, False},
         None),
    ],
    ('disk_teardrop', 'mapping'): lambda r: [('hundred_trials', len(r['ensemble']) == 100, len(r['ensemble']))],
    ('disk', 'mapping'): lambda r: [
        ('hundred_trials', len(r['ensemble']) == 100, len(r['ensemble'])),
        ('nilpotent_radius_one', abs(r['scene_matrix']['f0']['numerical_radius'] - 1.0) <= 1e-6,
         r['scene_matrix']['f0']['numerical_radius']),
        ('nilpotent_norm_two', abs(r['scene_matrix']['f0']['okubo_norm'] - 2.0) <= 1e-6,
         r['scene_matrix']['f0']['okubo_norm']),
    ],
    ('disk_sample', 'smooth'): lambda r: [
        ('ratio_approaches_two', abs(r['stability']['extrapolated_ratio'] - 2.0) <= 0.1,
         r['stability']['extrapolated_ratio']),
    ],
}


def selftest_digest() -> str:
    body = json.dumps([[name, command, scene] for name, command, scene in SELFTEST_SCENES], sort_keys=True)
    return hashlib.sha256(body.encode('utf-8')).hexdigest()


def run_selftest(ctx: RunContext) -> None:
    report = ctx.report
    summary = []
    for name, command, data in SELFTEST_SCENES:
        scene = scene_from_dict(data)
        sub = Report(command=command, scene_digest=scene.digest)
        settings = RunSettings(
            nodes=scene.nodes or ctx.settings.nodes,
            seed=scene.seed if scene.seed is not None else ctx.settings.seed,
            n_jobs=ctx.settings.n_jobs,
            tolerances=ctx.settings.tolerances,
        )
        logger.info(f"Selftest {name}/{command}")
        try:
            COMMANDS[command](RunContext(scene, settings, sub))
        except SpectralContourError as exc:
            sub.fail(command, exc)
        expectation = SELFTEST_EXPECTATIONS.get((name, command))
        if expectation is not None:
            try:
                for check, ok, value in expectation(sub.results):
                    sub.check_true(check, bool(ok), value=value)
            except (KeyError, TypeError) as exc:
                sub.check_true('expected_results_present', False, value=repr(exc))
        for record in sub.checks:
            record.name = f'{name}/{command}/{record.name}'
            report.add(record)
        summary.append({'scene': name, 'command': command, 'passed': sub.passed, 'checks': len(sub.checks)})
    report.results['scenes'] = summary


def run_command(command: str, scene: Optional[Scene], settings: RunSettings,
                cli_seed: Optional[int] = None) -> Report:
    """
    Run one command and write its report (and CSV artifacts) to the output directory.

    A seed given on the command line satisfies the seed requirement of
    stochastic commands.

    Raises:
        ValidationError: If the scene lacks blocks the command needs
    """
    if command == 'selftest':
        digest = selftest_digest()
        scene = scene or scene_from_dict({})
    else:
        if scene is None:
            raise ValidationError(f"Command '{command}' needs a scene file", problems=['--scene: required'])
        scene.require(command, seed=cli_seed)
        digest = scene.digest

    report = Report(
        command=command,
        scene_digest=digest,
        environment=environment_info(settings.nodes, settings.seed, settings.n_jobs),
        tolerances=settings.tolerances,
    )
    ctx = RunContext(scene, settings, report)
    start = time.perf_counter()
    runner = run_selftest if command == 'selftest' else COMMANDS[command]
    try:
        runner(ctx)
    except SpectralContourError as exc:
        report.fail(command, exc)
    report.timing['seconds'] = time.perf_counter() - start
    write_report(report, settings.out_dir / f'{command}_report.json')
    logger.info(f"{command}: {sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed "
                f"in {report.timing['seconds']:.2f}s")
    return report
