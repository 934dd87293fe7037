"""Convergence studies on manufactured solutions."""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field

from .assembly import PenaltyConfig, assemble_system, data_degree, solve_saddle
from .fields import Difference
from .mesh import build_structured_mesh
from .norms import ErrorRecord, compute_eoc, dg_norm, energy_norm, l2_norm, p_norm
from .reconstruction import ReconstructedSpace, default_patch_size

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("h", "n_elements", "l2_u", "eoc_l2", "dg_u", "eoc_dg", "energy_u",
               "p_cnorm", "lambda_m", "solve_seconds")

DEFAULT_LEVELS = {2: (10, 20, 40), 3: (4, 8)}
FULL_SWEEP_LEVELS = {2: (10, 20, 40, 80), 3: (4, 8, 16)}


class LevelFailure(RuntimeError):
    """A mesh level of a convergence run failed; the original error is ``__cause__``."""

    def __init__(self, n: int, cause: Exception):
        super().__init__(f"mesh level n={n}: {type(cause).__name__}: {cause}")
        self.n = n


@dataclass
class ConvergenceReport:
    problem: str
    order: int
    eta: float
    patch_size: int
    records: list = field(default_factory=list)

    def _eoc(self, attr):
        out = [float("nan")]
        for prev, cur in zip(self.records, self.records[1:]):
            out.append(compute_eoc(getattr(prev, attr), getattr(cur, attr), prev.h / cur.h))
        return out

    @property
    def eoc_l2(self) -> list:
        return self._eoc("l2_u")

    @property
    def eoc_dg(self) -> list:
        return self._eoc("dg_u")

    def rows(self) -> list:
        rows = []
        for r, el2, edg in zip(self.records, self.eoc_l2, self.eoc_dg):
            rows.append({"h": r.h, "n_elements": r.n_elements, "l2_u": r.l2_u, "eoc_l2": el2,
                         "dg_u": r.dg_u, "eoc_dg": edg, "energy_u": r.energy_u,
                         "p_cnorm": r.dg_p, "lambda_m": r.lambda_m,
                         "solve_seconds": r.solve_seconds})
        return rows

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in self.rows():
                w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])

    def table(self) -> str:
        head = f"{self.problem}  m={self.order}  eta={self.eta:g}  #S={self.patch_size}"
        lines = [head, "      h   n_elem        l2_u  eoc        dg_u  eoc     p_cnorm"]
        for row in self.rows():
            lines.append(f"{row['h']:7.4f} {row['n_elements']:8d} {row['l2_u']:11.4e} "
                         f"{row['eoc_l2']:4.2f} {row['dg_u']:11.4e} {row['eoc_dg']:4.2f} "
                         f"{row['p_cnorm']:11.4e}")
        return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return "nan" if math.isnan(x) else f"{x:.10e}"


def run_level(problem, order: int, n: int, penalties: PenaltyConfig, patch_size: int,
              dump_prefix=None) -> ErrorRecord:
    mesh = build_structured_mesh(problem.dim, n)
    space = ReconstructedSpace(mesh, order, patch_size)
    system = assemble_system(mesh, space, penalties, problem.f, problem.g1, problem.g2)
    if dump_prefix is not None:
        system.dump(f"{dump_prefix}_n{n}")
        space.write_diagnostics(f"{dump_prefix}_n{n}_patches.csv")
    t0 = time.perf_counter()
    sol = solve_saddle(system.A, system.B, system.C, system.rhs_u)
    elapsed = time.perf_counter() - t0
    err = Difference(problem.exact_field(), space.reconstruct(sol.u))
    deg = data_degree(order)
    return ErrorRecord(h=mesh.h, n_elements=mesh.n_elements, l2_u=l2_norm(err, mesh, deg),
                       dg_u=dg_norm(err, mesh, deg), energy_u=energy_norm(err, mesh, deg),
                       dg_p=p_norm(sol.p, mesh), lambda_m=space.lambda_m,
                       solve_seconds=elapsed)


def run_convergence(problem, order: int, levels, eta: float | None = None,
                    patch_size: int | None = None, dump_prefix=None) -> ConvergenceReport:
    """Solve ``problem`` on structured meshes with ``n`` subdivisions per side for each
    ``n`` in ``levels`` (strictly increasing) and collect error norms."""
    if order < 2:
        raise ValueError("order must be at least 2")
    levels = [int(n) for n in levels]
    if not levels or any(n < 1 for n in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be positive and strictly increasing")
    penalties = PenaltyConfig.default(problem.dim) if eta is None else PenaltyConfig(eta)
    patch_size = patch_size or default_patch_size(problem.dim, order)
    report = ConvergenceReport(problem.name, order, penalties.eta, patch_size)
    for n in levels:
        logger.info("%s: m=%d n=%d", problem.name, order, n)
        try:
            rec = run_level(problem, order, n, penalties, patch_size, dump_prefix)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            raise LevelFailure(n, exc) from exc
        report.records.append(rec)
        logger.info("  l2=%.4e dg=%.4e p=%.3e solve=%.1fs", rec.l2_u, rec.dg_u, rec.dg_p,
                    rec.solve_seconds)
    return report
