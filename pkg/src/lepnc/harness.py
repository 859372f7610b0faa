"""Convergence-study harness: manufactured test cases, error norms measured
against the interpolant of the exact solution, a driver over mesh families
and refinement levels, and CSV emission.

All cases live on the unit square with identity diffusion and no flux
source; sources are the hand-derived closed forms of u - lap(zeta(u)).
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import LepncError, ZeroDenominator
from .mesh import (gen_cartesian, gen_hexagonal, gen_kershaw,
                   gen_locally_refined)
from .schemes import (LinearProblem, NewtonConfig, NonlinearProblem,
                      assemble_linear, newton_solve, solve_spd,
                      static_condense, zeta_carrier_mask)
from .space import (DEFAULT_DEGREE, broken_h1_norm, build_space,
                    interpolate_I, l2_norm, lumped_l2_norm, masslump)

FAMILIES = {
    "cartesian": gen_cartesian,
    "hexagonal": gen_hexagonal,
    "kershaw": gen_kershaw,
    "locref": gen_locally_refined,
}

SQRT2 = np.sqrt(2.0)


@dataclass
class TestCase:
    name: str
    kind: str                    # linear | stefan | pme
    u_exact: object              # (n,2) -> (n,)
    grad_u: object
    f: object
    z_exact: object = None       # zeta(u_exact)
    grad_z: object = None
    lap_z: object = None         # laplacian of zeta(u_exact)
    zeta: object = None
    dzeta: object = None
    zeta_inverse: object = None
    m: int = None
    safe_mask: object = None     # points where the strong residual is checked

    def strong_residual(self, pts):
        """Strong-form residual at smooth points (0 for a valid case):
        -lap(u) - f for the linear model, u - lap(zeta(u)) - f otherwise."""
        lap = self.lap_z(pts) if self.lap_z is not None else 0.0
        if self.kind == "linear":
            return -lap - self.f(pts)
        return self.u_exact(pts) - lap - self.f(pts)


def _s(pts):
    return (pts[:, 0] + pts[:, 1]) / SQRT2


def _stefan_zeta(v):
    v = np.asarray(v, float)
    return np.where(v <= 0.0, v, np.where(v >= 1.0, v - 1.0, 0.0))


def _stefan_dzeta(v):
    v = np.asarray(v, float)
    return np.where(v < 0.0, 1.0, np.where(v >= 1.0, 1.0, 0.0))


def _pme_zeta(m):
    def zeta(v):
        v = np.asarray(v, float)
        return np.abs(v) ** (m - 1) * v
    return zeta


def _pme_dzeta(m):
    def dzeta(v):
        v = np.asarray(v, float)
        return m * np.abs(v) ** (m - 1)
    return dzeta


def _pme_zeta_inverse(m):
    def inv(t):
        t = np.asarray(t, float)
        return np.sign(t) * np.abs(t) ** (1.0 / m)
    return inv


def _sinsin(pts):
    return np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])


def _grad_sinsin(pts):
    px, py = np.pi * pts[:, 0], np.pi * pts[:, 1]
    return np.pi * np.column_stack([np.cos(px) * np.sin(py),
                                    np.sin(px) * np.cos(py)])


def _make_linear():
    return TestCase(
        name="linear", kind="linear",
        u_exact=_sinsin, grad_u=_grad_sinsin,
        f=lambda p: 2.0 * np.pi ** 2 * _sinsin(p),
        lap_z=lambda p: -2.0 * np.pi ** 2 * _sinsin(p),
        z_exact=_sinsin, grad_z=_grad_sinsin,
        safe_mask=lambda p: np.ones(len(p), bool))


def _make_s1():
    def u(p):
        return (_s(p) - 0.5) ** 3

    def gu(p):
        g = 3.0 * (_s(p) - 0.5) ** 2 / SQRT2
        return np.column_stack([g, g])

    def z(p):
        return np.minimum(u(p), 0.0)

    def gz(p):
        s = _s(p)
        g = np.where(s < 0.5, 3.0 * (s - 0.5) ** 2, 0.0) / SQRT2
        return np.column_stack([g, g])

    def lap_z(p):
        s = _s(p)
        return np.where(s < 0.5, 6.0 * (s - 0.5), 0.0)

    def f(p):
        return u(p) - lap_z(p)

    return TestCase(
        name="S1", kind="stefan", u_exact=u, grad_u=gu, f=f,
        z_exact=z, grad_z=gz, lap_z=lap_z,
        zeta=_stefan_zeta, dzeta=_stefan_dzeta,
        safe_mask=lambda p: np.abs(_s(p) - 0.5) > 1e-3)


def _make_s2():
    gamma = 1.0 / 3.0

    def u(p):
        s = _s(p)
        return np.where(s >= gamma, np.cosh(s - gamma), 0.0)

    def gu(p):
        s = _s(p)
        g = np.where(s >= gamma, np.sinh(s - gamma), 0.0) / SQRT2
        return np.column_stack([g, g])

    def z(p):
        s = _s(p)
        return np.where(s >= gamma, np.cosh(s - gamma) - 1.0, 0.0)

    def gz(p):
        return gu(p)

    def lap_z(p):
        return u(p)

    return TestCase(
        name="S2", kind="stefan", u_exact=u, grad_u=gu,
        f=lambda p: np.zeros(len(p)),
        z_exact=z, grad_z=gz, lap_z=lap_z,
        zeta=_stefan_zeta, dzeta=_stefan_dzeta,
        safe_mask=lambda p: np.abs(_s(p) - gamma) > 1e-3)


def _make_p1(m):
    pi2 = np.pi ** 2

    def z(p):
        return _sinsin(p) ** m

    def gz(p):
        return (m * _sinsin(p) ** (m - 1))[:, None] * _grad_sinsin(p)

    def lap_z(p):
        u = _sinsin(p)
        out = -2.0 * pi2 * m * u ** m
        if m >= 2:
            px, py = np.pi * p[:, 0], np.pi * p[:, 1]
            sq = (np.cos(px) ** 2 * np.sin(py) ** 2
                  + np.sin(px) ** 2 * np.cos(py) ** 2)
            out = out + m * (m - 1) * u ** (m - 2) * pi2 * sq
        return out

    def f(p):
        return _sinsin(p) - lap_z(p)

    return TestCase(
        name=f"P1-m{m}", kind="pme", u_exact=_sinsin, grad_u=_grad_sinsin,
        f=f, z_exact=z, grad_z=gz, lap_z=lap_z,
        zeta=_pme_zeta(m), dzeta=_pme_dzeta(m),
        zeta_inverse=_pme_zeta_inverse(m), m=m,
        safe_mask=lambda p: _sinsin(p) > 1e-3)


def _make_p2():
    rho, m = 0.3, 2

    def r2(p):
        return (p[:, 0] - 0.5) ** 2 + (p[:, 1] - 0.5) ** 2

    def u(p):
        return np.maximum(rho ** 2 - r2(p), 0.0)

    def gu(p):
        inside = (r2(p) < rho ** 2)[:, None]
        return np.where(inside, -2.0 * (p - 0.5), 0.0)

    def z(p):
        return u(p) ** 2

    def gz(p):
        return (2.0 * u(p))[:, None] * gu(p)

    def lap_z(p):
        r = r2(p)
        return np.where(r < rho ** 2, 16.0 * r - 8.0 * rho ** 2, 0.0)

    def f(p):
        return u(p) - lap_z(p)

    return TestCase(
        name="P2", kind="pme", u_exact=u, grad_u=gu, f=f,
        z_exact=z, grad_z=gz, lap_z=lap_z,
        zeta=_pme_zeta(m), dzeta=_pme_dzeta(m),
        zeta_inverse=_pme_zeta_inverse(m), m=m,
        safe_mask=lambda p: np.abs(r2(p) - rho ** 2) > 1e-3)


def registry(validate=True):
    """The 8 manufactured cases; optionally re-checks the strong residual
    at 100 random smooth interior points."""
    cases = [_make_linear(), _make_s1(), _make_s2(),
             _make_p1(1), _make_p1(2), _make_p1(3), _make_p1(4), _make_p2()]
    if validate:
        rng = np.random.default_rng(20240911)
        for case in cases:
            pts = rng.uniform(0.05, 0.95, size=(400, 2))
            pts = pts[case.safe_mask(pts)][:100]
            res = case.strong_residual(pts)
            scale = max(1.0, float(np.abs(case.f(pts)).max()))
            assert np.abs(res).max() <= 1e-8 * scale, case.name
    return cases


def get_case(name, validate=False):
    for case in registry(validate):
        if case.name == name:
            return case
    raise KeyError(f"unknown test case {name!r}")


# ---------------------------------------------------------------------------
# error norms and reporting


@dataclass
class Row:
    level: int
    h: float = None
    ncells: int = None
    ndofs: int = None
    e_l2: float = None
    e_h1: float = None
    e_l2ml: float = None
    e_h1z: float = None
    newton_iters: int = None
    error: str = None            # failure message if the level failed


@dataclass
class ConvergenceReport:
    case: str
    family: str
    varpi: float
    rows: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    pairwise: dict = field(default_factory=dict)

    COLUMNS = {"L2error": "e_l2", "H1error": "e_h1",
               "L2error_ml": "e_l2ml", "EnergyError": "e_h1z"}

    def compute_rates(self):
        for col, attr in self.COLUMNS.items():
            pts = [(r.h, getattr(r, attr)) for r in self.rows
                   if r.error is None and getattr(r, attr) is not None]
            if len(pts) < 2:
                continue
            hs = np.log([p[0] for p in pts])
            es = np.log([p[1] for p in pts])
            self.pairwise[col] = list(np.diff(es) / np.diff(hs))
            tail = slice(-3, None) if len(pts) >= 3 else slice(None)
            a = np.column_stack([hs[tail], np.ones(len(hs[tail]))])
            slope = np.linalg.lstsq(a, es[tail], rcond=None)[0][0]
            self.rates[col] = float(slope)


def compute_errors(space, ml, u_field, z_field, case,
                   degree=DEFAULT_DEGREE):
    """Relative errors against the interpolant of the exact solution."""
    iu = interpolate_I(space, case.u_exact, degree)
    out = {}
    if case.kind == "linear":
        den_l2 = l2_norm(iu, degree)
        den_h1 = broken_h1_norm(iu, degree)
        if den_l2 == 0.0 or den_h1 == 0.0:
            raise ZeroDenominator("interpolant norm vanishes")
        out["e_l2"] = l2_norm(u_field - iu, degree) / den_l2
        out["e_h1"] = broken_h1_norm(u_field - iu, degree) / den_h1
    else:
        iz = interpolate_I(space, case.z_exact, degree)
        den_ml = lumped_l2_norm(ml, iu)
        den_h1z = broken_h1_norm(iz, degree)
        if den_ml == 0.0 or den_h1z == 0.0:
            raise ZeroDenominator("interpolant norm vanishes")
        out["e_l2ml"] = lumped_l2_norm(ml, u_field - iu) / den_ml
        out["e_h1z"] = broken_h1_norm(z_field - iz, degree) / den_h1z
    return out


def _exact_init(space, ml, case, degree=DEFAULT_DEGREE):
    """Unknown vector of the interpolated exact solution (per convention)."""
    iu = interpolate_I(space, case.u_exact, degree)
    iz = interpolate_I(space, case.z_exact, degree)
    carries = zeta_carrier_mask(space, ml.varpi)
    return np.where(carries, iz.coeffs, iu.coeffs)


#: Newton budget used by the driver: rate studies on fine Stefan/PME levels
#: legitimately need more than the solver's conservative default of 50
#: iterations (the active set settles a few cells per damped step).
HARNESS_NEWTON = NewtonConfig(max_iter=400)


def run_level(case, mesh, varpi=0.0, condense=False, init="zero",
              degree=DEFAULT_DEGREE, newton_config=None):
    """Solve one mesh level; returns (row fields dict, u_field, z_field)."""
    if newton_config is None:
        newton_config = HARNESS_NEWTON
    space = build_space(mesh, degree)
    ml = masslump(space, varpi)
    if case.kind == "linear":
        problem = LinearProblem(f=case.f, g=case.u_exact)
        system = assemble_linear(space, problem, degree)
        if condense:
            cond = static_condense(system)
            u_field = cond.recover(solve_spd(cond))
        else:
            u_field = solve_spd(system)
        z_field = u_field
        iters = None
    else:
        problem = NonlinearProblem(
            zeta=case.zeta, dzeta=case.dzeta, f=case.f,
            dirichlet_u=case.u_exact, dirichlet_z=case.z_exact,
            zeta_inverse=case.zeta_inverse)
        x0 = _exact_init(space, ml, case, degree) if init == "exact" else None
        u_field, z_field, report = newton_solve(
            space, ml, problem, newton_config, x0, degree)
        iters = report.iterations
    errs = compute_errors(space, ml, u_field, z_field, case, degree)
    errs["ndofs"] = space.dofmap.ndofs
    errs["newton_iters"] = iters
    return errs, u_field, z_field


def run_family(case, family, levels, varpi=0.0, condense=False, init="zero",
               degree=DEFAULT_DEGREE, newton_config=None) -> ConvergenceReport:
    if isinstance(case, str):
        case = get_case(case)
    if list(levels) != sorted(set(levels)):
        raise ValueError("levels must be strictly increasing")
    gen = FAMILIES[family]
    report = ConvergenceReport(case.name, family, varpi)
    for n in levels:
        row = Row(level=n)
        try:
            mesh = gen(n)
            row.h = mesh.h_max
            row.ncells = mesh.n_cells
            errs, _, _ = run_level(case, mesh, varpi, condense, init,
                                   degree, newton_config)
            row.ndofs = errs["ndofs"]
            row.newton_iters = errs["newton_iters"]
            for key in ("e_l2", "e_h1", "e_l2ml", "e_h1z"):
                setattr(row, key, errs.get(key))
        except LepncError as exc:
            row.error = str(exc)
        report.rows.append(row)
    report.compute_rates()
    return report


# ---------------------------------------------------------------------------
# emission


CSV_HEADER = "meshsize,ncells,ndofs,L2error,H1error,L2error_ml,EnergyError,newton_iters"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.16e}"


def emit(report, path=None, fmt="csv", stream=None):
    """Write the CSV (header, one row per level, `# rate` footer lines) and
    print a readable table."""
    if fmt != "csv":
        raise ValueError(f"unsupported format {fmt!r}")
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in report.rows:
        cells = [_fmt(r.h), _fmt(r.ncells), _fmt(r.ndofs), _fmt(r.e_l2),
                 _fmt(r.e_h1), _fmt(r.e_l2ml), _fmt(r.e_h1z),
                 _fmt(r.newton_iters)]
        buf.write(",".join(cells) + "\n")
    for col, val in report.rates.items():
        buf.write(f"# rate {col}={val:.17g}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)

    out = stream if stream is not None else None
    lines = [f"case={report.case} family={report.family} "
             f"varpi={report.varpi}"]
    lines.append(f"{'n':>5} {'h':>10} {'cells':>7} {'dofs':>7} "
                 f"{'L2':>10} {'H1':>10} {'L2ml':>10} {'H1z':>10} {'it':>4}")
    for r in report.rows:
        if r.error is not None:
            lines.append(f"{r.level:>5} FAILED: {r.error}")
            continue

        def e(v):
            return f"{v:.3e}" if v is not None else "-".rjust(9)
        it = str(r.newton_iters) if r.newton_iters is not None else "-"
        lines.append(f"{r.level:>5} {r.h:>10.4e} {r.ncells:>7} {r.ndofs:>7} "
                     f"{e(r.e_l2):>10} {e(r.e_h1):>10} {e(r.e_l2ml):>10} "
                     f"{e(r.e_h1z):>10} {it:>4}")
    for col, val in report.rates.items():
        lines.append(f"rate {col} = {val:.3f}")
    table = "\n".join(lines)
    if out is not None:
        out.write(table + "\n")
    else:
        print(table)
    return text
