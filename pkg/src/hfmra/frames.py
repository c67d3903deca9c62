"""Lattice frames on the Fourier side: admissibility, coefficients, generator search.

Level-j systems use the unitary dilation U_j g = 2^{2j} g(2^j .), whose Fourier
side is 2^{-2j} dilate_field(g, j), together with translations by 2^-j gamma.
Then <f, L_{2^-j gamma} U_j g> = <U_j^{-1} f, L_gamma g>.

Coefficients over a lattice box are computed per frequency on the quadrature
nodes. For gamma = delta_s(m, d k, l + d m k / 2) the central phase factors out:

    c[m, k, l] = sum_lam w exp(-i lam s^2 l)
                 sum_y w_y exp(i lam p_m y / sigma) sum_c F_c(y) conj(G_c(y + sigma q_k))

with F = columns of the test field and G = columns of the generator, both
evaluated as functions on the nodes, and sigma = sqrt(|lam| / 2 pi).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .group import GroupElement, LatticeSpec, dilate, lattice_indices
from .hermite import HermiteBasis, hermite_table, rep_matrix
from .plancherel import LambdaGrid, OperatorField, dilate_field, field_inner, hs_norm_sq, translate, band_upper
from .shannon import MultiplicityFn, SincSystem, grid_band, rank_of


class InadmissibleError(ValueError):
    """The lattice cannot carry a tight frame for the given multiplicity function."""


class SupportError(ValueError):
    pass


# ---------------------------------------------------------------- admissibility


@dataclass(frozen=True)
class AdmissibilityReport:
    max_ratio: float
    passed: bool
    violating_bands: list
    support_ok: bool
    worst_mu: float
    rhs: float

    def as_dict(self) -> dict:
        return {
            "max_ratio": self.max_ratio,
            "pass": self.passed,
            "violating_bands": self.violating_bands,
            "support_ok": self.support_ok,
            "worst_mu": self.worst_mu,
            "rhs": self.rhs,
        }


def admissible(m: MultiplicityFn, lat: LatticeSpec, grid: LambdaGrid, tol: float = 1e-12) -> AdmissibilityReport:
    """Check m(mu)|mu| + m(mu - 1/r)|mu - 1/r| <= 1/(d r) in the sinc-frequency variable mu.

    Evaluated at every grid frequency, at the closed band edges, and at all of
    these shifted by 1/r so that the second term is probed where it is nonzero.
    """
    r, dg = lat.r, lat.d
    rhs = 1.0 / (dg * r)
    edges = [band_upper(k, m.d) for k in range(0, max(grid.k_max, 0) + 8)]
    base = np.concatenate([grid.lam, edges, [-e for e in edges]])
    mus = np.concatenate([base, base + 1.0 / r])
    worst, worst_mu, bad = 0.0, 0.0, set()
    support_ok = True
    for mu in mus:
        mu = float(mu)
        shifted = mu - 1.0 / r
        lhs = m.at_sinc_frequency(mu) * abs(mu) + m.at_sinc_frequency(shifted) * abs(shifted)
        ratio = lhs / rhs
        if m.at_sinc_frequency(mu) > 0 and abs(mu) > rhs * (1 + tol):
            support_ok = False
        if ratio > worst:
            worst, worst_mu = ratio, mu
        if ratio > 1.0 + tol:
            for nu in (mu, shifted):
                if nu != 0 and m.at_sinc_frequency(nu) > 0:
                    bad.add(grid_band(nu, m.d))
    return AdmissibilityReport(
        max_ratio=worst,
        passed=bool(worst <= 1.0 + tol and support_ok),
        violating_bands=sorted(bad),
        support_ok=support_ok,
        worst_mu=worst_mu,
        rhs=rhs,
    )


# ---------------------------------------------------------------- generators


def support_columns(f: OperatorField) -> np.ndarray:
    """Boolean (points, n): which columns carry a nonzero entry."""
    return np.any(f.matrices != 0, axis=1)


def check_support(f: OperatorField, allowed: np.ndarray, what: str = "generator"):
    if np.any(support_columns(f) & ~allowed):
        raise SupportError(f"{what} has entries outside its allowed column support")


def system_dilate(g: OperatorField, j: int) -> OperatorField:
    """Fourier side of U_j g = 2^{2j} g(2^j .)."""
    if j == 0:
        return g
    if np.all(g.grid.shift_map(j) < 0):
        return OperatorField.zeros(g.grid, g.n)
    return dilate_field(g, j) * (2.0 ** (-2 * j))


def wavelet_from_scaling(phi: OperatorField, sys: SincSystem) -> OperatorField:
    """psi = Q_0 U_1 phi: the finer copy of phi restricted to the W_0 columns."""
    check_support(phi, sys.column_mask(0), "scaling generator")
    finer = system_dilate(phi, 1)
    mask = sys.detail_mask(0)
    return OperatorField(phi.grid, np.where(mask[:, None, :], finer.matrices, 0))


def analytic_support_radius(f: OperatorField) -> float:
    """Largest |lam| over grid points where f is nonzero (0 for the zero field)."""
    nz = np.any(f.matrices.reshape(len(f.grid), -1) != 0, axis=1)
    return float(np.max(np.abs(f.grid.lam[nz]))) if np.any(nz) else 0.0


def band_envelope(f: OperatorField) -> float:
    """Upper edge of the outermost band on which f is nonzero."""
    nz = np.any(f.matrices.reshape(len(f.grid), -1) != 0, axis=1)
    if not np.any(nz):
        return 0.0
    return band_upper(int(np.min(f.grid.band[nz])), f.grid.d)


# ---------------------------------------------------------------- coefficients


def real_times_complex(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ b for real a and complex b as one real product on interleaved parts."""
    b = np.ascontiguousarray(b)
    return (a @ b.view(float)).view(complex)


def translation_scale(lat: LatticeSpec, j: int, half: bool = False) -> float:
    """Scale s of the level-j translation set delta_s(Gamma_d)."""
    return lat.scale * 2.0 ** (-j) * (0.5 if half else 1.0)


def frame_coeff(
    f: OperatorField,
    gen: OperatorField,
    gamma: GroupElement,
    j: int,
    basis: HermiteBasis,
) -> complex:
    """<f, L_{2^-j gamma} U_j gen>, straight from translate and field_inner."""
    moved = translate(system_dilate(gen, j), dilate(2.0 ** (-j), gamma), basis)
    return field_inner(f, moved)


@dataclass(frozen=True)
class System:
    """A generator already dilated to its level, with its translation scale."""

    gen: OperatorField
    scale: float


class CoefficientEngine:
    """Batched lattice coefficients for fixed tests against translate systems."""

    def __init__(self, basis: HermiteBasis, grid: LambdaGrid, d: int, radius: int):
        self.basis = basis
        self.grid = grid
        self.d = d
        self.radius = radius
        self.nodes, self.qw = basis.rule
        self.h0 = basis.node_table
        self.axis = np.arange(-radius, radius + 1, dtype=float)

    def _shift_table(self, sigma: float, scale: float) -> np.ndarray:
        """h_j(y + sigma q_k) for all k, shape (n, K * N) with k-major columns."""
        q = scale * self.d * self.axis
        pts = (self.nodes[None, :] + sigma * q[:, None]).ravel()
        return hermite_table(self.basis.n_max, pts)

    def _modulation(self, lam: float, sigma: float, scale: float) -> np.ndarray:
        p = scale * self.axis
        return np.exp(1j * (lam / sigma) * p[:, None] * self.nodes[None, :])

    def _central(self, scale: float) -> np.ndarray:
        """exp(-i lam s^2 l) for all grid points and l, shape (points, L)."""
        return np.exp(-1j * np.outer(self.grid.lam, scale * scale * self.axis))

    def node_values(self, mats: np.ndarray) -> np.ndarray:
        """Columns of a stack of matrices (T, n, r) as functions on the nodes: (N, T, r)."""
        T, n, r = mats.shape
        flat = np.ascontiguousarray(mats.transpose(1, 0, 2)).reshape(n, T * r)
        return real_times_complex(self.h0.T, flat).reshape(-1, T, r)

    def coefficients(self, tests: list[OperatorField], systems: list[System]) -> list[np.ndarray]:
        """Coefficient arrays c[t, m, k, l] = <f_t, L_gamma gen> for each system."""
        T = len(tests)
        if T == 0:
            raise ValueError("empty test set")
        K = self.axis.size
        n = self.basis.n_max
        N = self.nodes.size
        stack = np.stack([f.matrices for f in tests], axis=1)  # (points, T, n, n)
        per = [np.zeros((len(self.grid), K, T, K), dtype=complex) for _ in systems]
        cols = [support_columns(s.gen) for s in systems]
        for i in range(len(self.grid)):
            active = [si for si in range(len(systems)) if cols[si][i].any()]
            if not active:
                continue
            lam = float(self.grid.lam[i])
            sigma = math.sqrt(abs(lam) / (2.0 * math.pi))
            union = np.any([cols[si][i] for si in active], axis=0)
            uidx = np.flatnonzero(union)
            fvals = self.node_values(stack[i][:, :, uidx])  # (N, T, |union|)
            for si in active:
                s = systems[si]
                cidx = np.flatnonzero(cols[si][i])
                sel = np.searchsorted(uidx, cidx)
                g = s.gen.matrices[i][:, cidx]
                hs = self._shift_table(sigma, s.scale)
                gq = real_times_complex(hs.T, g).reshape(K, N, cidx.size)
                fsel = np.ascontiguousarray(fvals[:, :, sel])
                b = np.matmul(fsel, np.ascontiguousarray(np.conj(gq).transpose(1, 2, 0)))  # (N, T, K)
                mod = self._modulation(lam, sigma, s.scale) * self.qw[None, :]
                h = mod @ b.reshape(N, T * K)
                per[si][i] = self.grid.weight[i] * h.reshape(K, T, K)
        out = []
        for si, s in enumerate(systems):
            ph = self._central(s.scale)
            out.append(np.einsum("il,imtk->tmkl", ph, per[si]))
        return out


def box_energy(c: np.ndarray, radius: int) -> np.ndarray:
    """Per-test energy over the central sub-box of the given radius."""
    R = (c.shape[1] - 1) // 2
    if radius > R:
        raise ValueError("sub-box larger than the computed box")
    sl = slice(R - radius, R + radius + 1)
    sub = c[:, sl, sl, sl]
    return np.sum((sub.real**2 + sub.imag**2).reshape(c.shape[0], -1), axis=1)


# ---------------------------------------------------------------- reports


@dataclass
class FrameReport:
    lower_est: float
    upper_est: float
    tightness_residual: float
    truncation_radius: int
    test_count: int
    ratios: list = field(default_factory=list)
    span_deficient: list = field(default_factory=list)
    j_range: tuple | None = None

    def as_dict(self) -> dict:
        return {
            "lower_est": self.lower_est,
            "upper_est": self.upper_est,
            "tightness_residual": self.tightness_residual,
            "radius": self.truncation_radius,
            "test_count": self.test_count,
            "j_range": list(self.j_range) if self.j_range is not None else None,
            "per_test": [
                {"index": i, "ratio": r, "span_deficient": i in self.span_deficient}
                for i, r in enumerate(self.ratios)
            ],
        }


def report_from_energies(energy: np.ndarray, norms: np.ndarray, radius: int, j_range=None) -> FrameReport:
    ratios = energy / norms
    return FrameReport(
        lower_est=float(np.min(ratios)),
        upper_est=float(np.max(ratios)),
        tightness_residual=float(np.max(np.abs(ratios - 1.0))),
        truncation_radius=radius,
        test_count=len(ratios),
        ratios=[float(x) for x in ratios],
        span_deficient=[i for i, x in enumerate(ratios) if x < 1e-12],
        j_range=j_range,
    )


def _norms(tests) -> np.ndarray:
    if not tests:
        raise ValueError("empty test set")
    return np.array([hs_norm_sq(f) for f in tests])


def level_systems(gen: OperatorField, lat: LatticeSpec, j_set, half: bool = False) -> list[System]:
    return [System(system_dilate(gen, j), translation_scale(lat, j, half)) for j in j_set]


def frame_energies(
    gen: OperatorField,
    lat: LatticeSpec,
    j_set,
    radius: int,
    tests: list[OperatorField],
    basis: HermiteBasis,
    half: bool = False,
    radii=None,
) -> dict[int, np.ndarray]:
    """Per-test energy summed over the levels in j_set, for each requested sub-radius."""
    radii = [radius] if radii is None else radii
    big = max(radii)
    eng = CoefficientEngine(basis, gen.grid, lat.d, big)
    systems = level_systems(gen, lat, j_set, half)
    coeffs = eng.coefficients(tests, systems)
    return {R: sum(box_energy(c, R) for c in coeffs) for R in radii}


def frame_bounds_estimate(
    gen: OperatorField,
    lat: LatticeSpec,
    j_set,
    radius: int,
    tests: list[OperatorField],
    basis: HermiteBasis,
    half: bool = False,
) -> FrameReport:
    if radius < 1:
        raise ValueError("radius must be at least 1")
    norms = _norms(tests)
    energy = frame_energies(gen, lat, j_set, radius, tests, basis, half)[radius]
    js = list(j_set)
    return report_from_energies(energy, norms, radius, (min(js), max(js)))


def parseval_check(
    psi: OperatorField,
    lat: LatticeSpec,
    j_range: tuple[int, int],
    radius: int,
    tests: list[OperatorField],
    basis: HermiteBasis,
    half: bool = True,
    radii=None,
) -> dict[int, FrameReport]:
    """Wavelet-system energy ratios, one report per radius in ``radii``."""
    norms = _norms(tests)
    js = range(j_range[0], j_range[1] + 1)
    radii = [radius] if radii is None else sorted(set(radii) | {radius})
    energies = frame_energies(psi, lat, js, radius, tests, basis, half, radii)
    return {R: report_from_energies(e, norms, R, tuple(j_range)) for R, e in energies.items()}


def write_coefficient_csv(path, coeffs: dict[int, np.ndarray], lat: LatticeSpec, half: bool):
    """Rows j, test, m, k, l, p, q, t, |c| for every level and lattice index."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "test", "m", "k", "l", "p", "q", "t", "abs_coeff"])
        for j, c in coeffs.items():
            R = (c.shape[1] - 1) // 2
            s = translation_scale(lat, j, half)
            idx = lattice_indices(R)
            for t in range(c.shape[0]):
                mags = np.abs(c[t]).ravel()
                for (m, k, l), a in zip(idx, mags):
                    p, q, tt = s * m, s * lat.d * k, s * s * (l + 0.5 * lat.d * m * k)
                    w.writerow([j, t, m, k, l, repr(p), repr(q), repr(tt), repr(float(a))])


# ---------------------------------------------------------------- generator search


class ScalingObjective:
    """J(phi) = sum_t (E_t(phi) - |f_t|^2)^2 for the level-0 system {L_gamma phi}.

    Node values of the test columns are cached once; each evaluation runs one
    forward pass and, when asked, one backward pass of the coefficient engine.
    The gradient is taken in the Plancherel-weighted metric, so a descent
    step changes phi(lam) by -eta * grad(lam) at every grid point.
    """

    def __init__(self, tests, lat: LatticeSpec, radius: int, basis: HermiteBasis, mask: np.ndarray):
        self.tests = tests
        self.lat = lat
        self.radius = radius
        self.basis = basis
        self.mask = mask
        self.grid = tests[0].grid
        self.norms = _norms(tests)
        self.eng = CoefficientEngine(basis, self.grid, lat.d, radius)
        self.points = [i for i in range(len(self.grid)) if mask[i].any()]
        stack = np.stack([f.matrices for f in tests], axis=1)
        self.fvals = {}
        for i in self.points:
            cidx = np.flatnonzero(mask[i])
            self.fvals[i] = self.eng.node_values(stack[i][:, :, cidx])
        self.central = self.eng._central(lat.scale)

    def _per_point(self, i, phi_mats):
        lam = float(self.grid.lam[i])
        sigma = math.sqrt(abs(lam) / (2.0 * math.pi))
        hs = self.eng._shift_table(sigma, self.lat.scale)
        mod = self.eng._modulation(lam, sigma, self.lat.scale)
        return lam, sigma, hs, mod

    def evaluate(self, phi: OperatorField, gradient: bool = True):
        K = self.eng.axis.size
        T = len(self.tests)
        N = self.eng.nodes.size
        qw = self.eng.qw
        per = np.zeros((len(self.grid), K, T, K), dtype=complex)
        cache = {}
        for i in self.points:
            cidx = np.flatnonzero(self.mask[i])
            lam, sigma, hs, mod = self._per_point(i, phi.matrices)
            g = phi.matrices[i][:, cidx]
            gq = real_times_complex(hs.T, g).reshape(K, N, cidx.size)
            b = np.matmul(self.fvals[i], np.ascontiguousarray(np.conj(gq).transpose(1, 2, 0)))
            h = (mod * qw[None, :]) @ b.reshape(N, T * K)
            per[i] = self.grid.weight[i] * h.reshape(K, T, K)
            if gradient:
                cache[i] = (hs, mod)
        c = np.einsum("il,imtk->tmkl", self.central, per)
        energy = np.sum((c.real**2 + c.imag**2).reshape(T, -1), axis=1)
        resid = energy - self.norms
        value = float(np.sum(resid**2))
        if not gradient:
            return value, energy, None
        alpha = 2.0 * resid
        beta = np.einsum("il,tmkl->itkm", self.central, np.conj(c))  # (points, T, K, M)
        grad = np.zeros_like(phi.matrices)
        for i in self.points:
            cidx = np.flatnonzero(self.mask[i])
            hs, mod = cache.pop(i)
            u = (beta[i].reshape(T * K, K) @ mod).reshape(T, K, N)
            a = np.ascontiguousarray(np.transpose(u * (alpha[:, None, None] * qw[None, None, :]), (2, 1, 0)))
            v = np.matmul(a, self.fvals[i])  # (N, K, r)
            gi = real_times_complex(hs, v.transpose(1, 0, 2).reshape(K * N, cidx.size))
            grad[i][:, cidx] = 2.0 * gi
        return value, energy, OperatorField(self.grid, grad)


@dataclass
class OptimizeResult:
    phi: OperatorField
    trace: list
    aborted: bool
    reason: str

    @property
    def reduction(self) -> float:
        first, last = self.trace[0], min(self.trace)
        return first / last if last > 0 else math.inf


def optimize_generator(
    init: OperatorField,
    lat: LatticeSpec,
    radius: int,
    tests: list[OperatorField],
    steps: int,
    step_size: float,
    basis: HermiteBasis,
    sys: SincSystem,
    patience: int = 10,
    gate: bool = True,
) -> OptimizeResult:
    """Gradient descent on the tightness objective with V_0 reprojection after each step.

    Aborts when the objective has increased on ``patience`` consecutive steps.
    """
    if gate:
        rep = admissible(MultiplicityFn(sys.d), lat, sys.grid)
        if not rep.passed:
            raise InadmissibleError(f"lattice fails admissibility, max_ratio={rep.max_ratio:.6g}")
    mask = sys.column_mask(0)
    check_support(init, mask, "initial generator")
    obj = ScalingObjective(tests, lat, radius, basis, mask)
    phi = init
    value, _, grad = obj.evaluate(phi)
    trace = [value]
    rises = 0
    for _ in range(steps):
        step = phi.matrices - (step_size / len(tests)) * grad.matrices
        phi = OperatorField(phi.grid, np.where(mask[:, None, :], step, 0))
        new_value, _, grad = obj.evaluate(phi)
        rises = rises + 1 if new_value > trace[-1] else 0
        trace.append(new_value)
        if not math.isfinite(new_value):
            return OptimizeResult(phi, trace, True, "objective is not finite")
        if rises >= patience:
            return OptimizeResult(phi, trace, True, f"objective rose on {patience} consecutive steps")
    return OptimizeResult(phi, trace, False, "")


def calibrated_start(
    sys: SincSystem,
    lat: LatticeSpec,
    radius: int,
    basis: HermiteBasis,
    rng: np.random.Generator,
) -> OperatorField:
    """Seeded random V_0 generator rescaled column by column.

    Each column of phi(lam) is scaled so that the frame operator of the
    truncated system has mean diagonal 1 over the rows of that column, which
    is necessary for tightness on V_0.
    """
    grid = sys.grid
    n = sys.n_max
    mask = sys.column_mask(0)
    shape = (len(grid), n, n)
    m = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mask[:, None, :]
    eng = CoefficientEngine(basis, grid, lat.d, radius)
    K = eng.axis.size
    N = eng.nodes.size
    out = np.zeros(shape, dtype=complex)
    for i in range(len(grid)):
        cidx = np.flatnonzero(mask[i])
        if cidx.size == 0:
            continue
        lam = float(grid.lam[i])
        sigma = math.sqrt(abs(lam) / (2.0 * math.pi))
        hs = eng._shift_table(sigma, lat.scale)
        u = m[i][:, cidx]
        uq = real_times_complex(hs.T, u).reshape(K, N, cidx.size)
        mod = np.conj(eng._modulation(lam, sigma, lat.scale)) * eng.qw[None, :]  # (M, N)
        # rows of rho_{mk} u in the truncated basis, for every (m, k)
        x = (mod[None, :, :, None] * uq[:, None, :, :])  # (K, M, N, r)
        proj = np.tensordot(eng.h0, x, axes=([1], [2]))  # (n, K, M, r)
        energy = np.sum(np.abs(proj) ** 2, axis=(0, 1, 2))  # per column
        diag = K * grid.weight[i] * energy / n
        out[i][:, cidx] = u / np.sqrt(diag)[None, :]
    return OperatorField(grid, out)


def frame_test_fields(sys: SincSystem, count: int, seed: int, kind: str = "v0", j_range=None) -> list[OperatorField]:
    """Seeded test corpora.

    ``v0``: Gaussian fields in V_0. ``span``: Gaussian fields on the whole grid
    restricted to the columns of W_j for j in ``j_range``.
    """
    from .plancherel import hs_norm, random_field

    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        if kind == "v0":
            out.append(random_field(sys.grid, sys.n_max, rng, columns=sys.ranks(0)))
        elif kind == "span":
            lo, hi = j_range
            mask = sys.column_mask(hi + 1) & ~sys.column_mask(lo)
            f = random_field(sys.grid, sys.n_max, rng)
            f = OperatorField(f.grid, np.where(mask[:, None, :], f.matrices, 0))
            out.append(f * (1.0 / math.sqrt(hs_norm_sq(f))))
        elif kind == "grid":
            out.append(random_field(sys.grid, sys.n_max, rng))
        else:
            raise ValueError(f"unknown test corpus kind {kind!r}")
    return out


def detail_band_fields(sys: SincSystem, levels, seed: int) -> dict[int, OperatorField]:
    from .shannon import random_detail_field

    rng = np.random.default_rng(seed)
    return {j: random_detail_field(sys, j, rng) for j in levels}


def accuracy_probe(basis: HermiteBasis, systems: list[System], radius: int, d: int, tol: float = 1e-8):
    """Run the checked quadrature on the most oscillatory translate of each system."""
    for s in systems:
        nz = np.any(s.gen.matrices.reshape(len(s.gen.grid), -1) != 0, axis=1)
        if not np.any(nz):
            continue
        lam = float(np.max(np.abs(s.gen.grid.lam[nz])))
        corner = GroupElement(s.scale * radius, s.scale * d * radius, 0.0)
        rep_matrix(lam, corner, basis, check=True, tol=tol)
