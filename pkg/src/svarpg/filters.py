"""Time-domain representation: truncated filter algebra and covariance sequences.

Filters are finitely supported Z-indexed matrix sequences.  Causal filters
start at lag 0; tilted convolutions produce two-sided supports.  All infinite
objects (geometric filter series, covariance sequences) are truncated at an
explicit lag horizon with a reported tail estimate; the stability conditions
enforced by the model module make those tails geometric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonConvergentError,
    SelfPairError,
    SemanticError,
)
from .graph import Trek
from .model import SvarModel, check_stability, contemporaneous_solve_matrix, reduced_lag_matrices


@dataclass(frozen=True)
class FiniteFilter:
    """Matrix filter with explicit support [start, start + len - 1]."""

    start: int
    values: np.ndarray  # (n_lags, rows, cols)

    def __post_init__(self):
        if self.values.ndim != 3:
            raise DimensionMismatchError("filter values must be (lags, rows, cols)")

    @classmethod
    def from_scalar(cls, seq: Iterable[float], start: int = 0) -> "FiniteFilter":
        arr = np.asarray(list(seq), dtype=float).reshape(-1, 1, 1)
        return cls(start=start, values=arr)

    @classmethod
    def zeros(cls, n_lags: int, rows: int, cols: int, start: int = 0) -> "FiniteFilter":
        return cls(start=start, values=np.zeros((n_lags, rows, cols)))

    @classmethod
    def unit(cls, dim: int = 1) -> "FiniteFilter":
        return cls(start=0, values=np.eye(dim)[None, :, :].copy())

    @property
    def n_lags(self) -> int:
        return self.values.shape[0]

    @property
    def end(self) -> int:
        return self.start + self.n_lags - 1

    @property
    def rows(self) -> int:
        return self.values.shape[1]

    @property
    def cols(self) -> int:
        return self.values.shape[2]

    @property
    def is_scalar(self) -> bool:
        return self.rows == 1 and self.cols == 1

    def at(self, s: int) -> np.ndarray:
        """Value at lag s; zero outside the stored support."""
        if self.start <= s <= self.end:
            return self.values[s - self.start]
        return np.zeros((self.rows, self.cols))

    def scalar_at(self, s: int) -> float:
        return float(self.at(s)[0, 0])

    def scalar_values(self) -> np.ndarray:
        if not self.is_scalar:
            raise DimensionMismatchError("not a scalar filter")
        return self.values[:, 0, 0]

    def l1_norm(self) -> float:
        return float(np.sqrt((self.values**2).sum(axis=(1, 2))).sum())

    def transpose(self) -> "FiniteFilter":
        return FiniteFilter(start=self.start, values=self.values.transpose(0, 2, 1).copy())

    def entry(self, i: int, j: int) -> "FiniteFilter":
        return FiniteFilter(start=self.start, values=self.values[:, i : i + 1, j : j + 1].copy())

    def truncate(self, lo: int, hi: int) -> "FiniteFilter":
        """Restrict support to [lo, hi]."""
        if lo > hi:
            raise SemanticError("empty truncation window")
        out = np.zeros((hi - lo + 1, self.rows, self.cols))
        src_lo = max(lo, self.start)
        src_hi = min(hi, self.end)
        if src_lo <= src_hi:
            out[src_lo - lo : src_hi - lo + 1] = self.values[
                src_lo - self.start : src_hi - self.start + 1
            ]
        return FiniteFilter(start=lo, values=out)

    def total(self) -> np.ndarray:
        """Sum over the whole support (the transfer function at frequency zero)."""
        return self.values.sum(axis=0)


def convolve(a: FiniteFilter, b: FiniteFilter) -> FiniteFilter:
    """(a * b)(u) = sum_t a(t) b(u - t)."""
    if a.cols != b.rows:
        raise DimensionMismatchError(
            f"inner dimensions differ: {a.rows}x{a.cols} * {b.rows}x{b.cols}"
        )
    out = np.zeros((a.n_lags + b.n_lags - 1, a.rows, b.cols))
    for i in range(a.n_lags):
        out[i : i + b.n_lags] += np.einsum("rn,tnc->trc", a.values[i], b.values)
    return FiniteFilter(start=a.start + b.start, values=out)


def tilted_convolve(a: FiniteFilter, b: FiniteFilter) -> FiniteFilter:
    """(a ^* b)(v) = sum_t a(t + v) b(t); support runs both ways."""
    if a.cols != b.rows:
        raise DimensionMismatchError(
            f"inner dimensions differ: {a.rows}x{a.cols} ^* {b.rows}x{b.cols}"
        )
    out = np.zeros((a.n_lags + b.n_lags - 1, a.rows, b.cols))
    for t_idx in range(b.n_lags):
        shift = b.n_lags - 1 - t_idx
        out[shift : shift + a.n_lags] += np.einsum("tan,nc->tac", a.values, b.values[t_idx])
    return FiniteFilter(start=a.start - b.end, values=out)


def direct_effect_filter(m: SvarModel, v: str, w: str, L: int) -> FiniteFilter:
    """Lag response of w to v through the direct edges and w's auto-dependencies.

    Follows the recursion that folds each cross coefficient phi_{v,w}(k) into
    the auto-regressive dynamics of the target w.  Identically zero when there
    is no edge v -> w.
    """
    if v == w:
        raise SelfPairError(
            "direct effect filters are defined for distinct processes; "
            "auto-dependencies live in the internal dynamics filter"
        )
    if w not in m.processes or v not in m.processes:
        raise SemanticError(f"unknown process in pair ({v}, {w})")
    a = m.auto_coeffs(w)
    b = m.cross_coeffs(v, w)
    p = m.order
    lam = np.zeros(L + 1)
    for s in range(L + 1):
        acc = b[s] if s <= p else 0.0
        for j in range(1, min(s, p) + 1):
            acc += lam[s - j] * a[j]
        lam[s] = acc
    return FiniteFilter.from_scalar(lam)


def internal_dynamics_filter(m: SvarModel, v: str, L: int) -> FiniteFilter:
    """Response of a process to its own innovation through its auto-dependencies."""
    if v not in m.processes:
        raise SemanticError(f"unknown process {v}")
    a = m.auto_coeffs(v)
    p = m.order
    f = np.zeros(L + 1)
    f[0] = 1.0
    for j in range(1, L + 1):
        f[j] = sum(a[k] * f[j - k] for k in range(1, min(j, p) + 1))
    return FiniteFilter.from_scalar(f)


def edge_filter_matrix(m: SvarModel, names: tuple[str, ...], L: int) -> FiniteFilter:
    """Stack direct effect filters into one (L+1, n, n) filter; diagonal zero."""
    n = len(names)
    values = np.zeros((L + 1, n, n))
    for i, src in enumerate(names):
        for j, dst in enumerate(names):
            if src != dst and m.has_edge(src, dst):
                values[:, i, j] = direct_effect_filter(m, src, dst, L).scalar_values()
    return FiniteFilter(start=0, values=values)


def lambda_matrix(m: SvarModel, L: int) -> FiniteFilter:
    """Direct effect filters between observed processes."""
    return edge_filter_matrix(m, m.observed, L)


def gamma_matrix(m: SvarModel, L: int) -> FiniteFilter:
    """Direct effect filters from latent to observed processes, (L+1, d, m)."""
    d, n = len(m.latents), len(m.observed)
    values = np.zeros((L + 1, d, n))
    for i, src in enumerate(m.latents):
        for j, dst in enumerate(m.observed):
            if m.has_edge(src, dst):
                values[:, i, j] = direct_effect_filter(m, src, dst, L).scalar_values()
    return FiniteFilter(start=0, values=values)


def _power_series(lam: FiniteFilter, L: int, tail_tol: float, k_max: int) -> FiniteFilter:
    """Geometric series of a square filter, truncated to lag L.

    Divergence shows up in one of two ways: the power norms stop decaying
    within the iteration budget (zero-lag cycles), or they grow geometrically
    until the support leaves the lag window and the truncated norm collapses
    to zero in one step.  Both raise NonConvergentError.
    """
    n = lam.rows
    total = FiniteFilter.unit(n).truncate(0, L)
    power = FiniteFilter.unit(n)
    norms: list[float] = []
    k_hard = max(k_max, n * (L + 1) + 2)
    for k in range(1, k_hard + 1):
        power = convolve(power, lam).truncate(0, L)
        norm = power.l1_norm()
        if norm < tail_tol:
            if norms and norms[-1] > 10.0 * max(norms[0], 1.0):
                raise NonConvergentError(
                    f"filter powers grew to l1 norm {norms[-1]:.3g} before leaving "
                    f"the lag window; loop gain is likely >= 1 (or increase L)"
                )
            return total
        total = FiniteFilter(start=0, values=total.values + power.values)
        norms.append(norm)
        if k == k_max and norms[-1] >= 0.999 * min(norms):
            raise NonConvergentError(
                f"filter powers not decaying after {k_max} iterations "
                f"(last l1 norm {norm:.3g}); loop gain is likely >= 1"
            )
    raise NonConvergentError(
        f"filter power series did not reach tail tolerance {tail_tol:g} "
        f"within {k_hard} iterations"
    )


def default_k_max(m: SvarModel) -> int:
    return 10 * max(m.n_processes, 1) * (m.order + 1)


def lambda_infinity(
    m: SvarModel, L: int = 128, tail_tol: float = 1e-10, k_max: int | None = None
) -> FiniteFilter:
    """Truncated geometric series sum_k Lambda^k over the observed processes."""
    lam = lambda_matrix(m, L)
    return _power_series(lam, L, tail_tol, k_max or default_k_max(m))


def ccf(
    m: SvarModel,
    x: str,
    y: str,
    controls: Iterable[str] = (),
    L: int = 128,
    tail_tol: float = 1e-10,
    k_max: int | None = None,
) -> FiniteFilter:
    """Controlled causal effect filter of x on y.

    Equals the sum of path filters over all paths from x to y that never pass
    through a control and never revisit x; computed as the (x, y) entry of the
    filter series of the model with all edges into x and the controls removed.
    """
    controls = set(controls)
    if x not in m.observed or y not in m.observed:
        raise SemanticError("cause and target must be observed processes")
    if y in controls:
        raise SemanticError("target cannot be controlled")
    if not controls <= set(m.observed):
        raise SemanticError("controls must be observed processes")
    blocked = controls | {x}

    lam = lambda_matrix(m, L)
    values = lam.values.copy()
    for name in blocked:
        values[:, :, m.observed.index(name)] = 0.0
    series = _power_series(
        FiniteFilter(start=0, values=values), L, tail_tol, k_max or default_k_max(m)
    )
    return series.entry(m.observed.index(x), m.observed.index(y))


@dataclass(frozen=True)
class AcsSequence:
    """Auto-covariance sequence C(0..L); C(-tau) is implied by C(tau)^T.

    ``tail_bound`` estimates the total weight outside the stored horizon,
    suitable for bounding Fourier truncation error.
    """

    labels: tuple[str, ...]
    values: np.ndarray  # (L + 1, n, n)
    tail_bound: float = 0.0

    @property
    def max_lag(self) -> int:
        return self.values.shape[0] - 1

    def at(self, tau: int) -> np.ndarray:
        if tau >= 0:
            if tau > self.max_lag:
                return np.zeros_like(self.values[0])
            return self.values[tau]
        return self.at(-tau).T

    def entry(self, v: str, w: str, tau: int) -> float:
        return float(self.at(tau)[self.labels.index(v), self.labels.index(w)])

    def to_filter(self) -> FiniteFilter:
        """Two-sided filter over [-max_lag, max_lag], negative side transposed."""
        L = self.max_lag
        values = np.stack([self.at(tau) for tau in range(-L, L + 1)])
        return FiniteFilter(start=-L, values=values)


def _two_sided_to_acs(
    labels: tuple[str, ...], composite: FiniteFilter, L_acs: int
) -> AcsSequence:
    values = np.stack([composite.at(tau) for tau in range(L_acs + 1)])
    # weight the composite carries beyond the horizon, plus a geometric
    # extrapolation for what the finite filter supports themselves cut off
    beyond = 0.0
    mags = []
    for tau in range(composite.start, composite.end + 1):
        mag = float(np.abs(composite.at(tau)).max())
        if abs(tau) > L_acs:
            beyond += mag
        mags.append((abs(tau), mag))
    edge_mags = sorted(mags)[-8:]
    last = max(m for _, m in edge_mags) if edge_mags else 0.0
    ratio = 0.9
    tail = beyond + last * ratio / (1.0 - ratio)
    return AcsSequence(labels=labels, values=values, tail_bound=tail)


def _internal_acs(m: SvarModel, names: tuple[str, ...], L: int) -> FiniteFilter:
    """Two-sided diagonal covariance filter of the internal dynamics."""
    n = len(names)
    out = FiniteFilter.zeros(2 * L + 1, n, n, start=-L)
    for i, name in enumerate(names):
        f = internal_dynamics_filter(m, name, L)
        auto = tilted_convolve(f, f)
        w = m.noise_var[name]
        for tau in range(auto.start, auto.end + 1):
            out.values[tau + L, i, i] = w * auto.scalar_at(tau)
    return out


def _latent_acs(m: SvarModel, L: int, tail_tol: float, k_max: int) -> FiniteFilter:
    """Covariance filter of the latent block (latents may drive each other)."""
    c_int = _internal_acs(m, m.latents, L)
    if _latent_edges(m):
        lam_l = edge_filter_matrix(m, m.latents, L)
        lam_inf = _power_series(lam_l, L, tail_tol, k_max)
        return convolve(lam_inf.transpose(), tilted_convolve(c_int, lam_inf))
    return c_int


def _latent_edges(m: SvarModel) -> set[tuple[str, str]]:
    latents = set(m.latents)
    return {
        (src, dst)
        for (src, dst, _), val in m.coeffs.items()
        if val != 0.0 and src in latents and dst in latents and src != dst
    }


def projected_noise_acs(
    m: SvarModel, L: int = 128, tail_tol: float = 1e-10, k_max: int | None = None
) -> FiniteFilter:
    """Covariance filter of the observed noise block: internal dynamics plus
    the direct latent contributions.  Off-diagonal entries are exactly the
    latent confounding captured by bidirected edges of the latent projection."""
    k_max = k_max or default_k_max(m)
    out = _internal_acs(m, m.observed, L)
    if m.latents:
        gamma = gamma_matrix(m, L)
        c_lat = _latent_acs(m, L, tail_tol, k_max)
        latent_part = convolve(gamma.transpose(), tilted_convolve(c_lat, gamma))
        merged = FiniteFilter.zeros(
            max(out.end, latent_part.end) - min(out.start, latent_part.start) + 1,
            out.rows,
            out.cols,
            start=min(out.start, latent_part.start),
        )
        for part in (out, latent_part):
            lo = part.start - merged.start
            merged.values[lo : lo + part.n_lags] += part.values
        return merged
    return out


def acs_via_sep(
    m: SvarModel,
    L_acs: int = 64,
    L_filter: int = 128,
    tail_tol: float = 1e-10,
    k_max: int | None = None,
) -> AcsSequence:
    """Observed auto-covariance sequence through the process-level equation.

    Composes the filter series with the projected noise covariance:
    C = (Lambda_inf)^T * C_noise ^* Lambda_inf.
    """
    k_max = k_max or default_k_max(m)
    lam_inf = lambda_infinity(m, L_filter, tail_tol, k_max)
    c_li = projected_noise_acs(m, L_filter, tail_tol, k_max)
    composite = convolve(lam_inf.transpose(), tilted_convolve(c_li, lam_inf))
    return _two_sided_to_acs(m.observed, composite, L_acs)


def acs_via_ma_infinity(m: SvarModel, L_acs: int = 64, L_psi: int = 512) -> AcsSequence:
    """Observed auto-covariance sequence through the moving-average expansion.

    Independent oracle: expands the full reduced-form VAR (observed and latent
    processes together) into its MA filter and sums the quadratic form.
    """
    report = check_stability(m, grid_size=64)
    if not report.stable and m.order > 0:
        raise NonConvergentError(
            f"companion spectral radius {report.companion_spectral_radius:.6f} >= 1"
        )
    n = m.n_processes
    b = contemporaneous_solve_matrix(m)
    w_prime = b @ np.diag([m.noise_var[name] for name in m.processes]) @ b.T

    a = reduced_lag_matrices(m)  # A[k] = (I - Phi0^T)^{-1} Phi(k)^T
    phi_prime = np.zeros_like(a)
    for k in range(1, m.order + 1):
        phi_prime[k] = a[k].T  # Phi(k) (I - Phi(0))^{-1}

    psi = np.zeros((L_psi + 1, n, n))
    psi[0] = np.eye(n)
    for k in range(1, L_psi + 1):
        acc = np.zeros((n, n))
        for l in range(1, min(k, m.order) + 1):
            acc += psi[k - l] @ phi_prime[l]
        psi[k] = acc

    weighted = np.einsum("ij,kjl->kil", w_prime, psi)
    values = np.zeros((L_acs + 1, n, n))
    for tau in range(L_acs + 1):
        count = L_psi + 1 - tau
        values[tau] = np.einsum("kij,kil->jl", psi[tau : tau + count], weighted[:count])

    n_obs = m.n_observed
    tail = float(np.sqrt((psi[-1] ** 2).sum()))
    return AcsSequence(
        labels=m.observed, values=values[:, :n_obs, :n_obs], tail_bound=tail
    )


def trek_monomial_filter(m: SvarModel, trek: Trek, L: int = 128) -> FiniteFilter:
    """Scalar two-sided covariance contribution of one trek.

    Convolves the left path filter with the relevant projected-noise entry and
    tilted-convolves with the right path filter.
    """
    noise = projected_noise_acs(m, L)
    if trek.bidirected is None:
        i = j = m.observed.index(trek.top)
    else:
        i = m.observed.index(trek.bidirected[0])
        j = m.observed.index(trek.bidirected[1])
    middle = noise.entry(i, j)

    left = _path_filter(m, trek.left, L)
    right = _path_filter(m, trek.right, L)
    return convolve(left, tilted_convolve(middle, right))


def _path_filter(m: SvarModel, path, L: int) -> FiniteFilter:
    out = FiniteFilter.unit(1)
    for src, dst in path.edge_list():
        out = convolve(out, direct_effect_filter(m, src, dst, L)).truncate(0, L)
    return out
