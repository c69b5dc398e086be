"""Latent-component SVAR model specifications and stability diagnostics.

A model is a set of named processes (observed and latent), a maximum lag,
a sparse coefficient map ``(from, to, lag) -> phi`` and per-process innovation
variances.  Every process has zero mean.  Edges with ``from == to`` and
``lag >= 1`` are auto-dependencies; contemporaneous self-loops are rejected,
and no observed process may point into a latent one.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import SchemaError, SemanticError, SingularContemporaneousError

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class SvarModel:
    """Validated SVAR specification.

    Attributes:
        observed: ordered observed process names.
        latents: ordered latent process names.
        order: maximum lag p (>= 0).
        coeffs: sparse map (from, to, lag) -> coefficient; absent means zero.
        noise_var: innovation variance per process (>= 0; the JSON schema
            requires strictly positive values, the in-memory type tolerates
            zero for degenerate simulation cases).
    """

    observed: tuple[str, ...]
    latents: tuple[str, ...]
    order: int
    coeffs: Mapping[tuple[str, str, int], float]
    noise_var: Mapping[str, float]

    def __post_init__(self):
        names = self.observed + self.latents
        if len(set(names)) != len(names):
            raise SemanticError("duplicate process names")
        if self.order < 0:
            raise SemanticError("order must be nonnegative")
        observed = set(self.observed)
        latents = set(self.latents)
        for (src, dst, lag), value in self.coeffs.items():
            if src not in observed | latents or dst not in observed | latents:
                raise SemanticError(f"unknown process in edge {src}->{dst}")
            if not 0 <= lag <= self.order:
                raise SemanticError(f"edge {src}->{dst} has lag {lag} outside 0..{self.order}")
            if src == dst and lag == 0:
                raise SemanticError(f"contemporaneous self-loop on {src}")
            if src in observed and dst in latents:
                raise SemanticError(f"edge from observed {src} into latent {dst}")
            if not math.isfinite(value):
                raise SemanticError(f"non-finite coefficient on {src}->{dst}")
        for name in names:
            if name not in self.noise_var:
                raise SemanticError(f"missing noise variance for {name}")
            if not (self.noise_var[name] >= 0.0):
                raise SemanticError(f"negative noise variance for {name}")

    # -- structure accessors -------------------------------------------------

    @property
    def processes(self) -> tuple[str, ...]:
        """All process names, observed first."""
        return self.observed + self.latents

    @property
    def n_observed(self) -> int:
        return len(self.observed)

    @property
    def n_processes(self) -> int:
        return len(self.observed) + len(self.latents)

    def is_latent(self, name: str) -> bool:
        return name in self.latents

    def phi(self, src: str, dst: str, lag: int) -> float:
        return float(self.coeffs.get((src, dst, lag), 0.0))

    def auto_coeffs(self, name: str) -> np.ndarray:
        """Auto-dependency coefficients a_1..a_p of one process (index = lag)."""
        out = np.zeros(self.order + 1)
        for k in range(1, self.order + 1):
            out[k] = self.phi(name, name, k)
        return out

    def cross_coeffs(self, src: str, dst: str) -> np.ndarray:
        """Coefficients phi_{src,dst}(0..p) as a dense vector."""
        out = np.zeros(self.order + 1)
        for k in range(self.order + 1):
            out[k] = self.phi(src, dst, k)
        return out

    def phi_matrix(self, lag: int, names: tuple[str, ...] | None = None) -> np.ndarray:
        """Dense Phi(lag) with entry [i, j] = phi_{names[i], names[j]}(lag)."""
        names = self.processes if names is None else names
        n = len(names)
        out = np.zeros((n, n))
        for i, src in enumerate(names):
            for j, dst in enumerate(names):
                out[i, j] = self.phi(src, dst, lag)
        return out

    def parents(self, name: str) -> tuple[str, ...]:
        """Distinct processes with at least one edge into ``name``."""
        seen = []
        for (src, dst, _), value in self.coeffs.items():
            if dst == name and src != name and value != 0.0 and src not in seen:
                seen.append(src)
        return tuple(sorted(seen, key=self.processes.index))

    def has_edge(self, src: str, dst: str) -> bool:
        return src != dst and any(
            self.phi(src, dst, k) != 0.0 for k in range(self.order + 1)
        )

    def with_noise_var(self, overrides: Mapping[str, float]) -> "SvarModel":
        merged = dict(self.noise_var)
        merged.update(overrides)
        return dataclasses.replace(self, noise_var=merged)

    def drop_edges_into(self, targets: Iterable[str]) -> "SvarModel":
        """Model with every edge pointing into ``targets`` removed (auto-deps included)."""
        blocked = set(targets)
        kept = {
            key: value for key, value in self.coeffs.items() if key[1] not in blocked
        }
        return dataclasses.replace(self, coeffs=kept)

    # -- serialization -------------------------------------------------------

    def to_document(self) -> dict:
        edges = [
            {"from": src, "to": dst, "lag": lag, "coeff": value}
            for (src, dst, lag), value in sorted(self.coeffs.items())
        ]
        return {
            "observed": list(self.observed),
            "latents": list(self.latents),
            "order": self.order,
            "edges": edges,
            "noise_var": {name: self.noise_var[name] for name in self.processes},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2, sort_keys=False)


@dataclass(frozen=True)
class StabilityReport:
    """Stability diagnostics for one model.

    ``auto_sums_below_one`` holds when every process keeps the magnitudes of
    its own auto-coefficients summing below one; ``grand_sum_below_one`` is
    the much stronger requirement that the magnitudes of all coefficients in
    the model sum below one (sufficient for the effect filter series to be
    absolutely summable even through cycles).  ``stable`` is decided by the
    companion spectral radius; the sampled characteristic-polynomial margin
    is a redundant cross-check.  Loop gains are computed against a frequency
    grid by the spectral module and attached with :meth:`with_loop_gains`;
    they are the practical convergence test for cyclic graphs when the grand
    sum fails.
    """

    per_process_auto_sum: Mapping[str, float]
    auto_sums_below_one: bool
    grand_sum_below_one: bool
    char_poly_min_modulus_margin: float
    companion_spectral_radius: float
    stable: bool
    loop_gain_max: Mapping[tuple[str, ...], float] | None = field(default=None)

    def with_loop_gains(self, gains: Mapping[tuple[str, ...], float]) -> "StabilityReport":
        return dataclasses.replace(self, loop_gain_max=dict(gains))

    @property
    def loop_gains_ok(self) -> bool | None:
        if self.loop_gain_max is None:
            return None
        return all(g < 1.0 - 1e-6 for g in self.loop_gain_max.values())

    def to_document(self) -> dict:
        doc = {
            "per_process_auto_sum": dict(self.per_process_auto_sum),
            "auto_sums_below_one": self.auto_sums_below_one,
            "grand_sum_below_one": self.grand_sum_below_one,
            "char_poly_min_modulus_margin": self.char_poly_min_modulus_margin,
            "companion_spectral_radius": self.companion_spectral_radius,
            "stable": self.stable,
        }
        if self.loop_gain_max is not None:
            doc["loop_gain_max"] = {
                "->".join(cycle): gain for cycle, gain in self.loop_gain_max.items()
            }
            doc["loop_gains_ok"] = self.loop_gains_ok
        return doc


def parse_document(doc: dict) -> SvarModel:
    """Build a validated model from an already-decoded JSON document."""
    if not isinstance(doc, dict):
        raise SchemaError("model document must be a JSON object")
    for key in ("observed", "order", "edges", "noise_var"):
        if key not in doc:
            raise SchemaError(f"missing required key {key!r}")
    observed = doc["observed"]
    latents = doc.get("latents", [])
    if not isinstance(observed, list) or not all(isinstance(s, str) for s in observed):
        raise SchemaError("'observed' must be a list of strings")
    if not isinstance(latents, list) or not all(isinstance(s, str) for s in latents):
        raise SchemaError("'latents' must be a list of strings")
    if not isinstance(doc["order"], int) or isinstance(doc["order"], bool):
        raise SchemaError("'order' must be an integer")
    if not isinstance(doc["edges"], list):
        raise SchemaError("'edges' must be a list")
    if not isinstance(doc["noise_var"], dict):
        raise SchemaError("'noise_var' must be an object")

    coeffs: dict[tuple[str, str, int], float] = {}
    for i, edge in enumerate(doc["edges"]):
        if not isinstance(edge, dict):
            raise SchemaError(f"edge #{i} is not an object")
        try:
            src, dst, lag, value = edge["from"], edge["to"], edge["lag"], edge["coeff"]
        except KeyError as exc:
            raise SchemaError(f"edge #{i} missing key {exc.args[0]!r}") from exc
        if not isinstance(src, str) or not isinstance(dst, str):
            raise SchemaError(f"edge #{i} endpoints must be strings")
        if not isinstance(lag, int) or isinstance(lag, bool):
            raise SchemaError(f"edge #{i} lag must be an integer")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(f"edge #{i} coeff must be a number")
        key = (src, dst, lag)
        if key in coeffs:
            raise SemanticError(f"duplicate edge {src}->{dst} at lag {lag}")
        coeffs[key] = float(value)

    noise_var = {}
    for name, value in doc["noise_var"].items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError(f"noise variance for {name!r} must be a number")
        if value <= 0.0:
            raise SemanticError(f"non-positive noise variance for {name!r}")
        noise_var[name] = float(value)

    return SvarModel(
        observed=tuple(observed),
        latents=tuple(latents),
        order=doc["order"],
        coeffs=coeffs,
        noise_var=noise_var,
    )


def parse_model(text: str) -> SvarModel:
    """Parse and validate a JSON model document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return parse_document(doc)


def load_model(path) -> SvarModel:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_model(handle.read())


def contemporaneous_solve_matrix(m: SvarModel, names: tuple[str, ...] | None = None) -> np.ndarray:
    """Return (I - Phi(0)^T)^{-1} for the given process block.

    Raises SingularContemporaneousError when the system is numerically singular.
    """
    phi0 = m.phi_matrix(0, names)
    a = np.eye(phi0.shape[0]) - phi0.T
    if np.linalg.cond(a) > _COND_LIMIT:
        raise SingularContemporaneousError(
            "I - Phi(0)^T is numerically singular; contemporaneous structure unsolvable"
        )
    return np.linalg.inv(a)


def reduced_lag_matrices(m: SvarModel, names: tuple[str, ...] | None = None) -> np.ndarray:
    """Reduced-form VAR coefficient stack A with A[k] = (I - Phi(0)^T)^{-1} Phi(k)^T."""
    names = m.processes if names is None else names
    b = contemporaneous_solve_matrix(m, names)
    stack = np.zeros((m.order + 1, len(names), len(names)))
    for k in range(1, m.order + 1):
        stack[k] = b @ m.phi_matrix(k, names).T
    return stack


def companion_matrix(m: SvarModel) -> np.ndarray:
    """Companion form of the reduced VAR(1) stacking; empty for order 0."""
    n = m.n_processes
    p = max(m.order, 1)
    a = reduced_lag_matrices(m)
    comp = np.zeros((n * p, n * p))
    for k in range(1, m.order + 1):
        comp[:n, (k - 1) * n : k * n] = a[k]
    if p > 1:
        comp[n:, : n * (p - 1)] = np.eye(n * (p - 1))
    return comp


def check_stability(m: SvarModel, grid_size: int = 256) -> StabilityReport:
    """Evaluate the per-process, grand-total and full-VAR stability conditions.

    The full-VAR check samples |det| of the reverse characteristic polynomial
    on ``grid_size`` points of the unit circle and on interior rays, and
    computes the companion spectral radius, which decides ``stable``.
    """
    auto_sums = {
        name: float(np.abs(m.auto_coeffs(name)[1:]).sum()) for name in m.processes
    }
    per_process_ok = all(s < 1.0 for s in auto_sums.values())
    grand_total = sum(
        abs(v) for v in m.coeffs.values()
    )
    global_ok = grand_total < 1.0

    a = reduced_lag_matrices(m)
    n = m.n_processes
    eye = np.eye(n)

    margin = math.inf
    angles = 2.0 * np.pi * np.arange(max(grid_size, 1)) / max(grid_size, 1)
    for radius in (0.25, 0.5, 0.75, 1.0):
        for z in radius * np.exp(1j * angles):
            poly = eye.astype(complex).copy()
            for k in range(1, m.order + 1):
                poly -= (z**k) * a[k]
            margin = min(margin, abs(np.linalg.det(poly)))
    if m.order == 0:
        margin = 1.0

    if m.order == 0:
        radius_val = 0.0
    else:
        radius_val = float(np.max(np.abs(np.linalg.eigvals(companion_matrix(m)))))

    return StabilityReport(
        per_process_auto_sum=auto_sums,
        auto_sums_below_one=per_process_ok,
        grand_sum_below_one=global_ok,
        char_poly_min_modulus_margin=float(margin),
        companion_spectral_radius=radius_val,
        stable=radius_val < 1.0 - 1e-9,
    )


def process_graph(m: SvarModel):
    """Finite process graph of the model: V -> W iff some phi_{V,W}(k) != 0, V != W."""
    from .graph import ProcessGraph

    edges = set()
    for (src, dst, _), value in m.coeffs.items():
        if src != dst and value != 0.0:
            edges.add((src, dst))
    return ProcessGraph(observed=m.observed, latents=m.latents, edges=frozenset(edges))
