"""Inverse Born series and its convergence, error and stability diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .born import (
    SeriesConstants,
    _Block,
    _block,
    _norm_label,
    as_norm,
    series_constants,
    vnorm,
)
from .errors import BoundNotApplicableError, SeriesLengthError, ValidationError
from .forward import GreenTable, simulate

MAX_TERMS = 12
PINV_CUTOFF = 1e-12
RANK_TOL = 1e-10


def k1_matrix(G0: GreenTable) -> np.ndarray:
    """Matrix of the linear term: ``K1[(r, s), v] = alpha0 G0(r, v) G0(v, s)``."""
    return _k1_from_block(_block(G0))


def _k1_from_block(blk: _Block) -> np.ndarray:
    nr, nv = blk.RV.shape
    ns = blk.VS.shape[1]
    return blk.alpha * np.einsum("rv,vs->rsv", blk.RV, blk.VS).reshape(nr * ns, nv)


def regularized_pinv(K1, lambda_reg: float = 0.0) -> np.ndarray:
    """Tikhonov-regularised pseudoinverse ``(K^T K + lambda^2 I)^-1 K^T``.

    ``lambda_reg = 0`` gives the Moore-Penrose pseudoinverse, with singular
    values below ``1e-12 * sigma_max`` treated as zero.  Both cases go through
    the SVD rather than the normal equations, whose conditioning is squared.
    """
    if lambda_reg < 0 or not np.isfinite(lambda_reg):
        raise ValidationError(f"lambda_reg must be non-negative, got {lambda_reg}")
    K1 = np.atleast_2d(np.asarray(K1, dtype=float))
    U, s, Vt = np.linalg.svd(K1, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(K1.T.shape)
    if lambda_reg == 0:
        keep = s > PINV_CUTOFF * s[0]
        filt = np.zeros_like(s)
        filt[keep] = 1.0 / s[keep]
    else:
        filt = s / (s**2 + lambda_reg**2)
    return (Vt.T * filt) @ U.T


@dataclass
class SeriesResult:
    terms: list
    partial_sums: list
    term_norms: list
    norm_p: float = 2.0

    @property
    def estimate(self) -> np.ndarray:
        return self.partial_sums[-1]

    @property
    def trend(self) -> str:
        return series_trend(self.term_norms)


def series_trend(term_norms: Sequence[float]) -> str:
    """Classify a sequence of term norms as 'converging', 'diverging' or 'inconclusive'.

    The series is called converging when the norms decrease overall and the
    last step is a decrease, diverging when they grow overall and the last
    step grows.
    """
    norms = np.asarray(term_norms, dtype=float)
    if norms.size < 2 or not np.all(np.isfinite(norms)):
        return "diverging" if norms.size and not np.all(np.isfinite(norms)) else "inconclusive"
    if norms[0] == 0:
        return "converging" if np.all(norms == 0) else "diverging"
    if norms[-1] < norms[0] and norms[-1] <= norms[-2]:
        return "converging"
    if norms[-1] > norms[0] and norms[-1] >= norms[-2]:
        return "diverging"
    return "inconclusive"


def _check_terms(n_terms: int):
    if n_terms < 1:
        raise SeriesLengthError("n_terms must be at least 1")
    if n_terms > MAX_TERMS:
        raise SeriesLengthError(f"n_terms={n_terms} exceeds the cap of {MAX_TERMS}")


def _inverse_terms(blocks: Sequence[_Block], pinv: np.ndarray, phi: np.ndarray, n_terms: int, fmap=None) -> list:
    """Terms of the inverse series in data form.

    With ``eta = sum_i F psi_i`` substituted into the forward series, the
    order-j part of the data gives

        psi_j = -pinv sum_{m>=2} sum_{i_1+..+i_m=j} K_m(F psi_i1, ..., F psi_im).

    For every frequency block the running left products

        A_k = sum over compositions (i_1..i_m) of k of
              (-alpha)^m G[R;V] D(eta_i1) G[V;V] ... D(eta_im)

    obey ``A_k = -alpha G[R;V] D(eta_k) + sum_{i<k} -alpha (A_{k-i} G[V;V]) D(eta_i)``,
    so the composition sum for order j is ``-(A_j - first-order part) G[V;S]``.
    """
    terms, etas = [], []
    # AV[f][k-1] = A_k @ G[V;V] for block f
    AV: list[list[np.ndarray]] = [[] for _ in blocks]
    for j in range(1, n_terms + 1):
        partial = []
        if j == 1:
            psi = pinv @ phi
        else:
            rest = []
            for f, blk in enumerate(blocks):
                B = np.zeros_like(blk.RV)
                for i in range(1, j):
                    B += AV[f][j - i - 1] * etas[i - 1]
                B *= -blk.alpha
                partial.append(B)
                rest.append((B @ blk.VS).ravel())
            psi = pinv @ np.concatenate(rest)
        eta_j = psi if fmap is None else fmap @ psi
        terms.append(psi)
        etas.append(eta_j)
        if j == n_terms:
            break
        for f, blk in enumerate(blocks):
            A = -blk.alpha * (blk.RV * eta_j)
            if partial:
                A = partial[f] + A
            AV[f].append(A @ blk.VV)
    return terms


def _collect(terms: list, norm_p) -> SeriesResult:
    partial, total = [], np.zeros_like(terms[0])
    for t in terms:
        total = total + t
        partial.append(total)
    return SeriesResult(
        terms=terms,
        partial_sums=partial,
        term_norms=[vnorm(t, norm_p) for t in terms],
        norm_p=as_norm(norm_p),
    )


def inverse_series(phi, G0: GreenTable, lambda_reg: float = 0.0, n_terms: int = 5, norm_p=2) -> SeriesResult:
    """Reconstruct a vertex potential from scattering data with ``n_terms`` terms.

    Parameters
    ----------
    phi : array_like
        Scattering data, receiver-major, length ``|R| |S|``.
    G0 : GreenTable
        Background Green's function of the graph.
    lambda_reg : float
        Tikhonov parameter of the pseudoinverse of ``K1``; 0 means unregularised.
    n_terms : int
        Number of series terms, at most ``MAX_TERMS``.
    norm_p : {1, 2, inf}
        Norm used for the reported term norms.
    """
    _check_terms(n_terms)
    blk = _block(G0)
    phi = np.asarray(phi, dtype=float).ravel()
    if phi.shape != (blk.RV.shape[0] * blk.VS.shape[1],):
        raise ValidationError(f"data has length {phi.size}, expected {blk.RV.shape[0] * blk.VS.shape[1]}")
    pinv = regularized_pinv(_k1_from_block(blk), lambda_reg)
    return _collect(_inverse_terms([blk], pinv, phi, n_terms), norm_p)


class Gain(NamedTuple):
    value: float
    exact: bool
    injective: bool


def min_gain(K1, norm_p=2) -> Gain:
    """Smallest gain ``min ||K1 eta||_p`` over ``||eta||_p = 1``.

    Exact for p=2 (smallest singular value).  For p=1 and p=inf the value is
    the lower bound ``sigma_min / sqrt(d)`` from norm equivalence, with ``d``
    the dimension of the domain (p=1) or range (p=inf), and ``exact`` is False.
    """
    p = as_norm(norm_p)
    K1 = np.atleast_2d(np.asarray(K1, dtype=float))
    m, n = K1.shape
    s = np.linalg.svd(K1, compute_uv=False)
    if m < n or s[0] == 0 or s[-1] <= RANK_TOL * s[0]:
        return Gain(0.0, p == 2, False)
    smin = float(s[-1])
    if p == 2:
        return Gain(smin, True, True)
    d = n if p == 1 else m
    return Gain(smin / np.sqrt(d), False, True)


def radius_bracket(C_p: float, nu_p: float) -> float:
    """``1 - 2 (nu/C)(sqrt(1 + C/nu) - 1)``, evaluated without cancellation."""
    x = C_p / nu_p
    return x / (1.0 + np.sqrt(1.0 + x)) ** 2


@dataclass
class InverseDiagnostics:
    p: float
    nu_p: float
    mu_p: float
    C_p: float
    r_p: float
    r_p_asymptotic: float
    data_side_bound: float
    injective: bool = True
    gain_exact: bool = True
    k1pinv_norm: float | None = None
    data_norm: float | None = None
    k1phi_norm: float | None = None
    M_lipschitz: float | None = None
    tau_star: float | None = None
    a: float | None = None
    C_Na: float | None = None
    notes: list = field(default_factory=list)

    @property
    def inside_radius(self) -> bool | None:
        if self.data_norm is None:
            return None
        return self.data_norm < self.r_p

    @property
    def inside_data_side_bound(self) -> bool | None:
        if self.k1phi_norm is None:
            return None
        return self.k1phi_norm < self.data_side_bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = _norm_label(self.p)
        d["inside_radius"] = self.inside_radius
        d["inside_data_side_bound"] = self.inside_data_side_bound
        return d


def convergence_radius(consts: SeriesConstants, C_p: float) -> InverseDiagnostics:
    """Radius ``r_p``, its small-``C_p`` asymptote and the bound on ``||K1^+ phi||``."""
    nu, mu = consts.nu_p, consts.mu_p
    if nu <= 0 or mu <= 0:
        raise ValidationError("nu_p and mu_p must be positive")
    if C_p < 0:
        raise ValidationError("C_p must be non-negative")
    if C_p == 0:
        return InverseDiagnostics(
            p=consts.p, nu_p=nu, mu_p=mu, C_p=0.0, r_p=0.0, r_p_asymptotic=0.0,
            data_side_bound=0.0, injective=False, notes=["K1 is not injective; no convergence radius"],
        )
    bracket = radius_bracket(C_p, nu)
    return InverseDiagnostics(
        p=consts.p,
        nu_p=float(nu),
        mu_p=float(mu),
        C_p=float(C_p),
        r_p=float(C_p / mu * bracket),
        r_p_asymptotic=float(C_p**2 / (4.0 * nu * mu)),
        data_side_bound=float(bracket / mu),
    )


def diagnose(G0: GreenTable, norm_p=2, phi=None) -> InverseDiagnostics:
    """Constants, radii and pseudoinverse norm for a problem, optionally with data.

    Everything is computed from the unregularised pseudoinverse.
    """
    p = as_norm(norm_p)
    consts = series_constants(G0, p)
    K1 = k1_matrix(G0)
    gain = min_gain(K1, p)
    diag = convergence_radius(consts, gain.value)
    diag.gain_exact = gain.exact
    diag.injective = gain.injective
    pinv = regularized_pinv(K1, 0.0)
    diag.k1pinv_norm = float(np.linalg.norm(pinv, ord=p))
    if phi is not None:
        phi = np.asarray(phi, dtype=float).ravel()
        diag.data_norm = vnorm(phi, p)
        diag.k1phi_norm = vnorm(pinv @ phi, p)
    return diag


def truncation_bound(n_terms: int, phi_norm: float, r_p: float, n_dim: int, M: float, tau: float) -> float:
    """Error bound for the ``n_terms`` partial sum when ``||phi|| < tau r_p``."""
    if not 0 < tau < 1:
        raise BoundNotApplicableError(f"tau must lie in (0, 1), got {tau}")
    if r_p <= 0:
        raise BoundNotApplicableError("radius of convergence is zero")
    if M <= 0:
        raise BoundNotApplicableError("M must be positive")
    ratio = phi_norm / (tau * r_p)
    if not ratio < 1:
        raise BoundNotApplicableError(f"||phi|| = {phi_norm:g} is not below tau * r_p = {tau * r_p:g}")
    return M * (1.0 - tau) ** (-n_dim) * ratio**n_terms / (1.0 - ratio)


def tau_star(gamma: float, n_terms: int, n_dim: int) -> float:
    """Value of ``tau`` in ``(gamma, 1)`` minimising :func:`truncation_bound`, ``gamma = ||phi|| / r_p``."""
    if not 0 < gamma < 1:
        raise BoundNotApplicableError(f"gamma must lie in (0, 1), got {gamma}")
    N, s = n_terms, n_terms + n_dim
    c = (N - gamma) / (gamma * s)
    return gamma / 2.0 * ((1.0 + c) + np.sqrt((1.0 - c) ** 2 + 4.0 * (1.0 - gamma) / (gamma * s)))


def stability_probe(G0: GreenTable, lambda_reg: float, n_terms: int, phi1, phi2, norm_p=2) -> float:
    """Ratio ``||eta_1 - eta_2|| / ||phi_1 - phi_2||`` of two ``n_terms`` reconstructions."""
    phi1 = np.asarray(phi1, dtype=float).ravel()
    phi2 = np.asarray(phi2, dtype=float).ravel()
    dphi = vnorm(phi1 - phi2, norm_p)
    if dphi == 0:
        return 0.0
    e1 = inverse_series(phi1, G0, lambda_reg, n_terms).estimate
    e2 = inverse_series(phi2, G0, lambda_reg, n_terms).estimate
    return vnorm(e1 - e2, norm_p) / dphi


def estimate_M(G0: GreenTable, radius: float, n_terms: int, samples: int = 50, lambda_reg: float = 0.0,
               norm_p=2, rng=None) -> float:
    """Sample ``max ||psi(phi)||`` over random data with ``||phi||_p = radius``."""
    rng = np.random.default_rng(rng)
    m = len(G0.graph.receivers) * len(G0.graph.sources)
    best = 0.0
    for _ in range(samples):
        x = rng.standard_normal(m)
        x *= radius / vnorm(x, norm_p)
        best = max(best, vnorm(inverse_series(x, G0, lambda_reg, n_terms).estimate, norm_p))
    return best


class OrderFit(NamedTuple):
    slope: float
    eta_norms: np.ndarray
    errors: np.ndarray
    constant: float


def empirical_order(G0: GreenTable, eta, n_terms: int, scalings=(1.0, 0.5, 0.25, 0.125),
                    lambda_reg: float = 0.0, norm_p=2) -> OrderFit:
    """Fit the order of the ``n_terms`` reconstruction error in ``||eta||``.

    Data are simulated by direct solves for each scaled potential.  Scalings
    outside the forward convergence region or with zero error are dropped with
    a warning; at least two points must remain.  ``constant`` is the largest
    observed ``error / ||eta||**(n_terms+1)``.
    """
    eta = np.asarray(eta, dtype=float)
    mu = series_constants(G0, norm_p).mu_p
    g, params = G0.graph, G0.params
    norms, errs = [], []
    for c in scalings:
        e = c * eta
        en = vnorm(e, norm_p)
        if en == 0:
            warnings.warn("zero potential skipped", RuntimeWarning, stacklevel=2)
            continue
        if mu * en >= 1:
            warnings.warn(f"scaling {c}: mu_p ||eta|| = {mu * en:.3g} >= 1, skipped", RuntimeWarning, stacklevel=2)
            continue
        est = inverse_series(simulate(g, params, e), G0, lambda_reg, n_terms).estimate
        err = vnorm(est - e, norm_p)
        if not np.isfinite(err) or err == 0:
            warnings.warn(f"scaling {c}: error {err} unusable, skipped", RuntimeWarning, stacklevel=2)
            continue
        norms.append(en)
        errs.append(err)
    if len(norms) < 2:
        raise ValidationError("need at least two usable scalings to fit an order")
    norms, errs = np.array(norms), np.array(errs)
    slope = float(np.polyfit(np.log(norms), np.log(errs), 1)[0])
    return OrderFit(slope, norms, errs, float(np.max(errs / norms ** (n_terms + 1))))
