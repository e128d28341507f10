"""Constituent-to-phase upscaling for the matrix and yarn.

The matrix (resin + filler + air-filled pores) is homogenized as an isotropic
solid with spherical inclusions: Bruggeman self-consistent conductivity,
Berryman self-consistent moduli, Budiansky thermal expansivity. The yarn
(unidirectional filaments in matrix) uses Chamis-style weighted averages for
its transversely isotropic property set.

Units: lengths cm, densities g/cm^3, conductivities W/(m K), moduli GPa,
specific heats J/(kg K). CTE values are carried in 1e-6/K throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

__all__ = [
    "PARAM_RANGES",
    "ConstituentSet",
    "MatrixProps",
    "YarnProps",
    "K_VOID_CONDUCTIVITY",
    "matrix_volume_fractions",
    "bruggeman_conductivity",
    "berryman_moduli",
    "budiansky_cte",
    "bulk_shear_to_young_poisson",
    "young_poisson_to_bulk_shear",
    "chamis_yarn_conductivity",
    "chamis_yarn_elastic",
    "chamis_yarn_cte",
    "yarn_diffusivity",
    "yarn_transverse_poisson",
    "upscale_matrix",
    "upscale_yarn",
]

# air conductivity stands in for the void phase in conduction; mechanical
# void is a true vacuum (K = mu = 0)
K_VOID_CONDUCTIVITY = 0.026

# Sampled input ranges, in declaration order (30 parameters).
PARAM_RANGES: dict[str, tuple[float, float]] = {
    "w": (0.05, 0.2),
    "t": (0.01, 0.05),
    "u": (0.30, 1.0),
    "g": (0.0, 0.7),
    "v_f_w": (0.5, 0.9),
    "porosity": (0.0, 0.2),
    "filler_loading": (0.0, 0.2),
    "rho_res": (1.2, 1.7),
    "rho_f": (1.7, 1.9),
    "rho_fill": (1.4, 2.3),
    "c_res": (1300.0, 1700.0),
    "c_f": (600.0, 800.0),
    "c_fill": (1300.0, 1800.0),
    "k_res": (0.2, 0.6),
    "k_f_a": (5.0, 100.0),
    "gamma_f": (0.1, 1.0),
    "k_fill": (0.2, 100.0),
    "e_res": (2.0, 5.0),
    "e_f_a": (200.0, 600.0),
    "e_f_t": (5.0, 50.0),
    "e_fill": (5.0, 50.0),
    "mu_f_at": (3.0, 30.0),
    "nu_res": (0.25, 0.35),
    "nu_f_tt": (0.25, 0.5),
    "nu_f_at": (0.25, 0.35),
    "nu_fill": (0.25, 0.35),
    "alpha_res": (50.0, 100.0),
    "alpha_f_a": (-0.1, 0.1),
    "alpha_f_t": (5.0, 10.0),
    "alpha_fill": (1.0, 10.0),
}


@dataclass(frozen=True)
class ConstituentSet:
    """One sampled point of the 30-parameter input space."""

    w: float
    t: float
    u: float
    g: float
    v_f_w: float
    porosity: float
    filler_loading: float
    rho_res: float
    rho_f: float
    rho_fill: float
    c_res: float
    c_f: float
    c_fill: float
    k_res: float
    k_f_a: float
    gamma_f: float
    k_fill: float
    e_res: float
    e_f_a: float
    e_f_t: float
    e_fill: float
    mu_f_at: float
    nu_res: float
    nu_f_tt: float
    nu_f_at: float
    nu_fill: float
    alpha_res: float
    alpha_f_a: float
    alpha_f_t: float
    alpha_fill: float

    @property
    def k_f_t(self) -> float:
        """Transverse fiber conductivity via the anisotropy ratio."""
        return self.gamma_f * self.k_f_a

    def weave_params(self):
        from .geometry import WeaveParams

        return WeaveParams(w=self.w, t=self.t, u=self.u, g=self.g, v_f_w=self.v_f_w)

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "ConstituentSet":
        values = list(map(float, values))
        names = cls.names()
        if len(values) != len(names):
            raise ValueError(f"expected {len(names)} values, got {len(values)}")
        return cls(**dict(zip(names, values)))

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.names()], dtype=float)

    @classmethod
    def nominal(cls) -> "ConstituentSet":
        """Midpoint of every input range."""
        return cls(**{k: 0.5 * (lo + hi) for k, (lo, hi) in PARAM_RANGES.items()})


@dataclass(frozen=True)
class MatrixProps:
    k: float
    bulk: float
    shear: float
    young: float
    poisson: float
    alpha: float
    rho: float
    c: float
    v_res: float
    v_fill: float
    v_pore: float


@dataclass(frozen=True)
class YarnProps:
    k_a: float
    k_t: float
    e_a: float
    e_t: float
    g_a: float
    g_t: float
    nu_at: float
    nu_tt: float
    alpha_a: float
    alpha_t: float
    d_a: float
    d_t: float
    rho: float


def matrix_volume_fractions(c: ConstituentSet) -> tuple[float, float, float]:
    """(v_res, v_fill, v_pore) of the matrix phase.

    Porosity is a volume fraction of the matrix; filler loading is the mass
    fraction of filler in the solid (filler + resin) binder, converted to a
    volume split via the constituent densities.
    """
    m = c.filler_loading
    v_pore = c.porosity
    fill_vol = m / c.rho_fill
    res_vol = (1.0 - m) / c.rho_res
    v_fill_solid = fill_vol / (fill_vol + res_vol)
    v_fill = (1.0 - v_pore) * v_fill_solid
    v_res = 1.0 - v_pore - v_fill
    return v_res, v_fill, v_pore


def bruggeman_conductivity(fractions, conductivities) -> float:
    """Self-consistent conductivity: positive root of sum v_i (k_i-k)/(k_i+2k) = 0.

    Bracketed bisection on [min k_i, max k_i] followed by a Newton polish.
    """
    v = np.asarray(fractions, dtype=float)
    k = np.asarray(conductivities, dtype=float)
    if abs(v.sum() - 1.0) > 1e-9:
        raise ValueError("volume fractions must sum to 1")
    if np.any(k < 0) or np.any(v < 0):
        raise ValueError("fractions and conductivities must be non-negative")
    active = v > 0
    v, k = v[active], k[active]
    lo, hi = k.min(), k.max()
    if hi - lo <= 1e-300:
        return float(lo)

    def f(x):
        return float(np.sum(v * (k - x) / (k + 2.0 * x)))

    def fprime(x):
        return float(np.sum(v * (-3.0 * k) / (k + 2.0 * x) ** 2))

    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo <= 1e-13 * hi:
            break
    x = 0.5 * (lo + hi)
    for _ in range(50):
        step = f(x) / fprime(x)
        x_new = x - step
        if not (lo * 0.5 <= x_new <= hi * 2.0):
            break
        if abs(x_new - x) <= 1e-14 * x_new:
            x = x_new
            break
        x = x_new
    return float(x)


def _berryman_f(bulk, shear):
    return (shear / 6.0) * (9.0 * bulk + 8.0 * shear) / (bulk + 2.0 * shear)


def berryman_moduli(fractions, bulks, shears, tol=1e-10, max_iter=10_000,
                    damping=0.5) -> tuple[float, float]:
    """Self-consistent (K, mu) via damped successive substitution.

    Shape factors P_i = (K + 4mu/3)/(K_i + 4mu/3), Q_i = (mu + F)/(mu_i + F)
    with F = (mu/6)(9K + 8mu)/(K + 2mu). Void phases enter with K = mu = 0.
    """
    v = np.asarray(fractions, dtype=float)
    K = np.asarray(bulks, dtype=float)
    mu = np.asarray(shears, dtype=float)
    if abs(v.sum() - 1.0) > 1e-9:
        raise ValueError("volume fractions must sum to 1")
    active = v > 0
    v, K, mu = v[active], K[active], mu[active]
    k_eff = float(np.sum(v * K))
    mu_eff = float(np.sum(v * mu))
    if mu_eff <= 0 or k_eff <= 0:
        raise ValueError("need at least one phase with positive moduli")
    for it in range(max_iter):
        p = (k_eff + 4.0 * mu_eff / 3.0) / (K + 4.0 * mu_eff / 3.0)
        f = _berryman_f(k_eff, mu_eff)
        q = (mu_eff + f) / (mu + f)
        k_new = float(np.sum(v * K * p) / np.sum(v * p))
        mu_new = float(np.sum(v * mu * q) / np.sum(v * q))
        dk = abs(k_new - k_eff) / max(abs(k_new), 1e-300)
        dmu = abs(mu_new - mu_eff) / max(abs(mu_new), 1e-300)
        k_eff += damping * (k_new - k_eff)
        mu_eff += damping * (mu_new - mu_eff)
        if dk < tol and dmu < tol:
            return k_eff, mu_eff
    raise RuntimeError(
        f"Berryman iteration did not converge after {max_iter} steps "
        f"(last K={k_eff:.6g}, mu={mu_eff:.6g}, dK={dk:.2e}, dmu={dmu:.2e})"
    )


def budiansky_cte(fractions, bulks, alphas, bulk_eff, poisson_eff) -> float:
    """Effective CTE, sum of v_i (K_i/K) alpha_i / (1 - a + a K_i/K).

    Phases with K_i = 0 carry zero weight. The weights are used exactly as
    written (they do not renormalize to 1 for unequal K_i).
    """
    if bulk_eff <= 0:
        raise ValueError("effective bulk modulus must be positive")
    v = np.asarray(fractions, dtype=float)
    K = np.asarray(bulks, dtype=float)
    alpha = np.asarray(alphas, dtype=float)
    a = (1.0 + poisson_eff) / (3.0 * (1.0 - poisson_eff))
    ratio = K / bulk_eff
    weights = v * ratio / (1.0 - a + a * ratio)
    return float(np.sum(weights * alpha))


def bulk_shear_to_young_poisson(bulk, shear) -> tuple[float, float]:
    if bulk <= 0 or shear <= 0:
        raise ValueError("moduli must be positive")
    young = 9.0 * bulk * shear / (3.0 * bulk + shear)
    poisson = (3.0 * bulk - 2.0 * shear) / (2.0 * (3.0 * bulk + shear))
    return young, poisson


def young_poisson_to_bulk_shear(young, poisson) -> tuple[float, float]:
    if young <= 0 or not (-1.0 < poisson < 0.5):
        raise ValueError(f"non-physical isotropic constants E={young}, nu={poisson}")
    return young / (3.0 * (1.0 - 2.0 * poisson)), young / (2.0 * (1.0 + poisson))


def chamis_yarn_conductivity(k_m, k_f_a, k_f_t, v) -> tuple[float, float]:
    """Axial (rule of mixtures) and transverse (Chamis) yarn conductivity."""
    if not (0 < v < 1):
        raise ValueError("fiber packing must be in (0, 1)")
    sq = np.sqrt(v)
    k_a = k_f_a * v + k_m * (1.0 - v)
    denom = 1.0 - sq * (1.0 - k_m / k_f_t)
    if denom <= 0:
        raise ValueError(f"Chamis transverse denominator non-positive: {denom}")
    k_t = (1.0 - sq) * k_m + k_m * sq / denom
    return float(k_a), float(k_t)


def chamis_yarn_elastic(m: MatrixProps, c: ConstituentSet):
    """Yarn elastic constants (E_a, E_t, G_a, G_t, nu_at) by Chamis averages."""
    v = c.v_f_w
    sq = np.sqrt(v)
    g_m = m.young / (2.0 * (1.0 + m.poisson))
    g_f_tt = c.e_f_t / (2.0 * (1.0 + c.nu_f_tt))
    e_a = c.e_f_a * v + m.young * (1.0 - v)

    def partitioned(matrix_val, fiber_val, label):
        denom = 1.0 - sq * (1.0 - matrix_val / fiber_val)
        if denom <= 0:
            raise ValueError(f"Chamis {label} denominator non-positive: {denom}")
        return matrix_val / denom

    e_t = partitioned(m.young, c.e_f_t, "transverse-modulus")
    g_a = partitioned(g_m, c.mu_f_at, "axial-shear")
    g_t = partitioned(g_m, g_f_tt, "transverse-shear")
    nu_at = c.nu_f_at * v + m.poisson * (1.0 - v)
    return float(e_a), float(e_t), float(g_a), float(g_t), float(nu_at)


def chamis_yarn_cte(m: MatrixProps, c: ConstituentSet, e_a: float) -> tuple[float, float]:
    """Axial and transverse yarn CTE (modulus-weighted axial, Chamis transverse)."""
    if e_a <= 0:
        raise ValueError("axial yarn modulus must be positive")
    v = c.v_f_w
    sq = np.sqrt(v)
    alpha_a = (v * c.alpha_f_a * c.e_f_a + (1.0 - v) * m.alpha * m.young) / e_a
    alpha_t = c.alpha_f_t * sq + (1.0 - sq) * (1.0 + v * m.poisson * c.e_f_a / e_a) * m.alpha
    return float(alpha_a), float(alpha_t)


def yarn_diffusivity(v) -> tuple[float, float]:
    """Yarn diffusivities with D_matrix = 1 and impermeable fibers.

    The transverse Chamis form with D_f = 0 collapses analytically: the
    partitioned term vanishes, leaving D_t = 1 - sqrt(v).
    """
    if not (0 <= v < 1):
        raise ValueError("fiber packing must be in [0, 1)")
    return 1.0 - v, 1.0 - float(np.sqrt(v))


def yarn_transverse_poisson(e_t, g_t) -> float:
    """nu_tt from the isotropic-plane relation E_t/(2 G_t) - 1, range checked."""
    if e_t <= 0 or g_t <= 0:
        raise ValueError("moduli must be positive")
    nu = e_t / (2.0 * g_t) - 1.0
    if not (-1.0 < nu < 0.5):
        raise ValueError(f"transverse Poisson ratio {nu:.4f} outside (-1, 0.5) "
                         f"for E_t={e_t:.4g}, G_t={g_t:.4g}")
    return float(nu)


def upscale_matrix(c: ConstituentSet) -> MatrixProps:
    """Homogenize resin + filler + void into the isotropic matrix phase."""
    v_res, v_fill, v_pore = matrix_volume_fractions(c)
    fractions = np.array([v_res, v_fill, v_pore])
    k = bruggeman_conductivity(fractions, [c.k_res, c.k_fill, K_VOID_CONDUCTIVITY])
    k_res_bulk, mu_res = young_poisson_to_bulk_shear(c.e_res, c.nu_res)
    k_fill_bulk, mu_fill = young_poisson_to_bulk_shear(c.e_fill, c.nu_fill)
    bulks = np.array([k_res_bulk, k_fill_bulk, 0.0])
    shears = np.array([mu_res, mu_fill, 0.0])
    bulk, shear = berryman_moduli(fractions, bulks, shears)
    young, poisson = bulk_shear_to_young_poisson(bulk, shear)
    alpha = budiansky_cte(fractions, bulks, [c.alpha_res, c.alpha_fill, 0.0], bulk, poisson)
    rho = c.rho_res * v_res + c.rho_fill * v_fill
    heat = (c.c_res * c.rho_res * v_res + c.c_fill * c.rho_fill * v_fill) / rho
    return MatrixProps(k=k, bulk=bulk, shear=shear, young=young, poisson=poisson,
                       alpha=alpha, rho=rho, c=heat,
                       v_res=v_res, v_fill=v_fill, v_pore=v_pore)


def upscale_yarn(m: MatrixProps, c: ConstituentSet) -> YarnProps:
    """Homogenize filaments + matrix into the transversely isotropic yarn."""
    k_a, k_t = chamis_yarn_conductivity(m.k, c.k_f_a, c.k_f_t, c.v_f_w)
    e_a, e_t, g_a, g_t, nu_at = chamis_yarn_elastic(m, c)
    nu_tt = yarn_transverse_poisson(e_t, g_t)
    alpha_a, alpha_t = chamis_yarn_cte(m, c, e_a)
    d_a, d_t = yarn_diffusivity(c.v_f_w)
    rho = c.v_f_w * c.rho_f + (1.0 - c.v_f_w) * m.rho
    return YarnProps(k_a=k_a, k_t=k_t, e_a=e_a, e_t=e_t, g_a=g_a, g_t=g_t,
                     nu_at=nu_at, nu_tt=nu_tt, alpha_a=alpha_a, alpha_t=alpha_t,
                     d_a=d_a, d_t=d_t, rho=rho)
