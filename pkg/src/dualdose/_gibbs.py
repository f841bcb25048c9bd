"""Numba kernel for the latent-probit data-augmentation sampler.

One chain fits the bivariate probit dose-response model to partially
observed (DLT, intolerance) data. Pending outcomes are imputed each
iteration from their predictive distributions, latent normals are drawn
componentwise as truncated conditionals, regression blocks come from
their conjugate normal full conditionals (slopes truncated at zero), and
the latent correlation moves by reflected random-walk Metropolis on (0,1).
"""

import math

import numpy as np
from numba import njit

from .bvn import bvn_cdf_scalar, phi

# Acklam's rational approximation for the inverse normal CDF, refined
# below with one Halley step; |error| < 1e-15 after refinement.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


@njit(cache=True)
def ndtri(p):
    if p <= 0.0:
        return -np.inf
    if p >= 1.0:
        return np.inf
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q
              + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r
              + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r
                + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q
               + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    # Halley refinement
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return x


@njit(cache=True)
def _trunc_norm(mean, sd, lower_tail):
    """Draw from N(mean, sd^2) truncated to (-inf,0) or [0,inf)."""
    p0 = phi((0.0 - mean) / sd)
    if lower_tail:
        u = np.random.random() * p0
    else:
        u = p0 + np.random.random() * (1.0 - p0)
    if u < 1e-15:
        u = 1e-15
    elif u > 1.0 - 1e-15:
        u = 1.0 - 1e-15
    return mean + sd * ndtri(u)


@njit(cache=True)
def _draw_block(z_self, z_other, a_other, b_other, d, y_self, rho,
                prec_int, prec_slope):
    """Conjugate (intercept, slope) draw for one endpoint given the other.

    Regression of the residual-adjusted latent on (1, d) with known
    variance 1 - rho^2; the slope is truncated at zero (half-normal prior).
    """
    n = d.shape[0]
    s2 = 1.0 - rho * rho
    s00 = prec_int
    s01 = 0.0
    s11 = prec_slope
    b0 = 0.0
    b1 = 0.0
    for i in range(n):
        r = z_self[i] - rho * (z_other[i] - a_other - b_other * d[i])
        s00 += 1.0 / s2
        s01 += d[i] / s2
        s11 += d[i] * d[i] / s2
        b0 += r / s2
        b1 += r * d[i] / s2
    det = s00 * s11 - s01 * s01
    v00 = s11 / det
    v01 = -s01 / det
    v11 = s00 / det
    m0 = v00 * b0 + v01 * b1
    m1 = v01 * b0 + v11 * b1
    beta = _trunc_norm(m1, math.sqrt(v11), False)
    cond_mean = m0 + (v01 / v11) * (beta - m1)
    cond_sd = math.sqrt(max(v00 - v01 * v01 / v11, 1e-12))
    alpha = cond_mean + cond_sd * np.random.standard_normal()
    return alpha, beta


@njit(cache=True)
def _cells_at(a_t, b_t, a_r, b_r, rho, d):
    mu_t = a_t + b_t * d
    mu_r = a_r + b_r * d
    p11 = bvn_cdf_scalar(mu_t, mu_r, rho)
    pt = phi(mu_t)
    pr = phi(mu_r)
    p10 = max(pt - p11, 0.0)
    p01 = max(pr - p11, 0.0)
    p00 = max(1.0 - pt - pr + p11, 0.0)
    return p00, p01, p10, p11


@njit(cache=True)
def _impute(yy_t, yy_r, y_t, y_r, d, t_follow, T_T, T_R,
            a_t, b_t, a_r, b_r, rho):
    """Draw pending outcomes into yy_* from their predictive distributions."""
    n = d.shape[0]
    for i in range(n):
        pt_pending = y_t[i] < 0
        pr_pending = y_r[i] < 0
        if not pt_pending and not pr_pending:
            continue
        p00, p01, p10, p11 = _cells_at(a_t, b_t, a_r, b_r, rho, d[i])
        t = t_follow[i]
        if pt_pending and pr_pending:
            st = 1.0 - t / T_T if T_T > 0.0 else 0.0
            sr = 1.0 - t / T_R if T_R > 0.0 else 0.0
            q11 = st * sr * p11
            q10 = st * p10
            q01 = sr * p01
            q00 = p00
            tot = q00 + q01 + q10 + q11
            u = np.random.random() * tot
            if u < q11:
                yy_t[i] = 1
                yy_r[i] = 1
            elif u < q11 + q10:
                yy_t[i] = 1
                yy_r[i] = 0
            elif u < q11 + q10 + q01:
                yy_t[i] = 0
                yy_r[i] = 1
            else:
                yy_t[i] = 0
                yy_r[i] = 0
        elif pr_pending:
            sr = 1.0 - t / T_R if T_R > 0.0 else 0.0
            if y_t[i] == 1:
                denom = sr * p11 + p10
                q = sr * p11 / denom if denom > 0.0 else 0.0
            else:
                denom = sr * p01 + p00
                q = sr * p01 / denom if denom > 0.0 else 0.0
            yy_r[i] = 1 if np.random.random() < q else 0
        else:
            tt = t if t < T_T else T_T
            st = 1.0 - tt / T_T if T_T > 0.0 else 0.0
            if y_r[i] == 1:
                denom = st * p11 + p01
                q = st * p11 / denom if denom > 0.0 else 0.0
            else:
                denom = st * p10 + p00
                q = st * p10 / denom if denom > 0.0 else 0.0
            yy_t[i] = 1 if np.random.random() < q else 0


@njit(cache=True)
def _draw_latents(z_t, z_r, yy_t, yy_r, d, a_t, b_t, a_r, b_r, rho):
    """Componentwise truncated-normal update of the latent pair.

    A yy code < 0 means the endpoint is unconstrained (observed-data-only
    warm phase, where pending outcomes are marginalized out).
    """
    n = d.shape[0]
    csd = math.sqrt(max(1.0 - rho * rho, 1e-12))
    for i in range(n):
        mu_t = a_t + b_t * d[i]
        mu_r = a_r + b_r * d[i]
        cm = mu_t + rho * (z_r[i] - mu_r)
        if yy_t[i] < 0:
            z_t[i] = cm + csd * np.random.standard_normal()
        else:
            z_t[i] = _trunc_norm(cm, csd, yy_t[i] == 0)
        cm = mu_r + rho * (z_t[i] - mu_t)
        if yy_r[i] < 0:
            z_r[i] = cm + csd * np.random.standard_normal()
        else:
            z_r[i] = _trunc_norm(cm, csd, yy_r[i] == 0)


@njit(cache=True)
def _rho_loglik(z_t, z_r, d, a_t, b_t, a_r, b_r, rho):
    n = d.shape[0]
    s2 = 1.0 - rho * rho
    quad = 0.0
    for i in range(n):
        et = z_t[i] - a_t - b_t * d[i]
        er = z_r[i] - a_r - b_r * d[i]
        quad += et * et - 2.0 * rho * et * er + er * er
    return -0.5 * n * math.log(s2) - 0.5 * quad / s2


@njit(cache=True)
def run_chain(d, y_t, y_r, t_follow, T_T, T_R, sd_int, sd_slope,
              warm, burn, retained, thin, rho_sd, seed):
    """Run one data-augmentation chain; returns (retained, 5) draws of
    (alpha_T, beta_T, alpha_R, beta_R, rho)."""
    np.random.seed(seed)
    n = d.shape[0]
    prec_int = 1.0 / (sd_int * sd_int)
    prec_slope = 1.0 / (sd_slope * sd_slope)

    a_t, b_t, a_r, b_r = 0.0, 1.0, 0.0, 1.0
    rho = 0.3
    z_t = np.empty(n)
    z_r = np.empty(n)
    for i in range(n):
        z_t[i] = 0.5 if y_t[i] == 1 else -0.5
        z_r[i] = 0.5 if y_r[i] == 1 else -0.5
    yy_t = y_t.copy()
    yy_r = y_r.copy()

    draws = np.empty((retained, 5))

    # warm phase: observed endpoints only, pending latents unconstrained
    for _ in range(warm):
        _draw_latents(z_t, z_r, y_t, y_r, d, a_t, b_t, a_r, b_r, rho)
        a_t, b_t = _draw_block(z_t, z_r, a_r, b_r, d, y_t, rho,
                               prec_int, prec_slope)
        a_r, b_r = _draw_block(z_r, z_t, a_t, b_t, d, y_r, rho,
                               prec_int, prec_slope)
        if n > 0:
            rho = _rho_step(z_t, z_r, d, a_t, b_t, a_r, b_r, rho, rho_sd)
        else:
            rho = _rho_step_empty(rho, rho_sd)

    kept = 0
    total = burn + retained * thin
    for it in range(total):
        _impute(yy_t, yy_r, y_t, y_r, d, t_follow, T_T, T_R,
                a_t, b_t, a_r, b_r, rho)
        _draw_latents(z_t, z_r, yy_t, yy_r, d, a_t, b_t, a_r, b_r, rho)
        a_t, b_t = _draw_block(z_t, z_r, a_r, b_r, d, yy_t, rho,
                               prec_int, prec_slope)
        a_r, b_r = _draw_block(z_r, z_t, a_t, b_t, d, yy_r, rho,
                               prec_int, prec_slope)
        if n > 0:
            rho = _rho_step(z_t, z_r, d, a_t, b_t, a_r, b_r, rho, rho_sd)
        else:
            rho = _rho_step_empty(rho, rho_sd)
        if it >= burn and (it - burn) % thin == 0:
            draws[kept, 0] = a_t
            draws[kept, 1] = b_t
            draws[kept, 2] = a_r
            draws[kept, 3] = b_r
            draws[kept, 4] = rho
            kept += 1
    return draws


@njit(cache=True)
def _reflect_01(x):
    while x < 0.0 or x > 1.0:
        if x < 0.0:
            x = -x
        if x > 1.0:
            x = 2.0 - x
    return x


@njit(cache=True)
def _rho_step(z_t, z_r, d, a_t, b_t, a_r, b_r, rho, rho_sd):
    prop = _reflect_01(rho + rho_sd * np.random.standard_normal())
    if prop <= 0.0 or prop >= 1.0:
        return rho
    cur = _rho_loglik(z_t, z_r, d, a_t, b_t, a_r, b_r, rho)
    new = _rho_loglik(z_t, z_r, d, a_t, b_t, a_r, b_r, prop)
    if math.log(np.random.random() + 1e-300) < new - cur:
        return prop
    return rho


@njit(cache=True)
def _rho_step_empty(rho, rho_sd):
    prop = _reflect_01(rho + rho_sd * np.random.standard_normal())
    if prop <= 0.0 or prop >= 1.0:
        return rho
    return prop
