"""Adapted frames along a spatial curve.

Serret-Frenet frame (closed form, singular at inflection points), Bishop
frame (twist-free, marched by successive minimal rotations between
tangents) and the material frame (Bishop rotated by the cross-section
angle theta about the tangent).  The marching routine optionally carries
the analytic sensitivities of every frame axis with respect to the
generalized coordinates that shape the curve.

Conventions: a curve is a callable ``x -> CurveSample``; its coordinate
sensitivities are a callable ``x -> (d_r_prime, d_r_dprime)`` with
``(3, n_q)`` arrays.  The stored initial triad is treated as constant
with respect to the coordinates; its tangent may be stale, in which case
one minimal rotation aligns it to the actual tangent at the first
station before the march starts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AntipodalTangentError,
    DerivativeSingularityError,
    InflectionPointError,
)

EPS_SF = 1e-10
EPS_PARALLEL = 1e-12
EPS_ANTIPODAL = 1e-4
EPS_DERIVATIVE = 1e-12
# below this rotation sine the Rodrigues derivative is evaluated in its
# small-angle limit (the exact d(phi)/dq expression degenerates to 0/0)
_SMALL_ANGLE = 1e-7


@dataclass(frozen=True)
class CurveSample:
    """First and second x-derivatives of the center-line at one station."""

    x: float
    r_prime: np.ndarray
    r_dprime: np.ndarray


@dataclass(frozen=True)
class FrameTriad:
    """Right-handed orthonormal triad (t, a2, a3).

    (a2, a3) are (n, b) for Serret-Frenet, (u, v) for Bishop and (y, z)
    for the material frame.
    """

    t: np.ndarray
    a2: np.ndarray
    a3: np.ndarray

    def as_matrix(self) -> np.ndarray:
        """Columns [t, a2, a3]."""
        return np.column_stack([self.t, self.a2, self.a3])

    def rotated(self, rot: np.ndarray) -> "FrameTriad":
        return FrameTriad(rot @ self.t, rot @ self.a2, rot @ self.a3)


@dataclass(frozen=True)
class DarbouxComponents:
    """Curvatures and twist rate of an adapted frame (per unit length)."""

    kappa1: float
    kappa2: float
    tau: float


@dataclass(frozen=True)
class FrameSensitivity:
    """Derivatives of the triad axes w.r.t. the n_q generalized coordinates."""

    d_t: np.ndarray
    d_a2: np.ndarray
    d_a3: np.ndarray


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _cross(a, b):
    """Cross product by row indexing; also works columnwise on (3, n)
    operands (much cheaper than np.cross with axis arguments)."""
    return np.stack((a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]))


def frame_from_tangent(t: np.ndarray) -> FrameTriad:
    """Deterministic orthonormal triad with the given (unit) tangent."""
    t = _unit(np.asarray(t, dtype=float))
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(t)))] = 1.0
    a2 = _unit(np.cross(helper, t))
    a3 = np.cross(t, a2)
    return FrameTriad(t, a2, a3)


def orthonormalize(triad: FrameTriad) -> FrameTriad:
    """Modified Gram-Schmidt keeping t exact; removes rounding drift."""
    t = _unit(triad.t)
    a2 = triad.a2 - (t @ triad.a2) * t
    a2 = _unit(a2)
    a3 = np.cross(t, a2)
    return FrameTriad(t, a2, a3)


def minimal_rotation(t_from: np.ndarray, t_to: np.ndarray,
                     eps_parallel: float = EPS_PARALLEL,
                     eps_antipodal: float = EPS_ANTIPODAL) -> np.ndarray:
    """Rotation matrix of the minimal rotation carrying t_from onto t_to.

    Both inputs must be unit vectors.  Returns the identity when the
    tangents are parallel within tolerance.
    """
    n = np.cross(t_from, t_to)
    norm_n = np.linalg.norm(n)
    if norm_n <= eps_parallel:
        if t_from @ t_to < 0.0:
            raise AntipodalTangentError(
                "minimal rotation undefined for opposite tangents")
        return np.eye(3)
    dot = float(np.clip(t_from @ t_to, -1.0, 1.0))
    if dot <= -1.0 + eps_antipodal:
        raise AntipodalTangentError(
            f"tangent reversal (dot = {dot:.6f}); refine stations/steps")
    n_hat = n / norm_n
    phi = np.arccos(dot)
    k = np.array([[0.0, -n_hat[2], n_hat[1]],
                  [n_hat[2], 0.0, -n_hat[0]],
                  [-n_hat[1], n_hat[0], 0.0]])
    return np.eye(3) + np.sin(phi) * k + (1.0 - np.cos(phi)) * (k @ k)


def sf_frame(sample: CurveSample, eps_sf: float = EPS_SF) -> FrameTriad:
    """Serret-Frenet triad (t, n, b) from curve derivatives.

    Raises InflectionPointError where ||r' x r''|| is below tolerance
    (inflection point or straight segment: n, b undefined).
    """
    rp, rpp = sample.r_prime, sample.r_dprime
    cross = np.cross(rp, rpp)
    norm_cross = np.linalg.norm(cross)
    if norm_cross <= eps_sf:
        raise InflectionPointError(
            f"Serret-Frenet frame undefined at x = {sample.x} "
            f"(||r' x r''|| = {norm_cross:.3e})")
    t = _unit(rp)
    b = cross / norm_cross
    n = np.cross(b, t)
    return FrameTriad(t, n, b)


def sf_curvature_torsion(sample: CurveSample, r_tprime: np.ndarray,
                         eps_sf: float = EPS_SF) -> tuple[float, float]:
    """Curvature and torsion of the Serret-Frenet frame.

    kappa = ||r' x r''|| / ||r'||^3,
    tau = ((r' x r'') . r''') / ||r' x r''||^2.
    """
    rp, rpp = sample.r_prime, sample.r_dprime
    cross = np.cross(rp, rpp)
    norm_cross = np.linalg.norm(cross)
    if norm_cross <= eps_sf:
        raise InflectionPointError(
            f"curvature/torsion undefined at x = {sample.x}")
    kappa = norm_cross / np.linalg.norm(rp) ** 3
    tau = float(cross @ np.asarray(r_tprime, dtype=float)) / norm_cross**2
    return float(kappa), tau


def tangent_sensitivity(r_prime: np.ndarray,
                        d_r_prime: np.ndarray) -> np.ndarray:
    """d t / d q for t = r'/||r'||: the unit-norm projector rule."""
    norm = np.linalg.norm(r_prime)
    t = r_prime / norm
    return (d_r_prime - np.outer(t, t @ d_r_prime)) / norm


def tangent_prime(r_prime: np.ndarray, r_dprime: np.ndarray) -> np.ndarray:
    """t'(x) for t = r'/||r'||."""
    norm = np.linalg.norm(r_prime)
    t = r_prime / norm
    return (r_dprime - (t @ r_dprime) * t) / norm


def tangent_prime_sensitivity(r_prime: np.ndarray, r_dprime: np.ndarray,
                              d_r_prime: np.ndarray,
                              d_r_dprime: np.ndarray) -> np.ndarray:
    """d t'/d q, differentiating t' = r''/n - r' (r'.r'')/n^3, n = ||r'||."""
    n = np.linalg.norm(r_prime)
    c = float(r_prime @ r_dprime)
    rp_d = r_prime @ d_r_prime          # (n_q,)
    return (d_r_dprime / n
            - np.outer(r_dprime, rp_d) / n**3
            - c * d_r_prime / n**3
            - np.outer(r_prime,
                       r_dprime @ d_r_prime + r_prime @ d_r_dprime) / n**3
            + 3.0 * c * np.outer(r_prime, rp_d) / n**5)


def _rodrigues_apply(vec, n_hat, sin_phi, cos_phi):
    return (vec * cos_phi + _cross(n_hat, vec) * sin_phi
            + n_hat * (n_hat @ vec) * (1.0 - cos_phi))


def _march(curve: Callable[[float], CurveSample],
           initial: FrameTriad,
           stations: Sequence[float],
           d_curve=None,
           eps_parallel: float = EPS_PARALLEL,
           eps_antipodal: float = EPS_ANTIPODAL,
           eps_derivative: float = EPS_DERIVATIVE):
    """Shared forward march: frames and (optionally) their sensitivities.

    The stored initial triad is iteration "-1" with zero sensitivity;
    the alignment of its possibly-stale tangent onto the actual tangent
    at the first station is the first minimal-rotation update, so the
    q-dependence of that alignment flows into the sensitivities.
    """
    stations = list(stations)
    if any(b <= a for a, b in zip(stations, stations[1:])):
        raise ValueError("stations must be strictly increasing")

    t_prev = _unit(initial.t)
    u_prev, v_prev = initial.a2.copy(), initial.a3.copy()
    want_sens = d_curve is not None
    if want_sens:
        sample0 = curve(stations[0])
        n_q = d_curve(stations[0])[0].shape[1]
        d_t_prev = np.zeros((3, n_q))
        d_u_prev = np.zeros((3, n_q))
        d_v_prev = np.zeros((3, n_q))

    frames: list[FrameTriad] = []
    sens: list[FrameSensitivity] = []

    for x in stations:
        sample = curve(x)
        norm_rp = np.linalg.norm(sample.r_prime)
        t_i = sample.r_prime / norm_rp
        if want_sens:
            d_rp, _ = d_curve(x)
            d_t_i = tangent_sensitivity(sample.r_prime, d_rp)

        n = _cross(t_prev, t_i)
        norm_n = np.linalg.norm(n)
        if norm_n <= eps_parallel:
            if t_prev @ t_i < 0.0:
                raise AntipodalTangentError(
                    f"tangent reversal between stations near x = {x}")
            u_i, v_i = u_prev, v_prev
            if want_sens:
                # small-rotation limit: R ~ I + [n]x with n = t_prev x t_i,
                # so the directors still pick up the derivative of n even
                # though the rotation itself is the identity
                d_n = (_cross(d_t_prev, t_i)
                       + _cross(t_prev, d_t_i))
                d_u_i = d_u_prev + _cross(d_n, u_prev)
                d_v_i = d_v_prev + _cross(d_n, v_prev)
        elif want_sens and norm_n <= _SMALL_ANGLE:
            dot = float(np.clip(t_prev @ t_i, -1.0, 1.0))
            if dot < 0.0:
                raise AntipodalTangentError(
                    f"tangent reversal between stations near x = {x}")
            u_i = _rodrigues_apply(u_prev, n / norm_n, norm_n, dot)
            v_i = _rodrigues_apply(v_prev, n / norm_n, norm_n, dot)
            d_n = (_cross(d_t_prev, t_i)
                   + _cross(t_prev, d_t_i))
            d_u_i = (d_u_prev + _cross(d_n, u_prev)
                     + _cross(n, d_u_prev))
            d_v_i = (d_v_prev + _cross(d_n, v_prev)
                     + _cross(n, d_v_prev))
        else:
            dot = float(np.clip(t_prev @ t_i, -1.0, 1.0))
            if dot <= -1.0 + eps_antipodal:
                raise AntipodalTangentError(
                    f"near-antipodal tangents at x = {x} (dot = {dot:.6f})")
            n_hat = n / norm_n
            phi = np.arccos(dot)
            sin_phi, cos_phi = np.sin(phi), np.cos(phi)
            u_i = _rodrigues_apply(u_prev, n_hat, sin_phi, cos_phi)
            v_i = _rodrigues_apply(v_prev, n_hat, sin_phi, cos_phi)
            if want_sens:
                if norm_n <= eps_derivative:
                    raise DerivativeSingularityError(
                        f"d(phi)/dq singular at x = {x} (dot = {dot:.12f})")
                d_n = (_cross(d_t_prev, t_i)
                       + _cross(t_prev, d_t_i))
                d_n_hat = (d_n - np.outer(n_hat, n_hat @ d_n)) / norm_n
                # d(arccos u)/du = -1/sqrt(1 - u^2); note the square in
                # the radicand (validated against finite differences).
                # sqrt(1 - dot^2) = |sin(phi)| = norm_n, which this branch
                # guarantees is well away from zero.
                d_dot = t_i @ d_t_prev + t_prev @ d_t_i
                d_phi = -d_dot / norm_n
                d_u_i = _d_rodrigues(u_prev, d_u_prev, n_hat, d_n_hat,
                                     sin_phi, cos_phi, d_phi)
                d_v_i = _d_rodrigues(v_prev, d_v_prev, n_hat, d_n_hat,
                                     sin_phi, cos_phi, d_phi)

        triad = orthonormalize(FrameTriad(t_i, u_i, v_i))
        frames.append(triad)
        if want_sens:
            sens.append(FrameSensitivity(d_t_i, d_u_i, d_v_i))
            d_t_prev, d_u_prev, d_v_prev = d_t_i, d_u_i, d_v_i
        t_prev, u_prev, v_prev = triad.t, triad.a2, triad.a3

    return frames, sens


def _d_rodrigues(vec, d_vec, n_hat, d_n_hat, sin_phi, cos_phi, d_phi):
    """Columnwise derivative of the Rodrigues update of ``vec``."""
    n_dot_vec = n_hat @ vec
    d_n_dot_vec = vec @ d_n_hat + n_hat @ d_vec
    return (d_vec * cos_phi - np.outer(vec, d_phi) * sin_phi
            + (_cross(d_n_hat, vec)
               + _cross(n_hat, d_vec)) * sin_phi
            + np.outer(_cross(n_hat, vec), d_phi) * cos_phi
            + d_n_hat * n_dot_vec * (1.0 - cos_phi)
            + np.outer(n_hat, d_n_dot_vec) * (1.0 - cos_phi)
            + np.outer(n_hat * n_dot_vec, d_phi) * sin_phi)


def bishop_march(curve: Callable[[float], CurveSample],
                 initial: FrameTriad,
                 stations: Sequence[float],
                 eps_parallel: float = EPS_PARALLEL) -> list[FrameTriad]:
    """Bishop frame at the given stations by the rotation method.

    At each station the previous directors are rotated by the minimal
    rotation carrying the previous tangent onto the current one; when
    the tangents are parallel the directors carry over unchanged.
    """
    frames, _ = _march(curve, initial, stations, eps_parallel=eps_parallel)
    return frames


def bishop_sensitivities(curve, d_curve, initial,
                         stations: Sequence[float],
                         eps_parallel: float = EPS_PARALLEL
                         ) -> list[FrameSensitivity]:
    """Sensitivities of the marched Bishop directors w.r.t. coordinates."""
    _, sens = _march(curve, initial, stations, d_curve=d_curve,
                     eps_parallel=eps_parallel)
    return sens


def bishop_march_with_sensitivities(curve, d_curve, initial, stations,
                                    eps_parallel: float = EPS_PARALLEL):
    """Single-pass frames + sensitivities (what element assembly uses)."""
    return _march(curve, initial, stations, d_curve=d_curve,
                  eps_parallel=eps_parallel)


def material_frame(bishop: FrameTriad, theta: float) -> FrameTriad:
    """Rotate the Bishop directors by theta about the tangent."""
    c, s = np.cos(theta), np.sin(theta)
    y = c * bishop.a2 + s * bishop.a3
    z = -s * bishop.a2 + c * bishop.a3
    return FrameTriad(bishop.t, y, z)


def material_twist_curvatures(t_prime: np.ndarray, material: FrameTriad,
                              theta_prime: float) -> DarbouxComponents:
    """Darboux components of the material frame.

    gamma1 = t'.y, gamma2 = t'.z; the twist rate is exactly theta'
    because the Bishop directors carry no twist of their own.
    """
    return DarbouxComponents(kappa1=float(t_prime @ material.a2),
                             kappa2=float(t_prime @ material.a3),
                             tau=float(theta_prime))


def numerical_twist_rate(material_frames: Sequence[FrameTriad],
                         stations: Sequence[float], i: int) -> float:
    """Central-difference estimate of y'.z at interior station i (testing)."""
    if not 0 < i < len(material_frames) - 1:
        raise ValueError("interior station required")
    dy = material_frames[i + 1].a2 - material_frames[i - 1].a2
    dx = stations[i + 1] - stations[i - 1]
    return float(dy @ material_frames[i].a3) / dx
