"""
Estimación de la velocidad del vehículo por mínimos cuadrados

v̂ = argmin ||y - H v||², resuelto por SVD. Las ecuaciones normales
(HᵀH)⁻¹Hᵀy sólo se usan como oráculo en los tests.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import ContractViolation, DegenerateGeometry, InsufficientBeams
from .geometria import NUM_BEAMS, BeamMask

RANK_TOL = 1e-10


@dataclass(frozen=True)
class VelocityEstimate:
    """Velocidad estimada en el marco del cuerpo"""

    v_body_mps: np.ndarray
    n_beams_used: int
    condition_number: float

    @property
    def speed_mps(self) -> float:
        return float(np.linalg.norm(self.v_body_mps))


def _factorizar(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[1] != 3:
        raise ContractViolation(f'H debe ser de k x 3, recibida {h.shape}')
    if h.shape[0] < 3:
        raise InsufficientBeams(h.shape[0])

    u, s, vt = np.linalg.svd(h, full_matrices=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise DegenerateGeometry(s)
    return u, s, vt


def solve_velocity_series(y: np.ndarray, h: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Resuelve muchas épocas con la misma H

    Args:
        y: Medidas de haz, (M, k) en m/s
        h: Matriz k x 3

    Returns:
        (velocidades (M, 3), número de condición de H)
    """
    u, s, vt = _factorizar(h)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[1] != u.shape[0]:
        raise ContractViolation(f'y tiene {y.shape[1]} haces y H {u.shape[0]} filas')
    v = ((y @ u) / s) @ vt
    return v, float(s[0] / s[-1])


def solve_velocity(y: np.ndarray, h: np.ndarray) -> VelocityEstimate:
    """
    Velocidad en el marco del cuerpo a partir de k >= 3 haces

    Raises:
        InsufficientBeams: Si k < 3
        DegenerateGeometry: Si H no tiene rango 3
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float)
    if y.shape[0] < 3 or h.shape[0] < 3:
        raise InsufficientBeams(min(y.shape[0], h.shape[0]))
    v, cond = solve_velocity_series(y.reshape(1, -1), h)
    return VelocityEstimate(v_body_mps=v[0], n_beams_used=int(y.shape[0]), condition_number=cond)


def assemble_beams(measured: np.ndarray, regressed: np.ndarray, mask: BeamMask) -> np.ndarray:
    """
    Intercala haces medidos y regresados en el orden de haz

    Args:
        measured: (..., 2) haces disponibles según la máscara
        regressed: (..., 2) haces ausentes, regresados por la red
        mask: BeamMask con exactamente dos haces disponibles
    """
    if mask.popcount != 2:
        raise ContractViolation(f'Se esperaban exactamente 2 haces disponibles, la máscara tiene {mask.popcount}')
    measured = np.asarray(measured, dtype=float)
    regressed = np.asarray(regressed, dtype=float)
    if measured.shape[-1] != 2 or regressed.shape[-1] != 2:
        raise ContractViolation('Se esperaban dos haces medidos y dos regresados')

    y = np.empty(np.broadcast_shapes(measured.shape, regressed.shape)[:-1] + (NUM_BEAMS,))
    disponibles = mask.as_array()
    y[..., disponibles] = measured
    y[..., ~disponibles] = regressed
    return y


def solve_with_regressed(
        measured: np.ndarray,
        regressed: np.ndarray,
        mask: BeamMask,
        h: np.ndarray
) -> VelocityEstimate:
    """Completa los cuatro haces y resuelve con la H completa"""
    return solve_velocity(assemble_beams(measured, regressed, mask), h)
