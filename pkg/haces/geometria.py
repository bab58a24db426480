"""
Geometría de la configuración Janus del DVL

Cada haz i apunta en la dirección [cos ψ_i sin θ, sin ψ_i sin θ, cos θ] del
marco del cuerpo; apilando las cuatro direcciones se obtiene la matriz H (4x3)
que relaciona la velocidad del vehículo con las velocidades de haz.
"""
from dataclasses import dataclass, field
from typing import Iterable, Tuple
import math

import numpy as np

from .exceptions import ContractViolation, GeometryError

NUM_BEAMS = 4


def default_headings() -> Tuple[float, float, float, float]:
    """Rumbos ψ_i = (i-1)·π/2 + π/4 de los cuatro haces, en radianes"""
    return tuple((i - 1) * math.pi / 2 + math.pi / 4 for i in range(1, NUM_BEAMS + 1))


def _validar_pitch(pitch_deg):
    if not math.isfinite(pitch_deg) or not 0.0 < pitch_deg < 90.0:
        raise GeometryError(
            f'El ángulo de inclinación debe estar en (0, 90) grados, recibido {pitch_deg}'
        )


def beam_direction(pitch_deg: float, heading_rad: float) -> np.ndarray:
    """
    Dirección unitaria de un haz en el marco del cuerpo

    Args:
        pitch_deg: Inclinación fija del transductor θ en grados
        heading_rad: Rumbo del haz ψ en radianes

    Returns:
        Vector de 3 componentes con norma 1

    Raises:
        GeometryError: Si θ no está en (0, 90)
    """
    _validar_pitch(pitch_deg)
    theta = math.radians(pitch_deg)
    return np.array([
        math.cos(heading_rad) * math.sin(theta),
        math.sin(heading_rad) * math.sin(theta),
        math.cos(theta),
    ])


@dataclass(frozen=True)
class BeamGeometry:
    """Transductor Janus: inclinación fija y rumbo de cada haz"""

    pitch_deg: float = 20.0
    headings_rad: Tuple[float, ...] = field(default_factory=default_headings)

    def __post_init__(self):
        _validar_pitch(self.pitch_deg)
        headings = tuple(float(h) for h in self.headings_rad)
        if len(headings) != NUM_BEAMS or not all(math.isfinite(h) for h in headings):
            raise GeometryError(f'Se esperaban {NUM_BEAMS} rumbos finitos, recibidos {headings}')
        object.__setattr__(self, 'headings_rad', headings)

    @property
    def h_matrix(self) -> np.ndarray:
        return build_h(self)

    @classmethod
    def from_config(cls, config: dict) -> 'BeamGeometry':
        headings = config.get('headings_rad')
        if headings is None:
            return cls(pitch_deg=float(config.get('pitch_deg', 20.0)))
        return cls(pitch_deg=float(config.get('pitch_deg', 20.0)), headings_rad=tuple(headings))


def build_h(geometry: BeamGeometry) -> np.ndarray:
    """Matriz de transformación H: la fila i es la dirección del haz i"""
    return np.vstack([
        beam_direction(geometry.pitch_deg, heading) for heading in geometry.headings_rad
    ])


@dataclass(frozen=True)
class BeamMask:
    """Haces disponibles, uno por haz y en orden"""

    available: Tuple[bool, bool, bool, bool] = (True, True, True, True)

    def __post_init__(self):
        flags = tuple(bool(a) for a in self.available)
        if len(flags) != NUM_BEAMS:
            raise ContractViolation(f'La máscara necesita {NUM_BEAMS} valores, recibidos {len(flags)}')
        object.__setattr__(self, 'available', flags)

    @classmethod
    def from_missing(cls, missing: Iterable[int]) -> 'BeamMask':
        """
        Construye la máscara a partir de los haces ausentes (numeración 1..4)

        Args:
            missing: Números de haz ausentes, p. ej. [2, 4]
        """
        missing = set(int(m) for m in missing)
        fuera = [m for m in missing if not 1 <= m <= NUM_BEAMS]
        if fuera:
            raise ContractViolation(f'Números de haz fuera de 1..{NUM_BEAMS}: {sorted(fuera)}')
        return cls(tuple(i not in missing for i in range(1, NUM_BEAMS + 1)))

    @property
    def popcount(self) -> int:
        return sum(self.available)

    @property
    def indices(self) -> Tuple[int, ...]:
        """Índices (base 0) de los haces disponibles"""
        return tuple(i for i, a in enumerate(self.available) if a)

    @property
    def missing_beams(self) -> Tuple[int, ...]:
        """Números (base 1) de los haces ausentes"""
        return tuple(i + 1 for i, a in enumerate(self.available) if not a)

    def complement(self) -> 'BeamMask':
        return BeamMask(tuple(not a for a in self.available))

    def as_array(self) -> np.ndarray:
        return np.array(self.available, dtype=bool)

    def __str__(self):
        return '{' + ','.join(str(i + 1) for i in self.indices) + '}'


def reduce_h(h: np.ndarray, mask: BeamMask) -> np.ndarray:
    """Filas de H de los haces disponibles, conservando el orden"""
    h = np.asarray(h, dtype=float)
    return h[mask.as_array(), :].reshape(-1, h.shape[1])

