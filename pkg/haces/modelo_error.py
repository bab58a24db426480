"""
Modelo de error de los haces del DVL

y = H(v·(1+s)) + b + n, con factor de escala s y sesgo b por haz y ruido
gaussiano blanco n de media cero. La fuente aleatoria es siempre un
numpy.random.Generator sobre PCG64 sembrado explícitamente.
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .exceptions import ContractViolation
from .geometria import NUM_BEAMS, BeamMask

Escalar = Union[float, Sequence[float]]


def make_rng(seed: int) -> np.random.Generator:
    """Generador reproducible a partir de una semilla de 64 bits"""
    return np.random.Generator(np.random.PCG64(int(seed)))


def _por_haz(valor: Escalar, nombre: str) -> np.ndarray:
    array = np.asarray(valor, dtype=float)
    if array.ndim == 0:
        array = np.full(NUM_BEAMS, float(array))
    if array.shape != (NUM_BEAMS,):
        raise ContractViolation(f'{nombre} debe ser un escalar o un vector de {NUM_BEAMS} valores')
    return array


@dataclass(frozen=True)
class DvlErrorParams:
    """Parámetros del modelo de error (valores por defecto de los experimentos de mar)"""

    scale: np.ndarray = None
    bias_mps: np.ndarray = None
    noise_std_mps: float = 0.042
    seed: int = 0

    def __post_init__(self):
        scale = _por_haz(0.007 if self.scale is None else self.scale, 'scale')
        bias = _por_haz(0.0001 if self.bias_mps is None else self.bias_mps, 'bias_mps')
        if not np.all(np.isfinite(scale)) or np.any(scale <= -1.0):
            raise ContractViolation(f'Los factores de escala deben ser > -1: {scale.tolist()}')
        if not np.all(np.isfinite(bias)):
            raise ContractViolation('El sesgo debe ser finito')
        if not np.isfinite(self.noise_std_mps) or self.noise_std_mps < 0:
            raise ContractViolation(f'La desviación del ruido debe ser >= 0: {self.noise_std_mps}')
        object.__setattr__(self, 'scale', scale)
        object.__setattr__(self, 'bias_mps', bias)
        object.__setattr__(self, 'noise_std_mps', float(self.noise_std_mps))
        object.__setattr__(self, 'seed', int(self.seed))

    @classmethod
    def from_config(cls, config: dict) -> 'DvlErrorParams':
        return cls(
            scale=config.get('scale', 0.007),
            bias_mps=config.get('bias_mps', 0.0001),
            noise_std_mps=config.get('noise_std_mps', 0.042),
            seed=config.get('seed', 0),
        )

    def rng(self) -> np.random.Generator:
        return make_rng(self.seed)


def corrupt_beam_series(
        v_body: np.ndarray,
        h: np.ndarray,
        params: DvlErrorParams,
        rng_state: np.random.Generator
) -> np.ndarray:
    """
    Aplica el modelo de error a una serie de velocidades

    Args:
        v_body: Velocidades en el marco del cuerpo, (M, 3) en m/s
        h: Matriz H (4x3)
        params: DvlErrorParams
        rng_state: Generador del que se extrae el ruido (se modifica)

    Returns:
        Velocidades de haz corrompidas, (M, 4) en m/s
    """
    v_body = np.atleast_2d(np.asarray(v_body, dtype=float))
    h = np.asarray(h, dtype=float)
    # Escala por haz tras la proyección; coincide con H(v(1+s)) cuando s es escalar
    limpio = (v_body @ h.T) * (1.0 + params.scale)
    ruido = params.noise_std_mps * rng_state.standard_normal(limpio.shape)
    return limpio + params.bias_mps + ruido


def corrupt_beams(
        v_body: np.ndarray,
        h: np.ndarray,
        params: DvlErrorParams,
        rng_state: np.random.Generator
) -> np.ndarray:
    """Velocidades de haz medidas por el DVL para una velocidad verdadera (3,) -> (4,)"""
    return corrupt_beam_series(np.asarray(v_body, dtype=float).reshape(1, 3), h, params, rng_state)[0]


def apply_mask(y: np.ndarray, mask: BeamMask) -> np.ndarray:
    """Componentes de y en los haces disponibles, en orden de haz"""
    y = np.asarray(y, dtype=float)
    return y[..., mask.as_array()]
