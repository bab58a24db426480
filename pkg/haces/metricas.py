"""
Métricas de evaluación sobre series de rapidez (norma del vector velocidad)
"""
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

from .exceptions import MetricsError


@dataclass(frozen=True)
class MetricsReport:
    """
    RMSE, MAE, R² y VAF de una serie de rapidez

    r2 y vaf son None cuando la verdad no tiene varianza; rmse_pct y mae_pct
    cuando la rapidez media es nula.
    """

    rmse_mps: float
    mae_mps: float
    rmse_pct: Optional[float]
    mae_pct: Optional[float]
    r2: Optional[float]
    vaf: Optional[float]
    n: int
    mean_speed_mps: float

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(truth_speeds, predicted_speeds) -> MetricsReport:
    """
    Calcula las cuatro métricas con varianza poblacional (1/N)

    Args:
        truth_speeds: Rapidez verdadera en m/s
        predicted_speeds: Rapidez estimada en m/s

    Returns:
        MetricsReport; los porcentajes usan la rapidez media verdadera de la serie

    Raises:
        MetricsError: Longitudes distintas, menos de 2 muestras o valores no finitos
    """
    x = np.asarray(truth_speeds, dtype=float).reshape(-1)
    x_hat = np.asarray(predicted_speeds, dtype=float).reshape(-1)
    if x.shape != x_hat.shape:
        raise MetricsError(f'Series de distinta longitud: {x.size} y {x_hat.size}')
    if x.size < 2:
        raise MetricsError(f'Se necesitan al menos 2 muestras, hay {x.size}')
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(x_hat))):
        raise MetricsError('Las series contienen valores no finitos')

    error = x - x_hat
    rmse = float(np.sqrt(np.mean(error ** 2)))
    mae = float(np.mean(np.abs(error)))
    media = float(np.mean(x))
    var_verdad = float(np.var(x))

    r2 = vaf = None
    if var_verdad > 0:
        r2 = 1.0 - float(np.sum(error ** 2)) / float(np.sum((x - media) ** 2))
        vaf = 100.0 * (1.0 - float(np.var(error)) / var_verdad)

    rmse_pct = mae_pct = None
    if media != 0:
        rmse_pct, mae_pct = 100.0 * rmse / media, 100.0 * mae / media

    return MetricsReport(
        rmse_mps=rmse, mae_mps=mae, rmse_pct=rmse_pct, mae_pct=mae_pct,
        r2=r2, vaf=vaf, n=int(x.size), mean_speed_mps=media,
    )


def speed_series(estimates: Iterable) -> np.ndarray:
    """Normas euclídeas de una lista de VelocityEstimate (o de vectores), en orden"""
    vectores = [getattr(e, 'v_body_mps', e) for e in estimates]
    if not vectores:
        return np.empty(0)
    return np.linalg.norm(np.asarray(vectores, dtype=float).reshape(len(vectores), -1), axis=1)
