"""
Datos de sensores: generador de trayectorias sintéticas, lectura/escritura CSV
y ensamblado de tuplas de entrenamiento (ventana IMU, haces parciales, haces objetivo)
"""
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
import pandas as pd

from .exceptions import ContractViolation, DatasetError
from .geometria import NUM_BEAMS, BeamGeometry, BeamMask, build_h
from .modelo_error import DvlErrorParams, apply_mask, corrupt_beam_series, make_rng
from .solver import solve_velocity_series

logger = logging.getLogger(__name__)

IMU_COLUMNS = ['t', 'fx', 'fy', 'fz', 'wx', 'wy', 'wz']
DVL_COLUMNS = ['t', 'b1', 'b2', 'b3', 'b4']
TRUTH_COLUMNS = ['t', 'vx', 'vy', 'vz']

GRAVEDAD = 9.80665
TOLERANCIA_TIEMPO = 1e-6


# ========== Tipos ==========

@dataclass(frozen=True)
class ImuWindow:
    """Ventana de la IMU que precede a una época del DVL"""

    accel_mps2: np.ndarray
    gyro_radps: np.ndarray
    epoch_s: float

    def __post_init__(self):
        accel = np.asarray(self.accel_mps2, dtype=float)
        gyro = np.asarray(self.gyro_radps, dtype=float)
        if accel.ndim != 2 or accel.shape[1] != 3 or gyro.shape != accel.shape:
            raise ContractViolation(
                f'Ventana IMU inválida: accel {accel.shape}, gyro {gyro.shape}'
            )
        if not (np.all(np.isfinite(accel)) and np.all(np.isfinite(gyro))):
            raise ContractViolation(f'Ventana IMU con valores no finitos en t={self.epoch_s}')
        object.__setattr__(self, 'accel_mps2', accel)
        object.__setattr__(self, 'gyro_radps', gyro)

    @property
    def length(self) -> int:
        return self.accel_mps2.shape[0]


@dataclass(frozen=True)
class DvlSample:
    """Una época del DVL con sus cuatro haces"""

    epoch_s: float
    beams_mps: np.ndarray
    validity: BeamMask


@dataclass(frozen=True)
class TrainingTuple:
    """Entrada y objetivo de la red para una época"""

    window: ImuWindow
    partial_beams_mps: np.ndarray
    target_beams_mps: np.ndarray
    v_true_mps: np.ndarray
    mask: BeamMask

    @property
    def epoch_s(self) -> float:
        return self.window.epoch_s


@dataclass
class ImuSeries:
    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray

    def __len__(self):
        return len(self.t)

    def to_frame(self) -> pd.DataFrame:
        datos = np.column_stack([self.t, self.accel, self.gyro]) if len(self) else np.empty((0, 7))
        return pd.DataFrame(datos, columns=IMU_COLUMNS)


@dataclass
class DvlSeries:
    """Serie del DVL; los haces inválidos se guardan como NaN"""

    t: np.ndarray
    beams: np.ndarray

    def __len__(self):
        return len(self.t)

    @property
    def validity(self) -> np.ndarray:
        return np.isfinite(self.beams)

    def sample(self, i: int) -> DvlSample:
        return DvlSample(
            epoch_s=float(self.t[i]),
            beams_mps=self.beams[i].copy(),
            validity=BeamMask(tuple(self.validity[i])),
        )

    def to_frame(self) -> pd.DataFrame:
        datos = np.column_stack([self.t, self.beams]) if len(self) else np.empty((0, 5))
        return pd.DataFrame(datos, columns=DVL_COLUMNS)


@dataclass
class TruthSeries:
    t: np.ndarray
    v: np.ndarray

    def __len__(self):
        return len(self.t)

    def to_frame(self) -> pd.DataFrame:
        datos = np.column_stack([self.t, self.v]) if len(self) else np.empty((0, 4))
        return pd.DataFrame(datos, columns=TRUTH_COLUMNS)


@dataclass
class GapReport:
    """Épocas del DVL descartadas durante el ensamblado y su motivo"""

    skipped: List[Tuple[float, str]] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.skipped)

    def by_reason(self) -> dict:
        return dict(Counter(motivo for _, motivo in self.skipped))

    def add(self, epoch, reason):
        self.skipped.append((float(epoch), reason))


# ========== Trayectorias sintéticas ==========

@dataclass(frozen=True)
class MotionProfile:
    """Perfil de movimiento del generador de trayectorias"""

    mean_speed_mps: float = 1.2
    surge_amplitude_mps: float = 0.8
    sway_amplitude_mps: float = 0.3
    heave_amplitude_mps: float = 0.03
    n_components: int = 3
    min_period_s: float = 20.0
    max_period_s: float = 300.0
    # Trimado: cabeceo por m/s de avance y balanceo por m/s de deriva
    pitch_trim_deg_per_mps: float = 6.0
    roll_trim_deg_per_mps: float = 6.0
    attitude_amplitude_deg: float = 0.1
    yaw_rate_amplitude_dps: float = 1.0
    accel_noise_std: float = 0.01
    gyro_noise_std: float = 0.001
    imu_rate_hz: float = 100.0

    @classmethod
    def from_config(cls, config: dict) -> 'MotionProfile':
        campos = {k: v for k, v in config.items() if k in cls.__dataclass_fields__}
        return cls(**campos)

    @classmethod
    def constant_velocity(cls, speed_mps: float = 1.2, **kwargs) -> 'MotionProfile':
        return cls(
            mean_speed_mps=speed_mps, surge_amplitude_mps=0.0, sway_amplitude_mps=0.0,
            heave_amplitude_mps=0.0, attitude_amplitude_deg=0.0, yaw_rate_amplitude_dps=0.0,
            **kwargs
        )


@dataclass
class Trajectory:
    """Serie a la frecuencia de la IMU con la verdad y las lecturas inerciales"""

    t: np.ndarray
    v_body: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    gravity_term: np.ndarray

    def __len__(self):
        return len(self.t)

    def to_imu(self) -> ImuSeries:
        return ImuSeries(t=self.t, accel=self.accel, gyro=self.gyro)


def _sinusoides(rng, t, amplitud, n, min_periodo, max_periodo):
    """Suma de n senos de baja frecuencia y su derivada temporal"""
    periodos = rng.uniform(min_periodo, max_periodo, n)
    fases = rng.uniform(0.0, 2 * math.pi, n)
    omegas = 2 * math.pi / periodos
    argumentos = np.outer(t, omegas) + fases
    a = amplitud / n
    return a * np.sin(argumentos).sum(axis=1), a * (np.cos(argumentos) * omegas).sum(axis=1)


def generate_trajectory(duration_s: float, profile: MotionProfile, seed: int) -> Trajectory:
    """
    Genera una trayectoria suave a la frecuencia de la IMU

    La velocidad en el cuerpo es la suma de sinusoides de baja frecuencia sobre
    un avance medio; la fuerza específica es dv/dt más la proyección de la gravedad
    con una actitud que sigue el trimado del vehículo (cabeceo proporcional a la
    oscilación del avance, balanceo proporcional a la deriva) más una deriva
    pequeña independiente. Los giróscopos ven las velocidades angulares de esa
    actitud.

    Args:
        duration_s: Duración en segundos (> 0)
        profile: MotionProfile
        seed: Semilla del generador

    Returns:
        Trajectory con muestras en t = k / imu_rate_hz, k = 1..N
    """
    if not duration_s > 0:
        raise ContractViolation(f'La duración debe ser positiva, recibida {duration_s}')

    rng = make_rng(seed)
    rate = profile.imu_rate_hz
    n = int(round(duration_s * rate))
    t = np.arange(1, n + 1) / rate

    v = np.zeros((n, 3))
    dv = np.zeros((n, 3))
    amplitudes = (profile.surge_amplitude_mps, profile.sway_amplitude_mps, profile.heave_amplitude_mps)
    for eje, amplitud in enumerate(amplitudes):
        v[:, eje], dv[:, eje] = _sinusoides(
            rng, t, amplitud, profile.n_components, profile.min_period_s, profile.max_period_s
        )

    # El vehículo mete el morro al acelerar y se escora hacia la deriva
    k_pitch = math.radians(profile.pitch_trim_deg_per_mps)
    k_roll = math.radians(profile.roll_trim_deg_per_mps)
    pitch_trim, pitch_trim_dot = -k_pitch * v[:, 0], -k_pitch * dv[:, 0]
    roll_trim, roll_trim_dot = k_roll * v[:, 1], k_roll * dv[:, 1]

    # Ajuste del avance para que la rapidez media sea la configurada
    v[:, 0] += profile.mean_speed_mps
    for _ in range(3):
        v[:, 0] += profile.mean_speed_mps - np.linalg.norm(v, axis=1).mean()

    amplitud_actitud = math.radians(profile.attitude_amplitude_deg)
    roll, roll_dot = _sinusoides(rng, t, amplitud_actitud, 1, profile.min_period_s, profile.max_period_s)
    pitch, pitch_dot = _sinusoides(rng, t, amplitud_actitud, 1, profile.min_period_s, profile.max_period_s)
    yaw_rate, _ = _sinusoides(
        rng, t, math.radians(profile.yaw_rate_amplitude_dps), 1, profile.min_period_s, profile.max_period_s
    )
    roll, roll_dot = roll + roll_trim, roll_dot + roll_trim_dot
    pitch, pitch_dot = pitch + pitch_trim, pitch_dot + pitch_trim_dot

    # f = a - g, con g proyectada en el cuerpo (z hacia abajo)
    gravedad = GRAVEDAD * np.column_stack([
        np.sin(pitch),
        -np.sin(roll) * np.cos(pitch),
        -np.cos(roll) * np.cos(pitch),
    ])

    accel = dv + gravedad + profile.accel_noise_std * rng.standard_normal((n, 3))
    gyro = np.column_stack([roll_dot, pitch_dot, yaw_rate]) + profile.gyro_noise_std * rng.standard_normal((n, 3))

    logger.debug(f'Trayectoria generada: {n} muestras, rapidez media {np.linalg.norm(v, axis=1).mean():.3f} m/s')
    return Trajectory(t=t, v_body=v, accel=accel, gyro=gyro, gravity_term=gravedad)


def simulate_dvl(
        trajectory: Trajectory,
        geometry: BeamGeometry,
        error_params: DvlErrorParams,
        dvl_rate_hz: float = 1.0
) -> Tuple[DvlSeries, TruthSeries]:
    """
    Muestrea la trayectoria a la frecuencia del DVL y aplica el modelo de error

    Returns:
        (haces corrompidos, velocidad verdadera) en las épocas del DVL
    """
    if len(trajectory) == 0:
        vacio = np.empty(0)
        return DvlSeries(vacio, np.empty((0, NUM_BEAMS))), TruthSeries(vacio, np.empty((0, 3)))

    dt = trajectory.t[0]
    paso = int(round(1.0 / (dvl_rate_hz * dt)))
    indices = np.arange(paso - 1, len(trajectory), paso)
    v = trajectory.v_body[indices]
    beams = corrupt_beam_series(v, build_h(geometry), error_params, error_params.rng())
    t = trajectory.t[indices]
    return DvlSeries(t=t.copy(), beams=beams), TruthSeries(t=t.copy(), v=v.copy())


# ========== CSV ==========

def save_csv(series, path) -> Path:
    """Escribe una serie (IMU, DVL o verdad) con precisión de ida y vuelta"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    series.to_frame().to_csv(
        path, index=False, float_format='%.17g', na_rep='', lineterminator='\n', encoding='utf-8'
    )
    return path


def _error_de_celda(path, columna, celda, linea) -> DatasetError:
    if not celda:
        return DatasetError(f'Campo {columna} vacío', path=path, line=linea)
    try:
        valor = float(celda)
    except ValueError:
        return DatasetError(f'Valor no numérico en {columna}: {celda!r}', path=path, line=linea)
    if not math.isfinite(valor):
        return DatasetError(f'Valor no finito en {columna}: {celda!r}', path=path, line=linea)
    return DatasetError(f'Valor no numérico en {columna}: {celda!r}', path=path, line=linea)


def _leer_csv(path, columnas: Sequence[str], permitir_vacios: bool = False) -> np.ndarray:
    """
    Lee un CSV numérico validando cabecera, tipos y monotonía del tiempo

    Returns:
        Matriz (N, len(columnas)); NaN en las celdas vacías si se permiten
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError('Archivo no encontrado', path=path)

    try:
        df = pd.read_csv(
            path, dtype=str, keep_default_na=False, skip_blank_lines=False, encoding='utf-8'
        )
    except pd.errors.EmptyDataError:
        raise DatasetError(f'Archivo vacío, se esperaba la cabecera {",".join(columnas)}', path=path)
    except pd.errors.ParserError as e:
        raise DatasetError(f'Fila mal formada: {e}', path=path)

    encontradas = [c.strip() for c in df.columns]
    if encontradas != list(columnas):
        raise DatasetError(
            f'Cabecera inesperada {",".join(encontradas)}; se esperaba {",".join(columnas)}',
            path=path, line=1
        )

    datos = np.empty((len(df), len(columnas)))
    for j, columna in enumerate(df.columns):
        celdas = df[columna].fillna('').str.strip().to_numpy(dtype=str)
        admitidas = (celdas == '') if permitir_vacios and j > 0 else np.zeros(len(celdas), dtype=bool)
        try:
            valores = np.where(admitidas, 'nan', celdas).astype(float)
        except ValueError:
            valores = pd.to_numeric(pd.Series(celdas), errors='coerce').to_numpy(dtype=float)

        malas = ~np.isfinite(valores) & ~admitidas
        if malas.any():
            i = int(np.argmax(malas))
            raise _error_de_celda(path, columnas[j], celdas[i], i + 2)
        datos[:, j] = valores

    if len(datos) > 1:
        no_crecientes = np.nonzero(np.diff(datos[:, 0]) <= 0)[0]
        if len(no_crecientes):
            raise DatasetError('Marcas de tiempo no crecientes', path=path, line=int(no_crecientes[0]) + 3)

    return datos


def load_csv(imu_path, dvl_path) -> Tuple[ImuSeries, DvlSeries]:
    """
    Carga las series de IMU y DVL

    Raises:
        DatasetError: Cabecera distinta, filas mal formadas, valores no finitos
            o tiempos no crecientes (el mensaje indica archivo y línea)
    """
    imu = _leer_csv(imu_path, IMU_COLUMNS)
    dvl = _leer_csv(dvl_path, DVL_COLUMNS, permitir_vacios=True)
    logger.info(f'Cargadas {len(imu)} muestras IMU de {imu_path} y {len(dvl)} épocas DVL de {dvl_path}')
    return (
        ImuSeries(t=imu[:, 0], accel=imu[:, 1:4], gyro=imu[:, 4:7]),
        DvlSeries(t=dvl[:, 0], beams=dvl[:, 1:5]),
    )


def load_truth_csv(path) -> TruthSeries:
    datos = _leer_csv(path, TRUTH_COLUMNS)
    return TruthSeries(t=datos[:, 0], v=datos[:, 1:4])


# ========== Tuplas ==========

def _buscar_epoca(t_ordenado: np.ndarray, epoca: float) -> Optional[int]:
    i = int(np.searchsorted(t_ordenado, epoca - TOLERANCIA_TIEMPO))
    if i < len(t_ordenado) and abs(t_ordenado[i] - epoca) <= TOLERANCIA_TIEMPO:
        return i
    return None


def assemble_tuples(
        imu: ImuSeries,
        dvl: DvlSeries,
        mask: BeamMask,
        truth: Optional[TruthSeries] = None,
        h: Optional[np.ndarray] = None,
        window_samples: int = 100,
        window_s: float = 1.0
) -> Tuple[List[TrainingTuple], GapReport]:
    """
    Una tupla por época del DVL con la ventana IMU en (época - window_s, época]

    La velocidad verdadera sale de `truth` si se da; si no, de la solución por
    mínimos cuadrados de los cuatro haces con `h`.

    Returns:
        (tuplas, informe de huecos); tuplas + huecos = épocas del DVL
    """
    if mask.popcount != 2:
        raise ContractViolation(f'El escenario de entrenamiento necesita 2 haces disponibles, hay {mask.popcount}')
    if truth is None and h is None:
        raise ContractViolation('Se necesita la serie de verdad o la matriz H')

    disponibles = mask.as_array()
    tuplas = []
    huecos = GapReport()

    for i in range(len(dvl)):
        epoca = float(dvl.t[i])
        inicio = int(np.searchsorted(imu.t, epoca - window_s + TOLERANCIA_TIEMPO, side='right'))
        fin = int(np.searchsorted(imu.t, epoca + TOLERANCIA_TIEMPO, side='right'))
        if fin - inicio != window_samples:
            huecos.add(epoca, 'imu_gap')
            continue

        beams = dvl.beams[i]
        if not np.all(np.isfinite(beams)):
            huecos.add(epoca, 'invalid_beams')
            continue

        if truth is not None:
            j = _buscar_epoca(truth.t, epoca)
            if j is None:
                huecos.add(epoca, 'missing_truth')
                continue
            v_true = truth.v[j].copy()
        else:
            v_true = solve_velocity_series(beams.reshape(1, -1), h)[0][0]

        tuplas.append(TrainingTuple(
            window=ImuWindow(
                accel_mps2=imu.accel[inicio:fin],
                gyro_radps=imu.gyro[inicio:fin],
                epoch_s=epoca,
            ),
            partial_beams_mps=beams[disponibles].copy(),
            target_beams_mps=beams[~disponibles].copy(),
            v_true_mps=v_true,
            mask=mask,
        ))

    if huecos.count:
        logger.warning(f'{huecos.count} épocas DVL descartadas: {huecos.by_reason()}')
    logger.info(f'Ensambladas {len(tuplas)} tuplas de {len(dvl)} épocas DVL')
    return tuplas, huecos


def split(tuples: Sequence[TrainingTuple], train_frac: float) -> Tuple[List[TrainingTuple], List[TrainingTuple]]:
    """Partición contigua en el tiempo (entrenamiento primero, sin barajar)"""
    if not 0.0 < train_frac < 1.0:
        raise ContractViolation(f'train_frac debe estar en (0, 1), recibido {train_frac}')
    ordenadas = sorted(tuples, key=lambda tupla: tupla.epoch_s)
    corte = int(round(len(ordenadas) * train_frac))
    return ordenadas[:corte], ordenadas[corte:]


@dataclass
class TupleBatch:
    """Tuplas apiladas en arrays; accel y gyro como (B, T, 3)"""

    accel: np.ndarray
    gyro: np.ndarray
    partial: np.ndarray
    target: np.ndarray
    v_true: np.ndarray
    epochs: np.ndarray

    def __len__(self):
        return len(self.epochs)

    def subset(self, indices) -> 'TupleBatch':
        return TupleBatch(
            accel=self.accel[indices], gyro=self.gyro[indices], partial=self.partial[indices],
            target=self.target[indices], v_true=self.v_true[indices], epochs=self.epochs[indices],
        )


def stack_tuples(tuples: Sequence[TrainingTuple]) -> TupleBatch:
    if not tuples:
        raise ContractViolation('No hay tuplas que apilar')
    return TupleBatch(
        accel=np.stack([t.window.accel_mps2 for t in tuples]),
        gyro=np.stack([t.window.gyro_radps for t in tuples]),
        partial=np.stack([t.partial_beams_mps for t in tuples]),
        target=np.stack([t.target_beams_mps for t in tuples]),
        v_true=np.stack([t.v_true_mps for t in tuples]),
        epochs=np.array([t.epoch_s for t in tuples]),
    )


def corrupt_loaded_dvl(dvl: DvlSeries, geometry: BeamGeometry, error_params: DvlErrorParams) -> Tuple[DvlSeries, TruthSeries]:
    """
    Trata los haces cargados como referencia y genera la unidad bajo prueba

    La verdad es la solución de mínimos cuadrados de los haces limpios; los
    haces corrompidos salen del modelo de error aplicado a esa velocidad.
    """
    h = build_h(geometry)
    validas = np.all(dvl.validity, axis=1)
    v = np.full((len(dvl), 3), np.nan)
    if validas.any():
        v[validas] = solve_velocity_series(dvl.beams[validas], h)[0]
    beams = np.full_like(dvl.beams, np.nan)
    if validas.any():
        beams[validas] = corrupt_beam_series(v[validas], h, error_params, error_params.rng())
    return DvlSeries(t=dvl.t.copy(), beams=beams), TruthSeries(t=dvl.t[validas].copy(), v=v[validas])
