"""
Regresor de haces: red convolucional 1-D escrita sobre numpy

Dos cabezas conv1d (acelerómetro y giróscopo) que se aplanan y concatenan,
dropout, capas densas, concatenación de los dos haces medidos y una capa
lineal que produce los dos haces ausentes. Incluye el paso hacia atrás
exacto y la serialización del checkpoint en JSON.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import base64
import hashlib
import json
import logging
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import CheckpointError, ContractViolation

logger = logging.getLogger(__name__)

FORMATO = 'libeamsnet-ckpt-1'
STD_MINIMA = 1e-12
ACTIVACIONES = ('relu', 'tanh', 'linear')
CABEZAS = (('conv_accel', 'accel'), ('conv_gyro', 'gyro'))


@dataclass(frozen=True)
class NetworkConfig:
    """Hiperparámetros de la topología"""

    conv_filters: int = 6
    kernel_size: int = 2
    hidden_sizes: Tuple[int, ...] = (512, 64)
    dropout: float = 0.2
    activation: str = 'relu'
    conv_activation: str = 'linear'
    window_samples: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'hidden_sizes', tuple(int(h) for h in self.hidden_sizes))
        if self.conv_filters < 1 or self.kernel_size < 1 or not self.hidden_sizes:
            raise ContractViolation('La red necesita filtros, kernel y al menos una capa oculta')
        if self.kernel_size > self.window_samples:
            raise ContractViolation(
                f'El kernel ({self.kernel_size}) no cabe en la ventana ({self.window_samples})'
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ContractViolation(f'dropout debe estar en [0, 1), recibido {self.dropout}')
        for act in (self.activation, self.conv_activation):
            if act not in ACTIVACIONES:
                raise ContractViolation(f'Activación desconocida: {act}')

    @classmethod
    def from_config(cls, config: dict) -> 'NetworkConfig':
        campos = {k: v for k, v in config.items() if k in cls.__dataclass_fields__}
        return cls(**campos)


@dataclass
class NormStats:
    """Media y desviación por canal, calculadas sólo sobre el split de entrenamiento"""

    accel_mean: np.ndarray
    accel_std: np.ndarray
    gyro_mean: np.ndarray
    gyro_std: np.ndarray
    partial_mean: np.ndarray
    partial_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray

    def __post_init__(self):
        for nombre in self.__dataclass_fields__:
            setattr(self, nombre, np.asarray(getattr(self, nombre), dtype=float))
        for nombre in ('accel_std', 'gyro_std', 'partial_std', 'target_std'):
            if np.any(getattr(self, nombre) <= 0):
                raise ContractViolation(f'{nombre} debe ser > 0')

    def to_dict(self) -> dict:
        return {nombre: getattr(self, nombre).tolist() for nombre in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, datos: dict) -> 'NormStats':
        faltan = [n for n in cls.__dataclass_fields__ if n not in datos]
        if faltan:
            raise CheckpointError(f'Faltan estadísticas de normalización: {faltan}')
        return cls(**{n: datos[n] for n in cls.__dataclass_fields__})


def _std(x, axis):
    std = np.std(x, axis=axis)
    return np.where(std > STD_MINIMA, std, 1.0)


def compute_norm_stats(batch) -> NormStats:
    """Estadísticas z-score por canal a partir de un TupleBatch"""
    accel = batch.accel.reshape(-1, batch.accel.shape[-1])
    gyro = batch.gyro.reshape(-1, batch.gyro.shape[-1])
    return NormStats(
        accel_mean=accel.mean(axis=0), accel_std=_std(accel, 0),
        gyro_mean=gyro.mean(axis=0), gyro_std=_std(gyro, 0),
        partial_mean=batch.partial.mean(axis=0), partial_std=_std(batch.partial, 0),
        target_mean=batch.target.mean(axis=0), target_std=_std(batch.target, 0),
    )


@dataclass
class ModelCheckpoint:
    """Parámetros de la red, su topología, normalización y metadatos"""

    layer_specs: List[dict]
    parameters: Dict[str, np.ndarray]
    norm_stats: Optional[NormStats] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        esperadas = expected_shapes(self.layer_specs)
        if set(esperadas) != set(self.parameters):
            raise CheckpointError(
                f'Parámetros {sorted(self.parameters)} no coinciden con la topología {sorted(esperadas)}'
            )
        for nombre, forma in esperadas.items():
            if tuple(self.parameters[nombre].shape) != forma:
                raise CheckpointError(
                    f'{nombre}: forma {self.parameters[nombre].shape}, se esperaba {forma}'
                )

    @property
    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.parameters.values()))

    def copy(self) -> 'ModelCheckpoint':
        return ModelCheckpoint(
            layer_specs=[dict(s) for s in self.layer_specs],
            parameters={k: v.copy() for k, v in self.parameters.items()},
            norm_stats=self.norm_stats,
            meta=dict(self.meta),
        )


# ========== Topología ==========

def build_layer_specs(cfg: NetworkConfig) -> List[dict]:
    """Descripción ordenada de las capas para una configuración"""
    t_salida = cfg.window_samples - cfg.kernel_size + 1
    specs = []
    for nombre, sensor in CABEZAS:
        specs.append({
            'name': nombre, 'kind': 'conv1d', 'input': sensor,
            'in_channels': 3, 'out_channels': cfg.conv_filters,
            'kernel_size': cfg.kernel_size, 'activation': cfg.conv_activation,
            'input_length': cfg.window_samples, 'output_length': t_salida,
        })
    unidades = len(CABEZAS) * cfg.conv_filters * t_salida
    specs.append({'name': 'dropout', 'kind': 'dropout', 'p': cfg.dropout, 'units': unidades})

    entrada = unidades
    for i, salida in enumerate(cfg.hidden_sizes, start=1):
        specs.append({
            'name': f'fc{i}', 'kind': 'dense', 'in_features': entrada,
            'out_features': salida, 'activation': cfg.activation,
        })
        entrada = salida
    specs.append({
        'name': 'out', 'kind': 'dense', 'in_features': entrada + 2,
        'out_features': 2, 'activation': 'linear', 'concat_partial': True,
    })
    return specs


def expected_shapes(specs: List[dict]) -> Dict[str, tuple]:
    formas = {}
    for spec in specs:
        if spec['kind'] == 'conv1d':
            formas[f"{spec['name']}.weight"] = (spec['out_channels'], spec['in_channels'], spec['kernel_size'])
            formas[f"{spec['name']}.bias"] = (spec['out_channels'],)
        elif spec['kind'] == 'dense':
            formas[f"{spec['name']}.weight"] = (spec['out_features'], spec['in_features'])
            formas[f"{spec['name']}.bias"] = (spec['out_features'],)
    return formas


def _capas_densas(specs):
    return [s for s in specs if s['kind'] == 'dense']


def _spec(specs, nombre):
    for spec in specs:
        if spec['name'] == nombre:
            return spec
    raise CheckpointError(f'La topología no tiene la capa {nombre}')


def init_checkpoint(cfg: NetworkConfig, norm_stats: Optional[NormStats] = None) -> ModelCheckpoint:
    """Inicialización uniforme ±√(1/fan_in) con la semilla de la red"""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    specs = build_layer_specs(cfg)
    parametros = {}
    for nombre, forma in expected_shapes(specs).items():
        capa = _spec(specs, nombre.split('.')[0])
        fan_in = capa['in_channels'] * capa['kernel_size'] if capa['kind'] == 'conv1d' else capa['in_features']
        limite = math.sqrt(1.0 / fan_in)
        parametros[nombre] = rng.uniform(-limite, limite, size=forma)

    checkpoint = ModelCheckpoint(
        layer_specs=specs, parameters=parametros, norm_stats=norm_stats,
        meta={'seed': cfg.seed, 'epochs_trained': 0},
    )
    checkpoint.meta['parameter_count'] = checkpoint.parameter_count
    return checkpoint


# ========== Capas ==========

def conv1d_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """
    Correlación cruzada válida (sin relleno) más sesgo

    Args:
        x: (C_in, T) o (B, C_in, T)
        kernels: (C_out, C_in, K)
        bias: (C_out,)

    Returns:
        (C_out, T-K+1) o (B, C_out, T-K+1)
    """
    x = np.asarray(x, dtype=float)
    sin_lote = x.ndim == 2
    if sin_lote:
        x = x[None]
    if x.ndim != 3 or kernels.ndim != 3 or x.shape[1] != kernels.shape[1]:
        raise ContractViolation(f'Formas incompatibles: entrada {x.shape}, kernels {kernels.shape}')
    if bias.shape != (kernels.shape[0],):
        raise ContractViolation(f'Sesgo {bias.shape} para {kernels.shape[0]} filtros')
    if x.shape[2] < kernels.shape[2]:
        raise ContractViolation(f'Ventana de {x.shape[2]} muestras menor que el kernel {kernels.shape[2]}')

    ventanas = sliding_window_view(x, kernels.shape[2], axis=2)
    y = np.einsum('bctk,ock->bot', ventanas, kernels) + bias[None, :, None]
    return y[0] if sin_lote else y


def conv1d_backward(x: np.ndarray, kernels: np.ndarray, dout: np.ndarray):
    """Gradientes de conv1d_forward respecto a entrada, kernels y sesgo (entradas con lote)"""
    k = kernels.shape[2]
    ventanas = sliding_window_view(x, k, axis=2)
    dkernels = np.einsum('bot,bctk->ock', dout, ventanas)
    dbias = dout.sum(axis=(0, 2))
    dx = np.zeros_like(x)
    t_salida = dout.shape[2]
    for j in range(k):
        dx[:, :, j:j + t_salida] += np.einsum('bot,oc->bct', dout, kernels[:, :, j])
    return dx, dkernels, dbias


def _activar(z, nombre):
    if nombre == 'relu':
        return np.maximum(z, 0.0)
    if nombre == 'tanh':
        return np.tanh(z)
    return z


def _derivada(z, a, nombre):
    if nombre == 'relu':
        return (z > 0).astype(z.dtype)
    if nombre == 'tanh':
        return 1.0 - a ** 2
    return np.ones_like(z)


def dropout_mask(rng: np.random.Generator, shape, p: float) -> np.ndarray:
    """Máscara de dropout invertido: 0 o 1/(1-p)"""
    if p <= 0:
        return np.ones(shape)
    return (rng.random(shape) >= p) / (1.0 - p)


# ========== Pasadas ==========

@dataclass
class ForwardCache:
    """Activaciones guardadas para el paso hacia atrás"""

    conv_inputs: Dict[str, np.ndarray]
    conv_pre: Dict[str, np.ndarray]
    dropout_mask: Optional[np.ndarray]
    dense_inputs: Dict[str, np.ndarray]
    dense_pre: Dict[str, np.ndarray]
    dense_post: Dict[str, np.ndarray]
    output: np.ndarray


def forward_normalized(
        parameters: Dict[str, np.ndarray],
        specs: List[dict],
        accel: np.ndarray,
        gyro: np.ndarray,
        partial: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
        mask: Optional[np.ndarray] = None
) -> ForwardCache:
    """
    Paso hacia delante en el espacio normalizado

    Args:
        accel, gyro: (B, T, 3) ya normalizados
        partial: (B, 2) haces medidos normalizados
        training: Activa el dropout
        rng: Generador para la máscara de dropout (si no se da `mask`)
        mask: Máscara de dropout precalculada (B, unidades)
    """
    entradas = {'accel': accel, 'gyro': gyro}
    conv_inputs, conv_pre, planos = {}, {}, []
    for nombre, sensor in CABEZAS:
        spec = _spec(specs, nombre)
        x = np.swapaxes(entradas[sensor], 1, 2)
        z = conv1d_forward(x, parameters[f'{nombre}.weight'], parameters[f'{nombre}.bias'])
        conv_inputs[nombre] = x
        conv_pre[nombre] = z
        planos.append(_activar(z, spec['activation']).reshape(len(x), -1))
    h = np.concatenate(planos, axis=1)

    p = _spec(specs, 'dropout')['p']
    if training and p > 0:
        if mask is None:
            if rng is None:
                raise ContractViolation('El modo entrenamiento necesita un generador para el dropout')
            mask = dropout_mask(rng, h.shape, p)
        h = h * mask
    else:
        mask = None

    dense_inputs, dense_pre, dense_post = {}, {}, {}
    for spec in _capas_densas(specs):
        nombre = spec['name']
        if spec.get('concat_partial'):
            h = np.concatenate([h, partial], axis=1)
        dense_inputs[nombre] = h
        z = h @ parameters[f'{nombre}.weight'].T + parameters[f'{nombre}.bias']
        h = _activar(z, spec['activation'])
        dense_pre[nombre] = z
        dense_post[nombre] = h

    return ForwardCache(
        conv_inputs=conv_inputs, conv_pre=conv_pre, dropout_mask=mask,
        dense_inputs=dense_inputs, dense_pre=dense_pre, dense_post=dense_post, output=h,
    )


def backward(
        parameters: Dict[str, np.ndarray],
        specs: List[dict],
        cache: ForwardCache,
        dout: np.ndarray
) -> Dict[str, np.ndarray]:
    """Gradiente de cada parámetro dado dL/d(salida normalizada)"""
    grads = {}
    delta = dout
    for spec in reversed(_capas_densas(specs)):
        nombre = spec['name']
        delta = delta * _derivada(cache.dense_pre[nombre], cache.dense_post[nombre], spec['activation'])
        grads[f'{nombre}.weight'] = delta.T @ cache.dense_inputs[nombre]
        grads[f'{nombre}.bias'] = delta.sum(axis=0)
        delta = delta @ parameters[f'{nombre}.weight']
        if spec.get('concat_partial'):
            delta = delta[:, :-2]

    if cache.dropout_mask is not None:
        delta = delta * cache.dropout_mask

    inicio = 0
    for nombre, _ in CABEZAS:
        spec = _spec(specs, nombre)
        z = cache.conv_pre[nombre]
        fin = inicio + z[0].size
        dz = delta[:, inicio:fin].reshape(z.shape)
        dz = dz * _derivada(z, _activar(z, spec['activation']), spec['activation'])
        _, dk, db = conv1d_backward(cache.conv_inputs[nombre], parameters[f'{nombre}.weight'], dz)
        grads[f'{nombre}.weight'] = dk
        grads[f'{nombre}.bias'] = db
        inicio = fin
    return grads


def _stats(checkpoint: ModelCheckpoint) -> NormStats:
    if checkpoint.norm_stats is None:
        raise ContractViolation('El checkpoint no tiene estadísticas de normalización')
    return checkpoint.norm_stats


def normalize_inputs(checkpoint: ModelCheckpoint, accel, gyro, partial):
    s = _stats(checkpoint)
    return (
        (np.asarray(accel, dtype=float) - s.accel_mean) / s.accel_std,
        (np.asarray(gyro, dtype=float) - s.gyro_mean) / s.gyro_std,
        (np.asarray(partial, dtype=float) - s.partial_mean) / s.partial_std,
    )


def forward_batch(
        checkpoint: ModelCheckpoint,
        accel: np.ndarray,
        gyro: np.ndarray,
        partial: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    """Haces regresados en m/s para un lote (B, T, 3) + (B, 2) -> (B, 2)"""
    accel_n, gyro_n, partial_n = normalize_inputs(checkpoint, accel, gyro, partial)
    cache = forward_normalized(
        checkpoint.parameters, checkpoint.layer_specs, accel_n, gyro_n, partial_n,
        training=training, rng=rng,
    )
    s = checkpoint.norm_stats
    return cache.output * s.target_std + s.target_mean


def forward(window, partial_beams, checkpoint: ModelCheckpoint, training: bool = False, rng=None) -> np.ndarray:
    """
    Regresa los dos haces ausentes de una época

    Args:
        window: ImuWindow con la ventana de la IMU
        partial_beams: Los dos haces medidos, en m/s
        checkpoint: ModelCheckpoint con estadísticas de normalización
        training: Activa el dropout (requiere rng)

    Returns:
        Vector de 2 haces en m/s
    """
    partial = np.asarray(partial_beams, dtype=float).reshape(1, 2)
    return forward_batch(
        checkpoint, window.accel_mps2[None], window.gyro_radps[None], partial,
        training=training, rng=rng,
    )[0]


def loss_and_gradients(
        checkpoint: ModelCheckpoint,
        accel_n: np.ndarray,
        gyro_n: np.ndarray,
        partial_n: np.ndarray,
        target_n: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
        mask: Optional[np.ndarray] = None,
        loss_scale: float = 1.0
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Pérdida MSE (media sobre lote y haces) y sus gradientes

    Todas las entradas están ya normalizadas; `loss_scale` multiplica la
    pérdida y, por linealidad, cada gradiente.
    """
    cache = forward_normalized(
        checkpoint.parameters, checkpoint.layer_specs, accel_n, gyro_n, partial_n,
        training=training, rng=rng, mask=mask,
    )
    error = cache.output - target_n
    loss = loss_scale * float(np.mean(error ** 2))
    dout = loss_scale * 2.0 * error / error.size
    return loss, backward(checkpoint.parameters, checkpoint.layer_specs, cache, dout)


# ========== Serialización ==========

def _codificar(array: np.ndarray, dtype: str) -> dict:
    datos = np.ascontiguousarray(array, dtype=np.dtype(dtype))
    return {
        'shape': list(array.shape),
        'dtype': dtype,
        'data': base64.b64encode(datos.tobytes()).decode('ascii'),
    }


def _decodificar(entrada: dict, nombre: str) -> np.ndarray:
    try:
        dtype = np.dtype(entrada['dtype'])
        datos = np.frombuffer(base64.b64decode(entrada['data']), dtype=dtype)
        return datos.reshape(entrada['shape']).astype(float)
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f'Parámetro {nombre} ilegible: {e}')


def checkpoint_to_dict(checkpoint: ModelCheckpoint, dtype: str = '<f4') -> dict:
    if dtype not in ('<f4', '<f8'):
        raise ContractViolation(f'Precisión de checkpoint no soportada: {dtype}')
    parametros = {}
    for nombre, valor in sorted(checkpoint.parameters.items()):
        capa, tipo = nombre.split('.')
        parametros.setdefault(capa, {})[tipo] = _codificar(valor, dtype)
    return {
        'format': FORMATO,
        'layer_specs': checkpoint.layer_specs,
        'norm_stats': checkpoint.norm_stats.to_dict() if checkpoint.norm_stats else None,
        'meta': checkpoint.meta,
        'parameters': parametros,
    }


def checkpoint_bytes(checkpoint: ModelCheckpoint, dtype: str = '<f4') -> bytes:
    return json.dumps(checkpoint_to_dict(checkpoint, dtype), sort_keys=True, indent=1).encode('utf-8')


def checkpoint_hash(checkpoint: ModelCheckpoint, dtype: str = '<f4') -> str:
    return hashlib.sha256(checkpoint_bytes(checkpoint, dtype)).hexdigest()


def save_checkpoint(checkpoint: ModelCheckpoint, path, dtype: str = '<f4'):
    """Escribe el checkpoint como un único documento JSON"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(checkpoint, dtype))
    logger.info(f'Checkpoint guardado en {path} ({checkpoint.parameter_count} parámetros)')
    return path


def load_checkpoint(path) -> ModelCheckpoint:
    """
    Lee un checkpoint escrito por save_checkpoint

    Raises:
        CheckpointError: Archivo ausente, JSON inválido, formato desconocido o formas incoherentes
    """
    path = Path(path)
    try:
        documento = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError:
        raise CheckpointError(f'{path}: checkpoint no encontrado')
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CheckpointError(f'{path}: JSON inválido ({e})')

    if not isinstance(documento, dict) or documento.get('format') != FORMATO:
        raise CheckpointError(f'{path}: formato desconocido, se esperaba {FORMATO}')

    parametros = {}
    for capa, tensores in documento.get('parameters', {}).items():
        for tipo, entrada in tensores.items():
            parametros[f'{capa}.{tipo}'] = _decodificar(entrada, f'{capa}.{tipo}')

    stats = documento.get('norm_stats')
    return ModelCheckpoint(
        layer_specs=documento.get('layer_specs', []),
        parameters=parametros,
        norm_stats=NormStats.from_dict(stats) if stats is not None else None,
        meta=documento.get('meta', {}),
    )
