"""
Entrenamiento del regresor de haces con RMSprop y mini-lotes
"""
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from .dataset import TrainingTuple, stack_tuples
from .exceptions import ContractViolation, TrainingDivergedError
from .modelo_error import make_rng
from .red import (
    ModelCheckpoint,
    compute_norm_stats,
    dropout_mask,
    forward_normalized,
    loss_and_gradients,
    normalize_inputs,
)

logger = logging.getLogger(__name__)

PERDIDAS = ('mse',)


@dataclass(frozen=True)
class TrainConfig:
    """Receta de entrenamiento: 50 épocas, lotes de 32, lr 0.01, RMSprop"""

    epochs: int = 50
    batch_size: int = 32
    lr: float = 0.01
    rmsprop_decay: float = 0.99
    rmsprop_eps: float = 1e-8
    rmsprop_initial_cache: float = 1.0
    shuffle_seed: int = 0
    loss: str = 'mse'
    threads: int = 1
    deterministic: bool = True

    def __post_init__(self):
        # lr = 0 se admite como configuración degenerada (parámetros congelados)
        if self.lr < 0:
            raise ContractViolation(f'lr debe ser >= 0, recibido {self.lr}')
        if not 0.0 <= self.rmsprop_decay < 1.0:
            raise ContractViolation(f'rmsprop_decay debe estar en [0, 1), recibido {self.rmsprop_decay}')
        if not self.rmsprop_eps > 0:
            raise ContractViolation(f'rmsprop_eps debe ser > 0, recibido {self.rmsprop_eps}')
        if not self.rmsprop_initial_cache >= 0:
            raise ContractViolation(
                f'rmsprop_initial_cache debe ser >= 0, recibido {self.rmsprop_initial_cache}'
            )
        if self.epochs < 1 or self.batch_size < 1 or self.threads < 1:
            raise ContractViolation('epochs, batch_size y threads deben ser >= 1')
        if self.loss not in PERDIDAS:
            raise ContractViolation(f'Pérdida desconocida: {self.loss}')

    @classmethod
    def from_config(cls, config: dict) -> 'TrainConfig':
        campos = {k: v for k, v in config.items() if k in cls.__dataclass_fields__}
        return cls(**campos)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: Optional[float] = None


@dataclass
class TrainingResult:
    """Checkpoints final y de mejor validación con la curva de pérdida"""

    final: ModelCheckpoint
    best: ModelCheckpoint
    history: List[EpochRecord] = field(default_factory=list)

    @property
    def best_epoch(self) -> int:
        return int(self.best.meta.get('epoch', len(self.history)))


def rmsprop_step(
        params: Dict[str, np.ndarray],
        grads: Dict[str, np.ndarray],
        cache: Dict[str, np.ndarray],
        cfg: TrainConfig
) -> Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]]:
    """
    Un paso de RMSprop sin momento

    cache ← ρ·cache + (1-ρ)·g²
    p ← p - lr·g / (√cache + ε)

    Returns:
        (parámetros nuevos, caché nueva); las entradas no se modifican
    """
    nuevos, nueva_cache = {}, {}
    for nombre, p in params.items():
        g = grads[nombre]
        if g.shape != p.shape:
            raise ContractViolation(f'Gradiente de {nombre} con forma {g.shape}, parámetro {p.shape}')
        c = cfg.rmsprop_decay * cache.get(nombre, np.zeros_like(p)) + (1.0 - cfg.rmsprop_decay) * g * g
        nueva_cache[nombre] = c
        nuevos[nombre] = p - cfg.lr * g / (np.sqrt(c) + cfg.rmsprop_eps)
    return nuevos, nueva_cache


class Entrenador:
    """Bucle de entrenamiento sobre un conjunto de tuplas ya apiladas"""

    def __init__(self, checkpoint: ModelCheckpoint, cfg: TrainConfig):
        """
        Args:
            checkpoint: Checkpoint inicial con estadísticas de normalización
            cfg: TrainConfig
        """
        if checkpoint.norm_stats is None:
            raise ContractViolation('El checkpoint inicial necesita estadísticas de normalización')
        self.cfg = cfg
        self.checkpoint = checkpoint.copy()
        # Acumulador de g² inicializado a rmsprop_initial_cache
        self.cache = {
            k: np.full_like(v, cfg.rmsprop_initial_cache) for k, v in self.checkpoint.parameters.items()
        }
        self.rng = make_rng(cfg.shuffle_seed)
        self.p_dropout = next(s['p'] for s in checkpoint.layer_specs if s['kind'] == 'dropout')
        self.unidades = next(s['units'] for s in checkpoint.layer_specs if s['kind'] == 'dropout')
        self.executor = None

    def _normalizar(self, batch):
        accel, gyro, partial = normalize_inputs(self.checkpoint, batch.accel, batch.gyro, batch.partial)
        s = self.checkpoint.norm_stats
        return accel, gyro, partial, (batch.target - s.target_mean) / s.target_std

    def _gradientes(self, datos, indices, mask):
        """Pérdida y gradientes del lote, repartidos en trozos si hay varios hilos"""
        accel, gyro, partial, target = datos
        if self.executor is None:
            return loss_and_gradients(
                self.checkpoint, accel[indices], gyro[indices], partial[indices], target[indices],
                training=mask is not None, mask=mask,
            )

        trozos = [t for t in np.array_split(np.arange(len(indices)), self.cfg.threads) if len(t)]

        def calcular(trozo):
            sub = indices[trozo]
            # Cada trozo pondera por su tamaño para que la suma sea la media del lote
            return loss_and_gradients(
                self.checkpoint, accel[sub], gyro[sub], partial[sub], target[sub],
                training=mask is not None, mask=None if mask is None else mask[trozo],
                loss_scale=len(trozo) / len(indices),
            )

        futuros = [self.executor.submit(calcular, t) for t in trozos]
        orden = futuros if self.cfg.deterministic else as_completed(futuros)
        perdida, grads = 0.0, None
        for futuro in orden:
            l, g = futuro.result()
            perdida += l
            if grads is None:
                grads = {k: v.copy() for k, v in g.items()}
            else:
                for k in grads:
                    grads[k] += g[k]
        return perdida, grads

    def _diagnostico(self, grads):
        """Parámetro con el gradiente de mayor norma (o no finito) y la norma de ese parámetro"""
        normas = {k: float(np.linalg.norm(v)) for k, v in grads.items()}
        nombre = max(normas, key=lambda k: normas[k] if np.isfinite(normas[k]) else np.inf)
        return nombre, float(np.linalg.norm(self.checkpoint.parameters[nombre]))

    def perdida(self, datos) -> float:
        """MSE en modo inferencia sobre un conjunto normalizado"""
        accel, gyro, partial, target = datos
        cache = forward_normalized(
            self.checkpoint.parameters, self.checkpoint.layer_specs, accel, gyro, partial,
        )
        return float(np.mean((cache.output - target) ** 2))

    def epoca(self, numero: int, datos) -> float:
        n = len(datos[0])
        orden = self.rng.permutation(n)
        acumulada = 0.0
        for lote, inicio in enumerate(range(0, n, self.cfg.batch_size), start=1):
            indices = orden[inicio:inicio + self.cfg.batch_size]
            mask = None
            if self.p_dropout > 0:
                mask = dropout_mask(self.rng, (len(indices), self.unidades), self.p_dropout)

            loss, grads = self._gradientes(datos, indices, mask)
            if not np.isfinite(loss):
                parametro, norma = self._diagnostico(grads)
                logger.error(
                    f'Entrenamiento divergente en época {numero}, lote {lote}: '
                    f'{parametro} con norma {norma:.4g}'
                )
                raise TrainingDivergedError(numero, lote, parametro, norma)

            self.checkpoint.parameters, self.cache = rmsprop_step(
                self.checkpoint.parameters, grads, self.cache, self.cfg
            )
            acumulada += loss * len(indices)
        return acumulada / n

    def entrenar(self, batch, validation=None) -> TrainingResult:
        datos = self._normalizar(batch)
        datos_val = self._normalizar(validation) if validation is not None and len(validation) else None

        historial = []
        mejor, mejor_val = None, np.inf
        if self.cfg.threads > 1:
            self.executor = ThreadPoolExecutor(max_workers=self.cfg.threads)
        try:
            for numero in range(1, self.cfg.epochs + 1):
                train_loss = self.epoca(numero, datos)
                val_loss = self.perdida(datos_val) if datos_val is not None else None
                historial.append(EpochRecord(numero, train_loss, val_loss))

                texto_val = f', val {val_loss:.6f}' if val_loss is not None else ''
                logger.info(f'Época {numero}/{self.cfg.epochs}: train {train_loss:.6f}{texto_val}')

                if val_loss is not None and val_loss < mejor_val:
                    mejor_val = val_loss
                    mejor = self._instantanea(numero, 'best')
        finally:
            if self.executor is not None:
                self.executor.shutdown(wait=True)
                self.executor = None

        final = self._instantanea(self.cfg.epochs, 'final')
        if mejor is None:
            mejor = self._instantanea(self.cfg.epochs, 'best')
        return TrainingResult(final=final, best=mejor, history=historial)

    def _instantanea(self, epoca, tipo) -> ModelCheckpoint:
        copia = self.checkpoint.copy()
        copia.meta.update({
            'epochs_trained': self.cfg.epochs,
            'epoch': epoca,
            'kind': tipo,
        })
        return copia


def train(
        tuples: Sequence[TrainingTuple],
        cfg: TrainConfig,
        init_checkpoint: ModelCheckpoint,
        validation: Optional[Sequence[TrainingTuple]] = None
) -> TrainingResult:
    """
    Entrena la red sobre las tuplas

    Si el checkpoint inicial no trae estadísticas de normalización se calculan
    sobre `tuples`. Las semillas de barajado y de dropout salen de
    cfg.shuffle_seed, por lo que dos ejecuciones idénticas en modo determinista
    producen checkpoints idénticos.

    Raises:
        ContractViolation: Sin tuplas
        TrainingDivergedError: Pérdida no finita
    """
    if not tuples:
        raise ContractViolation('Se necesita al menos un lote de tuplas para entrenar')

    batch = stack_tuples(tuples)
    checkpoint = init_checkpoint
    if checkpoint.norm_stats is None:
        checkpoint = init_checkpoint.copy()
        checkpoint.norm_stats = compute_norm_stats(batch)

    logger.info(
        f'Entrenando con {len(batch)} tuplas, {cfg.epochs} épocas, lote {cfg.batch_size}, '
        f'lr {cfg.lr}, {cfg.threads} hilo(s)'
    )
    entrenador = Entrenador(checkpoint, cfg)
    val_batch = stack_tuples(validation) if validation else None
    return entrenador.entrenar(batch, val_batch)
