"""
Configuración de una ejecución: valores por defecto de settings, JSON y flags
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional
import copy
import hashlib
import json
import logging

from django.conf import settings
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from .dataset import MotionProfile
from .entrenamiento import TrainConfig
from .geometria import BeamGeometry, BeamMask
from .modelo_error import DvlErrorParams
from .red import NetworkConfig
from .validators import validar_configuracion

logger = logging.getLogger(__name__)

# Claves que no cambian los resultados y quedan fuera del hash
CLAVES_EJECUCION = ('output_dir', 'threads')


def _mezclar(base: dict, encima: dict) -> dict:
    resultado = copy.deepcopy(base)
    for clave, valor in encima.items():
        if isinstance(valor, dict) and isinstance(resultado.get(clave), dict):
            resultado[clave] = _mezclar(resultado[clave], valor)
        else:
            resultado[clave] = copy.deepcopy(valor)
    return resultado


def leer_json(path) -> dict:
    """
    Lee el archivo de configuración

    Raises:
        ValidationError: Archivo ausente o JSON que no es un objeto
    """
    path = Path(path)
    try:
        datos = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError:
        raise ValidationError(_('%(path)s: archivo de configuración no encontrado'), params={'path': path})
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ValidationError(
            _('%(path)s: JSON inválido (%(error)s)'),
            params={'path': path, 'error': e}
        )
    if not isinstance(datos, dict):
        raise ValidationError(_('%(path)s: la configuración debe ser un objeto JSON'), params={'path': path})
    return datos


def aplicar_semilla(config: dict, seed: int) -> dict:
    """--seed n: simulación n, modelo de error n+1, red n+2, barajado n+3"""
    config['simulation']['seed'] = seed
    config['error_model']['seed'] = seed + 1
    config['network']['seed'] = seed + 2
    config['training']['shuffle_seed'] = seed + 3
    return config


def config_hash(config: dict) -> str:
    """SHA-256 del JSON canónico sin las claves de ejecución"""
    relevante = {k: v for k, v in config.items() if k not in CLAVES_EJECUCION}
    canonico = json.dumps(relevante, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonico.encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class RunConfig:
    """Configuración resuelta y validada de una ejecución"""

    values: dict

    @property
    def geometry(self) -> BeamGeometry:
        return BeamGeometry.from_config(self.values['geometry'])

    @property
    def error_params(self) -> DvlErrorParams:
        return DvlErrorParams.from_config(self.values['error_model'])

    @property
    def mask(self) -> BeamMask:
        return BeamMask.from_missing(self.values['missing_beams'])

    @property
    def simulation(self) -> dict:
        return self.values['simulation']

    @property
    def profile(self) -> MotionProfile:
        return MotionProfile.from_config(self.values['simulation'])

    @property
    def dataset(self) -> dict:
        return self.values['dataset']

    @property
    def window_samples(self) -> int:
        return self.values['dataset']['window_samples']

    @property
    def window_s(self) -> float:
        return self.window_samples / self.values['simulation']['imu_rate_hz']

    @property
    def network(self) -> NetworkConfig:
        return NetworkConfig.from_config(
            {**self.values['network'], 'window_samples': self.window_samples}
        )

    @property
    def training(self) -> TrainConfig:
        return TrainConfig.from_config({
            **self.values['training'],
            'threads': self.values['threads'],
            'deterministic': self.values['deterministic'],
        })

    @property
    def evaluation(self) -> dict:
        return self.values['evaluation']

    @property
    def output_dir(self) -> Path:
        return Path(self.values['output_dir'])

    @property
    def checkpoint_dtype(self) -> str:
        return self.values['checkpoint_dtype']

    @property
    def hash(self) -> str:
        return config_hash(self.values)

    @property
    def seeds(self) -> dict:
        return {
            'simulation': self.values['simulation']['seed'],
            'error_model': self.values['error_model']['seed'],
            'network': self.values['network']['seed'],
            'shuffle': self.values['training']['shuffle_seed'],
        }


def cargar_configuracion(
        config_path=None,
        seed: Optional[int] = None,
        out=None,
        threads: Optional[int] = None,
        deterministic: Optional[bool] = None,
        overrides: Optional[dict] = None
) -> RunConfig:
    """
    Resuelve la configuración de una ejecución

    Orden de precedencia: settings.LIBEAMSNET ← JSON (config_path) ← overrides ← flags.

    Args:
        config_path: Ruta del JSON de configuración (opcional)
        seed: Semilla base (--seed)
        out: Directorio de salida (--out)
        threads: Hilos para el cálculo de gradientes (--threads)
        deterministic: Reducción en orden fijo (--deterministic)
        overrides: Dict mezclado después del JSON, usado por las tareas Celery

    Raises:
        ValidationError: Configuración inválida
    """
    config = copy.deepcopy(settings.LIBEAMSNET)
    if config_path is not None:
        archivo = leer_json(config_path)
        # pitch_deg y headings_rad también se aceptan en el nivel superior
        for clave in ('pitch_deg', 'headings_rad'):
            if clave in archivo:
                archivo.setdefault('geometry', {})[clave] = archivo.pop(clave)
        config = _mezclar(config, archivo)
    if overrides:
        config = _mezclar(config, overrides)

    if seed is not None:
        aplicar_semilla(config, int(seed))
    if out is not None:
        config['output_dir'] = str(out)
    if threads is not None:
        config['threads'] = int(threads)
    if deterministic:
        config['deterministic'] = True

    validar_configuracion(config)
    run_config = RunConfig(values=config)
    logger.debug(f'Configuración resuelta, hash {run_config.hash}')
    return run_config
