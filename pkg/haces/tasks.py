"""
Celery tasks for haces app
"""
from celery import shared_task
import logging

logger = logging.getLogger(__name__)


def _mensaje(exc):
    mensajes = getattr(exc, 'messages', None)
    return '; '.join(str(m) for m in mensajes) if mensajes else str(exc)


@shared_task(bind=True, max_retries=3)
def entrenar_red_async(self, config_path=None, seed=None, out=None, threads=None, deterministic=False,
                       overrides=None):
    """
    Tarea asíncrona para entrenar la red

    Args:
        config_path: Ruta del JSON de configuración
        seed, out, threads, deterministic: Igual que los flags del comando train
        overrides: Dict mezclado sobre la configuración

    Returns:
        Resumen del entrenamiento (serializable a JSON)
    """
    from django.core.exceptions import ValidationError
    from .configuracion import cargar_configuracion
    from .exceptions import LiBeamsError
    from .pipeline import ejecutar_entrenamiento

    try:
        config = cargar_configuracion(config_path, seed=seed, out=out, threads=threads,
                                      deterministic=deterministic, overrides=overrides)
        logger.info(f'Iniciando entrenamiento {config.hash[:12]}')
        resumen = ejecutar_entrenamiento(config)
        logger.info(f'Entrenamiento {config.hash[:12]} completado: {resumen["epochs"]} épocas')
        return {'status': 'success', **resumen}

    except (ValidationError, LiBeamsError, OSError) as exc:
        # Errores de configuración o de datos: sin reintento
        mensaje = _mensaje(exc)
        logger.error(f'Entrenamiento rechazado: {mensaje}', exc_info=True)
        return {'status': 'error', 'error': mensaje}

    except Exception as exc:
        logger.error(f'Error en entrenamiento: {str(exc)}', exc_info=True)

        # Reintentar hasta 3 veces
        raise self.retry(exc=exc, countdown=60)


@shared_task(bind=True, max_retries=3)
def evaluar_red_async(self, config_path=None, checkpoint_path=None, particion='validation', seed=None,
                      out=None, overrides=None):
    """
    Tarea asíncrona para evaluar un checkpoint

    Returns:
        Informe de métricas sin la tabla de texto
    """
    from django.core.exceptions import ValidationError
    from .configuracion import cargar_configuracion
    from .exceptions import LiBeamsError
    from .pipeline import ejecutar_evaluacion

    try:
        config = cargar_configuracion(config_path, seed=seed, out=out, overrides=overrides)
        logger.info(f'Iniciando evaluación {config.hash[:12]} ({particion})')
        informe = ejecutar_evaluacion(config, checkpoint_path, particion)
        informe.pop('table', None)
        return {'status': 'success', **informe}

    except (ValidationError, LiBeamsError, OSError) as exc:
        mensaje = _mensaje(exc)
        logger.error(f'Evaluación rechazada: {mensaje}', exc_info=True)
        return {'status': 'error', 'error': mensaje}

    except Exception as exc:
        logger.error(f'Error en evaluación: {str(exc)}', exc_info=True)
        raise self.retry(exc=exc, countdown=60)
