"""
Validadores de la configuración de ejecución
"""
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _
import math


def _es_numero(valor):
    return isinstance(valor, (int, float)) and not isinstance(valor, bool) and math.isfinite(valor)


def _es_entero(valor):
    return isinstance(valor, int) and not isinstance(valor, bool)


def _nombre(seccion, clave):
    return f'{seccion}.{clave}' if seccion else clave


def _numero(seccion, clave, valor, minimo=None, maximo=None, incluir_minimo=True):
    if not _es_numero(valor):
        raise ValidationError(
            _('%(nombre)s debe ser un número finito, recibido %(valor)r'),
            params={'nombre': _nombre(seccion, clave), 'valor': valor}
        )
    fuera = (
        (minimo is not None and (valor < minimo or (not incluir_minimo and valor == minimo)))
        or (maximo is not None and valor > maximo)
    )
    if fuera:
        raise ValidationError(
            _('%(nombre)s fuera de rango: %(valor)s'),
            params={'nombre': _nombre(seccion, clave), 'valor': valor}
        )


def _entero(seccion, clave, valor, minimo=0):
    if not _es_entero(valor) or valor < minimo:
        raise ValidationError(
            _('%(nombre)s debe ser un entero >= %(minimo)s, recibido %(valor)r'),
            params={'nombre': _nombre(seccion, clave), 'minimo': minimo, 'valor': valor}
        )


def _escalar_o_por_haz(seccion, clave, valor):
    valores = valor if isinstance(valor, list) else [valor]
    if isinstance(valor, list) and len(valor) != 4:
        raise ValidationError(
            _('%(seccion)s.%(clave)s debe ser un escalar o una lista de 4 valores'),
            params={'seccion': seccion, 'clave': clave}
        )
    for v in valores:
        _numero(seccion, clave, v)
    return valores


def validar_geometria(geometria):
    """
    Valida la inclinación y los rumbos de los haces

    Args:
        geometria: Dict con pitch_deg y headings_rad opcional

    Raises:
        ValidationError: Si la inclinación no está en (0, 90) o los rumbos no son 4 números
    """
    pitch = geometria.get('pitch_deg')
    if not _es_numero(pitch) or not 0 < pitch < 90:
        raise ValidationError(
            _('geometry.pitch_deg debe estar en (0, 90) grados, recibido %(valor)r'),
            params={'valor': pitch}
        )
    rumbos = geometria.get('headings_rad')
    if rumbos is not None:
        if not isinstance(rumbos, list) or len(rumbos) != 4 or not all(_es_numero(r) for r in rumbos):
            raise ValidationError(_('geometry.headings_rad debe ser una lista de 4 números'))


def validar_modelo_error(modelo):
    """Escala > -1 por haz, sesgo finito, ruido >= 0 y semilla entera"""
    for escala in _escalar_o_por_haz('error_model', 'scale', modelo.get('scale')):
        if escala <= -1:
            raise ValidationError(
                _('error_model.scale debe ser > -1, recibido %(valor)s'),
                params={'valor': escala}
            )
    _escalar_o_por_haz('error_model', 'bias_mps', modelo.get('bias_mps'))
    _numero('error_model', 'noise_std_mps', modelo.get('noise_std_mps'), minimo=0)
    _entero('error_model', 'seed', modelo.get('seed'))


def validar_haces_ausentes(haces):
    """
    Los haces ausentes del escenario entrenado: exactamente dos números distintos en 1..4

    Args:
        haces: Lista de números de haz, p. ej. [2, 4]
    """
    if not isinstance(haces, list) or len(haces) != 2 or len(set(haces)) != 2:
        raise ValidationError(
            _('missing_beams debe tener exactamente dos haces distintos, recibido %(valor)r'),
            params={'valor': haces}
        )
    for haz in haces:
        if not _es_entero(haz) or not 1 <= haz <= 4:
            raise ValidationError(
                _('missing_beams contiene un haz fuera de 1..4: %(valor)r'),
                params={'valor': haz}
            )


def validar_simulacion(simulacion):
    _numero('simulation', 'duration_s', simulacion.get('duration_s'), minimo=0)
    _entero('simulation', 'seed', simulacion.get('seed'))
    _numero('simulation', 'imu_rate_hz', simulacion.get('imu_rate_hz'), minimo=0, incluir_minimo=False)
    _numero('simulation', 'dvl_rate_hz', simulacion.get('dvl_rate_hz'), minimo=0, incluir_minimo=False)
    _numero('simulation', 'mean_speed_mps', simulacion.get('mean_speed_mps'), minimo=0)
    _entero('simulation', 'n_components', simulacion.get('n_components'), minimo=1)

    minimo, maximo = simulacion.get('min_period_s'), simulacion.get('max_period_s')
    _numero('simulation', 'min_period_s', minimo, minimo=0, incluir_minimo=False)
    _numero('simulation', 'max_period_s', maximo, minimo=0, incluir_minimo=False)
    if minimo > maximo:
        raise ValidationError(_('simulation.min_period_s no puede superar a max_period_s'))

    for clave in ('surge_amplitude_mps', 'sway_amplitude_mps', 'heave_amplitude_mps',
                  'attitude_amplitude_deg', 'yaw_rate_amplitude_dps',
                  'accel_noise_std', 'gyro_noise_std'):
        _numero('simulation', clave, simulacion.get(clave), minimo=0)
    for clave in ('pitch_trim_deg_per_mps', 'roll_trim_deg_per_mps'):
        _numero('simulation', clave, simulacion.get(clave))

    razon = simulacion['imu_rate_hz'] / simulacion['dvl_rate_hz']
    if abs(razon - round(razon)) > 1e-9:
        raise ValidationError(
            _('imu_rate_hz debe ser múltiplo entero de dvl_rate_hz (razón %(razon)s)'),
            params={'razon': razon}
        )


def validar_dataset(dataset):
    _numero('dataset', 'train_frac', dataset.get('train_frac'), minimo=0, maximo=1, incluir_minimo=False)
    if dataset['train_frac'] >= 1:
        raise ValidationError(_('dataset.train_frac debe ser < 1'))
    _entero('dataset', 'window_samples', dataset.get('window_samples'), minimo=1)
    if not isinstance(dataset.get('apply_error_model'), bool):
        raise ValidationError(_('dataset.apply_error_model debe ser booleano'))

    for clave in ('imu_path', 'dvl_path', 'truth_path', 'eval_imu_path', 'eval_dvl_path', 'eval_truth_path'):
        valor = dataset.get(clave)
        if valor is not None and not isinstance(valor, str):
            raise ValidationError(
                _('dataset.%(clave)s debe ser una ruta'),
                params={'clave': clave}
            )
    if (dataset.get('imu_path') is None) != (dataset.get('dvl_path') is None):
        raise ValidationError(_('dataset.imu_path y dataset.dvl_path se indican juntos'))
    if (dataset.get('eval_imu_path') is None) != (dataset.get('eval_dvl_path') is None):
        raise ValidationError(_('dataset.eval_imu_path y dataset.eval_dvl_path se indican juntos'))


def validar_red(red, window_samples):
    _entero('network', 'conv_filters', red.get('conv_filters'), minimo=1)
    _entero('network', 'kernel_size', red.get('kernel_size'), minimo=1)
    if red['kernel_size'] > window_samples:
        raise ValidationError(
            _('network.kernel_size (%(k)s) no cabe en la ventana de %(t)s muestras'),
            params={'k': red['kernel_size'], 't': window_samples}
        )
    ocultas = red.get('hidden_sizes')
    if not isinstance(ocultas, list) or not ocultas or not all(_es_entero(h) and h > 0 for h in ocultas):
        raise ValidationError(_('network.hidden_sizes debe ser una lista no vacía de enteros positivos'))
    _numero('network', 'dropout', red.get('dropout'), minimo=0, maximo=1)
    if red['dropout'] >= 1:
        raise ValidationError(_('network.dropout debe ser < 1'))
    for clave in ('activation', 'conv_activation'):
        if red.get(clave) not in ('relu', 'tanh', 'linear'):
            raise ValidationError(
                _('network.%(clave)s desconocida: %(valor)r'),
                params={'clave': clave, 'valor': red.get(clave)}
            )
    _entero('network', 'seed', red.get('seed'))


def validar_entrenamiento(entrenamiento):
    _entero('training', 'epochs', entrenamiento.get('epochs'), minimo=1)
    _entero('training', 'batch_size', entrenamiento.get('batch_size'), minimo=1)
    _numero('training', 'lr', entrenamiento.get('lr'), minimo=0)
    _numero('training', 'rmsprop_decay', entrenamiento.get('rmsprop_decay'), minimo=0, maximo=1)
    if entrenamiento['rmsprop_decay'] >= 1:
        raise ValidationError(_('training.rmsprop_decay debe ser < 1'))
    _numero('training', 'rmsprop_eps', entrenamiento.get('rmsprop_eps'), minimo=0, incluir_minimo=False)
    _numero('training', 'rmsprop_initial_cache', entrenamiento.get('rmsprop_initial_cache'), minimo=0)
    _entero('training', 'shuffle_seed', entrenamiento.get('shuffle_seed'))
    if entrenamiento.get('loss') != 'mse':
        raise ValidationError(
            _('training.loss desconocida: %(valor)r'),
            params={'valor': entrenamiento.get('loss')}
        )


def validar_evaluacion(evaluacion):
    _numero('evaluation', 'soft_rmse_target_mps', evaluacion.get('soft_rmse_target_mps'), minimo=0)
    if evaluacion.get('checkpoint') not in ('best', 'final'):
        raise ValidationError(_('evaluation.checkpoint debe ser "best" o "final"'))


def validar_configuracion(config):
    """
    Valida una configuración ya mezclada con los valores por defecto

    Args:
        config: Dict completo de la ejecución

    Raises:
        ValidationError: En el primer valor inválido encontrado
    """
    for seccion in ('geometry', 'error_model', 'simulation', 'dataset', 'network', 'training', 'evaluation'):
        if not isinstance(config.get(seccion), dict):
            raise ValidationError(
                _('La sección %(seccion)s debe ser un objeto'),
                params={'seccion': seccion}
            )

    validar_geometria(config['geometry'])
    validar_modelo_error(config['error_model'])
    validar_haces_ausentes(config['missing_beams'])
    validar_simulacion(config['simulation'])
    validar_dataset(config['dataset'])
    validar_red(config['network'], config['dataset']['window_samples'])
    validar_entrenamiento(config['training'])
    validar_evaluacion(config['evaluation'])

    _entero('', 'threads', config.get('threads'), minimo=1)
    if not isinstance(config.get('deterministic'), bool):
        raise ValidationError(_('deterministic debe ser booleano'))
    if config.get('checkpoint_dtype') not in ('<f4', '<f8'):
        raise ValidationError(_('checkpoint_dtype debe ser "<f4" o "<f8"'))
