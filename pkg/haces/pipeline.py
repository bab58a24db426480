"""
Flujos completos de simulación, entrenamiento, evaluación y predicción

Compartidos por los comandos de gestión y las tareas Celery. Cada flujo
escribe sus archivos en el directorio de salida de la configuración y
devuelve un resumen serializable a JSON.
"""
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple
import json
import logging

import numpy as np

from .configuracion import RunConfig
from .dataset import (
    DvlSeries,
    ImuSeries,
    ImuWindow,
    TruthSeries,
    TupleBatch,
    assemble_tuples,
    corrupt_loaded_dvl,
    generate_trajectory,
    load_csv,
    load_truth_csv,
    save_csv,
    simulate_dvl,
    split,
    stack_tuples,
)
from .entrenamiento import train
from .exceptions import ContractViolation, DatasetError, MaskMismatchError, WindowMismatchError
from .geometria import NUM_BEAMS, BeamMask, build_h, reduce_h
from .metricas import evaluate, speed_series
from .red import (
    ModelCheckpoint,
    checkpoint_hash,
    compute_norm_stats,
    forward,
    forward_batch,
    init_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .solver import assemble_beams, solve_velocity_series, solve_with_regressed
from .utils.exportacion import (
    EXCEL_AVAILABLE,
    escribir_curva_perdida,
    escribir_json,
    escribir_manifiesto,
    generar_excel_metricas,
    generar_tabla_metricas,
)

logger = logging.getLogger(__name__)

ARCHIVOS_SIMULACION = {'imu': 'imu.csv', 'dvl': 'dvl.csv', 'truth': 'truth.csv'}
LOTE_INFERENCIA = 2048

Regresor = Callable[[TupleBatch], np.ndarray]


# ========== Simulación ==========

def ejecutar_simulacion(config: RunConfig) -> dict:
    """
    Genera una trayectoria y escribe imu.csv, dvl.csv y truth.csv

    Una duración 0 produce los tres archivos sólo con cabecera.
    """
    sim = config.simulation
    output_dir = config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)

    if sim['duration_s'] > 0:
        trayectoria = generate_trajectory(sim['duration_s'], config.profile, sim['seed'])
        imu = trayectoria.to_imu()
        dvl, truth = simulate_dvl(trayectoria, config.geometry, config.error_params, sim['dvl_rate_hz'])
    else:
        imu = ImuSeries(np.empty(0), np.empty((0, 3)), np.empty((0, 3)))
        dvl = DvlSeries(np.empty(0), np.empty((0, NUM_BEAMS)))
        truth = TruthSeries(np.empty(0), np.empty((0, 3)))

    archivos = [
        save_csv(imu, output_dir / ARCHIVOS_SIMULACION['imu']),
        save_csv(dvl, output_dir / ARCHIVOS_SIMULACION['dvl']),
        save_csv(truth, output_dir / ARCHIVOS_SIMULACION['truth']),
    ]
    rapidez_media = float(np.linalg.norm(truth.v, axis=1).mean()) if len(truth) else 0.0
    conteos = {'imu_rows': len(imu), 'dvl_rows': len(dvl)}
    escribir_manifiesto('simulate', config, archivos, conteos, output_dir)

    logger.info(f'Simulación: {len(dvl)} épocas DVL, {len(imu)} muestras IMU, rapidez media {rapidez_media:.4f} m/s')
    return {
        **conteos,
        'mean_speed_mps': rapidez_media,
        'files': [str(a) for a in archivos],
        'config_hash': config.hash,
    }


# ========== Datos ==========

def _rutas(config: RunConfig, conjunto: str) -> Tuple[Path, Path, Optional[Path]]:
    dataset = config.dataset
    prefijo = 'eval_' if conjunto == 'eval' else ''
    imu = dataset.get(f'{prefijo}imu_path')
    if imu is not None:
        truth = dataset.get(f'{prefijo}truth_path')
        return Path(imu), Path(dataset[f'{prefijo}dvl_path']), Path(truth) if truth else None

    if conjunto == 'eval':
        raise ContractViolation('No hay conjunto de evaluación configurado')
    # Sin rutas se usan los archivos de `simulate` del directorio de salida
    base = config.output_dir
    truth = base / ARCHIVOS_SIMULACION['truth']
    return base / ARCHIVOS_SIMULACION['imu'], base / ARCHIVOS_SIMULACION['dvl'], truth if truth.exists() else None


def tiene_conjunto_evaluacion(config: RunConfig) -> bool:
    return config.dataset.get('eval_imu_path') is not None


def cargar_datos(config: RunConfig, conjunto: str = 'train') -> Tuple[ImuSeries, DvlSeries, Optional[TruthSeries]]:
    """
    Carga IMU, DVL y (si existe) verdad de un conjunto

    Con dataset.apply_error_model los haces cargados se toman como referencia
    limpia y se corrompen con el modelo de error; la verdad, si no se da,
    es su solución de mínimos cuadrados.
    """
    imu_path, dvl_path, truth_path = _rutas(config, conjunto)
    imu, dvl = load_csv(imu_path, dvl_path)
    truth = load_truth_csv(truth_path) if truth_path is not None else None

    if config.dataset['apply_error_model']:
        dvl, truth_ls = corrupt_loaded_dvl(dvl, config.geometry, config.error_params)
        if truth is None:
            truth = truth_ls
        logger.info(f'Modelo de error aplicado a {len(dvl)} épocas de {dvl_path}')
    return imu, dvl, truth


def construir_tuplas(config: RunConfig, conjunto: str = 'train'):
    imu, dvl, truth = cargar_datos(config, conjunto)
    return assemble_tuples(
        imu, dvl, config.mask,
        truth=truth,
        h=build_h(config.geometry),
        window_samples=config.window_samples,
        window_s=config.window_s,
    )


# ========== Entrenamiento ==========

def ejecutar_entrenamiento(config: RunConfig) -> dict:
    """
    Entrena la red y escribe checkpoint_final.json, checkpoint_best.json y loss_curve.csv
    """
    tuplas, huecos = construir_tuplas(config, 'train')
    entrenamiento, validacion = split(tuplas, config.dataset['train_frac'])
    if not entrenamiento:
        raise DatasetError(f'No hay tuplas de entrenamiento ({len(tuplas)} tuplas en total)')

    stats = compute_norm_stats(stack_tuples(entrenamiento))
    inicial = init_checkpoint(config.network, stats)
    inicial.meta.update({
        'config_hash': config.hash,
        'missing_beams': list(config.mask.missing_beams),
        'window_samples': config.window_samples,
        'seeds': config.seeds,
    })

    resultado = train(entrenamiento, config.training, inicial, validation=validacion or None)

    output_dir = config.output_dir
    dtype = config.checkpoint_dtype
    final_path = save_checkpoint(resultado.final, output_dir / 'checkpoint_final.json', dtype)
    best_path = save_checkpoint(resultado.best, output_dir / 'checkpoint_best.json', dtype)
    curva_path = escribir_curva_perdida(resultado.history, output_dir / 'loss_curve.csv')

    ultimo = resultado.history[-1]
    conteos = {
        'tuples': len(tuplas),
        'train_tuples': len(entrenamiento),
        'validation_tuples': len(validacion),
        'skipped_epochs': huecos.count,
        'epochs': len(resultado.history),
    }
    escribir_manifiesto('train', config, [final_path, best_path, curva_path], conteos, output_dir)

    return {
        **conteos,
        'final_train_loss': ultimo.train_loss,
        'final_val_loss': ultimo.val_loss,
        'best_epoch': resultado.best_epoch,
        'parameter_count': resultado.final.parameter_count,
        'checkpoint_hash': checkpoint_hash(resultado.final, dtype),
        'checkpoint_final': str(final_path),
        'checkpoint_best': str(best_path),
        'loss_curve': str(curva_path),
        'config_hash': config.hash,
    }


# ========== Evaluación ==========

def verificar_mascara(checkpoint: ModelCheckpoint, mask: BeamMask):
    entrenada = tuple(checkpoint.meta.get('missing_beams', ()))
    if entrenada != mask.missing_beams:
        raise MaskMismatchError(entrenada, mask.missing_beams)


def verificar_ventana(checkpoint: ModelCheckpoint, window_samples: int):
    esperada = next(s['input_length'] for s in checkpoint.layer_specs if s['kind'] == 'conv1d')
    if esperada != window_samples:
        raise WindowMismatchError(esperada, window_samples)


def verificar_checkpoint(checkpoint: ModelCheckpoint, config: RunConfig):
    """Haces ausentes y longitud de ventana deben coincidir con los del entrenamiento"""
    verificar_mascara(checkpoint, config.mask)
    verificar_ventana(checkpoint, config.window_samples)


def regresor_red(checkpoint: ModelCheckpoint) -> Regresor:
    """Regresión en modo inferencia, por trozos para acotar la memoria"""
    def regresar(batch: TupleBatch) -> np.ndarray:
        salidas = [
            forward_batch(
                checkpoint,
                batch.accel[i:i + LOTE_INFERENCIA],
                batch.gyro[i:i + LOTE_INFERENCIA],
                batch.partial[i:i + LOTE_INFERENCIA],
            )
            for i in range(0, len(batch), LOTE_INFERENCIA)
        ]
        return np.concatenate(salidas, axis=0)
    return regresar


def regresor_media(checkpoint: ModelCheckpoint) -> Regresor:
    """Línea base: la media de entrenamiento de los haces ausentes"""
    media = checkpoint.norm_stats.target_mean

    def regresar(batch: TupleBatch) -> np.ndarray:
        return np.tile(media, (len(batch), 1))
    return regresar


def regresor_oraculo(batch: TupleBatch) -> np.ndarray:
    """Devuelve los haces objetivo: equivale a tener los cuatro haces medidos"""
    return batch.target.copy()


def _metricas(batch: TupleBatch, regresados: np.ndarray, mask: BeamMask, h: np.ndarray) -> dict:
    v, _ = solve_velocity_series(assemble_beams(batch.partial, regresados, mask), h)
    return evaluate(speed_series(batch.v_true), speed_series(v)).to_dict()


def _metricas_tres_haces(batch: TupleBatch, mask: BeamMask, h: np.ndarray) -> Tuple[dict, float]:
    """Referencia con un único haz ausente: el primero de los regresados se da como medido"""
    disponibles = list(mask.available)
    disponibles[mask.missing_beams[0] - 1] = True
    mask3 = BeamMask(tuple(disponibles))
    y = assemble_beams(batch.partial, batch.target, mask)[:, mask3.as_array()]
    v, condicion = solve_velocity_series(y, reduce_h(h, mask3))
    return evaluate(speed_series(batch.v_true), speed_series(v)).to_dict(), condicion


def evaluar_conjunto(
        batch: TupleBatch,
        checkpoint: ModelCheckpoint,
        mask: BeamMask,
        h: np.ndarray,
        regresor: Optional[Regresor] = None
) -> dict:
    """
    Métricas de rapidez de un conjunto para el modelo y las referencias

    Returns:
        {columna: dict de MetricsReport} con columnas libeamsnet, baseline,
        four_beams y three_beams
    """
    regresor = regresor or regresor_red(checkpoint)
    tres, condicion = _metricas_tres_haces(batch, mask, h)
    logger.debug(f'Número de condición de la H de 3 haces: {condicion:.3f}')
    return {
        'libeamsnet': _metricas(batch, regresor(batch), mask, h),
        'baseline': _metricas(batch, regresor_media(checkpoint)(batch), mask, h),
        'four_beams': _metricas(batch, regresor_oraculo(batch), mask, h),
        'three_beams': tres,
    }


def _conjuntos(config: RunConfig, particion: str) -> Dict[str, list]:
    tuplas, _ = construir_tuplas(config, 'train')
    entrenamiento, validacion = split(tuplas, config.dataset['train_frac'])
    elegidas = {'train': entrenamiento, 'validation': validacion, 'all': tuplas}[particion]
    conjuntos = {particion: elegidas}
    if tiene_conjunto_evaluacion(config):
        conjuntos['test'], _ = construir_tuplas(config, 'eval')
    return conjuntos


def ejecutar_evaluacion(
        config: RunConfig,
        checkpoint_path=None,
        particion: str = 'validation',
        regresor: Optional[Regresor] = None
) -> dict:
    """
    Regresa los haces ausentes de cada tupla, resuelve la velocidad y calcula las métricas

    Args:
        config: RunConfig
        checkpoint_path: Checkpoint a evaluar; por defecto checkpoint_<evaluation.checkpoint>.json
        particion: 'validation', 'train' o 'all' del conjunto de entrenamiento
        regresor: Sustituye a la red (lo usan los tests con un oráculo)

    Raises:
        MaskMismatchError: El checkpoint se entrenó con otros haces ausentes
        WindowMismatchError: El checkpoint espera otra longitud de ventana
    """
    if particion not in ('validation', 'train', 'all'):
        raise ContractViolation(f'Partición desconocida: {particion}')

    output_dir = config.output_dir
    if checkpoint_path is None:
        checkpoint_path = output_dir / f"checkpoint_{config.evaluation['checkpoint']}.json"
    checkpoint = load_checkpoint(checkpoint_path)
    verificar_checkpoint(checkpoint, config)

    h = build_h(config.geometry)
    resultados = {}
    for nombre, tuplas in _conjuntos(config, particion).items():
        if len(tuplas) < 2:
            raise DatasetError(f'El conjunto {nombre} tiene {len(tuplas)} tuplas; se necesitan al menos 2')
        resultados[nombre] = evaluar_conjunto(stack_tuples(tuplas), checkpoint, config.mask, h, regresor)

    objetivo = config.evaluation['soft_rmse_target_mps']
    avisos = []
    for nombre, columnas in resultados.items():
        rmse = columnas['libeamsnet']['rmse_mps']
        if rmse > objetivo:
            aviso = f'RMSE de {nombre} = {rmse:.4f} m/s supera el objetivo de {objetivo:.2f} m/s'
            logger.warning(aviso)
            avisos.append(aviso)

    kind = checkpoint.meta.get('kind')
    informe = {
        'config_hash': config.hash,
        'checkpoint': {
            'path': Path(checkpoint_path).name,
            'kind': kind,
            'epoch': checkpoint.meta.get('epoch'),
            'config_hash': checkpoint.meta.get('config_hash'),
        },
        'missing_beams': list(config.mask.missing_beams),
        'sets': resultados,
        'warnings': avisos,
    }

    archivos = [
        escribir_json(informe, output_dir / 'metrics.json'),
    ]
    tabla = generar_tabla_metricas(resultados, kind)
    tabla_path = output_dir / 'metrics.txt'
    tabla_path.write_text(tabla, encoding='utf-8')
    archivos.append(tabla_path)
    if EXCEL_AVAILABLE:
        archivos.append(generar_excel_metricas(resultados, output_dir / 'metrics.xlsx', config.hash))
    else:
        logger.warning('openpyxl no está instalado; se omite metrics.xlsx')

    conteos = {nombre: columnas['libeamsnet']['n'] for nombre, columnas in resultados.items()}
    # El xlsx lleva marcas de tiempo internas; sólo los archivos de texto entran en el manifiesto
    escribir_manifiesto('evaluate', config, archivos[:2], conteos, output_dir)

    return {**informe, 'table': tabla, 'files': [str(a) for a in archivos]}


# ========== Predicción ==========

def leer_entrada_prediccion(path, window_samples: int) -> Tuple[ImuWindow, np.ndarray]:
    """
    Lee {"accel": Tx3, "gyro": Tx3, "partial_beams": [b, b]}

    Raises:
        DatasetError: Archivo ausente, JSON inválido o formas incorrectas
    """
    path = Path(path)
    try:
        datos = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError:
        raise DatasetError('Archivo de entrada no encontrado', path=path)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise DatasetError(f'JSON inválido: {e}', path=path)

    if not isinstance(datos, dict) or not {'accel', 'gyro', 'partial_beams'} <= set(datos):
        raise DatasetError('Se esperaban las claves accel, gyro y partial_beams', path=path)
    try:
        accel = np.asarray(datos['accel'], dtype=float)
        gyro = np.asarray(datos['gyro'], dtype=float)
        partial = np.asarray(datos['partial_beams'], dtype=float)
    except (TypeError, ValueError) as e:
        raise DatasetError(f'Valores no numéricos: {e}', path=path)

    forma = (window_samples, 3)
    if accel.shape != forma or gyro.shape != forma:
        raise DatasetError(
            f'accel y gyro deben ser {window_samples}x3, recibidos {accel.shape} y {gyro.shape}', path=path
        )
    if partial.shape != (2,):
        raise DatasetError(f'partial_beams debe tener 2 valores, recibido {partial.shape}', path=path)
    if not (np.all(np.isfinite(accel)) and np.all(np.isfinite(gyro)) and np.all(np.isfinite(partial))):
        raise DatasetError('La entrada contiene valores no finitos', path=path)
    return ImuWindow(accel_mps2=accel, gyro_radps=gyro, epoch_s=0.0), partial


def ejecutar_prediccion(config: RunConfig, entrada_path, checkpoint_path=None) -> dict:
    """
    Regresa los dos haces ausentes de una ventana y resuelve la velocidad completa
    """
    if checkpoint_path is None:
        checkpoint_path = config.output_dir / f"checkpoint_{config.evaluation['checkpoint']}.json"
    checkpoint = load_checkpoint(checkpoint_path)
    verificar_checkpoint(checkpoint, config)

    window, partial = leer_entrada_prediccion(entrada_path, config.window_samples)
    regresados = forward(window, partial, checkpoint)
    estimacion = solve_with_regressed(partial, regresados, config.mask, build_h(config.geometry))

    stats = checkpoint.norm_stats
    dentro = bool(np.all(np.abs(regresados - stats.target_mean) <= 10.0 * stats.target_std))
    if not dentro:
        logger.warning(f'Haces regresados {regresados.tolist()} fuera del rango de entrenamiento')

    resultado = {
        'missing_beams': list(config.mask.missing_beams),
        'regressed_beams_mps': regresados.tolist(),
        'beams_mps': assemble_beams(partial, regresados, config.mask).tolist(),
        'velocity_mps': estimacion.v_body_mps.tolist(),
        'speed_mps': estimacion.speed_mps,
        'condition_number': estimacion.condition_number,
        'within_training_range': dentro,
        'config_hash': config.hash,
    }
    salida = escribir_json(resultado, config.output_dir / 'prediction.json')
    escribir_manifiesto('predict', config, [salida], {'windows': 1}, config.output_dir)
    return resultado
