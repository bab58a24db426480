"""
EXPORTACION.PY - Utilidades para exportación de resultados
"""

from pathlib import Path
import hashlib
import json
import logging

import pandas as pd

# Excel
try:
    from openpyxl import Workbook
    from openpyxl.styles import Font, Alignment, PatternFill, Border, Side
    from openpyxl.utils import get_column_letter

    EXCEL_AVAILABLE = True
except ImportError:
    EXCEL_AVAILABLE = False

logger = logging.getLogger(__name__)

# Filas de la tabla: (etiqueta, clave del informe, formato)
FILAS_TABLA = [
    ('RMSE [m/s]', 'rmse_mps', '{:.4f}'),
    ('RMSE [%]', 'rmse_pct', '{:.2f}'),
    ('MAE [m/s]', 'mae_mps', '{:.4f}'),
    ('MAE [%]', 'mae_pct', '{:.2f}'),
    ('R²', 'r2', '{:.4f}'),
    ('VAF [%]', 'vaf', '{:.2f}'),
]

ETIQUETAS_COLUMNAS = {
    'libeamsnet': 'LiBeamsNet',
    'baseline': 'Media haces',
    'four_beams': '4 haces',
    'three_beams': '3 haces',
}


def _formatear(valor, formato):
    if valor is None:
        return 'n/d'
    return formato.format(valor)


def escribir_json(datos, path) -> Path:
    """JSON con claves ordenadas, reproducible byte a byte"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(datos, sort_keys=True, indent=2) + '\n', encoding='utf-8')
    return path


def sha256_archivo(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def generar_tabla_metricas(conjuntos: dict, checkpoint_kind=None) -> str:
    """
    Tabla de texto alineada con una fila por métrica y una columna por estimador

    Args:
        conjuntos: {nombre del conjunto: {columna: dict de MetricsReport}}
        checkpoint_kind: 'best' o 'final', se indica en la cabecera

    Returns:
        str: Tabla lista para imprimir o guardar
    """
    lineas = []
    for nombre, columnas in conjuntos.items():
        claves = [c for c in ETIQUETAS_COLUMNAS if c in columnas]
        referencia = columnas[claves[0]]
        cabecera = f"Conjunto: {nombre} (n = {referencia['n']}, rapidez media = {referencia['mean_speed_mps']:.4f} m/s"
        if checkpoint_kind:
            cabecera += f', checkpoint {checkpoint_kind}'
        lineas.append(cabecera + ')')

        anchos = [max(12, len(ETIQUETAS_COLUMNAS[c]) + 2) for c in claves]
        lineas.append('Métrica'.ljust(12) + ''.join(
            ETIQUETAS_COLUMNAS[c].rjust(a) for c, a in zip(claves, anchos)
        ))
        lineas.append('-' * (12 + sum(anchos)))
        for etiqueta, clave, formato in FILAS_TABLA:
            lineas.append(etiqueta.ljust(12) + ''.join(
                _formatear(columnas[c][clave], formato).rjust(a) for c, a in zip(claves, anchos)
            ))
        lineas.append('')
    return '\n'.join(lineas)


def generar_excel_metricas(conjuntos: dict, path, config_hash=None) -> Path:
    """
    Genera un Excel con una hoja por conjunto evaluado

    Args:
        conjuntos: {nombre del conjunto: {columna: dict de MetricsReport}}
        path: Ruta del .xlsx
        config_hash: Hash de la configuración, se escribe en la cabecera

    Returns:
        Path del archivo escrito
    """
    if not EXCEL_AVAILABLE:
        raise ImportError("openpyxl no está instalado. Ejecuta: pip install openpyxl")

    wb = Workbook()
    wb.remove(wb.active)

    header_fill = PatternFill(start_color="667eea", end_color="667eea", fill_type="solid")
    header_font = Font(color="FFFFFF", bold=True, size=12)
    border = Border(
        left=Side(style='thin'),
        right=Side(style='thin'),
        top=Side(style='thin'),
        bottom=Side(style='thin')
    )

    for nombre, columnas in conjuntos.items():
        ws = wb.create_sheet(title=nombre[:31])
        claves = [c for c in ETIQUETAS_COLUMNAS if c in columnas]
        referencia = columnas[claves[0]]

        ws['A1'] = f"Conjunto: {nombre}"
        ws['A1'].font = Font(size=16, bold=True)
        ws['A2'] = f"n = {referencia['n']}, rapidez media = {referencia['mean_speed_mps']:.4f} m/s"
        if config_hash:
            ws['A3'] = f"Configuración: {config_hash}"

        fila = 5
        encabezados = ['Métrica'] + [ETIQUETAS_COLUMNAS[c] for c in claves]
        for col, texto in enumerate(encabezados, start=1):
            cell = ws.cell(row=fila, column=col, value=texto)
            cell.fill = header_fill
            cell.font = header_font
            cell.alignment = Alignment(horizontal='center', vertical='center')
            cell.border = border

        for etiqueta, clave, _ in FILAS_TABLA:
            fila += 1
            ws.cell(row=fila, column=1, value=etiqueta).border = border
            for col, c in enumerate(claves, start=2):
                cell = ws.cell(row=fila, column=col, value=columnas[c][clave])
                cell.number_format = '0.0000'
                cell.border = border

        for col in range(1, len(encabezados) + 1):
            ws.column_dimensions[get_column_letter(col)].width = 16

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wb.save(path)
    logger.info(f'Excel de métricas generado en {path}')
    return path


def escribir_curva_perdida(historial, path) -> Path:
    """CSV epoch,train_loss,val_loss; val_loss vacío si no hay validación"""
    df = pd.DataFrame(
        [(r.epoch, r.train_loss, r.val_loss) for r in historial],
        columns=['epoch', 'train_loss', 'val_loss'],
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format='%.17g', na_rep='', lineterminator='\n')
    return path


def escribir_manifiesto(comando: str, config, archivos, conteos: dict, output_dir) -> Path:
    """
    Manifiesto de una ejecución: hash de configuración, semillas, conteos y archivos

    No incluye fechas ni duraciones para que dos ejecuciones iguales lo
    reproduzcan byte a byte.
    """
    output_dir = Path(output_dir)
    manifiesto = {
        'command': comando,
        'config_hash': config.hash,
        'seeds': config.seeds,
        'missing_beams': list(config.mask.missing_beams),
        'counts': conteos,
        'files': {Path(a).name: sha256_archivo(a) for a in archivos},
    }
    return escribir_json(manifiesto, output_dir / f'{comando}_manifest.json')
