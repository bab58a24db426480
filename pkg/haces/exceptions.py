"""
Excepciones del dominio para la app haces
"""


class LiBeamsError(Exception):
    """Error base de la app"""


class GeometryError(LiBeamsError, ValueError):
    """Ángulos de la configuración Janus fuera de dominio"""


class InsufficientBeams(LiBeamsError):
    """Menos de tres haces disponibles: la velocidad no se puede estimar"""

    def __init__(self, n_beams):
        self.n_beams = n_beams
        super().__init__(
            f'Se necesitan al menos 3 haces para estimar la velocidad, hay {n_beams}'
        )


class DegenerateGeometry(LiBeamsError):
    """Matriz H sin rango 3"""

    def __init__(self, singular_values):
        self.singular_values = singular_values
        super().__init__(
            f'Geometría degenerada, valores singulares: {list(singular_values)}'
        )


class ContractViolation(LiBeamsError, ValueError):
    """Precondición de una operación no satisfecha"""


class DatasetError(LiBeamsError):
    """Error de lectura o validación de datos de sensores"""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefijo = ''
        if path is not None:
            prefijo = f'{path}'
            if line is not None:
                prefijo += f':{line}'
            prefijo += ': '
        super().__init__(f'{prefijo}{message}')


class CheckpointError(LiBeamsError):
    """Checkpoint ilegible o incoherente"""


class TrainingDivergedError(LiBeamsError):
    """La pérdida dejó de ser finita durante el entrenamiento"""

    def __init__(self, epoch, batch, parameter, norm):
        self.epoch = epoch
        self.batch = batch
        self.parameter = parameter
        self.norm = norm
        super().__init__(
            f'Pérdida no finita en época {epoch}, lote {batch} '
            f'(parámetro {parameter}, norma {norm:.4g})'
        )


class MetricsError(LiBeamsError, ValueError):
    """Series de evaluación inválidas"""


class MaskMismatchError(LiBeamsError):
    """El checkpoint se entrenó para otros haces ausentes"""

    def __init__(self, checkpoint_missing, config_missing):
        self.checkpoint_missing = checkpoint_missing
        self.config_missing = config_missing
        super().__init__(
            f'El checkpoint regresa los haces {list(checkpoint_missing)} '
            f'pero la configuración pide {list(config_missing)}'
        )


class WindowMismatchError(LiBeamsError):
    """El checkpoint espera ventanas IMU de otra longitud"""

    def __init__(self, checkpoint_samples, config_samples):
        self.checkpoint_samples = checkpoint_samples
        self.config_samples = config_samples
        super().__init__(
            f'El checkpoint espera ventanas de {checkpoint_samples} muestras '
            f'pero la configuración pide window_samples={config_samples}'
        )
