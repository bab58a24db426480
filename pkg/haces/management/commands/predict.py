from haces.management.commands._base import ComandoHaces
from haces.pipeline import ejecutar_prediccion


class Command(ComandoHaces):
    help = 'Regresa los dos haces ausentes de una ventana IMU y estima la velocidad'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            'entrada',
            type=str,
            help='JSON con accel (Tx3), gyro (Tx3) y partial_beams (2 valores)',
        )
        parser.add_argument(
            '--checkpoint',
            type=str,
            help='Checkpoint a usar (por defecto el de evaluation.checkpoint en el directorio de salida)',
        )

    def ejecutar(self, config, options):
        resultado = ejecutar_prediccion(config, options['entrada'], options.get('checkpoint'))

        ausentes = resultado['missing_beams']
        for haz, valor in zip(ausentes, resultado['regressed_beams_mps']):
            self.stdout.write(f'Haz {haz} regresado: {valor!r} m/s')
        vx, vy, vz = resultado['velocity_mps']
        self.stdout.write(f'Velocidad: {vx!r} {vy!r} {vz!r} m/s')
        self.stdout.write(f'Rapidez: {resultado["speed_mps"]:.6f} m/s')
        if not resultado['within_training_range']:
            self.stdout.write(self.style.WARNING('⚠ Haces regresados fuera del rango de entrenamiento'))
