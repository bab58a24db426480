from haces.management.commands._base import ComandoHaces
from haces.pipeline import ejecutar_simulacion


class Command(ComandoHaces):
    help = 'Genera una trayectoria sintética y escribe imu.csv, dvl.csv y truth.csv'

    def ejecutar(self, config, options):
        self.cabecera(f'Simulando {config.simulation["duration_s"]:g} s (semilla {config.simulation["seed"]})')

        resumen = ejecutar_simulacion(config)

        self.stdout.write(self.style.SUCCESS(f'✓ Épocas DVL: {resumen["dvl_rows"]}'))
        self.stdout.write(self.style.SUCCESS(f'✓ Muestras IMU: {resumen["imu_rows"]}'))
        self.stdout.write(f'  Rapidez media: {resumen["mean_speed_mps"]:.4f} m/s')
        for archivo in resumen['files']:
            self.stdout.write(f'  {archivo}')
        self.stdout.write(f'  Configuración: {resumen["config_hash"]}')
        self.stdout.write('=' * 60)
