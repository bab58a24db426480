from haces.management.commands._base import ComandoHaces
from haces.pipeline import ejecutar_evaluacion


class Command(ComandoHaces):
    help = 'Evalúa un checkpoint: regresa los haces ausentes, resuelve la velocidad y calcula métricas'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--checkpoint',
            type=str,
            help='Checkpoint a evaluar (por defecto el de evaluation.checkpoint en el directorio de salida)',
        )
        parser.add_argument(
            '--split',
            choices=['validation', 'train', 'all'],
            default='validation',
            help='Parte del conjunto de entrenamiento a evaluar',
        )

    def ejecutar(self, config, options):
        self.cabecera(f'Evaluando ({options["split"]})')

        informe = ejecutar_evaluacion(config, options.get('checkpoint'), options['split'])

        self.stdout.write(informe['table'])
        for aviso in informe['warnings']:
            self.stdout.write(self.style.WARNING(f'⚠ {aviso}'))
        for archivo in informe['files']:
            self.stdout.write(self.style.SUCCESS(f'✓ {archivo}'))
        self.stdout.write('=' * 60)
