from haces.management.commands._base import ComandoHaces
from haces.pipeline import ejecutar_entrenamiento


class Command(ComandoHaces):
    help = 'Entrena la red de regresión de haces sobre los datos configurados'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--encolar',
            action='store_true',
            help='Envía el entrenamiento a Celery en lugar de ejecutarlo aquí',
        )

    def ejecutar(self, config, options):
        if options.get('encolar'):
            from haces.tasks import entrenar_red_async

            tarea = entrenar_red_async.delay(
                config_path=options.get('config'),
                seed=options.get('seed'),
                out=options.get('out'),
                threads=options.get('threads'),
                deterministic=bool(options.get('deterministic')),
            )
            self.stdout.write(self.style.SUCCESS(f'✓ Entrenamiento encolado: {tarea.id}'))
            return

        training = config.training
        self.cabecera(
            f'Entrenando {training.epochs} épocas, lote {training.batch_size}, lr {training.lr} '
            f'(haces ausentes {list(config.mask.missing_beams)})'
        )

        resumen = ejecutar_entrenamiento(config)

        self.stdout.write(self.style.SUCCESS(
            f'✓ Tuplas: {resumen["tuples"]} ({resumen["train_tuples"]} entrenamiento, '
            f'{resumen["validation_tuples"]} validación)'
        ))
        if resumen['skipped_epochs']:
            self.stdout.write(self.style.WARNING(f'⚠ Épocas DVL descartadas: {resumen["skipped_epochs"]}'))
        self.stdout.write(f'  Épocas: {resumen["epochs"]}')
        self.stdout.write(f'  Pérdida final de entrenamiento: {resumen["final_train_loss"]:.6f}')
        if resumen['final_val_loss'] is not None:
            self.stdout.write(f'  Pérdida final de validación: {resumen["final_val_loss"]:.6f}')
            self.stdout.write(f'  Mejor época de validación: {resumen["best_epoch"]}')
        self.stdout.write(f'  Parámetros: {resumen["parameter_count"]}')
        self.stdout.write(self.style.SUCCESS(f'✓ Checkpoint: {resumen["checkpoint_final"]}'))
        self.stdout.write(f'  Hash del checkpoint: {resumen["checkpoint_hash"]}')
        self.stdout.write('=' * 60)
