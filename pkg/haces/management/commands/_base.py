"""
Base común de los comandos de la app haces
"""
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
import logging

from haces.configuracion import cargar_configuracion
from haces.exceptions import LiBeamsError

logger = logging.getLogger(__name__)


class ComandoHaces(BaseCommand):
    """
    Añade los flags comunes y traduce los errores a códigos de salida

    0 éxito, 1 error interno, 2 error de usuario, configuración o datos.
    """

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            type=str,
            help='Archivo JSON de configuración',
        )
        parser.add_argument(
            '--seed',
            type=int,
            help='Semilla base: simulación n, modelo de error n+1, red n+2, barajado n+3',
        )
        parser.add_argument(
            '--out',
            type=str,
            help='Directorio de salida',
        )
        parser.add_argument(
            '--threads',
            type=int,
            help='Hilos para el cálculo de gradientes',
        )
        parser.add_argument(
            '--deterministic',
            action='store_true',
            help='Reducción de gradientes en orden fijo',
        )

    def handle(self, *args, **options):
        try:
            config = cargar_configuracion(
                options.get('config'),
                seed=options.get('seed'),
                out=options.get('out'),
                threads=options.get('threads'),
                deterministic=options.get('deterministic'),
            )
            return self.ejecutar(config, options)
        except CommandError:
            raise
        except ValidationError as e:
            raise CommandError('; '.join(str(m) for m in e.messages), returncode=2)
        except (LiBeamsError, OSError) as e:
            raise CommandError(str(e), returncode=2)
        except Exception as e:
            logger.error(f'Error interno en {self.__module__}: {e}', exc_info=True)
            raise CommandError(f'Error interno: {e}', returncode=1)

    def ejecutar(self, config, options):
        raise NotImplementedError

    def cabecera(self, texto):
        self.stdout.write(self.style.SUCCESS(texto))
        self.stdout.write('=' * 60)
