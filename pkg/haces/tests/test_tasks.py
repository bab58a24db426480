from pathlib import Path
from unittest import mock
import tempfile

from django.test import SimpleTestCase

from haces.configuracion import cargar_configuracion
from haces.pipeline import ejecutar_simulacion
from haces.tasks import entrenar_red_async, evaluar_red_async

from .factories import RED_PEQUENA, escribir_config


class TareasTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.config = escribir_config(
            self.dir, simulation={'duration_s': 40.0}, network=RED_PEQUENA, training={'epochs': 1},
        )
        ejecutar_simulacion(cargar_configuracion(self.config, out=str(self.dir)))

    def tearDown(self):
        self.tmp.cleanup()

    def test_entrenar_y_evaluar(self):
        resumen = entrenar_red_async.apply(kwargs={'config_path': self.config, 'out': str(self.dir)}).get()
        self.assertEqual(resumen['status'], 'success')
        self.assertEqual(resumen['epochs'], 1)
        self.assertTrue(Path(resumen['checkpoint_best']).exists())

        informe = evaluar_red_async.apply(kwargs={'config_path': self.config, 'out': str(self.dir)}).get()
        self.assertEqual(informe['status'], 'success')
        self.assertNotIn('table', informe)
        self.assertIn('validation', informe['sets'])

    def test_configuracion_inexistente(self):
        resumen = entrenar_red_async.apply(kwargs={'config_path': str(self.dir / 'no_existe.json')}).get()
        self.assertEqual(resumen['status'], 'error')
        self.assertIn('no_existe.json', resumen['error'])

    def test_checkpoint_inexistente(self):
        informe = evaluar_red_async.apply(kwargs={
            'config_path': self.config, 'out': str(self.dir), 'checkpoint_path': str(self.dir / 'nada.json'),
        }).get()
        self.assertEqual(informe['status'], 'error')

    def test_error_interno_se_reintenta(self):
        with mock.patch('haces.pipeline.ejecutar_entrenamiento', side_effect=RuntimeError('sin memoria')) as entrenar:
            resultado = entrenar_red_async.apply(kwargs={'config_path': self.config, 'out': str(self.dir)})
        self.assertNotEqual(resultado.state, 'SUCCESS')
        self.assertGreaterEqual(entrenar.call_count, 1)
