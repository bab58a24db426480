import json
import math

import numpy as np
from django.test import SimpleTestCase

from haces.exceptions import MetricsError
from haces.metricas import evaluate, speed_series
from haces.solver import VelocityEstimate


class EvaluateTests(SimpleTestCase):

    def test_prediccion_perfecta(self):
        informe = evaluate([1.0, 1.5, 2.0, 1.2], [1.0, 1.5, 2.0, 1.2])
        self.assertEqual(informe.rmse_mps, 0.0)
        self.assertEqual(informe.mae_mps, 0.0)
        self.assertEqual(informe.r2, 1.0)
        self.assertEqual(informe.vaf, 100.0)
        self.assertEqual(informe.n, 4)

    def test_desplazamiento_constante(self):
        informe = evaluate([1.0, 2.0, 3.0], [2.0, 3.0, 4.0])
        self.assertAlmostEqual(informe.rmse_mps, 1.0)
        self.assertAlmostEqual(informe.mae_mps, 1.0)
        self.assertAlmostEqual(informe.rmse_pct, 50.0)
        self.assertAlmostEqual(informe.r2, -0.5)
        self.assertAlmostEqual(informe.vaf, 100.0)
        self.assertAlmostEqual(informe.mean_speed_mps, 2.0)

    def test_error_aleatorio(self):
        rng = np.random.default_rng(0)
        verdad = 1.2 + 0.1 * rng.standard_normal(10000)
        prediccion = verdad + 0.05 * rng.standard_normal(10000)
        informe = evaluate(verdad, prediccion)
        self.assertAlmostEqual(informe.rmse_mps, 0.05, delta=0.002)
        self.assertAlmostEqual(informe.mae_mps, 0.05 * math.sqrt(2 / math.pi), delta=0.002)
        self.assertAlmostEqual(informe.r2, 0.75, delta=0.02)
        self.assertLessEqual(informe.r2, informe.vaf / 100 + 1e-12)

    def test_verdad_sin_varianza(self):
        informe = evaluate([1.0, 1.0, 1.0], [1.1, 0.9, 1.0])
        self.assertIsNone(informe.r2)
        self.assertIsNone(informe.vaf)
        self.assertGreater(informe.rmse_mps, 0)

    def test_rapidez_media_nula(self):
        informe = evaluate([0.0, 0.0], [0.1, -0.1])
        self.assertIsNone(informe.rmse_pct)
        self.assertIsNone(informe.mae_pct)
        self.assertIn('"rmse_pct": null', json.dumps(informe.to_dict(), allow_nan=False))

    def test_longitudes_distintas(self):
        with self.assertRaises(MetricsError):
            evaluate([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_una_muestra(self):
        with self.assertRaises(MetricsError):
            evaluate([1.0], [1.0])

    def test_no_finitos(self):
        with self.assertRaises(MetricsError):
            evaluate([1.0, float('nan')], [1.0, 2.0])

    def test_to_dict(self):
        datos = evaluate([1.0, 2.0], [1.0, 2.0]).to_dict()
        self.assertEqual(set(datos), {'rmse_mps', 'mae_mps', 'rmse_pct', 'mae_pct', 'r2', 'vaf', 'n', 'mean_speed_mps'})


class SpeedSeriesTests(SimpleTestCase):

    def test_normas(self):
        np.testing.assert_allclose(speed_series([[3.0, 4.0, 0.0], [0.0, 0.0, 2.0]]), [5.0, 2.0])

    def test_estimaciones(self):
        estimaciones = [VelocityEstimate(np.array([1.0, 2.0, 2.0]), 4, 1.0)]
        np.testing.assert_allclose(speed_series(estimaciones), [3.0])

    def test_invariante_a_rotaciones(self):
        rng = np.random.default_rng(1)
        v = rng.normal(size=(50, 3))
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        np.testing.assert_allclose(speed_series(v @ q.T), speed_series(v), atol=1e-12)

    def test_vacia(self):
        self.assertEqual(speed_series([]).shape, (0,))
