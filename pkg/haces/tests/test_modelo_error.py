import numpy as np
from django.test import SimpleTestCase

from haces.exceptions import ContractViolation
from haces.geometria import BeamGeometry, BeamMask, build_h
from haces.modelo_error import DvlErrorParams, apply_mask, corrupt_beam_series, corrupt_beams, make_rng


class DvlErrorParamsTests(SimpleTestCase):

    def test_valores_por_defecto(self):
        params = DvlErrorParams()
        np.testing.assert_array_equal(params.scale, np.full(4, 0.007))
        np.testing.assert_array_equal(params.bias_mps, np.full(4, 0.0001))
        self.assertEqual(params.noise_std_mps, 0.042)

    def test_escalares_se_difunden(self):
        params = DvlErrorParams.from_config({'scale': 0.01, 'bias_mps': [0.1, 0.2, 0.3, 0.4]})
        np.testing.assert_array_equal(params.scale, np.full(4, 0.01))
        np.testing.assert_array_equal(params.bias_mps, [0.1, 0.2, 0.3, 0.4])

    def test_invalidos(self):
        with self.assertRaises(ContractViolation):
            DvlErrorParams(scale=-1.0)
        with self.assertRaises(ContractViolation):
            DvlErrorParams(noise_std_mps=-0.1)
        with self.assertRaises(ContractViolation):
            DvlErrorParams(bias_mps=[0.1, 0.2])


class CorruptBeamsTests(SimpleTestCase):

    def setUp(self):
        self.h = build_h(BeamGeometry())

    def test_velocidad_nula(self):
        params = DvlErrorParams(scale=0.007, bias_mps=0.0001, noise_std_mps=0.0)
        np.testing.assert_allclose(corrupt_beams(np.zeros(3), self.h, params, make_rng(0)), 0.0001, atol=1e-15)

    def test_proyeccion_sin_error(self):
        params = DvlErrorParams(scale=0.0, bias_mps=0.0, noise_std_mps=0.0)
        y = corrupt_beams([1.0, 0.0, 0.0], self.h, params, make_rng(0))
        np.testing.assert_allclose(y, (0.241845, -0.241845, -0.241845, 0.241845), atol=1e-6)

    def test_estadisticas_del_ruido(self):
        n = 1_000_000
        params = DvlErrorParams()
        v = np.array([1.2, -0.1, 0.05])
        y = corrupt_beam_series(np.tile(v, (n, 1)), self.h, params, make_rng(42))
        residuo = y - (self.h @ v) * (1 + params.scale) - params.bias_mps
        sigma = params.noise_std_mps
        for haz in range(4):
            self.assertLess(abs(residuo[:, haz].mean()), 4 * sigma / np.sqrt(n))
            self.assertLess(abs(residuo[:, haz].std() / sigma - 1), 0.01)
        self.assertLess(abs((y - (self.h @ v) * (1 + params.scale)).mean() - 0.0001), 4 * sigma / np.sqrt(n))

    def test_misma_semilla_misma_salida(self):
        params = DvlErrorParams(seed=7)
        v = np.random.default_rng(0).normal(size=(50, 3))
        a = corrupt_beam_series(v, self.h, params, params.rng())
        b = corrupt_beam_series(v, self.h, params, params.rng())
        np.testing.assert_array_equal(a, b)

    def test_linealidad_sin_ruido_ni_escala(self):
        params = DvlErrorParams(scale=0.0, bias_mps=0.3, noise_std_mps=0.0)
        rng = make_rng(0)
        v1, v2 = np.array([0.5, 0.25, -0.125]), np.array([1.0, -0.5, 0.25])
        y = lambda v: corrupt_beams(v, self.h, params, rng)
        np.testing.assert_allclose(y(v1 + v2) - y(v1) - y(v2) + y(np.zeros(3)), 0.0, atol=1e-13)

    def test_escala_escalar_equivale_a_escalar_la_velocidad(self):
        params = DvlErrorParams(scale=0.05, bias_mps=0.0, noise_std_mps=0.0)
        v = np.array([1.0, 0.3, -0.2])
        np.testing.assert_allclose(
            corrupt_beams(v, self.h, params, make_rng(0)), self.h @ (v * 1.05), atol=1e-14
        )


class ApplyMaskTests(SimpleTestCase):

    def test_seleccion(self):
        y = np.array([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(apply_mask(y, BeamMask.from_missing([2, 4])), [1.0, 3.0])
        np.testing.assert_array_equal(apply_mask(y, BeamMask()), y)
        self.assertEqual(apply_mask(y, BeamMask.from_missing([1, 2, 3, 4])).shape, (0,))
