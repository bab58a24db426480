import math

import numpy as np
from django.test import SimpleTestCase

from haces.exceptions import ContractViolation, GeometryError
from haces.geometria import BeamGeometry, BeamMask, beam_direction, build_h, default_headings, reduce_h


class DefaultHeadingsTests(SimpleTestCase):

    def test_valores(self):
        np.testing.assert_allclose(
            default_headings(), (0.785398, 2.356194, 3.926991, 5.497787), atol=1e-6
        )

    def test_primer_rumbo_exacto(self):
        self.assertEqual(default_headings()[0], math.pi / 4)

    def test_separacion_de_un_cuarto_de_vuelta(self):
        np.testing.assert_allclose(np.diff(default_headings()), math.pi / 2, atol=1e-12)


class BeamDirectionTests(SimpleTestCase):

    def test_primer_haz_a_20_grados(self):
        np.testing.assert_allclose(
            beam_direction(20.0, math.pi / 4), (0.241845, 0.241845, 0.939693), atol=1e-6
        )

    def test_segundo_haz_a_20_grados(self):
        np.testing.assert_allclose(
            beam_direction(20.0, 3 * math.pi / 4), (-0.241845, 0.241845, 0.939693), atol=1e-6
        )

    def test_norma_unitaria(self):
        rng = np.random.default_rng(3)
        for pitch, heading in zip(rng.uniform(0.1, 89.9, 200), rng.uniform(-10, 10, 200)):
            self.assertAlmostEqual(np.linalg.norm(beam_direction(pitch, heading)), 1.0, delta=1e-12)

    def test_periodicidad_en_rumbo(self):
        np.testing.assert_allclose(
            beam_direction(25.0, 0.3), beam_direction(25.0, 0.3 + 2 * math.pi), atol=1e-12
        )

    def test_pitch_fuera_de_rango(self):
        for pitch in (0.0, 90.0, -5.0, 120.0, float('nan')):
            with self.assertRaises(GeometryError):
                beam_direction(pitch, 0.0)


class BuildHTests(SimpleTestCase):

    def test_filas_y_tercera_columna(self):
        h = build_h(BeamGeometry())
        self.assertEqual(h.shape, (4, 3))
        np.testing.assert_allclose(h[:, 2], 0.939693, atol=1e-6)
        for fila, heading in zip(h, default_headings()):
            np.testing.assert_array_equal(fila, beam_direction(20.0, heading))

    def test_rango_3(self):
        s = np.linalg.svd(build_h(BeamGeometry()), compute_uv=False)
        self.assertEqual(int(np.sum(s > 1e-10 * s[0])), 3)

    def test_hth_diagonal(self):
        for pitch in (5.0, 20.0, 30.0, 60.0):
            h = build_h(BeamGeometry(pitch_deg=pitch))
            theta = math.radians(pitch)
            esperada = np.diag([2 * math.sin(theta) ** 2, 2 * math.sin(theta) ** 2, 4 * math.cos(theta) ** 2])
            np.testing.assert_allclose(h.T @ h, esperada, atol=1e-12)

    def test_intercambiar_rumbos_permuta_filas(self):
        rumbos = list(default_headings())
        rumbos[0], rumbos[2] = rumbos[2], rumbos[0]
        h = build_h(BeamGeometry())
        h_permutada = build_h(BeamGeometry(headings_rad=tuple(rumbos)))
        np.testing.assert_array_equal(h_permutada, h[[2, 1, 0, 3]])

    def test_from_config(self):
        geometria = BeamGeometry.from_config({'pitch_deg': 30, 'headings_rad': [0, 1, 2, 3]})
        self.assertEqual(geometria.pitch_deg, 30.0)
        self.assertEqual(geometria.headings_rad, (0.0, 1.0, 2.0, 3.0))
        self.assertEqual(BeamGeometry.from_config({}).headings_rad, default_headings())

    def test_rumbos_incompletos(self):
        with self.assertRaises(GeometryError):
            BeamGeometry(headings_rad=(0.0, 1.0, 2.0))


class BeamMaskTests(SimpleTestCase):

    def test_from_missing(self):
        mask = BeamMask.from_missing([2, 4])
        self.assertEqual(mask.available, (True, False, True, False))
        self.assertEqual(mask.indices, (0, 2))
        self.assertEqual(mask.missing_beams, (2, 4))
        self.assertEqual(mask.popcount, 2)
        self.assertEqual(str(mask), '{1,3}')

    def test_complemento(self):
        self.assertEqual(BeamMask.from_missing([2, 4]).complement(), BeamMask.from_missing([1, 3]))

    def test_haz_fuera_de_rango(self):
        with self.assertRaises(ContractViolation):
            BeamMask.from_missing([0, 5])

    def test_longitud_incorrecta(self):
        with self.assertRaises(ContractViolation):
            BeamMask((True, False))


class ReduceHTests(SimpleTestCase):

    def setUp(self):
        self.h = build_h(BeamGeometry())

    def test_mascara_1_3(self):
        np.testing.assert_array_equal(reduce_h(self.h, BeamMask.from_missing([2, 4])), self.h[[0, 2]])

    def test_mascara_completa(self):
        np.testing.assert_array_equal(reduce_h(self.h, BeamMask()), self.h)

    def test_mascara_vacia(self):
        self.assertEqual(reduce_h(self.h, BeamMask.from_missing([1, 2, 3, 4])).shape, (0, 3))
