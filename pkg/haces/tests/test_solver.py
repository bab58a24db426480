import numpy as np
from django.test import SimpleTestCase

from haces.exceptions import ContractViolation, DegenerateGeometry, InsufficientBeams
from haces.geometria import BeamGeometry, BeamMask, build_h, reduce_h
from haces.modelo_error import DvlErrorParams, apply_mask, corrupt_beams, make_rng
from haces.solver import assemble_beams, solve_velocity, solve_with_regressed


def ecuaciones_normales(y, h):
    """(HᵀH)⁻¹Hᵀy con la inversa 3x3 por cofactores"""
    a = h.T @ h
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            menor = np.delete(np.delete(a, i, axis=0), j, axis=1)
            cof[i, j] = (-1) ** (i + j) * (menor[0, 0] * menor[1, 1] - menor[0, 1] * menor[1, 0])
    det = a[0] @ cof[0]
    return (cof.T / det) @ (h.T @ y)


class SolveVelocityTests(SimpleTestCase):

    def setUp(self):
        self.h = build_h(BeamGeometry())

    def test_ida_y_vuelta_sin_ruido(self):
        v = np.array([1.0, -0.5, 0.2])
        estimacion = solve_velocity(self.h @ v, self.h)
        np.testing.assert_allclose(estimacion.v_body_mps, v, atol=1e-12)
        self.assertEqual(estimacion.n_beams_used, 4)
        self.assertGreaterEqual(estimacion.condition_number, 1.0)

    def test_medidas_nulas(self):
        np.testing.assert_array_equal(solve_velocity(np.zeros(4), self.h).v_body_mps, np.zeros(3))

    def test_oraculo_ecuaciones_normales(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            h = build_h(BeamGeometry(pitch_deg=rng.uniform(10, 60), headings_rad=tuple(rng.uniform(0, 2 * np.pi, 4))))
            if np.linalg.cond(h) > 100:
                continue
            y = rng.normal(size=4)
            v = solve_velocity(y, h).v_body_mps
            oraculo = ecuaciones_normales(y, h)
            self.assertLess(np.linalg.norm(v - oraculo) / max(np.linalg.norm(oraculo), 1e-300), 1e-9)

    def test_ida_y_vuelta_4_y_3_haces(self):
        rng = np.random.default_rng(2)
        params = DvlErrorParams(scale=0.0, bias_mps=0.0, noise_std_mps=0.0)
        tres = BeamMask.from_missing([3])
        for _ in range(1000):
            v = rng.normal(size=3)
            y = corrupt_beams(v, self.h, params, make_rng(0))
            cuatro = solve_velocity(y, self.h).v_body_mps
            con_tres = solve_velocity(apply_mask(y, tres), reduce_h(self.h, tres))
            self.assertLess(np.linalg.norm(cuatro - v) / np.linalg.norm(v), 1e-10)
            self.assertLess(np.linalg.norm(con_tres.v_body_mps - v) / np.linalg.norm(v), 1e-10)
            self.assertEqual(con_tres.n_beams_used, 3)

    def test_componente_vertical_analitica(self):
        y = np.random.default_rng(4).normal(size=4)
        esperado = y.sum() / (4 * np.cos(np.radians(20.0)))
        self.assertAlmostEqual(solve_velocity(y, self.h).v_body_mps[2], esperado, delta=1e-10)

    def test_residuo_ortogonal_e_idempotencia(self):
        y = np.random.default_rng(5).normal(size=4)
        v = solve_velocity(y, self.h).v_body_mps
        np.testing.assert_allclose(self.h.T @ (y - self.h @ v), 0.0, atol=1e-9 * np.linalg.norm(y))
        np.testing.assert_allclose(solve_velocity(self.h @ v, self.h).v_body_mps, v, atol=1e-12)

    def test_menos_de_tres_haces(self):
        mask = BeamMask.from_missing([2, 4])
        with self.assertRaises(InsufficientBeams):
            solve_velocity(np.ones(2), reduce_h(self.h, mask))

    def test_geometria_degenerada(self):
        h = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [2.0, 0.0, 0.0]])
        with self.assertRaises(DegenerateGeometry):
            solve_velocity(np.ones(4), h)


class SolveWithRegressedTests(SimpleTestCase):

    def setUp(self):
        self.h = build_h(BeamGeometry())
        self.mask = BeamMask.from_missing([2, 4])

    def test_intercalado(self):
        np.testing.assert_array_equal(
            assemble_beams([1.0, 3.0], [2.0, 4.0], self.mask), [1.0, 2.0, 3.0, 4.0]
        )

    def test_regresados_verdaderos_igualan_la_solucion_completa(self):
        y = corrupt_beams([1.1, 0.2, -0.05], self.h, DvlErrorParams(), make_rng(3))
        estimacion = solve_with_regressed(y[[0, 2]], y[[1, 3]], self.mask, self.h)
        np.testing.assert_array_equal(estimacion.v_body_mps, solve_velocity(y, self.h).v_body_mps)

    def test_mascara_sin_dos_haces(self):
        with self.assertRaises(ContractViolation):
            solve_with_regressed([1.0, 2.0], [3.0, 4.0], BeamMask.from_missing([1]), self.h)
