import threading

import numpy as np
from django.test import SimpleTestCase

from haces.dataset import split, stack_tuples
from haces.entrenamiento import Entrenador, TrainConfig, rmsprop_step, train
from haces.exceptions import ContractViolation, TrainingDivergedError
from haces.modelo_error import DvlErrorParams
from haces.red import NetworkConfig, checkpoint_hash, init_checkpoint

from .factories import RED_PEQUENA, checkpoint_con_stats, sin_ruido, tuplas_sinteticas


class RmspropTests(SimpleTestCase):

    def test_un_paso(self):
        cfg = TrainConfig(lr=0.1, rmsprop_decay=0.9)
        params = {'w': np.array([1.0, -2.0])}
        grads = {'w': np.array([0.5, 0.0])}
        cache = {'w': np.zeros(2)}
        nuevos, nueva_cache = rmsprop_step(params, grads, cache, cfg)
        np.testing.assert_allclose(nueva_cache['w'], [0.025, 0.0])
        self.assertAlmostEqual(nuevos['w'][0], 0.683772, delta=1e-6)
        self.assertEqual(nuevos['w'][1], -2.0)
        np.testing.assert_array_equal(params['w'], [1.0, -2.0])
        np.testing.assert_array_equal(cache['w'], [0.0, 0.0])

    def test_cache_acumulada(self):
        cfg = TrainConfig(lr=0.01, rmsprop_decay=0.99)
        _, cache = rmsprop_step({'w': np.ones(1)}, {'w': np.full(1, 2.0)}, {'w': np.full(1, 1.0)}, cfg)
        np.testing.assert_allclose(cache['w'], [0.99 + 0.01 * 4.0])

    def test_gradiente_constante(self):
        cfg = TrainConfig(lr=0.01, rmsprop_decay=0.9)
        params, cache = {'w': np.zeros(1)}, {}
        for _ in range(200):
            anterior = params['w'].copy()
            params, cache = rmsprop_step(params, {'w': np.full(1, 3.0)}, cache, cfg)
        np.testing.assert_allclose(cache['w'], [9.0], rtol=1e-8)
        np.testing.assert_allclose(anterior - params['w'], [0.01], rtol=1e-8)

    def test_formas_distintas(self):
        with self.assertRaises(ContractViolation):
            rmsprop_step({'w': np.ones(2)}, {'w': np.ones(3)}, {}, TrainConfig())

    def test_configuracion_invalida(self):
        with self.assertRaises(ContractViolation):
            TrainConfig(lr=-0.1)
        with self.assertRaises(ContractViolation):
            TrainConfig(rmsprop_decay=1.0)
        with self.assertRaises(ContractViolation):
            TrainConfig(batch_size=0)
        with self.assertRaises(ContractViolation):
            TrainConfig(loss='huber')


class TrainTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tuplas = tuplas_sinteticas(120.0)
        cls.entrenamiento, cls.validacion = split(cls.tuplas, 0.8)

    def checkpoint(self, **red):
        return checkpoint_con_stats(stack_tuples(self.entrenamiento), **{**RED_PEQUENA, **red})

    def test_lr_nulo_no_mueve_los_parametros(self):
        inicial = self.checkpoint(dropout=0.0)
        resultado = train(self.entrenamiento, TrainConfig(epochs=3, lr=0.0), inicial)
        perdidas = [r.train_loss for r in resultado.history]
        for perdida in perdidas[1:]:
            self.assertAlmostEqual(perdida, perdidas[0], delta=1e-12 * perdidas[0])
        for nombre, valor in inicial.parameters.items():
            np.testing.assert_array_equal(resultado.final.parameters[nombre], valor)

    def test_determinista(self):
        cfg = TrainConfig(epochs=2, shuffle_seed=7)
        a = train(self.entrenamiento, cfg, self.checkpoint(), self.validacion)
        b = train(self.entrenamiento, cfg, self.checkpoint(), self.validacion)
        self.assertEqual(checkpoint_hash(a.final), checkpoint_hash(b.final))
        self.assertEqual([r.train_loss for r in a.history], [r.train_loss for r in b.history])

    def test_determinista_con_dos_hilos(self):
        cfg = TrainConfig(epochs=2, threads=2)
        a = train(self.entrenamiento, cfg, self.checkpoint())
        b = train(self.entrenamiento, cfg, self.checkpoint())
        self.assertEqual(checkpoint_hash(a.final, '<f8'), checkpoint_hash(b.final, '<f8'))

    def test_semilla_de_barajado_distinta(self):
        a = train(self.entrenamiento, TrainConfig(epochs=1, shuffle_seed=1), self.checkpoint())
        b = train(self.entrenamiento, TrainConfig(epochs=1, shuffle_seed=2), self.checkpoint())
        self.assertNotEqual(checkpoint_hash(a.final), checkpoint_hash(b.final))

    def test_mejor_checkpoint_por_validacion(self):
        resultado = train(self.entrenamiento, TrainConfig(epochs=4), self.checkpoint(), self.validacion)
        perdidas_val = [r.val_loss for r in resultado.history]
        self.assertEqual(resultado.best_epoch, int(np.argmin(perdidas_val)) + 1)
        self.assertEqual(resultado.best.meta['kind'], 'best')
        self.assertEqual(resultado.final.meta['kind'], 'final')
        self.assertEqual(resultado.final.meta['epochs_trained'], 4)

    def test_sin_validacion_el_mejor_es_el_final(self):
        resultado = train(self.entrenamiento, TrainConfig(epochs=2), self.checkpoint())
        self.assertIsNone(resultado.history[-1].val_loss)
        self.assertEqual(resultado.best_epoch, 2)
        for nombre, valor in resultado.final.parameters.items():
            np.testing.assert_array_equal(resultado.best.parameters[nombre], valor)

    def test_calcula_estadisticas_si_faltan(self):
        inicial = init_checkpoint(NetworkConfig(**RED_PEQUENA))
        resultado = train(self.entrenamiento, TrainConfig(epochs=1), inicial)
        self.assertIsNotNone(resultado.final.norm_stats)
        self.assertIsNone(inicial.norm_stats)

    def test_sin_tuplas(self):
        with self.assertRaises(ContractViolation):
            train([], TrainConfig(), self.checkpoint())

    def test_acumulador_inicial(self):
        entrenador = Entrenador(self.checkpoint(), TrainConfig())
        for valor in entrenador.cache.values():
            self.assertTrue(np.all(valor == 1.0))
        entrenador = Entrenador(self.checkpoint(), TrainConfig(rmsprop_initial_cache=0.0))
        for valor in entrenador.cache.values():
            self.assertFalse(np.any(valor))
        with self.assertRaises(ContractViolation):
            TrainConfig(rmsprop_initial_cache=-1.0)

    def test_hilos_solo_durante_el_entrenamiento(self):
        antes = threading.active_count()
        entrenador = Entrenador(self.checkpoint(), TrainConfig(epochs=1, threads=2))
        self.assertIsNone(entrenador.executor)
        datos = entrenador._normalizar(stack_tuples(self.entrenamiento))
        entrenador.epoca(1, datos)
        self.assertEqual(threading.active_count(), antes)

        entrenador.entrenar(stack_tuples(self.entrenamiento))
        self.assertIsNone(entrenador.executor)
        self.assertEqual(threading.active_count(), antes)


class ConvergenciaTests(SimpleTestCase):

    def test_un_paso_pequeno_reduce_la_perdida(self):
        lote = stack_tuples(tuplas_sinteticas(64.0))
        entrenador = Entrenador(
            checkpoint_con_stats(lote, **{**RED_PEQUENA, 'dropout': 0.0}),
            TrainConfig(epochs=1, batch_size=len(lote), lr=1e-7),
        )
        datos = entrenador._normalizar(lote)
        antes = entrenador.perdida(datos)
        entrenador.epoca(1, datos)
        self.assertLess(entrenador.perdida(datos), antes)

    def test_la_perdida_baja_a_la_mitad(self):
        tuplas = tuplas_sinteticas(512.0, error_params=DvlErrorParams(**sin_ruido()))
        inicial = checkpoint_con_stats(stack_tuples(tuplas), **RED_PEQUENA)
        resultado = train(tuplas, TrainConfig(epochs=20, rmsprop_initial_cache=0.0), inicial)
        self.assertLess(resultado.history[-1].train_loss, 0.5 * resultado.history[0].train_loss)

    def test_receta_por_defecto_sobre_512_tuplas(self):
        tuplas = tuplas_sinteticas(512.0)
        self.assertEqual(len(tuplas), 512)
        lote = stack_tuples(tuplas)
        inicial = checkpoint_con_stats(lote)
        cfg = TrainConfig()
        inicio = Entrenador(inicial, cfg)
        perdida_inicial = inicio.perdida(inicio._normalizar(lote))

        resultado = train(tuplas, cfg, inicial)
        perdidas = [r.train_loss for r in resultado.history]
        self.assertEqual(len(perdidas), 50)
        self.assertLess(perdidas[-1], perdidas[0])
        self.assertLess(perdidas[-1], 0.5 * perdida_inicial)

    def test_divergencia(self):
        lote = stack_tuples(tuplas_sinteticas(10.0))
        checkpoint = checkpoint_con_stats(lote, **RED_PEQUENA)
        checkpoint.parameters['out.weight'][...] = 1e200
        entrenador = Entrenador(checkpoint, TrainConfig(epochs=1, batch_size=4))
        with np.errstate(all='ignore'), self.assertLogs('haces.entrenamiento', level='ERROR'):
            with self.assertRaises(TrainingDivergedError) as ctx:
                entrenador.entrenar(lote)
        self.assertEqual((ctx.exception.epoch, ctx.exception.batch), (1, 1))
        self.assertTrue(ctx.exception.parameter.endswith('.weight') or ctx.exception.parameter.endswith('.bias'))
