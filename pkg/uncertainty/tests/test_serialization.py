import json
import struct
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from autodiff.exceptions import SerializationError
from autodiff.rng import RngStream
from uncertainty.layers import ForwardMode
from uncertainty.methods import Ensemble
from uncertainty.networks import Task, UqMethod, build_network
from uncertainty.persistence import config_digest, load_models, read_manifest, save_models
from uncertainty.serialization import MAGIC, dumps_network, load_network, loads_network, save_network


class NetworkFileTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_header(self):
        payload = dumps_network(build_network(Task.REGRESSION, UqMethod.BASELINE, 1, (4,), 1, RngStream(1)))
        self.assertEqual(payload[:4], MAGIC)
        self.assertEqual(struct.unpack_from('<I', payload, 4)[0], 2)

    def test_every_method_survives_a_save(self):
        x = np.linspace(0.0, 15.0, 16)[:, None]
        for method in UqMethod:
            for task, input_dim, output_dim in ((Task.REGRESSION, 1, 1), (Task.CLASSIFICATION, 1, 8)):
                network = build_network(task, method, input_dim, (8, 8), output_dim, RngStream(2))
                path = save_network(network, self.root / f'{task.value}_{method.value}.uqd')
                restored = load_network(path, method=method)
                self.assertEqual(restored.task, task)
                self.assertEqual([layer.kind for layer in restored.trunk], [layer.kind for layer in network.trunk])
                for mode, rng in ((ForwardMode.DETERMINISTIC, None), (ForwardMode.STOCHASTIC, 5)):
                    first = network(x, mode, rng and RngStream(rng))
                    second = restored(x, mode, rng and RngStream(rng))
                    np.testing.assert_array_equal(first.mean.data, second.mean.data)
                    np.testing.assert_array_equal(first.variance.data, second.variance.data)

    def test_method_is_inferred_from_the_trunk(self):
        network = build_network(Task.REGRESSION, UqMethod.MC_DROPCONNECT, 1, (4,), 1, RngStream(3))
        self.assertIs(loads_network(dumps_network(network)).method, UqMethod.MC_DROPCONNECT)

    def test_dropout_probability_is_kept(self):
        network = build_network(Task.REGRESSION, UqMethod.MC_DROPOUT, 1, (4,), 1, RngStream(3), dropout_p=0.4)
        self.assertEqual(loads_network(dumps_network(network)).trunk[1].drop_probability, 0.4)

    def test_bad_magic(self):
        with self.assertRaises(SerializationError):
            loads_network(b'NOPE' + bytes(16))

    def test_truncated_payload(self):
        payload = dumps_network(build_network(Task.REGRESSION, UqMethod.BASELINE, 1, (4,), 1, RngStream(1)))
        with self.assertRaises(SerializationError):
            loads_network(payload[:-9])

    def test_missing_head(self):
        with self.assertRaises(SerializationError):
            loads_network(MAGIC + struct.pack('<I', 0))


class ModelDirectoryTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)
        self.settings = {'task': 'regression', 'method': 'ensemble', 'seed': 7}

    def test_ensemble_round_trip(self):
        members = [build_network(Task.REGRESSION, UqMethod.ENSEMBLE, 1, (4,), 1, RngStream(7 + i)) for i in range(3)]
        manifest = save_models(Ensemble(members, seeds=[7, 8, 9]), self.root, self.settings)
        self.assertEqual(manifest['member_count'], 3)
        self.assertEqual(sorted(p.name for p in self.root.glob('*.uqd')),
                         ['member_00.uqd', 'member_01.uqd', 'member_02.uqd'])

        model, loaded_manifest = load_models(self.root)
        self.assertIsInstance(model, Ensemble)
        self.assertEqual(model.seeds, [7, 8, 9])
        self.assertEqual(loaded_manifest['config_digest'], config_digest(self.settings))
        x = np.array([[0.5], [12.0]])
        np.testing.assert_array_equal(model.members[1](x).mean.data, members[1](x).mean.data)

    def test_single_network_directory(self):
        network = build_network(Task.REGRESSION, UqMethod.FLIPOUT, 1, (4,), 1, RngStream(1))
        save_models(network, self.root, dict(self.settings, method='flipout'))
        model, manifest = load_models(self.root)
        self.assertIs(model.method, UqMethod.FLIPOUT)
        self.assertEqual(manifest['seeds'], [7])

    def test_digest_ignores_key_order(self):
        self.assertEqual(config_digest({'a': 1, 'b': 2}), config_digest({'b': 2, 'a': 1}))
        self.assertNotEqual(config_digest({'a': 1}), config_digest({'a': 2}))

    def test_missing_or_corrupt_manifest(self):
        with self.assertRaises(SerializationError):
            read_manifest(self.root)
        (self.root / 'manifest.json').write_text('{not json')
        with self.assertRaises(SerializationError):
            read_manifest(self.root)

    def test_member_count_mismatch(self):
        network = build_network(Task.REGRESSION, UqMethod.BASELINE, 1, (4,), 1, RngStream(1))
        manifest = save_models(network, self.root, self.settings)
        manifest['member_count'] = 2
        (self.root / 'manifest.json').write_text(json.dumps(manifest))
        with self.assertRaises(SerializationError):
            load_models(self.root)
