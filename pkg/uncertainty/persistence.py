import hashlib
import json
import logging
from pathlib import Path

from autodiff.exceptions import SerializationError
from uncertainty.methods import Ensemble
from uncertainty.networks import UqMethod
from uncertainty.serialization import load_network, save_network

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def config_digest(config_mapping):
    canonical = json.dumps(config_mapping, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def save_models(model, directory, config_mapping, seeds=None):
    """
    Write one ``member_XX.uqd`` file per network plus ``manifest.json``.

    A single network is stored as a one-member directory.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    members = model.members if isinstance(model, Ensemble) else [model]
    if seeds is None:
        seeds = model.seeds if isinstance(model, Ensemble) else [config_mapping.get('seed')]

    files = []
    for index, member in enumerate(members):
        name = f'member_{index:02d}.uqd'
        save_network(member, directory / name)
        files.append(name)

    manifest = {
        'format': 'UQD1',
        'task': members[0].task.value,
        'method': model.method.value,
        'member_count': len(members),
        'members': files,
        'seeds': list(seeds),
        'config_digest': config_digest(config_mapping),
        'config': config_mapping,
    }
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, default=str))
    logger.info(f"Saved {len(members)} {model.method.value} network(s) to {directory}")
    return manifest


def read_manifest(directory):
    path = Path(directory) / MANIFEST_NAME
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise SerializationError(f"No {MANIFEST_NAME} in {directory}") from None
    except json.JSONDecodeError as exc:
        raise SerializationError(f"Corrupt manifest {path}: {exc}") from exc


def load_models(directory):
    """Return ``(model, manifest)``; ``model`` is an Ensemble for ensemble directories."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    method = UqMethod(manifest['method'])
    if len(manifest['members']) != manifest['member_count']:
        raise SerializationError(f"Manifest in {directory} lists the wrong number of members")

    if method is UqMethod.ENSEMBLE:
        members = [load_network(directory / name, method=UqMethod.ENSEMBLE) for name in manifest['members']]
        return Ensemble(members, seeds=manifest['seeds']), manifest
    return load_network(directory / manifest['members'][0], method=method), manifest
