import logging
from pathlib import Path

from django.conf import settings
from dotenv import dotenv_values

from autodiff.exceptions import ConfigurationError
from experiments.forms import TrainConfigForm

logger = logging.getLogger(__name__)


def default_seed(explicit=None):
    """An explicit seed wins, then ``UQD_SEED``, then 0."""
    if explicit is not None:
        return explicit
    return settings.UQD_SEED if settings.UQD_SEED is not None else 0


def parse_train_config(values, source='<config>', seed_override=True):
    data = {key.strip().lower(): '' if value is None else str(value).strip() for key, value in values.items()}
    unknown = sorted(set(data) - set(TrainConfigForm.base_fields))
    if unknown:
        raise ConfigurationError(f"{source}: unknown keys {', '.join(unknown)}")

    form = TrainConfigForm(data)
    if not form.is_valid():
        raise ConfigurationError(f"{source}: {form.errors.as_text()}")
    override = settings.UQD_SEED if seed_override else None
    config = form.to_config(seed_override=override)
    if override is not None:
        logger.info(f"UQD_SEED={settings.UQD_SEED} overrides the seed in {source}")
    return config


def load_train_config(path):
    """Read a flat ``KEY=VALUE`` file into a validated TrainConfig."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file {path} does not exist")
    return parse_train_config(dotenv_values(path), str(path))


def write_train_config(config, path):
    lines = [f"{key.upper()}={'' if value is None else value}" for key, value in config.as_mapping().items()]
    Path(path).write_text('\n'.join(lines) + '\n')
    return path


def config_from_manifest(manifest):
    """TrainConfig a saved model was trained with; ``UQD_SEED`` does not rewrite it."""
    return parse_train_config(manifest.get('config', {}), source='manifest', seed_override=False)
