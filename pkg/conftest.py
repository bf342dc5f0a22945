"""Pytest wiring for the Django test suite (mirrors ``manage.py test`` setup)."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'uqd.settings')
django.setup()

collect_ignore = ['examples']


def pytest_sessionstart(session):
    from django.test.utils import setup_databases, setup_test_environment

    setup_test_environment()
    session.config._uqd_old_dbs = setup_databases(verbosity=0, interactive=False)


def pytest_sessionfinish(session, exitstatus):
    from django.test.utils import teardown_databases, teardown_test_environment

    old = getattr(session.config, '_uqd_old_dbs', None)
    if old is not None:
        teardown_databases(old, verbosity=0)
        teardown_test_environment()
