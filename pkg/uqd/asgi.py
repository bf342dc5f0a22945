"""
ASGI config for the uqd project; serves the run registry admin.

    uvicorn uqd.asgi:application --host 0.0.0.0 --port 8011
"""

import os

from django.core.asgi import get_asgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'uqd.settings')

application = get_asgi_application()
