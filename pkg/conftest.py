"""Pytest wiring: load the Django settings the app test modules expect."""
import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "dephasing.settings")
django.setup()
