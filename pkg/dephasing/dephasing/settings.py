"""
Django settings for the dephasing project.

The project has no web surface and no database: Django provides the
settings layer, logging configuration, management commands and the test
runner for the simulation apps.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    'DJANGO_SECRET_KEY',
    'django-insecure-dephasing-local-only-3v5#q!k0z2m8w@x1',
)

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'core',
    'josephson',
    'hydro',
    'gpe',
    'moments',
    'perturbation',
    'oracle',
    'runner',
]

# No models: runs never touch a database.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging

LOG_LEVEL = os.environ.get('DEPHASING_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        }
        for app in (
            'core', 'josephson', 'hydro', 'gpe', 'moments',
            'perturbation', 'oracle', 'runner',
        )
    },
}


# Simulation defaults. Every entry can be overridden per run through the
# run configuration; these are the values used when a key is absent.

DEPHASING = {
    # radial grid
    'GRID_POINTS': 257,
    # graded grid for integrands with a healing-length boundary layer
    'BOUNDARY_GRID_POINTS': 2049,
    'R_MAX_FACTOR': 2.0,
    # fixed-step integrators: steps per Josephson period pi/lambda
    'STEPS_PER_PERIOD': 400,
    # mean-field real-time step
    'GPE_TIME_STEP': 1e-3,
    # imaginary-time ground state
    'GROUND_STATE_TOLERANCE': 1e-12,
    'GROUND_STATE_MAX_ITERATIONS': 200_000,
    # real-time guard: allowed relative norm drift per 1000 steps
    'NORM_DRIFT_PER_1000': 1e-6,
    # per-node 8x8 solves
    'MAX_CONDITION_NUMBER': 1e12,
    'MAX_EXCLUDED_FRACTION': 0.01,
    'PERTURBATIVE_V_WARNING': 0.3,
    # plots
    'PLOT_SIZE_INCHES': (6.4, 4.0),
    'SVG_HASH_SALT': 'bec-dephasing',
    # sweeps
    'SWEEP_WORKERS': 4,
}
