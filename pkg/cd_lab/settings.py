"""
Django settings for the cd_lab project.

Generated by 'django-admin startproject' using Django 5.2.7 and trimmed to
what a command-line laboratory needs: no URLs, templates or static files.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-cd-lab-local-only')

DEBUG = os.getenv('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'runs',
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Laboratory configuration
CD_DYN_THREADS = int(os.getenv('CD_DYN_THREADS', os.cpu_count() or 1))
CD_LAB_OUTPUT_DIR = Path(os.getenv('CD_LAB_OUTPUT_DIR', BASE_DIR / 'output'))
CD_LAB_DEFAULT_TOL = float(os.getenv('CD_LAB_DEFAULT_TOL', '1e-10'))
CD_LAB_GUARD_FLOOR = float(os.getenv('CD_LAB_GUARD_FLOOR', '1e-10'))
CD_LAB_SWEEP_BUDGET = int(os.getenv('CD_LAB_SWEEP_BUDGET', '400'))
CD_LAB_FD_STEP = float(os.getenv('CD_LAB_FD_STEP', '1e-6'))


# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'INFO',
    },
    'loggers': {
        'services': {
            'handlers': ['console'],
            'level': 'DEBUG' if DEBUG else 'INFO',
            'propagate': False,
        },
    },
}
