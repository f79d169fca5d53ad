"""
With these settings, tests run faster.
"""

from .base import *  # noqa: F403
from .base import env

# GENERAL
# ------------------------------------------------------------------------------
# https://docs.djangoproject.com/en/dev/ref/settings/#secret-key
SECRET_KEY = env(
    "DJANGO_SECRET_KEY",
    default="u5OfNV6oDmKss8JXt3TbhfkuaBJjsPF55XaruD6ydzZkPgLA8xNy3zsUHBp4jR2m",
)
# https://docs.djangoproject.com/en/dev/ref/settings/#test-runner
TEST_RUNNER = "django.test.runner.DiscoverRunner"

# Celery
# ------------------------------------------------------------------------------
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#task-eager-propagates
CELERY_TASK_EAGER_PROPAGATES = True

# FAP planner
# ------------------------------------------------------------------------------
FAP_DISPATCH = "inline"
FAP_ORACLE_CHUNK_SIZE = 4096

# LOGGING
# ------------------------------------------------------------------------------
# caplog listens on the root logger.
LOGGING["loggers"]["fap_planner"] = {"level": "INFO", "propagate": True}  # noqa: F405
