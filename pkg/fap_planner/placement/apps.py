from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class PlacementConfig(AppConfig):
    name = "fap_planner.placement"
    verbose_name = _("UAV placement")
    default_auto_field = "django.db.models.BigAutoField"
