from django.apps import AppConfig


class HydroConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'hydro'
    verbose_name = 'Thomas-Fermi hydrodynamic solutions'
