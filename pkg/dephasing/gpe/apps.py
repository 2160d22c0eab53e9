from django.apps import AppConfig


class GpeConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'gpe'
    verbose_name = 'Coupled Gross-Pitaevskii solver'
