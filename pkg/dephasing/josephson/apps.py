from django.apps import AppConfig


class JosephsonConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'josephson'
    verbose_name = 'Classical two-mode Josephson dynamics'
