"""
App configuration for haces
"""
from django.apps import AppConfig


class HacesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'haces'
    verbose_name = 'Regresión de haces DVL'
