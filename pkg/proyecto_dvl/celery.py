import os
from celery import Celery

# Establecer el módulo de configuración Django por defecto
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'proyecto_dvl.settings')

app = Celery('regresion_haces')

# Usar string aquí significa que el worker no necesita serializar
# el objeto de configuración a procesos hijos.
app.config_from_object('django.conf:settings', namespace='CELERY')

# Cargar módulos de tareas desde todas las apps registradas
app.autodiscover_tasks()
