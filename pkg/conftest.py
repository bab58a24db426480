import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'proyecto_dvl.settings')
django.setup()
