import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-change-this-in-production-12345')
DEBUG = os.getenv('DEBUG', 'False') == 'True'
ALLOWED_HOSTS = ['localhost', '127.0.0.1']

INSTALLED_APPS = [
    'haces',
]

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

LANGUAGE_CODE = 'es'
TIME_ZONE = 'Europe/Madrid'
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Logging
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
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
        'haces': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
}

# Celery
CELERY_BROKER_URL = os.getenv('CELERY_BROKER_URL', 'redis://localhost:6379/0')
CELERY_RESULT_BACKEND = os.getenv('CELERY_RESULT_BACKEND', 'redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE

# Valores por defecto de las ejecuciones. Un JSON pasado con --config se
# mezcla encima y los flags de la línea de comandos ganan a ambos.
LIBEAMSNET = {
    'output_dir': os.getenv('LIBEAMSNET_OUTPUT_DIR', str(BASE_DIR / 'salidas')),
    'threads': int(os.getenv('LIBEAMSNET_THREADS', '1')),
    'deterministic': True,
    'missing_beams': [2, 4],
    'geometry': {
        'pitch_deg': 20.0,
        'headings_rad': None,
    },
    'error_model': {
        'scale': 0.007,
        'bias_mps': 0.0001,
        'noise_std_mps': 0.042,
        'seed': 1,
    },
    'simulation': {
        'duration_s': 3600.0,
        'seed': 0,
        'imu_rate_hz': 100.0,
        'dvl_rate_hz': 1.0,
        'mean_speed_mps': 1.2,
        'surge_amplitude_mps': 0.8,
        'sway_amplitude_mps': 0.3,
        'heave_amplitude_mps': 0.03,
        'n_components': 3,
        'min_period_s': 20.0,
        'max_period_s': 300.0,
        'pitch_trim_deg_per_mps': 6.0,
        'roll_trim_deg_per_mps': 6.0,
        'attitude_amplitude_deg': 0.1,
        'yaw_rate_amplitude_dps': 1.0,
        'accel_noise_std': 0.01,
        'gyro_noise_std': 0.001,
    },
    'dataset': {
        'imu_path': None,
        'dvl_path': None,
        'truth_path': None,
        'eval_imu_path': None,
        'eval_dvl_path': None,
        'eval_truth_path': None,
        'train_frac': 0.8,
        'window_samples': 100,
        'apply_error_model': False,
    },
    'network': {
        'conv_filters': 6,
        'kernel_size': 2,
        'hidden_sizes': [512, 64],
        'dropout': 0.2,
        'activation': 'relu',
        'conv_activation': 'linear',
        'seed': 2,
    },
    'training': {
        'epochs': 50,
        'batch_size': 32,
        'lr': 0.01,
        'rmsprop_decay': 0.99,
        'rmsprop_eps': 1e-8,
        'rmsprop_initial_cache': 1.0,
        'shuffle_seed': 3,
        'loss': 'mse',
    },
    'evaluation': {
        'soft_rmse_target_mps': 0.10,
        'checkpoint': 'best',
    },
    'checkpoint_dtype': '<f4',
}
