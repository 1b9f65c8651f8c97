# config/settings.py

# Config file and environment
CONFIG_FILE_NAME = 'lonely_passenger_config.json'
CONFIG_PATH_ENV = 'LONELY_PASSENGER_CONFIG'
ENUM_LIMIT_ENV = 'LONELY_PASSENGER_ENUM_LIMIT'

# Enumeration
DEFAULT_ENUM_LIMIT = 1_000_000
HARD_ENUM_LIMIT = 10_000_000

# Sampling
UNIFORM_BITS = 53
DEFAULT_SEED = 0

# Log format shared by every entry point
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
