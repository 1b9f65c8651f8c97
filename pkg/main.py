#!/usr/bin/python3
# Lonely Passenger Toolkit
# Exact tables, verification suites, couplings and Monte Carlo checks

import logging

from config.settings import LOG_FORMAT
from lonely_passenger.cli import main

# Setup logging (the CLI reconfigures the level from config or --log-level)
logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)

if __name__ == "__main__":
    main()
