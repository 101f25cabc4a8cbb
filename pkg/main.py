"""
Main entry point for the multi-step barrier option pricer.

Usage:
    python main.py price --scenario scenarios/up_type1.toml
    python main.py reproduce 4b --out results/4b.csv
"""

import sys

from config import settings
from utils.logger import setup_logger, get_logger
from cli import run

# Setup logging
setup_logger(settings.log_level)
logger = get_logger(__name__)


def main() -> int:
    """Main entry point."""
    try:
        return run(sys.argv[1:])
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
