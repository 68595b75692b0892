#!/usr/bin/env python3
"""
Super Star Product Engine - Main Entry Point

Exact computer algebra for star products with separation of variables on
C^(m|d): build products from a potential, check their identities and write
reports.
"""
import sys
import logging
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from cli.commands import EXIT_ENGINE_ERROR, main
from exceptions import ConfigurationError
from utils.config_loader import load_settings

if __name__ == "__main__":
    try:
        settings = load_settings()
    except ConfigurationError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        sys.exit(EXIT_ENGINE_ERROR)

    # Setup logging
    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stderr),
            logging.FileHandler('superstar.log')
        ]
    )

    logger = logging.getLogger(__name__)
    logger.info("Starting Super Star Product Engine")

    try:
        sys.exit(main(sys.argv[1:], settings))
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(0)
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        sys.exit(1)
