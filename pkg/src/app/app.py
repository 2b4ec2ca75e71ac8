"""
╔══════════════════════════════════════════════════════════════════════════╗
║              Storage Valuation — Application Factory (Typer)            ║
╠══════════════════════════════════════════════════════════════════════════╣
║                                                                        ║
║  create_app() builds the whole command-line application:               ║
║                                                                        ║
║   1. load .env and configure logging (console on stderr + file)       ║
║   2. build the dependency-injection container                          ║
║   3. wire it into the router module so `Provide[...]` resolves         ║
║   4. return the Typer app, ready to be called                          ║
║                                                                        ║
║  Tests call create_app() once per CliRunner invocation; logging        ║
║  handlers are reset each time so nothing is duplicated.                ║
║                                                                        ║
╚══════════════════════════════════════════════════════════════════════════╝
"""

import logging
from typing import Optional

import typer
from dotenv import find_dotenv, load_dotenv

from src.app.config.config import Config
from src.app.utils.logger import setup_logging


# ─── Application Factory ───────────────────────────────────────────────

def create_app(log_level: Optional[str] = None, log_dir: Optional[str] = None) -> typer.Typer:
    """
    Application factory: creates and configures the CLI.

    Args:
        log_level: overrides LOG_LEVEL
        log_dir: overrides LOG_DIR; an empty string disables the log file
    """
    load_dotenv(find_dotenv())

    # ─── Dependency Injection Container ───────────────────────────
    from src.app.containers.app_container import AppContainer
    container = AppContainer()
    container.logger(
        log_level=log_level or Config.LOG_LEVEL,
        log_dir=Config.LOG_DIR if log_dir is None else (log_dir or None),
    )
    logger = logging.getLogger(__name__)

    # Wire the container to the router so @inject works
    container.wire(modules=["src.app.routers.cli_router"])

    from src.app.routers.cli_router import router
    router.container = container

    logger.debug(f"🏗️  Storage valuation CLI created (threads={Config.N_THREADS}, output={Config.OUTPUT_DIR})")
    return router
