"""
Config facade: flat read access to the nested settings in settings.py.

Instead of `settings.compute.N_THREADS` everywhere, write `Config.N_THREADS`.
"""

from src.app.config.settings import settings


class Config:
    """
    Process-wide configuration loaded from validated settings.
    """

    # ── General ──────────────────────────────────────────────────
    LOG_LEVEL = settings.general.LOG_LEVEL
    LOG_DIR = settings.general.LOG_DIR
    OUTPUT_DIR = settings.general.OUTPUT_DIR
    CONFIG_DIR = settings.general.CONFIG_DIR

    # ── Compute ──────────────────────────────────────────────────
    N_THREADS = settings.compute.N_THREADS
    DEFAULT_SEED = settings.compute.DEFAULT_SEED
