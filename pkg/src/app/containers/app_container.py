from dependency_injector import containers, providers

from src.app.config.config import Config
from src.app.config.settings import settings
from src.app.controllers.lsmc_controller import LsmcController
from src.app.controllers.valuation_controller import ValuationController
from src.app.repositories.result_repository import ResultRepository
from src.app.utils.logger import setup_logging


class AppContainer(containers.DeclarativeContainer):
    """
    Dependency Injection Container for the storage valuation CLI.

    The CLI resolves controllers through `Provide[...]` in the wired router
    module; the repository can be re-pointed per command (--out, --format).
    """

    # 1. Base Providers
    settings = providers.Object(settings)
    logger = providers.Callable(setup_logging, log_level=Config.LOG_LEVEL, log_dir=Config.LOG_DIR)

    # 2. Repositories
    result_repository = providers.Singleton(
        ResultRepository,
        output_dir=Config.OUTPUT_DIR,
    )

    # 3. Controllers
    valuation_controller = providers.Factory(
        ValuationController,
        repository=result_repository,
    )

    lsmc_controller = providers.Factory(
        LsmcController,
        repository=result_repository,
    )
