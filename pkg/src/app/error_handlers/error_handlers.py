import logging
from contextlib import contextmanager

import typer
from pydantic import ValidationError

from src.app.exceptions.custom_exceptions import (
    EXIT_CONFIG_ERROR,
    EXIT_NUMERIC_FAILURE,
    StorageValuationException,
)

logger = logging.getLogger(__name__)


def _format_details(details) -> list:
    if details is None:
        return []
    if isinstance(details, list):
        lines = []
        for item in details:
            if isinstance(item, dict) and "field" in item:
                lines.append(f"  - {item['field']}: {item.get('message', '')}")
            else:
                lines.append(f"  - {item}")
        return lines
    if isinstance(details, dict):
        return [f"  - {key}: {value}" for key, value in details.items()]
    return [f"  {details}"]


@contextmanager
def cli_error_boundary():
    """
    Map every failure of a CLI command to a message on stderr and an exit code.

    - StorageValuationException and subclasses → their own exit_code
    - pydantic ValidationError                 → 2, one line per field
    - anything else                            → 3, with the traceback logged
    """
    try:
        yield
    except typer.Exit:
        raise
    except StorageValuationException as exc:
        logger.warning(f"⚠️ {type(exc).__name__}: {exc.message} | details: {exc.details}")
        typer.echo(f"Error: {exc.message}", err=True)
        for line in _format_details(exc.details):
            typer.echo(line, err=True)
        raise typer.Exit(code=exc.exit_code)
    except ValidationError as exc:
        logger.warning(f"⚠️ Validation error: {exc.errors()}")
        typer.echo("Error: validation failed", err=True)
        for error in exc.errors():
            field = ".".join(str(loc) for loc in error.get("loc", ()))
            typer.echo(f"  - {field}: {error.get('msg', '')}", err=True)
        raise typer.Exit(code=EXIT_CONFIG_ERROR)
    except Exception as exc:
        logger.error(f"❌ Unhandled exception: {exc}", exc_info=True)
        typer.echo(f"Error: unexpected failure: {exc}", err=True)
        raise typer.Exit(code=EXIT_NUMERIC_FAILURE)
