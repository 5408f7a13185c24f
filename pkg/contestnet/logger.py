"""
Structured logging for contestnet.
JSON lines in production, console rendering in development; always on stderr.
"""
import logging
import os
import sys
import structlog
from typing import Optional, TextIO
from contextvars import ContextVar

# Context variable for the current CLI run (thread-safe)
run_id_var: ContextVar[Optional[str]] = ContextVar("run_id", default=None)


def configure_logging(
    env: str = "development",
    log_to_file: bool = False,
    log_dir: str = "logs",
    level: Optional[str] = None,
):
    """
    Configure structured logging.

    Args:
        env: Environment name (development, production, etc.)
        log_to_file: Whether to also write logs to a file (development only)
        log_dir: Directory for log files (if log_to_file is True)
        level: Explicit level name; defaults to INFO in production and DEBUG otherwise
    """
    is_production = env.lower() in ("production", "prod")

    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    if is_production:
        processors.append(structlog.processors.JSONRenderer())
        default_level = "INFO"
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=False))
        default_level = "DEBUG"
    log_level = (level or default_level).upper()

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    # stdout carries results, so log records go to stderr
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, log_level, logging.WARNING),
        force=True,
    )

    if not is_production and log_to_file:
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, "contestnet.log")
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter("%(message)s"))
        logging.getLogger().addHandler(file_handler)


def use_library_defaults(stream: Optional[TextIO] = None):
    """
    Logging for library use, before or without configure_logging.

    Records below INFO are dropped and the rest are rendered on stderr (or ``stream``).
    """
    structlog.reset_defaults()
    structlog.configure(
        wrapper_class=structlog.make_filtering_bound_logger(logging.INFO),
        logger_factory=structlog.PrintLoggerFactory(stream or sys.stderr),
    )


def get_logger(name: str = "contestnet"):
    """
    Get a structured logger instance.

    The logger resolves the active configuration on first use, so module-level loggers
    follow a later configure_logging call.

    Args:
        name: Logger name, usually the module's __name__

    Returns:
        Lazy logger carrying the service name; the run id comes from the context
    """
    return structlog.get_logger(name, service="contestnet")


def set_run_id(run_id: str):
    """Set the run id attached to subsequent log records."""
    run_id_var.set(run_id)
    structlog.contextvars.bind_contextvars(run_id=run_id)


def get_run_id() -> Optional[str]:
    """Get the current run id."""
    return run_id_var.get()


if not structlog.is_configured():
    use_library_defaults()
