"""
Unit tests for logging, metrics and tracing helpers.
"""
import io
import logging

import pytest
from opentelemetry import trace

from contestnet import logger as logger_module
from contestnet import tracing
from contestnet.metrics import REGISTRY, timed_solve, write_metrics

pytestmark = pytest.mark.unit


class TestLogging:
    """Tests for structured logging setup."""

    def test_level_defaults_by_environment(self):
        logger_module.configure_logging(env="production")
        assert logging.getLogger().level == logging.INFO
        logger_module.configure_logging(env="development")
        assert logging.getLogger().level == logging.DEBUG

    def test_explicit_level(self):
        logger_module.configure_logging(level="error")
        assert logging.getLogger().level == logging.ERROR

    def test_log_file(self, tmp_path):
        logger_module.configure_logging(log_to_file=True, log_dir=str(tmp_path / "logs"))
        assert (tmp_path / "logs" / "contestnet.log").exists()
        logger_module.configure_logging()

    def test_library_defaults_drop_debug(self):
        """Loggers created before configuration follow the library defaults: INFO and up."""
        stream = io.StringIO()
        log = logger_module.get_logger("contestnet.test")
        try:
            logger_module.use_library_defaults(stream)
            log.debug("equilibrium_solved", residual=0.0)
            log.info("sweep_finished", points=3)
        finally:
            logger_module.use_library_defaults()
        output = stream.getvalue()
        assert "equilibrium_solved" not in output
        assert "sweep_finished" in output
        assert "service" in output

    def test_run_id(self):
        logger_module.set_run_id("run-1")
        assert logger_module.get_run_id() == "run-1"
        assert logger_module.get_logger("contestnet.test") is not None


class TestMetrics:
    """Tests for solve counters."""

    def _count(self, method, status):
        value = REGISTRY.get_sample_value("contestnet_solves_total", {"method": method, "status": status})
        return value or 0.0

    def test_successful_solve_is_counted(self):
        before = self._count("unit", "ok")
        with timed_solve("unit"):
            pass
        assert self._count("unit", "ok") == before + 1

    def test_failed_solve_is_counted(self):
        before = self._count("unit", "error")
        with pytest.raises(RuntimeError):
            with timed_solve("unit"):
                raise RuntimeError("boom")
        assert self._count("unit", "error") == before + 1

    def test_write_metrics(self, tmp_path):
        target = tmp_path / "metrics.prom"
        write_metrics(str(target))
        assert "contestnet_solve_seconds" in target.read_text()


class TestTracing:
    """Tests for tracer setup."""

    def test_no_op_until_initialized(self):
        tracing.shutdown()
        assert isinstance(tracing.get_tracer(), trace.NoOpTracer)

    def test_init_and_shutdown(self):
        tracing.init_tracing(environment="test")
        try:
            assert not isinstance(tracing.get_tracer(), trace.NoOpTracer)
        finally:
            tracing.shutdown()
        assert isinstance(tracing.get_tracer(), trace.NoOpTracer)
