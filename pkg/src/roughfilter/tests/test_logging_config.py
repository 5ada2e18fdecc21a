import logging

import pytest

from roughfilter.logging_config import setup_logging


@pytest.fixture
def restore_root_logger():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield root
    for handler in list(root.handlers):
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    root.setLevel(level)


def _own_handlers(root):
    return [h for h in root.handlers if getattr(h, "_roughfilter", False)]


def test_console_only_by_default(restore_root_logger):
    setup_logging("DEBUG")
    assert restore_root_logger.level == logging.DEBUG
    handlers = _own_handlers(restore_root_logger)
    assert len(handlers) == 1
    assert isinstance(handlers[0], logging.StreamHandler)


def test_repeated_setup_does_not_stack_handlers(restore_root_logger):
    setup_logging("INFO")
    setup_logging("WARNING")
    assert len(_own_handlers(restore_root_logger)) == 1
    assert restore_root_logger.level == logging.WARNING


def test_rotating_file_in_log_dir(restore_root_logger, tmp_path):
    setup_logging("INFO", log_dir=tmp_path / "logs")
    logging.getLogger("roughfilter.test").info("written to file")
    for handler in _own_handlers(restore_root_logger):
        handler.flush()

    files = list((tmp_path / "logs").glob("roughfilter_*.log"))
    assert len(files) == 1
    assert "written to file" in files[0].read_text()


def test_leaves_other_library_loggers_alone(restore_root_logger):
    setup_logging("DEBUG")
    for name in ("matplotlib", "numexpr"):
        assert logging.getLogger(name).level == logging.NOTSET
