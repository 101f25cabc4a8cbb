import io
import logging

from utils import get_logger, setup_logger, timed


def test_records_go_to_the_given_stream():
    stream = io.StringIO()
    setup_logger("debug", stream=stream)
    get_logger("pricing.test").debug("hello")
    line = stream.getvalue().strip()
    assert line.endswith("| DEBUG    | pricing.test | hello")


def test_unknown_level_falls_back_to_info():
    setup_logger("chatty", stream=io.StringIO())
    assert logging.getLogger().level == logging.INFO


def test_timed_logs_elapsed_time(caplog):
    logger = get_logger("pricing.timing")
    with caplog.at_level(logging.INFO, logger="pricing.timing"):
        with timed(logger, "Table 4b"):
            pass
    assert any(r.getMessage().startswith("Table 4b took ") for r in caplog.records)


def test_default_logger_name():
    assert get_logger().name == "multistep_barrier"
