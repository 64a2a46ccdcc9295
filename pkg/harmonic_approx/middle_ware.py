import functools
import logging
import time

logger = logging.getLogger(__name__)


def add_process_time(func):
    """Record the wall time of an experiment handler in its output's timings."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        output = func(*args, **kwargs)
        process_time = time.perf_counter() - start_time
        output.timings[func.__name__] = process_time
        logger.info("%s finished in %.2fs", func.__name__, process_time)
        return output

    return wrapper
