import time

from commext.logging import WandbConfig, capture_time, format_duration, is_wandb_available, log_metrics


def test_log_metrics_without_a_run_is_a_noop():
    assert not is_wandb_available()
    log_metrics({"search/objective": 1.0})


def test_disabled_wandb_does_not_start_a_run():
    config = WandbConfig()
    assert config.init({"q": 2}) is None
    config.finish()


def test_capture_time():
    with capture_time() as elapsed:
        time.sleep(0.01)
    assert elapsed() >= 0.01
    frozen = elapsed()
    time.sleep(0.01)
    assert elapsed() == frozen


def test_format_duration():
    assert format_duration(90) == "1 minute and 30 seconds"
